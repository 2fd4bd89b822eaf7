use std::collections::HashMap;

use crate::data::{Dataset, ProtectedDomains};
use crate::error::{Error, Result};

/// Per-row weights that make subgroup and label statistically independent
/// in the weighted training set: a row in subgroup `s` with label `y` gets
/// `N_s * N_y / (N * N_sy)`.
pub fn reweighting_weights(train: &Dataset, domains: &ProtectedDomains) -> Result<Vec<f64>> {
    if train.is_empty() {
        return Err(Error::Usage("cannot reweight an empty dataset".into()));
    }
    let tuples: Vec<Vec<String>> = train
        .rows()
        .iter()
        .map(|r| r.protected_tuple(domains.indices()))
        .collect();
    if let Some(t) = tuples.iter().find(|t| !domains.contains(t)) {
        return Err(Error::Usage(format!(
            "row subgroup {t:?} is not in the protected domains"
        )));
    }
    let mut by_group: HashMap<&[String], usize> = HashMap::new();
    let mut by_cell: HashMap<(&[String], u8), usize> = HashMap::new();
    let mut by_label = [0usize; 2];
    for (t, &y) in tuples.iter().zip(train.labels()) {
        *by_group.entry(t).or_default() += 1;
        *by_cell.entry((t, y)).or_default() += 1;
        by_label[y as usize] += 1;
    }
    let n = train.len() as f64;
    Ok(tuples
        .iter()
        .zip(train.labels())
        .map(|(t, &y)| {
            let ns = by_group[t.as_slice()] as f64;
            let ny = by_label[y as usize] as f64;
            let nsy = by_cell[&(t.as_slice(), y)] as f64;
            ns * ny / (n * nsy)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::data::{protected_domains, Attribute, Instance, Schema};

    fn build(groups: &[(&str, u8)]) -> Dataset {
        let schema = Schema::new(vec![Attribute::categorical("g")], vec!["g".into()], "y", "1").unwrap();
        let rows = groups.iter().map(|(g, _)| Instance::new(vec![(*g).into()])).collect();
        let labels = groups.iter().map(|(_, y)| *y).collect();
        Dataset::new(Arc::new(schema), rows, labels).unwrap()
    }

    #[test]
    fn hand_counted_cells() {
        let d = build(&[("A", 1), ("A", 1), ("B", 0), ("B", 0)]);
        let w = reweighting_weights(&d, &protected_domains(&d).unwrap()).unwrap();
        assert_eq!(w, vec![0.5; 4]);
    }

    #[test]
    fn independent_cells_get_unit_weight() {
        let d = build(&[("A", 1), ("A", 0), ("B", 1), ("B", 0), ("A", 1), ("A", 0)]);
        let w = reweighting_weights(&d, &protected_domains(&d).unwrap()).unwrap();
        assert!(w.iter().all(|&v| (v - 1.0).abs() < 1e-15), "{w:?}");
    }

    #[test]
    fn doubling_rows_keeps_weights() {
        let base = [("A", 1), ("A", 0), ("A", 1), ("B", 0), ("B", 0), ("B", 1), ("C", 1)];
        let d = build(&base);
        let twice: Vec<_> = base.iter().chain(base.iter()).copied().collect();
        let d2 = build(&twice);
        let w = reweighting_weights(&d, &protected_domains(&d).unwrap()).unwrap();
        let w2 = reweighting_weights(&d2, &protected_domains(&d2).unwrap()).unwrap();
        assert_eq!(&w2[..w.len()], &w[..]);
    }

    #[test]
    fn weighted_cell_mass_is_independent() {
        let base = [("A", 1), ("A", 0), ("A", 1), ("B", 0), ("B", 0), ("B", 1), ("C", 1), ("C", 0)];
        let d = build(&base);
        let w = reweighting_weights(&d, &protected_domains(&d).unwrap()).unwrap();
        for g in ["A", "B", "C"] {
            for y in [0u8, 1] {
                let mass: f64 = base
                    .iter()
                    .zip(&w)
                    .filter(|((bg, by), _)| *bg == g && *by == y)
                    .map(|(_, w)| w)
                    .sum();
                let ns = base.iter().filter(|(bg, _)| *bg == g).count() as f64;
                let ny = base.iter().filter(|(_, by)| *by == y).count() as f64;
                assert!((mass - ns * ny / base.len() as f64).abs() < 1e-12);
            }
        }
    }
}
