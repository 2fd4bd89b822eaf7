//! Seeded synthetic datasets with planted subgroup bias.
//!
//! `german_like` mirrors the shape of the German credit data (1,000 rows,
//! protected `sex` and binned `age`, favorable label `good`). `compas_like`
//! has three binary protected attributes (`sex`, `race`, `age`) and the
//! favorable label `no` (no recidivism). In both, the label logit gets a
//! bonus for the privileged value of every protected attribute on top of a
//! signal carried by the non-protected features.

use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::data::{write_dataset_csv, Attribute, Dataset, Instance, Schema, Value};
use crate::error::{Error, Result};

pub struct Fixture {
    pub dataset: Dataset,
    pub unfavorable_value: String,
}

impl Fixture {
    pub fn schema(&self) -> &Schema {
        self.dataset.schema()
    }

    /// Write `<stem>.csv` and `<stem>.schema.toml` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let csv_path = dir.join(format!("{stem}.csv"));
        let file = std::fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
        write_dataset_csv(&self.dataset, &self.unfavorable_value, std::io::BufWriter::new(file))?;
        let schema_path = dir.join(format!("{stem}.schema.toml"));
        std::fs::write(&schema_path, self.schema().to_toml_string())
            .map_err(|e| Error::io(&schema_path, e))
    }
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn pick<'a, R: Rng>(rng: &mut R, options: &[(&'a str, f64)]) -> &'a str {
    let mut u: f64 = rng.random();
    for (v, p) in options {
        if u < *p {
            return v;
        }
        u -= p;
    }
    options.last().expect("non-empty").0
}

pub fn german_like(n: usize, seed: u64) -> Result<Fixture> {
    let schema = Schema::new(
        vec![
            Attribute::categorical("sex"),
            Attribute::categorical("age"),
            Attribute::numeric("duration"),
            Attribute::numeric("credit_amount"),
            Attribute::numeric("savings"),
            Attribute::numeric("employment_years"),
            Attribute::categorical("purpose"),
            Attribute::categorical("housing"),
        ],
        vec!["sex".into(), "age".into()],
        "credit",
        "good",
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Normal<f64> = Normal::new(0.0, 1.0).expect("valid normal");
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let male = rng.random_bool(0.69);
        let old = rng.random_bool(0.81);
        let duration = (21.0 + 12.0 * noise.sample(&mut rng)).clamp(4.0, 72.0).round();
        let amount = (3300.0 * (0.6 * noise.sample(&mut rng)).exp() * if male { 1.1 } else { 1.0 })
            .clamp(250.0, 18_500.0)
            .round();
        let savings = (5.0 + 2.5 * noise.sample(&mut rng)).clamp(0.0, 10.0);
        let employment =
            ((if old { 7.0 } else { 3.0 }) + 3.0 * noise.sample(&mut rng)).clamp(0.0, 25.0).round();
        let purpose = pick(
            &mut rng,
            &[("car", 0.34), ("furniture", 0.28), ("business", 0.1), ("education", 0.06), ("other", 0.22)],
        );
        let housing = pick(&mut rng, &[("own", 0.71), ("rent", 0.18), ("free", 0.11)]);

        let mut z = 0.55 + 0.55 * (savings - 5.0) - 0.06 * (duration - 21.0)
            + 0.08 * (employment - 5.0)
            - 0.00015 * (amount - 3300.0);
        z += match purpose {
            "car" => 0.2,
            "business" => -0.3,
            "education" => -0.4,
            _ => 0.0,
        };
        z += match housing {
            "own" => 0.3,
            "rent" => -0.2,
            _ => -0.3,
        };
        if male {
            z += 0.8;
        }
        if old {
            z += 0.8;
        }
        let good = rng.random_bool(logistic(z));

        rows.push(Instance::new(vec![
            Value::from(if male { "male" } else { "female" }),
            Value::from(if old { "old" } else { "young" }),
            duration.into(),
            amount.into(),
            ((savings * 100.0).round() / 100.0).into(),
            employment.into(),
            purpose.into(),
            housing.into(),
        ]));
        labels.push(u8::from(good));
    }
    Ok(Fixture {
        dataset: Dataset::new(Arc::new(schema), rows, labels)?,
        unfavorable_value: "bad".into(),
    })
}

pub fn compas_like(n: usize, seed: u64) -> Result<Fixture> {
    let schema = Schema::new(
        vec![
            Attribute::categorical("sex"),
            Attribute::categorical("race"),
            Attribute::categorical("age"),
            Attribute::numeric("priors_count"),
            Attribute::numeric("juv_count"),
            Attribute::numeric("days_in_jail"),
            Attribute::categorical("charge_degree"),
        ],
        vec!["sex".into(), "race".into(), "age".into()],
        "two_year_recid",
        "no",
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Normal<f64> = Normal::new(0.0, 1.0).expect("valid normal");
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let female = rng.random_bool(0.2);
        let white = rng.random_bool(0.4);
        let old = rng.random_bool(0.55);
        let priors: f64 = Poisson::new(if old { 3.5 } else { 2.0 }).expect("valid rate").sample(&mut rng);
        let juv: f64 = Poisson::new(if old { 0.1 } else { 0.4 }).expect("valid rate").sample(&mut rng);
        let jail = (8.0 * (1.2 * noise.sample(&mut rng)).exp()).clamp(0.0, 400.0).round();
        let felony = rng.random_bool(0.65);

        let mut z = 0.9 - 0.45 * (priors - 2.5) - 0.6 * juv - 0.004 * (jail - 10.0)
            - if felony { 0.35 } else { 0.0 };
        if female {
            z += 0.7;
        }
        if white {
            z += 0.7;
        }
        if old {
            z += 0.7;
        }
        let no_recid = rng.random_bool(logistic(z));

        rows.push(Instance::new(vec![
            Value::from(if female { "female" } else { "male" }),
            Value::from(if white { "white" } else { "nonwhite" }),
            Value::from(if old { "old" } else { "young" }),
            priors.into(),
            juv.into(),
            jail.into(),
            Value::from(if felony { "F" } else { "M" }),
        ]));
        labels.push(u8::from(no_recid));
    }
    Ok(Fixture {
        dataset: Dataset::new(Arc::new(schema), rows, labels)?,
        unfavorable_value: "yes".into(),
    })
}
