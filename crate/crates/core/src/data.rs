//! Dataset ingestion, attribute schema, splitting, protected-attribute
//! domains and subgroup enumeration.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Categorical,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub kind: AttributeKind,
}

impl Attribute {
    pub fn categorical(name: impl Into<String>) -> Self {
        Attribute {
            name: name.into(),
            kind: AttributeKind::Categorical,
        }
    }

    pub fn numeric(name: impl Into<String>) -> Self {
        Attribute {
            name: name.into(),
            kind: AttributeKind::Numeric,
        }
    }
}

/// Column layout of a tabular dataset.
///
/// The schema file is TOML:
///
/// ```toml
/// label_column = "credit"
/// favorable_value = "good"
/// protected = ["sex", "age"]
///
/// [[attributes]]
/// name = "sex"
/// kind = "categorical"
///
/// [[attributes]]
/// name = "duration"
/// kind = "numeric"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchema", into = "RawSchema")]
pub struct Schema {
    attributes: Vec<Attribute>,
    protected: Vec<String>,
    label_column: String,
    favorable_value: String,
    protected_indices: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct RawSchema {
    label_column: String,
    favorable_value: String,
    protected: Vec<String>,
    attributes: Vec<Attribute>,
}

impl TryFrom<RawSchema> for Schema {
    type Error = Error;

    fn try_from(raw: RawSchema) -> Result<Self> {
        Schema::new(raw.attributes, raw.protected, raw.label_column, raw.favorable_value)
    }
}

impl From<Schema> for RawSchema {
    fn from(s: Schema) -> Self {
        RawSchema {
            label_column: s.label_column,
            favorable_value: s.favorable_value,
            protected: s.protected,
            attributes: s.attributes,
        }
    }
}

impl Schema {
    pub fn new(
        attributes: Vec<Attribute>,
        protected: Vec<String>,
        label_column: impl Into<String>,
        favorable_value: impl Into<String>,
    ) -> Result<Self> {
        let label_column = label_column.into();
        if attributes.is_empty() {
            return Err(Error::Schema("no attributes declared".into()));
        }
        let mut seen = BTreeSet::new();
        for a in &attributes {
            if !seen.insert(a.name.as_str()) {
                return Err(Error::Schema(format!("duplicate attribute `{}`", a.name)));
            }
        }
        if seen.contains(label_column.as_str()) {
            return Err(Error::Schema(format!(
                "label column `{label_column}` is also declared as an attribute"
            )));
        }
        if protected.is_empty() {
            return Err(Error::Schema("at least one protected attribute is required".into()));
        }
        let mut protected_indices = Vec::with_capacity(protected.len());
        for p in &protected {
            let idx = attributes
                .iter()
                .position(|a| &a.name == p)
                .ok_or_else(|| Error::Schema(format!("protected attribute `{p}` is not declared")))?;
            if attributes[idx].kind != AttributeKind::Categorical {
                return Err(Error::Schema(format!(
                    "protected attribute `{p}` must be categorical (pre-bin continuous values)"
                )));
            }
            if protected_indices.contains(&idx) {
                return Err(Error::Schema(format!("protected attribute `{p}` listed twice")));
            }
            protected_indices.push(idx);
        }
        Ok(Schema {
            attributes,
            protected,
            label_column,
            favorable_value: favorable_value.into(),
            protected_indices,
        })
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("schema serializes")
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    /// `n`, the number of attributes.
    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn protected(&self) -> &[String] {
        &self.protected
    }

    /// Attribute positions of the protected attributes, in protected order.
    pub fn protected_indices(&self) -> &[usize] {
        &self.protected_indices
    }

    pub fn is_protected(&self, index: usize) -> bool {
        self.protected_indices.contains(&index)
    }

    pub fn label_column(&self) -> &str {
        &self.label_column
    }

    pub fn favorable_value(&self) -> &str {
        &self.favorable_value
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }
}

/// A single attribute cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Numeric(f64),
    Categorical(String),
}

impl Value {
    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Categorical(s) => Some(s),
            Value::Numeric(_) => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Numeric(v) => Some(*v),
            Value::Categorical(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Numeric(v) => write!(f, "{v}"),
            Value::Categorical(s) => f.write_str(s),
        }
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Categorical(s.to_string())
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Numeric(v)
    }
}

/// One input row, attribute values in schema order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub values: Vec<Value>,
}

impl Instance {
    pub fn new(values: Vec<Value>) -> Self {
        Instance { values }
    }

    /// Parse raw string cells against the schema.
    pub fn parse(schema: &Schema, cells: &[&str]) -> Result<Self> {
        if cells.len() != schema.len() {
            return Err(Error::Shape {
                expected: schema.len(),
                actual: cells.len(),
            });
        }
        let values = schema
            .attributes()
            .iter()
            .zip(cells)
            .map(|(attr, cell)| parse_cell(attr, cell))
            .collect::<Result<Vec<_>>>()?;
        Ok(Instance { values })
    }

    /// Values of the given attribute positions as strings.
    pub fn protected_tuple(&self, indices: &[usize]) -> Vec<String> {
        indices.iter().map(|&i| self.values[i].to_string()).collect()
    }
}

fn parse_cell(attr: &Attribute, cell: &str) -> Result<Value> {
    let cell = cell.trim();
    if cell.is_empty() {
        return Err(Error::Data(format!("missing value in column `{}`", attr.name)));
    }
    match attr.kind {
        AttributeKind::Categorical => Ok(Value::Categorical(cell.to_string())),
        AttributeKind::Numeric => {
            let v: f64 = cell.parse().map_err(|_| {
                Error::Data(format!("column `{}`: `{cell}` is not a number", attr.name))
            })?;
            if !v.is_finite() {
                return Err(Error::Data(format!(
                    "column `{}`: non-finite value `{cell}`",
                    attr.name
                )));
            }
            Ok(Value::Numeric(v))
        }
    }
}

/// Rows plus binarized labels (1 = favorable).
#[derive(Debug, Clone)]
pub struct Dataset {
    schema: Arc<Schema>,
    rows: Vec<Instance>,
    labels: Vec<u8>,
}

impl Dataset {
    pub fn new(schema: Arc<Schema>, rows: Vec<Instance>, labels: Vec<u8>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::Data(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.values.len() != schema.len() {
                return Err(Error::Shape {
                    expected: schema.len(),
                    actual: row.values.len(),
                });
            }
            for (attr, v) in schema.attributes().iter().zip(&row.values) {
                let ok = match (attr.kind, v) {
                    (AttributeKind::Categorical, Value::Categorical(_)) => true,
                    (AttributeKind::Numeric, Value::Numeric(x)) => x.is_finite(),
                    _ => false,
                };
                if !ok {
                    return Err(Error::Data(format!(
                        "row {i}: value `{v}` does not fit column `{}`",
                        attr.name
                    )));
                }
            }
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::Data(format!("label {bad} is not in {{0,1}}")));
        }
        Ok(Dataset {
            schema,
            rows,
            labels,
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn shared_schema(&self) -> Arc<Schema> {
        Arc::clone(&self.schema)
    }

    pub fn rows(&self) -> &[Instance] {
        &self.rows
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: Arc::clone(&self.schema),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Subgroup of every row, keyed by its own protected values.
    pub fn subgroup_keys(&self) -> Vec<SubgroupKey> {
        let idx = self.schema.protected_indices();
        self.rows
            .iter()
            .map(|r| SubgroupKey::new(self.schema.protected(), r.protected_tuple(idx)))
            .collect()
    }
}

pub fn load_dataset(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    load_dataset_from_reader(file, schema)
}

/// Read a headered CSV. Columns not named in the schema are ignored.
pub fn load_dataset_from_reader<R: Read>(reader: R, schema: &Schema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("column `{name}` missing from header")))
    };
    let columns = schema
        .attributes()
        .iter()
        .map(|a| find(&a.name))
        .collect::<Result<Vec<_>>>()?;
    let label_col = find(schema.label_column())?;

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut label_values = BTreeSet::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let cells: Vec<&str> = columns
            .iter()
            .map(|&c| record.get(c).unwrap_or(""))
            .collect();
        let row = Instance::parse(schema, &cells)
            .map_err(|e| Error::Data(format!("record {}: {e}", line + 1)))?;
        let raw_label = record.get(label_col).unwrap_or("").trim();
        if raw_label.is_empty() {
            return Err(Error::Data(format!("record {}: missing label", line + 1)));
        }
        label_values.insert(raw_label.to_string());
        labels.push(u8::from(raw_label == schema.favorable_value()));
        rows.push(row);
    }
    if label_values.len() > 2 {
        return Err(Error::Data(format!(
            "label column has {} distinct values; only binary labels are supported",
            label_values.len()
        )));
    }
    if !label_values.is_empty() && !label_values.contains(schema.favorable_value()) {
        return Err(Error::Data(format!(
            "favorable value `{}` never occurs in the label column",
            schema.favorable_value()
        )));
    }
    Dataset::new(Arc::new(schema.clone()), rows, labels)
}

/// Write a dataset back out as a headered CSV with the raw favorable value
/// for label 1 and `unfavorable_value` for label 0.
pub fn write_dataset_csv<W: std::io::Write>(
    dataset: &Dataset,
    unfavorable_value: &str,
    writer: W,
) -> Result<()> {
    let schema = dataset.schema();
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = schema.attributes().iter().map(|a| a.name.as_str()).collect();
    header.push(schema.label_column());
    w.write_record(&header)?;
    for (row, &label) in dataset.rows().iter().zip(dataset.labels()) {
        let mut rec: Vec<String> = row.values.iter().map(|v| v.to_string()).collect();
        rec.push(if label == 1 {
            schema.favorable_value().to_string()
        } else {
            unfavorable_value.to_string()
        });
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

/// Shuffle with `seed` and cut off `round(n * test_fraction)` rows as the
/// test partition. Both partitions keep at least one row when `n >= 2`.
pub fn split(dataset: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Usage(format!(
            "test fraction {test_fraction} is outside (0, 1)"
        )));
    }
    let n = dataset.len();
    if n < 2 {
        return Err(Error::Usage(format!("cannot split a dataset of {n} rows")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let n_test = ((n as f64) * test_fraction).round().clamp(1.0, (n - 1) as f64) as usize;
    let (test_idx, train_idx) = order.split_at(n_test);
    Ok((dataset.subset(train_idx), dataset.subset(test_idx)))
}

/// Observed value domains of the protected attributes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtectedDomains {
    attributes: Vec<String>,
    indices: Vec<usize>,
    per_attribute: Vec<Vec<String>>,
    joint_combos: Vec<Vec<String>>,
    #[serde(default)]
    warnings: Vec<String>,
}

impl ProtectedDomains {
    /// Build from explicit combos; per-attribute domains are their projections.
    pub fn from_combos(
        attributes: Vec<String>,
        indices: Vec<usize>,
        combos: impl IntoIterator<Item = Vec<String>>,
    ) -> Result<Self> {
        if attributes.len() != indices.len() || attributes.is_empty() {
            return Err(Error::Usage("protected attribute list is empty or misaligned".into()));
        }
        let d = attributes.len();
        let joint: BTreeSet<Vec<String>> = combos.into_iter().collect();
        if joint.is_empty() {
            return Err(Error::Usage("no protected value combinations".into()));
        }
        let mut per: Vec<BTreeSet<String>> = vec![BTreeSet::new(); d];
        for combo in &joint {
            if combo.len() != d {
                return Err(Error::Shape {
                    expected: d,
                    actual: combo.len(),
                });
            }
            for (set, v) in per.iter_mut().zip(combo) {
                set.insert(v.clone());
            }
        }
        let mut warnings = Vec::new();
        for (name, set) in attributes.iter().zip(&per) {
            if set.len() < 2 {
                let msg = format!(
                    "protected attribute `{name}` has a single observed value; no mutation is possible along it"
                );
                log::warn!("{msg}");
                warnings.push(msg);
            }
        }
        Ok(ProtectedDomains {
            attributes,
            indices,
            per_attribute: per.into_iter().map(|s| s.into_iter().collect()).collect(),
            joint_combos: joint.into_iter().collect(),
            warnings,
        })
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    /// Schema positions of the protected attributes.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Sorted observed values for each protected attribute.
    pub fn per_attribute(&self) -> &[Vec<String>] {
        &self.per_attribute
    }

    pub fn values_of(&self, attribute: &str) -> Option<&[String]> {
        let i = self.attributes.iter().position(|a| a == attribute)?;
        Some(&self.per_attribute[i])
    }

    /// Observed joint tuples in lexicographic order.
    pub fn joint_combos(&self) -> &[Vec<String>] {
        &self.joint_combos
    }

    pub fn contains(&self, combo: &[String]) -> bool {
        self.joint_combos
            .binary_search_by(|c| c.as_slice().cmp(combo))
            .is_ok()
    }

    /// Product of the per-attribute domain sizes.
    pub fn cartesian_size(&self) -> usize {
        self.per_attribute.iter().map(Vec::len).product()
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }
}

pub fn protected_domains(train: &Dataset) -> Result<ProtectedDomains> {
    if train.is_empty() {
        return Err(Error::Usage("cannot extract domains from an empty dataset".into()));
    }
    let schema = train.schema();
    let idx = schema.protected_indices();
    ProtectedDomains::from_combos(
        schema.protected().to_vec(),
        idx.to_vec(),
        train.rows().iter().map(|r| r.protected_tuple(idx)),
    )
}

/// One subgroup: a value for every protected attribute.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubgroupKey {
    pub assignment: Vec<(String, String)>,
}

impl SubgroupKey {
    pub fn new(attributes: &[String], values: Vec<String>) -> Self {
        SubgroupKey {
            assignment: attributes.iter().cloned().zip(values).collect(),
        }
    }

    pub fn value_of(&self, attribute: &str) -> Option<&str> {
        self.assignment
            .iter()
            .find(|(a, _)| a == attribute)
            .map(|(_, v)| v.as_str())
    }
}

impl fmt::Display for SubgroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (a, v)) in self.assignment.iter().enumerate() {
            if i > 0 {
                f.write_str("&")?;
            }
            write!(f, "{a}={v}")?;
        }
        Ok(())
    }
}

pub fn enumerate_subgroups(domains: &ProtectedDomains) -> Vec<SubgroupKey> {
    domains
        .joint_combos()
        .iter()
        .map(|c| SubgroupKey::new(domains.attributes(), c.clone()))
        .collect()
}

/// Count rows per subgroup, in first-seen order.
pub fn subgroup_counts(keys: &[SubgroupKey]) -> Vec<(SubgroupKey, usize)> {
    let mut pos: HashMap<&SubgroupKey, usize> = HashMap::new();
    let mut out: Vec<(SubgroupKey, usize)> = Vec::new();
    for k in keys {
        match pos.get(k) {
            Some(&i) => out[i].1 += 1,
            None => {
                pos.insert(k, out.len());
                out.push((k.clone(), 1));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema2() -> Schema {
        Schema::new(
            vec![
                Attribute::categorical("sex"),
                Attribute::categorical("race"),
                Attribute::numeric("hours"),
            ],
            vec!["sex".into(), "race".into()],
            "income",
            ">50k",
        )
        .unwrap()
    }

    #[test]
    fn loads_and_maps_labels() {
        let csv = "sex,race,hours,income\nM,W,40,>50k\nF,W,20,<=50k\nM,NW,35,<=50k\nF,NW,50,>50k\n";
        let ds = load_dataset_from_reader(csv.as_bytes(), &schema2()).unwrap();
        assert_eq!(ds.labels(), &[1, 0, 0, 1]);
        assert_eq!(ds.rows()[2].values[1], Value::from("NW"));
        assert_eq!(ds.rows()[3].values[2], Value::Numeric(50.0));
    }

    #[test]
    fn missing_protected_column_is_schema_error() {
        let csv = "sex,hours,income\nM,40,>50k\n";
        let err = load_dataset_from_reader(csv.as_bytes(), &schema2()).unwrap_err();
        assert!(matches!(err, Error::Schema(ref m) if m.contains("race")), "{err}");
    }

    #[test]
    fn bad_cells_are_data_errors() {
        let nan = "sex,race,hours,income\nM,W,NaN,>50k\n";
        assert!(matches!(
            load_dataset_from_reader(nan.as_bytes(), &schema2()),
            Err(Error::Data(_))
        ));
        let empty = "sex,race,hours,income\nM,,3,>50k\n";
        assert!(matches!(
            load_dataset_from_reader(empty.as_bytes(), &schema2()),
            Err(Error::Data(_))
        ));
        let multiclass = "sex,race,hours,income\nM,W,1,a\nF,W,1,b\nM,W,1,>50k\n";
        assert!(matches!(
            load_dataset_from_reader(multiclass.as_bytes(), &schema2()),
            Err(Error::Data(_))
        ));
        let no_label = "sex,race,hours,income\nM,W,1,\n";
        assert!(matches!(
            load_dataset_from_reader(no_label.as_bytes(), &schema2()),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn schema_rejects_numeric_protected() {
        let err = Schema::new(
            vec![Attribute::numeric("age")],
            vec!["age".into()],
            "y",
            "1",
        )
        .unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
        assert!(Schema::new(vec![Attribute::categorical("a")], vec![], "y", "1").is_err());
        assert!(Schema::new(vec![Attribute::categorical("y")], vec!["y".into()], "y", "1").is_err());
    }

    #[test]
    fn schema_toml_round_trip() {
        let s = schema2();
        let back = Schema::from_toml_str(&s.to_toml_string()).unwrap();
        assert_eq!(s, back);
        assert_eq!(back.protected_indices(), &[0, 1]);
    }

    fn toy(n: usize) -> Dataset {
        let s = Arc::new(schema2());
        let rows = (0..n)
            .map(|i| {
                Instance::new(vec![
                    Value::from(if i % 2 == 0 { "M" } else { "F" }),
                    Value::from(if i % 3 == 0 { "W" } else { "NW" }),
                    Value::Numeric(i as f64),
                ])
            })
            .collect();
        let labels = (0..n).map(|i| (i % 2) as u8).collect();
        Dataset::new(s, rows, labels).unwrap()
    }

    fn ids(d: &Dataset) -> Vec<usize> {
        d.rows().iter().map(|r| r.values[2].as_f64().unwrap() as usize).collect()
    }

    #[test]
    fn split_sizes_and_determinism() {
        let ds = toy(10);
        let (tr, te) = split(&ds, 0.3, 7).unwrap();
        assert_eq!((tr.len(), te.len()), (7, 3));
        let (tr2, te2) = split(&ds, 0.3, 7).unwrap();
        assert_eq!(ids(&tr), ids(&tr2));
        assert_eq!(ids(&te), ids(&te2));
        let mut all: Vec<usize> = ids(&tr).into_iter().chain(ids(&te)).collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn split_seeds_differ() {
        let ds = toy(1000);
        let (_, a) = split(&ds, 0.3, 7).unwrap();
        let (_, b) = split(&ds, 0.3, 8).unwrap();
        assert_ne!(ids(&a), ids(&b));
    }

    #[test]
    fn split_rejects_bad_fraction() {
        let ds = toy(10);
        for f in [0.0, 1.0, -0.5, 1.5, f64::NAN] {
            assert!(matches!(split(&ds, f, 1), Err(Error::Usage(_))));
        }
    }

    #[test]
    fn domains_all_combos() {
        let ds = toy(12);
        let d = protected_domains(&ds).unwrap();
        assert_eq!(d.per_attribute()[0].len(), 2);
        assert_eq!(d.per_attribute()[1].len(), 2);
        assert_eq!(d.joint_combos().len(), 4);
        assert_eq!(d.cartesian_size(), 4);
        assert!(d.warnings().is_empty());
        let sg = enumerate_subgroups(&d);
        assert_eq!(sg.len(), 4);
        assert_eq!(sg[0].to_string(), "sex=F&race=NW");
    }

    #[test]
    fn domains_missing_combo() {
        let combos = vec![
            vec!["M".to_string(), "W".to_string()],
            vec!["M".to_string(), "NW".to_string()],
            vec!["F".to_string(), "W".to_string()],
        ];
        let d = ProtectedDomains::from_combos(vec!["sex".into(), "race".into()], vec![0, 1], combos)
            .unwrap();
        assert_eq!(d.joint_combos().len(), 3);
        assert_eq!(d.cartesian_size(), 4);
        assert!(!d.contains(&["F".to_string(), "NW".to_string()]));
        assert_eq!(enumerate_subgroups(&d).len(), 3);
    }

    #[test]
    fn single_value_attribute_warns() {
        let combos = vec![vec!["M".to_string()]];
        let d = ProtectedDomains::from_combos(vec!["sex".into()], vec![0], combos).unwrap();
        assert_eq!(d.warnings().len(), 1);
    }

    #[test]
    fn three_valued_attribute_gives_three_subgroups() {
        let combos = ["a", "b", "c"].iter().map(|v| vec![v.to_string()]);
        let d = ProtectedDomains::from_combos(vec!["x".into()], vec![0], combos).unwrap();
        assert_eq!(enumerate_subgroups(&d).len(), 3);
    }
}
