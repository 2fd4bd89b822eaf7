use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, FaireaConfig, Method};
use super::experiment::{
    check_unique, fairness_columns, record_values, tradeoff_analysis, wtl_default, RunRecord,
    TradeoffCase, WtlMatrix,
};
use crate::error::{Error, Result};
use crate::fairea::TradeoffRegion;
use crate::metrics::PerformanceMetric;

pub const METRICS_CSV: &str = "metrics.csv";
pub const IMPROVEMENTS_CSV: &str = "improvements.csv";
pub const WTL_CSV: &str = "wtl.csv";
pub const REGIONS_CSV: &str = "regions.csv";
pub const CASES_CSV: &str = "tradeoff_cases.csv";
pub const MANIFEST_JSON: &str = "manifest.json";
pub const RECORDS_JSONL: &str = "records.jsonl";

/// Mean change of one metric for one method relative to `original`,
/// averaged over tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Improvement {
    pub method: Method,
    pub metric: String,
    pub original_mean: f64,
    pub method_mean: f64,
    pub absolute: f64,
    /// Mean over tasks of the per-task relative change, in percent. `None`
    /// when every task's original mean is zero.
    pub relative_pct: Option<f64>,
    pub tasks: usize,
}

impl Improvement {
    /// `-0.079 / -40.7%`
    pub fn render(&self) -> String {
        match self.relative_pct {
            Some(r) => format!("{:.3} / {:.1}%", self.absolute, r),
            None => format!("{:.3} / n/a", self.absolute),
        }
    }
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Per-task means are compared first; absolute and relative changes are
/// then averaged over tasks.
pub fn improvement_table(records: &[RunRecord]) -> Vec<Improvement> {
    let mut columns = fairness_columns(records);
    columns.extend(PerformanceMetric::ALL.iter().map(|m| m.key().to_string()));
    let mut tasks: Vec<&str> = records.iter().map(|r| r.task.as_str()).collect();
    tasks.sort();
    tasks.dedup();
    let mut methods: Vec<Method> = records
        .iter()
        .map(|r| r.method)
        .filter(|&m| m != Method::Original)
        .collect();
    methods.sort();
    methods.dedup();

    let task_mean = |task: &str, method: Method, col: &str| -> Option<f64> {
        let v: Vec<f64> = records
            .iter()
            .filter(|r| r.task == task && r.method == method)
            .filter_map(|r| r.report.as_ref())
            .filter_map(|rep| record_values(rep).get(col).copied())
            .collect();
        mean(&v)
    };

    let mut out = Vec::new();
    for &method in &methods {
        for col in &columns {
            let (mut o, mut m, mut abs, mut rel) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
            for task in &tasks {
                let (Some(to), Some(tm)) =
                    (task_mean(task, Method::Original, col), task_mean(task, method, col))
                else {
                    continue;
                };
                o.push(to);
                m.push(tm);
                abs.push(tm - to);
                if to != 0.0 {
                    rel.push((tm - to) / to * 100.0);
                }
            }
            if let (Some(om), Some(mm), Some(a)) = (mean(&o), mean(&m), mean(&abs)) {
                out.push(Improvement {
                    method,
                    metric: col.clone(),
                    original_mean: om,
                    method_mean: mm,
                    absolute: a,
                    relative_pct: mean(&rel),
                    tasks: o.len(),
                });
            }
        }
    }
    out
}

/// Region counts per method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionDistribution {
    pub method: Method,
    pub counts: BTreeMap<TradeoffRegion, usize>,
    pub total: usize,
}

impl RegionDistribution {
    /// Share of cases in WinWin or Good.
    pub fn beats_baseline_share(&self) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let beat: usize = self
            .counts
            .iter()
            .filter(|(r, _)| r.beats_baseline())
            .map(|(_, c)| c)
            .sum();
        beat as f64 / self.total as f64
    }
}

pub fn region_distribution(cases: &[TradeoffCase]) -> Vec<RegionDistribution> {
    let mut by: BTreeMap<Method, BTreeMap<TradeoffRegion, usize>> = BTreeMap::new();
    for c in cases {
        let counts = by.entry(c.method).or_insert_with(|| {
            TradeoffRegion::ALL.iter().map(|&r| (r, 0)).collect()
        });
        *counts.get_mut(&c.region).expect("all regions present") += 1;
    }
    by.into_iter()
        .map(|(method, counts)| RegionDistribution {
            method,
            total: counts.values().sum(),
            counts,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub task: String,
    pub config: ExperimentConfig,
    /// SHA-256 of the config serialized as JSON.
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub records: usize,
    pub failed: usize,
}

impl Manifest {
    pub fn new(config: &ExperimentConfig, records: &[RunRecord]) -> Result<Self> {
        let json = serde_json::to_vec(config)?;
        let config_hash = hex::encode(Sha256::digest(&json));
        let mut seeds: Vec<u64> = records.iter().map(|r| r.seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        Ok(Manifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            task: config.task_name(),
            config: config.clone(),
            config_hash,
            seeds,
            records: records.len(),
            failed: records.iter().filter(|r| !r.is_ok()).count(),
        })
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn finish<W: Write>(w: csv::Writer<W>, path: &Path) -> Result<()> {
    let mut inner = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    inner.flush().map_err(|e| Error::io(path, e))
}

/// One row per record. Durations are left out so the file is reproducible.
pub fn write_metrics_csv(records: &[RunRecord], path: &Path) -> Result<()> {
    let mut columns = fairness_columns(records);
    columns.extend(PerformanceMetric::ALL.iter().map(|m| m.key().to_string()));
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header = vec!["task", "method", "repetition", "seed", "model_fingerprint", "status"];
    header.extend(columns.iter().map(String::as_str));
    header.push("error");
    w.write_record(&header)?;
    for r in records {
        let values = r.report.as_ref().map(record_values).unwrap_or_default();
        let mut row = vec![
            r.task.clone(),
            r.method.to_string(),
            r.repetition.to_string(),
            r.seed.to_string(),
            r.model_fingerprint.clone().unwrap_or_default(),
            if r.is_ok() { "ok" } else { "failed" }.to_string(),
        ];
        row.extend(columns.iter().map(|c| fmt_opt(values.get(c).copied())));
        row.push(r.error.clone().unwrap_or_default());
        w.write_record(&row)?;
    }
    finish(w, path)
}

pub fn write_improvements_csv(rows: &[Improvement], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record([
        "method",
        "metric",
        "original_mean",
        "method_mean",
        "absolute",
        "relative_pct",
        "tasks",
        "rendered",
    ])?;
    for r in rows {
        w.write_record([
            r.method.to_string(),
            r.metric.clone(),
            r.original_mean.to_string(),
            r.method_mean.to_string(),
            r.absolute.to_string(),
            fmt_opt(r.relative_pct),
            r.tasks.to_string(),
            r.render(),
        ])?;
    }
    finish(w, path)
}

/// Rows are fairness metrics, columns the methods compared against, cells
/// `w/t/l`.
pub fn write_wtl_csv(matrix: &WtlMatrix, path: &Path) -> Result<()> {
    let mut methods: Vec<Method> = matrix.cells.values().flat_map(|m| m.keys().copied()).collect();
    methods.sort();
    methods.dedup();
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header = vec!["metric".to_string()];
    header.extend(methods.iter().map(|m| m.to_string()));
    w.write_record(&header)?;
    for (metric, row) in &matrix.cells {
        let mut cells = vec![metric.clone()];
        for m in &methods {
            let (wi, t, l) = row.get(m).copied().unwrap_or_default();
            cells.push(format!("{wi}/{t}/{l}"));
        }
        w.write_record(&cells)?;
    }
    finish(w, path)
}

pub fn write_regions_csv(dist: &[RegionDistribution], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header = vec!["method"];
    header.extend(TradeoffRegion::ALL.iter().map(|r| r.key()));
    header.extend(["total", "beats_baseline_share"]);
    w.write_record(&header)?;
    for d in dist {
        let mut row = vec![d.method.to_string()];
        row.extend(TradeoffRegion::ALL.iter().map(|r| d.counts[r].to_string()));
        row.push(d.total.to_string());
        row.push(d.beats_baseline_share().to_string());
        w.write_record(&row)?;
    }
    finish(w, path)
}

pub fn write_cases_csv(cases: &[TradeoffCase], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record([
        "task",
        "method",
        "repetition",
        "fairness_metric",
        "performance_metric",
        "region",
        "clamped",
    ])?;
    for c in cases {
        w.write_record([
            c.task.clone(),
            c.method.to_string(),
            c.repetition.to_string(),
            c.fairness_metric.key().to_string(),
            c.performance_metric.key().to_string(),
            c.region.to_string(),
            c.clamped.to_string(),
        ])?;
    }
    finish(w, path)
}

pub fn write_records(records: &[RunRecord], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(f).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Everything derived from a set of records.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub improvements: Vec<Improvement>,
    pub cases: Vec<TradeoffCase>,
    pub regions: Vec<RegionDistribution>,
    pub wtl: WtlMatrix,
}

pub fn analyze(records: &[RunRecord], fairea: &FaireaConfig) -> Result<Analysis> {
    check_unique(records)?;
    let cases = tradeoff_analysis(records, &fairea.degrees, fairea.reps)?;
    Ok(Analysis {
        improvements: improvement_table(records),
        regions: region_distribution(&cases),
        cases,
        wtl: wtl_default(records)?,
    })
}

/// Write the report tables for `records` into `dir`.
pub fn emit_report(records: &[RunRecord], analysis: &Analysis, dir: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::Usage("no run records to report".into()));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_metrics_csv(records, &dir.join(METRICS_CSV))?;
    write_improvements_csv(&analysis.improvements, &dir.join(IMPROVEMENTS_CSV))?;
    write_wtl_csv(&analysis.wtl, &dir.join(WTL_CSV))?;
    write_regions_csv(&analysis.regions, &dir.join(REGIONS_CSV))?;
    write_cases_csv(&analysis.cases, &dir.join(CASES_CSV))
}

/// Persist records and manifest, then the report tables.
pub fn emit_run(
    config: &ExperimentConfig,
    records: &[RunRecord],
    analysis: &Analysis,
    dir: &Path,
) -> Result<Manifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest = Manifest::new(config, records)?;
    let path = dir.join(MANIFEST_JSON);
    let mut w = create(&path)?;
    serde_json::to_writer_pretty(&mut w, &manifest)?;
    w.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
    w.flush().map_err(|e| Error::io(&path, e))?;
    write_records(records, &dir.join(RECORDS_JSONL))?;
    emit_report(records, analysis, dir)?;
    Ok(manifest)
}

/// Rebuild the tables from a previous run's directory.
pub fn regenerate(dir: &Path) -> Result<Analysis> {
    let manifest = read_manifest(&dir.join(MANIFEST_JSON))?;
    let records = read_records(&dir.join(RECORDS_JSONL))?;
    let analysis = analyze(&records, &manifest.config.fairea)?;
    emit_report(&records, &analysis, dir)?;
    Ok(analysis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::MetricReport;

    fn report(wc_spd: f64) -> MetricReport {
        MetricReport {
            wc_spd,
            wc_aod: 0.0,
            wc_eod: 0.0,
            ac_spd: 0.0,
            ac_aod: 0.0,
            ac_eod: 0.0,
            accuracy: 0.8,
            macro_precision: 0.8,
            macro_recall: 0.8,
            macro_f1: 0.8,
            mcc: 0.6,
            per_attribute: BTreeMap::new(),
            excluded_subgroups: Vec::new(),
        }
    }

    fn rec(task: &str, method: Method, rep: usize, wc_spd: f64) -> RunRecord {
        RunRecord {
            task: task.into(),
            method,
            repetition: rep,
            seed: rep as u64,
            model_fingerprint: None,
            report: Some(report(wc_spd)),
            predictions: None,
            error: None,
            warnings: Vec::new(),
            duration_ms: 0.0,
        }
    }

    #[test]
    fn relative_change_is_averaged_per_task() {
        // two tasks whose pooled means are 0.195 and 0.116
        let records = vec![
            rec("a", Method::Original, 0, 0.1),
            rec("a", Method::Fairhome, 0, 0.058916),
            rec("b", Method::Original, 0, 0.29),
            rec("b", Method::Fairhome, 0, 0.173084),
        ];
        let t = improvement_table(&records);
        let row = t.iter().find(|r| r.metric == "wc_spd").unwrap();
        assert!((row.original_mean - 0.195).abs() < 1e-12);
        assert!((row.method_mean - 0.116).abs() < 1e-12);
        assert_eq!(row.render(), "-0.079 / -40.7%");
    }

    #[test]
    fn zero_original_gives_no_relative_change() {
        let records = vec![
            rec("a", Method::Original, 0, 0.0),
            rec("a", Method::Fairhome, 0, 0.0),
        ];
        let t = improvement_table(&records);
        let row = t.iter().find(|r| r.metric == "wc_spd").unwrap();
        assert_eq!(row.relative_pct, None);
        assert_eq!(row.render(), "0.000 / n/a");
        // performance metrics still have a relative change
        let acc = t.iter().find(|r| r.metric == "accuracy").unwrap();
        assert_eq!(acc.relative_pct, Some(0.0));
    }

    #[test]
    fn single_rep_tables_render() {
        let records = vec![rec("a", Method::Original, 0, 0.2), rec("a", Method::Fairhome, 0, 0.1)];
        let analysis = Analysis {
            improvements: improvement_table(&records),
            cases: Vec::new(),
            regions: Vec::new(),
            wtl: wtl_default(&records).unwrap(),
        };
        let dir = tempfile::tempdir().unwrap();
        emit_report(&records, &analysis, dir.path()).unwrap();
        let wtl = std::fs::read_to_string(dir.path().join(WTL_CSV)).unwrap();
        assert!(wtl.contains("wc_spd,0/1/0"), "{wtl}");
        let metrics = std::fs::read_to_string(dir.path().join(METRICS_CSV)).unwrap();
        assert_eq!(metrics.lines().count(), 3);
    }

    #[test]
    fn empty_records_are_rejected() {
        let analysis = Analysis {
            improvements: Vec::new(),
            cases: Vec::new(),
            regions: Vec::new(),
            wtl: WtlMatrix::default(),
        };
        let dir = tempfile::tempdir().unwrap();
        assert!(emit_report(&[], &analysis, dir.path()).is_err());
    }
}
