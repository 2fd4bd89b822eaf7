use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use fairhome::metrics::LabeledPredictions;
use fairhome::runner::{analyze, emit_run, regenerate, ExperimentConfig};
use fairhome::{MetricReport, SubgroupKey};

#[derive(Parser)]
#[command(name = "fairhome", version, about = "Inference-time intersectional fairness repair and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment matrix and write the report tables.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `base_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `repetitions`.
        #[arg(long)]
        reps: Option<usize>,
        /// Overrides the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Use the (64, 32, 16, 8, 4) hidden layout for the MLP.
        #[arg(long)]
        paper_arch: bool,
    },
    /// Regenerate the report tables from a previous run directory.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
    /// Compute all metrics from a predictions CSV with columns y_true,
    /// y_pred and one column per protected attribute.
    Metrics {
        #[arg(long)]
        predictions: PathBuf,
    },
    /// Write a seeded synthetic dataset and its schema.
    Synth {
        #[arg(long, value_enum)]
        kind: SynthKind,
        #[arg(long, default_value_t = 1000)]
        rows: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// File stem; defaults to the kind name.
        #[arg(long)]
        stem: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    German,
    Compas,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run {
            config,
            seed,
            reps,
            out,
            paper_arch,
        } => run(&config, seed, reps, out, paper_arch),
        Command::Report { dir } => {
            let a = regenerate(&dir).with_context(|| format!("regenerating {}", dir.display()))?;
            println!("rewrote tables in {} ({} trade-off cases)", dir.display(), a.cases.len());
            Ok(())
        }
        Command::Metrics { predictions } => metrics(&predictions),
        Command::Synth {
            kind,
            rows,
            seed,
            out,
            stem,
        } => {
            let (fixture, name) = match kind {
                SynthKind::German => (fairhome::synth::german_like(rows, seed)?, "german"),
                SynthKind::Compas => (fairhome::synth::compas_like(rows, seed)?, "compas"),
            };
            let stem = stem.unwrap_or_else(|| name.to_string());
            fixture.write(&out, &stem)?;
            println!("wrote {}/{stem}.csv and {stem}.schema.toml", out.display());
            Ok(())
        }
    }
}

fn run(
    path: &Path,
    seed: Option<u64>,
    reps: Option<usize>,
    out: Option<PathBuf>,
    paper_arch: bool,
) -> Result<()> {
    let mut config = ExperimentConfig::from_file(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    if let Some(s) = seed {
        config.base_seed = s;
    }
    if let Some(r) = reps {
        config.repetitions = r;
    }
    if let Some(o) = out {
        config.output = o;
    }
    config.paper_arch |= paper_arch;
    config.validate()?;

    let records = fairhome::runner::run_experiment(&config)?;
    let analysis = analyze(&records, &config.fairea)?;
    let manifest = emit_run(&config, &records, &analysis, &config.output)?;
    println!(
        "{}: {} records ({} failed), config {}, tables in {}",
        manifest.task,
        manifest.records,
        manifest.failed,
        &manifest.config_hash[..12],
        config.output.display()
    );
    for d in &analysis.regions {
        println!(
            "  {:<10} beats fairea baseline in {:.1}% of {} cases",
            d.method.to_string(),
            100.0 * d.beats_baseline_share(),
            d.total
        );
    }
    Ok(())
}

fn metrics(path: &Path) -> Result<()> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(yt), Some(yp)) = (col("y_true"), col("y_pred")) else {
        bail!("predictions CSV needs `y_true` and `y_pred` columns");
    };
    let attrs: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != yt && *i != yp)
        .map(|(i, h)| (i, h.to_string()))
        .collect();
    if attrs.is_empty() {
        bail!("predictions CSV has no protected-attribute columns");
    }
    let names: Vec<String> = attrs.iter().map(|(_, n)| n.clone()).collect();
    let label = |s: &str, line: usize| -> Result<u8> {
        match s.trim() {
            "0" => Ok(0),
            "1" => Ok(1),
            other => bail!("line {line}: label `{other}` is not 0 or 1"),
        }
    };
    let (mut y_true, mut y_pred, mut keys) = (Vec::new(), Vec::new(), Vec::new());
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let line = i + 2;
        y_true.push(label(&row[yt], line)?);
        y_pred.push(label(&row[yp], line)?);
        keys.push(SubgroupKey::new(
            &names,
            attrs.iter().map(|(j, _)| row[*j].to_string()).collect(),
        ));
    }
    let data = LabeledPredictions::new(y_true, y_pred, keys)?;
    let report = MetricReport::compute(&data)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
