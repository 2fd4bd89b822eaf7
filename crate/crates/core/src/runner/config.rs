use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ensemble::EnsembleStrategy;
use crate::error::{Error, Result};
use crate::fairea;
use crate::model::{ModelKind, TrainConfig, PAPER_HIDDEN_LAYOUT};
use crate::mutate::MutationStrategy;

/// Hidden layout used unless the wide (64, 32, 16, 8, 4) layout is requested.
pub const DESK_HIDDEN_LAYOUT: [usize; 2] = [16, 8];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Original,
    Fairhome,
    Fairhome1,
    Fairhome2,
    Fairhome3,
    Fairhome4,
    Fairhome5,
    Rew,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Original,
        Method::Fairhome,
        Method::Fairhome1,
        Method::Fairhome2,
        Method::Fairhome3,
        Method::Fairhome4,
        Method::Fairhome5,
        Method::Rew,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Original => "original",
            Method::Fairhome => "fairhome",
            Method::Fairhome1 => "fairhome1",
            Method::Fairhome2 => "fairhome2",
            Method::Fairhome3 => "fairhome3",
            Method::Fairhome4 => "fairhome4",
            Method::Fairhome5 => "fairhome5",
            Method::Rew => "rew",
        }
    }

    /// Mutation and ensemble strategy for the inference-time variants.
    pub fn strategies(self) -> Option<(MutationStrategy, EnsembleStrategy)> {
        use EnsembleStrategy::*;
        use MutationStrategy::*;
        match self {
            Method::Fairhome => Some((ProtectedOnly, MajorityVote)),
            Method::Fairhome1 => Some((CorrelatedFeatures, MajorityVote)),
            Method::Fairhome2 => Some((ProtectedOnly, Averaging)),
            Method::Fairhome3 => Some((ProtectedOnly, WeightedAveraging)),
            Method::Fairhome4 => Some((SingleAttributeOnly, MajorityVote)),
            Method::Fairhome5 => Some((MultiAttributeOnly, MajorityVote)),
            Method::Original | Method::Rew => None,
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FaireaConfig {
    pub degrees: Vec<f64>,
    pub reps: usize,
}

impl Default for FaireaConfig {
    fn default() -> Self {
        FaireaConfig {
            degrees: fairea::default_degrees(),
            reps: fairea::DEFAULT_REPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub learning_rate: f64,
    pub epochs: usize,
    /// 0 means full batch.
    pub batch_size: usize,
    pub l2_penalty: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        TrainSection {
            learning_rate: d.learning_rate,
            epochs: d.epochs,
            batch_size: d.batch_size.unwrap_or(0),
            l2_penalty: d.l2_penalty,
        }
    }
}

impl TrainSection {
    pub fn to_train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            batch_size: (self.batch_size > 0).then_some(self.batch_size),
            l2_penalty: self.l2_penalty,
            seed,
            instance_weights: None,
        }
    }
}

/// One task (dataset x model) and the methods to evaluate on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Defaults to `<dataset stem>-<model>`.
    pub task: Option<String>,
    pub dataset: PathBuf,
    pub schema: PathBuf,
    pub model: ModelKind,
    pub methods: Vec<Method>,
    pub repetitions: usize,
    pub test_fraction: f64,
    pub base_seed: u64,
    pub output: PathBuf,
    pub paper_arch: bool,
    /// Overrides the hidden layout when `paper_arch` is off.
    pub hidden: Option<Vec<usize>>,
    pub train: TrainSection,
    pub fairea: FaireaConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            task: None,
            dataset: PathBuf::new(),
            schema: PathBuf::new(),
            model: ModelKind::Logistic,
            methods: vec![Method::Original, Method::Fairhome],
            repetitions: 5,
            test_fraction: 0.3,
            base_seed: 0,
            output: PathBuf::from("out"),
            paper_arch: false,
            hidden: None,
            train: TrainSection::default(),
            fairea: FaireaConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Load a TOML config; relative paths inside it resolve against the
    /// config file's directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.dataset, &mut cfg.schema, &mut cfg.output] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config(format!(
                "test_fraction {} is outside (0, 1)",
                self.test_fraction
            )));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no methods listed".into()));
        }
        let mut seen = self.methods.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.methods.len() {
            return Err(Error::Config("methods must be unique".into()));
        }
        if self.fairea.reps == 0 {
            return Err(Error::Config("fairea.reps must be at least 1".into()));
        }
        Ok(())
    }

    pub fn task_name(&self) -> String {
        self.task.clone().unwrap_or_else(|| {
            let stem = self
                .dataset
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("dataset");
            format!("{stem}-{}", self.model)
        })
    }

    pub fn hidden_layout(&self) -> Vec<usize> {
        if self.paper_arch {
            PAPER_HIDDEN_LAYOUT.to_vec()
        } else {
            self.hidden.clone().unwrap_or_else(|| DESK_HIDDEN_LAYOUT.to_vec())
        }
    }
}
