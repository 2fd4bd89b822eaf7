//! Classifier contract, the built-in gradient-descent models, and the
//! reweighting baseline.

mod network;
mod reweight;

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{Dataset, Instance};
use crate::encoding::Encoder;
use crate::error::{Error, Result};

pub use network::{Dense, Network};
pub use reweight::reweighting_weights;

/// Hidden layout of the five-layer feed-forward network.
pub const PAPER_HIDDEN_LAYOUT: [usize; 5] = [64, 32, 16, 8, 4];

/// Anything that can score an instance with a favorable-class probability.
///
/// The mutation ensemble only needs this; external model families can
/// implement it directly.
pub trait ProbabilisticClassifier {
    fn predict_proba(&self, instance: &Instance) -> Result<f64>;

    fn predict(&self, instance: &Instance) -> Result<u8> {
        self.predict_proba(instance).map(decide)
    }
}

/// Decision threshold: favorable iff `p >= 0.5`.
pub fn decide(p: f64) -> u8 {
    u8::from(p >= 0.5)
}

impl<T: ProbabilisticClassifier + ?Sized> ProbabilisticClassifier for &T {
    fn predict_proba(&self, instance: &Instance) -> Result<f64> {
        (**self).predict_proba(instance)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// `None` means full-batch.
    pub batch_size: Option<usize>,
    pub l2_penalty: f64,
    pub seed: u64,
    #[serde(skip)]
    pub instance_weights: Option<Vec<f64>>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            epochs: 100,
            batch_size: Some(32),
            l2_penalty: 1e-4,
            seed: 0,
            instance_weights: None,
        }
    }
}

impl TrainConfig {
    fn validate(&self, n_rows: usize) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Usage(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Usage("epochs must be positive".into()));
        }
        if self.batch_size == Some(0) {
            return Err(Error::Usage("batch size must be positive".into()));
        }
        if !(self.l2_penalty >= 0.0 && self.l2_penalty.is_finite()) {
            return Err(Error::Usage("l2 penalty must be non-negative".into()));
        }
        if let Some(w) = &self.instance_weights {
            if w.len() != n_rows {
                return Err(Error::Usage(format!(
                    "{} instance weights for {n_rows} training rows",
                    w.len()
                )));
            }
            if let Some(bad) = w.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
                return Err(Error::Usage(format!("instance weight {bad} is not positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Logistic,
    Mlp,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic" | "lr" => Ok(ModelKind::Logistic),
            "mlp" | "dnn" => Ok(ModelKind::Mlp),
            other => Err(Error::Usage(format!("unknown model kind `{other}`"))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Logistic => "logistic",
            ModelKind::Mlp => "mlp",
        })
    }
}

/// Trained parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub kind: ModelKind,
    pub network: Network,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub kind: ModelKind,
    pub config: TrainConfig,
    pub weighted: bool,
    pub final_loss: f64,
    /// Full-batch training loss after each epoch.
    pub loss_history: Vec<f64>,
}

const FORMAT_VERSION: u32 = 1;

/// A trained, immutable model together with its input encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classifier {
    version: u32,
    encoder: Encoder,
    model: Model,
    metadata: ModelMetadata,
}

impl Classifier {
    /// Wrap explicit parameters, e.g. a hand-built logistic model.
    pub fn from_parts(encoder: Encoder, model: Model, metadata: ModelMetadata) -> Result<Self> {
        if model.network.input_dim() != encoder.dim() {
            return Err(Error::Shape {
                expected: encoder.dim(),
                actual: model.network.input_dim(),
            });
        }
        Ok(Classifier {
            version: FORMAT_VERSION,
            encoder,
            model,
            metadata,
        })
    }

    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn metadata(&self) -> &ModelMetadata {
        &self.metadata
    }

    pub fn predict_encoded(&self, x: &[f64]) -> f64 {
        self.model.network.predict_proba(x)
    }

    /// Short hash of the parameters, stable across runs.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for p in self.model.network.params() {
            h.update(p.to_bits().to_le_bytes());
        }
        hex::encode(&h.finalize()[..8])
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let c: Classifier = serde_json::from_str(&text)?;
        if c.version != FORMAT_VERSION {
            return Err(Error::Data(format!(
                "unsupported model format version {}",
                c.version
            )));
        }
        Ok(c)
    }
}

impl ProbabilisticClassifier for Classifier {
    fn predict_proba(&self, instance: &Instance) -> Result<f64> {
        let x = self.encoder.encode(instance)?;
        Ok(self.predict_encoded(&x))
    }
}

pub fn fit_logistic(train: &Dataset, config: &TrainConfig) -> Result<Classifier> {
    fit(train, config, ModelKind::Logistic, &[])
}

/// Train a feed-forward network with the given hidden layout
/// (see [`PAPER_HIDDEN_LAYOUT`]).
pub fn fit_mlp(train: &Dataset, config: &TrainConfig, hidden: &[usize]) -> Result<Classifier> {
    if hidden.contains(&0) {
        return Err(Error::Usage("hidden layers must have at least one unit".into()));
    }
    fit(train, config, ModelKind::Mlp, hidden)
}

fn fit(train: &Dataset, config: &TrainConfig, kind: ModelKind, hidden: &[usize]) -> Result<Classifier> {
    if train.len() < 2 {
        return Err(Error::Training(format!(
            "need at least 2 training rows, got {}",
            train.len()
        )));
    }
    let positives = train.labels().iter().filter(|&&l| l == 1).count();
    if positives == 0 || positives == train.len() {
        return Err(Error::Training(
            "training data contains a single label class".into(),
        ));
    }
    config.validate(train.len())?;
    let encoder = Encoder::fit(train)?;
    if encoder.dim() == 0 {
        return Err(Error::Training("encoded input dimension is zero".into()));
    }
    let xs = encoder.encode_all(train)?;
    let ys: Vec<f64> = train.labels().iter().map(|&l| f64::from(l)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut net = Network::glorot(encoder.dim(), hidden, &mut rng);
    let loss_history = descend(&mut net, &xs, &ys, config, &mut rng);

    let metadata = ModelMetadata {
        kind,
        config: config.clone(),
        weighted: config.instance_weights.is_some(),
        final_loss: loss_history.last().copied().unwrap_or(f64::NAN),
        loss_history,
    };
    Classifier::from_parts(encoder, Model { kind, network: net }, metadata)
}

/// Fixed-step mini-batch gradient descent. Returns the full-batch loss
/// after every epoch.
fn descend(
    net: &mut Network,
    xs: &[Vec<f64>],
    ys: &[f64],
    config: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let n = xs.len();
    let weights = config.instance_weights.as_deref();
    let batch = config.batch_size.unwrap_or(n).min(n);
    let all_rows: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
    let mut order: Vec<usize> = (0..n).collect();
    let mut params = net.params();
    let mut history = Vec::with_capacity(config.epochs);

    let mut bx: Vec<&[f64]> = Vec::with_capacity(batch);
    let mut by: Vec<f64> = Vec::with_capacity(batch);
    let mut bw: Vec<f64> = Vec::with_capacity(batch);
    for _ in 0..config.epochs {
        if batch < n {
            order.shuffle(rng);
        }
        for chunk in order.chunks(batch) {
            bx.clear();
            by.clear();
            bw.clear();
            for &i in chunk {
                bx.push(&xs[i]);
                by.push(ys[i]);
                if let Some(w) = weights {
                    bw.push(w[i]);
                }
            }
            let w = weights.map(|_| bw.as_slice());
            let (_, grad) = net.loss_and_gradient(&bx, &by, w, config.l2_penalty);
            for (p, g) in params.iter_mut().zip(&grad) {
                *p -= config.learning_rate * g;
            }
            net.set_params(&params);
        }
        let (loss, _) = net.loss_and_gradient(&all_rows, ys, weights, config.l2_penalty);
        history.push(loss);
    }
    history
}
