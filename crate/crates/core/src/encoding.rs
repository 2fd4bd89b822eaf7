//! Numeric encoding of instances: one-hot blocks for categoricals, min-max
//! scaling for numerics. Fitted on training data only.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::data::{AttributeKind, Dataset, Instance, Schema, Value};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Block {
    /// Sorted training levels; an unseen level encodes as all zeros.
    Categorical { levels: Vec<String> },
    /// Training range; values outside it are clamped.
    Numeric { min: f64, max: f64 },
}

impl Block {
    pub fn width(&self) -> usize {
        match self {
            Block::Categorical { levels } => levels.len(),
            Block::Numeric { .. } => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    blocks: Vec<Block>,
    dim: usize,
}

impl Encoder {
    pub fn fit(train: &Dataset) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Usage("cannot fit an encoder on an empty dataset".into()));
        }
        let blocks = train
            .schema()
            .attributes()
            .iter()
            .enumerate()
            .map(|(j, attr)| match attr.kind {
                AttributeKind::Categorical => {
                    let levels: BTreeSet<&str> =
                        train.rows().iter().filter_map(|r| r.values[j].as_str()).collect();
                    Block::Categorical {
                        levels: levels.into_iter().map(str::to_string).collect(),
                    }
                }
                AttributeKind::Numeric => {
                    let (min, max) = train
                        .rows()
                        .iter()
                        .filter_map(|r| r.values[j].as_f64())
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                            (lo.min(v), hi.max(v))
                        });
                    Block::Numeric { min, max }
                }
            })
            .collect();
        Ok(Self::from_blocks(blocks))
    }

    pub fn from_blocks(blocks: Vec<Block>) -> Self {
        let dim = blocks.iter().map(Block::width).sum();
        Encoder { blocks, dim }
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Length of every encoded vector.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_attributes(&self) -> usize {
        self.blocks.len()
    }

    pub fn encode(&self, instance: &Instance) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.dim);
        self.encode_into(instance, &mut out)?;
        Ok(out)
    }

    /// Append the encoding of `instance` to `out`.
    pub fn encode_into(&self, instance: &Instance, out: &mut Vec<f64>) -> Result<()> {
        if instance.values.len() != self.blocks.len() {
            return Err(Error::Shape {
                expected: self.blocks.len(),
                actual: instance.values.len(),
            });
        }
        for (block, value) in self.blocks.iter().zip(&instance.values) {
            match (block, value) {
                (Block::Categorical { levels }, Value::Categorical(s)) => {
                    let hit = levels.binary_search_by(|l| l.as_str().cmp(s)).ok();
                    out.extend((0..levels.len()).map(|k| if Some(k) == hit { 1.0 } else { 0.0 }));
                }
                (Block::Numeric { min, max }, Value::Numeric(v)) => out.push(scale(*v, *min, *max)),
                (_, v) => {
                    return Err(Error::Data(format!(
                        "value `{v}` does not match its encoding block"
                    )))
                }
            }
        }
        Ok(())
    }

    /// Encode a whole dataset as row-major vectors.
    pub fn encode_all(&self, data: &Dataset) -> Result<Vec<Vec<f64>>> {
        data.rows().iter().map(|r| self.encode(r)).collect()
    }

    pub fn check_schema(&self, schema: &Schema) -> Result<()> {
        if schema.len() != self.blocks.len() {
            return Err(Error::Shape {
                expected: self.blocks.len(),
                actual: schema.len(),
            });
        }
        Ok(())
    }
}

fn scale(v: f64, min: f64, max: f64) -> f64 {
    if max > min {
        ((v - min) / (max - min)).clamp(0.0, 1.0)
    } else {
        0.0
    }
}
