use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::FeatureVector;

/// One input to [`assemble`].
#[derive(Debug, Clone, Copy)]
pub enum Part<'a> {
    Scalar(Option<f64>),
    Vector(&'a FeatureVector),
}

impl Part<'_> {
    fn dim(&self) -> usize {
        match self {
            Part::Scalar(_) => 1,
            Part::Vector(v) => v.dim(),
        }
    }
}

/// Position of one named input inside an assembled vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub name: String,
    pub offset: usize,
    pub len: usize,
}

/// Ordered block layout of assembled vectors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockMap {
    pub blocks: Vec<Block>,
}

impl BlockMap {
    pub fn from_dims(named: &[(&str, usize)]) -> Self {
        let mut offset = 0;
        let blocks = named
            .iter()
            .map(|(name, len)| {
                let b = Block {
                    name: name.to_string(),
                    offset,
                    len: *len,
                };
                offset += len;
                b
            })
            .collect();
        BlockMap { blocks }
    }

    pub fn dim(&self) -> usize {
        self.blocks.last().map_or(0, |b| b.offset + b.len)
    }

    /// Index of the block containing `feature`.
    pub fn block_of(&self, feature: usize) -> Option<usize> {
        self.blocks
            .iter()
            .position(|b| feature >= b.offset && feature < b.offset + b.len)
    }

    /// Recovers the part stored in block `block` of `v`.
    pub fn slice(&self, v: &FeatureVector, block: usize) -> FeatureVector {
        let b = &self.blocks[block];
        let pairs = v
            .iter_nonzero()
            .filter(|(i, _)| *i >= b.offset && *i < b.offset + b.len)
            .map(|(i, x)| ((i - b.offset) as u32, x))
            .collect();
        FeatureVector::sparse(b.len, pairs).expect("slice indices in range")
    }
}

/// Concatenates parts in order into one sparse vector.
pub fn assemble(parts: &[Part<'_>]) -> Result<FeatureVector> {
    let dim = parts.iter().map(Part::dim).sum();
    let mut pairs = Vec::new();
    let mut offset = 0usize;
    for (k, part) in parts.iter().enumerate() {
        match part {
            Part::Scalar(None) => {
                return Err(Error::data(format!("null scalar in assembled part {k}")));
            }
            Part::Scalar(Some(x)) => {
                if *x != 0.0 {
                    pairs.push((offset as u32, *x));
                }
            }
            Part::Vector(v) => {
                pairs.extend(v.iter_nonzero().map(|(i, x)| ((offset + i) as u32, x)));
            }
        }
        offset += part.dim();
    }
    FeatureVector::sparse(dim, pairs)
}

/// Like [`assemble`], but rejects parts whose dimension differs from the
/// fitted layout.
pub fn assemble_checked(parts: &[Part<'_>], layout: &BlockMap) -> Result<FeatureVector> {
    if parts.len() != layout.blocks.len() {
        return Err(Error::invalid(format!(
            "expected {} parts, got {}",
            layout.blocks.len(),
            parts.len()
        )));
    }
    for (p, b) in parts.iter().zip(&layout.blocks) {
        if p.dim() != b.len {
            return Err(Error::data(format!(
                "part {:?} has dimension {} but the fitted layout says {}",
                b.name,
                p.dim(),
                b.len
            )));
        }
    }
    assemble(parts)
}
