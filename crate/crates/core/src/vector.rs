//! Real-valued feature vectors in dense or sparse form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A feature vector of fixed dimension.
///
/// The sparse form keeps strictly increasing indices below `dim` and never
/// stores an explicit zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureVector {
    Dense {
        values: Vec<f64>,
    },
    Sparse {
        dim: usize,
        indices: Vec<u32>,
        values: Vec<f64>,
    },
}

impl FeatureVector {
    pub fn dense(values: Vec<f64>) -> Self {
        FeatureVector::Dense { values }
    }

    /// An all-zero sparse vector.
    pub fn zeros(dim: usize) -> Self {
        FeatureVector::Sparse {
            dim,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a sparse vector from `(index, value)` pairs.
    ///
    /// Pairs may arrive in any order; duplicate indices are summed and zeros
    /// are dropped.
    pub fn sparse(dim: usize, mut pairs: Vec<(u32, f64)>) -> Result<Self> {
        pairs.sort_by_key(|p| p.0);
        let mut indices = Vec::with_capacity(pairs.len());
        let mut values: Vec<f64> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            if i as usize >= dim {
                return Err(Error::invalid(format!(
                    "sparse index {i} out of range for dimension {dim}"
                )));
            }
            if indices.last() == Some(&i) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(i);
                values.push(v);
            }
        }
        let mut out_i = Vec::with_capacity(indices.len());
        let mut out_v = Vec::with_capacity(values.len());
        for (i, v) in indices.into_iter().zip(values) {
            if v != 0.0 {
                out_i.push(i);
                out_v.push(v);
            }
        }
        Ok(FeatureVector::Sparse {
            dim,
            indices: out_i,
            values: out_v,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            FeatureVector::Dense { values } => values.len(),
            FeatureVector::Sparse { dim, .. } => *dim,
        }
    }

    /// Value at `index` (zero when absent from a sparse vector).
    pub fn get(&self, index: usize) -> f64 {
        match self {
            FeatureVector::Dense { values } => values.get(index).copied().unwrap_or(0.0),
            FeatureVector::Sparse {
                indices, values, ..
            } => match indices.binary_search(&(index as u32)) {
                Ok(pos) => values[pos],
                Err(_) => 0.0,
            },
        }
    }

    /// Number of stored entries that are nonzero.
    pub fn nnz(&self) -> usize {
        match self {
            FeatureVector::Dense { values } => values.iter().filter(|v| **v != 0.0).count(),
            FeatureVector::Sparse { values, .. } => values.len(),
        }
    }

    /// Iterates over nonzero entries in increasing index order.
    pub fn iter_nonzero(&self) -> Box<dyn Iterator<Item = (usize, f64)> + '_> {
        match self {
            FeatureVector::Dense { values } => Box::new(
                values
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(i, v)| (i, *v)),
            ),
            FeatureVector::Sparse {
                indices, values, ..
            } => Box::new(indices.iter().zip(values).map(|(i, v)| (*i as usize, *v))),
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        match self {
            FeatureVector::Dense { values } => values.clone(),
            FeatureVector::Sparse {
                dim,
                indices,
                values,
            } => {
                let mut out = vec![0.0; *dim];
                for (i, v) in indices.iter().zip(values) {
                    out[*i as usize] = *v;
                }
                out
            }
        }
    }

    /// Dot product with a dense weight slice of the same dimension.
    pub fn dot(&self, weights: &[f64]) -> f64 {
        match self {
            FeatureVector::Dense { values } => {
                values.iter().zip(weights).map(|(x, w)| x * w).sum()
            }
            FeatureVector::Sparse {
                indices, values, ..
            } => indices
                .iter()
                .zip(values)
                .map(|(i, v)| v * weights[*i as usize])
                .sum(),
        }
    }

    /// `target += scale * self`.
    pub fn axpy_into(&self, scale: f64, target: &mut [f64]) {
        match self {
            FeatureVector::Dense { values } => {
                for (t, v) in target.iter_mut().zip(values) {
                    *t += scale * v;
                }
            }
            FeatureVector::Sparse {
                indices, values, ..
            } => {
                for (i, v) in indices.iter().zip(values) {
                    target[*i as usize] += scale * v;
                }
            }
        }
    }

    /// Checks the structural invariants of the sparse form.
    pub fn is_well_formed(&self) -> bool {
        match self {
            FeatureVector::Dense { .. } => true,
            FeatureVector::Sparse {
                dim,
                indices,
                values,
            } => {
                indices.len() == values.len()
                    && indices.windows(2).all(|w| w[0] < w[1])
                    && indices.iter().all(|i| (*i as usize) < *dim)
                    && values.iter().all(|v| *v != 0.0)
            }
        }
    }

    /// Equality of represented values regardless of storage form.
    pub fn same_values(&self, other: &FeatureVector) -> bool {
        self.dim() == other.dim() && self.to_dense() == other.to_dense()
    }
}
