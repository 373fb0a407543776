//! Minimal function-approximation toolkit: dense nets, stacked LSTM cells,
//! reverse-mode gradients, an adaptive-moment optimizer, soft target updates
//! and parameter serialization. Double precision throughout; no graph
//! machinery, each architecture carries its own hand-written backward pass.

mod adam;
mod gradcheck;
mod io;
mod lstm;
mod mlp;

pub use adam::{soft_update, AdamState, OptimizerConfig};
pub use gradcheck::{finite_difference_gradients, max_relative_error};
pub use io::{load_params, save_params, validate_layout, PARAM_FORMAT_VERSION};
pub use lstm::{
    backward_lstm, forward_lstm_cached, forward_lstm_sequence, lstm_step, HiddenState, LstmCache,
    LstmSpec,
};
pub use mlp::{backward_mlp, forward_mlp, forward_mlp_cached, MlpCache, MlpSpec, Squash};

use rand::{Rng, RngExt};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("corrupt parameter file: {0}")]
    Corrupt(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Dense row-major matrix (`cols == 1` for vectors).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Uniform fan-in initialization over [-1/sqrt(cols), 1/sqrt(cols)].
    pub fn uniform_fan_in(rows: usize, cols: usize, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / (cols as f64).sqrt();
        Tensor {
            rows,
            cols,
            data: (0..rows * cols)
                .map(|_| rng.random_range(-bound..bound))
                .collect(),
        }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

/// Ordered collection of named tensors. Shapes are fixed at construction;
/// elementwise walks (optimizer steps, soft updates) rely on matching layouts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    entries: Vec<(String, Tensor)>,
}

impl ParamVector {
    pub fn new() -> Self {
        ParamVector { entries: Vec::new() }
    }

    pub fn push(&mut self, name: impl Into<String>, tensor: Tensor) {
        self.entries.push((name.into(), tensor));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn scalar_count(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.data.len()).sum()
    }

    pub fn entry(&self, idx: usize) -> (&str, &Tensor) {
        let (n, t) = &self.entries[idx];
        (n, t)
    }

    pub fn tensor(&self, idx: usize) -> &Tensor {
        &self.entries[idx].1
    }

    pub fn tensor_mut(&mut self, idx: usize) -> &mut Tensor {
        &mut self.entries[idx].1
    }

    pub fn by_name(&self, name: &str) -> Option<&Tensor> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    /// Same names and shapes, all values zero.
    pub fn zeros_like(&self) -> ParamVector {
        ParamVector {
            entries: self
                .entries
                .iter()
                .map(|(n, t)| (n.clone(), Tensor::zeros(t.rows, t.cols)))
                .collect(),
        }
    }

    pub fn same_layout(&self, other: &ParamVector) -> bool {
        self.entries.len() == other.entries.len()
            && self
                .entries
                .iter()
                .zip(&other.entries)
                .all(|((an, at), (bn, bt))| an == bn && at.rows == bt.rows && at.cols == bt.cols)
    }

    pub fn all_finite(&self) -> bool {
        self.entries
            .iter()
            .all(|(_, t)| t.data.iter().all(|v| v.is_finite()))
    }

    pub fn fill(&mut self, value: f64) {
        for (_, t) in &mut self.entries {
            t.data.fill(value);
        }
    }

    /// Euclidean distance between two parameter vectors of the same layout.
    pub fn l2_distance(&self, other: &ParamVector) -> f64 {
        assert!(self.same_layout(other), "layout mismatch in l2_distance");
        let mut acc = 0.0;
        for ((_, a), (_, b)) in self.entries.iter().zip(&other.entries) {
            for (x, y) in a.data.iter().zip(&b.data) {
                let d = x - y;
                acc += d * d;
            }
        }
        acc.sqrt()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().flat_map(|(_, t)| t.data.iter().copied())
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.entries.iter_mut().flat_map(|(_, t)| t.data.iter_mut())
    }
}

impl Default for ParamVector {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zeros_like_preserves_layout() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut p = ParamVector::new();
        p.push("w", Tensor::uniform_fan_in(3, 4, &mut rng));
        p.push("b", Tensor::zeros(3, 1));
        let z = p.zeros_like();
        assert!(p.same_layout(&z));
        assert_eq!(z.scalar_count(), 15);
        assert!(z.values().all(|v| v == 0.0));
    }

    #[test]
    fn fan_in_bound_respected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = Tensor::uniform_fan_in(16, 25, &mut rng);
        assert!(t.data.iter().all(|v| v.abs() <= 0.2));
    }
}
