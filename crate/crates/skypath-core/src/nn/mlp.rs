//! Dense feed-forward networks with rectified-linear hidden layers and an
//! optional tanh output squash for actors.

use super::{NnError, ParamVector, Tensor};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Squash {
    None,
    Tanh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input: usize,
    pub hidden: Vec<usize>,
    pub output: usize,
    pub squash: Squash,
}

impl MlpSpec {
    pub fn new(input: usize, hidden: Vec<usize>, output: usize, squash: Squash) -> Self {
        MlpSpec {
            input,
            hidden,
            output,
            squash,
        }
    }

    /// (fan_in, fan_out) of each affine layer, hidden plus output.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden.len() + 1);
        let mut prev = self.input;
        for &h in &self.hidden {
            dims.push((prev, h));
            prev = h;
        }
        dims.push((prev, self.output));
        dims
    }

    pub fn init_params(&self, rng: &mut impl Rng) -> ParamVector {
        let mut p = ParamVector::new();
        for (l, (fan_in, fan_out)) in self.layer_dims().into_iter().enumerate() {
            p.push(format!("w{l}"), Tensor::uniform_fan_in(fan_out, fan_in, rng));
            p.push(format!("b{l}"), Tensor::zeros(fan_out, 1));
        }
        p
    }

    fn check(&self, params: &ParamVector, input_len: usize) -> Result<(), NnError> {
        if input_len != self.input {
            return Err(NnError::ShapeMismatch(format!(
                "mlp expects input width {}, got {input_len}",
                self.input
            )));
        }
        let dims = self.layer_dims();
        if params.len() != 2 * dims.len() {
            return Err(NnError::ShapeMismatch(format!(
                "mlp expects {} tensors, got {}",
                2 * dims.len(),
                params.len()
            )));
        }
        for (l, (fan_in, fan_out)) in dims.into_iter().enumerate() {
            let w = params.tensor(2 * l);
            let b = params.tensor(2 * l + 1);
            if w.rows != fan_out || w.cols != fan_in || b.rows != fan_out {
                return Err(NnError::ShapeMismatch(format!(
                    "mlp layer {l} wants {fan_out}x{fan_in}, got {}x{}",
                    w.rows, w.cols
                )));
            }
        }
        Ok(())
    }
}

fn affine(w: &Tensor, b: &Tensor, x: &[f64], out: &mut Vec<f64>) {
    out.clear();
    for r in 0..w.rows {
        let row = w.row(r);
        let mut acc = b.data[r];
        for (wi, xi) in row.iter().zip(x) {
            acc += wi * xi;
        }
        out.push(acc);
    }
}

/// Activations recorded by a cached forward pass, for the backward pass.
#[derive(Debug, Clone)]
pub struct MlpCache {
    /// Layer inputs: x, h1, ..., h_{n-1} (post-activation).
    inputs: Vec<Vec<f64>>,
    /// Pre-activation of each layer, including the output layer.
    preacts: Vec<Vec<f64>>,
    output: Vec<f64>,
}

impl MlpCache {
    pub fn output(&self) -> &[f64] {
        &self.output
    }
}

pub fn forward_mlp(spec: &MlpSpec, params: &ParamVector, input: &[f64]) -> Result<Vec<f64>, NnError> {
    Ok(forward_mlp_cached(spec, params, input)?.output)
}

pub fn forward_mlp_cached(
    spec: &MlpSpec,
    params: &ParamVector,
    input: &[f64],
) -> Result<MlpCache, NnError> {
    spec.check(params, input.len())?;
    let n_layers = spec.hidden.len() + 1;
    let mut inputs = Vec::with_capacity(n_layers);
    let mut preacts = Vec::with_capacity(n_layers);
    let mut x = input.to_vec();
    for l in 0..n_layers {
        let w = params.tensor(2 * l);
        let b = params.tensor(2 * l + 1);
        let mut z = Vec::new();
        affine(w, b, &x, &mut z);
        inputs.push(x);
        let last = l == n_layers - 1;
        let a: Vec<f64> = if last {
            match spec.squash {
                Squash::None => z.clone(),
                Squash::Tanh => z.iter().map(|v| v.tanh()).collect(),
            }
        } else {
            z.iter().map(|v| v.max(0.0)).collect()
        };
        preacts.push(z);
        x = a;
    }
    Ok(MlpCache {
        inputs,
        preacts,
        output: x,
    })
}

/// Accumulate parameter gradients for one sample into `grads` and return the
/// gradient with respect to the input.
pub fn backward_mlp(
    spec: &MlpSpec,
    params: &ParamVector,
    cache: &MlpCache,
    d_output: &[f64],
    grads: &mut ParamVector,
) -> Vec<f64> {
    let n_layers = spec.hidden.len() + 1;
    assert_eq!(d_output.len(), spec.output, "d_output width mismatch");
    let mut d_act = d_output.to_vec();
    for l in (0..n_layers).rev() {
        let z = &cache.preacts[l];
        let last = l == n_layers - 1;
        // Through the nonlinearity to the pre-activation.
        let dz: Vec<f64> = if last {
            match spec.squash {
                Squash::None => d_act.clone(),
                Squash::Tanh => z
                    .iter()
                    .zip(&d_act)
                    .map(|(zi, di)| {
                        let t = zi.tanh();
                        di * (1.0 - t * t)
                    })
                    .collect(),
            }
        } else {
            z.iter()
                .zip(&d_act)
                .map(|(zi, di)| if *zi > 0.0 { *di } else { 0.0 })
                .collect()
        };
        let x = &cache.inputs[l];
        let w = params.tensor(2 * l);
        {
            let gw = grads.tensor_mut(2 * l);
            for (r, dzr) in dz.iter().enumerate() {
                let row = &mut gw.data[r * gw.cols..(r + 1) * gw.cols];
                for (gi, xi) in row.iter_mut().zip(x) {
                    *gi += dzr * xi;
                }
            }
        }
        {
            let gb = grads.tensor_mut(2 * l + 1);
            for (gi, dzr) in gb.data.iter_mut().zip(&dz) {
                *gi += dzr;
            }
        }
        let mut dx = vec![0.0; x.len()];
        for (r, dzr) in dz.iter().enumerate() {
            if *dzr != 0.0 {
                let row = w.row(r);
                for (dxi, wi) in dx.iter_mut().zip(row) {
                    *dxi += dzr * wi;
                }
            }
        }
        d_act = dx;
    }
    d_act
}
