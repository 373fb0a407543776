//! Stacked LSTM with a configurable readout, plus backpropagation through
//! time.
//!
//! Cell equations per layer, with gates packed [i | f | g | o] in the weight
//! matrix rows and the column split [x | h_prev]:
//!
//! ```text
//! z = W [x; h_prev] + b
//! i = sigma(z_i)   f = sigma(z_f)   g = tanh(z_g)   o = sigma(z_o)
//! c = f * c_prev + i * g
//! h = o * tanh(c)
//! ```
//!
//! The readout maps `[h_top; x_t]` to the output at every step, either
//! linearly or through one hidden layer (`readout_hidden > 0`); an optional
//! second, memoryless head with a tanh hidden layer serves leading output
//! components that are smooth functions of the step input alone.
//! A linear input skip `W_skip x_t` is always present, so near-identity
//! transition maps cost no recurrent capacity.

use super::{NnError, ParamVector, Tensor};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LstmSpec {
    pub input: usize,
    pub layers: usize,
    pub units: usize,
    pub output: usize,
    /// Width of the rectified readout hidden layer; 0 for a linear readout.
    #[serde(default)]
    pub readout_hidden: usize,
    /// Leading output components produced by an input-only head. Those
    /// outputs see the current step input but not the recurrent state, which
    /// keeps memoryless transition components from overfitting through the
    /// hidden state. Requires `readout_hidden > 0`.
    #[serde(default)]
    pub memoryless_outputs: usize,
}

impl LstmSpec {
    pub fn new(input: usize, layers: usize, units: usize, output: usize) -> Self {
        LstmSpec {
            input,
            layers,
            units,
            output,
            readout_hidden: 0,
            memoryless_outputs: 0,
        }
    }

    pub fn with_readout_hidden(mut self, hidden: usize) -> Self {
        self.readout_hidden = hidden;
        self
    }

    pub fn with_memoryless_outputs(mut self, n: usize) -> Self {
        assert!(n <= self.output);
        self.memoryless_outputs = n;
        self
    }

    fn layer_input(&self, layer: usize) -> usize {
        if layer == 0 {
            self.input
        } else {
            self.units
        }
    }

    /// Index of the first readout tensor.
    fn readout_base(&self) -> usize {
        2 * self.layers
    }

    pub fn init_params(&self, rng: &mut impl Rng) -> ParamVector {
        let mut p = ParamVector::new();
        for l in 0..self.layers {
            let cols = self.layer_input(l) + self.units;
            p.push(
                format!("lstm{l}_w"),
                Tensor::uniform_fan_in(4 * self.units, cols, rng),
            );
            let mut b = Tensor::zeros(4 * self.units, 1);
            // Forget-gate bias starts open.
            for v in &mut b.data[self.units..2 * self.units] {
                *v = 1.0;
            }
            p.push(format!("lstm{l}_b"), b);
        }
        if self.readout_hidden > 0 {
            let hin = self.units + self.input;
            let rec_out = self.output - self.memoryless_outputs;
            p.push(
                "head_w0",
                Tensor::uniform_fan_in(self.readout_hidden, hin, rng),
            );
            p.push("head_b0", Tensor::zeros(self.readout_hidden, 1));
            p.push(
                "head_w1",
                Tensor::uniform_fan_in(rec_out, self.readout_hidden, rng),
            );
            p.push("head_b1", Tensor::zeros(rec_out, 1));
            if self.memoryless_outputs > 0 {
                p.push(
                    "mem_w0",
                    Tensor::uniform_fan_in(self.readout_hidden, self.input, rng),
                );
                p.push("mem_b0", Tensor::zeros(self.readout_hidden, 1));
                p.push(
                    "mem_w1",
                    Tensor::uniform_fan_in(self.memoryless_outputs, self.readout_hidden, rng),
                );
                p.push("mem_b1", Tensor::zeros(self.memoryless_outputs, 1));
            }
        } else {
            p.push(
                "out_w",
                Tensor::uniform_fan_in(self.output, self.units, rng),
            );
            p.push("out_b", Tensor::zeros(self.output, 1));
        }
        p.push("skip_w", Tensor::zeros(self.output, self.input));
        p
    }

    pub fn param_count(&self) -> usize {
        let readout = if self.readout_hidden > 0 {
            if self.memoryless_outputs > 0 {
                9
            } else {
                5
            }
        } else {
            3
        };
        2 * self.layers + readout
    }

    pub fn check(&self, params: &ParamVector) -> Result<(), NnError> {
        if params.len() != self.param_count() {
            return Err(NnError::ShapeMismatch(format!(
                "lstm expects {} tensors, got {}",
                self.param_count(),
                params.len()
            )));
        }
        for l in 0..self.layers {
            let w = params.tensor(2 * l);
            let cols = self.layer_input(l) + self.units;
            if w.rows != 4 * self.units || w.cols != cols {
                return Err(NnError::ShapeMismatch(format!(
                    "lstm layer {l} wants {}x{cols}, got {}x{}",
                    4 * self.units,
                    w.rows,
                    w.cols
                )));
            }
        }
        let base = self.readout_base();
        if self.readout_hidden > 0 {
            let w0 = params.tensor(base);
            let w1 = params.tensor(base + 2);
            let hin = self.units + self.input;
            let rec_out = self.output - self.memoryless_outputs;
            if w0.rows != self.readout_hidden || w0.cols != hin {
                return Err(NnError::ShapeMismatch(format!(
                    "readout hidden wants {}x{hin}, got {}x{}",
                    self.readout_hidden, w0.rows, w0.cols
                )));
            }
            if w1.rows != rec_out || w1.cols != self.readout_hidden {
                return Err(NnError::ShapeMismatch(format!(
                    "readout output wants {rec_out}x{}, got {}x{}",
                    self.readout_hidden, w1.rows, w1.cols
                )));
            }
            if self.memoryless_outputs > 0 {
                let m0 = params.tensor(base + 4);
                let m1 = params.tensor(base + 6);
                if m0.rows != self.readout_hidden || m0.cols != self.input {
                    return Err(NnError::ShapeMismatch(format!(
                        "memoryless hidden wants {}x{}, got {}x{}",
                        self.readout_hidden, self.input, m0.rows, m0.cols
                    )));
                }
                if m1.rows != self.memoryless_outputs || m1.cols != self.readout_hidden {
                    return Err(NnError::ShapeMismatch(format!(
                        "memoryless output wants {}x{}, got {}x{}",
                        self.memoryless_outputs, self.readout_hidden, m1.rows, m1.cols
                    )));
                }
            }
        } else {
            let ow = params.tensor(base);
            if ow.rows != self.output || ow.cols != self.units {
                return Err(NnError::ShapeMismatch(format!(
                    "lstm readout wants {}x{}, got {}x{}",
                    self.output, self.units, ow.rows, ow.cols
                )));
            }
        }
        let sw = params.tensor(params.len() - 1);
        if sw.rows != self.output || sw.cols != self.input {
            return Err(NnError::ShapeMismatch(format!(
                "lstm input skip wants {}x{}, got {}x{}",
                self.output, self.input, sw.rows, sw.cols
            )));
        }
        Ok(())
    }

    /// Readout from the top hidden state and the step input. Returns the
    /// hidden-layer pre-activations when a head is configured.
    fn readout(
        &self,
        params: &ParamVector,
        h_top: &[f64],
        x: &[f64],
        output: &mut Vec<f64>,
    ) -> Option<HeadCache> {
        let base = self.readout_base();
        output.clear();
        let skip = params.tensor(params.len() - 1);
        if self.readout_hidden > 0 {
            let w0 = params.tensor(base);
            let b0 = params.tensor(base + 1);
            let w1 = params.tensor(base + 2);
            let b1 = params.tensor(base + 3);
            let nu = self.units;
            let k = self.memoryless_outputs;
            let mut mem_z = None;
            if k > 0 {
                let m0 = params.tensor(base + 4);
                let mb0 = params.tensor(base + 5);
                let m1 = params.tensor(base + 6);
                let mb1 = params.tensor(base + 7);
                let mut zm = Vec::with_capacity(self.readout_hidden);
                for r in 0..self.readout_hidden {
                    let row = m0.row(r);
                    let mut acc = mb0.data[r];
                    for (wi, xi) in row.iter().zip(x) {
                        acc += wi * xi;
                    }
                    zm.push(acc);
                }
                for r in 0..k {
                    let row = m1.row(r);
                    let mut acc = mb1.data[r];
                    for (wi, zi) in row.iter().zip(&zm) {
                        acc += wi * zi.tanh();
                    }
                    for (wi, xi) in skip.row(r).iter().zip(x) {
                        acc += wi * xi;
                    }
                    output.push(acc);
                }
                mem_z = Some(zm);
            }
            let mut z0 = Vec::with_capacity(self.readout_hidden);
            for r in 0..self.readout_hidden {
                let row = w0.row(r);
                let mut acc = b0.data[r];
                for (wi, hi) in row[..nu].iter().zip(h_top) {
                    acc += wi * hi;
                }
                for (wi, xi) in row[nu..].iter().zip(x) {
                    acc += wi * xi;
                }
                z0.push(acc);
            }
            for r in 0..self.output - k {
                let row = w1.row(r);
                let mut acc = b1.data[r];
                for (wi, zi) in row.iter().zip(&z0) {
                    acc += wi * zi.max(0.0);
                }
                for (wi, xi) in skip.row(k + r).iter().zip(x) {
                    acc += wi * xi;
                }
                output.push(acc);
            }
            Some(HeadCache { rec_z: z0, mem_z })
        } else {
            let ow = params.tensor(base);
            let ob = params.tensor(base + 1);
            for r in 0..self.output {
                let row = ow.row(r);
                let mut acc = ob.data[r];
                for (wi, hi) in row.iter().zip(h_top) {
                    acc += wi * hi;
                }
                for (wi, xi) in skip.row(r).iter().zip(x) {
                    acc += wi * xi;
                }
                output.push(acc);
            }
            None
        }
    }

    /// Backward through the readout: accumulates parameter gradients and adds
    /// the hidden-state gradient into `dh_top`.
    #[allow(clippy::too_many_arguments)]
    fn readout_backward(
        &self,
        params: &ParamVector,
        h_top: &[f64],
        x: &[f64],
        head: Option<&HeadCache>,
        dy: &[f64],
        grads: &mut ParamVector,
        dh_top: &mut [f64],
    ) {
        let base = self.readout_base();
        let skip_idx = params.len() - 1;
        {
            let gs = grads.tensor_mut(skip_idx);
            for (r, dyr) in dy.iter().enumerate() {
                let row = &mut gs.data[r * gs.cols..(r + 1) * gs.cols];
                for (gi, xi) in row.iter_mut().zip(x) {
                    *gi += dyr * xi;
                }
            }
        }
        if self.readout_hidden > 0 {
            let cacheline = head.expect("cached head pre-activations");
            let k = self.memoryless_outputs;
            if k > 0 {
                let zm = cacheline.mem_z.as_ref().expect("memoryless head cache");
                let m1 = params.tensor(base + 6);
                let dy_mem = &dy[..k];
                let mut dzm = vec![0.0; self.readout_hidden];
                {
                    let gm1 = grads.tensor_mut(base + 6);
                    for (r, dyr) in dy_mem.iter().enumerate() {
                        let row = &mut gm1.data[r * gm1.cols..(r + 1) * gm1.cols];
                        for (c, gi) in row.iter_mut().enumerate() {
                            *gi += dyr * zm[c].tanh();
                        }
                    }
                }
                {
                    let gb1 = grads.tensor_mut(base + 7);
                    for (gi, dyr) in gb1.data.iter_mut().zip(dy_mem) {
                        *gi += dyr;
                    }
                }
                for (r, dyr) in dy_mem.iter().enumerate() {
                    if *dyr == 0.0 {
                        continue;
                    }
                    let row = m1.row(r);
                    for (c, wi) in row.iter().enumerate() {
                        let t = zm[c].tanh();
                        dzm[c] += dyr * wi * (1.0 - t * t);
                    }
                }
                {
                    let gm0 = grads.tensor_mut(base + 4);
                    for (r, dzr) in dzm.iter().enumerate() {
                        if *dzr == 0.0 {
                            continue;
                        }
                        let row = &mut gm0.data[r * gm0.cols..(r + 1) * gm0.cols];
                        for (gi, xi) in row.iter_mut().zip(x) {
                            *gi += dzr * xi;
                        }
                    }
                }
                {
                    let gb0 = grads.tensor_mut(base + 5);
                    for (gi, dzr) in gb0.data.iter_mut().zip(&dzm) {
                        *gi += dzr;
                    }
                }
            }
            let z0 = &cacheline.rec_z;
            let dy_rec = &dy[k..];
            let w1 = params.tensor(base + 2);
            let mut dz0 = vec![0.0; self.readout_hidden];
            {
                let gw1 = grads.tensor_mut(base + 2);
                for (r, dyr) in dy_rec.iter().enumerate() {
                    let row = &mut gw1.data[r * gw1.cols..(r + 1) * gw1.cols];
                    for (c, gi) in row.iter_mut().enumerate() {
                        *gi += dyr * z0[c].max(0.0);
                    }
                }
            }
            {
                let gb1 = grads.tensor_mut(base + 3);
                for (gi, dyr) in gb1.data.iter_mut().zip(dy_rec) {
                    *gi += dyr;
                }
            }
            for (r, dyr) in dy_rec.iter().enumerate() {
                if *dyr == 0.0 {
                    continue;
                }
                let row = w1.row(r);
                for (c, wi) in row.iter().enumerate() {
                    if z0[c] > 0.0 {
                        dz0[c] += dyr * wi;
                    }
                }
            }
            let nu = self.units;
            let w0 = params.tensor(base);
            {
                let gw0 = grads.tensor_mut(base);
                for (r, dzr) in dz0.iter().enumerate() {
                    if *dzr == 0.0 {
                        continue;
                    }
                    let row = &mut gw0.data[r * gw0.cols..(r + 1) * gw0.cols];
                    for (gi, hi) in row[..nu].iter_mut().zip(h_top) {
                        *gi += dzr * hi;
                    }
                    for (gi, xi) in row[nu..].iter_mut().zip(x) {
                        *gi += dzr * xi;
                    }
                }
            }
            {
                let gb0 = grads.tensor_mut(base + 1);
                for (gi, dzr) in gb0.data.iter_mut().zip(&dz0) {
                    *gi += dzr;
                }
            }
            for (r, dzr) in dz0.iter().enumerate() {
                if *dzr == 0.0 {
                    continue;
                }
                let row = w0.row(r);
                for (dhi, wi) in dh_top.iter_mut().zip(&row[..nu]) {
                    *dhi += dzr * wi;
                }
            }
        } else {
            let ow = params.tensor(base);
            {
                let gw = grads.tensor_mut(base);
                for (r, dyr) in dy.iter().enumerate() {
                    let row = &mut gw.data[r * gw.cols..(r + 1) * gw.cols];
                    for (gi, hi) in row.iter_mut().zip(h_top) {
                        *gi += dyr * hi;
                    }
                }
            }
            {
                let gb = grads.tensor_mut(base + 1);
                for (gi, dyr) in gb.data.iter_mut().zip(dy) {
                    *gi += dyr;
                }
            }
            for (r, dyr) in dy.iter().enumerate() {
                let row = ow.row(r);
                for (dhi, wi) in dh_top.iter_mut().zip(row) {
                    *dhi += dyr * wi;
                }
            }
        }
    }
}

/// Hidden-layer pre-activations of the readout heads at one step.
#[derive(Debug, Clone)]
pub struct HeadCache {
    rec_z: Vec<f64>,
    mem_z: Option<Vec<f64>>,
}

/// Per-layer hidden and cell vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenState {
    pub h: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
}

impl HiddenState {
    pub fn zeros(spec: &LstmSpec) -> Self {
        HiddenState {
            h: vec![vec![0.0; spec.units]; spec.layers],
            c: vec![vec![0.0; spec.units]; spec.layers],
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One recorded cell evaluation, kept for the backward pass.
#[derive(Debug, Clone)]
struct CellRecord {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    tanh_c: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LstmCache {
    /// steps x layers cell records.
    cells: Vec<Vec<CellRecord>>,
    /// Top hidden vector per step (readout input).
    top_h: Vec<Vec<f64>>,
    /// Readout hidden pre-activations per step, when a head is configured.
    head_z: Vec<Option<HeadCache>>,
    outputs: Vec<Vec<f64>>,
}

impl LstmCache {
    pub fn outputs(&self) -> &[Vec<f64>] {
        &self.outputs
    }
}

fn gate_preacts(w: &Tensor, b: &Tensor, x: &[f64], h: &[f64], z: &mut Vec<f64>) {
    z.clear();
    let nx = x.len();
    for r in 0..w.rows {
        let row = w.row(r);
        let mut acc = b.data[r];
        for (wi, xi) in row[..nx].iter().zip(x) {
            acc += wi * xi;
        }
        for (wi, hi) in row[nx..].iter().zip(h) {
            acc += wi * hi;
        }
        z.push(acc);
    }
}

/// Advance the stack one step in place, writing the readout into `output`.
pub fn lstm_step(
    spec: &LstmSpec,
    params: &ParamVector,
    input: &[f64],
    state: &mut HiddenState,
    output: &mut Vec<f64>,
) -> Result<(), NnError> {
    if input.len() != spec.input {
        return Err(NnError::ShapeMismatch(format!(
            "lstm expects input width {}, got {}",
            spec.input,
            input.len()
        )));
    }
    let u = spec.units;
    let mut z = Vec::with_capacity(4 * u);
    let mut x: Vec<f64> = input.to_vec();
    for l in 0..spec.layers {
        let w = params.tensor(2 * l);
        let b = params.tensor(2 * l + 1);
        gate_preacts(w, b, &x, &state.h[l], &mut z);
        let (h, c) = (&mut state.h[l], &mut state.c[l]);
        for k in 0..u {
            let i = sigmoid(z[k]);
            let f = sigmoid(z[u + k]);
            let g = z[2 * u + k].tanh();
            let o = sigmoid(z[3 * u + k]);
            let ck = f * c[k] + i * g;
            c[k] = ck;
            h[k] = o * ck.tanh();
        }
        x.clear();
        x.extend_from_slice(h);
    }
    spec.readout(params, &x, input, output);
    Ok(())
}

/// Run a whole input sequence; `h0` defaults to zeros. Returns the per-step
/// readouts and the final hidden state.
pub fn forward_lstm_sequence(
    spec: &LstmSpec,
    params: &ParamVector,
    inputs: &[Vec<f64>],
    h0: Option<&HiddenState>,
) -> Result<(Vec<Vec<f64>>, HiddenState), NnError> {
    spec.check(params)?;
    if inputs.is_empty() {
        return Err(NnError::ShapeMismatch("empty input sequence".into()));
    }
    let mut state = match h0 {
        Some(s) => s.clone(),
        None => HiddenState::zeros(spec),
    };
    let mut outputs = Vec::with_capacity(inputs.len());
    let mut out = Vec::with_capacity(spec.output);
    for x in inputs {
        lstm_step(spec, params, x, &mut state, &mut out)?;
        outputs.push(out.clone());
    }
    Ok((outputs, state))
}

/// Sequence forward that records everything the backward pass needs.
pub fn forward_lstm_cached(
    spec: &LstmSpec,
    params: &ParamVector,
    inputs: &[Vec<f64>],
    h0: Option<&HiddenState>,
) -> Result<LstmCache, NnError> {
    spec.check(params)?;
    if inputs.is_empty() {
        return Err(NnError::ShapeMismatch("empty input sequence".into()));
    }
    let u = spec.units;
    let mut state = match h0 {
        Some(s) => s.clone(),
        None => HiddenState::zeros(spec),
    };
    let mut cells: Vec<Vec<CellRecord>> = Vec::with_capacity(inputs.len());
    let mut top_h: Vec<Vec<f64>> = Vec::with_capacity(inputs.len());
    let mut head_z: Vec<Option<HeadCache>> = Vec::with_capacity(inputs.len());
    let mut outputs: Vec<Vec<f64>> = Vec::with_capacity(inputs.len());
    let mut z = Vec::with_capacity(4 * u);
    for input in inputs {
        if input.len() != spec.input {
            return Err(NnError::ShapeMismatch(format!(
                "lstm expects input width {}, got {}",
                spec.input,
                input.len()
            )));
        }
        let mut step_cells = Vec::with_capacity(spec.layers);
        let mut x: Vec<f64> = input.clone();
        for l in 0..spec.layers {
            let w = params.tensor(2 * l);
            let b = params.tensor(2 * l + 1);
            gate_preacts(w, b, &x, &state.h[l], &mut z);
            let h_prev = state.h[l].clone();
            let c_prev = state.c[l].clone();
            let mut rec = CellRecord {
                x: x.clone(),
                h_prev,
                c_prev,
                i: vec![0.0; u],
                f: vec![0.0; u],
                g: vec![0.0; u],
                o: vec![0.0; u],
                tanh_c: vec![0.0; u],
            };
            for k in 0..u {
                let i = sigmoid(z[k]);
                let f = sigmoid(z[u + k]);
                let g = z[2 * u + k].tanh();
                let o = sigmoid(z[3 * u + k]);
                let ck = f * rec.c_prev[k] + i * g;
                let tc = ck.tanh();
                rec.i[k] = i;
                rec.f[k] = f;
                rec.g[k] = g;
                rec.o[k] = o;
                rec.tanh_c[k] = tc;
                state.c[l][k] = ck;
                state.h[l][k] = o * tc;
            }
            x.clear();
            x.extend_from_slice(&state.h[l]);
            step_cells.push(rec);
        }
        let mut y = Vec::with_capacity(spec.output);
        let hz = spec.readout(params, &x, input, &mut y);
        cells.push(step_cells);
        top_h.push(x);
        head_z.push(hz);
        outputs.push(y);
    }
    Ok(LstmCache {
        cells,
        top_h,
        head_z,
        outputs,
    })
}

/// Backpropagation through time. `d_outputs[t]`, when present, is the loss
/// gradient with respect to the step-`t` readout. Parameter gradients
/// accumulate into `grads`.
pub fn backward_lstm(
    spec: &LstmSpec,
    params: &ParamVector,
    cache: &LstmCache,
    d_outputs: &[Option<Vec<f64>>],
    grads: &mut ParamVector,
) {
    assert_eq!(d_outputs.len(), cache.cells.len(), "d_outputs length mismatch");
    let u = spec.units;
    let steps = cache.cells.len();
    // Gradients flowing backward across time, per layer.
    let mut dh_next = vec![vec![0.0; u]; spec.layers];
    let mut dc_next = vec![vec![0.0; u]; spec.layers];
    for t in (0..steps).rev() {
        // Readout first: contributes to the top layer's dh.
        let mut dh_top = dh_next[spec.layers - 1].clone();
        if let Some(dy) = &d_outputs[t] {
            assert_eq!(dy.len(), spec.output, "readout grad width mismatch");
            spec.readout_backward(
                params,
                &cache.top_h[t],
                &cache.cells[t][0].x,
                cache.head_z[t].as_ref(),
                dy,
                grads,
                &mut dh_top,
            );
        }
        // Walk the stack top-down; dx of a layer feeds the layer below.
        let mut dh_from_above: Option<Vec<f64>> = None;
        for l in (0..spec.layers).rev() {
            let rec = &cache.cells[t][l];
            let mut dh = if l == spec.layers - 1 {
                std::mem::take(&mut dh_top)
            } else {
                dh_next[l].clone()
            };
            if let Some(dx) = &dh_from_above {
                for (a, b) in dh.iter_mut().zip(dx) {
                    *a += b;
                }
            }
            let mut dz = vec![0.0; 4 * u];
            let mut dc_prev = vec![0.0; u];
            for k in 0..u {
                let o = rec.o[k];
                let tc = rec.tanh_c[k];
                let d_o = dh[k] * tc;
                let mut dc = dc_next[l][k] + dh[k] * o * (1.0 - tc * tc);
                let d_i = dc * rec.g[k];
                let d_g = dc * rec.i[k];
                let d_f = dc * rec.c_prev[k];
                dc *= rec.f[k];
                dc_prev[k] = dc;
                dz[k] = d_i * rec.i[k] * (1.0 - rec.i[k]);
                dz[u + k] = d_f * rec.f[k] * (1.0 - rec.f[k]);
                dz[2 * u + k] = d_g * (1.0 - rec.g[k] * rec.g[k]);
                dz[3 * u + k] = d_o * o * (1.0 - o);
            }
            let nx = rec.x.len();
            let w = params.tensor(2 * l);
            {
                let gw = grads.tensor_mut(2 * l);
                for (r, dzr) in dz.iter().enumerate() {
                    if *dzr == 0.0 {
                        continue;
                    }
                    let row = &mut gw.data[r * gw.cols..(r + 1) * gw.cols];
                    for (gi, xi) in row[..nx].iter_mut().zip(&rec.x) {
                        *gi += dzr * xi;
                    }
                    for (gi, hi) in row[nx..].iter_mut().zip(&rec.h_prev) {
                        *gi += dzr * hi;
                    }
                }
            }
            {
                let gb = grads.tensor_mut(2 * l + 1);
                for (gi, dzr) in gb.data.iter_mut().zip(&dz) {
                    *gi += dzr;
                }
            }
            let mut dx = vec![0.0; nx];
            let mut dh_prev = vec![0.0; u];
            for (r, dzr) in dz.iter().enumerate() {
                if *dzr == 0.0 {
                    continue;
                }
                let row = w.row(r);
                for (dxi, wi) in dx.iter_mut().zip(&row[..nx]) {
                    *dxi += dzr * wi;
                }
                for (dhi, wi) in dh_prev.iter_mut().zip(&row[nx..]) {
                    *dhi += dzr * wi;
                }
            }
            dh_next[l] = dh_prev;
            dc_next[l] = dc_prev;
            dh_from_above = Some(dx);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_params_zero_state_give_zero_outputs() {
        let spec = LstmSpec::new(2, 3, 4, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut params = spec.init_params(&mut rng);
        params.fill(0.0);
        let inputs = vec![vec![0.5, -0.5]; 4];
        let (outputs, state) = forward_lstm_sequence(&spec, &params, &inputs, None).unwrap();
        for y in outputs {
            assert!(y.iter().all(|v| *v == 0.0));
        }
        for l in 0..3 {
            assert!(state.h[l].iter().all(|v| *v == 0.0));
            assert!(state.c[l].iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn single_step_sequence_equals_one_cell_application() {
        let spec = LstmSpec::new(3, 2, 5, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let params = spec.init_params(&mut rng);
        let input = vec![0.3, -0.7, 0.2];
        let (outputs, state) = forward_lstm_sequence(&spec, &params, &[input.clone()], None).unwrap();
        let mut manual_state = HiddenState::zeros(&spec);
        let mut out = Vec::new();
        lstm_step(&spec, &params, &input, &mut manual_state, &mut out).unwrap();
        assert_eq!(outputs[0], out);
        assert_eq!(state, manual_state);
    }

    #[test]
    fn forward_is_pure() {
        let spec = LstmSpec::new(4, 2, 8, 3).with_readout_hidden(8);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let params = spec.init_params(&mut rng);
        let inputs: Vec<Vec<f64>> = (0..5)
            .map(|i| (0..4).map(|j| ((i * 4 + j) as f64 * 0.37).sin()).collect())
            .collect();
        let a = forward_lstm_sequence(&spec, &params, &inputs, None).unwrap();
        let b = forward_lstm_sequence(&spec, &params, &inputs, None).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn cached_forward_matches_plain_forward() {
        for hidden in [0, 12] {
            let spec = LstmSpec::new(3, 2, 6, 2).with_readout_hidden(hidden);
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let params = spec.init_params(&mut rng);
            let inputs: Vec<Vec<f64>> = (0..4)
                .map(|i| (0..3).map(|j| ((i + j) as f64 * 0.21).cos()).collect())
                .collect();
            let (plain, _) = forward_lstm_sequence(&spec, &params, &inputs, None).unwrap();
            let cache = forward_lstm_cached(&spec, &params, &inputs, None).unwrap();
            assert_eq!(plain, cache.outputs());
        }
    }

    #[test]
    fn saturated_inputs_stay_finite() {
        let spec = LstmSpec::new(2, 2, 4, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let params = spec.init_params(&mut rng);
        let inputs = vec![vec![1e6, -1e6]; 3];
        let (outputs, _) = forward_lstm_sequence(&spec, &params, &inputs, None).unwrap();
        assert!(outputs.iter().flatten().all(|v| v.is_finite()));
    }
}
