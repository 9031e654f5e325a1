//! Stacked bidirectional LSTM regressor with a scalar affine head, trained
//! by full backpropagation through time and Adam.
//!
//! Parameters live in one flat `Vec<f64>`. Per layer and direction the gate
//! matrix is `(in + H) x 4H` row-major (one row of gate weights per input
//! feature, then per recurrent unit) with gate columns in the order input,
//! forget, cell, output, followed by a `4H` bias.

use std::ops::Range;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NnError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("loss became non-finite at epoch {epoch}")]
    DivergedLoss { epoch: usize },
    #[error("input has shape {got:?}, model expects (_, {expected})")]
    ShapeMismatch { got: (usize, usize), expected: usize },
    #[error("parameter vector has {got} values, expected {expected}")]
    ParameterCount { got: usize, expected: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    /// Mean over time of the concatenated forward and backward states.
    Mean,
    /// Last forward state concatenated with the first backward state.
    Final,
}

impl std::str::FromStr for Pooling {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "mean" => Ok(Pooling::Mean),
            "final" => Ok(Pooling::Final),
            other => Err(format!("unknown pooling `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LstmShape {
    pub input: usize,
    pub hidden: usize,
    pub layers: usize,
    pub pooling: Pooling,
}

impl LstmShape {
    fn layer_input(&self, l: usize) -> usize {
        if l == 0 {
            self.input
        } else {
            2 * self.hidden
        }
    }

    fn block_len(&self, l: usize) -> usize {
        let h = self.hidden;
        4 * h * (self.layer_input(l) + h) + 4 * h
    }

    /// Offset of the weight block for (`layer`, `dir`); bias follows the weights.
    fn block_offset(&self, layer: usize, dir: usize) -> usize {
        let mut off = 0;
        for l in 0..layer {
            off += 2 * self.block_len(l);
        }
        off + dir * self.block_len(layer)
    }

    fn head_offset(&self) -> usize {
        self.block_offset(self.layers, 0)
    }

    pub fn param_count(&self) -> usize {
        self.head_offset() + 2 * self.hidden + 1
    }

    /// Named parameter tensors and their ranges in the flat vector.
    pub fn tensors(&self) -> Vec<(String, Range<usize>)> {
        let h = self.hidden;
        let mut out = Vec::new();
        for l in 0..self.layers {
            for (d, name) in ["fwd", "bwd"].iter().enumerate() {
                let off = self.block_offset(l, d);
                let wlen = 4 * h * (self.layer_input(l) + h);
                out.push((format!("l{l}.{name}.weight"), off..off + wlen));
                out.push((format!("l{l}.{name}.bias"), off + wlen..off + wlen + 4 * h));
            }
        }
        let ho = self.head_offset();
        out.push(("head.weight".into(), ho..ho + 2 * h));
        out.push(("head.bias".into(), ho + 2 * h..ho + 2 * h + 1));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiLstm {
    pub shape: LstmShape,
    pub params: Vec<f64>,
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yv, xv) in y.iter_mut().zip(x) {
        *yv += a * xv;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

// libm tanh is several times slower than exp
fn tanh(x: f64) -> f64 {
    let e = (-2.0 * x.abs()).exp();
    ((1.0 - e) / (1.0 + e)).copysign(x)
}

// Activations of one direction of one layer over a sequence.
struct DirTrace {
    // per step: i, f, g, o (4H)
    gates: Vec<f64>,
    c: Vec<f64>,
    tanh_c: Vec<f64>,
    h: Vec<f64>,
}

struct Trace {
    // per layer: input sequence (T x in), forward and backward traces
    inputs: Vec<Vec<f64>>,
    dirs: Vec<[DirTrace; 2]>,
    pooled: Vec<f64>,
    out: f64,
}

impl BiLstm {
    pub fn new(shape: LstmShape, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = shape.hidden;
        let bound = 1.0 / (h as f64).sqrt();
        let mut params = vec![0.0; shape.param_count()];
        for l in 0..shape.layers {
            for d in 0..2 {
                let off = shape.block_offset(l, d);
                let wlen = 4 * h * (shape.layer_input(l) + h);
                for p in &mut params[off..off + wlen] {
                    *p = rng.random_range(-bound..bound);
                }
                let b = off + wlen;
                for k in 0..4 * h {
                    params[b + k] = if (h..2 * h).contains(&k) { 1.0 } else { 0.0 };
                }
            }
        }
        let ho = shape.head_offset();
        let hb = 1.0 / ((2 * h) as f64).sqrt();
        for p in &mut params[ho..ho + 2 * h] {
            *p = rng.random_range(-hb..hb);
        }
        BiLstm { shape, params }
    }

    pub fn from_params(shape: LstmShape, params: Vec<f64>) -> Result<Self, NnError> {
        if params.len() != shape.param_count() {
            return Err(NnError::ParameterCount {
                got: params.len(),
                expected: shape.param_count(),
            });
        }
        Ok(BiLstm { shape, params })
    }

    fn check(&self, x: &[f64], steps: usize) -> Result<(), NnError> {
        if steps == 0 || x.len() != steps * self.shape.input {
            return Err(NnError::ShapeMismatch {
                got: (steps, if steps == 0 { 0 } else { x.len() / steps }),
                expected: self.shape.input,
            });
        }
        Ok(())
    }

    /// Network output for a time-major `steps x input` sequence.
    pub fn forward(&self, x: &[f64], steps: usize) -> Result<f64, NnError> {
        self.check(x, steps)?;
        Ok(self.run(x, steps).out)
    }

    fn run_dir(&self, l: usize, dir: usize, xs: &[f64], steps: usize) -> DirTrace {
        let h = self.shape.hidden;
        let nin = self.shape.layer_input(l);
        let cols = nin + h;
        let off = self.shape.block_offset(l, dir);
        let w = &self.params[off..off + 4 * h * cols];
        let b = &self.params[off + 4 * h * cols..off + 4 * h * cols + 4 * h];
        let mut tr = DirTrace {
            gates: vec![0.0; steps * 4 * h],
            c: vec![0.0; steps * h],
            tanh_c: vec![0.0; steps * h],
            h: vec![0.0; steps * h],
        };
        let zero = vec![0.0; h];
        let mut z = vec![0.0; 4 * h];
        let mut c_new = vec![0.0; h];
        for s in 0..steps {
            let t = if dir == 0 { s } else { steps - 1 - s };
            let xt = &xs[t * nin..(t + 1) * nin];
            let (h_prev, c_prev) = if s == 0 {
                (&zero[..], &zero[..])
            } else {
                let tp = if dir == 0 { t - 1 } else { t + 1 };
                (&tr.h[tp * h..(tp + 1) * h], &tr.c[tp * h..(tp + 1) * h])
            };
            z.copy_from_slice(b);
            for (k, &xv) in xt.iter().enumerate() {
                if xv != 0.0 {
                    axpy(xv, &w[k * 4 * h..(k + 1) * 4 * h], &mut z);
                }
            }
            for (k, &hv) in h_prev.iter().enumerate() {
                axpy(hv, &w[(nin + k) * 4 * h..(nin + k + 1) * 4 * h], &mut z);
            }
            let gates = &mut tr.gates[t * 4 * h..(t + 1) * 4 * h];
            for k in 0..h {
                let i = sigmoid(z[k]);
                let f = sigmoid(z[h + k]);
                let g = tanh(z[2 * h + k]);
                let o = sigmoid(z[3 * h + k]);
                gates[k] = i;
                gates[h + k] = f;
                gates[2 * h + k] = g;
                gates[3 * h + k] = o;
                c_new[k] = f * c_prev[k] + i * g;
            }
            for k in 0..h {
                let tc = tanh(c_new[k]);
                tr.c[t * h + k] = c_new[k];
                tr.tanh_c[t * h + k] = tc;
                tr.h[t * h + k] = gates[3 * h + k] * tc;
            }
        }
        tr
    }

    fn run(&self, x: &[f64], steps: usize) -> Trace {
        let h = self.shape.hidden;
        let mut inputs = Vec::with_capacity(self.shape.layers);
        let mut dirs = Vec::with_capacity(self.shape.layers);
        let mut cur = x.to_vec();
        for l in 0..self.shape.layers {
            let f = self.run_dir(l, 0, &cur, steps);
            let b = self.run_dir(l, 1, &cur, steps);
            let mut next = vec![0.0; steps * 2 * h];
            for t in 0..steps {
                next[t * 2 * h..t * 2 * h + h].copy_from_slice(&f.h[t * h..(t + 1) * h]);
                next[t * 2 * h + h..(t + 1) * 2 * h].copy_from_slice(&b.h[t * h..(t + 1) * h]);
            }
            inputs.push(std::mem::replace(&mut cur, next));
            dirs.push([f, b]);
        }
        let pooled = match self.shape.pooling {
            Pooling::Mean => {
                let mut p = vec![0.0; 2 * h];
                for t in 0..steps {
                    for (k, v) in p.iter_mut().enumerate() {
                        *v += cur[t * 2 * h + k];
                    }
                }
                p.iter_mut().for_each(|v| *v /= steps as f64);
                p
            }
            Pooling::Final => {
                let mut p = cur[(steps - 1) * 2 * h..(steps - 1) * 2 * h + h].to_vec();
                p.extend_from_slice(&cur[h..2 * h]);
                p
            }
        };
        let ho = self.shape.head_offset();
        let out = self.params[ho + 2 * h]
            + pooled
                .iter()
                .zip(&self.params[ho..ho + 2 * h])
                .map(|(a, b)| a * b)
                .sum::<f64>();
        Trace {
            inputs,
            dirs,
            pooled,
            out,
        }
    }

    /// Squared error `(out - target)^2`; its gradient is added into `grad`.
    pub fn loss_and_grad(
        &self,
        x: &[f64],
        steps: usize,
        target: f64,
        grad: &mut [f64],
    ) -> Result<f64, NnError> {
        self.check(x, steps)?;
        let h = self.shape.hidden;
        let tr = self.run(x, steps);
        let err = tr.out - target;
        let dout = 2.0 * err;
        let ho = self.shape.head_offset();
        for k in 0..2 * h {
            grad[ho + k] += dout * tr.pooled[k];
        }
        grad[ho + 2 * h] += dout;
        // gradient w.r.t. the top layer output sequence (T x 2H)
        let mut dseq = vec![0.0; steps * 2 * h];
        match self.shape.pooling {
            Pooling::Mean => {
                let scale = dout / steps as f64;
                for t in 0..steps {
                    for k in 0..2 * h {
                        dseq[t * 2 * h + k] = scale * self.params[ho + k];
                    }
                }
            }
            Pooling::Final => {
                for k in 0..h {
                    dseq[(steps - 1) * 2 * h + k] = dout * self.params[ho + k];
                    dseq[h + k] = dout * self.params[ho + h + k];
                }
            }
        }
        for l in (0..self.shape.layers).rev() {
            let nin = self.shape.layer_input(l);
            // the network input needs no gradient
            let mut dx = if l > 0 { vec![0.0; steps * nin] } else { Vec::new() };
            for d in 0..2 {
                let sink = if l > 0 { Some(&mut dx[..]) } else { None };
                self.backward_dir(l, d, &tr.inputs[l], &tr.dirs[l][d], &dseq, steps, grad, sink);
            }
            dseq = dx;
        }
        Ok(err * err)
    }

    #[allow(clippy::too_many_arguments)]
    fn backward_dir(
        &self,
        l: usize,
        dir: usize,
        xs: &[f64],
        tr: &DirTrace,
        dseq: &[f64],
        steps: usize,
        grad: &mut [f64],
        mut dx: Option<&mut [f64]>,
    ) {
        let h = self.shape.hidden;
        let nin = self.shape.layer_input(l);
        let cols = nin + h;
        let off = self.shape.block_offset(l, dir);
        let w = &self.params[off..off + 4 * h * cols];
        let (gw, gb) = grad[off..off + 4 * h * cols + 4 * h].split_at_mut(4 * h * cols);
        let mut dh_next = vec![0.0; h];
        let mut dc_next = vec![0.0; h];
        let mut dz = vec![0.0; 4 * h];
        let zero = vec![0.0; h];
        for s in (0..steps).rev() {
            let t = if dir == 0 { s } else { steps - 1 - s };
            let (h_prev, c_prev) = if s == 0 {
                (&zero[..], &zero[..])
            } else {
                let tp = if dir == 0 { t - 1 } else { t + 1 };
                (&tr.h[tp * h..(tp + 1) * h], &tr.c[tp * h..(tp + 1) * h])
            };
            let gates = &tr.gates[t * 4 * h..(t + 1) * 4 * h];
            let doff = t * 2 * h + dir * h;
            for k in 0..h {
                let dh = dseq[doff + k] + dh_next[k];
                let i = gates[k];
                let f = gates[h + k];
                let g = gates[2 * h + k];
                let o = gates[3 * h + k];
                let tc = tr.tanh_c[t * h + k];
                let dc = dh * o * (1.0 - tc * tc) + dc_next[k];
                dz[k] = dc * g * i * (1.0 - i);
                dz[h + k] = dc * c_prev[k] * f * (1.0 - f);
                dz[2 * h + k] = dc * i * (1.0 - g * g);
                dz[3 * h + k] = dh * tc * o * (1.0 - o);
                dc_next[k] = dc * f;
            }
            let xt = &xs[t * nin..(t + 1) * nin];
            axpy(1.0, &dz, gb);
            for (k, &xv) in xt.iter().enumerate() {
                if xv != 0.0 {
                    axpy(xv, &dz, &mut gw[k * 4 * h..(k + 1) * 4 * h]);
                }
            }
            for (k, &hv) in h_prev.iter().enumerate() {
                axpy(hv, &dz, &mut gw[(nin + k) * 4 * h..(nin + k + 1) * 4 * h]);
                dh_next[k] = dot(&w[(nin + k) * 4 * h..(nin + k + 1) * 4 * h], &dz);
            }
            if let Some(dx) = dx.as_deref_mut() {
                let dxt = &mut dx[t * nin..(t + 1) * nin];
                for (k, v) in dxt.iter_mut().enumerate() {
                    *v += dot(&w[k * 4 * h..(k + 1) * 4 * h], &dz);
                }
            }
        }
    }
}

/// Adam optimizer state over a flat parameter vector.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n: usize, lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t);
        let bc2 = 1.0 - self.beta2.powi(self.t);
        for k in 0..params.len() {
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * grad[k];
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * grad[k] * grad[k];
            let mh = self.m[k] / bc1;
            let vh = self.v[k] / bc2;
            params[k] -= self.lr * mh / (vh.sqrt() + self.eps);
        }
    }
}

/// Rescales `grad` so its Euclidean norm is at most `max_norm`.
pub fn clip_global_norm(grad: &mut [f64], max_norm: f64) -> f64 {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        grad.iter_mut().for_each(|g| *g *= s);
    }
    norm
}

/// Sequence regression samples addressed by index.
pub trait SequenceData {
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    /// Writes the time-major input of sample `i` into `buf` and returns its step count.
    fn input(&self, i: usize, buf: &mut Vec<f64>) -> usize;
    fn target(&self, i: usize) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub patience: usize,
    pub val_fraction: f64,
    pub clip: f64,
    /// Multiplier applied to the learning rate after every epoch.
    pub lr_decay: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-3,
            epochs: 50,
            batch_size: 32,
            patience: 5,
            val_fraction: 0.1,
            clip: 5.0,
            lr_decay: 1.0,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub best_epoch: usize,
}

/// Target standardization stored with a trained regressor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: f64,
    pub std: f64,
}

impl Scaler {
    pub fn fit(values: impl Iterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.collect();
        let n = v.len().max(1) as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let std = if var.sqrt() > 1e-9 { var.sqrt() } else { 1.0 };
        Scaler { mean, std }
    }

    pub fn scale(&self, y: f64) -> f64 {
        (y - self.mean) / self.std
    }

    pub fn unscale(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }
}

/// Trains `model` on standardized targets. The last `val_fraction` of the
/// samples (in index order) is held out for early stopping; the parameters
/// with the best monitored loss are kept.
pub fn train_regressor(
    model: &mut BiLstm,
    data: &dyn SequenceData,
    cfg: &TrainConfig,
) -> Result<(Scaler, TrainReport), NnError> {
    let n = data.len();
    if n == 0 {
        return Err(NnError::EmptyTrainingSet);
    }
    let n_val = ((n as f64) * cfg.val_fraction).floor() as usize;
    let n_val = if n - n_val == 0 { 0 } else { n_val };
    let n_train = n - n_val;
    let scaler = Scaler::fit((0..n_train).map(|i| data.target(i)));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..n_train).collect();
    let mut opt = Adam::new(model.params.len(), cfg.lr);
    let mut grad = vec![0.0; model.params.len()];
    let mut buf = Vec::new();
    let mut report = TrainReport::default();
    let mut best = (f64::INFINITY, model.params.clone());
    let mut since_best = 0;
    let batch = cfg.batch_size.max(1);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(batch) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut loss = 0.0;
            for &i in chunk {
                let steps = data.input(i, &mut buf);
                loss += model.loss_and_grad(&buf, steps, scaler.scale(data.target(i)), &mut grad)?;
            }
            if !loss.is_finite() {
                return Err(NnError::DivergedLoss { epoch });
            }
            total += loss;
            let inv = 1.0 / chunk.len() as f64;
            grad.iter_mut().for_each(|g| *g *= inv);
            clip_global_norm(&mut grad, cfg.clip);
            opt.step(&mut model.params, &grad);
        }
        opt.lr *= cfg.lr_decay;
        let train_loss = total / n_train as f64;
        report.train_loss.push(train_loss);
        let monitored = if n_val > 0 {
            let mut vl = 0.0;
            for i in n_train..n {
                let steps = data.input(i, &mut buf);
                let e = model.forward(&buf, steps)? - scaler.scale(data.target(i));
                vl += e * e;
            }
            let vl = vl / n_val as f64;
            report.val_loss.push(vl);
            vl
        } else {
            train_loss
        };
        if !monitored.is_finite() {
            return Err(NnError::DivergedLoss { epoch });
        }
        if monitored < best.0 {
            best = (monitored, model.params.clone());
            report.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if n_val > 0 && since_best >= cfg.patience {
                break;
            }
        }
    }
    model.params = best.1;
    Ok((scaler, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Toy {
        xs: Vec<Vec<f64>>,
        ys: Vec<f64>,
        steps: usize,
    }

    impl SequenceData for Toy {
        fn len(&self) -> usize {
            self.ys.len()
        }
        fn input(&self, i: usize, buf: &mut Vec<f64>) -> usize {
            buf.clear();
            buf.extend_from_slice(&self.xs[i]);
            self.steps
        }
        fn target(&self, i: usize) -> f64 {
            self.ys[i]
        }
    }

    fn shape(pooling: Pooling, layers: usize) -> LstmShape {
        LstmShape {
            input: 2,
            hidden: 4,
            layers,
            pooling,
        }
    }

    #[test]
    fn tensors_tile_the_parameter_vector() {
        let s = shape(Pooling::Mean, 2);
        let t = s.tensors();
        let mut next = 0;
        for (_, r) in &t {
            assert_eq!(r.start, next);
            next = r.end;
        }
        assert_eq!(next, s.param_count());
    }

    #[test]
    fn forget_bias_starts_at_one() {
        let s = shape(Pooling::Mean, 1);
        let m = BiLstm::new(s, 1);
        let (_, bias) = &s.tensors()[1];
        let b = &m.params[bias.clone()];
        assert!(b[4..8].iter().all(|&v| v == 1.0));
        assert!(b[..4].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for pooling in [Pooling::Mean, Pooling::Final] {
            let mut m = BiLstm::new(shape(pooling, 2), 3);
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            for p in m.params.iter_mut() {
                *p += rng.random_range(-0.3..0.3);
            }
            let x: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut g = vec![0.0; m.params.len()];
            m.loss_and_grad(&x, 8, 0.7, &mut g).unwrap();
            let eps = 1e-5;
            for k in 0..m.params.len() {
                let orig = m.params[k];
                m.params[k] = orig + eps;
                let lp = (m.forward(&x, 8).unwrap() - 0.7).powi(2);
                m.params[k] = orig - eps;
                let lm = (m.forward(&x, 8).unwrap() - 0.7).powi(2);
                m.params[k] = orig;
                let num = (lp - lm) / (2.0 * eps);
                assert!((num - g[k]).abs() < 1e-6 * (1.0 + num.abs()), "{k}: {num} vs {}", g[k]);
            }
        }
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let m = BiLstm::new(shape(Pooling::Mean, 1), 0);
        assert!(matches!(m.forward(&[0.0; 5], 2), Err(NnError::ShapeMismatch { .. })));
        assert!(matches!(m.forward(&[], 0), Err(NnError::ShapeMismatch { .. })));
    }

    #[test]
    fn adam_minimizes_a_quadratic() {
        let mut p = vec![3.0, -2.0];
        let mut opt = Adam::new(2, 0.1);
        for _ in 0..500 {
            let g = vec![2.0 * p[0], 2.0 * p[1]];
            opt.step(&mut p, &g);
        }
        assert!(p.iter().all(|v| v.abs() < 1e-2));
    }

    #[test]
    fn clipping_bounds_the_norm() {
        let mut g = vec![3.0, 4.0];
        assert_eq!(clip_global_norm(&mut g, 1.0), 5.0);
        assert!((g[0] - 0.6).abs() < 1e-12 && (g[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn learns_a_simple_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..200 {
            let x: Vec<f64> = (0..12).map(|_| f64::from(rng.random_range(0..2u8))).collect();
            ys.push(x.iter().step_by(2).sum::<f64>());
            xs.push(x);
        }
        let data = Toy { xs, ys, steps: 6 };
        let mut m = BiLstm::new(
            LstmShape {
                input: 2,
                hidden: 8,
                layers: 1,
                pooling: Pooling::Mean,
            },
            1,
        );
        let cfg = TrainConfig {
            lr: 1e-2,
            epochs: 60,
            batch_size: 16,
            patience: 60,
            ..TrainConfig::default()
        };
        let (sc, rep) = train_regressor(&mut m, &data, &cfg).unwrap();
        assert!(rep.val_loss.iter().cloned().fold(f64::INFINITY, f64::min) < 0.05);
        let mut buf = Vec::new();
        let steps = data.input(0, &mut buf);
        let pred = sc.unscale(m.forward(&buf, steps).unwrap());
        assert!((pred - data.ys[0]).abs() < 0.5);
    }

    #[test]
    fn seeded_training_is_reproducible() {
        let data = Toy {
            xs: (0..20).map(|i| vec![f64::from(i % 2), 1.0, 0.0, f64::from(i % 3)]).collect(),
            ys: (0..20).map(f64::from).collect(),
            steps: 2,
        };
        let cfg = TrainConfig {
            epochs: 5,
            ..TrainConfig::default()
        };
        let run = || {
            let mut m = BiLstm::new(shape(Pooling::Final, 1), 9);
            let (_, r) = train_regressor(&mut m, &data, &cfg).unwrap();
            (m.params, r)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn empty_set_is_an_error() {
        let data = Toy {
            xs: vec![],
            ys: vec![],
            steps: 1,
        };
        let mut m = BiLstm::new(shape(Pooling::Mean, 1), 0);
        assert_eq!(
            train_regressor(&mut m, &data, &TrainConfig::default()).unwrap_err(),
            NnError::EmptyTrainingSet
        );
    }
}
