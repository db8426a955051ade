use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::arch::{default_arch, plan, LayerSpec, Op, Plan};
use super::kernels::{add_assign, axpy, col2im, dot, im2col};
use super::scalar::Scalar;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::nepdf::{Label, NepdfMatrix, NepdfOptions};
use crate::rng;

/// Floor applied to probabilities inside the log of the loss.
pub const PROB_FLOOR: f64 = 1e-12;

/// What a network's classes mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// Classes `[1, -1, 0]`.
    ThreeClass,
    /// Classes `[1, -1]`; trained on directed pairs only.
    Direction,
    /// Classes `[dependent, independent]`.
    Dependence,
}

impl Task {
    pub fn n_classes(self) -> usize {
        match self {
            Task::ThreeClass => 3,
            Task::Direction | Task::Dependence => 2,
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Task::ThreeClass => 0,
            Task::Direction => 1,
            Task::Dependence => 2,
        }
    }

    pub(crate) fn from_code(c: u8) -> Result<Self> {
        match c {
            0 => Ok(Task::ThreeClass),
            1 => Ok(Task::Direction),
            2 => Ok(Task::Dependence),
            c => Err(Error::MalformedModel(format!("unknown task code {c}"))),
        }
    }

    /// Class index a label trains towards.
    pub fn target(self, label: Label) -> Result<usize> {
        match (self, label) {
            (Task::ThreeClass, l) => Ok(l.class_index()),
            (Task::Direction, Label::Causal) => Ok(0),
            (Task::Direction, Label::Reverse) => Ok(1),
            (Task::Direction, Label::Independent) => {
                Err(Error::LabelOutOfRange { label: 0, n_classes: 2 })
            }
            (Task::Dependence, l) => Ok(if l.is_dependent() { 0 } else { 1 }),
        }
    }

    /// Direction label for a predicted class; `None` for the dependence task.
    pub fn label(self, class: usize) -> Option<Label> {
        match self {
            Task::ThreeClass => Label::from_class_index(class),
            Task::Direction => [Label::Causal, Label::Reverse].get(class).copied(),
            Task::Dependence => None,
        }
    }
}

/// Everything a model file carries besides the weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelMeta {
    pub task: Task,
    pub nepdf: NepdfOptions,
    /// Digest of the configuration the model was trained from.
    pub provenance: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network<T: Scalar> {
    pub(crate) specs: Vec<LayerSpec>,
    pub(crate) plans: Vec<Plan>,
    pub(crate) params: Vec<T>,
    pub(crate) input_size: usize,
    pub(crate) seed: u64,
    pub meta: ModelMeta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub probs: Vec<f64>,
    pub class: usize,
    /// Direction label for three-class and direction models.
    pub label: Option<Label>,
}

/// Forward activations of one sample kept for the backward pass.
struct Trace<T> {
    /// `acts[i]` is the input of layer `i`; the last entry holds the logits.
    acts: Vec<Vec<T>>,
    cols: Vec<Vec<T>>,
    argmax: Vec<Vec<u32>>,
}

impl<T: Scalar> Network<T> {
    /// Builds a network for `k x k` inputs. `arch = None` selects
    /// [`default_arch`]. Weights are uniform in `±sqrt(6 / fan_in)`, biases 0.
    pub fn new(k: usize, task: Task, arch: Option<&[LayerSpec]>, seed: u64) -> Result<Self> {
        if k < 4 && arch.is_none() {
            return Err(Error::BadArchitecture(format!("input size {k} is too small for the default network")));
        }
        let specs = arch.map(<[LayerSpec]>::to_vec).unwrap_or_else(default_arch);
        let (plans, n_params) = plan(&specs, k, task.n_classes())?;
        let mut params = vec![T::zero(); n_params];
        let mut r = rng::seeded(seed);
        for p in plans.iter().filter(|p| p.has_params()) {
            let bound = (6.0 / p.fan_in() as f64).sqrt();
            for w in &mut params[p.w_off..p.w_off + p.w_len] {
                *w = T::from_f64_lossy(r.random_range(-bound..bound));
            }
        }
        Ok(Network {
            specs,
            plans,
            params,
            input_size: k,
            seed,
            meta: ModelMeta { task, nepdf: NepdfOptions { k, ..Default::default() }, provenance: String::new() },
        })
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn n_classes(&self) -> usize {
        self.meta.task.n_classes()
    }

    pub fn task(&self) -> Task {
        self.meta.task
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn specs(&self) -> &[LayerSpec] {
        &self.specs
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    /// `(name, offset, len)` of every weight and bias array in layer order.
    pub fn param_arrays(&self) -> Vec<(String, usize, usize)> {
        let mut out = Vec::new();
        for (i, (p, s)) in self.plans.iter().zip(&self.specs).enumerate() {
            if p.has_params() {
                let kind = s.to_string();
                let kind = kind.split(':').next().unwrap_or("layer");
                out.push((format!("layer{i}.{kind}.weight"), p.w_off, p.w_len));
                out.push((format!("layer{i}.{kind}.bias"), p.b_off, p.b_len));
            }
        }
        out
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        let want = self.input_size * self.input_size;
        if input.len() != want {
            return Err(Error::ShapeMismatch { expected: want, got: input.len() });
        }
        Ok(())
    }

    fn forward_trace(&self, input: &[f64]) -> Trace<T> {
        let mut acts: Vec<Vec<T>> = Vec::with_capacity(self.plans.len() + 1);
        let mut cols = Vec::new();
        let mut argmax = Vec::new();
        acts.push(input.iter().map(|&v| T::from_f64_lossy(v)).collect());
        for p in &self.plans {
            let x = acts.last().expect("input pushed");
            let w = &self.params[p.w_off..p.w_off + p.w_len];
            let b = &self.params[p.b_off..p.b_off + p.b_len];
            let out = match p.op {
                Op::Conv { in_c, out_c, h, w: wd, relu } => {
                    let hw = h * wd;
                    let r = in_c * 9;
                    let mut col = vec![T::zero(); r * hw];
                    im2col(x, in_c, h, wd, &mut col);
                    let mut out = vec![T::zero(); out_c * hw];
                    for oc in 0..out_c {
                        let o = &mut out[oc * hw..(oc + 1) * hw];
                        o.fill(b[oc]);
                        for (ri, &wv) in w[oc * r..(oc + 1) * r].iter().enumerate() {
                            axpy(o, wv, &col[ri * hw..(ri + 1) * hw]);
                        }
                    }
                    if relu {
                        relu_inplace(&mut out);
                    }
                    cols.push(col);
                    out
                }
                Op::Pool { c, h, w: wd } => {
                    let (oh, ow) = (h / 2, wd / 2);
                    let mut out = vec![T::zero(); c * oh * ow];
                    let mut idx = vec![0u32; c * oh * ow];
                    for ch in 0..c {
                        for oy in 0..oh {
                            for ox in 0..ow {
                                let base = ch * h * wd + 2 * oy * wd + 2 * ox;
                                let mut best = base;
                                for cand in [base + 1, base + wd, base + wd + 1] {
                                    if x[cand] > x[best] {
                                        best = cand;
                                    }
                                }
                                let o = ch * oh * ow + oy * ow + ox;
                                out[o] = x[best];
                                idx[o] = best as u32;
                            }
                        }
                    }
                    argmax.push(idx);
                    out
                }
                Op::Flatten => x.clone(),
                Op::Dense { n_in, n_out, relu } => {
                    let mut out: Vec<T> = (0..n_out).map(|j| b[j] + dot(&w[j * n_in..(j + 1) * n_in], x)).collect();
                    if relu {
                        relu_inplace(&mut out);
                    }
                    out
                }
                Op::Output { n_in, n_out } => (0..n_out).map(|j| b[j] + dot(&w[j * n_in..(j + 1) * n_in], x)).collect(),
            };
            acts.push(out);
        }
        Trace { acts, cols, argmax }
    }

    /// Accumulates the gradient of `-ln p[target]` for one sample into `grad`
    /// (which must be zeroed by the caller) and returns the sample loss.
    fn backward_sample(&self, input: &[f64], target: usize, grad: &mut [T]) -> f64 {
        let trace = self.forward_trace(input);
        let logits: Vec<f64> = trace.acts.last().expect("logits").iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect();
        let probs = probabilities(&logits);
        let loss = -probs[target].max(PROB_FLOOR).ln();

        let mut delta: Vec<T> = if logits.len() == 1 {
            let y = if target == 0 { 1.0 } else { 0.0 };
            vec![T::from_f64_lossy(probs[0] - y)]
        } else {
            probs.iter().enumerate().map(|(i, &p)| T::from_f64_lossy(p - if i == target { 1.0 } else { 0.0 })).collect()
        };

        let mut col_i = trace.cols.len();
        let mut pool_i = trace.argmax.len();
        for (li, p) in self.plans.iter().enumerate().rev() {
            let x = &trace.acts[li];
            let y = &trace.acts[li + 1];
            let need_dx = li > 0;
            let (wg, bg) = {
                let (head, tail) = grad.split_at_mut(p.b_off);
                (&mut head[p.w_off..], &mut tail[..p.b_len])
            };
            let w = &self.params[p.w_off..p.w_off + p.w_len];
            delta = match p.op {
                Op::Conv { in_c, out_c, h, w: wd, relu } => {
                    col_i -= 1;
                    let col = &trace.cols[col_i];
                    let hw = h * wd;
                    let r = in_c * 9;
                    if relu {
                        mask_relu(&mut delta, y);
                    }
                    let mut dcol = if need_dx { vec![T::zero(); r * hw] } else { Vec::new() };
                    for oc in 0..out_c {
                        let d = &delta[oc * hw..(oc + 1) * hw];
                        bg[oc] = bg[oc] + d.iter().copied().sum::<T>();
                        for ri in 0..r {
                            let g = &mut wg[oc * r + ri];
                            *g = *g + dot(d, &col[ri * hw..(ri + 1) * hw]);
                            if need_dx {
                                axpy(&mut dcol[ri * hw..(ri + 1) * hw], w[oc * r + ri], d);
                            }
                        }
                    }
                    if need_dx {
                        let mut dx = vec![T::zero(); in_c * hw];
                        col2im(&dcol, in_c, h, wd, &mut dx);
                        dx
                    } else {
                        Vec::new()
                    }
                }
                Op::Pool { .. } => {
                    pool_i -= 1;
                    let mut dx = vec![T::zero(); p.in_len];
                    for (o, &src) in trace.argmax[pool_i].iter().enumerate() {
                        dx[src as usize] = dx[src as usize] + delta[o];
                    }
                    dx
                }
                Op::Flatten => delta,
                Op::Dense { n_in, .. } | Op::Output { n_in, .. } => {
                    if matches!(p.op, Op::Dense { relu: true, .. }) {
                        mask_relu(&mut delta, y);
                    }
                    add_assign(bg, &delta);
                    let mut dx = if need_dx { vec![T::zero(); n_in] } else { Vec::new() };
                    for (j, &d) in delta.iter().enumerate() {
                        axpy(&mut wg[j * n_in..(j + 1) * n_in], d, x);
                        if need_dx {
                            axpy(&mut dx, d, &w[j * n_in..(j + 1) * n_in]);
                        }
                    }
                    dx
                }
            };
        }
        loss
    }

    /// Class probabilities for each input. Inputs are `k*k` row-major images.
    pub fn forward_batch(&self, inputs: &[&[f64]], exec: Exec) -> Result<Vec<Vec<f64>>> {
        for x in inputs {
            self.check_input(x)?;
        }
        Ok(exec.map(inputs, |x| {
            let trace = self.forward_trace(x);
            let logits: Vec<f64> = trace.acts.last().expect("logits").iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect();
            probabilities(&logits)
        }))
    }

    pub fn forward(&self, inputs: &[&[f64]]) -> Result<Vec<Vec<f64>>> {
        self.forward_batch(inputs, Exec::default())
    }

    /// Mean cross-entropy over the batch and its gradient with respect to
    /// every parameter. Per-sample gradients are summed in input order, so
    /// the result does not depend on `exec`.
    pub fn batch_gradient(&self, inputs: &[&[f64]], targets: &[usize], exec: Exec) -> Result<(f64, Vec<T>)> {
        if inputs.len() != targets.len() {
            return Err(Error::ShapeMismatch { expected: inputs.len(), got: targets.len() });
        }
        if inputs.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for x in inputs {
            self.check_input(x)?;
        }
        let n_classes = self.n_classes();
        if let Some(&t) = targets.iter().find(|&&t| t >= n_classes) {
            return Err(Error::LabelOutOfRange { label: t as i64, n_classes });
        }
        let n = self.params.len();
        let mut total = vec![T::zero(); n];
        let mut loss = 0.0;
        match exec {
            Exec::Sequential => {
                let mut g = vec![T::zero(); n];
                for (x, &t) in inputs.iter().zip(targets) {
                    g.fill(T::zero());
                    loss += self.backward_sample(x, t, &mut g);
                    add_assign(&mut total, &g);
                }
            }
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                let idx: Vec<usize> = (0..inputs.len()).collect();
                let per = exec.map(&idx, |&i| {
                    let mut g = vec![T::zero(); n];
                    let l = self.backward_sample(inputs[i], targets[i], &mut g);
                    (l, g)
                });
                for (l, g) in per {
                    loss += l;
                    add_assign(&mut total, &g);
                }
            }
        }
        let scale = T::from_f64_lossy(1.0 / inputs.len() as f64);
        total.iter_mut().for_each(|v| *v = *v * scale);
        Ok((loss / inputs.len() as f64, total))
    }

    /// Mean cross-entropy without gradients.
    pub fn batch_loss(&self, inputs: &[&[f64]], targets: &[usize], exec: Exec) -> Result<f64> {
        let probs = self.forward_batch(inputs, exec)?;
        loss(&probs, targets)
    }

    pub fn predict(&self, m: &NepdfMatrix) -> Result<Prediction> {
        Ok(self.predict_batch(&[m], Exec::Sequential)?.remove(0))
    }

    pub fn predict_batch(&self, ms: &[&NepdfMatrix], exec: Exec) -> Result<Vec<Prediction>> {
        let inputs: Vec<&[f64]> = ms.iter().map(|m| m.values.as_slice()).collect();
        let task = self.task();
        Ok(self
            .forward_batch(&inputs, exec)?
            .into_iter()
            .map(|probs| {
                let class = argmax(&probs);
                Prediction { label: task.label(class), probs, class }
            })
            .collect())
    }
}

fn relu_inplace<T: Scalar>(v: &mut [T]) {
    for x in v.iter_mut() {
        if *x < T::zero() {
            *x = T::zero();
        }
    }
}

/// Zeroes gradient entries whose ReLU output was not positive.
fn mask_relu<T: Scalar>(delta: &mut [T], out: &[T]) {
    for (d, &o) in delta.iter_mut().zip(out) {
        if o <= T::zero() {
            *d = T::zero();
        }
    }
}

/// Softmax over several logits, or `(p, 1 - p)` for a single logistic logit.
pub fn probabilities(logits: &[f64]) -> Vec<f64> {
    if logits.len() == 1 {
        let z = logits[0];
        let p = if z >= 0.0 { 1.0 / (1.0 + (-z).exp()) } else { z.exp() / (1.0 + z.exp()) };
        return vec![p, 1.0 - p];
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let s: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / s).collect()
}

/// Mean over the batch of `-ln max(p[target], 1e-12)`.
pub fn loss(probs: &[Vec<f64>], targets: &[usize]) -> Result<f64> {
    if probs.len() != targets.len() {
        return Err(Error::ShapeMismatch { expected: probs.len(), got: targets.len() });
    }
    if probs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut total = 0.0;
    for (p, &t) in probs.iter().zip(targets) {
        let pt = *p.get(t).ok_or(Error::ShapeMismatch { expected: p.len(), got: t + 1 })?;
        total += -pt.max(PROB_FLOOR).ln();
    }
    Ok(total / probs.len() as f64)
}

/// First index of the maximum.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}
