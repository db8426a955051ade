use serde::{Deserialize, Serialize};

use super::network::{argmax, Network};
use super::scalar::Scalar;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub validation_fraction: f64,
    /// Epochs without validation improvement before stopping; 0 disables
    /// early stopping.
    pub early_stop_patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            momentum: 0.9,
            batch_size: 32,
            epochs: 30,
            validation_fraction: 0.1,
            early_stop_patience: 5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum must lie in [0, 1), got {}", self.momentum));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return bad("batch_size and epochs must be positive".into());
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return bad(format!("validation_fraction must lie in (0, 1), got {}", self.validation_fraction));
        }
        Ok(())
    }
}

/// One training example. Examples sharing a `group` are kept on the same
/// side of the train/validation split.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub input: &'a [f64],
    pub target: usize,
    pub group: &'a str,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean minibatch loss over the epoch.
    pub train_loss: f64,
    pub val_loss: Option<f64>,
    pub val_accuracy: Option<f64>,
}

/// Splits sample indices into (train, validation) by group.
fn split(samples: &[Sample], cfg: &TrainConfig) -> (Vec<usize>, Vec<usize>) {
    let mut groups: Vec<&str> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for s in samples {
        if seen.insert(s.group) {
            groups.push(s.group);
        }
    }
    if groups.len() < 2 {
        return ((0..samples.len()).collect(), Vec::new());
    }
    rng::shuffle(&mut groups, &mut rng::stream(cfg.seed, 1));
    let n_val = ((groups.len() as f64 * cfg.validation_fraction).round() as usize).clamp(1, groups.len() - 1);
    let val: std::collections::HashSet<&str> = groups[..n_val].iter().copied().collect();
    (0..samples.len()).partition(|&i| !val.contains(samples[i].group))
}

fn evaluate<T: Scalar>(net: &Network<T>, samples: &[Sample], idx: &[usize], exec: Exec) -> Result<(f64, f64)> {
    let inputs: Vec<&[f64]> = idx.iter().map(|&i| samples[i].input).collect();
    let targets: Vec<usize> = idx.iter().map(|&i| samples[i].target).collect();
    let probs = net.forward_batch(&inputs, exec)?;
    let loss = super::network::loss(&probs, &targets)?;
    let correct = probs.iter().zip(&targets).filter(|(p, &t)| argmax(p) == t).count();
    Ok((loss, correct as f64 / targets.len() as f64))
}

/// Minibatch SGD with momentum (`v <- m v - lr g; w <- w + v`). Training
/// order is reshuffled every epoch from `cfg.seed`. With validation data and
/// a nonzero patience, training stops once validation loss has not improved
/// for `patience` epochs and the best-validation parameters are restored.
pub fn train<T: Scalar>(net: &mut Network<T>, samples: &[Sample], cfg: &TrainConfig, exec: Exec) -> Result<Vec<EpochStats>> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n_classes = net.n_classes();
    if let Some(s) = samples.iter().find(|s| s.target >= n_classes) {
        return Err(Error::LabelOutOfRange { label: s.target as i64, n_classes });
    }
    let (mut order, val) = split(samples, cfg);
    let mut shuffler = rng::stream(cfg.seed, 2);
    let lr = T::from_f64_lossy(cfg.learning_rate);
    let mu = T::from_f64_lossy(cfg.momentum);
    let mut velocity = vec![T::zero(); net.n_params()];
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, Vec<T>)> = None;
    let mut since_best = 0;

    for epoch in 1..=cfg.epochs {
        rng::shuffle(&mut order, &mut shuffler);
        let mut loss_sum = 0.0;
        let mut batches = 0;
        for chunk in order.chunks(cfg.batch_size) {
            let inputs: Vec<&[f64]> = chunk.iter().map(|&i| samples[i].input).collect();
            let targets: Vec<usize> = chunk.iter().map(|&i| samples[i].target).collect();
            let (loss, grad) = net.batch_gradient(&inputs, &targets, exec)?;
            for ((w, v), g) in net.params.iter_mut().zip(velocity.iter_mut()).zip(&grad) {
                *v = mu * *v - lr * *g;
                *w = *w + *v;
            }
            loss_sum += loss;
            batches += 1;
        }
        let train_loss = loss_sum / batches as f64;
        let (val_loss, val_accuracy) = if val.is_empty() {
            (None, None)
        } else {
            let (l, a) = evaluate(net, samples, &val, exec)?;
            (Some(l), Some(a))
        };
        history.push(EpochStats { epoch, train_loss, val_loss, val_accuracy });

        if let (Some(vl), true) = (val_loss, cfg.early_stop_patience > 0) {
            if best.as_ref().is_none_or(|(b, _)| vl < *b) {
                best = Some((vl, net.params.clone()));
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= cfg.early_stop_patience {
                    break;
                }
            }
        }
    }
    if let Some((_, params)) = best {
        net.params = params;
    }
    Ok(history)
}
