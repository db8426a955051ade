//! Central finite-difference check of the analytic gradients, run at double
//! precision on a small network.

use rand::Rng as _;
use serde::Serialize;

use super::arch::LayerSpec;
use super::network::{Network, Task};
use crate::error::Result;
use crate::exec::Exec;
use crate::rng;

#[derive(Debug, Clone)]
pub struct GradcheckOptions {
    pub seed: u64,
    pub input_size: usize,
    pub batch: usize,
    pub step: f64,
    pub tolerance: f64,
    /// Denominator floor for the relative error of near-zero gradients.
    pub abs_floor: f64,
    /// Test hook: perturb the analytic gradient of the named parameter array.
    pub corrupt: Option<String>,
}

impl Default for GradcheckOptions {
    fn default() -> Self {
        GradcheckOptions {
            seed: 0,
            input_size: 8,
            batch: 4,
            step: 1e-4,
            tolerance: 1e-4,
            abs_floor: 1e-6,
            corrupt: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ArrayCheck {
    pub name: String,
    pub len: usize,
    pub max_rel_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradcheckReport {
    pub arrays: Vec<ArrayCheck>,
    pub passed: bool,
}

impl GradcheckReport {
    pub fn failing(&self) -> impl Iterator<Item = &ArrayCheck> {
        self.arrays.iter().filter(|a| !a.passed)
    }
}

/// One conv, one pool and one hidden dense layer ahead of a 3-class output.
pub fn gradcheck_arch() -> Vec<LayerSpec> {
    vec![LayerSpec::conv(4), LayerSpec::MaxPool2x2, LayerSpec::Flatten, LayerSpec::dense(8), LayerSpec::Output]
}

pub fn gradcheck(opts: &GradcheckOptions) -> Result<GradcheckReport> {
    let mut net = Network::<f64>::new(opts.input_size, Task::ThreeClass, Some(&gradcheck_arch()), opts.seed)?;
    // Small nonzero biases so every bias path carries signal.
    let mut r = rng::stream(opts.seed, 1);
    for (_, off, len) in net.param_arrays().into_iter().filter(|(n, ..)| n.ends_with(".bias")) {
        for b in &mut net.params_mut()[off..off + len] {
            *b = r.random_range(-0.1..0.1);
        }
    }
    let k2 = opts.input_size * opts.input_size;
    let inputs: Vec<Vec<f64>> = (0..opts.batch).map(|_| (0..k2).map(|_| r.random::<f64>()).collect()).collect();
    let targets: Vec<usize> = (0..opts.batch).map(|i| i % 3).collect();
    let views: Vec<&[f64]> = inputs.iter().map(Vec::as_slice).collect();

    let (_, mut analytic) = net.batch_gradient(&views, &targets, Exec::Sequential)?;
    let arrays = net.param_arrays();
    if let Some(name) = &opts.corrupt {
        if let Some((_, off, len)) = arrays.iter().find(|(n, ..)| n == name) {
            for g in &mut analytic[*off..off + len] {
                *g = *g * 1.5 + 1e-3;
            }
        }
    }

    let mut checks = Vec::with_capacity(arrays.len());
    for (name, off, len) in arrays {
        let mut worst: f64 = 0.0;
        for i in off..off + len {
            let orig = net.params()[i];
            net.params_mut()[i] = orig + opts.step;
            let up = net.batch_loss(&views, &targets, Exec::Sequential)?;
            net.params_mut()[i] = orig - opts.step;
            let down = net.batch_loss(&views, &targets, Exec::Sequential)?;
            net.params_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * opts.step);
            let a = analytic[i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(opts.abs_floor);
            worst = worst.max(rel);
        }
        checks.push(ArrayCheck { name, len, max_rel_error: worst, passed: worst < opts.tolerance });
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(GradcheckReport { arrays: checks, passed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_seed_passes() {
        let rep = gradcheck(&GradcheckOptions::default()).unwrap();
        for a in &rep.arrays {
            assert!(a.passed, "{} max rel error {}", a.name, a.max_rel_error);
        }
        assert!(rep.passed);
    }

    #[test]
    fn corrupted_gradient_is_named() {
        let opts = GradcheckOptions { corrupt: Some("layer3.dense.weight".into()), ..Default::default() };
        let rep = gradcheck(&opts).unwrap();
        assert!(!rep.passed);
        let failing: Vec<&str> = rep.failing().map(|a| a.name.as_str()).collect();
        assert_eq!(failing, vec!["layer3.dense.weight"]);
    }

    #[test]
    fn every_array_listed_once() {
        let rep = gradcheck(&GradcheckOptions::default()).unwrap();
        let names: Vec<&str> = rep.arrays.iter().map(|a| a.name.as_str()).collect();
        assert_eq!(
            names,
            vec![
                "layer0.conv.weight",
                "layer0.conv.bias",
                "layer3.dense.weight",
                "layer3.dense.bias",
                "layer4.output.weight",
                "layer4.output.bias"
            ]
        );
        let net = Network::<f64>::new(8, Task::ThreeClass, Some(&gradcheck_arch()), 0).unwrap();
        assert_eq!(rep.arrays.iter().map(|a| a.len).sum::<usize>(), net.n_params());
    }
}
