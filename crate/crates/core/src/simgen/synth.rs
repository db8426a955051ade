//! Cause-effect pairs with a random smooth mechanism: the cause is drawn from
//! a Gaussian mixture, the effect is a 5-knot Hermite spline of the cause plus
//! heteroscedastic Gaussian noise.

use rand::Rng as _;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use super::spline::HermiteSpline;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::nepdf::{Label, PairSample};
use crate::rng::{self, Rng};

pub const KNOTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthPairConfig {
    pub n_samples: usize,
    /// Inclusive range for the number of observations per pair.
    pub m_range: (usize, usize),
    /// Inclusive range for the number of mixture components.
    pub k_range: (usize, usize),
    /// Component means and standard deviations are uniform on this range.
    pub mean_std_range: (f64, f64),
    /// Noise variance is uniform on this range.
    pub noise_var_range: (f64, f64),
    pub seed: u64,
}

impl Default for SynthPairConfig {
    fn default() -> Self {
        SynthPairConfig {
            n_samples: 15_000,
            m_range: (100, 1000),
            k_range: (1, 5),
            mean_std_range: (0.0, 5.0),
            noise_var_range: (0.0, 5.0),
            seed: 0,
        }
    }
}

impl SynthPairConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParams(msg.to_string()));
        if self.m_range.0 < 1 || self.m_range.0 > self.m_range.1 {
            return bad("m_range must be a nonempty range of positive sizes");
        }
        if self.k_range.0 < 1 || self.k_range.0 > self.k_range.1 {
            return bad("k_range must be a nonempty range of positive counts");
        }
        let (a, b) = self.mean_std_range;
        if !(a.is_finite() && b.is_finite() && 0.0 <= a && a <= b) {
            return bad("mean_std_range must satisfy 0 <= lo <= hi");
        }
        let (a, b) = self.noise_var_range;
        if !(a.is_finite() && b.is_finite() && 0.0 <= a && a <= b) {
            return bad("noise_var_range must satisfy 0 <= lo <= hi");
        }
        Ok(())
    }
}

fn uniform(rng: &mut Rng, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Draws `m` cause values from a random Gaussian mixture whose weights are
/// Dirichlet(1) over `k` components.
pub fn sample_cause(rng: &mut Rng, cfg: &SynthPairConfig) -> Vec<f64> {
    let k = rng.random_range(cfg.k_range.0..=cfg.k_range.1);
    let comps: Vec<(f64, f64)> =
        (0..k).map(|_| (uniform(rng, cfg.mean_std_range), uniform(rng, cfg.mean_std_range))).collect();
    let raw: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = raw.iter().sum();
    let mut cdf = Vec::with_capacity(k);
    let mut acc = 0.0;
    for w in &raw {
        acc += w / total;
        cdf.push(acc);
    }
    let m = rng.random_range(cfg.m_range.0..=cfg.m_range.1);
    (0..m)
        .map(|_| {
            let u: f64 = rng.random();
            let c = cdf.iter().position(|&c| u < c).unwrap_or(k - 1);
            let (mu, sd) = comps[c];
            mu + sd * rng.sample::<f64, _>(StandardNormal)
        })
        .collect()
}

/// `[min - std, max + std]` of the values (population std), widened to unit
/// width if degenerate.
fn support(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min) - std;
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max) + std;
    if hi - lo > 1e-9 * lo.abs().max(1.0) {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn knot_positions((lo, hi): (f64, f64)) -> Vec<f64> {
    let mut xs: Vec<f64> = (0..KNOTS).map(|j| lo + (hi - lo) * j as f64 / (KNOTS - 1) as f64).collect();
    xs[KNOTS - 1] = hi;
    xs
}

/// Random mechanism over `support`: knot values standard normal, tangents
/// standard normal divided by the knot spacing.
pub fn random_mechanism(rng: &mut Rng, support: (f64, f64)) -> HermiteSpline {
    let xs = knot_positions(support);
    let h = xs[1] - xs[0];
    let ys = (0..KNOTS).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let ms = (0..KNOTS).map(|_| rng.sample::<f64, _>(StandardNormal) / h).collect();
    HermiteSpline::new(xs, ys, ms).expect("knots are strictly increasing")
}

pub fn identity_mechanism(support: (f64, f64)) -> HermiteSpline {
    let xs = knot_positions(support);
    HermiteSpline::new(xs.clone(), xs, vec![1.0; KNOTS]).expect("knots are strictly increasing")
}

/// Nonnegative noise-scale profile: knot values `U[0, 1]`, flat tangents, so
/// the interpolant stays inside the knot value range.
fn noise_profile(rng: &mut Rng, support: (f64, f64)) -> HermiteSpline {
    let xs = knot_positions(support);
    let ys = (0..KNOTS).map(|_| rng.random::<f64>()).collect();
    HermiteSpline::new(xs, ys, vec![0.0; KNOTS]).expect("knots are strictly increasing")
}

/// `y_j = f(x_j) + s(x_j) e_j`, `e_j ~ N(0, noise_var)`.
pub fn apply_mechanism(
    rng: &mut Rng,
    x: &[f64],
    f: &HermiteSpline,
    scale: &HermiteSpline,
    noise_var: f64,
) -> Result<Vec<f64>> {
    let sd = noise_var.sqrt();
    x.iter()
        .map(|&xv| {
            let e: f64 = rng.sample(StandardNormal);
            Ok(f.eval(xv)? + scale.eval(xv)? * sd * e)
        })
        .collect()
}

fn sample_pair(cfg: &SynthPairConfig, i: usize) -> Result<PairSample> {
    let mut rng = rng::stream(cfg.seed, i as u64);
    let x = sample_cause(&mut rng, cfg);
    let sup = support(&x);
    let f = random_mechanism(&mut rng, sup);
    let s = noise_profile(&mut rng, sup);
    let v = uniform(&mut rng, cfg.noise_var_range);
    let y = apply_mechanism(&mut rng, &x, &f, &s, v)?;
    // (cause, effect) carries label -1; the transposed twin gets +1.
    PairSample::new(format!("synth{i:05}"), x, y, Label::Reverse)
}

pub fn gen_synthetic_pairs(cfg: &SynthPairConfig) -> Result<Vec<PairSample>> {
    gen_synthetic_pairs_with(cfg, Exec::default())
}

/// Sample `i` draws from stream `i` of `cfg.seed`, so output is independent of
/// execution order.
pub fn gen_synthetic_pairs_with(cfg: &SynthPairConfig, exec: Exec) -> Result<Vec<PairSample>> {
    cfg.validate()?;
    exec.map_range(cfg.n_samples, |i| sample_pair(cfg, i)).into_iter().collect()
}
