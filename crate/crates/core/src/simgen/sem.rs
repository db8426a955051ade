use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::nepdf::{Label, PairSample};
use crate::rng::{self, Rng};

const WEIGHT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Structure {
    /// `X -> Y <- Z`
    V,
    /// `X -> Z -> Y`
    Chain,
    /// `X <- Y -> Z`
    ReverseV,
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Structure::V => "v",
            Structure::Chain => "chain",
            Structure::ReverseV => "reverse_v",
        })
    }
}

impl FromStr for Structure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "v" => Ok(Structure::V),
            "chain" => Ok(Structure::Chain),
            "reverse_v" | "reversev" => Ok(Structure::ReverseV),
            other => Err(Error::InvalidParams(format!("unknown structure {other:?} (expected v, chain, reverse-v)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemParams {
    pub structure: Structure,
    pub alpha: f64,
    pub beta: f64,
    /// Unused by the V structure.
    pub gamma: f64,
    pub steps: usize,
    /// Leading steps simulated and then discarded.
    #[serde(default)]
    pub burn_in: usize,
    pub seed: u64,
}

impl SemParams {
    pub fn new(structure: Structure, alpha: f64, beta: f64, gamma: f64, steps: usize, seed: u64) -> Self {
        SemParams { structure, alpha, beta, gamma, steps, burn_in: 0, seed }
    }

    /// Checks coefficient ranges and that every noise weight is nonnegative.
    pub fn validate(&self) -> Result<()> {
        let coef = [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)];
        for (name, v) in coef {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParams(format!("{name} = {v} must lie in [0, 1]")));
            }
        }
        if self.steps == 0 {
            return Err(Error::InvalidParams("steps must be positive".into()));
        }
        let sums: &[(&str, f64)] = match self.structure {
            Structure::V => &[("alpha + beta", self.alpha + self.beta)],
            Structure::Chain => &[("alpha + gamma", self.alpha + self.gamma), ("beta + gamma", self.beta + self.gamma)],
            Structure::ReverseV => &[("beta + gamma", self.beta + self.gamma)],
        };
        for &(name, s) in sums {
            if s > 1.0 + WEIGHT_TOL {
                return Err(Error::InvalidParams(format!("{name} = {s} exceeds 1 (noise weight would be negative)")));
            }
        }
        Ok(())
    }
}

/// Per-step noise: draws `mu ~ U[0, mu_max]`, `sigma ~ U[0, sigma_max]` and
/// returns one `Normal(mu, sigma)` sample. Parameters are redrawn each call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepNoise {
    pub mu_max: f64,
    pub sigma_max: f64,
}

impl Default for StepNoise {
    fn default() -> Self {
        StepNoise { mu_max: 10.0, sigma_max: 50.0 }
    }
}

impl StepNoise {
    pub fn sample(&self, rng: &mut Rng) -> f64 {
        let mu = rng.random::<f64>() * self.mu_max;
        let sigma = rng.random::<f64>() * self.sigma_max;
        let z: f64 = rng.sample(StandardNormal);
        mu + sigma * z
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleSeries {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub params: SemParams,
}

#[derive(Clone, Copy)]
struct State {
    x: f64,
    y: f64,
    z: f64,
}

fn run(params: &SemParams, step: impl Fn(&State, [f64; 3]) -> State) -> Result<TripleSeries> {
    params.validate()?;
    let noise = StepNoise::default();
    let mut rng = rng::seeded(params.seed);
    let draw = |rng: &mut Rng| [noise.sample(rng), noise.sample(rng), noise.sample(rng)];

    let total = params.steps + params.burn_in;
    let [x0, y0, z0] = draw(&mut rng);
    let mut s = State { x: x0, y: y0, z: z0 };
    let mut out = TripleSeries {
        x: Vec::with_capacity(params.steps),
        y: Vec::with_capacity(params.steps),
        z: Vec::with_capacity(params.steps),
        params: *params,
    };
    for t in 0..total {
        if t > 0 {
            s = step(&s, draw(&mut rng));
        }
        if t >= params.burn_in {
            out.x.push(s.x);
            out.y.push(s.y);
            out.z.push(s.z);
        }
    }
    if let Some(v) = out.x.iter().chain(&out.y).chain(&out.z).find(|v| !v.is_finite()) {
        return Err(Error::InvalidParams(format!("simulation diverged (value {v})")));
    }
    Ok(out)
}

fn noise_weight(w: f64) -> f64 {
    w.max(0.0)
}

fn expect(params: &SemParams, s: Structure) -> Result<()> {
    if params.structure != s {
        return Err(Error::InvalidParams(format!("expected {s} parameters, got {}", params.structure)));
    }
    Ok(())
}

/// `X -> Y <- Z` with one-step lags:
///
/// ```text
/// X_t = a X_{t-1} + (1 - a) Xn_t
/// Z_t = a Z_{t-1} + (1 - a) Zn_t
/// Y_t = a Y_{t-1} + b/2 (X_{t-1} + Z_{t-1}) + (1 - a - b) Yn_t
/// ```
pub fn simulate_v(params: &SemParams) -> Result<TripleSeries> {
    expect(params, Structure::V)?;
    let (a, b) = (params.alpha, params.beta);
    let wy = noise_weight(1.0 - b - a);
    run(params, |s, [nx, ny, nz]| State {
        x: a * s.x + (1.0 - a) * nx,
        y: a * s.y + b / 2.0 * (s.x + s.z) + wy * ny,
        z: a * s.z + (1.0 - a) * nz,
    })
}

/// `X -> Z -> Y`:
///
/// ```text
/// X_t = a X_{t-1} + (1 - a) Xn_t
/// Z_t = b Z_{t-1} + g (X_{t-1} - 1)^2 + (1 - g - a) Zn_t
/// Y_t = b Z_{t-1} + g/2 (cos Z_{t-1} + sin Z_{t-1}) + (1 - b - g) Yn_t
/// ```
pub fn simulate_chain(params: &SemParams) -> Result<TripleSeries> {
    expect(params, Structure::Chain)?;
    let (a, b, g) = (params.alpha, params.beta, params.gamma);
    let wz = noise_weight(1.0 - g - a);
    let wy = noise_weight(1.0 - b - g);
    run(params, |s, [nx, ny, nz]| State {
        x: a * s.x + (1.0 - a) * nx,
        y: b * s.z + g / 2.0 * (s.z.cos() + s.z.sin()) + wy * ny,
        z: b * s.z + g * (s.x - 1.0).powi(2) + wz * nz,
    })
}

/// `X <- Y -> Z`:
///
/// ```text
/// Y_t = a Y_{t-1} + (1 - a) Yn_t
/// X_t = b X_{t-1} + g Y_{t-1} + (1 - b - g) Xn_t
/// Z_t = b Z_{t-1} + g Y_{t-1} + (1 - b - g) Zn_t
/// ```
pub fn simulate_reverse_v(params: &SemParams) -> Result<TripleSeries> {
    expect(params, Structure::ReverseV)?;
    let (a, b, g) = (params.alpha, params.beta, params.gamma);
    let w = noise_weight(1.0 - b - g);
    run(params, |s, [nx, ny, nz]| State {
        x: b * s.x + g * s.y + w * nx,
        y: a * s.y + (1.0 - a) * ny,
        z: b * s.z + g * s.y + w * nz,
    })
}

pub fn simulate(params: &SemParams) -> Result<TripleSeries> {
    match params.structure {
        Structure::V => simulate_v(params),
        Structure::Chain => simulate_chain(params),
        Structure::ReverseV => simulate_reverse_v(params),
    }
}

#[derive(Clone, Copy)]
enum Var {
    X,
    Y,
    Z,
}

impl Var {
    fn name(self) -> &'static str {
        match self {
            Var::X => "X",
            Var::Y => "Y",
            Var::Z => "Z",
        }
    }

    fn of(self, ts: &TripleSeries) -> &[f64] {
        match self {
            Var::X => &ts.x,
            Var::Y => &ts.y,
            Var::Z => &ts.z,
        }
    }
}

fn ordered_pairs(structure: Structure) -> [(Var, Var, Label); 6] {
    use Label::*;
    use Var::*;
    match structure {
        Structure::V => [
            (X, Y, Causal),
            (Y, X, Reverse),
            (X, Z, Independent),
            (Z, X, Independent),
            (Z, Y, Causal),
            (Y, Z, Reverse),
        ],
        Structure::Chain => [
            (X, Y, Independent),
            (Y, X, Independent),
            (X, Z, Causal),
            (Z, X, Reverse),
            (Z, Y, Causal),
            (Y, Z, Reverse),
        ],
        Structure::ReverseV => [
            (Y, X, Causal),
            (X, Y, Reverse),
            (X, Z, Independent),
            (Z, X, Independent),
            (Y, Z, Causal),
            (Z, Y, Reverse),
        ],
    }
}

/// The six ordered variable pairs of one system with their ground-truth
/// labels. Observations are `(a_{t-lag}, b_t)`; `lag = 0` pairs values at the
/// same time step. Ids are `"{system_id}:A-B"`.
pub fn label_pairs(ts: &TripleSeries, system_id: &str, lag: usize) -> Result<Vec<PairSample>> {
    let n = ts.x.len();
    if lag >= n {
        return Err(Error::InvalidParams(format!("lag {lag} leaves no observations from {n} steps")));
    }
    ordered_pairs(ts.params.structure)
        .iter()
        .map(|&(a, b, label)| {
            let xs = a.of(ts)[..n - lag].to_vec();
            let ys = b.of(ts)[lag..].to_vec();
            PairSample::new(format!("{system_id}:{}-{}", a.name(), b.name()), xs, ys, label)
        })
        .collect()
}

/// Simulates `systems` independent systems (system `i` uses seed
/// `params.seed` on stream `i`) and returns all `6 * systems` labeled pairs in
/// system order.
pub fn simulate_systems(params: &SemParams, systems: usize, lag: usize, exec: Exec) -> Result<Vec<PairSample>> {
    params.validate()?;
    let per_system = exec.map_range(systems, |i| {
        let p = SemParams { seed: system_seed(params.seed, i as u64), ..*params };
        simulate(&p).and_then(|ts| label_pairs(&ts, &format!("sys{i:05}"), lag))
    });
    let mut out = Vec::with_capacity(systems * 6);
    for r in per_system {
        out.extend(r?);
    }
    Ok(out)
}

fn system_seed(seed: u64, i: u64) -> u64 {
    use rand::RngCore;
    rng::stream(seed, i).next_u64()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(structure: Structure, a: f64, b: f64, g: f64) -> SemParams {
        SemParams::new(structure, a, b, g, 1000, 42)
    }

    fn corr(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    }

    #[test]
    fn step_noise_degenerate_sigma() {
        let noise = StepNoise { mu_max: 10.0, sigma_max: 0.0 };
        let mut r = rng::seeded(1);
        for _ in 0..1000 {
            let v = noise.sample(&mut r);
            assert!((0.0..=10.0).contains(&v));
        }
    }

    #[test]
    fn step_noise_mean_monte_carlo() {
        let noise = StepNoise::default();
        let mut r = rng::seeded(2);
        let n = 1_000_000;
        let mean = (0..n).map(|_| noise.sample(&mut r)).sum::<f64>() / n as f64;
        assert!((4.5..=5.5).contains(&mean), "mean {mean}");
    }

    #[test]
    fn step_noise_deterministic() {
        let noise = StepNoise::default();
        let (mut a, mut b) = (rng::seeded(9), rng::seeded(9));
        for _ in 0..100 {
            assert_eq!(noise.sample(&mut a).to_bits(), noise.sample(&mut b).to_bits());
        }
    }

    #[test]
    fn v_pure_persistence() {
        let ts = simulate_v(&params(Structure::V, 1.0, 0.0, 0.0)).unwrap();
        assert!(ts.x.iter().all(|&v| v == ts.x[0]));
        assert_eq!(ts.x.len(), 1000);
    }

    #[test]
    fn v_uncoupled_y_uncorrelated_with_lagged_x() {
        let mut p = params(Structure::V, 0.0, 0.0, 0.0);
        p.steps = 10_000;
        let ts = simulate_v(&p).unwrap();
        let r = corr(&ts.x[..ts.x.len() - 1], &ts.y[1..]);
        assert!(r.abs() < 0.1, "r = {r}");
    }

    #[test]
    fn v_coupling_shows_in_lagged_correlation() {
        let ts = simulate_v(&params(Structure::V, 0.0, 1.0, 0.0)).unwrap();
        let r = corr(&ts.x[..999], &ts.y[1..]);
        assert!(r > 0.5, "r = {r}");
    }

    #[test]
    fn invalid_weights_rejected() {
        assert!(matches!(simulate_v(&params(Structure::V, 0.6, 0.5, 0.0)), Err(Error::InvalidParams(_))));
        assert!(simulate_chain(&params(Structure::Chain, 0.6, 0.1, 0.5)).is_err());
        assert!(simulate_chain(&params(Structure::Chain, 0.1, 0.6, 0.5)).is_err());
        assert!(simulate_reverse_v(&params(Structure::ReverseV, 0.9, 0.6, 0.5)).is_err());
        assert!(simulate_reverse_v(&params(Structure::ReverseV, 1.0, 0.5, 0.5)).is_ok());
        assert!(simulate_v(&params(Structure::V, 0.5, 0.5, 0.0)).is_ok());
        assert!(simulate_v(&params(Structure::V, -0.1, 0.5, 0.0)).is_err());
    }

    #[test]
    fn chain_uncoupled_streams_independent() {
        let mut p = params(Structure::Chain, 0.0, 0.0, 0.0);
        p.steps = 10_000;
        let ts = simulate_chain(&p).unwrap();
        assert!(corr(&ts.x, &ts.y).abs() < 0.05);
        assert!(corr(&ts.x, &ts.z).abs() < 0.05);
        assert!(corr(&ts.y, &ts.z).abs() < 0.05);
    }

    #[test]
    fn chain_and_reverse_v_are_finite() {
        for s in [Structure::Chain, Structure::ReverseV] {
            let ts = simulate(&params(s, 0.5, 0.5, 0.5)).unwrap();
            assert!(ts.x.iter().chain(&ts.y).chain(&ts.z).all(|v| v.is_finite()));
        }
    }

    #[test]
    fn reverse_v_severed_edges() {
        let mut p = params(Structure::ReverseV, 0.0, 0.0, 0.0);
        p.steps = 10_000;
        let ts = simulate_reverse_v(&p).unwrap();
        assert!(corr(&ts.y[..9999], &ts.x[1..]).abs() < 0.05);
        assert!(corr(&ts.y[..9999], &ts.z[1..]).abs() < 0.05);
    }

    #[test]
    fn determinism() {
        let p = params(Structure::ReverseV, 0.5, 0.5, 0.5);
        assert_eq!(simulate(&p).unwrap(), simulate(&p).unwrap());
        let q = SemParams { seed: 43, ..p };
        assert_ne!(simulate(&p).unwrap(), simulate(&q).unwrap());
    }

    #[test]
    fn burn_in_discards_prefix() {
        let p = params(Structure::V, 0.5, 0.5, 0.0);
        let full = simulate(&SemParams { steps: 1100, ..p }).unwrap();
        let burned = simulate(&SemParams { burn_in: 100, ..p }).unwrap();
        assert_eq!(burned.x.len(), 1000);
        assert_eq!(&burned.x[..], &full.x[100..]);
    }

    #[test]
    fn v_labels() {
        let ts = simulate(&params(Structure::V, 0.5, 0.5, 0.0)).unwrap();
        let pairs = label_pairs(&ts, "s", 0).unwrap();
        let got: Vec<(String, i64)> = pairs.iter().map(|p| (p.id.clone(), p.label.as_i64())).collect();
        let want = [("s:X-Y", 1), ("s:Y-X", -1), ("s:X-Z", 0), ("s:Z-X", 0), ("s:Z-Y", 1), ("s:Y-Z", -1)];
        assert_eq!(got, want.iter().map(|(a, b)| (a.to_string(), *b)).collect::<Vec<_>>());
        assert!(pairs.iter().all(|p| p.len() == 1000));
        assert_eq!(pairs[0].x, ts.x);
        assert_eq!(pairs[0].y, ts.y);
    }

    #[test]
    fn labels_antisymmetric() {
        for s in [Structure::V, Structure::Chain, Structure::ReverseV] {
            let ts = simulate(&params(s, 0.5, 0.5, 0.5)).unwrap();
            let pairs = label_pairs(&ts, "s", 0).unwrap();
            for p in &pairs {
                let (a, b) = p.id[2..].split_once('-').unwrap();
                let twin = pairs.iter().find(|q| q.id == format!("s:{b}-{a}")).unwrap();
                assert_eq!(twin.label, p.label.negate());
            }
        }
    }

    #[test]
    fn chain_labels() {
        let ts = simulate(&params(Structure::Chain, 0.5, 0.5, 0.5)).unwrap();
        let got: Vec<i64> = label_pairs(&ts, "s", 0).unwrap().iter().map(|p| p.label.as_i64()).collect();
        assert_eq!(got, vec![0, 0, 1, -1, 1, -1]);
    }

    #[test]
    fn lagged_pairs() {
        let ts = simulate(&params(Structure::V, 0.5, 0.5, 0.0)).unwrap();
        let pairs = label_pairs(&ts, "s", 1).unwrap();
        assert_eq!(pairs[0].len(), 999);
        assert_eq!(pairs[0].x[0], ts.x[0]);
        assert_eq!(pairs[0].y[0], ts.y[1]);
        assert!(label_pairs(&ts, "s", 1000).is_err());
    }

    #[test]
    fn systems_batch_matches_sequential() {
        let p = SemParams::new(Structure::Chain, 0.5, 0.5, 0.5, 200, 5);
        let a = simulate_systems(&p, 4, 0, Exec::Sequential).unwrap();
        let b = simulate_systems(&p, 4, 0, Exec::default()).unwrap();
        assert_eq!(a.len(), 24);
        assert_eq!(a, b);
        assert_ne!(a[0].x, a[6].x);
    }
}
