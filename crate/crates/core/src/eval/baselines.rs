use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::nepdf::{NepdfMatrix, PairSample};

pub const DEFAULT_FIT_DEGREE: usize = 3;

fn mean_and_ss(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (mean, v.iter().map(|a| (a - mean) * (a - mean)).sum())
}

/// Sample Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { x: x.len(), y: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::EmptyInput);
    }
    let (mx, sx) = mean_and_ss(x);
    let (my, sy) = mean_and_ss(y);
    if sx == 0.0 || sy == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Ok((sxy / (sx.sqrt() * sy.sqrt())).clamp(-1.0, 1.0))
}

/// Plug-in mutual information (nats) of an un-normalized histogram whose
/// entries sum to one, using its row and column marginals.
pub fn mutual_information(m: &NepdfMatrix) -> Result<f64> {
    if m.normalized {
        return Err(Error::NotADistribution("matrix is max-normalized; pass the mass-one histogram".into()));
    }
    if let Some(&v) = m.values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::NotADistribution(format!("entry {v} is not a probability")));
    }
    let total = m.sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::NotADistribution(format!("entries sum to {total}")));
    }
    let k = m.k;
    let px: Vec<f64> = (0..k).map(|o| (0..k).map(|p| m.get(o, p)).sum()).collect();
    let py: Vec<f64> = (0..k).map(|p| (0..k).map(|o| m.get(o, p)).sum()).collect();
    let mut mi = 0.0;
    for o in 0..k {
        for p in 0..k {
            let joint = m.get(o, p);
            if joint > 0.0 {
                mi += joint * (joint / (px[o] * py[p])).ln();
            }
        }
    }
    Ok(mi.max(0.0))
}

fn standardize(v: &[f64]) -> Result<Vec<f64>> {
    let (mean, ss) = mean_and_ss(v);
    let sd = (ss / v.len() as f64).sqrt();
    if sd == 0.0 {
        return Err(Error::SingularFit);
    }
    Ok(v.iter().map(|a| (a - mean) / sd).collect())
}

/// Mean squared residual of the least-squares polynomial of `target` on
/// `input`, both standardized, floored at machine epsilon.
fn fit_mse(input: &[f64], target: &[f64], degree: usize) -> Result<f64> {
    let n = input.len();
    let design = DMatrix::from_fn(n, degree + 1, |i, j| input[i].powi(j as i32));
    let b = DVector::from_column_slice(target);
    let svd = design.clone().svd(true, true);
    let sv = &svd.singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    if !(smin > smax * 1e-10) {
        return Err(Error::SingularFit);
    }
    let coef = svd.solve(&b, 0.0).map_err(|_| Error::SingularFit)?;
    let resid = design * coef - b;
    Ok((resid.norm_squared() / n as f64).max(f64::EPSILON))
}

/// Regression-fit direction score `ln MSE(x | y) - ln MSE(y | x)`: positive
/// when a polynomial of x explains y better than the reverse.
pub fn bivariate_fit_score(pair: &PairSample, degree: usize) -> Result<f64> {
    if degree == 0 || pair.len() < degree + 2 {
        return Err(Error::SingularFit);
    }
    let x = standardize(&pair.x)?;
    let y = standardize(&pair.y)?;
    Ok(fit_mse(&y, &x, degree)?.ln() - fit_mse(&x, &y, degree)?.ln())
}
