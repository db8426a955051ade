use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative half-width used to widen an axis whose values are all equal.
const DEGENERATE_WIDTH: f64 = 1e-6;

/// Bin edges for both axes of a density matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinGrid {
    pub edges_x: Vec<f64>,
    pub edges_y: Vec<f64>,
    pub log_space: bool,
}

impl BinGrid {
    pub fn k(&self) -> usize {
        self.edges_x.len() - 1
    }

    pub fn swapped(&self) -> BinGrid {
        BinGrid { edges_x: self.edges_y.clone(), edges_y: self.edges_x.clone(), log_space: self.log_space }
    }
}

/// `K + 1` uniformly spaced edges spanning `[min, max]` of `values`, either in
/// raw space or uniformly in `log10` space and mapped back. The outer edges
/// are exactly the extreme values. An axis with `min == max` is widened to
/// `±max(|v|, 1)·1e-6` around the value (in log space, around `log10 v`).
pub fn compute_bin_edges(values: &[f64], k: usize, log_space: bool) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if k == 0 {
        return Err(Error::InvalidK(k));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values {
        if !v.is_finite() {
            return Err(Error::NonFinite(v));
        }
        if log_space && v <= 0.0 {
            return Err(Error::NonPositiveForLog(v));
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }

    let edges = if log_space {
        uniform_edges(lo.log10(), hi.log10(), k).map(|e| {
            let mut e: Vec<f64> = e.into_iter().map(|l| 10f64.powf(l)).collect();
            if lo < hi {
                e[0] = lo;
                e[k] = hi;
            }
            e
        })
    } else {
        uniform_edges(lo, hi, k)
    };
    edges
        .filter(|e| e.windows(2).all(|w| w[0] < w[1]))
        .or_else(|| {
            // Range too narrow to split at this magnitude: treat as a point.
            let mid = lo + (hi - lo) / 2.0;
            if log_space {
                let l = mid.log10();
                widened(l, k).map(|e| e.into_iter().map(|l| 10f64.powf(l)).collect())
            } else {
                widened(mid, k)
            }
            .filter(|e: &Vec<f64>| e.windows(2).all(|w| w[0] < w[1]))
        })
        .ok_or_else(|| Error::NotADistribution(format!("cannot build {k} distinct bins around {lo}")))
}

fn uniform_edges(lo: f64, hi: f64, k: usize) -> Option<Vec<f64>> {
    if lo == hi {
        return widened(lo, k);
    }
    let width = hi - lo;
    let mut edges: Vec<f64> = (0..=k).map(|i| lo + width * (i as f64 / k as f64)).collect();
    edges[0] = lo;
    edges[k] = hi;
    Some(edges)
}

fn widened(v: f64, k: usize) -> Option<Vec<f64>> {
    let eps = v.abs().max(1.0) * DEGENERATE_WIDTH;
    let (lo, hi) = (v - eps, v + eps);
    let edges: Vec<f64> = (0..=k).map(|i| lo + (hi - lo) * (i as f64 / k as f64)).collect();
    Some(edges)
}

/// Bin index for `v` on `edges`: half-open `[e_o, e_{o+1})`, last bin closed.
/// Values outside the grid clamp to the nearest outer bin.
pub(crate) fn bin_index(edges: &[f64], v: f64) -> usize {
    let k = edges.len() - 1;
    edges.partition_point(|&e| e <= v).saturating_sub(1).min(k - 1)
}
