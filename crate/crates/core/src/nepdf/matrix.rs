use serde::{Deserialize, Serialize};

use super::grid::{bin_index, compute_bin_edges, BinGrid};
use super::pair::{group_of, Label, PairSample};
use crate::error::{Error, Result};
use crate::exec::Exec;

pub const DEFAULT_K: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NepdfOptions {
    pub k: usize,
    /// Bin each axis uniformly in `log10` space.
    pub log_space: bool,
    /// Apply `ln(1 + p)` to each density entry before max-normalization.
    pub log_transform: bool,
}

impl Default for NepdfOptions {
    fn default() -> Self {
        NepdfOptions { k: DEFAULT_K, log_space: false, log_transform: false }
    }
}

/// `K x K` joint density matrix, row-major with rows indexing x bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NepdfMatrix {
    pub k: usize,
    pub values: Vec<f64>,
    pub grid: BinGrid,
    pub n_obs: usize,
    pub normalized: bool,
}

impl NepdfMatrix {
    #[inline]
    pub fn get(&self, o: usize, p: usize) -> f64 {
        self.values[o * self.k + p]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Unnormalized empirical density: bin counts divided by `n`.
pub fn build_epdf(pair: &PairSample, k: usize, log_space: bool) -> Result<NepdfMatrix> {
    if k < 2 {
        return Err(Error::InvalidK(k));
    }
    if pair.x.len() != pair.y.len() {
        return Err(Error::LengthMismatch { x: pair.x.len(), y: pair.y.len() });
    }
    if pair.x.is_empty() {
        return Err(Error::EmptyPair);
    }
    let edges_x = compute_bin_edges(&pair.x, k, log_space)?;
    let edges_y = compute_bin_edges(&pair.y, k, log_space)?;

    let mut counts = vec![0u64; k * k];
    for (&xv, &yv) in pair.x.iter().zip(&pair.y) {
        counts[bin_index(&edges_x, xv) * k + bin_index(&edges_y, yv)] += 1;
    }
    let n = pair.x.len();
    let values = counts.iter().map(|&c| c as f64 / n as f64).collect();
    Ok(NepdfMatrix { k, values, grid: BinGrid { edges_x, edges_y, log_space }, n_obs: n, normalized: false })
}

/// Optional `ln(1 + ·)` then division by the maximum entry.
pub fn normalize(mut m: NepdfMatrix, log_transform: bool) -> NepdfMatrix {
    if m.normalized {
        return m;
    }
    if log_transform {
        m.values.iter_mut().for_each(|v| *v = v.ln_1p());
    }
    let max = m.max();
    if max > 0.0 {
        m.values.iter_mut().for_each(|v| *v /= max);
    }
    m.normalized = true;
    m
}

pub fn build_nepdf(pair: &PairSample, opts: &NepdfOptions) -> Result<NepdfMatrix> {
    Ok(normalize(build_epdf(pair, opts.k, opts.log_space)?, opts.log_transform))
}

pub fn transpose_nepdf(m: &NepdfMatrix) -> NepdfMatrix {
    let k = m.k;
    let mut values = vec![0.0; k * k];
    for o in 0..k {
        for p in 0..k {
            values[p * k + o] = m.values[o * k + p];
        }
    }
    NepdfMatrix { k, values, grid: m.grid.swapped(), n_obs: m.n_obs, normalized: m.normalized }
}

/// A density matrix ready for training or scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledNepdf {
    pub id: String,
    /// Cross-validation grouping key; a pair and its transpose share it.
    pub group: String,
    pub matrix: NepdfMatrix,
    pub label: Label,
    pub weight: f64,
    /// Whether this entry is the transposed twin of another entry.
    pub transposed: bool,
}

impl LabeledNepdf {
    pub fn transposed(&self) -> LabeledNepdf {
        LabeledNepdf {
            id: format!("{}^T", self.id),
            group: self.group.clone(),
            matrix: transpose_nepdf(&self.matrix),
            label: self.label.negate(),
            weight: self.weight,
            transposed: !self.transposed,
        }
    }
}

/// Interleaves each entry with its transpose carrying the negated label
/// (independent stays independent). Output is twice the input length.
pub fn augment_with_transposes(dataset: &[LabeledNepdf]) -> Vec<LabeledNepdf> {
    dataset.iter().flat_map(|e| [e.clone(), e.transposed()]).collect()
}

pub fn build_dataset(pairs: &[PairSample], opts: &NepdfOptions) -> Result<Vec<LabeledNepdf>> {
    build_dataset_with(pairs, opts, Exec::default())
}

pub fn build_dataset_with(pairs: &[PairSample], opts: &NepdfOptions, exec: Exec) -> Result<Vec<LabeledNepdf>> {
    exec.try_map(pairs, |p| {
        Ok(LabeledNepdf {
            id: p.id.clone(),
            group: group_of(&p.id).to_string(),
            matrix: build_nepdf(p, opts)?,
            label: p.label,
            weight: p.weight,
            transposed: false,
        })
    })
}
