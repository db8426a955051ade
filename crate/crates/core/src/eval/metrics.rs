use crate::error::{Error, Result};
use crate::nepdf::Label;

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().find(|v| !v.is_finite()) {
        Some(&v) => Err(Error::NonFinite(v)),
        None => Ok(()),
    }
}

/// Area under the ROC curve: the probability that a random positive outscores
/// a random negative, ties counted as one half (the Mann-Whitney U statistic
/// divided by `n_pos * n_neg`).
pub fn auroc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::ShapeMismatch { expected: scores.len(), got: labels.len() });
    }
    check_finite(scores)?;
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::DegenerateLabels);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Count, for each positive, negatives strictly below plus half the tied
    // ones. Integer arithmetic keeps the result exact until the final divide.
    let mut twice_u: u64 = 0;
    let mut neg_below: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let pos_tied = order[i..j].iter().filter(|&&o| labels[o]).count() as u64;
        let neg_tied = (j - i) as u64 - pos_tied;
        twice_u += pos_tied * (2 * neg_below + neg_tied);
        neg_below += neg_tied;
        i = j;
    }
    Ok(twice_u as f64 / (2.0 * n_pos as f64 * n_neg as f64))
}

/// Unweighted mean of the three one-vs-rest AUROCs. Row `i` of `probs` holds
/// class probabilities in class-index order (see [`Label::class_index`]).
pub fn mean_ovr_auroc(probs: &[Vec<f64>], labels: &[Label]) -> Result<f64> {
    if probs.len() != labels.len() {
        return Err(Error::ShapeMismatch { expected: probs.len(), got: labels.len() });
    }
    let mut total = 0.0;
    for class in 0..3 {
        let scores = probs
            .iter()
            .map(|p| p.get(class).copied().ok_or(Error::ShapeMismatch { expected: 3, got: p.len() }))
            .collect::<Result<Vec<f64>>>()?;
        let positive: Vec<bool> = labels.iter().map(|l| l.class_index() == class).collect();
        total += auroc(&scores, &positive)?;
    }
    Ok(total / 3.0)
}

/// Signed dependence-weighted direction score `y_ind * (2 c - 1)`.
pub fn combine(y_causal: f64, y_ind: f64) -> Result<f64> {
    for (what, v) in [("y_causal", y_causal), ("y_ind", y_ind)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::OutOfRange { what, value: v, lo: 0.0, hi: 1.0 });
        }
    }
    Ok(y_ind * (2.0 * y_causal - 1.0))
}

/// Mean of AUROC(label 1 vs rest, score) and AUROC(label -1 vs rest, -score).
pub fn bidirectional_auroc(scores: &[f64], labels: &[Label]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::ShapeMismatch { expected: scores.len(), got: labels.len() });
    }
    let fwd: Vec<bool> = labels.iter().map(|&l| l == Label::Causal).collect();
    let rev: Vec<bool> = labels.iter().map(|&l| l == Label::Reverse).collect();
    let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
    Ok((auroc(scores, &fwd)? + auroc(&neg, &rev)?) / 2.0)
}

pub fn weighted_accuracy(predictions: &[Label], labels: &[Label], weights: &[f64]) -> Result<f64> {
    if predictions.len() != labels.len() || weights.len() != labels.len() {
        return Err(Error::ShapeMismatch { expected: labels.len(), got: predictions.len().min(weights.len()) });
    }
    if let Some(&w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::OutOfRange { what: "weight", value: w, lo: 0.0, hi: f64::INFINITY });
    }
    let mass: f64 = weights.iter().sum();
    if mass <= 0.0 {
        return Err(Error::ZeroWeightMass);
    }
    let hit: f64 = predictions.iter().zip(labels).zip(weights).filter(|((p, l), _)| p == l).map(|(_, w)| w).sum();
    Ok(hit / mass)
}

pub fn accuracy(predictions: &[Label], labels: &[Label]) -> Result<f64> {
    weighted_accuracy(predictions, labels, &vec![1.0; labels.len()])
}
