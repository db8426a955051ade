use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Causal direction label of an ordered pair `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub enum Label {
    /// `x -> y`
    Causal,
    /// `y -> x`
    Reverse,
    Independent,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Causal, Label::Reverse, Label::Independent];

    pub fn as_i64(self) -> i64 {
        match self {
            Label::Causal => 1,
            Label::Reverse => -1,
            Label::Independent => 0,
        }
    }

    /// Label of the swapped pair `(y, x)`.
    pub fn negate(self) -> Label {
        match self {
            Label::Causal => Label::Reverse,
            Label::Reverse => Label::Causal,
            Label::Independent => Label::Independent,
        }
    }

    pub fn is_dependent(self) -> bool {
        self != Label::Independent
    }

    /// Fixed class index: `1 -> 0`, `-1 -> 1`, `0 -> 2`.
    pub fn class_index(self) -> usize {
        match self {
            Label::Causal => 0,
            Label::Reverse => 1,
            Label::Independent => 2,
        }
    }

    pub fn from_class_index(index: usize) -> Option<Label> {
        Label::ALL.get(index).copied()
    }
}

impl TryFrom<i64> for Label {
    type Error = Error;

    fn try_from(v: i64) -> Result<Self> {
        match v {
            1 => Ok(Label::Causal),
            -1 => Ok(Label::Reverse),
            0 => Ok(Label::Independent),
            other => Err(Error::InvalidLabel(other)),
        }
    }
}

impl From<Label> for i64 {
    fn from(l: Label) -> i64 {
        l.as_i64()
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_i64())
    }
}

/// One labeled variable pair with its joint observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSample {
    pub id: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub label: Label,
    pub weight: f64,
}

impl PairSample {
    /// Builds a pair, checking the length and finiteness invariants.
    pub fn new(id: impl Into<String>, x: Vec<f64>, y: Vec<f64>, label: Label) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch { x: x.len(), y: y.len() });
        }
        if x.is_empty() {
            return Err(Error::EmptyPair);
        }
        if let Some(&v) = x.iter().chain(&y).find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(v));
        }
        Ok(PairSample { id: id.into(), x, y, label, weight: 1.0 })
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Grouping key for cross-validation: the part of the id before the first
    /// `:`, or the whole id. Pairs from one simulated system share a group.
    pub fn group(&self) -> &str {
        group_of(&self.id)
    }

    /// The pair with axes exchanged and the label negated.
    pub fn swapped(&self) -> PairSample {
        PairSample {
            id: format!("{}^T", self.id),
            x: self.y.clone(),
            y: self.x.clone(),
            label: self.label.negate(),
            weight: self.weight,
        }
    }
}

pub(crate) fn group_of(id: &str) -> &str {
    let base = id.split(':').next().unwrap_or(id);
    base.strip_suffix("^T").unwrap_or(base)
}

/// Pairwise deletion of missing or non-finite observations.
pub fn clean_pair(raw_x: &[Option<f64>], raw_y: &[Option<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    if raw_x.len() != raw_y.len() {
        return Err(Error::LengthMismatch { x: raw_x.len(), y: raw_y.len() });
    }
    let (x, y): (Vec<f64>, Vec<f64>) = raw_x
        .iter()
        .zip(raw_y)
        .filter_map(|(a, b)| match (a, b) {
            (Some(a), Some(b)) if a.is_finite() && b.is_finite() => Some((*a, *b)),
            _ => None,
        })
        .unzip();
    if x.is_empty() {
        return Err(Error::EmptyPair);
    }
    Ok((x, y))
}
