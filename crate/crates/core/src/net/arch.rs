use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Relu,
    Linear,
}

/// One layer of a network description. Written as compact strings in config
/// files: `conv:16`, `pool`, `flatten`, `dense:64`, `output`; append
/// `:linear` to a conv or dense layer to drop its ReLU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum LayerSpec {
    /// 3x3 same-padded convolution.
    Conv3x3 { channels: usize, activation: Activation },
    /// 2x2 window, stride 2; odd trailing rows/columns are dropped.
    MaxPool2x2,
    Flatten,
    Dense { units: usize, activation: Activation },
    /// Softmax over 3 classes, or a single logistic unit for 2 classes.
    Output,
}

impl LayerSpec {
    pub fn conv(channels: usize) -> Self {
        LayerSpec::Conv3x3 { channels, activation: Activation::Relu }
    }

    pub fn dense(units: usize) -> Self {
        LayerSpec::Dense { units, activation: Activation::Relu }
    }

    pub(crate) fn code(&self) -> (u8, u32, u8) {
        let act = |a: &Activation| match a {
            Activation::Relu => 1,
            Activation::Linear => 0,
        };
        match self {
            LayerSpec::Conv3x3 { channels, activation } => (1, *channels as u32, act(activation)),
            LayerSpec::MaxPool2x2 => (2, 0, 0),
            LayerSpec::Flatten => (3, 0, 0),
            LayerSpec::Dense { units, activation } => (4, *units as u32, act(activation)),
            LayerSpec::Output => (5, 0, 0),
        }
    }

    pub(crate) fn from_code(kind: u8, units: u32, act: u8) -> Result<Self> {
        let activation = match act {
            0 => Activation::Linear,
            1 => Activation::Relu,
            a => return Err(Error::MalformedModel(format!("unknown activation code {a}"))),
        };
        Ok(match kind {
            1 => LayerSpec::Conv3x3 { channels: units as usize, activation },
            2 => LayerSpec::MaxPool2x2,
            3 => LayerSpec::Flatten,
            4 => LayerSpec::Dense { units: units as usize, activation },
            5 => LayerSpec::Output,
            k => return Err(Error::MalformedModel(format!("unknown layer kind {k}"))),
        })
    }
}

impl fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let suffix = |a: &Activation| if *a == Activation::Linear { ":linear" } else { "" };
        match self {
            LayerSpec::Conv3x3 { channels, activation } => write!(f, "conv:{channels}{}", suffix(activation)),
            LayerSpec::MaxPool2x2 => f.write_str("pool"),
            LayerSpec::Flatten => f.write_str("flatten"),
            LayerSpec::Dense { units, activation } => write!(f, "dense:{units}{}", suffix(activation)),
            LayerSpec::Output => f.write_str("output"),
        }
    }
}

impl FromStr for LayerSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad layer spec {s:?}"));
        let parts: Vec<&str> = s.trim().split(':').collect();
        let activation = match parts.get(2) {
            None | Some(&"relu") => Activation::Relu,
            Some(&"linear") => Activation::Linear,
            Some(_) => return Err(bad()),
        };
        let size = || -> Result<usize> {
            let n: usize = parts.get(1).ok_or_else(bad)?.parse().map_err(|_| bad())?;
            if n == 0 {
                return Err(bad());
            }
            Ok(n)
        };
        match parts[0] {
            "conv" | "conv3x3" => Ok(LayerSpec::Conv3x3 { channels: size()?, activation }),
            "dense" => Ok(LayerSpec::Dense { units: size()?, activation }),
            "pool" | "maxpool" if parts.len() == 1 => Ok(LayerSpec::MaxPool2x2),
            "flatten" if parts.len() == 1 => Ok(LayerSpec::Flatten),
            "output" if parts.len() == 1 => Ok(LayerSpec::Output),
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for LayerSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<LayerSpec> for String {
    fn from(l: LayerSpec) -> String {
        l.to_string()
    }
}

/// Four 3x3 conv layers in two pooled blocks, one hidden dense layer.
pub fn default_arch() -> Vec<LayerSpec> {
    use LayerSpec::*;
    vec![
        LayerSpec::conv(16),
        LayerSpec::conv(16),
        MaxPool2x2,
        LayerSpec::conv(32),
        LayerSpec::conv(32),
        MaxPool2x2,
        Flatten,
        LayerSpec::dense(64),
        Output,
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Op {
    Conv { in_c: usize, out_c: usize, h: usize, w: usize, relu: bool },
    Pool { c: usize, h: usize, w: usize },
    Flatten,
    Dense { n_in: usize, n_out: usize, relu: bool },
    Output { n_in: usize, n_out: usize },
}

/// A layer with resolved shapes and parameter offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Plan {
    pub op: Op,
    pub in_len: usize,
    pub out_len: usize,
    pub w_off: usize,
    pub w_len: usize,
    pub b_off: usize,
    pub b_len: usize,
}

impl Plan {
    pub fn fan_in(&self) -> usize {
        match self.op {
            Op::Conv { in_c, .. } => in_c * 9,
            Op::Dense { n_in, .. } | Op::Output { n_in, .. } => n_in,
            _ => 0,
        }
    }

    pub fn has_params(&self) -> bool {
        self.w_len > 0
    }
}

/// Propagates shapes from a `k x k x 1` input through `specs`, returning the
/// per-layer plans and the total parameter count.
pub(crate) fn plan(specs: &[LayerSpec], k: usize, n_classes: usize) -> Result<(Vec<Plan>, usize)> {
    if !(n_classes == 2 || n_classes == 3) {
        return Err(Error::BadArchitecture(format!("n_classes must be 2 or 3, got {n_classes}")));
    }
    if k == 0 {
        return Err(Error::BadArchitecture("input size must be positive".into()));
    }
    enum Shape {
        Image(usize, usize, usize),
        Flat(usize),
    }
    let mut shape = Shape::Image(1, k, k);
    let mut plans = Vec::with_capacity(specs.len());
    let mut off = 0;
    let mut push = |op: Op, in_len: usize, out_len: usize, w_len: usize, b_len: usize| {
        plans.push(Plan { op, in_len, out_len, w_off: off, w_len, b_off: off + w_len, b_len });
        off += w_len + b_len;
    };
    for (i, spec) in specs.iter().enumerate() {
        let err = |m: &str| Error::BadArchitecture(format!("layer {i} ({spec}): {m}"));
        if i + 1 == specs.len() && *spec != LayerSpec::Output {
            return Err(err("last layer must be output"));
        }
        shape = match (*spec, shape) {
            (LayerSpec::Conv3x3 { channels, activation }, Shape::Image(c, h, w)) => {
                let op = Op::Conv { in_c: c, out_c: channels, h, w, relu: activation == Activation::Relu };
                push(op, c * h * w, channels * h * w, channels * c * 9, channels);
                Shape::Image(channels, h, w)
            }
            (LayerSpec::MaxPool2x2, Shape::Image(c, h, w)) => {
                if h / 2 == 0 || w / 2 == 0 {
                    return Err(err(&format!("pooling a {h}x{w} map leaves nothing")));
                }
                push(Op::Pool { c, h, w }, c * h * w, c * (h / 2) * (w / 2), 0, 0);
                Shape::Image(c, h / 2, w / 2)
            }
            (LayerSpec::Flatten, Shape::Image(c, h, w)) => {
                push(Op::Flatten, c * h * w, c * h * w, 0, 0);
                Shape::Flat(c * h * w)
            }
            (LayerSpec::Dense { units, activation }, Shape::Flat(n)) => {
                push(Op::Dense { n_in: n, n_out: units, relu: activation == Activation::Relu }, n, units, n * units, units);
                Shape::Flat(units)
            }
            (LayerSpec::Output, Shape::Flat(n)) => {
                if i + 1 != specs.len() {
                    return Err(err("output must be the last layer"));
                }
                let n_out = if n_classes == 2 { 1 } else { n_classes };
                push(Op::Output { n_in: n, n_out }, n, n_out, n * n_out, n_out);
                Shape::Flat(n_out)
            }
            (LayerSpec::Dense { .. } | LayerSpec::Output, Shape::Image(..)) => {
                return Err(err("needs a flatten before it"));
            }
            (_, Shape::Flat(_)) => return Err(err("image layer after flatten")),
        };
    }
    if plans.is_empty() {
        return Err(Error::BadArchitecture("empty architecture".into()));
    }
    Ok((plans, off))
}
