//! The column-wise power-mean operator.
//!
//! For a sequence `x_1..x_n` and exponent `p` the power mean is
//! `((x_1^p + ... + x_n^p) / n)^(1/p)`, with `p = 0` the geometric mean and
//! `p = ±inf` the maximum and minimum. Word vectors have entries of both
//! signs, so several cases have no real value; those are resolved by a
//! [`SingularityPolicy`].

use std::fmt;
use std::ops::AddAssign;
use std::str::FromStr;

use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Exponent of a power mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PValue {
    Finite(f64),
    PlusInfinity,
    MinusInfinity,
}

impl PValue {
    pub const MEAN: Self = Self::Finite(1.0);
    pub const MAX: Self = Self::PlusInfinity;
    pub const MIN: Self = Self::MinusInfinity;

    pub fn finite(p: f64) -> Result<Self> {
        if p.is_finite() {
            Ok(Self::Finite(p))
        } else {
            Err(Error::InvalidArgument(format!("p must be finite, got {p}")))
        }
    }
}

impl fmt::Display for PValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(p) => write!(f, "{p}"),
            Self::PlusInfinity => f.write_str("inf"),
            Self::MinusInfinity => f.write_str("-inf"),
        }
    }
}

impl FromStr for PValue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "+inf" | "infinity" | "+infinity" => Ok(Self::PlusInfinity),
            "-inf" | "-infinity" => Ok(Self::MinusInfinity),
            other => other
                .parse::<f64>()
                .ok()
                .filter(|p| p.is_finite())
                .map(Self::Finite)
                .ok_or_else(|| Error::InvalidArgument(format!("invalid p-value `{s}`"))),
        }
    }
}

impl Serialize for PValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses a comma-separated list such as `-inf,1,inf`.
pub fn parse_p_list(s: &str) -> Result<Vec<PValue>> {
    let list = s
        .split(',')
        .map(str::parse)
        .collect::<Result<Vec<PValue>>>()?;
    if list.is_empty() {
        return Err(Error::InvalidArgument("empty p-value list".into()));
    }
    Ok(list)
}

pub fn format_p_list(ps: &[PValue]) -> String {
    ps.iter()
        .map(PValue::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

/// What to do where a power mean has no finite real value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OnUndefined {
    /// Write 0 and count the entry.
    #[default]
    NanToZero,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularityPolicy {
    /// Magnitudes below this are treated as zero when raised to a negative
    /// power or when taking the root of a mean for negative `p`.
    pub epsilon: f64,
    pub on_undefined: OnUndefined,
}

impl Default for SingularityPolicy {
    fn default() -> Self {
        Self {
            epsilon: 1e-12,
            on_undefined: OnUndefined::NanToZero,
        }
    }
}

impl SingularityPolicy {
    pub fn strict() -> Self {
        Self {
            on_undefined: OnUndefined::Error,
            ..Self::default()
        }
    }
}

/// Counters accumulated while pooling.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolStats {
    /// Output entries replaced by 0 under [`OnUndefined::NanToZero`].
    pub undefined: usize,
    /// Tokens missing from a vocabulary.
    pub oov: usize,
    /// Lookups that fell back to a single zero row.
    pub fallbacks: usize,
}

impl AddAssign for PoolStats {
    fn add_assign(&mut self, rhs: Self) {
        self.undefined += rhs.undefined;
        self.oov += rhs.oov;
        self.fallbacks += rhs.fallbacks;
    }
}

/// Computes the power mean of every column of `w` (rows are words).
///
/// Undefined entries are either replaced by zero and counted in
/// `stats.undefined`, or reported as [`Error::Undefined`] under the strict
/// policy.
pub fn power_mean(
    w: ArrayView2<'_, f64>,
    p: PValue,
    policy: &SingularityPolicy,
    stats: &mut PoolStats,
) -> Result<Array1<f64>> {
    if w.nrows() == 0 {
        return Err(Error::InvalidArgument(
            "power mean of an empty sequence".into(),
        ));
    }
    let mut out = Array1::zeros(w.ncols());
    for (dim, (column, slot)) in w.columns().into_iter().zip(out.iter_mut()).enumerate() {
        match column_power_mean(column, p, policy.epsilon) {
            Ok(v) => *slot = v,
            Err(value) => match policy.on_undefined {
                OnUndefined::NanToZero => {
                    *slot = 0.0;
                    stats.undefined += 1;
                }
                OnUndefined::Error => return Err(Error::Undefined { p, dim, value }),
            },
        }
    }
    Ok(out)
}

/// Power mean of one sequence; `Err` carries the offending value.
fn column_power_mean(xs: ArrayView1<'_, f64>, p: PValue, eps: f64) -> Result<f64, f64> {
    let n = xs.len() as f64;
    match p {
        PValue::PlusInfinity => Ok(xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
        PValue::MinusInfinity => Ok(xs.iter().copied().fold(f64::INFINITY, f64::min)),
        PValue::Finite(1.0) => Ok(xs.sum() / n),
        PValue::Finite(0.0) => {
            let mut log_sum = 0.0;
            for &x in xs {
                if x <= 0.0 {
                    return Err(x);
                }
                log_sum += x.ln();
            }
            Ok((log_sum / n).exp())
        }
        PValue::Finite(p) => {
            let integral = p.fract() == 0.0;
            let mut sum = 0.0;
            for &x in xs {
                if x < 0.0 && !integral {
                    return Err(x);
                }
                if p < 0.0 && x.abs() < eps {
                    return Err(x);
                }
                sum += if integral {
                    x.powi(p as i32)
                } else {
                    x.powf(p)
                };
            }
            let mean = sum / n;
            let value = root(mean, p, eps)?;
            if value.is_finite() {
                Ok(value)
            } else {
                Err(mean)
            }
        }
    }
}

/// `mean^(1/p)` over the reals; odd integer `p` takes the sign-preserving root.
fn root(mean: f64, p: f64, eps: f64) -> Result<f64, f64> {
    if p < 0.0 && mean.abs() < eps {
        return Err(mean);
    }
    let odd = p.fract() == 0.0 && (p as i64) % 2 != 0;
    if mean < 0.0 && !odd {
        return Err(mean);
    }
    let magnitude = if p == -1.0 {
        mean.abs().recip()
    } else {
        mean.abs().powf(p.recip())
    };
    Ok(magnitude.copysign(mean))
}
