//! Joint types and the strong-typicality test on upper-triangle vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ut_len, EdgeDistribution, UtVector};

/// Scale of the default epsilon rule `c * sqrt(ln N / N)`.
pub const DEFAULT_EPSILON_SCALE: f64 = 2.0;

/// Slack absorbing float noise in `|t - P| <= eps`; far below any `1/N`.
const CMP_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointType {
    ell: usize,
    counts: Vec<u64>,
    length: u64,
}

impl JointType {
    pub fn from_counts(ell: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != ell * ell {
            return Err(Error::DimensionMismatch { expected: ell * ell, got: counts.len() });
        }
        let length = counts.iter().sum();
        Ok(Self { ell, counts, length })
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn length(&self) -> u64 {
        self.length
    }

    pub fn count(&self, x: usize, y: usize) -> u64 {
        self.counts[x * self.ell + y]
    }

    pub fn freq(&self, x: usize, y: usize) -> f64 {
        self.count(x, y) as f64 / self.length as f64
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypicalityParams {
    epsilon: f64,
}

impl TypicalityParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::OutOfRange(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(Self { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// Joint type of two attribute vectors over an alphabet of size `ell`.
pub fn joint_type(u1: &UtVector, u2: &UtVector, ell: usize) -> Result<JointType> {
    if u1.len() != u2.len() {
        return Err(Error::LengthMismatch(u1.len(), u2.len()));
    }
    let mut counts = vec![0u64; ell * ell];
    for (&x, &y) in u1.as_slice().iter().zip(u2.as_slice()) {
        let (x, y) = (x as usize, y as usize);
        if x >= ell || y >= ell {
            return Err(Error::OutOfRange(format!("attribute pair ({x}, {y}) outside alphabet {ell}")));
        }
        counts[x * ell + y] += 1;
    }
    JointType::from_counts(ell, counts)
}

/// Whether a cell count out of `length` is within `eps` of `p`. Zero-probability
/// cells must be empty. An empty sequence passes.
#[inline]
pub fn cell_ok(count: u64, length: u64, p: f64, eps: f64) -> bool {
    if p == 0.0 {
        return count == 0;
    }
    if length == 0 {
        return true;
    }
    (count as f64 / length as f64 - p).abs() <= eps + CMP_SLACK
}

/// Whether a final count known to lie in `[lo, hi]` can still pass
/// [`cell_ok`].
#[inline]
pub(crate) fn cell_reachable(lo: u64, hi: u64, length: u64, p: f64, eps: f64) -> bool {
    if p == 0.0 {
        return lo == 0;
    }
    if length == 0 {
        return true;
    }
    let len = length as f64;
    lo as f64 / len - p <= eps + CMP_SLACK && p - hi as f64 / len <= eps + CMP_SLACK
}

pub fn type_is_typical(t: &JointType, dist: &EdgeDistribution, params: &TypicalityParams) -> bool {
    let ell = dist.ell();
    t.ell == ell
        && (0..ell).all(|x| (0..ell).all(|y| cell_ok(t.count(x, y), t.length, dist.joint(x, y), params.epsilon)))
}

/// Strong typicality: every cell within `eps` of `P_{X,Y}` and no mass
/// where `P_{X,Y}` vanishes.
pub fn is_jointly_typical(u1: &UtVector, u2: &UtVector, dist: &EdgeDistribution, params: &TypicalityParams) -> Result<bool> {
    let t = joint_type(u1, u2, dist.ell())?;
    Ok(type_is_typical(&t, dist, params))
}

/// `c * sqrt(ln N / N)` with `N = n(n-1)/2`, optionally clamped to half
/// the smallest nonzero joint probability. Returns 1 for `n = 2`, where
/// the formula degenerates to 0.
pub fn default_epsilon(n: usize, scale: f64, clamp_to: Option<&EdgeDistribution>) -> f64 {
    let big_n = ut_len(n) as f64;
    let eps = if big_n < 2.0 { 1.0 } else { scale * (big_n.ln() / big_n).sqrt() };
    match clamp_to {
        Some(d) => eps.min(0.5 * d.min_nonzero()),
        None => eps,
    }
}
