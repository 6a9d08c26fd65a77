//! Divergence and mutual information in bits.

use crate::error::{Error, Result};
use crate::model::EdgeDistribution;

/// `D(p || q) = sum p log2(p / q)`, with `0 log 0 = 0`. Returns
/// `f64::INFINITY` when `p` puts mass where `q` has none.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch { expected: p.len(), got: q.len() });
    }
    let mut d = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a <= 0.0 {
            continue;
        }
        if b <= 0.0 {
            return Ok(f64::INFINITY);
        }
        d += a * (a / b).log2();
    }
    // rounding can leave a tiny negative value for p ~ q
    Ok(d.max(0.0))
}

/// Same as [`kl_divergence`] for slices known to have equal length.
pub(crate) fn kl(p: &[f64], q: &[f64]) -> f64 {
    kl_divergence(p, q).expect("equal lengths")
}

/// `I(X;Y) = D(P_XY || P_X P_Y)`.
pub fn mutual_information(dist: &EdgeDistribution) -> f64 {
    let ell = dist.ell();
    let (px, py) = (dist.marginal_x(), dist.marginal_y());
    let product: Vec<f64> = (0..ell * ell).map(|k| px[k / ell] * py[k % ell]).collect();
    kl(dist.joint_flat(), &product)
}

/// Largest `log2(P_X P_Y / P_XY)` over the support, clipped at 0.
pub fn max_log_dependence_ratio(dist: &EdgeDistribution) -> f64 {
    let ell = dist.ell();
    let (px, py) = (dist.marginal_x(), dist.marginal_y());
    let mut best = 0.0f64;
    for x in 0..ell {
        for y in 0..ell {
            let p = dist.joint(x, y);
            if p > 0.0 {
                best = best.max((px[x] * py[y] / p).log2());
            }
        }
    }
    best
}
