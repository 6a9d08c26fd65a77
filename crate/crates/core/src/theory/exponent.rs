//! The permutation-typicality exponent `E_alpha` and its finite-length
//! corrections.
//!
//! `E_alpha` bounds the exponent of the probability that a sequence pair,
//! with the second sequence permuted by a permutation fixing a fraction
//! `alpha` of positions, stays jointly typical:
//!
//! ```text
//! E_alpha = min_{t'} 1/2 ( abar D(t' || P_X) + alpha D(t'' || P_X)
//!                          + D(P_XY || abar P_X P_Y'' + alpha P_XY) )
//! ```
//!
//! with `abar = 1 - alpha`, `t'' = (P_X - abar t') / alpha`,
//! `P_Y''(y) = sum_x t'(x) P_{Y|X}(y|x)`, and `t'` ranging over
//! distributions with `t'(x)` in `[(P_X(x) - alpha) / abar, P_X(x) / abar]`.
//! The objective is convex in `t'`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::info::{kl, mutual_information};
use crate::error::{Error, Result};
use crate::model::EdgeDistribution;

const GOLDEN_TOL_BINARY: f64 = 1e-9;
const GOLDEN_TOL_PAIR: f64 = 1e-10;
const MULTISTART: usize = 10;
const MAX_SWEEPS: usize = 500;
const MULTISTART_SEED: u64 = 0x5eed_e0e0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentResult {
    pub alpha: f64,
    /// `E_alpha` in bits.
    pub value: f64,
    /// The minimizing `t'`.
    pub minimizer: Vec<f64>,
    pub t_double_prime: Vec<f64>,
    pub py_double_prime: Vec<f64>,
}

/// Lower and upper bounds of the feasible box for `t'`.
pub fn feasible_box(dist: &EdgeDistribution, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    let abar = 1.0 - alpha;
    let px = dist.marginal_x();
    if abar <= 0.0 {
        return (vec![0.0; px.len()], vec![1.0; px.len()]);
    }
    let lo = px.iter().map(|&p| ((p - alpha) / abar).max(0.0)).collect();
    let hi = px.iter().map(|&p| (p / abar).min(1.0)).collect();
    (lo, hi)
}

/// Evaluates the exponent objective at `t'` (assumed feasible).
pub fn objective(dist: &EdgeDistribution, alpha: f64, t_prime: &[f64]) -> f64 {
    let parts = Parts::new(dist, alpha, t_prime);
    parts.value
}

struct Parts {
    value: f64,
    t_double_prime: Vec<f64>,
    py_double_prime: Vec<f64>,
}

impl Parts {
    fn new(dist: &EdgeDistribution, alpha: f64, t_prime: &[f64]) -> Self {
        let ell = dist.ell();
        let abar = 1.0 - alpha;
        let px = dist.marginal_x();

        let t_double_prime: Vec<f64> = if alpha > 0.0 {
            px.iter().zip(t_prime).map(|(&p, &t)| ((p - abar * t) / alpha).max(0.0)).collect()
        } else {
            px.to_vec()
        };

        let mut py_double_prime = vec![0.0; ell];
        for x in 0..ell {
            if px[x] > 0.0 && t_prime[x] > 0.0 {
                for (y, v) in py_double_prime.iter_mut().enumerate() {
                    *v += t_prime[x] * dist.joint(x, y) / px[x];
                }
            }
        }

        let mixture: Vec<f64> = (0..ell * ell)
            .map(|k| abar * px[k / ell] * py_double_prime[k % ell] + alpha * dist.joint_flat()[k])
            .collect();

        let mut value = abar * kl(t_prime, px) + kl(dist.joint_flat(), &mixture);
        if alpha > 0.0 {
            value += alpha * kl(&t_double_prime, px);
        }
        Self { value: 0.5 * value, t_double_prime, py_double_prime }
    }
}

/// Golden-section minimum of a convex function on `[a, b]`, also checking
/// both ends.
fn golden<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let (fa0, fb0) = (f(a), f(b));
    let (a0, b0) = (a, b);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    let mut best = (mid, f(mid));
    for cand in [(a0, fa0), (b0, fb0), (c, fc), (d, fd)] {
        if cand.1 < best.1 {
            best = cand;
        }
    }
    best
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    Ok(())
}

/// Computes `E_alpha`: golden-section search over the feasible interval
/// for binary alphabets, pairwise coordinate descent with multistart
/// otherwise.
pub fn exponent(dist: &EdgeDistribution, alpha: f64) -> Result<ExponentResult> {
    check_alpha(alpha)?;
    let px = dist.marginal_x().to_vec();
    if alpha == 0.0 {
        return Ok(ExponentResult {
            alpha,
            value: 0.5 * mutual_information(dist),
            minimizer: px.clone(),
            t_double_prime: px,
            py_double_prime: dist.marginal_y().to_vec(),
        });
    }
    if alpha == 1.0 {
        return Ok(ExponentResult {
            alpha,
            value: 0.0,
            minimizer: px.clone(),
            t_double_prime: px,
            py_double_prime: dist.marginal_y().to_vec(),
        });
    }

    let (lo, hi) = feasible_box(dist, alpha);
    assert!(
        px.iter().zip(lo.iter().zip(&hi)).all(|(&p, (&l, &h))| l <= p + 1e-12 && p <= h + 1e-12),
        "P_X must be feasible"
    );

    let t = if dist.ell() == 2 { minimize_binary(dist, alpha, &lo, &hi) } else { minimize_general(dist, alpha, &lo, &hi) };
    let parts = Parts::new(dist, alpha, &t);
    Ok(ExponentResult {
        alpha,
        value: parts.value.max(0.0),
        minimizer: t,
        t_double_prime: parts.t_double_prime,
        py_double_prime: parts.py_double_prime,
    })
}

fn minimize_binary(dist: &EdgeDistribution, alpha: f64, lo: &[f64], hi: &[f64]) -> Vec<f64> {
    let a = lo[0].max(1.0 - hi[1]);
    let b = hi[0].min(1.0 - lo[1]);
    let px = dist.marginal_x();
    let f = |s: f64| objective(dist, alpha, &[s, 1.0 - s]);
    let (mut s, fs) = golden(f, a, b.max(a), GOLDEN_TOL_BINARY);
    if f(px[0]) < fs {
        s = px[0];
    }
    vec![s, 1.0 - s]
}

/// Shifts mass between coordinate pairs, each time minimizing exactly
/// along the feasible segment, until a sweep gains nothing.
fn coordinate_descent(dist: &EdgeDistribution, alpha: f64, lo: &[f64], hi: &[f64], mut t: Vec<f64>) -> (Vec<f64>, f64) {
    let ell = t.len();
    let mut cur = objective(dist, alpha, &t);
    for _ in 0..MAX_SWEEPS {
        let before = cur;
        for i in 0..ell {
            for j in i + 1..ell {
                let dlo = (lo[i] - t[i]).max(t[j] - hi[j]);
                let dhi = (hi[i] - t[i]).min(t[j] - lo[j]);
                if dhi - dlo < 1e-15 {
                    continue;
                }
                let eval = |d: f64| {
                    let mut s = t.clone();
                    s[i] += d;
                    s[j] -= d;
                    objective(dist, alpha, &s)
                };
                let (d, fd) = golden(eval, dlo, dhi, GOLDEN_TOL_PAIR);
                if fd < cur {
                    t[i] += d;
                    t[j] -= d;
                    cur = fd;
                }
            }
        }
        if before - cur < 1e-14 {
            break;
        }
    }
    (t, cur)
}

fn random_feasible(lo: &[f64], hi: &[f64], start: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let ell = start.len();
    let mut t = start.to_vec();
    for _ in 0..4 * ell {
        let i = rng.random_range(0..ell);
        let j = rng.random_range(0..ell);
        if i == j {
            continue;
        }
        let dlo = (lo[i] - t[i]).max(t[j] - hi[j]);
        let dhi = (hi[i] - t[i]).min(t[j] - lo[j]);
        if dhi > dlo {
            let d = rng.random_range(dlo..=dhi);
            t[i] += d;
            t[j] -= d;
        }
    }
    t
}

fn minimize_general(dist: &EdgeDistribution, alpha: f64, lo: &[f64], hi: &[f64]) -> Vec<f64> {
    let px = dist.marginal_x();
    let (mut best, mut best_val) = coordinate_descent(dist, alpha, lo, hi, px.to_vec());
    let mut rng = ChaCha8Rng::seed_from_u64(MULTISTART_SEED);
    for _ in 0..MULTISTART {
        let start = random_feasible(lo, hi, px, &mut rng);
        let (t, v) = coordinate_descent(dist, alpha, lo, hi, start);
        if v < best_val {
            best = t;
            best_val = v;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Corrections {
    pub zeta: f64,
    pub delta: f64,
    /// The trailing `O(eps)` term of `delta` is taken as 0.
    pub delta_residual_dropped: bool,
}

/// `zeta_n = (3/2 |X|^2 |Y| + 6 |X||Y|) log2(n + 1) / n`.
pub fn zeta(ell_x: usize, ell_y: usize, n_prime: u64) -> f64 {
    let (lx, ly) = (ell_x as f64, ell_y as f64);
    let n = n_prime as f64;
    (1.5 * lx * lx * ly + 6.0 * lx * ly) * (n + 1.0).log2() / n
}

/// `delta_eps = eps |X||Y| |max_{supp} log2(P / (alpha P + abar P_X P_Y))|`.
pub fn delta(epsilon: f64, dist: &EdgeDistribution, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::OutOfRange(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    if epsilon == 0.0 {
        return Ok(0.0);
    }
    let ell = dist.ell();
    let (px, py) = (dist.marginal_x(), dist.marginal_y());
    let abar = 1.0 - alpha;
    let mut max_log = f64::NEG_INFINITY;
    for x in 0..ell {
        for y in 0..ell {
            let p = dist.joint(x, y);
            if p > 0.0 {
                max_log = max_log.max((p / (alpha * p + abar * px[x] * py[y])).log2());
            }
        }
    }
    Ok(epsilon * (ell * ell) as f64 * max_log.abs())
}

pub fn corrections(ell_x: usize, ell_y: usize, n_prime: u64, epsilon: f64, dist: &EdgeDistribution, alpha: f64) -> Result<Corrections> {
    if n_prime == 0 {
        return Err(Error::OutOfRange("sequence length must be at least 1".into()));
    }
    if ell_x != dist.ell() || ell_y != dist.ell() {
        return Err(Error::DimensionMismatch { expected: dist.ell(), got: ell_x.max(ell_y) });
    }
    Ok(Corrections { zeta: zeta(ell_x, ell_y, n_prime), delta: delta(epsilon, dist, alpha)?, delta_residual_dropped: true })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(rows: &[&[f64]]) -> EdgeDistribution {
        EdgeDistribution::new(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    /// Brute-force scan of the binary feasible interval with repeated zoom.
    fn scan_binary(dist: &EdgeDistribution, alpha: f64) -> f64 {
        let (lo, hi) = feasible_box(dist, alpha);
        let (mut a, mut b) = (lo[0].max(1.0 - hi[1]), hi[0].min(1.0 - lo[1]));
        let mut best = f64::INFINITY;
        for _ in 0..12 {
            let step = (b - a) / 100.0;
            let mut arg = a;
            for k in 0..=100 {
                let s = a + step * k as f64;
                let v = objective(dist, alpha, &[s, 1.0 - s]);
                if v < best {
                    best = v;
                    arg = s;
                }
            }
            (a, b) = ((arg - 2.0 * step).max(a), (arg + 2.0 * step).min(b));
        }
        best
    }

    #[test]
    fn boundary_values() {
        let dist = d(&[&[0.4, 0.1], &[0.1, 0.4]]);
        let e0 = exponent(&dist, 0.0).unwrap();
        assert!((e0.value - 0.13904).abs() < 1e-5);
        assert!((e0.value - 0.5 * mutual_information(&dist)).abs() < 1e-15);
        assert_eq!(exponent(&dist, 1.0).unwrap().value, 0.0);
        assert!(matches!(exponent(&dist, 1.5), Err(Error::AlphaOutOfRange(_))));
        assert!(exponent(&dist, -0.1).is_err());
        // objective at alpha = 0 agrees with the closed form
        assert!((objective(&dist, 0.0, dist.marginal_x()) - e0.value).abs() < 1e-12);
    }

    #[test]
    fn product_distributions_vanish() {
        let prod = EdgeDistribution::product(&[0.2, 0.3, 0.5], &[0.6, 0.1, 0.3]).unwrap();
        for k in 0..=20 {
            let e = exponent(&prod, k as f64 / 20.0).unwrap();
            assert!(e.value.abs() < 1e-9, "{k}: {}", e.value);
        }
    }

    #[test]
    fn binary_matches_scan() {
        for dist in [d(&[&[0.4, 0.1], &[0.1, 0.4]]), d(&[&[0.6, 0.1], &[0.05, 0.25]]), d(&[&[0.5, 0.0], &[0.0, 0.5]])] {
            for k in 0..=10 {
                let alpha = k as f64 / 10.0;
                let e = exponent(&dist, alpha).unwrap();
                assert!((e.value - scan_binary(&dist, alpha)).abs() < 1e-7, "alpha {alpha}");
            }
        }
    }

    #[test]
    fn minimizer_is_feasible() {
        let dist = d(&[&[0.3, 0.05, 0.05], &[0.05, 0.2, 0.05], &[0.02, 0.08, 0.2]]);
        for k in 1..10 {
            let alpha = k as f64 / 10.0;
            let e = exponent(&dist, alpha).unwrap();
            let (lo, hi) = feasible_box(&dist, alpha);
            for x in 0..3 {
                assert!(e.minimizer[x] >= lo[x] - 1e-9 && e.minimizer[x] <= hi[x] + 1e-9);
                assert!(e.t_double_prime[x] >= -1e-9);
            }
            assert!((e.minimizer.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!((e.t_double_prime.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(e.value >= 0.0);
            assert!(e.value <= objective(&dist, alpha, dist.marginal_x()) + 1e-12);
        }
    }

    #[test]
    fn ternary_beats_random_feasible_points() {
        let dist = d(&[&[0.3, 0.05, 0.05], &[0.05, 0.2, 0.05], &[0.02, 0.08, 0.2]]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for k in 1..10 {
            let alpha = k as f64 / 10.0;
            let e = exponent(&dist, alpha).unwrap();
            let (lo, hi) = feasible_box(&dist, alpha);
            for _ in 0..300 {
                let t = random_feasible(&lo, &hi, dist.marginal_x(), &mut rng);
                assert!(objective(&dist, alpha, &t) >= e.value - 1e-7);
            }
        }
    }

    #[test]
    fn correction_examples() {
        let expect = 36.0 * 101f64.log2() / 100.0;
        assert!((zeta(2, 2, 100) - expect).abs() < 1e-12);
        assert!((zeta(2, 2, 100) - 2.3970).abs() < 1e-4);
        let dist = d(&[&[0.4, 0.1], &[0.1, 0.4]]);
        assert_eq!(delta(0.0, &dist, 0.3).unwrap(), 0.0);
        assert_eq!(delta(0.05, &dist, 1.0).unwrap(), 0.0);
        // alpha = 0: max log2(P / P_X P_Y) = log2(0.4 / 0.25)
        let d0 = delta(0.05, &dist, 0.0).unwrap();
        assert!((d0 - 0.05 * 4.0 * (1.6f64).log2()).abs() < 1e-12);
        let c = corrections(2, 2, 100, 0.05, &dist, 0.0).unwrap();
        assert!(c.zeta > 0.0 && c.delta_residual_dropped);
        assert!(corrections(2, 2, 0, 0.05, &dist, 0.0).is_err());
    }
}
