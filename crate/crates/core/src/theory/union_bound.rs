//! Finite-n union bound on the probability that a wrong labeling passes
//! the matcher.
//!
//! Labelings agreeing with the truth on exactly `i` vertices induce
//! `i (i - 1) / 2` fixed vertex pairs, so each is typical with probability
//! at most `2^{-N (E_{i(i-1)/(n(n-1))} - zeta - delta)}` with
//! `N = n (n - 1) / 2`. Counting such labelings (at most `n^{n-i}`) and
//! their chance of surviving the ambiguity sets gives
//!
//! ```text
//! sum_i 2^{(n - i) L - N (E_{i(i-1)/(n(n-1))} - zeta - delta)}
//! ```
//!
//! with `L = log2 n` (seeds), `log2(n p)`, `log2(n E[P])` or
//! `log2(n sqrt(theta))`. The sum runs over wrong labelings only, i.e.
//! `i <= n - 1`, starting at the seed count for seeded matching.

use serde::{Deserialize, Serialize};

use super::exponent::{delta, exponent, zeta};
use crate::ambiguity::{ProbabilityLaw, Scenario};
use crate::error::{Error, Result};
use crate::model::{ut_len, EdgeDistribution};

pub const UNION_BOUND_MAX_N: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnionBoundTerm {
    /// Number of vertices where the labeling agrees with the truth.
    pub i: usize,
    /// Pair-level fixed-point fraction `i (i - 1) / (n (n - 1))`.
    pub alpha: f64,
    pub exponent: f64,
    /// `log2` of the term.
    pub log2_term: f64,
}

fn per_vertex_log(scenario: &Scenario, n: usize) -> f64 {
    let log_n = (n as f64).log2();
    match scenario {
        Scenario::Seeded(_) => log_n,
        Scenario::Equiprobable(e) => log_n + e.p.log2(),
        Scenario::RandomP(r) => log_n + r.family.mean().log2(),
        Scenario::Symmetric(s) => log_n + 0.5 * s.theta().log2(),
    }
}

/// All terms of the sum, in increasing `i`.
pub fn union_bound_terms(
    scenario: &Scenario,
    dist: &EdgeDistribution,
    n: usize,
    epsilon: f64,
    include_corrections: bool,
) -> Result<Vec<UnionBoundTerm>> {
    if n > UNION_BOUND_MAX_N {
        return Err(Error::TooLarge { n, limit: UNION_BOUND_MAX_N });
    }
    if n < 2 {
        return Err(Error::InvalidN(n));
    }
    scenario.validate(n).map_err(|e| Error::InvalidScenarioParams(e.to_string()))?;
    let lower = match scenario {
        Scenario::Seeded(s) => s.seed_count(n)?,
        _ => 0,
    };
    let big_n = ut_len(n) as f64;
    let z = if include_corrections { zeta(dist.ell(), dist.ell(), ut_len(n) as u64) } else { 0.0 };
    let per_vertex = per_vertex_log(scenario, n);
    let pairs = (n * (n - 1)) as f64;
    (lower..n)
        .map(|i| {
            let alpha = (i * i.saturating_sub(1)) as f64 / pairs;
            let e = exponent(dist, alpha)?.value;
            let d = if include_corrections { delta(epsilon, dist, alpha)? } else { 0.0 };
            // (n - i) >= 1 here, so a zero probability gives -inf, not NaN
            let log2_term = (n - i) as f64 * per_vertex - big_n * (e - z - d);
            Ok(UnionBoundTerm { i, alpha, exponent: e, log2_term })
        })
        .collect()
}

/// The union-bound estimate of the probability that some wrong labeling
/// is a candidate. Values of 1 or more are vacuous.
pub fn union_bound_failure_estimate(
    scenario: &Scenario,
    dist: &EdgeDistribution,
    n: usize,
    epsilon: f64,
    include_corrections: bool,
) -> Result<f64> {
    let terms = union_bound_terms(scenario, dist, n, epsilon, include_corrections)?;
    Ok(terms.iter().fold(0.0, |acc, t| acc + t.log2_term.exp2()))
}
