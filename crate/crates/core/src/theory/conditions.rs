//! Finite-n evaluation of the sufficient and necessary conditions for
//! successful typicality matching under each side-information scenario.
//!
//! Sufficiency is checked on a uniform `alpha` grid:
//!
//! ```text
//! 2 (1 - alpha) log2 n / (n - 1) <= E_{alpha^2} + side(alpha)
//! ```
//!
//! where `side` is 0 for seeds, `-2 (1 - alpha) log2 p / n` for
//! equiprobable sets, `-2 (1 - alpha) log2 E[P] / n` for random `P`, and
//! `-(1 - alpha) log2 theta / n` for symmetric sets. Necessity compares
//! `2 log2 n / n` (seeds: `2 (1 - gamma) log2 n / n`) against
//! `I(X;Y)` plus the analogous side term, with the `o(log n / n)` slack
//! dropped.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::exponent::{delta, exponent, zeta};
use super::info::{max_log_dependence_ratio, mutual_information};
use crate::ambiguity::{ProbabilityLaw, Scenario, SymmetricParams};
use crate::error::{Error, Result};
use crate::model::{ut_len, EdgeDistribution};
use crate::typicality::{default_epsilon, DEFAULT_EPSILON_SCALE};

pub const DEFAULT_GRID_SIZE: usize = 101;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConditionKind {
    Sufficient,
    Necessary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionRow {
    /// Grid point; absent for necessary conditions.
    pub alpha: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub scenario: String,
    pub kind: ConditionKind,
    pub n: usize,
    pub rows: Vec<ConditionRow>,
    pub overall: bool,
    /// Smallest `rhs - lhs` over the rows.
    pub margin: f64,
    /// `max |log2(P_X P_Y / P_XY)|^+ / log2 n`.
    pub regularity_ratio: f64,
    pub regularity_ok: bool,
    pub include_corrections: bool,
    pub notes: Vec<String>,
}

impl ConditionReport {
    fn new(scenario: &Scenario, kind: ConditionKind, n: usize, dist: &EdgeDistribution, rows: Vec<ConditionRow>) -> Self {
        let overall = rows.iter().all(|r| r.satisfied);
        let margin = rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
        let regularity_ratio = max_log_dependence_ratio(dist) / (n as f64).log2();
        Self {
            scenario: scenario.name().to_string(),
            kind,
            n,
            rows,
            overall,
            margin,
            regularity_ratio,
            regularity_ok: regularity_ratio < 1.0,
            include_corrections: false,
            notes: Vec::new(),
        }
    }

    pub fn alpha_grid(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.alpha).collect()
    }

    pub fn satisfied(&self) -> Vec<bool> {
        self.rows.iter().map(|r| r.satisfied).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub const CSV_HEADER: &'static str = "scenario,n,alpha,lhs,rhs,margin,satisfied";

    /// CSV rows without header; the alpha column is empty for necessary
    /// conditions.
    pub fn to_csv_rows(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            let alpha = r.alpha.map(|a| a.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{},{},{},{}", self.scenario, self.n, alpha, r.lhs, r.rhs, r.margin, r.satisfied);
        }
        out
    }

    /// Short human-readable summary.
    pub fn summary(&self) -> String {
        let kind = match self.kind {
            ConditionKind::Sufficient => "sufficient",
            ConditionKind::Necessary => "necessary",
        };
        let verdict = if self.overall { "satisfied" } else { "violated" };
        let mut s = format!(
            "{kind} condition ({}, n = {}): {verdict}, min margin {:.6e} over {} point(s)",
            self.scenario,
            self.n,
            self.margin,
            self.rows.len()
        );
        if !self.regularity_ok {
            let _ = write!(s, "; regularity ratio {:.3} >= 1", self.regularity_ratio);
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SufficiencyOptions {
    /// Upper end of the alpha grid; defaults to `1 - 1/sqrt(n)`.
    pub alpha_n: Option<f64>,
    pub grid_size: usize,
    pub include_corrections: bool,
    /// Typicality slack used by the `delta` correction; defaults to the
    /// unclamped default rule.
    pub epsilon: Option<f64>,
}

impl Default for SufficiencyOptions {
    fn default() -> Self {
        Self { alpha_n: None, grid_size: DEFAULT_GRID_SIZE, include_corrections: false, epsilon: None }
    }
}

pub fn default_alpha_n(n: usize) -> f64 {
    1.0 - 1.0 / (n as f64).sqrt()
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidScenarioParams(msg.into())
}

/// Range checks on scenario parameters; unlike the generators, the
/// seed fraction need not make `gamma * n` an integer here.
fn validate_params(scenario: &Scenario) -> Result<()> {
    match scenario {
        Scenario::Seeded(s) if !(0.0..=1.0).contains(&s.gamma) => Err(invalid(format!("gamma = {} outside [0, 1]", s.gamma))),
        Scenario::Equiprobable(e) if !(0.0..=1.0).contains(&e.p) => Err(invalid(format!("p = {} outside [0, 1]", e.p))),
        Scenario::RandomP(r) => r.family.validate().map_err(|e| invalid(e.to_string())),
        Scenario::Symmetric(s) => SymmetricParams::new(s.puv).map(|_| ()).map_err(|e| invalid(e.to_string())),
        _ => Ok(()),
    }
}

/// `-w log2(v)`, with `0 * inf` read as 0.
fn neg_log_weighted(w: f64, v: f64) -> f64 {
    if w == 0.0 {
        0.0
    } else {
        -w * v.log2()
    }
}

/// Probability whose log enters the side term: `p`, `E[P]` or `theta`.
fn side_probability(scenario: &Scenario) -> Option<f64> {
    match scenario {
        Scenario::Seeded(_) => None,
        Scenario::Equiprobable(e) => Some(e.p),
        Scenario::RandomP(r) => Some(r.family.mean()),
        Scenario::Symmetric(s) => Some(s.theta()),
    }
}

fn sufficient_side_term(scenario: &Scenario, n: usize, alpha: f64) -> f64 {
    let n = n as f64;
    let abar = 1.0 - alpha;
    match (scenario, side_probability(scenario)) {
        (Scenario::Symmetric(_), Some(theta)) => neg_log_weighted(abar / n, theta),
        (_, Some(p)) => neg_log_weighted(2.0 * abar / n, p),
        (_, None) => 0.0,
    }
}

/// Grid `[lower, alpha_n]` with `grid_size` points (one point if the
/// interval is degenerate).
fn alpha_grid(scenario: &Scenario, n: usize, opts: &SufficiencyOptions) -> Result<Vec<f64>> {
    let alpha_n = opts.alpha_n.unwrap_or_else(|| default_alpha_n(n));
    if !(alpha_n > 0.0 && alpha_n <= 1.0) {
        return Err(invalid(format!("alpha_n = {alpha_n} outside (0, 1]")));
    }
    if opts.grid_size < 2 {
        return Err(invalid("grid size must be at least 2"));
    }
    let lower = match scenario {
        Scenario::Seeded(s) => s.gamma,
        _ => 0.0,
    };
    if lower >= alpha_n {
        return Ok(vec![lower]);
    }
    let m = opts.grid_size - 1;
    Ok((0..=m).map(|k| if k == m { alpha_n } else { lower + (alpha_n - lower) * k as f64 / m as f64 }).collect())
}

/// Exponent values along a sufficiency grid, reusable across scenario
/// parameters that share the same grid.
#[derive(Debug, Clone)]
pub struct ExponentGrid {
    pub alphas: Vec<f64>,
    /// `E_{alpha^2}` per grid point.
    pub exponents: Vec<f64>,
    /// `zeta + delta` per grid point (zero when corrections are off).
    pub corrections: Vec<f64>,
}

impl ExponentGrid {
    pub fn new(scenario: &Scenario, dist: &EdgeDistribution, n: usize, opts: &SufficiencyOptions) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidN(n));
        }
        validate_params(scenario)?;
        let alphas = alpha_grid(scenario, n, opts)?;
        let exponents = alphas
            .par_iter()
            .map(|&a| exponent(dist, a * a).map(|e| e.value))
            .collect::<Result<Vec<_>>>()?;
        let corrections = if opts.include_corrections {
            let eps = opts.epsilon.unwrap_or_else(|| default_epsilon(n, DEFAULT_EPSILON_SCALE, None));
            let z = zeta(dist.ell(), dist.ell(), ut_len(n) as u64);
            alphas.iter().map(|&a| delta(eps, dist, a * a).map(|d| z + d)).collect::<Result<Vec<_>>>()?
        } else {
            vec![0.0; alphas.len()]
        };
        Ok(Self { alphas, exponents, corrections })
    }
}

/// Evaluates the sufficient condition with precomputed exponents.
pub fn check_sufficient_with(
    scenario: &Scenario,
    dist: &EdgeDistribution,
    n: usize,
    grid: &ExponentGrid,
    include_corrections: bool,
) -> Result<ConditionReport> {
    validate_params(scenario)?;
    let log_n = (n as f64).log2();
    let rows = grid
        .alphas
        .iter()
        .zip(grid.exponents.iter().zip(&grid.corrections))
        .map(|(&alpha, (&e, &corr))| {
            let lhs = 2.0 * (1.0 - alpha) * log_n / (n as f64 - 1.0);
            let rhs = e - corr + sufficient_side_term(scenario, n, alpha);
            ConditionRow { alpha: Some(alpha), lhs, rhs, margin: rhs - lhs, satisfied: lhs <= rhs }
        })
        .collect();
    let mut report = ConditionReport::new(scenario, ConditionKind::Sufficient, n, dist, rows);
    report.include_corrections = include_corrections;
    if include_corrections {
        report.notes.push("O(eps) residual of delta set to 0".into());
    }
    Ok(report)
}

pub fn check_sufficient(scenario: &Scenario, dist: &EdgeDistribution, n: usize, opts: &SufficiencyOptions) -> Result<ConditionReport> {
    let grid = ExponentGrid::new(scenario, dist, n, opts)?;
    check_sufficient_with(scenario, dist, n, &grid, opts.include_corrections)
}

/// Decay exponent `a` with `v = n^{-a}`.
fn decay_exponent(v: f64, n: usize) -> f64 {
    -v.log2() / (n as f64).log2()
}

pub fn check_necessary(scenario: &Scenario, dist: &EdgeDistribution, n: usize) -> Result<ConditionReport> {
    if n < 2 {
        return Err(Error::InvalidN(n));
    }
    validate_params(scenario)?;
    let nf = n as f64;
    let log_n = nf.log2();
    let info = mutual_information(dist);
    let (lhs, rhs) = match scenario {
        Scenario::Seeded(s) => (2.0 * (1.0 - s.gamma) * log_n / nf, info),
        Scenario::Equiprobable(e) => {
            let a = decay_exponent(e.p, n);
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::DecayExponentOutOfRange(a));
            }
            (2.0 * log_n / nf, info - 2.0 * e.p.log2() / nf)
        }
        Scenario::RandomP(r) => (2.0 * log_n / nf, info - 2.0 * r.family.mean().log2() / nf),
        Scenario::Symmetric(s) => {
            let z = decay_exponent(s.theta(), n);
            if !(z > 0.0 && z < 1.0) {
                return Err(Error::DecayExponentOutOfRange(z));
            }
            (2.0 * log_n / nf, info - s.theta().log2() / nf)
        }
    };
    let row = ConditionRow { alpha: None, lhs, rhs, margin: rhs - lhs, satisfied: lhs <= rhs };
    let mut report = ConditionReport::new(scenario, ConditionKind::Necessary, n, dist, vec![row]);
    report.notes.push("asymptotic slack dropped".into());
    Ok(report)
}

/// Largest `p` for which the equiprobable sufficient condition holds,
/// by bisection on `log2 p` (the condition is monotone in `p`). Returns
/// 1 when it holds everywhere and 0 when it holds nowhere above
/// `2^-1000`.
pub fn equiprobable_threshold(dist: &EdgeDistribution, n: usize, opts: &SufficiencyOptions) -> Result<f64> {
    use crate::ambiguity::EquiprobableParams;
    let at = |p: f64| Scenario::Equiprobable(EquiprobableParams { p });
    let grid = ExponentGrid::new(&at(1.0), dist, n, opts)?;
    let holds = |log_p: f64| -> Result<bool> {
        Ok(check_sufficient_with(&at(log_p.exp2()), dist, n, &grid, opts.include_corrections)?.overall)
    };
    if holds(0.0)? {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (-1000.0, 0.0);
    if !holds(lo)? {
        return Ok(0.0);
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if holds(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(f64::exp2(lo))
}
