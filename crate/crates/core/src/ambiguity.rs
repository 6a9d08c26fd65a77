//! Ambiguity sets: the four generators and exact counting of consistent
//! labelings.
//!
//! `bits[s][i]` is set iff label `i` is in the ambiguity set of vertex `s`
//! of the second graph. Every generator keeps the true label in its row.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::model::Labeling;

/// Largest `n` accepted by [`count_consistent_labelings_exact`].
pub const PERMANENT_MAX_N: usize = 30;
/// Largest `n` accepted by [`count_labelings_at_distance`] (`20!` fits in `u64`).
pub const DISTANCE_COUNT_MAX_N: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeededParams {
    pub gamma: f64,
}

impl SeededParams {
    /// Number of seeds `gamma * n`, which must be an integer in `[0, n]`.
    pub fn seed_count(&self, n: usize) -> Result<usize> {
        let k = self.gamma * n as f64;
        let r = k.round();
        if !self.gamma.is_finite() || (k - r).abs() > 1e-9 || r < 0.0 || r > n as f64 {
            return Err(Error::NonIntegralSeedCount(k));
        }
        Ok(r as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquiprobableParams {
    pub p: f64,
}

/// Law of the per-label inclusion probability `P_i`.
pub trait ProbabilityLaw {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64;
    fn mean(&self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PFamily {
    Beta { a: f64, b: f64 },
    PointMass(f64),
    /// Gaussian `(mu, var)` restricted to `[0, 1]`.
    TruncatedGaussian { mu: f64, var: f64 },
}

impl PFamily {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            PFamily::Beta { a, b } => a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0,
            PFamily::PointMass(p) => (0.0..=1.0).contains(&p),
            PFamily::TruncatedGaussian { mu, var } => mu.is_finite() && var.is_finite() && var > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidFamilyParams(format!("{self:?}")))
        }
    }

    /// Parses `beta:A,B`, `point:P` or `tgauss:MU,VAR`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::InvalidFamilyParams(s.to_string());
        let (kind, args) = s.split_once(':').ok_or_else(bad)?;
        let nums = args
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        let fam = match (kind.trim(), nums.as_slice()) {
            ("beta", [a, b]) => PFamily::Beta { a: *a, b: *b },
            ("point", [p]) => PFamily::PointMass(*p),
            ("tgauss", [mu, var]) => PFamily::TruncatedGaussian { mu: *mu, var: *var },
            _ => return Err(bad()),
        };
        fam.validate()?;
        Ok(fam)
    }

    pub fn label(&self) -> String {
        match *self {
            PFamily::Beta { a, b } => format!("beta:{a},{b}"),
            PFamily::PointMass(p) => format!("point:{p}"),
            PFamily::TruncatedGaussian { mu, var } => format!("tgauss:{mu},{var}"),
        }
    }
}

impl ProbabilityLaw for PFamily {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            PFamily::Beta { a, b } => {
                use rand_distr::Distribution;
                rand_distr::Beta::new(a, b).expect("validated beta parameters").sample(rng)
            }
            PFamily::PointMass(p) => p,
            PFamily::TruncatedGaussian { mu, var } => sample_truncated_gaussian(mu, var.sqrt(), rng),
        }
    }

    fn mean(&self) -> f64 {
        match *self {
            PFamily::Beta { a, b } => a / (a + b),
            PFamily::PointMass(p) => p,
            PFamily::TruncatedGaussian { mu, var } => truncated_gaussian_mean(mu, var.sqrt()),
        }
    }
}

fn sample_truncated_gaussian<R: Rng + ?Sized>(mu: f64, sd: f64, rng: &mut R) -> f64 {
    let std = Normal::standard();
    let lo = (0.0 - mu) / sd;
    let hi = (1.0 - mu) / sd;
    // Work in the lower tail where the CDF keeps its relative precision.
    let (lo, hi, flip) = if lo > 0.0 { (-hi, -lo, true) } else { (lo, hi, false) };
    let (clo, chi) = (std.cdf(lo), std.cdf(hi));
    let u = clo + (chi - clo) * rng.random::<f64>();
    let z = std.inverse_cdf(u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON)).clamp(lo, hi);
    let z = if flip { -z } else { z };
    (mu + sd * z).clamp(0.0, 1.0)
}

/// Mean of a Gaussian restricted to `[0, 1]`, by adaptive Simpson
/// quadrature of the density rescaled to peak at 1 on the interval.
pub fn truncated_gaussian_mean(mu: f64, sd: f64) -> f64 {
    let peak = mu.clamp(0.0, 1.0);
    let shift = (peak - mu).powi(2) / (2.0 * sd * sd);
    let density = |x: f64| (-(x - mu).powi(2) / (2.0 * sd * sd) + shift).exp();
    // Split at the peak so the bump is never missed between nodes.
    let mass = simpson(&density, 0.0, peak, 1e-14) + simpson(&density, peak, 1.0, 1e-14);
    let first = |x: f64| x * density(x);
    let moment = simpson(&first, 0.0, peak, 1e-14) + simpson(&first, peak, 1.0, 1e-14);
    moment / mass
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomPParams {
    pub family: PFamily,
}

/// Joint law of `(U, V)` on `{0,1}^2` with equal marginals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetricParams {
    /// `[P(0,0), P(0,1), P(1,0), P(1,1)]`.
    pub puv: [f64; 4],
}

impl SymmetricParams {
    pub fn new(puv: [f64; 4]) -> Result<Self> {
        if puv.iter().any(|&v| !v.is_finite() || v < -1e-15) {
            return Err(Error::InvalidFamilyParams(format!("P_UV {puv:?}")));
        }
        let total: f64 = puv.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidFamilyParams(format!("P_UV sums to {total}")));
        }
        let s = Self { puv: puv.map(|v| v.max(0.0)) };
        if (s.pu1() - s.pv1()).abs() > 1e-12 {
            return Err(Error::UnequalMarginals(s.pu1(), s.pv1()));
        }
        Ok(s)
    }

    /// From `P(1,1)` and the common marginal `P_U(1) = P_V(1)`.
    pub fn from_marginal(puv11: f64, pu1: f64) -> Result<Self> {
        let off = pu1 - puv11;
        Self::new([1.0 - 2.0 * pu1 + puv11, off, off, puv11])
    }

    pub fn pu1(&self) -> f64 {
        self.puv[2] + self.puv[3]
    }

    pub fn pv1(&self) -> f64 {
        self.puv[1] + self.puv[3]
    }

    pub fn puv11(&self) -> f64 {
        self.puv[3]
    }

    /// `max(P_UV(1,1), P_U(1) P_V(1))`.
    pub fn theta(&self) -> f64 {
        self.puv11().max(self.pu1() * self.pv1())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AmbiguityModel {
    Seeded(SeededParams),
    Equiprobable(EquiprobableParams),
    RandomP(RandomPParams),
    Symmetric(SymmetricParams),
    /// Loaded from text or built by hand.
    Custom,
}

/// A side-information scenario with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "lowercase")]
pub enum Scenario {
    Seeded(SeededParams),
    Equiprobable(EquiprobableParams),
    #[serde(rename = "randomp")]
    RandomP(RandomPParams),
    Symmetric(SymmetricParams),
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Seeded(_) => "seeded",
            Scenario::Equiprobable(_) => "equiprobable",
            Scenario::RandomP(_) => "randomp",
            Scenario::Symmetric(_) => "symmetric",
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            Scenario::Seeded(p) => p.seed_count(n).map(|_| ()),
            Scenario::Equiprobable(p) if !(0.0..=1.0).contains(&p.p) => Err(Error::InvalidProbability(p.p)),
            Scenario::Equiprobable(_) => Ok(()),
            Scenario::RandomP(p) => p.family.validate(),
            Scenario::Symmetric(p) => SymmetricParams::new(p.puv).map(|_| ()),
        }
    }

    pub fn generate<R: Rng + ?Sized>(&self, n: usize, truth: &Labeling, rng: &mut R) -> Result<AmbiguityMatrix> {
        match *self {
            Scenario::Seeded(p) => gen_seeded(n, truth, p, rng),
            Scenario::Equiprobable(p) => gen_equiprobable(n, truth, p, rng),
            Scenario::RandomP(p) => gen_random_p(n, truth, p, rng),
            Scenario::Symmetric(p) => gen_symmetric(n, truth, p, rng),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmbiguityMatrix {
    n: usize,
    bits: Vec<bool>,
    model: AmbiguityModel,
}

impl AmbiguityMatrix {
    pub fn all_ones(n: usize) -> Self {
        Self { n, bits: vec![true; n * n], model: AmbiguityModel::Custom }
    }

    pub fn permutation(truth: &Labeling) -> Self {
        let n = truth.len();
        let mut bits = vec![false; n * n];
        for s in 0..n {
            bits[s * n + truth.get(s)] = true;
        }
        Self { n, bits, model: AmbiguityModel::Custom }
    }

    pub fn from_rows(rows: &[Vec<bool>]) -> Result<Self> {
        let n = rows.len();
        let mut bits = Vec::with_capacity(n * n);
        for r in rows {
            if r.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: r.len() });
            }
            bits.extend_from_slice(r);
        }
        Ok(Self { n, bits, model: AmbiguityModel::Custom })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn model(&self) -> &AmbiguityModel {
        &self.model
    }

    #[inline]
    pub fn get(&self, s: usize, i: usize) -> bool {
        self.bits[s * self.n + i]
    }

    pub fn row(&self, s: usize) -> &[bool] {
        &self.bits[s * self.n..(s + 1) * self.n]
    }

    pub fn row_size(&self, s: usize) -> usize {
        self.row(s).iter().filter(|&&b| b).count()
    }

    pub fn density(&self) -> f64 {
        self.bits.iter().filter(|&&b| b).count() as f64 / self.bits.len().max(1) as f64
    }

    /// Checks that every row contains its true label.
    pub fn validate_against(&self, truth: &Labeling) -> Result<()> {
        if truth.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: truth.len() });
        }
        match (0..self.n).find(|&s| !self.get(s, truth.get(s))) {
            Some(s) => Err(Error::MissingTrueLabel(s)),
            None => Ok(()),
        }
    }

    /// Whether `sigma(s)` lies in the ambiguity set of every `s`.
    pub fn is_consistent(&self, sigma: &Labeling) -> bool {
        sigma.len() == self.n && (0..self.n).all(|s| self.get(s, sigma.get(s)))
    }

    /// Text form: line 1 `n`, then `n` lines of `n` characters `0`/`1`.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for s in 0..self.n {
            let line: String = self.row(s).iter().map(|&b| if b { '1' } else { '0' }).collect();
            let _ = writeln!(out, "{line}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty ambiguity file".into()))?;
        let n: usize = header.parse().map_err(|_| Error::Parse(format!("bad size line {header:?}")))?;
        let rows = lines
            .map(|l| {
                l.chars()
                    .map(|c| match c {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        _ => Err(Error::Parse(format!("bad character {c:?}"))),
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        if rows.len() != n {
            return Err(Error::Parse(format!("expected {n} rows, found {}", rows.len())));
        }
        Self::from_rows(&rows)
    }
}

fn check_truth(n: usize, truth: &Labeling) -> Result<()> {
    if truth.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: truth.len() });
    }
    Ok(())
}

/// A uniformly random set of `gamma * n` seed vertices gets the singleton
/// `{truth(s)}`; every other vertex gets all labels.
pub fn gen_seeded<R: Rng + ?Sized>(n: usize, truth: &Labeling, params: SeededParams, rng: &mut R) -> Result<AmbiguityMatrix> {
    check_truth(n, truth)?;
    let k = params.seed_count(n)?;
    let mut bits = vec![true; n * n];
    for s in rand::seq::index::sample(rng, n, k) {
        let row = &mut bits[s * n..(s + 1) * n];
        row.fill(false);
        row[truth.get(s)] = true;
    }
    Ok(AmbiguityMatrix { n, bits, model: AmbiguityModel::Seeded(params) })
}

/// Every wrong label enters each set independently with probability `p`.
pub fn gen_equiprobable<R: Rng + ?Sized>(n: usize, truth: &Labeling, params: EquiprobableParams, rng: &mut R) -> Result<AmbiguityMatrix> {
    check_truth(n, truth)?;
    if !(0.0..=1.0).contains(&params.p) {
        return Err(Error::InvalidProbability(params.p));
    }
    let mut bits = vec![false; n * n];
    for s in 0..n {
        let t = truth.get(s);
        for i in 0..n {
            bits[s * n + i] = i == t || rng.random::<f64>() < params.p;
        }
    }
    Ok(AmbiguityMatrix { n, bits, model: AmbiguityModel::Equiprobable(params) })
}

/// Each label `i` draws its own inclusion probability `P_i` from the law;
/// rows then include wrong label `i` independently with probability `P_i`.
/// The shared `P_i` correlates entries within a column.
pub fn gen_random_p_with<L: ProbabilityLaw, R: Rng + ?Sized>(n: usize, truth: &Labeling, law: &L, rng: &mut R) -> Result<AmbiguityMatrix> {
    check_truth(n, truth)?;
    let col_p: Vec<f64> = (0..n).map(|_| law.sample(rng)).collect();
    let mut bits = vec![false; n * n];
    for s in 0..n {
        let t = truth.get(s);
        for (i, &pi) in col_p.iter().enumerate() {
            bits[s * n + i] = i == t || rng.random::<f64>() < pi;
        }
    }
    Ok(AmbiguityMatrix { n, bits, model: AmbiguityModel::Custom })
}

pub fn gen_random_p<R: Rng + ?Sized>(n: usize, truth: &Labeling, params: RandomPParams, rng: &mut R) -> Result<AmbiguityMatrix> {
    params.family.validate()?;
    let mut b = gen_random_p_with(n, truth, &params.family, rng)?;
    b.model = AmbiguityModel::RandomP(params);
    Ok(b)
}

/// For each vertex pair `s < t`, one draw `(u, v)` sets
/// `bits[s][truth(t)] = u` and `bits[t][truth(s)] = v`. Since `truth` is a
/// bijection this fills every off-truth entry.
pub fn gen_symmetric<R: Rng + ?Sized>(n: usize, truth: &Labeling, params: SymmetricParams, rng: &mut R) -> Result<AmbiguityMatrix> {
    check_truth(n, truth)?;
    let params = SymmetricParams::new(params.puv)?;
    let cum = [params.puv[0], params.puv[0] + params.puv[1], params.puv[0] + params.puv[1] + params.puv[2]];
    let mut bits = vec![false; n * n];
    for s in 0..n {
        bits[s * n + truth.get(s)] = true;
        for t in s + 1..n {
            let r: f64 = rng.random();
            let k = if r < cum[0] {
                0
            } else if r < cum[1] {
                1
            } else if r < cum[2] {
                2
            } else {
                3
            };
            // guard the top edge against rounding in the cumulative sums
            let k = if params.puv[k] == 0.0 { (0..4).rev().find(|&j| params.puv[j] > 0.0).unwrap_or(k) } else { k };
            bits[s * n + truth.get(t)] = k & 2 != 0;
            bits[t * n + truth.get(s)] = k & 1 != 0;
        }
    }
    Ok(AmbiguityMatrix { n, bits, model: AmbiguityModel::Symmetric(params) })
}

/// `|Sigma_B|`, the number of labelings consistent with `b`, i.e. the
/// permanent of the 0/1 matrix. Ryser's formula over Gray-code ordered
/// column subsets; arithmetic is modulo `2^128`, which is exact because
/// the permanent is at most `30! < 2^128`.
pub fn count_consistent_labelings_exact(b: &AmbiguityMatrix) -> Result<u128> {
    let n = b.n();
    if n > PERMANENT_MAX_N {
        return Err(Error::TooLarge { n, limit: PERMANENT_MAX_N });
    }
    if n == 0 {
        return Ok(1);
    }
    let mut row_sums = vec![0i128; n];
    let mut subset: u64 = 0;
    let mut total: i128 = 0;
    for k in 1u64..(1u64 << n) {
        let col = k.trailing_zeros() as usize;
        let bit = 1u64 << col;
        let add = subset & bit == 0;
        subset ^= bit;
        for (s, sum) in row_sums.iter_mut().enumerate() {
            if b.get(s, col) {
                *sum += if add { 1 } else { -1 };
            }
        }
        let prod = row_sums.iter().fold(1i128, |acc, &v| acc.wrapping_mul(v));
        if (n - subset.count_ones() as usize) % 2 == 0 {
            total = total.wrapping_add(prod);
        } else {
            total = total.wrapping_sub(prod);
        }
    }
    Ok(total as u128)
}

/// Derangement numbers `!0 ..= !m`.
pub fn derangements(m: usize) -> Vec<u64> {
    let mut d = vec![1u64, 0];
    for k in 2..=m {
        d.push((k as u64 - 1) * (d[k - 1] + d[k - 2]));
    }
    d.truncate(m + 1);
    d
}

pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, j| acc * (n - j) as u64 / (j + 1) as u64)
}

/// Number of labelings agreeing with a fixed labeling on exactly `i`
/// vertices: `C(n, i) * !(n - i)`.
pub fn count_labelings_at_distance(n: usize, i: usize) -> Result<u64> {
    if n > DISTANCE_COUNT_MAX_N {
        return Err(Error::TooLarge { n, limit: DISTANCE_COUNT_MAX_N });
    }
    if i > n {
        return Err(Error::OutOfRange(format!("i = {i} > n = {n}")));
    }
    Ok(binomial(n, i) * derangements(n - i)[n - i])
}
