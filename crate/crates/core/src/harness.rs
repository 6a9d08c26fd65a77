//! Monte Carlo experiments: sample, generate ambiguity sets, match, and
//! aggregate, optionally sweeping one parameter.
//!
//! Trial `t` always draws from stream `t` of the master seed, in the order
//! graph pair, ambiguity matrix, matcher choice. Records therefore depend
//! only on `(master_seed, t, config)`, not on the worker count, and sweep
//! points share their random graphs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ambiguity::{EquiprobableParams, PFamily, RandomPParams, Scenario, SeededParams, SymmetricParams};
use crate::error::{Error, Result};
use crate::graphgen::{sample_pair, RngStream, Truth};
use crate::matcher::{tm_match, MatchOptions, DEFAULT_CANDIDATE_CAP, DEFAULT_NODE_BUDGET};
use crate::model::EdgeDistribution;
use crate::theory::{check_necessary, check_sufficient, union_bound_failure_estimate, SufficiencyOptions, UNION_BOUND_MAX_N};
use crate::typicality::{default_epsilon, TypicalityParams, DEFAULT_EPSILON_SCALE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Seeded,
    Equiprobable,
    RandomP,
    Symmetric,
}

impl ScenarioKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "seeded" => Ok(Self::Seeded),
            "equiprobable" => Ok(Self::Equiprobable),
            "randomp" => Ok(Self::RandomP),
            "symmetric" => Ok(Self::Symmetric),
            _ => Err(Error::ConfigParse(format!("unknown scenario '{s}'"))),
        }
    }
}

/// Raw scenario parameters; resolved against `n` because `p` may be
/// given as a decay exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub gamma: Option<f64>,
    pub p: Option<f64>,
    /// `p = n^-a`.
    pub p_exponent: Option<f64>,
    pub family: Option<PFamily>,
    pub puv11: Option<f64>,
    pub pu1: Option<f64>,
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind) -> Self {
        Self { kind, gamma: None, p: None, p_exponent: None, family: None, puv11: None, pu1: None }
    }

    pub fn seeded(gamma: f64) -> Self {
        Self { gamma: Some(gamma), ..Self::new(ScenarioKind::Seeded) }
    }

    pub fn equiprobable(p: f64) -> Self {
        Self { p: Some(p), ..Self::new(ScenarioKind::Equiprobable) }
    }

    pub fn random_p(family: PFamily) -> Self {
        Self { family: Some(family), ..Self::new(ScenarioKind::RandomP) }
    }

    pub fn symmetric(puv11: f64, pu1: f64) -> Self {
        Self { puv11: Some(puv11), pu1: Some(pu1), ..Self::new(ScenarioKind::Symmetric) }
    }

    pub fn resolve(&self, n: usize) -> Result<Scenario> {
        let missing = |k: &str| Error::ConfigParse(format!("scenario parameter '{k}' is required"));
        let scenario = match self.kind {
            ScenarioKind::Seeded => Scenario::Seeded(SeededParams { gamma: self.gamma.ok_or_else(|| missing("gamma"))? }),
            ScenarioKind::Equiprobable => {
                let p = match (self.p, self.p_exponent) {
                    (Some(p), None) => p,
                    (None, Some(a)) => (n as f64).powf(-a),
                    (Some(_), Some(_)) => return Err(Error::ConfigParse("give either p or p_exponent, not both".into())),
                    (None, None) => return Err(missing("p")),
                };
                Scenario::Equiprobable(EquiprobableParams { p })
            }
            ScenarioKind::RandomP => Scenario::RandomP(RandomPParams { family: self.family.ok_or_else(|| missing("family"))? }),
            ScenarioKind::Symmetric => Scenario::Symmetric(SymmetricParams::from_marginal(
                self.puv11.ok_or_else(|| missing("puv11"))?,
                self.pu1.ok_or_else(|| missing("pu1"))?,
            )?),
        };
        scenario.validate(n)?;
        Ok(scenario)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EpsilonRule {
    Fixed(f64),
    /// `scale * sqrt(ln N / N)`, optionally clamped to half the smallest
    /// nonzero joint probability.
    Default { scale: f64, clamp: bool },
}

impl EpsilonRule {
    pub fn value(&self, n: usize, dist: &EdgeDistribution) -> f64 {
        match *self {
            EpsilonRule::Fixed(e) => e,
            EpsilonRule::Default { scale, clamp } => default_epsilon(n, scale, clamp.then_some(dist)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub param: String,
    pub values: Vec<f64>,
}

pub const SWEEPABLE: &[&str] = &["gamma", "p", "p_exponent", "puv11", "pu1", "n", "epsilon", "epsilon_scale"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: ScenarioSpec,
    pub n: usize,
    pub dist: EdgeDistribution,
    pub epsilon: EpsilonRule,
    pub trials: usize,
    pub master_seed: u64,
    pub node_budget: u64,
    pub candidate_cap: usize,
    /// 0 uses every available core.
    pub workers: usize,
    pub sweep: Option<Sweep>,
    pub alpha_n: Option<f64>,
    pub grid_size: usize,
    pub include_corrections: bool,
}

pub const DEFAULT_MASTER_SEED: u64 = 20_240_601;

impl ExperimentConfig {
    pub fn new(scenario: ScenarioSpec, n: usize, dist: EdgeDistribution) -> Self {
        Self {
            scenario,
            n,
            dist,
            epsilon: EpsilonRule::Default { scale: DEFAULT_EPSILON_SCALE, clamp: false },
            trials: 100,
            master_seed: DEFAULT_MASTER_SEED,
            node_budget: DEFAULT_NODE_BUDGET,
            candidate_cap: DEFAULT_CANDIDATE_CAP,
            workers: 0,
            sweep: None,
            alpha_n: None,
            grid_size: crate::theory::conditions::DEFAULT_GRID_SIZE,
            include_corrections: false,
        }
    }

    /// Reads a `key = value` file. Relative `dist` paths resolve against
    /// the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path.parent())
    }

    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::ConfigParse(format!("line {}: expected key=value", lineno + 1)))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        Self::from_pairs(&pairs, base_dir)
    }

    /// Builds a config from `(key, value)` pairs, as found in config
    /// files. `scenario`, `n` and `dist` are required.
    pub fn from_pairs(pairs: &[(String, String)], base_dir: Option<&Path>) -> Result<Self> {
        let get = |k: &str| pairs.iter().rev().find(|(key, _)| key == k).map(|(_, v)| v.as_str());
        let kind = ScenarioKind::parse(get("scenario").ok_or_else(|| Error::ConfigParse("missing 'scenario'".into()))?)?;
        let n = parse_num::<usize>("n", get("n").ok_or_else(|| Error::ConfigParse("missing 'n'".into()))?)?;
        let dist_path = get("dist").ok_or_else(|| Error::ConfigParse("missing 'dist'".into()))?;
        let dist_path = resolve_path(dist_path, base_dir);
        let dist = EdgeDistribution::load(&dist_path)
            .map_err(|e| Error::ConfigParse(format!("dist '{}': {e}", dist_path.display())))?;
        let mut cfg = Self::new(ScenarioSpec::new(kind), n, dist);
        let mut sweep_param = None;
        let mut sweep_values = None;
        let mut eps_scale = DEFAULT_EPSILON_SCALE;
        let mut eps_clamp = false;
        let mut eps_fixed = None;
        for (k, v) in pairs {
            match k.as_str() {
                "scenario" | "n" | "dist" => {}
                "gamma" => cfg.scenario.gamma = Some(parse_num(k, v)?),
                "p" => cfg.scenario.p = Some(parse_num(k, v)?),
                "p_exponent" => cfg.scenario.p_exponent = Some(parse_num(k, v)?),
                "family" => cfg.scenario.family = Some(PFamily::parse(v).map_err(|e| Error::ConfigParse(e.to_string()))?),
                "puv11" => cfg.scenario.puv11 = Some(parse_num(k, v)?),
                "pu1" => cfg.scenario.pu1 = Some(parse_num(k, v)?),
                "epsilon" => eps_fixed = if v == "default" { None } else { Some(parse_num::<f64>(k, v)?) },
                "epsilon_scale" => eps_scale = parse_num(k, v)?,
                "epsilon_clamp" => eps_clamp = parse_num(k, v)?,
                "trials" => cfg.trials = parse_num(k, v)?,
                "master_seed" => cfg.master_seed = parse_num(k, v)?,
                "node_budget" => cfg.node_budget = parse_num(k, v)?,
                "candidate_cap" => cfg.candidate_cap = parse_num(k, v)?,
                "workers" => cfg.workers = parse_num(k, v)?,
                "sweep_param" => sweep_param = Some(v.clone()),
                "sweep_values" => sweep_values = Some(parse_values(v)?),
                "alpha_n" => cfg.alpha_n = Some(parse_num(k, v)?),
                "grid_size" => cfg.grid_size = parse_num(k, v)?,
                "include_corrections" => cfg.include_corrections = parse_num(k, v)?,
                _ => return Err(Error::ConfigParse(format!("unknown key '{k}'"))),
            }
        }
        cfg.epsilon = match eps_fixed {
            Some(e) => EpsilonRule::Fixed(e),
            None => EpsilonRule::Default { scale: eps_scale, clamp: eps_clamp },
        };
        cfg.sweep = match (sweep_param, sweep_values) {
            (Some(param), Some(values)) => Some(Sweep { param, values }),
            (None, None) => None,
            _ => return Err(Error::ConfigParse("sweep_param and sweep_values go together".into())),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::ConfigParse("trials must be at least 1".into()));
        }
        if self.n < 2 {
            return Err(Error::ConfigParse(format!("n must be at least 2, got {}", self.n)));
        }
        if let Some(s) = &self.sweep {
            if !SWEEPABLE.contains(&s.param.as_str()) {
                return Err(Error::ConfigParse(format!("cannot sweep '{}'; choose one of {}", s.param, SWEEPABLE.join(", "))));
            }
            if s.values.is_empty() {
                return Err(Error::ConfigParse("sweep_values is empty".into()));
            }
        }
        Ok(())
    }

    /// Copy of the config with one parameter replaced.
    pub fn with_param(&self, param: &str, value: f64) -> Result<Self> {
        let mut c = self.clone();
        c.sweep = None;
        let as_count = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::ConfigParse(format!("{param} must be a nonnegative integer, got {v}")))
            }
        };
        match param {
            "gamma" => c.scenario.gamma = Some(value),
            "p" => {
                c.scenario.p = Some(value);
                c.scenario.p_exponent = None;
            }
            "p_exponent" => {
                c.scenario.p_exponent = Some(value);
                c.scenario.p = None;
            }
            "puv11" => c.scenario.puv11 = Some(value),
            "pu1" => c.scenario.pu1 = Some(value),
            "n" => c.n = as_count(value)?,
            "epsilon" => c.epsilon = EpsilonRule::Fixed(value),
            "epsilon_scale" => {
                let clamp = matches!(c.epsilon, EpsilonRule::Default { clamp: true, .. });
                c.epsilon = EpsilonRule::Default { scale: value, clamp };
            }
            _ => return Err(Error::ConfigParse(format!("cannot sweep '{param}'"))),
        }
        Ok(c)
    }
}

fn resolve_path(p: &str, base: Option<&Path>) -> PathBuf {
    let path = PathBuf::from(p);
    match base {
        Some(b) if path.is_relative() => b.join(path),
        _ => path,
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::ConfigParse(format!("bad value '{v}' for '{key}'")))
}

/// Comma-separated list or an inclusive range `a:b:step`.
pub fn parse_values(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::ConfigParse(format!("bad value list '{s}'"));
    if s.contains(':') {
        let parts: Vec<f64> = s.split(':').map(|t| t.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?;
        let [a, b, step] = parts[..] else { return Err(bad()) };
        if !(step > 0.0) || b < a {
            return Err(bad());
        }
        let count = ((b - a) / step + 1e-9).floor() as usize + 1;
        return Ok((0..count).map(|k| round12(a + step * k as f64)).collect());
    }
    s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}

/// Strips float noise such as `0.30000000000000004` from grid values.
fn round12(v: f64) -> f64 {
    (v * 1e12).round() / 1e12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub candidate_count: u64,
    pub accuracy: Option<f64>,
    pub exact_match: bool,
    pub failure: bool,
    pub truncated: bool,
    /// Some candidate other than the truth passed the typicality test.
    pub wrong_candidate: bool,
    #[serde(skip)]
    pub wall_time: Duration,
}

/// Runs trial `t` of a single (non-sweep) configuration.
pub fn run_trial(scenario: &Scenario, cfg: &ExperimentConfig, epsilon: f64, t: u64) -> Result<TrialRecord> {
    let start = Instant::now();
    let mut rng = RngStream::new(cfg.master_seed, t).rng();
    let pair = sample_pair(cfg.n, &cfg.dist, Truth::UniformRandom, &mut rng)?;
    let b = scenario.generate(cfg.n, &pair.truth, &mut rng)?;
    let params = TypicalityParams::new(epsilon)?;
    let opts = MatchOptions { node_budget: cfg.node_budget, candidate_cap: cfg.candidate_cap };
    let r = tm_match(&pair, &b, &params, &mut rng, &opts)?;
    Ok(TrialRecord {
        trial: t,
        candidate_count: r.candidate_count,
        accuracy: r.accuracy,
        exact_match: r.exact_match(),
        failure: r.is_failure(),
        truncated: r.truncated,
        wrong_candidate: r.has_wrong_candidate(),
        wall_time: start.elapsed(),
    })
}

/// Wilson score interval for `successes / trials` at 95%.
pub fn wilson_interval(p_hat: f64, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054_f64;
    let m = trials as f64;
    let denom = 1.0 + z * z / m;
    let centre = (p_hat + z * z / (2.0 * m)) / denom;
    let half = z * (p_hat * (1.0 - p_hat) / m + z * z / (4.0 * m * m)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub sweep_param: String,
    pub sweep_value: Option<f64>,
    pub n: usize,
    pub trials: usize,
    /// Mean accuracy over trials that neither failed nor hit the budget.
    pub mean_accuracy: Option<f64>,
    pub accuracy_ci: (f64, f64),
    pub exact_match_rate: f64,
    pub failure_rate: f64,
    pub truncation_rate: f64,
    pub wrong_candidate_rate: f64,
    pub mean_candidates: f64,
    pub sufficient_satisfied: Option<bool>,
    pub necessary_satisfied: Option<bool>,
    pub union_bound_estimate: Option<f64>,
    pub epsilon: f64,
    pub master_seed: u64,
    /// False when every trial ran out of budget.
    pub usable: bool,
}

impl Aggregate {
    pub const CSV_HEADER: &'static str = "sweep_param,sweep_value,n,trials,mean_accuracy,accuracy_ci_lo,accuracy_ci_hi,exact_match_rate,failure_rate,truncation_rate,mean_candidates,sufficient_satisfied,necessary_satisfied,union_bound_estimate,epsilon,master_seed";

    pub fn csv_row(&self) -> String {
        fn opt<T: ToString>(v: Option<T>) -> String {
            v.map(|x| x.to_string()).unwrap_or_else(|| "NA".into())
        }
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.sweep_param,
            self.sweep_value.map(|v| v.to_string()).unwrap_or_default(),
            self.n,
            self.trials,
            opt(self.mean_accuracy),
            self.accuracy_ci.0,
            self.accuracy_ci.1,
            self.exact_match_rate,
            self.failure_rate,
            self.truncation_rate,
            self.mean_candidates,
            opt(self.sufficient_satisfied),
            opt(self.necessary_satisfied),
            opt(self.union_bound_estimate),
            self.epsilon,
            self.master_seed
        )
    }
}

/// Aggregates records; order-independent since only sums and counts are used.
pub fn aggregate(records: &[TrialRecord]) -> (Option<f64>, (f64, f64), f64, f64, f64, f64, f64) {
    let total = records.len();
    let complete: Vec<&TrialRecord> = records.iter().filter(|r| !r.truncated).collect();
    let succeeded: Vec<f64> = complete.iter().filter_map(|r| r.accuracy).collect();
    let rate = |count: usize, of: usize| if of == 0 { 0.0 } else { count as f64 / of as f64 };
    let mean_accuracy = (!succeeded.is_empty()).then(|| succeeded.iter().sum::<f64>() / succeeded.len() as f64);
    let ci = wilson_interval(mean_accuracy.unwrap_or(0.0), succeeded.len());
    let exact = rate(complete.iter().filter(|r| r.exact_match).count(), complete.len());
    let failure = rate(complete.iter().filter(|r| r.failure).count(), complete.len());
    let truncation = rate(total - complete.len(), total);
    let wrong = rate(complete.iter().filter(|r| r.wrong_candidate).count(), complete.len());
    let mean_cand = if complete.is_empty() { 0.0 } else { complete.iter().map(|r| r.candidate_count as f64).sum::<f64>() / complete.len() as f64 };
    (mean_accuracy, ci, exact, failure, truncation, wrong, mean_cand)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub aggregates: Vec<Aggregate>,
    /// Per sweep point, the trial records in trial order.
    pub records: Vec<Vec<TrialRecord>>,
    /// Spearman correlation of mean accuracy against the sweep value.
    pub spearman: Option<f64>,
}

impl ExperimentReport {
    pub fn csv(&self) -> String {
        let mut out = String::from(Aggregate::CSV_HEADER);
        out.push('\n');
        for a in &self.aggregates {
            out.push_str(&a.csv_row());
            out.push('\n');
        }
        out
    }

    pub const TRIALS_CSV_HEADER: &'static str = "sweep_value,trial,candidate_count,accuracy,exact_match,failure,truncated,wrong_candidate";

    pub fn trials_csv(&self) -> String {
        let mut out = String::from(Self::TRIALS_CSV_HEADER);
        out.push('\n');
        for (a, recs) in self.aggregates.iter().zip(&self.records) {
            let sv = a.sweep_value.map(|v| v.to_string()).unwrap_or_default();
            for r in recs {
                let acc = r.accuracy.map(|v| v.to_string()).unwrap_or_else(|| "NA".into());
                let _ = writeln!(
                    out,
                    "{sv},{},{},{acc},{},{},{},{}",
                    r.trial, r.candidate_count, r.exact_match, r.failure, r.truncated, r.wrong_candidate
                );
            }
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for a in &self.aggregates {
            let point = match a.sweep_value {
                Some(v) => format!("{}={v}", a.sweep_param),
                None => "single point".into(),
            };
            let acc = a.mean_accuracy.map(|v| format!("{v:.4}")).unwrap_or_else(|| "NA".into());
            let _ = writeln!(
                s,
                "{point}: n={} trials={} accuracy={acc} exact={:.3} failure={:.3} truncated={:.3}",
                a.n, a.trials, a.exact_match_rate, a.failure_rate, a.truncation_rate
            );
        }
        if let Some(r) = self.spearman {
            let sign = if r > 0.0 { "+" } else if r < 0.0 { "-" } else { "0" };
            let _ = writeln!(s, "spearman(accuracy, sweep value) = {r:.3} (sign {sign})");
        }
        s
    }
}

fn theory_columns(scenario: &Scenario, cfg: &ExperimentConfig, epsilon: f64) -> (Option<bool>, Option<bool>, Option<f64>) {
    let opts = SufficiencyOptions {
        alpha_n: cfg.alpha_n,
        grid_size: cfg.grid_size,
        include_corrections: cfg.include_corrections,
        epsilon: Some(epsilon),
    };
    let suff = check_sufficient(scenario, &cfg.dist, cfg.n, &opts).ok().map(|r| r.overall);
    let nec = check_necessary(scenario, &cfg.dist, cfg.n).ok().map(|r| r.overall);
    let ub = (cfg.n <= UNION_BOUND_MAX_N)
        .then(|| union_bound_failure_estimate(scenario, &cfg.dist, cfg.n, epsilon, cfg.include_corrections).ok())
        .flatten();
    (suff, nec, ub)
}

fn run_point(cfg: &ExperimentConfig, sweep_param: &str, sweep_value: Option<f64>) -> Result<(Aggregate, Vec<TrialRecord>)> {
    let scenario = cfg.scenario.resolve(cfg.n)?;
    let epsilon = cfg.epsilon.value(cfg.n, &cfg.dist);
    TypicalityParams::new(epsilon)?;
    let records: Vec<TrialRecord> =
        (0..cfg.trials as u64).into_par_iter().map(|t| run_trial(&scenario, cfg, epsilon, t)).collect::<Result<_>>()?;
    let (mean_accuracy, accuracy_ci, exact_match_rate, failure_rate, truncation_rate, wrong_candidate_rate, mean_candidates) =
        aggregate(&records);
    let (sufficient_satisfied, necessary_satisfied, union_bound_estimate) = theory_columns(&scenario, cfg, epsilon);
    let agg = Aggregate {
        sweep_param: sweep_param.to_string(),
        sweep_value,
        n: cfg.n,
        trials: cfg.trials,
        mean_accuracy,
        accuracy_ci,
        exact_match_rate,
        failure_rate,
        truncation_rate,
        wrong_candidate_rate,
        mean_candidates,
        sufficient_satisfied,
        necessary_satisfied,
        union_bound_estimate,
        epsilon,
        master_seed: cfg.master_seed,
        usable: truncation_rate < 1.0,
    };
    Ok((agg, records))
}

/// Runs every sweep point (or the single configured point). Fails with
/// [`Error::BudgetExhaustedEverywhere`] if no point has a complete trial.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build().map_err(|e| Error::Io(e.to_string()))?;
    pool.install(|| {
        let points: Vec<(ExperimentConfig, String, Option<f64>)> = match &cfg.sweep {
            None => vec![(cfg.clone(), "none".to_string(), None)],
            Some(s) => s.values.iter().map(|&v| Ok((cfg.with_param(&s.param, v)?, s.param.clone(), Some(v)))).collect::<Result<_>>()?,
        };
        let mut aggregates = Vec::with_capacity(points.len());
        let mut records = Vec::with_capacity(points.len());
        for (c, param, value) in &points {
            let (a, r) = run_point(c, param, *value)?;
            aggregates.push(a);
            records.push(r);
        }
        if aggregates.iter().all(|a| !a.usable) {
            return Err(Error::BudgetExhaustedEverywhere);
        }
        let spearman = sweep_spearman(&aggregates);
        Ok(ExperimentReport { aggregates, records, spearman })
    })
}

fn sweep_spearman(aggs: &[Aggregate]) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = aggs.iter().filter_map(|a| Some((a.sweep_value?, a.mean_accuracy?))).unzip();
    spearman(&xs, &ys)
}

/// Average ranks, ties sharing the mean of their positions (1-based).
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation; `None` for fewer than two points or a
/// constant series.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(xs), ranks(ys));
    let m = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / m, ry.iter().sum::<f64>() / m);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some(cov / (vx * vy).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub reports: Vec<ExperimentReport>,
}

impl SweepReport {
    /// All aggregate rows under a single header.
    pub fn csv(&self) -> String {
        let mut out = String::from(Aggregate::CSV_HEADER);
        out.push('\n');
        for r in &self.reports {
            for a in &r.aggregates {
                out.push_str(&a.csv_row());
                out.push('\n');
            }
        }
        out
    }

    pub fn summary(&self) -> String {
        self.reports.iter().map(|r| r.summary()).collect::<Vec<_>>().join("\n")
    }
}

pub fn sweep_report(configs: &[ExperimentConfig]) -> Result<SweepReport> {
    if configs.is_empty() {
        return Err(Error::ConfigParse("no configurations given".into()));
    }
    Ok(SweepReport { reports: configs.iter().map(run_experiment).collect::<Result<_>>()? })
}
