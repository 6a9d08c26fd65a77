//! Command-line interface.
//!
//! Exit codes: 0 success or condition satisfied, 1 runtime or domain
//! error, 2 usage or parse error, 3 condition violated.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::ambiguity::ProbabilityLaw;
use crate::error::{Error, Result};
use crate::graphgen::{edge_list, sample_pair, RngStream, Truth};
use crate::harness::{parse_values, run_experiment, sweep_report, ExperimentConfig, ScenarioKind, ScenarioSpec, DEFAULT_MASTER_SEED};
use crate::model::{ut_len, EdgeDistribution};
use crate::theory::{check_necessary, check_sufficient, corrections, exponent, ConditionReport, SufficiencyOptions};
use crate::typicality::{default_epsilon, DEFAULT_EPSILON_SCALE};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VIOLATED: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "ambimatch", version, about = "Graph matching with ambiguity-set side information")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Tabulate the exponent E_alpha (and optional corrections) over an alpha grid.
    Exponent(ExponentArgs),
    /// Evaluate sufficient and/or necessary conditions for one scenario.
    Check(CheckArgs),
    /// Run a Monte Carlo experiment (optionally sweeping one parameter).
    Simulate(SimulateArgs),
    /// Run one or more experiment configs and merge their aggregate rows.
    Sweep(SweepArgs),
    /// Sample a graph pair and ambiguity sets and write them to files.
    Generate(GenerateArgs),
}

#[derive(Args, Debug)]
pub struct ExponentArgs {
    /// Joint distribution file.
    #[arg(long)]
    pub dist: PathBuf,
    /// Alpha grid as a:b:step or a comma list.
    #[arg(long)]
    pub alpha_grid: String,
    /// Vertex count, used for the zeta and delta columns.
    #[arg(long)]
    pub n: Option<usize>,
    /// Typicality slack for delta (default rule if omitted).
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Fill the zeta and delta columns (requires --n).
    #[arg(long)]
    pub corrections: bool,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ScenarioArgs {
    #[arg(long, value_enum)]
    pub scenario: ScenarioArg,
    /// Seed fraction (seeded).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Inclusion probability (equiprobable).
    #[arg(long)]
    pub p: Option<f64>,
    /// Decay exponent a with p = n^-a (equiprobable).
    #[arg(long)]
    pub p_exponent: Option<f64>,
    /// Law of P (randomp): beta:A,B | point:P | tgauss:MU,VAR.
    #[arg(long)]
    pub family: Option<String>,
    /// P_UV(1,1) (symmetric).
    #[arg(long)]
    pub puv11: Option<f64>,
    /// Common marginal P_U(1) = P_V(1) (symmetric).
    #[arg(long)]
    pub pu1: Option<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioArg {
    Seeded,
    Equiprobable,
    Randomp,
    Symmetric,
}

impl ScenarioArgs {
    fn kind(&self) -> ScenarioKind {
        match self.scenario {
            ScenarioArg::Seeded => ScenarioKind::Seeded,
            ScenarioArg::Equiprobable => ScenarioKind::Equiprobable,
            ScenarioArg::Randomp => ScenarioKind::RandomP,
            ScenarioArg::Symmetric => ScenarioKind::Symmetric,
        }
    }

    fn spec(&self) -> Result<ScenarioSpec> {
        let family = self.family.as_deref().map(crate::ambiguity::PFamily::parse).transpose().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(ScenarioSpec {
            kind: self.kind(),
            gamma: self.gamma,
            p: self.p,
            p_exponent: self.p_exponent,
            family,
            puv11: self.puv11,
            pu1: self.pu1,
        })
    }
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long)]
    pub dist: PathBuf,
    #[arg(long)]
    pub n: usize,
    /// Check only the necessary condition.
    #[arg(long, conflicts_with_all = ["sufficient", "both"])]
    pub necessary: bool,
    /// Check only the sufficient condition.
    #[arg(long, conflicts_with = "both")]
    pub sufficient: bool,
    /// Check both (the default).
    #[arg(long)]
    pub both: bool,
    /// Upper end of the sufficiency alpha grid (default 1 - 1/sqrt(n)).
    #[arg(long)]
    pub alpha_n: Option<f64>,
    #[arg(long, default_value_t = crate::theory::conditions::DEFAULT_GRID_SIZE)]
    pub grid_size: usize,
    /// Subtract zeta and delta in the sufficiency check.
    #[arg(long)]
    pub corrections: bool,
    /// Typicality slack for delta (default rule if omitted).
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Also print the per-point CSV rows.
    #[arg(long)]
    pub csv: bool,
}

#[derive(Args, Debug, Default)]
pub struct InlineExperiment {
    #[arg(long, value_enum)]
    pub scenario: Option<ScenarioArg>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub dist: Option<PathBuf>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub p_exponent: Option<f64>,
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub puv11: Option<f64>,
    #[arg(long)]
    pub pu1: Option<f64>,
    /// A number or "default".
    #[arg(long)]
    pub epsilon: Option<String>,
    #[arg(long)]
    pub epsilon_scale: Option<f64>,
    #[arg(long)]
    pub epsilon_clamp: Option<bool>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub master_seed: Option<u64>,
    #[arg(long)]
    pub node_budget: Option<u64>,
    #[arg(long)]
    pub candidate_cap: Option<usize>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub sweep_param: Option<String>,
    /// a:b:step or a comma list.
    #[arg(long)]
    pub sweep_values: Option<String>,
    #[arg(long)]
    pub alpha_n: Option<f64>,
    #[arg(long)]
    pub grid_size: Option<usize>,
    #[arg(long)]
    pub include_corrections: Option<bool>,
}

impl InlineExperiment {
    fn pairs(&self) -> Vec<(String, String)> {
        let mut v = Vec::new();
        macro_rules! push {
            ($($field:ident),*) => {$(
                if let Some(x) = &self.$field {
                    v.push((stringify!($field).to_string(), x.to_string()));
                }
            )*};
        }
        if let Some(s) = self.scenario {
            v.push(("scenario".into(), format!("{s:?}").to_lowercase()));
        }
        if let Some(d) = &self.dist {
            v.push(("dist".into(), d.display().to_string()));
        }
        push!(
            n, gamma, p, p_exponent, family, puv11, pu1, epsilon, epsilon_scale, epsilon_clamp, trials, master_seed, node_budget,
            candidate_cap, workers, sweep_param, sweep_values, alpha_n, grid_size, include_corrections
        );
        v
    }
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// key=value config file; inline flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub inline: InlineExperiment,
    /// Aggregate CSV destination (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-trial CSV destination.
    #[arg(long)]
    pub trials_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// One or more config files; their aggregate rows are merged.
    #[arg(long)]
    pub config: Vec<PathBuf>,
    /// Applied to every config (or used alone when no config is given).
    #[command(flatten)]
    pub inline: InlineExperiment,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long)]
    pub dist: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = DEFAULT_MASTER_SEED)]
    pub master_seed: u64,
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
    /// Edge list destination (`i j attr1 attr2`, 1-based).
    #[arg(long)]
    pub edges_out: PathBuf,
    /// Ambiguity matrix destination.
    #[arg(long)]
    pub ambiguity_out: PathBuf,
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::ConfigParse(_) | Error::Parse(_) => EXIT_USAGE,
        _ => EXIT_RUNTIME,
    }
}

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cmd_exponent(a: &ExponentArgs, out: &mut dyn Write) -> Result<i32> {
    let dist = EdgeDistribution::load(&a.dist)?;
    let grid = parse_values(&a.alpha_grid).map_err(|e| Error::Parse(e.to_string()))?;
    if let Some(&bad) = grid.iter().find(|&&x| !(0.0..=1.0).contains(&x)) {
        return Err(Error::AlphaOutOfRange(bad));
    }
    if a.corrections && a.n.is_none() {
        return Err(Error::Parse("--corrections needs --n".into()));
    }
    let ell = dist.ell();
    let mut text = String::from("alpha,E_alpha");
    for x in 0..ell {
        text.push_str(&format!(",t_prime_{x}"));
    }
    text.push_str(",zeta,delta\n");
    for alpha in grid {
        let e = exponent(&dist, alpha)?;
        let mut row = format!("{alpha},{}", e.value);
        for t in &e.minimizer {
            row.push_str(&format!(",{t}"));
        }
        match a.n.filter(|_| a.corrections) {
            Some(n) => {
                let eps = a.epsilon.unwrap_or_else(|| default_epsilon(n, DEFAULT_EPSILON_SCALE, None));
                let c = corrections(ell, ell, ut_len(n) as u64, eps, &dist, alpha)?;
                row.push_str(&format!(",{},{}", c.zeta, c.delta));
            }
            None => row.push_str(",NA,NA"),
        }
        text.push_str(&row);
        text.push('\n');
    }
    emit(out, a.out.as_deref(), &text)?;
    Ok(EXIT_OK)
}

fn print_report(out: &mut dyn Write, r: &ConditionReport, csv: bool) -> Result<()> {
    writeln!(out, "{}", r.summary())?;
    for note in &r.notes {
        writeln!(out, "  note: {note}")?;
    }
    if csv {
        writeln!(out, "{}", ConditionReport::CSV_HEADER)?;
        write!(out, "{}", r.to_csv_rows())?;
    }
    writeln!(out, "{}", r.to_json())?;
    Ok(())
}

fn cmd_check(a: &CheckArgs, out: &mut dyn Write) -> Result<i32> {
    let dist = EdgeDistribution::load(&a.dist)?;
    let spec = a.scenario.spec()?;
    let scenario = spec.resolve(a.n).map_err(|e| match e {
        Error::ConfigParse(m) => Error::Parse(m),
        other => other,
    })?;
    let do_nec = a.necessary || (!a.sufficient) || a.both;
    let do_suf = a.sufficient || (!a.necessary) || a.both;
    let mut ok = true;
    if do_suf {
        let opts = SufficiencyOptions { alpha_n: a.alpha_n, grid_size: a.grid_size, include_corrections: a.corrections, epsilon: a.epsilon };
        let r = check_sufficient(&scenario, &dist, a.n, &opts)?;
        ok &= r.overall;
        print_report(out, &r, a.csv)?;
    }
    if do_nec {
        let r = check_necessary(&scenario, &dist, a.n)?;
        ok &= r.overall;
        print_report(out, &r, a.csv)?;
    }
    if let crate::ambiguity::Scenario::RandomP(rp) = scenario {
        writeln!(out, "E[P] = {}", rp.family.mean())?;
    }
    Ok(if ok { EXIT_OK } else { EXIT_VIOLATED })
}

/// Reads a config file (if any) as key/value pairs, then appends inline
/// overrides.
fn experiment_config(config: Option<&Path>, inline: &InlineExperiment) -> Result<ExperimentConfig> {
    let mut pairs = Vec::new();
    let mut base = None;
    if let Some(path) = config {
        let text = std::fs::read_to_string(path).map_err(|e| Error::ConfigParse(format!("{}: {e}", path.display())))?;
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::ConfigParse(format!("expected key=value, got '{line}'")))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        base = path.parent().map(Path::to_path_buf);
    }
    // inline dist paths are relative to the working directory
    let mut inline_pairs = inline.pairs();
    if let (Some(_), Some(d)) = (&base, inline_pairs.iter_mut().find(|(k, _)| k == "dist")) {
        let p = PathBuf::from(&d.1);
        if p.is_relative() {
            d.1 = std::env::current_dir()?.join(p).display().to_string();
        }
    }
    pairs.extend(inline_pairs);
    ExperimentConfig::from_pairs(&pairs, base.as_deref())
}

fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write) -> Result<i32> {
    let cfg = experiment_config(a.config.as_deref(), &a.inline)?;
    let report = run_experiment(&cfg)?;
    emit(out, a.out.as_deref(), &report.csv())?;
    if let Some(p) = &a.trials_out {
        std::fs::write(p, report.trials_csv())?;
    }
    if a.out.is_some() {
        writeln!(out, "master_seed = {}", cfg.master_seed)?;
        write!(out, "{}", report.summary())?;
    }
    Ok(EXIT_OK)
}

fn cmd_sweep(a: &SweepArgs, out: &mut dyn Write) -> Result<i32> {
    let configs = if a.config.is_empty() {
        vec![experiment_config(None, &a.inline)?]
    } else {
        a.config.iter().map(|c| experiment_config(Some(c), &a.inline)).collect::<Result<Vec<_>>>()?
    };
    let report = sweep_report(&configs)?;
    emit(out, a.out.as_deref(), &report.csv())?;
    if a.out.is_some() {
        write!(out, "{}", report.summary())?;
    }
    Ok(EXIT_OK)
}

fn cmd_generate(a: &GenerateArgs, out: &mut dyn Write) -> Result<i32> {
    let dist = EdgeDistribution::load(&a.dist)?;
    let scenario = a.scenario.spec()?.resolve(a.n)?;
    let mut rng = RngStream::new(a.master_seed, a.stream).rng();
    let pair = sample_pair(a.n, &dist, Truth::UniformRandom, &mut rng)?;
    let b = scenario.generate(a.n, &pair.truth, &mut rng)?;
    std::fs::write(&a.edges_out, edge_list(&pair))?;
    std::fs::write(&a.ambiguity_out, b.to_text())?;
    let truth: Vec<String> = pair.truth.as_slice().iter().map(|l| (l + 1).to_string()).collect();
    writeln!(out, "master_seed = {} stream = {}", a.master_seed, a.stream)?;
    writeln!(out, "truth (1-based) = {}", truth.join(" "))?;
    writeln!(out, "mean ambiguity set size = {:.3}", b.density() * a.n as f64)?;
    Ok(EXIT_OK)
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::Exponent(a) => cmd_exponent(a, out),
        Command::Check(a) => cmd_check(a, out),
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::Generate(a) => cmd_generate(a, out),
    }
}

/// Parses `args`, runs the command and returns the exit code. Errors go
/// to `err`.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    match run(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code_for(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = main_with_args(std::iter::once("ambimatch").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    fn dist_file(dir: &Path, rows: &[[f64; 2]; 2]) -> String {
        let d = EdgeDistribution::new(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap();
        let p = dir.join("dist.txt");
        std::fs::write(&p, d.to_text()).unwrap();
        p.display().to_string()
    }

    #[test]
    fn exponent_rows() {
        let dir = tempfile::tempdir().unwrap();
        let d = dist_file(dir.path(), &[[0.4, 0.1], [0.1, 0.4]]);
        let (code, out, _) = run_args(&["exponent", "--dist", &d, "--alpha-grid", "1:1:1"]);
        assert_eq!(code, 0);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], "alpha,E_alpha,t_prime_0,t_prime_1,zeta,delta");
        assert_eq!(lines.len(), 2);
        assert!(lines[1].starts_with("1,0,"));
        let (_, out, _) = run_args(&["exponent", "--dist", &d, "--alpha-grid", "0:0:1", "--n", "10", "--corrections"]);
        let e: f64 = out.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
        assert!((e - 0.13904).abs() < 1e-5);
        assert!(!out.contains("NA"));
        let (code, _, _) = run_args(&["exponent", "--dist", &d, "--alpha-grid", "0:2:1"]);
        assert_eq!(code, EXIT_RUNTIME);
    }

    #[test]
    fn check_exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        let d = dist_file(dir.path(), &[[0.25, 0.25], [0.25, 0.25]]);
        let (code, out, _) = run_args(&["check", "--scenario", "seeded", "--gamma", "1", "--dist", &d, "--n", "10", "--necessary"]);
        assert_eq!(code, EXIT_OK, "{out}");
        assert!(out.contains("satisfied"));
        let (code, _, _) = run_args(&["check", "--scenario", "seeded", "--gamma", "0.5", "--dist", &d, "--n", "10", "--necessary"]);
        assert_eq!(code, EXIT_VIOLATED);
        let (code, _, err) =
            run_args(&["check", "--scenario", "equiprobable", "--p-exponent", "1.5", "--dist", &d, "--n", "100", "--necessary"]);
        assert_eq!(code, EXIT_RUNTIME, "{err}");
        let (code, _, _) = run_args(&["check", "--scenario", "seeded", "--dist", &d, "--n", "10", "--bogus"]);
        assert_eq!(code, EXIT_USAGE);
        let (code, _, _) = run_args(&["check", "--scenario", "seeded", "--dist", &d, "--n", "10"]);
        assert_eq!(code, EXIT_USAGE);
    }
}
