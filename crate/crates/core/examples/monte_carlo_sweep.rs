//! A seeded-fraction sweep through the experiment harness.
//!
//! cargo run --release --example monte_carlo_sweep

use ambimatch::harness::{run_experiment, EpsilonRule, ExperimentConfig, ScenarioSpec, Sweep};
use ambimatch::model::EdgeDistribution;

fn main() -> ambimatch::Result<()> {
    let dist = EdgeDistribution::new(&[vec![0.45, 0.05], vec![0.05, 0.45]])?;
    let mut cfg = ExperimentConfig::new(ScenarioSpec::seeded(0.0), 10, dist);
    cfg.trials = 60;
    cfg.epsilon = EpsilonRule::Fixed(0.15);
    cfg.sweep = Some(Sweep { param: "gamma".into(), values: vec![0.0, 0.3, 0.6, 1.0] });
    let report = run_experiment(&cfg)?;
    print!("{}", report.summary());
    println!();
    print!("{}", report.csv());
    Ok(())
}
