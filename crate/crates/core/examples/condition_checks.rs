//! Evaluate the sufficient and necessary conditions and find the largest
//! equiprobable inclusion probability that the sufficient one allows.
//!
//! cargo run --release --example condition_checks

use ambimatch::ambiguity::{EquiprobableParams, Scenario, SeededParams};
use ambimatch::model::EdgeDistribution;
use ambimatch::theory::{check_necessary, check_sufficient, equiprobable_threshold, SufficiencyOptions};

fn main() -> ambimatch::Result<()> {
    let dist = EdgeDistribution::new(&[vec![0.45, 0.05], vec![0.05, 0.45]])?;
    let opts = SufficiencyOptions::default();
    for n in [10, 100, 1000] {
        let s = Scenario::Seeded(SeededParams { gamma: 0.0 });
        let suff = check_sufficient(&s, &dist, n, &opts)?;
        let nec = check_necessary(&s, &dist, n)?;
        println!("no seeds, n = {n:>4}: sufficient {:<5} (margin {:+.4}), necessary {}", suff.overall, suff.margin, nec.overall);
    }
    println!();
    for n in [10, 50, 200] {
        let p = equiprobable_threshold(&dist, n, &opts)?;
        let at = check_sufficient(&Scenario::Equiprobable(EquiprobableParams { p: p * 0.9 }), &dist, n, &opts)?;
        println!("n = {n:>3}: sufficient for p <= {p:.4} (check at 0.9 p*: {})", at.overall);
    }
    let report = check_sufficient(&Scenario::Equiprobable(EquiprobableParams { p: 0.1 }), &dist, 50, &opts)?;
    println!("\n{}", report.summary());
    Ok(())
}
