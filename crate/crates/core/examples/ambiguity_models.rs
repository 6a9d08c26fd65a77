//! The four ambiguity-set generators, and how many labelings each leaves.
//!
//! cargo run --example ambiguity_models

use ambimatch::ambiguity::{count_consistent_labelings_exact, PFamily, RandomPParams, Scenario, SeededParams, SymmetricParams};
use ambimatch::ambiguity::EquiprobableParams;
use ambimatch::graphgen::RngStream;
use ambimatch::model::Labeling;

fn main() -> ambimatch::Result<()> {
    let n = 12;
    let mut rng = RngStream::new(1, 0).rng();
    let truth = Labeling::random(n, &mut rng);
    let scenarios = [
        Scenario::Seeded(SeededParams { gamma: 0.5 }),
        Scenario::Equiprobable(EquiprobableParams { p: 0.3 }),
        Scenario::RandomP(RandomPParams { family: PFamily::Beta { a: 1.0, b: 3.0 } }),
        Scenario::Symmetric(SymmetricParams::from_marginal(0.15, 0.3)?),
    ];
    println!("n = {n}; all-ones would leave {} labelings", (1..=n as u128).product::<u128>());
    for s in &scenarios {
        let b = s.generate(n, &truth, &mut rng)?;
        assert!(b.is_consistent(&truth));
        println!(
            "{:<13} mean set size {:>5.2}  consistent labelings {:>10}",
            s.name(),
            b.density() * n as f64,
            count_consistent_labelings_exact(&b)?
        );
    }
    Ok(())
}
