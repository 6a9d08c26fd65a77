//! Run the typicality matcher on one instance and inspect the candidates.
//!
//! cargo run --release --example typicality_matching

use ambimatch::ambiguity::{gen_equiprobable, EquiprobableParams};
use ambimatch::graphgen::{sample_pair, RngStream, Truth};
use ambimatch::matcher::{tm_match, MatchOptions};
use ambimatch::model::EdgeDistribution;
use ambimatch::typicality::{default_epsilon, TypicalityParams, DEFAULT_EPSILON_SCALE};

fn main() -> ambimatch::Result<()> {
    let dist = EdgeDistribution::new(&[vec![0.45, 0.05], vec![0.05, 0.45]])?;
    let n = 12;
    let mut rng = RngStream::new(3, 0).rng();
    let pair = sample_pair(n, &dist, Truth::UniformRandom, &mut rng)?;
    let b = gen_equiprobable(n, &pair.truth, EquiprobableParams { p: 0.3 }, &mut rng)?;

    println!("default epsilon at n = {n}: {:.3}", default_epsilon(n, DEFAULT_EPSILON_SCALE, None));
    for eps in [0.05, 0.1, 0.15, 0.2] {
        let r = tm_match(&pair, &b, &TypicalityParams::new(eps)?, &mut rng, &MatchOptions::default())?;
        let acc = r.accuracy.map_or("failure".to_string(), |a| format!("{a:.3}"));
        println!(
            "eps {eps:.2}: {:>6} candidates, truth among them: {:<5}  pick accuracy {acc}  ({} search nodes)",
            r.candidate_count,
            r.candidates.exact_count == 1,
            r.candidates.nodes_explored
        );
    }
    Ok(())
}
