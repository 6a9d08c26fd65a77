//! Sample a correlated pair and look at its edge statistics.
//!
//! cargo run --example sample_pair

use ambimatch::graphgen::{edge_list, relabel, sample_pair, RngStream, Truth};
use ambimatch::model::{ut_of, EdgeDistribution};
use ambimatch::typicality::joint_type;

fn main() -> ambimatch::Result<()> {
    let dist = EdgeDistribution::new(&[vec![0.45, 0.05], vec![0.05, 0.45]])?;
    let n = 40;
    let pair = sample_pair(n, &dist, Truth::UniformRandom, &mut RngStream::new(7, 0).rng())?;

    // undo the hidden relabeling so both graphs share vertex names
    let aligned = relabel(&pair.adj2, &pair.truth)?;
    let t = joint_type(&ut_of(&pair.adj1), &ut_of(&aligned), dist.ell())?;
    println!("n = {n}, {} vertex pairs", t.length());
    println!("cell   empirical  model");
    for x in 0..2 {
        for y in 0..2 {
            println!("({x},{y})  {:>9.4}  {:.4}", t.freq(x, y), dist.joint(x, y));
        }
    }
    let edges = edge_list(&pair);
    println!("\nfirst lines of the edge list (i j attr1 attr2):");
    for line in edges.lines().take(5) {
        println!("  {line}");
    }
    Ok(())
}
