//! The error exponent as a function of the fixed-pair fraction alpha,
//! with the finite-n corrections.
//!
//! cargo run --example exponent_curve

use ambimatch::model::EdgeDistribution;
use ambimatch::theory::{corrections, exponent, mutual_information};
use ambimatch::typicality::{default_epsilon, DEFAULT_EPSILON_SCALE};

fn main() -> ambimatch::Result<()> {
    let dist = EdgeDistribution::new(&[vec![0.50, 0.04, 0.01], vec![0.04, 0.20, 0.03], vec![0.01, 0.03, 0.14]])?;
    println!("I(X;Y) = {:.4} bits", mutual_information(&dist));
    let n = 200;
    let n_pairs = (n * (n - 1) / 2) as u64;
    let eps = default_epsilon(n, DEFAULT_EPSILON_SCALE, None);
    println!("alpha  E_alpha   zeta     delta   (n = {n}, eps = {eps:.3})");
    for k in 0..=10 {
        let alpha = k as f64 / 10.0;
        let e = exponent(&dist, alpha)?;
        let c = corrections(3, 3, n_pairs, eps, &dist, alpha)?;
        println!("{alpha:.1}   {:.5}  {:.4}  {:.4}", e.value, c.zeta, c.delta);
    }
    Ok(())
}
