//! Majority vote over many fresh randomized-response answers recovers
//! almost every bit of the dataset.

use interactive_dp::attacks::reconstruction_adversary;
use interactive_dp::mechanisms::FreshRandomizedResponse;
use interactive_dp::prelude::*;

fn main() -> Result<()> {
    let (n, alpha, k) = (100_000, 0.5, 400);
    let x = Dataset::signs(SignVector::random(
        n,
        &mut RandomSource::new(5, 0).role(Role::Data).rng(),
    ));
    let (run, transcript) = reconstruction_adversary(
        &mut FreshRandomizedResponse::new(alpha)?,
        &x,
        alpha,
        k,
        &RandomSource::new(5, 1),
    )?;
    println!(
        "{} queries, overlap {:.4}",
        transcript.len(),
        run.overlap as f64 / n as f64
    );
    println!(
        "empirical a = {:.4}, b = {:.4}, hypotheses hold: {}",
        run.empirical.a, run.empirical.b, run.empirical.holds
    );
    Ok(())
}
