//! Binary search with threshold queries: any answerer accurate to within α
//! yields an α-approximate median in about log₂ T queries.

use interactive_dp::attacks::{discrete_dataset, is_approximate_median, MedianAdversary};
use interactive_dp::mechanisms::UniformNoiseAnswerer;
use interactive_dp::prelude::*;
use rand::Rng as _;

fn main() -> Result<()> {
    let domain = 1024;
    let mut rng = RandomSource::new(2, 0).role(Role::Data).rng();
    let rows: Vec<u64> = (0..501).map(|_| rng.random_range(1..=domain)).collect();
    let x = discrete_dataset(&rows, domain)?;

    let mut adv = MedianAdversary::new(domain)?;
    let t = run_adaptive(
        &mut UniformNoiseAnswerer::new(0.05)?,
        &mut adv,
        &x,
        64,
        &RandomSource::new(2, 1),
    )?;
    let y = adv.result();
    println!(
        "median guess {y} after {} queries (budget {}); 0.05-approximate: {}",
        t.len(),
        MedianAdversary::query_budget(domain),
        is_approximate_median(&rows, y, 0.05)
    );
    Ok(())
}
