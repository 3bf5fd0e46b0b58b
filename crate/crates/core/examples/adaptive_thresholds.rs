//! Threshold queries at any adaptivity: a noisy partition into chunks, one
//! interior-point instance per boundary, answers read off the chunk index.

use interactive_dp::attacks::ThresholdMix;
use interactive_dp::mechanisms::{oip_sample_complexity, partition, AdaptiveThresholds, AdaptiveThresholdsConfig};
use interactive_dp::prelude::*;
use rand::Rng as _;

fn main() -> Result<()> {
    let (n, k) = (30_000, 1000);
    let mut rng = RandomSource::new(6, 0).role(Role::Data).rng();
    let x = Dataset::reals((0..n).map(|_| rng.random::<f64>()).collect())?;

    let p = partition(&x, 0.2, 1.0, &mut RandomSource::new(6, 1).rng())?;
    println!(
        "partition: {} chunks, worst boundary shift {:.1} rows",
        p.m,
        p.max_boundary_deviation(n)
    );

    let cfg = AdaptiveThresholdsConfig::new(0.2, 0.1, 1.0, 1e-6, k);
    println!(
        "interior-point sample size {} (chunk size used: {})",
        oip_sample_complexity(1.0, 1e-6, 0.2 * 0.1 / 8.0, k),
        cfg.resolved_chunk_size()
    );
    let tr = run_adaptive(
        &mut AdaptiveThresholds::new(cfg)?,
        &mut ThresholdMix::new(0.5)?,
        &x,
        k,
        &RandomSource::new(6, 2),
    )?;
    println!("{} queries, max error {:.4}", tr.len(), max_loss(&tr, &x)?);
    Ok(())
}
