//! The nested-interval Laplace inequality, in closed form.

use interactive_dp::verify::{claim_lap_sweep, laplace_interval_ratio_check, SWEEP_SCALES};

fn main() -> interactive_dp::Result<()> {
    let c = laplace_interval_ratio_check(1.0, -1.0, 1.0, -1.5, 1.5)?;
    println!("lhs {:.6} <= rhs {:.6}: {}", c.lhs, c.rhs, c.ok);
    let s = claim_lap_sweep(&SWEEP_SCALES, 1000, 0)?;
    println!(
        "sweep: {} pairs, {} failures, tightest slack {:.3e}",
        s.checked, s.failures, s.min_slack
    );
    Ok(())
}
