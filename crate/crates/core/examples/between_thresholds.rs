//! BetweenThresholds answers L or R until a query lands between the
//! thresholds, then halts.

use interactive_dp::mechanisms::{bt_loss, BetweenThresholds};
use interactive_dp::prelude::*;

fn main() -> Result<()> {
    let n = 2000;
    let x = Dataset::reals((0..n).map(|i| (i as f64 + 0.5) / n as f64).collect())?;
    let (tl, tu) = (1.0 / 3.0, 2.0 / 3.0);
    let taus = [0.05, 0.9, 0.2, 0.95, 0.1, 0.5];
    let script = QueryScript::new(
        taus.iter()
            .map(|&t| ThresholdQuery::new(t).map(Query::Threshold))
            .collect::<Result<_>>()?,
    );
    let mut mech = BetweenThresholds::new(tl, tu, 1.0)?;
    let tr = run_adaptive(
        &mut mech,
        &mut interactive_dp::protocol::Committed::new(script),
        &x,
        taus.len(),
        &RandomSource::new(4, 0),
    )?;
    for (q, a) in &tr.pairs {
        let v = eval_statistical(q, &x)?;
        println!(
            "q(x) = {v:.3} -> {}  (loss {:.3})",
            a.as_symbol()?,
            bt_loss(a.as_symbol()?, v, tl, tu)
        );
    }
    println!("halted early: {}", tr.halted_early);
    Ok(())
}
