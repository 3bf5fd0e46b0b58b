//! The three interaction models side by side: the same scripted threshold
//! queries answered offline, online and adaptively by the Laplace baseline.

use interactive_dp::mechanisms::LaplaceMechanism;
use interactive_dp::prelude::*;

fn main() -> Result<()> {
    let x = Dataset::reals((0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect())?;
    let queries = [0.1, 0.25, 0.5, 0.9]
        .into_iter()
        .map(|t| ThresholdQuery::new(t).map(Query::Threshold))
        .collect::<Result<Vec<_>>>()?;
    let k = queries.len();
    let src = RandomSource::new(7, 0);

    let offline = run_offline(
        &mut LaplaceMechanism::new(1.0)?,
        &mut QueryScript::new(queries.clone()),
        &x,
        k,
        &src,
    )?;
    let online = run_online(
        &mut LaplaceMechanism::new(1.0)?,
        &mut QueryScript::new(queries.clone()),
        &x,
        k,
        &src,
    )?;
    // a committed script can always be replayed inside the adaptive model
    let adaptive = run_adaptive(
        &mut LaplaceMechanism::new(1.0)?,
        &mut interactive_dp::protocol::Committed::new(QueryScript::new(queries)),
        &x,
        k,
        &src,
    )?;

    for t in [&offline, &online, &adaptive] {
        println!("{:?}: max error {:.4}", t.model, max_loss(t, &x)?);
    }
    let mut out = Vec::new();
    adaptive.write_jsonl(Some(&x), &mut out)?;
    print!("{}", String::from_utf8_lossy(&out));
    Ok(())
}
