//! Offline prefix queries: shrink the unbounded string universe to the
//! prefixes that matter, then release answers from a sampled synthetic dataset.

use interactive_dp::mechanisms::{m_prefix, BlrConfig};
use interactive_dp::prelude::*;

fn main() -> Result<()> {
    let mut rng = RandomSource::new(3, 0).role(Role::Data).rng();
    let rows = (0..200)
        .map(|_| BitString::from_signs(&SignVector::random(6, &mut rng).iter().collect::<Vec<_>>()))
        .collect();
    let x = Dataset::strings(rows);
    let queries = ["+", "-+", "--+", "+-+-"]
        .iter()
        .map(|s| PrefixQuery::new([BitString::parse(s)?], None))
        .collect::<Result<Vec<_>>>()?;

    let reduced = restrict_universe(&queries, &x)?;
    println!("reduced universe: {} elements", reduced.universe.len());

    let cfg = BlrConfig::new(8, 1.0)?;
    let answers = m_prefix(
        &x,
        &queries,
        &cfg,
        &mut RandomSource::new(3, 0).role(Role::Mechanism).rng(),
    )?;
    for (q, a) in queries.iter().zip(answers) {
        let truth = eval_statistical(&Query::Prefix(q.clone()), &x)?;
        println!("{:>6}: released {a:.3}, true {truth:.3}", q.strings()[0].to_string());
    }
    Ok(())
}
