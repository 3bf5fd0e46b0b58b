//! Correlated-vector queries separate the online and adaptive models: the
//! same mechanism survives committed queries and fails the second adaptive one.

use std::sync::Arc;

use interactive_dp::attacks::ReconstructionAdversary;
use interactive_dp::mechanisms::{m_corr, MCorr};
use interactive_dp::prelude::*;

fn main() -> Result<()> {
    let (n, alpha) = (1_000_000, 0.5);
    let xs = SignVector::random(n, &mut RandomSource::new(1, 0).role(Role::Data).rng());
    let x = Dataset::signs(xs.clone());
    let src = RandomSource::new(1, 1);

    let mut adv = ReconstructionAdversary::new(alpha, n)?;
    let adaptive = run_adaptive(&mut MCorr::new(alpha)?, &mut adv, &x, 2, &src)?;
    println!("adaptive losses: {:?}", adaptive.losses(&x)?);

    // the same two queries, with the constraint fixed before any answer
    let earlier = Arc::new(m_corr(&xs, alpha, &mut RandomSource::new(1, 2).rng())?);
    let script = QueryScript::new(vec![
        Query::Corr(CorrelatedVectorQuery::new(vec![], alpha, n)?),
        Query::Corr(CorrelatedVectorQuery::new(vec![earlier], alpha, n)?),
    ]);
    let online = run_online(&mut MCorr::new(alpha)?, &mut script.clone(), &x, 2, &src)?;
    println!("online losses:   {:?}", online.losses(&x)?);
    Ok(())
}
