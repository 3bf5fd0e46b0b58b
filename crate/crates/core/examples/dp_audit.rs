//! A statistical smoke test of privacy: one-bit randomized response has true
//! privacy loss ln(1.3/0.7) ≈ 0.62, so a 0.5 claim is caught and 0.9 is not.

use interactive_dp::mechanisms::MCorr;
use interactive_dp::prelude::*;
use interactive_dp::verify::{empirical_dp_audit, AuditConfig};

fn main() -> Result<()> {
    let x = Dataset::signs(SignVector::all_plus(1));
    let x2 = Dataset::signs(SignVector::all_minus(1));
    let script = QueryScript::new(vec![Query::Corr(CorrelatedVectorQuery::new(vec![], 0.3, 1)?)]);
    for eps in [0.5, 0.9] {
        let r = empirical_dp_audit(
            || MCorr::new(0.3).expect("valid"),
            &x,
            &x2,
            &script,
            &AuditConfig::new(100_000, eps, 0.0, 1),
        )?;
        println!("eps {eps}: {:?}, worst empirical ratio {:.3}", r.verdict, r.worst_ratio);
    }
    Ok(())
}
