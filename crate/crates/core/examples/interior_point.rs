//! The online interior point problem: every reported side must be
//! consistent with the data, even for points chosen between data values.

use interactive_dp::attacks::OipStress;
use interactive_dp::mechanisms::Oip;
use interactive_dp::prelude::*;
use rand::Rng as _;

fn main() -> Result<()> {
    let mut rng = RandomSource::new(8, 0).role(Role::Data).rng();
    let x = Dataset::reals((0..1000).map(|_| rng.random::<f64>()).collect())?;
    let mut adv = OipStress::new(&x)?;
    let tr = run_adaptive(&mut Oip::new(1.0)?, &mut adv, &x, 500, &RandomSource::new(8, 1))?;
    let wrong = tr.losses(&x)?.iter().filter(|&&l| l > 0.0).count();
    println!(
        "{} points answered, {wrong} inconsistent, halted early: {}",
        tr.len(),
        tr.halted_early
    );
    Ok(())
}
