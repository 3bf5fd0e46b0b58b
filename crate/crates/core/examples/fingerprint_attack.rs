//! Fingerprinting prefix queries against exact answers: every row's score
//! is positive on average, and a planted row stands out.

use interactive_dp::attacks::{gen_fingerprint_instance, FingerprintAdversary};
use interactive_dp::mechanisms::ExactAnswerer;
use interactive_dp::prelude::*;

fn main() -> Result<()> {
    let (n, k) = (64, 256);
    let inst = gen_fingerprint_instance(n, k, &mut RandomSource::new(11, 0).role(Role::Instance).rng())?;
    let x = inst.x.clone();
    let mut adv = FingerprintAdversary::new(inst);
    run_online(
        &mut ExactAnswerer::default(),
        &mut adv,
        &x,
        k,
        &RandomSource::new(11, 1),
    )?;
    let s = adv.statistic(0)?;
    println!(
        "total score {:.2} (expected about {:.2})",
        s.total,
        2.0 / 3.0 * k as f64
    );
    println!("highest row {} with score {:.2}", s.argmax, s.per_row[s.argmax]);
    Ok(())
}
