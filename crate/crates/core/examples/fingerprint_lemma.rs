//! Monte Carlo checks of the fingerprinting inequality over the test family.

use interactive_dp::verify::{corr_err2_mc, fingerprint_lemma_mc, Estimator, TestFunction, LEMMA_BOUND};

fn main() -> interactive_dp::Result<()> {
    for f in TestFunction::family() {
        let e = fingerprint_lemma_mc(&f, 128, 20_000, Estimator::Conditional, 1)?;
        println!(
            "{:>12}: {:.4} +- {:.4}  (>= 1/3: {})",
            f.name,
            e.mean,
            e.half_width,
            e.consistent_with_lower_bound(LEMMA_BOUND)
        );
    }
    let zero = TestFunction::by_name("zero")?;
    let e = corr_err2_mc(&zero, 128, 20_000, true, Estimator::Conditional, 1)?;
    println!(
        "squared bias of f = 0: {:.4} +- {:.4} (exactly 1/3)",
        e.mean, e.half_width
    );
    Ok(())
}
