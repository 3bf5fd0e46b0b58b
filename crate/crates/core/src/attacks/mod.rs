//! Adversaries that separate the interaction models, and their fixtures.
//!
//! The reconstruction attack needs every earlier answer to form its next
//! query, so it implements only [`AdaptiveAdversary`](crate::protocol::AdaptiveAdversary).
//! It runs adaptively:
//!
//! ```
//! use interactive_dp::prelude::*;
//! use interactive_dp::attacks::ReconstructionAdversary;
//! use interactive_dp::mechanisms::MCorr;
//!
//! let x = Dataset::signs(SignVector::all_plus(10));
//! let mut adv = ReconstructionAdversary::new(0.5, 10)?;
//! run_adaptive(&mut MCorr::new(0.3)?, &mut adv, &x, 2, &RandomSource::new(0, 0))?;
//! # Ok::<(), interactive_dp::Error>(())
//! ```
//!
//! but handing it to the online engine, which requires all queries to be
//! committed up front, does not compile:
//!
//! ```compile_fail
//! use interactive_dp::prelude::*;
//! use interactive_dp::attacks::ReconstructionAdversary;
//! use interactive_dp::mechanisms::MCorr;
//!
//! let x = Dataset::signs(SignVector::all_plus(10));
//! let mut adv = ReconstructionAdversary::new(0.5, 10).unwrap();
//! run_online(&mut MCorr::new(0.3).unwrap(), &mut adv, &x, 2, &RandomSource::new(0, 0)).unwrap();
//! ```

mod fingerprint;
mod median;
mod reconstruction;
mod thresholds;

pub use fingerprint::{
    binary_id, fingerprint_statistic, gen_fingerprint_instance, id_bits, to_sign_scale, FingerprintAdversary,
    FingerprintInstance, FingerprintStatistic,
};
pub use median::{
    discrete_dataset, gen_packing_dataset, is_approximate_median, packing_multiplicity, packing_rows, MedianAdversary,
};
pub use reconstruction::{
    analyze_reconstruction, default_rounds, majority_overlap_bound, reconstruction_adversary, HypothesisCheck,
    ReconstructionAdversary, ReconstructionRun,
};
pub use thresholds::{grid_dataset, BandEdgeAdversary, OipStress, ThresholdMix};
