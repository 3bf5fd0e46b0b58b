//! Interactive differentially private query answering.
//!
//! The crate simulates the offline, online and adaptive interaction models
//! between a mechanism holding a dataset and an adversary issuing queries. It
//! provides the mechanisms that separate those models (randomized response for
//! correlated-vector queries, the exponential-mechanism answerer for prefix
//! queries, BetweenThresholds and the threshold-release pipeline built on it),
//! the attacks that break them in the stronger models, and Monte Carlo and
//! exact numeric checks of the supporting lemmas.
//!
//! ```
//! use interactive_dp::prelude::*;
//!
//! let x = Dataset::reals(vec![0.1, 0.6, 0.4, 0.9])?;
//! let q = Query::Threshold(ThresholdQuery::new(0.5)?);
//! assert_eq!(eval_statistical(&q, &x)?, 0.5);
//! # Ok::<(), interactive_dp::Error>(())
//! ```

// `!(x > 0.0)` is how parameter checks reject NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attacks;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod io;
pub mod laplace;
pub mod mechanisms;
pub mod protocol;
pub mod queries;
pub mod rng;
pub mod signs;
pub mod stats;
pub mod suite;
pub mod verify;

pub use error::{Error, Result};

/// The types most programs need.
pub mod prelude {
    pub use crate::dataset::{adjacent, neighbor_of, Dataset, PrivacyParams, RowRef, UniverseElement, UniverseTag};
    pub use crate::error::{Error, Result};
    pub use crate::laplace::{laplace_sample, Laplace};
    pub use crate::protocol::{
        max_loss, run_adaptive, run_offline, run_online, AdaptiveAdversary, Answer, CommittedAdversary, Mechanism,
        Model, QueryScript, Symbol, Transcript,
    };
    pub use crate::queries::{
        correlated_loss, eval_prefix, eval_statistical, is_prefix, restrict_universe, BitString, CorrelatedVectorQuery,
        PrefixQuery, Query, StatisticalQuery, ThresholdQuery,
    };
    pub use crate::rng::{RandomSource, Rng, Role};
    pub use crate::signs::{Sign, SignVector};
}
