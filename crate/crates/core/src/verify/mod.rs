//! Statistical and exact checks of the supporting lemmas, and an empirical
//! privacy auditor.
//!
//! Every check produces a [`VerifyReport`], the JSON object the CLI prints.

mod audit;
mod claim_lap;
mod fingerprint;

pub use audit::{
    empirical_dp_audit, transcript_key, AuditConfig, AuditReport, AuditVerdict, Direction, EventComparison,
};
pub use claim_lap::{
    claim_lap_sweep, laplace_interval_ratio_check, LapRatioCheck, LapSweep, LAP_TOLERANCE, SWEEP_SCALES,
};
pub use fingerprint::{
    coordinate, corr_err2_mc, fingerprint_lemma_mc, lemma_mc, posterior_moments, summand, ErrorTerm, Estimator,
    McEstimate, TestFunction, LEMMA_BOUND, MC_FAIL,
};

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub check: String,
    pub parameters: Value,
    pub estimate: f64,
    pub half_width: f64,
    pub bound: f64,
    pub pass: bool,
    /// Check-specific extras (sweep statistics, audit events).
    #[serde(skip_serializing_if = "Value::is_null")]
    pub details: Value,
}
