//! Exact check of the nested-interval Laplace inequality
//!
//! `P(ν ∈ [a', b']) ≤ e^{η/λ} / (1 − e^{−(b−a)/(2λ)}) · P(ν ∈ [a, b])`
//!
//! for `ν ~ Lap(λ)`, `[a, b] ⊆ [a', b']` and `η = (b' − a') − (b − a)`.

use rand::Rng as _;
use serde::Serialize;

use crate::error::{param, Result};
use crate::laplace::Laplace;
use crate::rng::{RandomSource, Role};

/// Absolute slack allowed for floating-point rounding.
pub const LAP_TOLERANCE: f64 = 1e-12;

/// The scales of the standard sweep.
pub const SWEEP_SCALES: [f64; 3] = [0.1, 1.0, 10.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LapRatioCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub eta: f64,
    pub ok: bool,
}

pub fn laplace_interval_ratio_check(lambda: f64, a: f64, b: f64, a2: f64, b2: f64) -> Result<LapRatioCheck> {
    let lap = Laplace::new(lambda)?;
    if [a, b, a2, b2].iter().any(|v| !v.is_finite()) {
        return param("interval endpoints must be finite");
    }
    if !(a < b) {
        return param(format!("inner interval [{a}, {b}] must have positive length"));
    }
    if !(a2 <= a && b <= b2) {
        return param(format!("[{a}, {b}] is not contained in [{a2}, {b2}]"));
    }
    let eta = (b2 - a2) - (b - a);
    let lhs = lap.interval_probability(a2, b2);
    // 1 − e^{−w/(2λ)} without cancellation for narrow intervals
    let denom = -(-(b - a) / (2.0 * lambda)).exp_m1();
    let rhs = (eta / lambda).exp() / denom * lap.interval_probability(a, b);
    Ok(LapRatioCheck {
        lhs,
        rhs,
        eta,
        ok: lhs <= rhs + LAP_TOLERANCE,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LapSweep {
    pub scales: Vec<f64>,
    pub pairs_per_scale: usize,
    pub checked: usize,
    pub failures: usize,
    /// Smallest `rhs − lhs` seen.
    pub min_slack: f64,
    /// `(λ, a, b, a', b')` attaining `min_slack`.
    pub tightest: Option<[f64; 5]>,
}

impl LapSweep {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.checked > 0
    }
}

/// Random nested pairs at each scale. Endpoints live within `6λ` of the
/// origin, so all four sign cases of the inner interval occur, and widths
/// range from `10⁻³λ` to `4λ`.
pub fn claim_lap_sweep(scales: &[f64], pairs_per_scale: usize, seed: u64) -> Result<LapSweep> {
    let mut out = LapSweep {
        scales: scales.to_vec(),
        pairs_per_scale,
        checked: 0,
        failures: 0,
        min_slack: f64::INFINITY,
        tightest: None,
    };
    for (si, &lambda) in scales.iter().enumerate() {
        let mut rng = RandomSource::trial(seed, si as u64).role(Role::Auxiliary).rng();
        for _ in 0..pairs_per_scale {
            let a = lambda * rng.random_range(-6.0..6.0);
            let w = lambda * 10f64.powf(rng.random_range(-3.0..0.6));
            let b = a + w;
            let a2 = a - lambda * rng.random_range(0.0..2.0);
            let b2 = b + lambda * rng.random_range(0.0..2.0);
            let r = laplace_interval_ratio_check(lambda, a, b, a2, b2)?;
            out.checked += 1;
            if !r.ok {
                out.failures += 1;
            }
            let slack = r.rhs - r.lhs;
            if slack < out.min_slack {
                out.min_slack = slack;
                out.tightest = Some([lambda, a, b, a2, b2]);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_intervals_hold() {
        let r = laplace_interval_ratio_check(1.0, -0.3, 0.7, -0.3, 0.7).unwrap();
        assert_eq!(r.eta, 0.0);
        assert!(r.ok && r.rhs > r.lhs);
    }

    #[test]
    fn worked_example() {
        let r = laplace_interval_ratio_check(1.0, -1.0, 1.0, -1.5, 1.5).unwrap();
        let inner = 1.0 - (-1.0f64).exp();
        let outer = 1.0 - (-1.5f64).exp();
        assert!((r.lhs - outer).abs() < 1e-15);
        assert!((r.rhs - 1f64.exp() / (1.0 - (-1.0f64).exp()) * inner).abs() < 1e-12);
        assert!(r.ok);
    }

    #[test]
    fn malformed_intervals_rejected() {
        assert!(laplace_interval_ratio_check(1.0, 1.0, 1.0, 0.0, 2.0).is_err());
        assert!(laplace_interval_ratio_check(1.0, 0.0, 1.0, 0.5, 2.0).is_err());
        assert!(laplace_interval_ratio_check(0.0, 0.0, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn small_sweep_passes() {
        let s = claim_lap_sweep(&SWEEP_SCALES, 200, 1).unwrap();
        assert!(s.passed());
        assert_eq!(s.checked, 600);
    }
}
