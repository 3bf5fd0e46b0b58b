//! Empirical differential-privacy smoke test.
//!
//! The mechanism is run many times on two adjacent datasets against the same
//! query script. Each complete transcript is one event. For every transcript
//! seen at least `min_count` times on either side, and in both directions, the
//! auditor compares `P[T(x) = t]` with `e^ε·P[T(x') = t] + δ` using one-sided
//! Hoeffding bounds, Bonferroni-corrected over all comparisons.
//!
//! A confident violation is a proof (at the stated confidence) that the
//! mechanism is not `(ε, δ)`-DP on this pair. The absence of one proves
//! nothing, hence the verdict name.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{adjacent, Dataset};
use crate::error::{param, Result};
use crate::protocol::{run_online, Answer, Mechanism, QueryScript, Symbol, Transcript};
use crate::rng::RandomSource;
use crate::stats::hoeffding_one_sided;

#[derive(Debug, Clone, Serialize)]
pub struct AuditConfig {
    pub trials: u64,
    pub epsilon: f64,
    pub delta: f64,
    /// Minimum count (on either side) for a transcript to be tested.
    pub min_count: u64,
    /// Family-wise confidence of the violation claim.
    pub confidence: f64,
    /// Equal-width bins on `[0, 1]` for real-valued answers.
    pub bins: usize,
    pub seed: u64,
}

impl AuditConfig {
    pub fn new(trials: u64, epsilon: f64, delta: f64, seed: u64) -> Self {
        Self {
            trials,
            epsilon,
            delta,
            min_count: 50,
            confidence: 0.99,
            bins: 64,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditVerdict {
    ConfidentViolation,
    InconclusivePass,
}

/// Which dataset plays the numerator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    XOverX2,
    X2OverX,
}

#[derive(Debug, Clone, Serialize)]
pub struct EventComparison {
    pub transcript: String,
    pub direction: Direction,
    /// Empirical probability under the numerator dataset.
    pub p_num: f64,
    pub p_den: f64,
    /// `p_num − e^ε p_den − δ`.
    pub margin: f64,
    /// The same margin with `p_num` at its lower and `p_den` at its upper bound.
    pub confident_margin: f64,
    pub ratio: f64,
    /// Simultaneous interval for the true ratio.
    pub ratio_interval: (f64, f64),
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub config: AuditConfig,
    pub distinct_transcripts: usize,
    pub events_tested: usize,
    /// Per-bound deviation used for every probability.
    pub deviation: f64,
    /// Comparison with the largest confident margin.
    pub worst: Option<EventComparison>,
    /// Largest empirical ratio over tested events.
    pub worst_ratio: f64,
    pub verdict: AuditVerdict,
}

impl AuditReport {
    pub fn violated(&self) -> bool {
        self.verdict == AuditVerdict::ConfidentViolation
    }
}

/// Canonical string for a transcript's answers; reals are binned.
pub fn transcript_key(t: &Transcript, bins: usize) -> String {
    let parts: Vec<String> = t
        .answers()
        .map(|a| match a {
            Answer::Real(v) => {
                let b = ((v.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1);
                format!("b{b}")
            }
            Answer::Vector(v) => v.to_pm_string(),
            Answer::Symbol(Symbol::L) => "L".into(),
            Answer::Symbol(Symbol::R) => "R".into(),
            Answer::Symbol(Symbol::Top) => "T".into(),
        })
        .collect();
    parts.join(",")
}

const BLOCK: u64 = 1024;

fn tally<F, M>(
    factory: &F,
    x: &Dataset,
    script: &QueryScript,
    cfg: &AuditConfig,
    side: u64,
) -> Result<BTreeMap<String, u64>>
where
    F: Fn() -> M + Sync,
    M: Mechanism,
{
    let blocks = cfg.trials.div_ceil(BLOCK);
    let parts: Vec<Result<BTreeMap<String, u64>>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut counts = BTreeMap::new();
            for t in b * BLOCK..(b * BLOCK + BLOCK).min(cfg.trials) {
                let src = RandomSource::trial(cfg.seed, 2 * t + side);
                let mut mech = factory();
                let mut adv = script.clone();
                let tr = run_online(&mut mech, &mut adv, x, script.len(), &src)?;
                *counts.entry(transcript_key(&tr, cfg.bins)).or_insert(0) += 1;
            }
            Ok(counts)
        })
        .collect();
    let mut total = BTreeMap::new();
    for p in parts {
        for (k, v) in p? {
            *total.entry(k).or_insert(0) += v;
        }
    }
    Ok(total)
}

pub fn empirical_dp_audit<F, M>(
    factory: F,
    x: &Dataset,
    x2: &Dataset,
    script: &QueryScript,
    cfg: &AuditConfig,
) -> Result<AuditReport>
where
    F: Fn() -> M + Sync,
    M: Mechanism,
{
    if !adjacent(x, x2)? {
        return param("audit datasets must be adjacent (differ in at most one row)");
    }
    if cfg.trials == 0 || cfg.bins == 0 {
        return param("audit needs positive trials and bins");
    }
    if !(cfg.epsilon >= 0.0) || !(0.0..1.0).contains(&cfg.delta) || !(0.0 < cfg.confidence && cfg.confidence < 1.0) {
        return param("audit needs epsilon >= 0, delta in [0, 1) and confidence in (0, 1)");
    }
    let cx = tally(&factory, x, script, cfg, 0)?;
    let cx2 = tally(&factory, x2, script, cfg, 1)?;

    let mut keys: Vec<&String> = cx.keys().chain(cx2.keys()).collect();
    keys.sort();
    keys.dedup();
    let distinct = keys.len();
    let tested: Vec<(&String, u64, u64)> = keys
        .into_iter()
        .map(|k| (k, cx.get(k).copied().unwrap_or(0), cx2.get(k).copied().unwrap_or(0)))
        .filter(|&(_, a, b)| a.max(b) >= cfg.min_count)
        .collect();

    // two directions per event, two bounds per comparison
    let bounds = (4 * tested.len()).max(1) as f64;
    let dev = hoeffding_one_sided(cfg.trials, (1.0 - cfg.confidence) / bounds);
    let e = cfg.epsilon.exp();
    let n = cfg.trials as f64;

    let mut worst: Option<EventComparison> = None;
    let mut worst_ratio: f64 = 0.0;
    for &(key, a, b) in &tested {
        for (direction, num, den) in [(Direction::XOverX2, a, b), (Direction::X2OverX, b, a)] {
            let (pn, pd) = (num as f64 / n, den as f64 / n);
            let (lo_n, hi_n) = ((pn - dev).max(0.0), (pn + dev).min(1.0));
            let (lo_d, hi_d) = ((pd - dev).max(0.0), (pd + dev).min(1.0));
            let ratio = if pd > 0.0 { pn / pd } else { f64::INFINITY };
            worst_ratio = worst_ratio.max(ratio);
            let cmp = EventComparison {
                transcript: key.clone(),
                direction,
                p_num: pn,
                p_den: pd,
                margin: pn - e * pd - cfg.delta,
                confident_margin: lo_n - e * hi_d - cfg.delta,
                ratio,
                ratio_interval: (lo_n / hi_d, if lo_d > 0.0 { hi_n / lo_d } else { f64::INFINITY }),
            };
            if worst.as_ref().is_none_or(|w| cmp.confident_margin > w.confident_margin) {
                worst = Some(cmp);
            }
        }
    }
    let verdict = match &worst {
        Some(w) if w.confident_margin > 0.0 => AuditVerdict::ConfidentViolation,
        _ => AuditVerdict::InconclusivePass,
    };
    Ok(AuditReport {
        config: cfg.clone(),
        distinct_transcripts: distinct,
        events_tested: tested.len(),
        deviation: dev,
        worst,
        worst_ratio,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::{ExactAnswerer, MCorr};
    use crate::queries::{CorrelatedVectorQuery, Query, ThresholdQuery};
    use crate::signs::SignVector;

    fn one_bit() -> (Dataset, Dataset, QueryScript) {
        let x = Dataset::signs(SignVector::all_plus(1));
        let x2 = Dataset::signs(SignVector::all_minus(1));
        let q = CorrelatedVectorQuery::new(vec![], 0.3, 1).unwrap();
        (x, x2, QueryScript::new(vec![Query::Corr(q)]))
    }

    #[test]
    fn exact_answerer_is_caught() {
        let x = Dataset::reals(vec![0.2, 0.8]).unwrap();
        let x2 = Dataset::reals(vec![0.2, 0.3]).unwrap();
        let script = QueryScript::new(vec![Query::Threshold(ThresholdQuery::new(0.5).unwrap())]);
        let r = empirical_dp_audit(
            ExactAnswerer::default,
            &x,
            &x2,
            &script,
            &AuditConfig::new(2000, 0.1, 0.0, 1),
        )
        .unwrap();
        assert!(r.violated());
        assert_eq!(r.distinct_transcripts, 2);
    }

    #[test]
    fn one_bit_ratio_interval_covers_truth() {
        let (x, x2, script) = one_bit();
        let r = empirical_dp_audit(
            || MCorr::new(0.3).unwrap(),
            &x,
            &x2,
            &script,
            &AuditConfig::new(20_000, 0.5, 0.0, 4),
        )
        .unwrap();
        let w = r.worst.unwrap();
        let truth = 1.3 / 0.7;
        assert!(w.ratio_interval.0 <= truth && truth <= w.ratio_interval.1, "{w:?}");
    }

    #[test]
    fn non_adjacent_rejected() {
        let x = Dataset::signs(SignVector::all_plus(2));
        let x2 = Dataset::signs(SignVector::all_minus(2));
        let script = QueryScript::default();
        assert!(empirical_dp_audit(
            ExactAnswerer::default,
            &x,
            &x2,
            &script,
            &AuditConfig::new(10, 1.0, 0.0, 1)
        )
        .is_err());
    }

    #[test]
    fn binning_is_clamped() {
        let t = Transcript {
            model: crate::protocol::Model::OnlineNonAdaptive,
            pairs: vec![
                (Query::Threshold(ThresholdQuery::new(0.5).unwrap()), Answer::Real(1.7)),
                (Query::Threshold(ThresholdQuery::new(0.5).unwrap()), Answer::Real(-0.2)),
            ],
            halted_early: false,
        };
        assert_eq!(transcript_key(&t, 64), "b63,b0");
    }
}
