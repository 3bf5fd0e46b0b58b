//! Mechanisms: the parties that hold the dataset and answer queries.

mod blr;
mod corr;
mod partition;
mod thresholds;

pub use blr::{blr_answer, blr_distribution, m_prefix, multiset_count, BlrConfig, BlrDistribution, Histogram, MPrefix};
pub use corr::{m_corr, FreshRandomizedResponse, IdentityMechanism, MCorr};
pub use partition::{
    adaptive_thresholds_answer, chunk_count, oip_sample_complexity, partition, AdaptiveThresholds,
    AdaptiveThresholdsConfig, PartitionResult,
};
pub use thresholds::{bt_loss, bt_privacy_gap, BetweenThresholds, Oip};

use crate::dataset::Dataset;
use crate::error::{param, protocol, Result};
use crate::laplace::laplace_sample;
use crate::protocol::{Answer, Mechanism};
use crate::queries::{eval_statistical, Query};
use crate::rng::Rng;

fn stored<'a>(x: &'a Option<Dataset>, who: &str) -> Result<&'a Dataset> {
    match x {
        Some(x) => Ok(x),
        None => protocol(format!("{who} answered a query before init")),
    }
}

/// Answers every statistical query with its exact value. Not private.
#[derive(Debug, Default, Clone)]
pub struct ExactAnswerer {
    x: Option<Dataset>,
}

impl Mechanism for ExactAnswerer {
    fn init(&mut self, x: &Dataset, _rng: &mut Rng) -> Result<()> {
        self.x = Some(x.clone());
        Ok(())
    }

    fn answer(&mut self, q: &Query, _rng: &mut Rng) -> Result<Answer> {
        Ok(Answer::Real(eval_statistical(q, stored(&self.x, "exact answerer")?)?))
    }
}

/// `q(x) + U[−α, α]`: accurate to within `α` on every query, by construction.
/// Not private; it stands in for an arbitrary `α`-accurate answerer.
#[derive(Debug, Clone)]
pub struct UniformNoiseAnswerer {
    alpha: f64,
    x: Option<Dataset>,
}

impl UniformNoiseAnswerer {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return param(format!("alpha must lie in [0, 1), got {alpha}"));
        }
        Ok(Self { alpha, x: None })
    }
}

impl Mechanism for UniformNoiseAnswerer {
    fn init(&mut self, x: &Dataset, _rng: &mut Rng) -> Result<()> {
        self.x = Some(x.clone());
        Ok(())
    }

    fn answer(&mut self, q: &Query, rng: &mut Rng) -> Result<Answer> {
        use rand::Rng as _;
        let truth = eval_statistical(q, stored(&self.x, "uniform-noise answerer")?)?;
        let noise = if self.alpha > 0.0 {
            rng.random_range(-self.alpha..=self.alpha)
        } else {
            0.0
        };
        Ok(Answer::Real(truth + noise))
    }
}

/// `q(x) + Lap(1/(nε))`, reported without clamping.
pub fn laplace_mechanism(x: &Dataset, q: &Query, epsilon_per_query: f64, rng: &mut Rng) -> Result<f64> {
    if !(epsilon_per_query > 0.0) {
        return param(format!("epsilon must be positive, got {epsilon_per_query}"));
    }
    let truth = eval_statistical(q, x)?;
    Ok(truth + laplace_sample(1.0 / (x.len() as f64 * epsilon_per_query), rng)?)
}

/// The Laplace baseline: every query gets independent noise at a fixed per-query ε.
#[derive(Debug, Clone)]
pub struct LaplaceMechanism {
    epsilon_per_query: f64,
    x: Option<Dataset>,
}

impl LaplaceMechanism {
    pub fn new(epsilon_per_query: f64) -> Result<Self> {
        if !(epsilon_per_query > 0.0) {
            return param(format!("epsilon must be positive, got {epsilon_per_query}"));
        }
        Ok(Self {
            epsilon_per_query,
            x: None,
        })
    }

    pub fn epsilon_per_query(&self) -> f64 {
        self.epsilon_per_query
    }
}

impl Mechanism for LaplaceMechanism {
    fn init(&mut self, x: &Dataset, _rng: &mut Rng) -> Result<()> {
        self.x = Some(x.clone());
        Ok(())
    }

    fn answer(&mut self, q: &Query, rng: &mut Rng) -> Result<Answer> {
        let x = stored(&self.x, "Laplace mechanism")?;
        Ok(Answer::Real(laplace_mechanism(x, q, self.epsilon_per_query, rng)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::queries::ThresholdQuery;
    use crate::rng::RandomSource;

    fn setup() -> (Dataset, Query, f64) {
        let x = Dataset::reals((0..100).map(|i| i as f64 / 100.0).collect()).unwrap();
        let q = Query::Threshold(ThresholdQuery::new(0.3).unwrap());
        let truth = eval_statistical(&q, &x).unwrap();
        (x, q, truth)
    }

    #[test]
    fn laplace_vanishes_at_huge_epsilon() {
        let (x, q, truth) = setup();
        let mut rng = RandomSource::new(1, 0).rng();
        let a = laplace_mechanism(&x, &q, 1e6, &mut rng).unwrap();
        assert!((a - truth).abs() < 1e-4);
        assert!(laplace_mechanism(&x, &q, 0.0, &mut rng).is_err());
    }

    #[test]
    fn laplace_noise_is_centred_with_the_right_median() {
        let (x, q, truth) = setup();
        let eps = 0.5;
        let n = x.len() as f64;
        let scale = 1.0 / (n * eps);
        let mut rng = RandomSource::new(2, 0).rng();
        let trials = 100_000;
        let mut sum = 0.0;
        let mut beyond = 0usize;
        for _ in 0..trials {
            let e = laplace_mechanism(&x, &q, eps, &mut rng).unwrap() - truth;
            sum += e;
            if e.abs() > std::f64::consts::LN_2 * scale {
                beyond += 1;
            }
        }
        // Var = 2λ²
        let sd_mean = (2.0f64).sqrt() * scale / (trials as f64).sqrt();
        assert!((sum / trials as f64).abs() <= 3.0 * sd_mean);
        let sd_frac = (0.25 / trials as f64).sqrt();
        assert!((beyond as f64 / trials as f64 - 0.5).abs() <= 3.0 * sd_frac);
    }

    #[test]
    fn mechanisms_reject_queries_before_init() {
        let (_, q, _) = setup();
        let mut rng = RandomSource::new(0, 0).rng();
        assert!(ExactAnswerer::default().answer(&q, &mut rng).is_err());
        assert!(LaplaceMechanism::new(1.0).unwrap().answer(&q, &mut rng).is_err());
    }
}
