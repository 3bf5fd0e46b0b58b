//! Randomized response answerers for correlated-vector queries.

use std::sync::{Arc, Once};

use log::warn;

use crate::dataset::Dataset;
use crate::error::{param, protocol, Result};
use crate::protocol::{Answer, Mechanism};
use crate::queries::Query;
use crate::rng::Rng;
use crate::signs::SignVector;

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return param(format!("alpha must lie in (0, 1), got {alpha}"));
    }
    if alpha >= 0.5 {
        // fresh randomized response builds one mechanism per query; say it once
        static ONCE: Once = Once::new();
        ONCE.call_once(|| warn!("randomized response with alpha = {alpha} >= 1/2 is outside its privacy guarantee"));
    }
    Ok(())
}

/// Keeps each `x_i` with probability `(1 + α)/2` and flips it otherwise.
pub fn m_corr(x: &SignVector, alpha: f64, rng: &mut Rng) -> Result<SignVector> {
    check_alpha(alpha)?;
    Ok(x.with_flips((1.0 - alpha) / 2.0, rng))
}

fn expect_corr(q: &Query) -> Result<()> {
    match q {
        Query::Corr(_) => Ok(()),
        other => param(format!(
            "randomized response answers corr queries, got {}",
            other.kind()
        )),
    }
}

/// Draws one randomized response `y` at init and answers every query with it.
#[derive(Debug, Clone)]
pub struct MCorr {
    alpha: f64,
    y: Option<Arc<SignVector>>,
}

impl MCorr {
    pub fn new(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self { alpha, y: None })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// The shared answer, once drawn.
    pub fn response(&self) -> Option<&Arc<SignVector>> {
        self.y.as_ref()
    }
}

impl Mechanism for MCorr {
    fn init(&mut self, x: &Dataset, rng: &mut Rng) -> Result<()> {
        self.y = Some(Arc::new(m_corr(x.as_signs()?, self.alpha, rng)?));
        Ok(())
    }

    fn answer(&mut self, q: &Query, _rng: &mut Rng) -> Result<Answer> {
        expect_corr(q)?;
        match &self.y {
            Some(y) => Ok(Answer::Vector(Arc::clone(y))),
            None => protocol("M_corr answered a query before init"),
        }
    }
}

/// Draws a fresh randomized response for every query. Each answer is accurate
/// on its own, but together they reveal `x` by majority vote.
#[derive(Debug, Clone)]
pub struct FreshRandomizedResponse {
    alpha: f64,
    x: Option<SignVector>,
}

impl FreshRandomizedResponse {
    pub fn new(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self { alpha, x: None })
    }
}

impl Mechanism for FreshRandomizedResponse {
    fn init(&mut self, x: &Dataset, _rng: &mut Rng) -> Result<()> {
        self.x = Some(x.as_signs()?.clone());
        Ok(())
    }

    fn answer(&mut self, q: &Query, rng: &mut Rng) -> Result<Answer> {
        expect_corr(q)?;
        match &self.x {
            Some(x) => Ok(Answer::Vector(Arc::new(m_corr(x, self.alpha, rng)?))),
            None => protocol("fresh randomized response answered a query before init"),
        }
    }
}

/// Answers every correlated-vector query with `x` itself. Not private.
#[derive(Debug, Clone, Default)]
pub struct IdentityMechanism {
    x: Option<Arc<SignVector>>,
}

impl Mechanism for IdentityMechanism {
    fn init(&mut self, x: &Dataset, _rng: &mut Rng) -> Result<()> {
        self.x = Some(Arc::new(x.as_signs()?.clone()));
        Ok(())
    }

    fn answer(&mut self, q: &Query, _rng: &mut Rng) -> Result<Answer> {
        expect_corr(q)?;
        match &self.x {
            Some(x) => Ok(Answer::Vector(Arc::clone(x))),
            None => protocol("identity mechanism answered a query before init"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomSource;

    #[test]
    fn near_one_alpha_keeps_x() {
        let mut ok = 0;
        for t in 0..200 {
            let mut rng = RandomSource::new(7, t).rng();
            let x = SignVector::random(1000, &mut rng);
            let y = m_corr(&x, 0.999, &mut rng).unwrap();
            if x.hamming(&y) <= 5 {
                ok += 1;
            }
        }
        // Binomial(1000, 0.0005) exceeds 5 with probability about 1.4e-5
        assert!(ok >= 198, "{ok}");
    }

    #[test]
    fn flip_rate_and_correlation() {
        let mut rng = RandomSource::new(8, 0).rng();
        let x = SignVector::random(100_000, &mut rng);
        let y = m_corr(&x, 0.5, &mut rng).unwrap();
        assert!((x.hamming(&y) as f64 / 1e5 - 0.25).abs() <= 0.005);

        let n = 1_000_000;
        let x = SignVector::random(n, &mut rng);
        let y = m_corr(&x, 0.5, &mut rng).unwrap();
        assert!((y.inner(&x) as f64 / n as f64 - 0.5).abs() <= 0.003);
    }

    #[test]
    fn alpha_out_of_range_is_rejected() {
        for a in [0.0, 1.0, -0.2, 1.5, f64::NAN] {
            assert!(MCorr::new(a).is_err());
            assert!(FreshRandomizedResponse::new(a).is_err());
        }
        assert!(MCorr::new(0.7).is_ok());
    }

    #[test]
    fn privacy_ratio_fits_the_exponential_bound() {
        // one-bit likelihood ratio (1+α)/(1−α) against e^{3α} on a grid of (0, 1/2)
        for i in 1..500 {
            let a = i as f64 / 1000.0;
            assert!((1.0 + a) / (1.0 - a) <= (3.0 * a).exp(), "alpha {a}");
        }
    }
}
