//! BetweenThresholds and the online interior-point mechanism built on it.

use std::sync::Once;

use log::warn;

use crate::dataset::Dataset;
use crate::error::{param, protocol, Result};
use crate::laplace::laplace_sample;
use crate::protocol::{Answer, Mechanism, Symbol};
use crate::queries::{eval_statistical, Query};
use crate::rng::Rng;

/// Smallest threshold gap for which BetweenThresholds is `(ε, δ)`-private on `n` rows.
pub fn bt_privacy_gap(epsilon: f64, delta: f64, n: usize) -> f64 {
    12.0 / (epsilon * n as f64) * ((10.0 / epsilon).ln() + (1.0 / delta).ln() + 1.0)
}

/// Smallest `α` for which a BetweenThresholds answer `s` on a query of exact
/// value `q` meets the accuracy promise: `L ⇒ q ≤ t_ℓ + α`, `R ⇒ q ≥ t_u − α`,
/// `⊤ ⇒ t_ℓ − α ≤ q ≤ t_u + α`.
pub fn bt_loss(s: Symbol, q: f64, t_lower: f64, t_upper: f64) -> f64 {
    let slack = match s {
        Symbol::L => q - t_lower,
        Symbol::R => t_upper - q,
        Symbol::Top => (t_lower - q).max(q - t_upper),
    };
    slack.max(0.0)
}

/// Sparse-vector variant that reports whether each noisy query value falls
/// below, above, or between two noisy thresholds, halting on the first "between".
#[derive(Debug, Clone)]
pub struct BetweenThresholds {
    t_lower: f64,
    t_upper: f64,
    epsilon: f64,
    delta: Option<f64>,
    n: usize,
    noisy: Option<(f64, f64)>,
    halted: bool,
    x: Option<Dataset>,
}

impl BetweenThresholds {
    pub fn new(t_lower: f64, t_upper: f64, epsilon: f64) -> Result<Self> {
        if !(0.0 < t_lower && t_lower <= t_upper && t_upper < 1.0) {
            return param(format!(
                "thresholds must satisfy 0 < t_l <= t_u < 1, got ({t_lower}, {t_upper})"
            ));
        }
        if !(epsilon > 0.0) {
            return param(format!("epsilon must be positive, got {epsilon}"));
        }
        Ok(Self {
            t_lower,
            t_upper,
            epsilon,
            delta: None,
            n: 0,
            noisy: None,
            halted: false,
            x: None,
        })
    }

    /// Declares the target `δ`, enabling the threshold-gap warning at init.
    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = Some(delta);
        self
    }

    /// Draws the shared threshold noise `μ ~ Lap(2/(εn))` for a dataset of `n` rows.
    pub fn init_with_n(&mut self, n: usize, rng: &mut Rng) -> Result<()> {
        if n == 0 {
            return param("BetweenThresholds needs a nonempty dataset");
        }
        if let Some(delta) = self.delta {
            let gap = bt_privacy_gap(self.epsilon, delta, n);
            if self.t_upper - self.t_lower < gap {
                static ONCE: Once = Once::new();
                ONCE.call_once(|| {
                    warn!(
                        "threshold gap {} is below {gap:.4}, the gap needed for privacy at n = {n}",
                        self.t_upper - self.t_lower
                    )
                });
            }
        }
        let mu = laplace_sample(2.0 / (self.epsilon * n as f64), rng)?;
        self.n = n;
        self.noisy = Some((self.t_lower + mu, self.t_upper - mu));
        self.halted = false;
        Ok(())
    }

    pub fn thresholds(&self) -> (f64, f64) {
        (self.t_lower, self.t_upper)
    }

    /// `(t̂_ℓ, t̂_u)` once initialised.
    pub fn noisy_thresholds(&self) -> Option<(f64, f64)> {
        self.noisy
    }

    pub fn is_halted(&self) -> bool {
        self.halted
    }

    /// Classifies an exact query value (of sensitivity `1/n`) after adding `Lap(6/(εn))`.
    pub fn answer_value(&mut self, q_value: f64, rng: &mut Rng) -> Result<Symbol> {
        if self.halted {
            return protocol("BetweenThresholds was asked a query after halting");
        }
        let Some((lo, hi)) = self.noisy else {
            return protocol("BetweenThresholds answered before init");
        };
        let c = q_value + laplace_sample(6.0 / (self.epsilon * self.n as f64), rng)?;
        Ok(if c < lo {
            Symbol::L
        } else if c > hi {
            Symbol::R
        } else {
            self.halted = true;
            Symbol::Top
        })
    }
}

impl Mechanism for BetweenThresholds {
    fn init(&mut self, x: &Dataset, rng: &mut Rng) -> Result<()> {
        self.init_with_n(x.len(), rng)?;
        self.x = Some(x.clone());
        Ok(())
    }

    fn answer(&mut self, q: &Query, rng: &mut Rng) -> Result<Answer> {
        let v = match &self.x {
            Some(x) => eval_statistical(q, x)?,
            None => return protocol("BetweenThresholds answered before init"),
        };
        Ok(Answer::Symbol(self.answer_value(v, rng)?))
    }

    fn halted(&self) -> bool {
        self.halted
    }
}

/// Online interior point: answers `L`/`R` to each point `y` so that points
/// below the data get `L` and points at or above its maximum get `R`.
///
/// Runs BetweenThresholds with thresholds `1/3`, `2/3` on the threshold
/// statistics `c_y(x)`. When it halts on `y*`, that point becomes a pivot and
/// every later query is answered by comparison with it. It never refuses.
#[derive(Debug, Clone)]
pub struct Oip {
    bt: BetweenThresholds,
    sorted: Vec<f64>,
    pivot: Option<f64>,
}

impl Oip {
    pub fn new(epsilon: f64) -> Result<Self> {
        Ok(Self {
            bt: BetweenThresholds::new(1.0 / 3.0, 2.0 / 3.0, epsilon)?,
            sorted: Vec::new(),
            pivot: None,
        })
    }

    /// Initialises on data already sorted in nondecreasing order.
    pub fn init_sorted(&mut self, sorted: Vec<f64>, rng: &mut Rng) -> Result<()> {
        debug_assert!(sorted.windows(2).all(|w| w[0] <= w[1]));
        self.bt.init_with_n(sorted.len(), rng)?;
        self.sorted = sorted;
        self.pivot = None;
        Ok(())
    }

    pub fn pivot(&self) -> Option<f64> {
        self.pivot
    }

    pub fn inner(&self) -> &BetweenThresholds {
        &self.bt
    }

    pub fn answer_point(&mut self, y: f64, rng: &mut Rng) -> Result<Symbol> {
        if let Some(p) = self.pivot {
            return Ok(if y < p { Symbol::L } else { Symbol::R });
        }
        let below = self.sorted.partition_point(|&v| v <= y);
        match self.bt.answer_value(below as f64 / self.sorted.len() as f64, rng)? {
            Symbol::Top => {
                self.pivot = Some(y);
                Ok(Symbol::R)
            }
            s => Ok(s),
        }
    }
}

impl Mechanism for Oip {
    fn init(&mut self, x: &Dataset, rng: &mut Rng) -> Result<()> {
        let mut v = x.as_reals()?.to_vec();
        v.sort_by(f64::total_cmp);
        self.init_sorted(v, rng)
    }

    fn answer(&mut self, q: &Query, rng: &mut Rng) -> Result<Answer> {
        match q {
            Query::Threshold(t) => Ok(Answer::Symbol(self.answer_point(t.tau, rng)?)),
            other => param(format!("OIP answers threshold queries, got {}", other.kind())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laplace::Laplace;
    use crate::rng::RandomSource;

    #[test]
    fn noisy_thresholds_share_mu() {
        let mut rng = RandomSource::new(1, 0).rng();
        let mut bt = BetweenThresholds::new(0.3, 0.6, 1.0).unwrap();
        bt.init_with_n(100, &mut rng).unwrap();
        let (lo, hi) = bt.noisy_thresholds().unwrap();
        assert_eq!(lo + hi, 0.3 + 0.6);

        let mut bt = BetweenThresholds::new(0.3, 0.6, 1e6).unwrap();
        bt.init_with_n(100, &mut rng).unwrap();
        let (lo, hi) = bt.noisy_thresholds().unwrap();
        assert!((lo - 0.3).abs() < 1e-4 && (hi - 0.6).abs() < 1e-4);
    }

    #[test]
    fn threshold_noise_has_laplace_tails() {
        let (eps, n) = (0.5, 40);
        let scale = 2.0 / (eps * n as f64);
        let trials = 100_000;
        let mut rng = RandomSource::new(2, 0).rng();
        let mut beyond = [0usize; 2];
        for _ in 0..trials {
            let mut bt = BetweenThresholds::new(0.3, 0.6, eps).unwrap();
            bt.init_with_n(n, &mut rng).unwrap();
            let d = (bt.noisy_thresholds().unwrap().0 - 0.3).abs();
            for (b, z) in beyond.iter_mut().zip([1.0, 2.0]) {
                if d > z * scale {
                    *b += 1;
                }
            }
        }
        for (b, z) in beyond.iter().zip([1.0f64, 2.0]) {
            let p = (-z).exp();
            let sd = (p * (1.0 - p) / trials as f64).sqrt();
            assert!((*b as f64 / trials as f64 - p).abs() <= 3.0 * sd);
        }
    }

    #[test]
    fn rejects_bad_thresholds() {
        for (a, b) in [(0.0, 0.5), (0.6, 0.5), (0.2, 1.0), (f64::NAN, 0.5)] {
            assert!(BetweenThresholds::new(a, b, 1.0).is_err());
        }
        assert!(BetweenThresholds::new(0.2, 0.4, 0.0).is_err());
    }

    #[test]
    fn far_values_get_l_and_r() {
        let (eps, n) = (1.0, 1000);
        let noise = 6.0 / (eps * n as f64);
        let mut rng = RandomSource::new(3, 0).rng();
        let trials = 20_000;
        let (mut l, mut r) = (0, 0);
        for _ in 0..trials {
            let mut bt = BetweenThresholds::new(0.4, 0.6, eps).unwrap();
            bt.init_with_n(n, &mut rng).unwrap();
            let (lo, hi) = bt.noisy_thresholds().unwrap();
            if bt.answer_value(lo - 20.0 * noise, &mut rng).unwrap() == Symbol::L {
                l += 1;
            }
            let mut bt2 = bt.clone();
            if bt2.answer_value(hi + 20.0 * noise, &mut rng).unwrap() == Symbol::R {
                r += 1;
            }
        }
        // P(miss) = e^{-20}/2 per draw
        let floor = ((1.0 - 1e-4) * trials as f64) as usize;
        assert!(l >= floor && r >= floor, "{l} {r}");
        assert!(Laplace::new(noise).unwrap().cdf(-20.0 * noise) < 1e-8);
    }

    #[test]
    fn halts_once_and_refuses_afterwards() {
        let mut rng = RandomSource::new(4, 0).rng();
        let mut bt = BetweenThresholds::new(0.3, 0.7, 1e6).unwrap();
        bt.init_with_n(100, &mut rng).unwrap();
        assert_eq!(bt.answer_value(0.1, &mut rng).unwrap(), Symbol::L);
        assert_eq!(bt.answer_value(0.9, &mut rng).unwrap(), Symbol::R);
        assert_eq!(bt.answer_value(0.5, &mut rng).unwrap(), Symbol::Top);
        assert!(bt.is_halted());
        assert!(matches!(bt.answer_value(0.1, &mut rng), Err(crate::Error::Protocol(_))));
    }

    #[test]
    fn transcripts_have_at_most_one_final_top() {
        use rand::Rng as _;
        let mut rng = RandomSource::new(5, 0).rng();
        for _ in 0..300 {
            let mut bt = BetweenThresholds::new(0.4, 0.6, 0.5).unwrap();
            bt.init_with_n(50, &mut rng).unwrap();
            let mut seq = Vec::new();
            for _ in 0..30 {
                if bt.is_halted() {
                    break;
                }
                seq.push(bt.answer_value(rng.random::<f64>(), &mut rng).unwrap());
            }
            let tops = seq.iter().filter(|s| **s == Symbol::Top).count();
            assert!(tops <= 1);
            if tops == 1 {
                assert_eq!(seq.last(), Some(&Symbol::Top));
            }
        }
    }

    #[test]
    fn oip_pivot_contract() {
        let mut rng = RandomSource::new(6, 0).rng();
        let data: Vec<f64> = (0..300).map(|i| 0.2 + 0.6 * i as f64 / 299.0).collect();
        let mut oip = Oip::new(1e6).unwrap();
        oip.init_sorted(data, &mut rng).unwrap();
        assert_eq!(oip.answer_point(0.05, &mut rng).unwrap(), Symbol::L);
        assert_eq!(oip.answer_point(0.95, &mut rng).unwrap(), Symbol::R);
        assert_eq!(oip.answer_point(0.5, &mut rng).unwrap(), Symbol::R);
        let p = oip.pivot().unwrap();
        assert_eq!(p, 0.5);
        assert_eq!(oip.answer_point(p, &mut rng).unwrap(), Symbol::R);
        assert_eq!(oip.answer_point(p.next_down(), &mut rng).unwrap(), Symbol::L);
        assert!(oip.inner().is_halted());
    }

    #[test]
    fn oip_answers_l_below_the_data() {
        let mut rng = RandomSource::new(7, 0).rng();
        let x = Dataset::reals((0..1000).map(|i| 0.5 + 0.5 * i as f64 / 999.0).collect()).unwrap();
        for _ in 0..200 {
            let mut oip = Oip::new(1.0).unwrap();
            oip.init(&x, &mut rng).unwrap();
            assert_eq!(oip.answer_point(0.1, &mut rng).unwrap(), Symbol::L);
        }
    }

    #[test]
    fn gap_formula() {
        let g = bt_privacy_gap(1.0, 1e-6, 1000);
        let expect = 12.0 / 1000.0 * (10f64.ln() + 1e6f64.ln() + 1.0);
        assert!((g - expect).abs() < 1e-15);
    }
}
