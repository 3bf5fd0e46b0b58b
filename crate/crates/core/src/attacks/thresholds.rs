//! Query streams that stress threshold mechanisms.

use rand::Rng as _;

use crate::dataset::Dataset;
use crate::error::{param, Result};
use crate::protocol::{AdaptiveAdversary, Answer};
use crate::queries::{Query, ThresholdQuery};
use crate::rng::Rng;

fn threshold(tau: f64) -> Result<Query> {
    Ok(Query::Threshold(ThresholdQuery::new(tau.clamp(0.0, 1.0))?))
}

/// Interleaves a binary search for the point where answers cross `1/2` with
/// uniformly random thresholds. The search restarts once its interval is tiny.
#[derive(Debug, Clone)]
pub struct ThresholdMix {
    search_fraction: f64,
    lo: f64,
    hi: f64,
    pending: Option<f64>,
}

impl ThresholdMix {
    pub fn new(search_fraction: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&search_fraction) {
            return param(format!("search fraction {search_fraction} outside [0, 1]"));
        }
        Ok(Self {
            search_fraction,
            lo: 0.0,
            hi: 1.0,
            pending: None,
        })
    }
}

impl AdaptiveAdversary for ThresholdMix {
    fn next_query(&mut self, history: &[(Query, Answer)], rng: &mut Rng) -> Result<Option<Query>> {
        if let (Some(mid), Some((_, a))) = (self.pending.take(), history.last()) {
            if a.as_real()? >= 0.5 {
                self.hi = mid;
            } else {
                self.lo = mid;
            }
            if self.hi - self.lo < 1e-6 {
                (self.lo, self.hi) = (0.0, 1.0);
            }
        }
        let y = if rng.random_bool(self.search_fraction) {
            let mid = (self.lo + self.hi) / 2.0;
            self.pending = Some(mid);
            mid
        } else {
            rng.random::<f64>()
        };
        Ok(Some(threshold(y)?))
    }
}

/// Targets the interior-point contract of a dataset whose range it knows:
/// points just below the minimum (which must get `L`), the maximum itself
/// (which must get `R`), and interior points chosen by bisecting on earlier
/// answers to find the mechanism's switch point.
#[derive(Debug, Clone)]
pub struct OipStress {
    min: f64,
    max: f64,
    probe: (f64, f64),
    pending_probe: Option<f64>,
}

impl OipStress {
    pub fn new(x: &Dataset) -> Result<Self> {
        let rows = x.as_reals()?;
        if rows.is_empty() {
            return param("OIP stress needs a nonempty dataset");
        }
        let min = rows.iter().copied().fold(f64::INFINITY, f64::min);
        let max = rows.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            min,
            max,
            probe: (min, max),
            pending_probe: None,
        })
    }
}

impl AdaptiveAdversary for OipStress {
    fn next_query(&mut self, history: &[(Query, Answer)], rng: &mut Rng) -> Result<Option<Query>> {
        if let (Some(y), Some((_, a))) = (self.pending_probe.take(), history.last()) {
            match a.as_symbol()? {
                crate::protocol::Symbol::R => self.probe.1 = y,
                _ => self.probe.0 = y,
            }
            if self.probe.1 - self.probe.0 < 1e-9 {
                self.probe = (self.min, self.max);
            }
        }
        let u: f64 = rng.random();
        let y = if u < 0.45 && self.min > 0.0 {
            self.min.next_down()
        } else if u < 0.9 {
            self.max
        } else {
            let y = (self.probe.0 + self.probe.1) / 2.0;
            self.pending_probe = Some(y);
            y
        };
        Ok(Some(threshold(y)?))
    }
}

/// `(1/n, 2/n, …, 1)`: row `i` is `i/n`, so the threshold `c/n` has value `c/n`.
pub fn grid_dataset(n: usize) -> Result<Dataset> {
    if n == 0 {
        return param("grid dataset needs n >= 1");
    }
    Dataset::reals((1..=n).map(|i| i as f64 / n as f64).collect())
}

/// Threshold queries on [`grid_dataset`] whose values sit just outside the
/// accuracy band `[t_ℓ − α, t_u + α]` of BetweenThresholds, where a halting
/// answer would break its guarantee, with an occasional in-band value.
#[derive(Debug, Clone)]
pub struct BandEdgeAdversary {
    n: usize,
    below: usize,
    above: usize,
    band: (usize, usize),
    in_band_rate: f64,
}

impl BandEdgeAdversary {
    pub fn new(n: usize, t_lower: f64, t_upper: f64, alpha: f64, in_band_rate: f64) -> Result<Self> {
        if n == 0 || !(0.0..=1.0).contains(&in_band_rate) {
            return param("band-edge adversary needs n >= 1 and a rate in [0, 1]");
        }
        let nf = n as f64;
        // largest c with c/n < t_ℓ − α, smallest c with c/n > t_u + α
        let below = (((t_lower - alpha) * nf).ceil() as i64 - 1).max(0) as usize;
        let above = ((((t_upper + alpha) * nf).floor() as i64) + 1).min(n as i64) as usize;
        let band = (
            (t_lower * nf).ceil() as usize,
            ((t_upper * nf).floor() as usize).max((t_lower * nf).ceil() as usize),
        );
        Ok(Self {
            n,
            below,
            above,
            band,
            in_band_rate,
        })
    }

    /// The two out-of-band query values `(below, above)`.
    pub fn edge_values(&self) -> (f64, f64) {
        (self.below as f64 / self.n as f64, self.above as f64 / self.n as f64)
    }
}

impl AdaptiveAdversary for BandEdgeAdversary {
    fn next_query(&mut self, _history: &[(Query, Answer)], rng: &mut Rng) -> Result<Option<Query>> {
        let c = if rng.random_bool(self.in_band_rate) {
            rng.random_range(self.band.0..=self.band.1)
        } else if rng.random_bool(0.5) {
            self.below
        } else {
            self.above
        };
        Ok(Some(threshold(c as f64 / self.n as f64)?))
    }
}
