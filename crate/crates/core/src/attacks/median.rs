//! Binary search for an approximate median with threshold queries, and the
//! packing datasets on which that search must succeed.

use crate::dataset::Dataset;
use crate::error::{param, Result};
use crate::protocol::{AdaptiveAdversary, Answer};
use crate::queries::{embed_discrete, Query, ThresholdQuery};
use crate::rng::Rng;

/// Binary search over the domain `{1, …, T}`: ask `c_m` for the midpoint
/// `m = ⌈(u + ℓ)/2⌉`, move the upper end down to `m` when the answer is at
/// least `1/2`, otherwise move the lower end up; stop when `u − ℓ = 1`.
#[derive(Debug, Clone)]
pub struct MedianAdversary {
    domain: u64,
    lower: u64,
    upper: u64,
    pending: Option<u64>,
    issued: usize,
}

impl MedianAdversary {
    pub fn new(domain: u64) -> Result<Self> {
        if domain == 0 {
            return param("median search needs a nonempty domain");
        }
        Ok(Self {
            domain,
            lower: 0,
            upper: domain,
            pending: None,
            issued: 0,
        })
    }

    /// The current upper end; the output once the search has finished.
    pub fn result(&self) -> u64 {
        self.upper
    }

    pub fn finished(&self) -> bool {
        self.upper - self.lower <= 1
    }

    pub fn queries_issued(&self) -> usize {
        self.issued
    }

    /// `⌈1 + log₂ T⌉`, the most queries the search can need.
    pub fn query_budget(domain: u64) -> usize {
        1 + (u64::BITS - (domain.max(1) - 1).leading_zeros()) as usize
    }
}

impl AdaptiveAdversary for MedianAdversary {
    fn next_query(&mut self, history: &[(Query, Answer)], _rng: &mut Rng) -> Result<Option<Query>> {
        if let (Some(m), Some((_, a))) = (self.pending.take(), history.last()) {
            if a.as_real()? >= 0.5 {
                self.upper = m;
            } else {
                self.lower = m;
            }
        }
        if self.finished() {
            return Ok(None);
        }
        let m = (self.upper + self.lower).div_ceil(2);
        self.pending = Some(m);
        self.issued += 1;
        Ok(Some(Query::Threshold(ThresholdQuery::discrete(m, self.domain)?)))
    }
}

/// Whether `y` has at least a `(1/2 − α)` fraction of rows on each side.
pub fn is_approximate_median(rows: &[u64], y: u64, alpha: f64) -> bool {
    let n = rows.len() as f64;
    let below = rows.iter().filter(|&&v| v <= y).count() as f64;
    let above = rows.iter().filter(|&&v| v >= y).count() as f64;
    below / n >= 0.5 - alpha && above / n >= 0.5 - alpha
}

/// Multiplicity `m = ⌈(1/2 − α)n⌉ − 1` of each extreme in a packing dataset.
pub fn packing_multiplicity(n: usize, alpha: f64) -> usize {
    (((0.5 - alpha) * n as f64).ceil() as usize).saturating_sub(1)
}

/// Integer rows of the packing dataset `x^t`: `m` copies of `1`, `n − 2m`
/// copies of `t`, `m` copies of `T`.
pub fn packing_rows(domain: u64, t: u64, n: usize, alpha: f64) -> Result<Vec<u64>> {
    if !(1..=domain).contains(&t) {
        return param(format!("t = {t} outside the domain [1, {domain}]"));
    }
    if !(alpha > 0.0 && alpha < 0.5) {
        return param(format!("alpha must lie in (0, 1/2), got {alpha}"));
    }
    let m = packing_multiplicity(n, alpha);
    if n < 2 * m + 1 {
        return param(format!("n = {n} leaves no copies of t"));
    }
    let mut rows = vec![1; m];
    rows.extend(std::iter::repeat_n(t, n - 2 * m));
    rows.extend(std::iter::repeat_n(domain, m));
    Ok(rows)
}

/// The packing dataset embedded in `[0, 1]` by `i ↦ i/T`.
pub fn gen_packing_dataset(domain: u64, t: u64, n: usize, alpha: f64) -> Result<Dataset> {
    let rows = packing_rows(domain, t, n, alpha)?;
    Dataset::reals(rows.into_iter().map(|v| embed_discrete(v, domain)).collect())
}

/// Integer rows embedded in `[0, 1]` by `i ↦ i/T`.
pub fn discrete_dataset(rows: &[u64], domain: u64) -> Result<Dataset> {
    if let Some(v) = rows.iter().find(|&&v| v == 0 || v > domain) {
        return param(format!("row {v} outside the domain [1, {domain}]"));
    }
    Dataset::reals(rows.iter().map(|&v| embed_discrete(v, domain)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::ExactAnswerer;
    use crate::protocol::run_adaptive;
    use crate::rng::RandomSource;
    use rand::Rng as _;

    fn search(rows: &[u64], domain: u64) -> (u64, usize) {
        let x = discrete_dataset(rows, domain).unwrap();
        let mut adv = MedianAdversary::new(domain).unwrap();
        let budget = MedianAdversary::query_budget(domain);
        let t = run_adaptive(
            &mut ExactAnswerer::default(),
            &mut adv,
            &x,
            budget,
            &RandomSource::new(0, 0),
        )
        .unwrap();
        assert!(adv.finished());
        (adv.result(), t.len())
    }

    #[test]
    fn constant_dataset() {
        assert_eq!(search(&[7; 50], 16), (7, 4));
    }

    #[test]
    fn query_counts() {
        assert_eq!(MedianAdversary::query_budget(8), 4);
        assert_eq!(MedianAdversary::query_budget(16), 5);
        assert_eq!(MedianAdversary::query_budget(1024), 11);
        assert_eq!(search(&[3; 10], 8).1, 3);
        assert_eq!(search(&[1], 1), (1, 0));
    }

    #[test]
    fn exact_search_finds_a_zero_approximate_median() {
        let mut rng = RandomSource::new(1, 0).rng();
        for _ in 0..1000 {
            let domain = rng.random_range(1..=64u64);
            let n = rng.random_range(1..=40);
            let rows: Vec<u64> = (0..n).map(|_| rng.random_range(1..=domain)).collect();
            let (y, count) = search(&rows, domain);
            assert!(count <= MedianAdversary::query_budget(domain));
            assert!(is_approximate_median(&rows, y, 0.0), "{rows:?} -> {y}");
        }
    }

    #[test]
    fn packing_dataset_shape() {
        let rows = packing_rows(64, 7, 1000, 0.1).unwrap();
        let m = packing_multiplicity(1000, 0.1);
        assert_eq!(m, 399);
        assert_eq!(rows.iter().filter(|&&v| v == 7).count(), 1000 - 2 * m);
        assert_eq!(rows.iter().filter(|&&v| v == 1).count(), m);
        for y in 1..=64 {
            assert_eq!(is_approximate_median(&rows, y, 0.1), y == 7);
        }
        assert!(packing_rows(64, 0, 1000, 0.1).is_err());
        assert!(packing_rows(64, 65, 1000, 0.1).is_err());
        assert!(packing_rows(64, 3, 1000, 0.6).is_err());
        assert!(gen_packing_dataset(64, 7, 1000, 0.1).unwrap().len() == 1000);
    }

    #[test]
    fn search_recovers_every_packing_centre() {
        for t in 1..=64 {
            let rows = packing_rows(64, t, 101, 0.1).unwrap();
            assert_eq!(search(&rows, 64).0, t);
        }
    }
}
