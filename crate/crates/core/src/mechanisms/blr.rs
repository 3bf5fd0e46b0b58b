//! Offline answering by sampling a small synthetic dataset.
//!
//! The exponential mechanism over every size-`m` multiset `z` of a finite
//! universe, scored by `max_j |q_j(z) − q_j(x)|`. Enumeration keeps the
//! output distribution exactly computable, which is the point at desk scale.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, UniverseElement};
use crate::error::{param, protocol, Error, Result};
use crate::protocol::{Answer, Mechanism};
use crate::queries::{restrict_universe, PrefixQuery, Query};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlrConfig {
    /// Size `m` of the synthetic dataset.
    pub synthetic_size: usize,
    pub epsilon: f64,
    /// Largest number of candidate multisets we are willing to enumerate.
    pub candidate_cap: u64,
}

impl BlrConfig {
    pub fn new(synthetic_size: usize, epsilon: f64) -> Result<Self> {
        if synthetic_size == 0 {
            return param("synthetic dataset size must be positive");
        }
        if !(epsilon > 0.0) {
            return param(format!("epsilon must be positive, got {epsilon}"));
        }
        Ok(Self {
            synthetic_size,
            epsilon,
            candidate_cap: 1_000_000,
        })
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.candidate_cap = cap;
        self
    }
}

/// Row counts over an explicit finite universe.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub universe: Vec<UniverseElement>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn new(universe: Vec<UniverseElement>, counts: Vec<usize>) -> Result<Self> {
        if universe.is_empty() || universe.len() != counts.len() {
            return param(format!(
                "histogram needs a nonempty universe with one count each ({} elements, {} counts)",
                universe.len(),
                counts.len()
            ));
        }
        if counts.iter().sum::<usize>() == 0 {
            return param("histogram of an empty dataset");
        }
        Ok(Self { universe, counts })
    }

    /// Counts the rows of `x`; every row must appear in `universe`.
    pub fn from_dataset(x: &Dataset, universe: Vec<UniverseElement>) -> Result<Self> {
        let mut counts = vec![0; universe.len()];
        for (i, row) in x.rows().enumerate() {
            let Some(u) = universe.iter().position(|u| u.as_row() == row) else {
                return param(format!("row {i} ({row:?}) is not in the universe"));
            };
            counts[u] += 1;
        }
        Self::new(universe, counts)
    }

    pub fn n(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// `C(u + m − 1, m)`, the number of size-`m` multisets of a `u`-element set,
/// or `None` if it does not fit in 64 bits.
pub fn multiset_count(universe: usize, m: usize) -> Option<u64> {
    if universe == 0 {
        return Some(u64::from(m == 0));
    }
    let (top, k) = ((universe + m - 1) as u128, m.min(universe - 1) as u128);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c.checked_mul(top - i)? / (i + 1);
        if c > u64::MAX as u128 {
            return None;
        }
    }
    Some(c as u64)
}

/// The exponential mechanism's full output distribution.
#[derive(Debug, Clone)]
pub struct BlrDistribution {
    /// Each candidate as counts per universe element (summing to `m`).
    pub candidates: Vec<Vec<u32>>,
    /// `q_j(z)` per candidate and query.
    pub answers: Vec<Vec<f64>>,
    /// `max_j |q_j(z) − q_j(x)|` per candidate.
    pub errors: Vec<f64>,
    pub probabilities: Vec<f64>,
    /// `q_j(x)` per query.
    pub truth: Vec<f64>,
    cumulative: Vec<f64>,
}

impl BlrDistribution {
    /// Index of a candidate drawn from the distribution.
    pub fn sample(&self, rng: &mut Rng) -> usize {
        let u: f64 = rng.random();
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.candidates.len() - 1)
    }

    /// Smallest error `e` with `P(error ≤ e) ≥ q`.
    pub fn error_quantile(&self, q: f64) -> f64 {
        let mut by_err: Vec<(f64, f64)> = self
            .errors
            .iter()
            .copied()
            .zip(self.probabilities.iter().copied())
            .collect();
        by_err.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut acc = 0.0;
        for (e, p) in &by_err {
            acc += p;
            if acc >= q - 1e-12 {
                return *e;
            }
        }
        by_err.last().map_or(0.0, |l| l.0)
    }
}

fn compositions(parts: usize, total: u32) -> Vec<Vec<u32>> {
    fn go(prefix: &mut Vec<u32>, parts: usize, left: u32, out: &mut Vec<Vec<u32>>) {
        if prefix.len() + 1 == parts {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for c in 0..=left {
            prefix.push(c);
            go(prefix, parts, left - c, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::with_capacity(parts), parts, total, &mut out);
    out
}

/// Enumerates all candidates and their exact selection probabilities.
pub fn blr_distribution(hist: &Histogram, queries: &[Query], cfg: &BlrConfig) -> Result<BlrDistribution> {
    if cfg.synthetic_size == 0 || !(cfg.epsilon > 0.0) {
        return param("BLR needs a positive synthetic size and epsilon");
    }
    let u = hist.universe.len();
    let m = cfg.synthetic_size;
    match multiset_count(u, m) {
        Some(c) if c <= cfg.candidate_cap => {}
        Some(c) => {
            return Err(Error::Config(format!(
                "{c} candidate synthetic datasets (universe {u}, size {m}); raise candidate_cap to at least {c}"
            )))
        }
        None => {
            return Err(Error::Config(format!(
                "candidate count for universe {u} and size {m} overflows 64 bits"
            )))
        }
    }

    // predicate table: query × universe element
    let table: Vec<Vec<bool>> = queries
        .iter()
        .map(|q| hist.universe.iter().map(|e| q.matches_row(e.as_row())).collect())
        .collect::<Result<_>>()?;
    let n = hist.n() as f64;
    let truth: Vec<f64> = table
        .iter()
        .map(|row| {
            row.iter()
                .zip(&hist.counts)
                .filter(|(b, _)| **b)
                .map(|(_, c)| *c as f64)
                .sum::<f64>()
                / n
        })
        .collect();

    let candidates = compositions(u, m as u32);
    let mut answers = Vec::with_capacity(candidates.len());
    let mut errors = Vec::with_capacity(candidates.len());
    for z in &candidates {
        let a: Vec<f64> = table
            .iter()
            .map(|row| {
                row.iter()
                    .zip(z)
                    .filter(|(b, _)| **b)
                    .map(|(_, c)| *c as f64)
                    .sum::<f64>()
                    / m as f64
            })
            .collect();
        let err = a.iter().zip(&truth).map(|(a, t)| (a - t).abs()).fold(0.0, f64::max);
        answers.push(a);
        errors.push(err);
    }

    let rate = cfg.epsilon * n / 2.0;
    let best = errors.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = errors.iter().map(|e| (-rate * (e - best)).exp()).collect();
    let total: f64 = weights.iter().sum();
    let probabilities: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let mut acc = 0.0;
    let cumulative = probabilities
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect();
    Ok(BlrDistribution {
        candidates,
        answers,
        errors,
        probabilities,
        truth,
        cumulative,
    })
}

/// Samples one synthetic dataset and returns its answers to `queries`.
pub fn blr_answer(hist: &Histogram, queries: &[Query], cfg: &BlrConfig, rng: &mut Rng) -> Result<Vec<f64>> {
    let mut dist = blr_distribution(hist, queries, cfg)?;
    let i = dist.sample(rng);
    Ok(dist.answers.swap_remove(i))
}

/// Offline prefix-query release: reduce the universe to the query strings,
/// then run [`blr_answer`] on the reduced histogram.
pub fn m_prefix(x: &Dataset, queries: &[PrefixQuery], cfg: &BlrConfig, rng: &mut Rng) -> Result<Vec<f64>> {
    let reduced = restrict_universe(queries, x)?;
    let universe = reduced.universe.into_iter().map(UniverseElement::Bits).collect();
    let hist = Histogram::from_dataset(&reduced.dataset, universe)?;
    let qs: Vec<Query> = queries.iter().cloned().map(Query::Prefix).collect();
    blr_answer(&hist, &qs, cfg, rng)
}

/// [`m_prefix`] as an offline mechanism. It needs the whole batch, so asking
/// it one query at a time is a protocol error.
#[derive(Debug, Clone)]
pub struct MPrefix {
    cfg: BlrConfig,
    x: Option<Dataset>,
}

impl MPrefix {
    pub fn new(cfg: BlrConfig) -> Self {
        Self { cfg, x: None }
    }
}

impl Mechanism for MPrefix {
    fn init(&mut self, x: &Dataset, _rng: &mut Rng) -> Result<()> {
        x.as_strings()?;
        self.x = Some(x.clone());
        Ok(())
    }

    fn answer(&mut self, _q: &Query, _rng: &mut Rng) -> Result<Answer> {
        protocol("M_prefix answers offline batches only")
    }

    fn answer_batch(&mut self, qs: &[Query], rng: &mut Rng) -> Result<Vec<Answer>> {
        let Some(x) = &self.x else {
            return protocol("M_prefix answered before init");
        };
        let prefix: Vec<PrefixQuery> = qs
            .iter()
            .map(|q| match q {
                Query::Prefix(p) => Ok(p.clone()),
                other => param(format!("M_prefix answers prefix queries, got {}", other.kind())),
            })
            .collect::<Result<_>>()?;
        if prefix.is_empty() {
            return Ok(Vec::new());
        }
        Ok(m_prefix(x, &prefix, &self.cfg, rng)?
            .into_iter()
            .map(Answer::Real)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::queries::{BitString, StatisticalQuery};
    use crate::rng::RandomSource;
    use crate::signs::Sign;

    fn reals_universe(vals: &[f64]) -> Vec<UniverseElement> {
        vals.iter().map(|&v| UniverseElement::Real(v)).collect()
    }

    fn below(t: f64) -> Query {
        Query::Statistical(StatisticalQuery::new(format!("x <= {t}"), move |r| match r {
            crate::dataset::RowRef::Real(v) => v <= t,
            _ => false,
        }))
    }

    #[test]
    fn multiset_counts() {
        assert_eq!(multiset_count(4, 4), Some(35));
        assert_eq!(multiset_count(1, 10), Some(1));
        assert_eq!(multiset_count(7, 6), Some(924));
        assert_eq!(multiset_count(0, 0), Some(1));
        assert_eq!(multiset_count(10_000, 10_000), None);
        assert_eq!(compositions(4, 4).len(), 35);
    }

    #[test]
    fn single_element_universe_is_exact() {
        let hist = Histogram::new(reals_universe(&[0.5]), vec![10]).unwrap();
        let cfg = BlrConfig::new(3, 1.0).unwrap();
        let mut rng = RandomSource::new(0, 0).rng();
        let a = blr_answer(&hist, &[below(0.6), below(0.4)], &cfg, &mut rng).unwrap();
        assert_eq!(a, vec![1.0, 0.0]);
    }

    #[test]
    fn huge_epsilon_selects_a_minimiser() {
        let hist = Histogram::new(reals_universe(&[0.1, 0.5, 0.9]), vec![5, 3, 2]).unwrap();
        let qs = [below(0.2), below(0.6)];
        let cfg = BlrConfig::new(10, 1e3).unwrap();
        let dist = blr_distribution(&hist, &qs, &cfg).unwrap();
        let best = dist.errors.iter().copied().fold(f64::INFINITY, f64::min);
        let mut rng = RandomSource::new(1, 0).rng();
        for _ in 0..50 {
            assert_eq!(dist.errors[dist.sample(&mut rng)], best);
        }
        assert_eq!(best, 0.0);
    }

    #[test]
    fn cap_overflow_names_the_required_cap() {
        let hist = Histogram::new(reals_universe(&[0.1, 0.5, 0.9, 1.0]), vec![1, 1, 1, 1]).unwrap();
        let cfg = BlrConfig::new(4, 1.0).unwrap().with_cap(10);
        match blr_distribution(&hist, &[below(0.5)], &cfg) {
            Err(Error::Config(msg)) => assert!(msg.contains("35"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn probabilities_follow_the_score() {
        let hist = Histogram::new(reals_universe(&[0.2, 0.8]), vec![3, 1]).unwrap();
        let cfg = BlrConfig::new(2, 2.0).unwrap();
        let dist = blr_distribution(&hist, &[below(0.5)], &cfg).unwrap();
        // candidates (0,2),(1,1),(2,0) give answers 0, 1/2, 1 against truth 3/4
        let w: Vec<f64> = [0.75, 0.25, 0.25]
            .iter()
            .map(|e: &f64| (-2.0 * 4.0 / 2.0 * e).exp())
            .collect();
        let tot: f64 = w.iter().sum();
        for (p, w) in dist.probabilities.iter().zip(&w) {
            assert!((p - w / tot).abs() < 1e-12);
        }
        assert!((dist.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn prefix_release_of_the_constant_query() {
        let rows: Vec<BitString> = (0..20)
            .map(|i| BitString::from_signs(&[if i % 3 == 0 { Sign::Plus } else { Sign::Minus }, Sign::Plus]))
            .collect();
        let x = Dataset::strings(rows);
        let all = PrefixQuery::new([BitString::empty()], None).unwrap();
        let cfg = BlrConfig::new(4, 1.0).unwrap();
        let mut rng = RandomSource::new(2, 0).rng();
        assert_eq!(m_prefix(&x, &[all], &cfg, &mut rng).unwrap(), vec![1.0]);
    }

    #[test]
    fn prefix_release_ignores_prior_reduction() {
        let mut rng = RandomSource::new(3, 0).rng();
        let rows: Vec<BitString> = (0..30)
            .map(|_| {
                let mut s = BitString::empty();
                s.extend((0..5).map(|_| if rng.random_bool(0.5) { Sign::Plus } else { Sign::Minus }));
                s
            })
            .collect();
        let x = Dataset::strings(rows);
        let qs = vec![
            PrefixQuery::new([BitString::parse("+").unwrap(), BitString::parse("-+").unwrap()], None).unwrap(),
            PrefixQuery::new([BitString::parse("--").unwrap()], None).unwrap(),
        ];
        let reduced = restrict_universe(&qs, &x).unwrap().dataset;
        let cfg = BlrConfig::new(4, 1.0).unwrap();
        let a = m_prefix(&x, &qs, &cfg, &mut RandomSource::new(4, 0).rng()).unwrap();
        let b = m_prefix(&reduced, &qs, &cfg, &mut RandomSource::new(4, 0).rng()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn m_prefix_mechanism_is_offline_only() {
        let x = Dataset::strings(vec![BitString::parse("+").unwrap()]);
        let q = Query::Prefix(PrefixQuery::new([BitString::empty()], None).unwrap());
        let mut m = MPrefix::new(BlrConfig::new(2, 1.0).unwrap());
        let mut rng = RandomSource::new(0, 0).rng();
        m.init(&x, &mut rng).unwrap();
        assert!(m.answer(&q, &mut rng).is_err());
        assert_eq!(m.answer_batch(&[q], &mut rng).unwrap(), vec![Answer::Real(1.0)]);
    }
}
