//! Threshold release for adaptively chosen queries: a noisy partition of the
//! sorted data into `M` chunks, one interior-point instance per chunk.

use log::warn;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::thresholds::Oip;
use crate::dataset::Dataset;
use crate::error::{param, protocol, Result};
use crate::laplace::Laplace;
use crate::protocol::{Answer, Mechanism, Symbol};
use crate::queries::Query;
use crate::rng::Rng;

/// `M = 2^⌈log₂(2/α)⌉`, the smallest power of two at least `2/α`.
pub fn chunk_count(alpha: f64) -> Result<usize> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return param(format!("alpha must lie in (0, 1), got {alpha}"));
    }
    let target = 2.0 / alpha;
    let mut m = 1usize;
    while (m as f64) < target {
        m *= 2;
    }
    Ok(m)
}

/// Rows an interior-point instance needs to answer `k` queries with failure
/// probability `β` under `(ε, δ)`-privacy:
/// `⌈36/ε · (ln(k+1) + ln(1/β) + ln(10/ε) + ln(1/δ) + 1)⌉`.
pub fn oip_sample_complexity(epsilon: f64, delta: f64, beta: f64, k: usize) -> usize {
    let s = ((k + 1) as f64).ln() + (1.0 / beta).ln() + (10.0 / epsilon).ln() + (1.0 / delta).ln() + 1.0;
    (36.0 / epsilon * s).ceil() as usize
}

#[derive(Debug, Clone)]
pub struct PartitionResult {
    /// Number of chunks `M`.
    pub m: usize,
    /// `t_0 = 1, …, t_M = n + 1` after monotone clamping (1-based row indices).
    pub boundaries: Vec<usize>,
    /// `⌊mn/M + η_m⌋` before clamping, for `m = 0..=M` (ends fixed at `1` and `n + 1`).
    pub raw_boundaries: Vec<i64>,
    /// `η_1 … η_{M−1}`.
    pub chunk_noise: Vec<f64>,
    /// Chunk `m` holds sorted rows `t_{m−1} … t_m − 1`.
    pub chunks: Vec<Vec<f64>>,
}

impl PartitionResult {
    /// `max_m |t_m − mn/M|` over the unclamped boundaries `1 ≤ m < M`.
    pub fn max_boundary_deviation(&self, n: usize) -> f64 {
        (1..self.m)
            .map(|m| (self.raw_boundaries[m] as f64 - (m * n) as f64 / self.m as f64).abs())
            .fold(0.0, f64::max)
    }
}

/// Sorts `x` and cuts it at noisy quantile boundaries.
///
/// Each `m ∈ [1, M)` is written with `log₂ M` bits; every prefix `s` of that
/// representation (the empty prefix included) owns one noise value
/// `ν_s ~ Lap(log₂M / ε)` and `η_m` sums the values along the path. Raw
/// boundaries that land out of order are clamped into `[t_{m−1}, n + 1]`,
/// which may leave chunks empty.
pub fn partition(x: &Dataset, alpha: f64, epsilon: f64, rng: &mut Rng) -> Result<PartitionResult> {
    let mut sorted = x.as_reals()?.to_vec();
    sorted.sort_by(f64::total_cmp);
    partition_sorted(&sorted, alpha, epsilon, rng)
}

fn partition_sorted(sorted: &[f64], alpha: f64, epsilon: f64, rng: &mut Rng) -> Result<PartitionResult> {
    let m_count = chunk_count(alpha)?;
    if !(epsilon > 0.0) {
        return param(format!("epsilon must be positive, got {epsilon}"));
    }
    let n = sorted.len();
    if n < m_count {
        return param(format!(
            "partition into {m_count} chunks needs at least that many rows, got {n}"
        ));
    }
    let depth = m_count.trailing_zeros() as usize;
    let noise = Laplace::new(depth.max(1) as f64 / epsilon)?;
    let nu: Vec<f64> = (0..2 * m_count - 1).map(|_| noise.sample(rng)).collect();
    let eta = |m: usize| -> f64 { (0..=depth).map(|l| nu[(1 << l) - 1 + (m >> (depth - l))]).sum() };

    let chunk_noise: Vec<f64> = (1..m_count).map(eta).collect();
    let mut raw_boundaries = Vec::with_capacity(m_count + 1);
    raw_boundaries.push(1i64);
    for (i, e) in chunk_noise.iter().enumerate() {
        let m = i + 1;
        raw_boundaries.push(((m * n) as f64 / m_count as f64 + e).floor() as i64);
    }
    raw_boundaries.push(n as i64 + 1);

    let mut boundaries = Vec::with_capacity(m_count + 1);
    boundaries.push(1usize);
    for m in 1..m_count {
        let prev = boundaries[m - 1] as i64;
        boundaries.push(raw_boundaries[m].max(prev).min(n as i64 + 1) as usize);
    }
    boundaries.push(n + 1);

    let chunks = boundaries
        .windows(2)
        .map(|w| sorted[w[0] - 1..w[1] - 1].to_vec())
        .collect();
    Ok(PartitionResult {
        m: m_count,
        boundaries,
        raw_boundaries,
        chunk_noise,
        chunks,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveThresholdsConfig {
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub delta: f64,
    /// Query budget the per-chunk instances are sized for.
    pub k: usize,
    /// Overrides the per-chunk size `n'` computed from the other parameters.
    #[serde(default)]
    pub chunk_size: Option<usize>,
    /// Row appended to chunks shorter than `n'`.
    #[serde(default = "default_pad")]
    pub pad_value: f64,
}

fn default_pad() -> f64 {
    1.0
}

impl AdaptiveThresholdsConfig {
    pub fn new(alpha: f64, beta: f64, epsilon: f64, delta: f64, k: usize) -> Self {
        Self {
            alpha,
            beta,
            epsilon,
            delta,
            k,
            chunk_size: None,
            pad_value: 1.0,
        }
    }

    /// `n'`: enough rows for each interior-point instance to fail with
    /// probability at most `αβ/8`.
    pub fn resolved_chunk_size(&self) -> usize {
        self.chunk_size
            .unwrap_or_else(|| oip_sample_complexity(self.epsilon, self.delta, self.alpha * self.beta / 8.0, self.k))
    }

    fn validate(&self) -> Result<()> {
        chunk_count(self.alpha)?;
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return param(format!("beta must lie in (0, 1), got {}", self.beta));
        }
        if !(self.epsilon > 0.0) || !(self.delta > 0.0 && self.delta < 1.0) {
            return param(format!(
                "need epsilon > 0 and delta in (0, 1), got ({}, {})",
                self.epsilon, self.delta
            ));
        }
        if !(0.0..=1.0).contains(&self.pad_value) {
            return param(format!("pad value {} lies outside [0, 1]", self.pad_value));
        }
        Ok(())
    }
}

/// Answers threshold queries with the fraction of chunk instances saying `R`.
#[derive(Debug, Clone)]
pub struct AdaptiveThresholds {
    cfg: AdaptiveThresholdsConfig,
    partition: Option<PartitionResult>,
    instances: Vec<Oip>,
}

impl AdaptiveThresholds {
    pub fn new(cfg: AdaptiveThresholdsConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            partition: None,
            instances: Vec::new(),
        })
    }

    pub fn partition(&self) -> Option<&PartitionResult> {
        self.partition.as_ref()
    }

    pub fn instances(&self) -> &[Oip] {
        &self.instances
    }

    /// Configuration with every derived quantity filled in.
    pub fn describe(&self) -> Value {
        let m = chunk_count(self.cfg.alpha).unwrap_or(0);
        let depth = m.trailing_zeros().max(1) as f64;
        json!({
            "alpha": self.cfg.alpha,
            "beta": self.cfg.beta,
            "epsilon": self.cfg.epsilon,
            "delta": self.cfg.delta,
            "k": self.cfg.k,
            "chunks": m,
            "chunk_size": self.cfg.resolved_chunk_size(),
            "pad_value": self.cfg.pad_value,
            "partition_noise_scale": depth / self.cfg.epsilon,
        })
    }

    pub fn answer_point(&mut self, y: f64, rng: &mut Rng) -> Result<f64> {
        if self.instances.is_empty() {
            return protocol("AdaptiveThresholds answered before init");
        }
        let mut right = 0usize;
        for inst in &mut self.instances {
            if inst.answer_point(y, rng)? == Symbol::R {
                right += 1;
            }
        }
        Ok(right as f64 / self.instances.len() as f64)
    }
}

/// One query to an initialised [`AdaptiveThresholds`].
pub fn adaptive_thresholds_answer(state: &mut AdaptiveThresholds, y: f64, rng: &mut Rng) -> Result<f64> {
    state.answer_point(y, rng)
}

impl Mechanism for AdaptiveThresholds {
    fn init(&mut self, x: &Dataset, rng: &mut Rng) -> Result<()> {
        let part = partition(x, self.cfg.alpha, self.cfg.epsilon, rng)?;
        let size = self.cfg.resolved_chunk_size();
        let short = part.chunks.iter().filter(|c| c.len() < size).count();
        if short > 0 {
            warn!(
                "{short} of {} chunks have fewer than n' = {size} rows and are padded",
                part.m
            );
        }
        self.instances = part
            .chunks
            .iter()
            .map(|chunk| {
                let mut data: Vec<f64> = chunk.iter().copied().take(size).collect();
                data.resize(size, self.cfg.pad_value);
                data.sort_by(f64::total_cmp);
                let mut inst = Oip::new(self.cfg.epsilon)?;
                inst.init_sorted(data, rng)?;
                Ok(inst)
            })
            .collect::<Result<_>>()?;
        self.partition = Some(part);
        Ok(())
    }

    fn answer(&mut self, q: &Query, rng: &mut Rng) -> Result<Answer> {
        match q {
            Query::Threshold(t) => Ok(Answer::Real(self.answer_point(t.tau, rng)?)),
            other => param(format!(
                "AdaptiveThresholds answers threshold queries, got {}",
                other.kind()
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomSource;
    use proptest::prelude::*;
    use rand::Rng as _;

    #[test]
    fn chunk_counts() {
        assert_eq!(chunk_count(0.2).unwrap(), 16);
        assert_eq!(chunk_count(0.25).unwrap(), 8);
        assert_eq!(chunk_count(0.5).unwrap(), 4);
        assert!(chunk_count(0.0).is_err());
        for a in [0.05, 0.1, 0.3, 0.7] {
            let m = chunk_count(a).unwrap() as f64;
            assert!(2.0 / a <= m && m < 4.0 / a);
        }
    }

    #[test]
    fn sample_complexity_formula() {
        let n = oip_sample_complexity(1.0, 1e-6, 0.05, 1000);
        let s = 1001f64.ln() + 20f64.ln() + 10f64.ln() + 1e6f64.ln() + 1.0;
        assert_eq!(n, (36.0 * s).ceil() as usize);
    }

    #[test]
    fn noiseless_partition_is_even() {
        let mut rng = RandomSource::new(1, 0).rng();
        let n = 1003;
        let x = Dataset::reals((0..n).map(|_| rng.random::<f64>()).collect()).unwrap();
        let p = partition(&x, 0.25, 1e9, &mut rng).unwrap();
        for m in 0..p.m {
            let expect = if m == 0 { 1 } else { m * n / p.m };
            assert_eq!(p.boundaries[m], expect);
        }
        assert_eq!(p.boundaries[p.m], n + 1);
    }

    #[test]
    fn too_few_rows() {
        let mut rng = RandomSource::new(1, 0).rng();
        let x = Dataset::reals(vec![0.5; 7]).unwrap();
        assert!(partition(&x, 0.25, 1.0, &mut rng).is_err());
    }

    proptest! {
        #[test]
        fn partition_invariants(seed in any::<u64>(), n in 8usize..400, eps in 0.05f64..3.0) {
            let mut rng = RandomSource::new(seed, 0).rng();
            let rows: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let x = Dataset::reals(rows.clone()).unwrap();
            let p = partition(&x, 0.25, eps, &mut RandomSource::new(seed, 1).rng()).unwrap();
            prop_assert!(p.boundaries.windows(2).all(|w| w[0] <= w[1]));
            prop_assert_eq!(p.boundaries[0], 1);
            prop_assert_eq!(*p.boundaries.last().unwrap(), n + 1);
            prop_assert_eq!(p.chunks.iter().map(Vec::len).sum::<usize>(), n);
            let mut sorted = rows.clone();
            sorted.sort_by(f64::total_cmp);
            prop_assert_eq!(p.chunks.concat(), sorted);

            // permuting the input changes nothing
            let mut shuffled = rows;
            shuffled.reverse();
            let q = partition(&Dataset::reals(shuffled).unwrap(), 0.25, eps, &mut RandomSource::new(seed, 1).rng()).unwrap();
            prop_assert_eq!(q.boundaries, p.boundaries);
        }
    }

    fn small_cfg() -> AdaptiveThresholdsConfig {
        let mut cfg = AdaptiveThresholdsConfig::new(0.25, 0.1, 1.0, 1e-6, 100);
        cfg.chunk_size = Some(200);
        cfg
    }

    #[test]
    fn extreme_points() {
        let mut rng = RandomSource::new(2, 0).rng();
        let x = Dataset::reals((0..2000).map(|_| 0.05 + 0.9 * rng.random::<f64>()).collect()).unwrap();
        let mut at = AdaptiveThresholds::new(small_cfg()).unwrap();
        at.init(&x, &mut rng).unwrap();
        assert_eq!(at.answer_point(1.0, &mut rng).unwrap(), 1.0);
        assert_eq!(at.answer_point(0.0, &mut rng).unwrap(), 0.0);
        for _ in 0..50 {
            let a = at.answer_point(rng.random::<f64>(), &mut rng).unwrap();
            let scaled = a * at.instances().len() as f64;
            assert_eq!(scaled, scaled.round());
        }
        assert_eq!(at.describe()["chunks"], 8);
    }

    #[test]
    fn rejects_non_threshold_queries() {
        use crate::queries::StatisticalQuery;
        let mut rng = RandomSource::new(3, 0).rng();
        let x = Dataset::reals(vec![0.5; 100]).unwrap();
        let mut at = AdaptiveThresholds::new(small_cfg()).unwrap();
        assert!(at.answer_point(0.5, &mut rng).is_err());
        at.init(&x, &mut rng).unwrap();
        let q = Query::Statistical(StatisticalQuery::new("t", |_| true));
        assert!(at.answer(&q, &mut rng).is_err());
    }
}
