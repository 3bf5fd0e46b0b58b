//! The fingerprinting attack on online prefix queries.
//!
//! Row `i` of the dataset is `binary(i)` followed by one secret bit per
//! query. Query `j` asks, for every row `i`, whether the row continues
//! `binary(i), c_i^1, …, c_i^{j−1}` with `+1`, so its true answer is the
//! fraction of rows whose `j`-th secret bit is `+1`. The queries can be issued
//! online, but each depends on the secret bits of all earlier columns, so an
//! online mechanism cannot answer them without leaking those bits.

use rand::Rng as _;

use crate::dataset::Dataset;
use crate::error::{param, protocol, Result};
use crate::protocol::{Answer, CommittedAdversary};
use crate::queries::{BitString, PrefixQuery, Query};
use crate::rng::Rng;
use crate::signs::{Sign, SignVector};

#[derive(Debug, Clone)]
pub struct FingerprintInstance {
    pub n: usize,
    pub k: usize,
    /// Column biases `p^j`, uniform on `[−1, 1]`.
    pub p: Vec<f64>,
    /// Columns `c^j`: `n` independent signs with mean `p^j`.
    pub c: Vec<SignVector>,
    pub x: Dataset,
    pub queries: Vec<PrefixQuery>,
    /// Length `⌈log₂ n⌉` of the row identifier.
    pub id_bits: usize,
}

impl FingerprintInstance {
    /// `c̄^j`, the mean of column `j`.
    pub fn column_mean(&self, j: usize) -> f64 {
        self.c[j].sum() as f64 / self.n as f64
    }
}

/// Number of bits in a row identifier.
pub fn id_bits(n: usize) -> usize {
    (usize::BITS - (n - 1).leading_zeros()) as usize
}

/// `binary(i)` for the 0-based row index `i`, most significant bit first,
/// bit 1 written as `+1` and bit 0 as `−1`.
pub fn binary_id(i: usize, bits: usize) -> BitString {
    let signs: Vec<Sign> = (0..bits)
        .rev()
        .map(|b| if i >> b & 1 == 1 { Sign::Plus } else { Sign::Minus })
        .collect();
    BitString::from_signs(&signs)
}

pub fn gen_fingerprint_instance(n: usize, k: usize, rng: &mut Rng) -> Result<FingerprintInstance> {
    if n < 2 || k < 1 {
        return param(format!(
            "fingerprint instance needs n >= 2 and k >= 1, got n = {n}, k = {k}"
        ));
    }
    let bits = id_bits(n);
    let p: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let c: Vec<SignVector> = p.iter().map(|&pj| SignVector::random_with_mean(n, pj, rng)).collect();

    let mut rows = Vec::with_capacity(n);
    let mut sets: Vec<Vec<BitString>> = vec![Vec::with_capacity(n); k];
    for i in 0..n {
        let mut row = binary_id(i, bits);
        for (j, col) in c.iter().enumerate() {
            // z_{i,j}: the row so far, then +1
            let mut z = row.clone();
            z.push(Sign::Plus);
            sets[j].push(z);
            row.push(col.get(i));
        }
        rows.push(row);
    }
    let queries = sets
        .into_iter()
        .map(|s| PrefixQuery::new(s, Some(n)))
        .collect::<Result<_>>()?;
    Ok(FingerprintInstance {
        n,
        k,
        p,
        c,
        x: Dataset::strings(rows),
        queries,
        id_bits: bits,
    })
}

/// The per-row correlation scores `Z_i = Σ_j a^j (c_i^j − p^j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintStatistic {
    /// `Z_{i*}`.
    pub z: f64,
    /// `Z_i` for every row.
    pub per_row: Vec<f64>,
    pub argmax: usize,
    /// `Σ_i Z_i = Σ_j a^j Σ_i (c_i^j − p^j)`.
    pub total: f64,
}

/// Scores rows against answers `a^j ∈ [−1, 1]`; `i_star` is a 0-based row index.
pub fn fingerprint_statistic(
    answers: &[f64],
    inst: &FingerprintInstance,
    i_star: usize,
) -> Result<FingerprintStatistic> {
    if answers.len() != inst.k {
        return param(format!("{} answers for {} queries", answers.len(), inst.k));
    }
    if i_star >= inst.n {
        return param(format!("row {i_star} out of range for n = {}", inst.n));
    }
    let per_row: Vec<f64> = (0..inst.n)
        .map(|i| {
            answers
                .iter()
                .zip(&inst.c)
                .zip(&inst.p)
                .map(|((a, c), p)| a * (c.get(i).value() as f64 - p))
                .sum()
        })
        .collect();
    let argmax = per_row
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map_or(0, |(i, _)| i);
    Ok(FingerprintStatistic {
        z: per_row[i_star],
        total: per_row.iter().sum(),
        per_row,
        argmax,
    })
}

/// Maps a prefix-query answer in `[0, 1]` (fraction of rows with bit `+1`) to
/// the `±1` scale `2a − 1` on which it estimates a column mean.
pub fn to_sign_scale(a: f64) -> f64 {
    2.0 * a - 1.0
}

/// Commits the instance's queries and records the real answers.
#[derive(Debug, Clone)]
pub struct FingerprintAdversary {
    pub instance: FingerprintInstance,
    answers: Vec<f64>,
    bad_answer: bool,
}

impl FingerprintAdversary {
    pub fn new(instance: FingerprintInstance) -> Self {
        Self {
            instance,
            answers: Vec::new(),
            bad_answer: false,
        }
    }

    /// Answers received so far, on the `±1` scale.
    pub fn sign_scale_answers(&self) -> Vec<f64> {
        self.answers.iter().map(|&a| to_sign_scale(a)).collect()
    }

    /// The score vector once all `k` answers have arrived.
    pub fn statistic(&self, i_star: usize) -> Result<FingerprintStatistic> {
        if self.bad_answer {
            return protocol("fingerprinting adversary received a non-real answer");
        }
        fingerprint_statistic(&self.sign_scale_answers(), &self.instance, i_star)
    }
}

impl CommittedAdversary for FingerprintAdversary {
    fn commit(&mut self, k: usize, _rng: &mut Rng) -> Result<Vec<Query>> {
        if k != self.instance.k {
            return param(format!("instance has {} queries, budget is {k}", self.instance.k));
        }
        Ok(self.instance.queries.iter().cloned().map(Query::Prefix).collect())
    }

    fn observe(&mut self, _q: &Query, a: &Answer) {
        match a {
            Answer::Real(v) => self.answers.push(*v),
            _ => self.bad_answer = true,
        }
    }
}
