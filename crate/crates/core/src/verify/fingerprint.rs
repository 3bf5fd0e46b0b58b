//! Monte Carlo estimates of the fingerprinting inequalities.
//!
//! With `p` uniform on `[−1, 1]` and `c ∈ {±1}^n` drawn with `E[c_i] = p`,
//! every `f : {±1}^n → [−1, 1]` satisfies
//!
//! * `E[f(c)·Σ(c_i − p) + 2|f(c) − c̄|] ≥ 1/3`,
//! * `E[f(c)·Σ(c_i − p) + (f(c) − c̄)²] ≥ 1/3`,
//! * `E[f(c)·Σ(c_i − p) + (f(c) − p)²] ≥ 1/3`.
//!
//! The default [`Estimator::Conditional`] replaces each `p`-dependent term by
//! its posterior mean given `c`. Under the uniform prior, `s` plus-entries give
//! `(1 + p)/2 | c ~ Beta(s + 1, n − s + 1)`, so the correlation summand shrinks
//! from `O(n)` to at most 2 in magnitude while its expectation is unchanged.

use std::fmt;
use std::sync::Arc;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::rng::{RandomSource, Role};
use crate::signs::{Sign, SignVector};
use crate::stats::{hoeffding_half_width, RangeSum};

/// Failure probability of every Monte Carlo interval reported here.
pub const MC_FAIL: f64 = 0.01;

/// The lower bound all three inequalities share.
pub const LEMMA_BOUND: f64 = 1.0 / 3.0;

const BLOCK: u64 = 4096;

type Func = Arc<dyn Fn(&SignVector) -> f64 + Send + Sync>;

/// A named test function; outputs are clamped to `[−1, 1]`.
#[derive(Clone)]
pub struct TestFunction {
    pub name: String,
    f: Func,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TestFunction({})", self.name)
    }
}

fn mean_of(c: &SignVector) -> f64 {
    c.sum() as f64 / c.len() as f64
}

impl TestFunction {
    pub fn new(name: impl Into<String>, f: impl Fn(&SignVector) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn eval(&self, c: &SignVector) -> f64 {
        (self.f)(c).clamp(-1.0, 1.0)
    }

    /// The names accepted by [`TestFunction::by_name`].
    pub const NAMES: [&'static str; 10] = [
        "mean",
        "zero",
        "one",
        "minus-one",
        "first",
        "majority",
        "scaled-mean",
        "half-mean",
        "prefix-mean",
        "anti-mean",
    ];

    pub fn by_name(name: &str) -> Result<Self> {
        let f = match name {
            "mean" => Self::new(name, mean_of),
            "zero" => Self::new(name, |_| 0.0),
            "one" => Self::new(name, |_| 1.0),
            "minus-one" => Self::new(name, |_| -1.0),
            "first" => Self::new(name, |c| c.get(0).value() as f64),
            "majority" => Self::new(name, |c| if c.sum() >= 0 { 1.0 } else { -1.0 }),
            "scaled-mean" => Self::new(name, |c| 3.0 * mean_of(c)),
            "half-mean" => Self::new(name, |c| 0.5 * mean_of(c)),
            "prefix-mean" => Self::new(name, |c| {
                let m = c.len().min(8);
                (0..m).map(|i| c.get(i).value()).sum::<i64>() as f64 / m as f64
            }),
            "anti-mean" => Self::new(name, |c| -mean_of(c)),
            _ => {
                return param(format!(
                    "unknown test function {name:?}; expected one of {}",
                    Self::NAMES.join(", ")
                ))
            }
        };
        Ok(f)
    }

    /// Every built-in function.
    pub fn family() -> Vec<Self> {
        Self::NAMES
            .iter()
            .map(|n| Self::by_name(n).expect("built-in name"))
            .collect()
    }
}

/// How the `p`-dependent terms are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// Plug in the sampled `p`.
    Direct,
    /// Use `E[· | c]` under the Beta posterior (same mean, far smaller range).
    #[default]
    Conditional,
}

/// Which error term is added to the correlation term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorTerm {
    /// `2|f(c) − c̄|`
    Absolute,
    /// `(f(c) − c̄)²`
    EmpiricalSquared,
    /// `(f(c) − p)²`
    BiasSquared,
}

/// A Monte Carlo mean with a Hoeffding interval at failure probability 0.01,
/// scaled by the realized range of the summands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub half_width: f64,
    pub trials: u64,
    pub range: f64,
}

impl McEstimate {
    fn from_sum(s: &RangeSum) -> Self {
        Self {
            mean: s.mean(),
            half_width: hoeffding_half_width(s.range(), s.count, MC_FAIL),
            trials: s.count,
            range: s.range(),
        }
    }

    /// Whether the interval reaches `bound` from above.
    pub fn consistent_with_lower_bound(&self, bound: f64) -> bool {
        self.mean + self.half_width >= bound
    }

    pub fn contains(&self, value: f64) -> bool {
        (self.mean - value).abs() <= self.half_width
    }
}

/// `(E[p | c], E[p² | c])` for `s` plus-entries among `n`.
pub fn posterior_moments(s: usize, n: usize) -> (f64, f64) {
    let (s, n) = (s as f64, n as f64);
    let u1 = (s + 1.0) / (n + 2.0);
    let u2 = (s + 1.0) * (s + 2.0) / ((n + 2.0) * (n + 3.0));
    (2.0 * u1 - 1.0, 4.0 * u2 - 4.0 * u1 + 1.0)
}

/// One summand of the chosen inequality.
pub fn summand(f: &TestFunction, c: &SignVector, p: f64, term: ErrorTerm, est: Estimator) -> f64 {
    let n = c.len() as f64;
    let sum = c.sum() as f64;
    let fc = f.eval(c);
    let cbar = sum / n;
    let (m1, m2) = match est {
        Estimator::Direct => (p, p * p),
        Estimator::Conditional => posterior_moments(c.count_plus(), c.len()),
    };
    let corr = fc * (sum - n * m1);
    let err = match term {
        ErrorTerm::Absolute => 2.0 * (fc - cbar).abs(),
        ErrorTerm::EmpiricalSquared => (fc - cbar).powi(2),
        ErrorTerm::BiasSquared => fc * fc - 2.0 * fc * m1 + m2,
    };
    corr + err
}

/// Monte Carlo estimate of `E[f(c)·Σ(c_i − p) + term]`.
///
/// Trials run in fixed blocks with their own streams, so the result depends
/// only on `seed`, never on the thread count.
pub fn lemma_mc(
    f: &TestFunction,
    n: usize,
    trials: u64,
    term: ErrorTerm,
    est: Estimator,
    seed: u64,
) -> Result<McEstimate> {
    if n == 0 {
        return param("dimension n must be positive");
    }
    if trials < 1000 {
        return param(format!("need at least 1000 trials, got {trials}"));
    }
    let blocks = trials.div_ceil(BLOCK);
    let total = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = RandomSource::trial(seed, b).role(Role::Instance).rng();
            let todo = BLOCK.min(trials - b * BLOCK);
            let mut acc = RangeSum::default();
            for _ in 0..todo {
                let p: f64 = rng.random_range(-1.0..=1.0);
                let c = SignVector::random_with_mean(n, p, &mut rng);
                acc.push(summand(f, &c, p, term, est));
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(RangeSum::default(), RangeSum::merge);
    Ok(McEstimate::from_sum(&total))
}

/// `E[f(c)·Σ(c_i − p) + 2|f(c) − c̄|]`.
pub fn fingerprint_lemma_mc(f: &TestFunction, n: usize, trials: u64, est: Estimator, seed: u64) -> Result<McEstimate> {
    lemma_mc(f, n, trials, ErrorTerm::Absolute, est, seed)
}

/// Squared-error variants: `(f − c̄)²` when `bias` is false, `(f − p)²` when true.
pub fn corr_err2_mc(
    f: &TestFunction,
    n: usize,
    trials: u64,
    bias: bool,
    est: Estimator,
    seed: u64,
) -> Result<McEstimate> {
    let term = if bias {
        ErrorTerm::BiasSquared
    } else {
        ErrorTerm::EmpiricalSquared
    };
    lemma_mc(f, n, trials, term, est, seed)
}

/// Convenience used by a few tests: the sign of coordinate `i`.
pub fn coordinate(i: usize) -> TestFunction {
    TestFunction::new(format!("coord-{i}"), move |c: &SignVector| match c.get(i) {
        Sign::Plus => 1.0,
        Sign::Minus => -1.0,
    })
}
