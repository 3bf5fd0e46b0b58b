//! Majority-vote reconstruction from adaptively chosen correlated-vector queries.
//!
//! Query `j` forbids correlation with every earlier answer, so an accurate
//! mechanism must keep producing fresh vectors correlated with `x`, and their
//! coordinate-wise majority converges to `x`.

use std::sync::Arc;

use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::{param, protocol, Result};
use crate::protocol::{run_adaptive, AdaptiveAdversary, Answer, Mechanism, Transcript};
use crate::queries::{CorrelatedVectorQuery, Query};
use crate::rng::{RandomSource, Rng};
use crate::signs::SignVector;

/// `⌈100/α²⌉` rounds.
pub fn default_rounds(alpha: f64) -> usize {
    (100.0 / (alpha * alpha)).ceil() as usize
}

/// Lower bound on `⟨x̃, x⟩ / n` when every `⟨y^j, x⟩ ≥ an` and every
/// `|⟨y^j, y^{j'}⟩| ≤ bn`: `1 − 2/(a²k) − 2(b − a²)/a²`.
pub fn majority_overlap_bound(a: f64, b: f64, k: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
        return param(format!("a and b must lie in [0, 1], got ({a}, {b})"));
    }
    if a == 0.0 {
        return param("the overlap bound is undefined at a = 0");
    }
    if k == 0 {
        return param("the overlap bound needs k >= 1");
    }
    let a2 = a * a;
    Ok(1.0 - 2.0 / (a2 * k as f64) - 2.0 * (b - a2) / a2)
}

/// Asks `q_{V_j}` with `V_j` = all earlier answers.
#[derive(Debug, Clone)]
pub struct ReconstructionAdversary {
    alpha: f64,
    n: usize,
    tolerance: Option<f64>,
}

impl ReconstructionAdversary {
    pub fn new(alpha: f64, n: usize) -> Result<Self> {
        CorrelatedVectorQuery::new(Vec::new(), alpha, n)?;
        Ok(Self {
            alpha,
            n,
            tolerance: None,
        })
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = Some(tolerance);
        self
    }
}

impl AdaptiveAdversary for ReconstructionAdversary {
    fn next_query(&mut self, history: &[(Query, Answer)], _rng: &mut Rng) -> Result<Option<Query>> {
        let prior = history
            .iter()
            .map(|(_, a)| a.as_vector().cloned())
            .collect::<Result<Vec<_>>>()?;
        let mut q = CorrelatedVectorQuery::new(prior, self.alpha, self.n)?;
        if let Some(t) = self.tolerance {
            q = q.with_tolerance(t)?;
        }
        Ok(Some(Query::Corr(q)))
    }
}

/// Whether a set of answers satisfies the reconstruction lemma's hypotheses
/// for a given `(a, b)`, and what the lemma then promises.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub a: f64,
    pub b: f64,
    pub holds: bool,
    /// `majority_overlap_bound(a, b, k)` when the hypotheses hold.
    pub bound: Option<f64>,
    /// Whether `⟨x̃, x⟩ ≥ bound · n`; `None` when the hypotheses fail.
    pub conclusion_holds: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct ReconstructionRun {
    pub alpha: f64,
    pub answers: Vec<Arc<SignVector>>,
    /// `x̃ = sign(Σ_j y^j)` with ties to `+1`.
    pub reconstruction: SignVector,
    /// `⟨x̃, x⟩`.
    pub overlap: i64,
    /// The tightest hypotheses the answers satisfy:
    /// `a = min_j ⟨y^j, x⟩/n`, `b = max_{j<j'} |⟨y^j, y^{j'}⟩|/n`.
    pub empirical: HypothesisCheck,
    /// The fixed hypotheses `a = 0.99α`, `b = 1.02α²`.
    pub nominal: HypothesisCheck,
}

fn check(a: f64, b: f64, holds: bool, k: usize, overlap: i64, n: usize) -> HypothesisCheck {
    let bound = if holds {
        majority_overlap_bound(a, b, k).ok()
    } else {
        None
    };
    HypothesisCheck {
        a,
        b,
        holds: holds && bound.is_some(),
        bound,
        conclusion_holds: bound.map(|c| overlap as f64 >= c * n as f64 - 1e-9),
    }
}

/// Reconstructs `x` from the answers and checks the lemma on them.
pub fn analyze_reconstruction(x: &SignVector, answers: &[Arc<SignVector>], alpha: f64) -> Result<ReconstructionRun> {
    let n = x.len();
    if n == 0 {
        return param("cannot reconstruct an empty dataset");
    }
    let refs: Vec<&SignVector> = answers.iter().map(|a| a.as_ref()).collect();
    let reconstruction = SignVector::majority(&refs)?;
    let overlap = reconstruction.inner(x);
    let k = answers.len();

    let with_x: Vec<i64> = answers.iter().map(|y| y.inner(x)).collect();
    let mut max_pair = 0i64;
    for (j, yj) in answers.iter().enumerate() {
        for yk in &answers[j + 1..] {
            max_pair = max_pair.max(yj.inner(yk).abs());
        }
    }
    let min_x = with_x.iter().copied().min().unwrap_or(0);
    let nf = n as f64;

    let (ea, eb) = (min_x as f64 / nf, max_pair as f64 / nf);
    let empirical = check(ea.max(0.0), eb, ea > 0.0, k, overlap, n);
    let (na, nb) = (0.99 * alpha, 1.02 * alpha * alpha);
    let nominal_holds = with_x.iter().all(|&v| v as f64 >= na * nf) && max_pair as f64 <= nb * nf;
    let nominal = check(na, nb.min(1.0), nominal_holds, k, overlap, n);
    Ok(ReconstructionRun {
        alpha,
        answers: answers.to_vec(),
        reconstruction,
        overlap,
        empirical,
        nominal,
    })
}

/// Runs the adaptive attack for `k` rounds and analyses the collected answers.
pub fn reconstruction_adversary<M: Mechanism + ?Sized>(
    mech: &mut M,
    x: &Dataset,
    alpha: f64,
    k: usize,
    src: &RandomSource,
) -> Result<(ReconstructionRun, Transcript)> {
    let xs = x.as_signs()?;
    let mut adv = ReconstructionAdversary::new(alpha, xs.len())?;
    let t = run_adaptive(mech, &mut adv, x, k, src)?;
    let answers = t
        .answers()
        .map(|a| match a {
            Answer::Vector(v) => Ok(Arc::clone(v)),
            other => protocol(format!("reconstruction needs sign-vector answers, got {other:?}")),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((analyze_reconstruction(xs, &answers, alpha)?, t))
}
