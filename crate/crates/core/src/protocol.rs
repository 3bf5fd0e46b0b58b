//! The three interaction models between a mechanism and an adversary.
//!
//! * [`run_offline`]: the adversary commits all `k` queries; the mechanism sees
//!   them together and answers in one batch.
//! * [`run_online`]: the adversary commits all `k` queries; the mechanism
//!   answers them one at a time, without seeing later queries.
//! * [`run_adaptive`]: the adversary picks each query after reading every
//!   earlier answer.
//!
//! The offline and online engines only accept a [`CommittedAdversary`], whose
//! single [`commit`](CommittedAdversary::commit) call happens before any
//! answer exists, so an adversary that needs answers to form queries cannot be
//! run in those models at all.

use std::collections::VecDeque;
use std::fmt;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dataset::Dataset;
use crate::error::{param, protocol, Result};
use crate::queries::{eval_statistical, CorrelationCache, Query};
use crate::rng::{RandomSource, Rng, Role};
use crate::signs::SignVector;

/// Symbolic answers of BetweenThresholds and interior-point mechanisms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Symbol {
    L,
    R,
    #[serde(rename = "⊤")]
    Top,
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Symbol::L => "L",
            Symbol::R => "R",
            Symbol::Top => "⊤",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Answer {
    Real(f64),
    Vector(Arc<SignVector>),
    Symbol(Symbol),
}

impl Answer {
    pub fn as_real(&self) -> Result<f64> {
        match self {
            Answer::Real(v) => Ok(*v),
            other => protocol(format!("expected a real answer, got {}", other.kind())),
        }
    }

    pub fn as_vector(&self) -> Result<&Arc<SignVector>> {
        match self {
            Answer::Vector(v) => Ok(v),
            other => protocol(format!("expected a sign-vector answer, got {}", other.kind())),
        }
    }

    pub fn as_symbol(&self) -> Result<Symbol> {
        match self {
            Answer::Symbol(s) => Ok(*s),
            other => protocol(format!("expected a symbol answer, got {}", other.kind())),
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Answer::Real(_) => "real",
            Answer::Vector(_) => "sign vector",
            Answer::Symbol(_) => "symbol",
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Answer::Real(v) => json!(v),
            Answer::Vector(v) => json!(v.to_pm_string()),
            Answer::Symbol(s) => json!(s.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Offline,
    #[serde(alias = "online")]
    OnlineNonAdaptive,
    #[serde(alias = "adaptive")]
    OnlineAdaptive,
}

/// The record of one interaction.
#[derive(Debug, Clone)]
pub struct Transcript {
    pub model: Model,
    pub pairs: Vec<(Query, Answer)>,
    /// Set only when the mechanism halted; the halting answer is the last pair.
    pub halted_early: bool,
}

impl Transcript {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn answers(&self) -> impl Iterator<Item = &Answer> {
        self.pairs.iter().map(|(_, a)| a)
    }

    pub fn real_answers(&self) -> Result<Vec<f64>> {
        self.answers().map(Answer::as_real).collect()
    }

    pub fn symbols(&self) -> Result<Vec<Symbol>> {
        self.answers().map(Answer::as_symbol).collect()
    }

    /// Per-pair losses against the true dataset, see [`max_loss`].
    pub fn losses(&self, x: &Dataset) -> Result<Vec<f64>> {
        let mut cache = CorrelationCache::default();
        self.pairs.iter().map(|(q, a)| pair_loss(q, a, x, &mut cache)).collect()
    }

    /// Writes one JSON object per pair, each carrying its loss on `x` when given.
    pub fn write_jsonl<W: Write>(&self, x: Option<&Dataset>, out: W) -> Result<()> {
        let losses = x.map(|x| self.losses(x)).transpose()?;
        self.write_jsonl_with_losses(losses.as_deref(), out)
    }

    /// As [`Transcript::write_jsonl`], with losses scored by the caller.
    pub fn write_jsonl_with_losses<W: Write>(&self, losses: Option<&[f64]>, mut out: W) -> Result<()> {
        if losses.is_some_and(|l| l.len() != self.pairs.len()) {
            return param("one loss per pair expected");
        }
        for (j, (q, a)) in self.pairs.iter().enumerate() {
            let mut line = json!({
                "index": j,
                "model": self.model,
                "query": query_to_json(q),
                "answer": a.to_json(),
            });
            if let Some(l) = &losses {
                line["loss"] = json!(l[j]);
            }
            if self.halted_early && j + 1 == self.pairs.len() {
                line["halt"] = json!(true);
            }
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// A compact JSON description of a query (constraint vectors are counted, not listed).
pub fn query_to_json(q: &Query) -> Value {
    match q {
        Query::Statistical(s) => json!({"kind": "statistical", "description": s.description}),
        Query::Prefix(p) => json!({
            "kind": "prefix",
            "strings": p.strings().iter().map(|s| s.to_string()).collect::<Vec<_>>(),
        }),
        Query::Threshold(t) => json!({"kind": "threshold", "tau": t.tau}),
        Query::Corr(c) => json!({
            "kind": "corr",
            "alpha": c.alpha(),
            "tolerance": c.tolerance(),
            "constraints": c.constraints().len(),
        }),
    }
}

/// A mechanism: a stateful party holding the dataset.
pub trait Mechanism {
    /// Called once by the engine before any query.
    fn init(&mut self, x: &Dataset, rng: &mut Rng) -> Result<()>;

    fn answer(&mut self, q: &Query, rng: &mut Rng) -> Result<Answer>;

    /// Answers a batch of queries known in advance. The default answers them in
    /// order and stops after a halting answer.
    fn answer_batch(&mut self, qs: &[Query], rng: &mut Rng) -> Result<Vec<Answer>> {
        let mut out = Vec::with_capacity(qs.len());
        for q in qs {
            out.push(self.answer(q, rng)?);
            if self.halted() {
                break;
            }
        }
        Ok(out)
    }

    fn halted(&self) -> bool {
        false
    }
}

impl<M: Mechanism + ?Sized> Mechanism for Box<M> {
    fn init(&mut self, x: &Dataset, rng: &mut Rng) -> Result<()> {
        (**self).init(x, rng)
    }
    fn answer(&mut self, q: &Query, rng: &mut Rng) -> Result<Answer> {
        (**self).answer(q, rng)
    }
    fn answer_batch(&mut self, qs: &[Query], rng: &mut Rng) -> Result<Vec<Answer>> {
        (**self).answer_batch(qs, rng)
    }
    fn halted(&self) -> bool {
        (**self).halted()
    }
}

/// An adversary that fixes its whole query list before seeing any answer.
pub trait CommittedAdversary {
    /// Returns exactly `k` queries.
    fn commit(&mut self, k: usize, rng: &mut Rng) -> Result<Vec<Query>>;

    /// Receives each answer after it is produced (for bookkeeping only: the
    /// queries are already fixed).
    fn observe(&mut self, _q: &Query, _a: &Answer) {}
}

/// An adversary that may choose each query based on all earlier answers.
pub trait AdaptiveAdversary {
    /// Called once before the first query with the engine's budget.
    fn begin(&mut self, _k: usize, _rng: &mut Rng) -> Result<()> {
        Ok(())
    }

    /// The next query, or `None` to stop before the budget is used up.
    fn next_query(&mut self, history: &[(Query, Answer)], rng: &mut Rng) -> Result<Option<Query>>;

    /// Called if the mechanism halts.
    fn on_halt(&mut self, _history: &[(Query, Answer)]) {}
}

impl<A: CommittedAdversary + ?Sized> CommittedAdversary for Box<A> {
    fn commit(&mut self, k: usize, rng: &mut Rng) -> Result<Vec<Query>> {
        (**self).commit(k, rng)
    }
    fn observe(&mut self, q: &Query, a: &Answer) {
        (**self).observe(q, a)
    }
}

impl<A: AdaptiveAdversary + ?Sized> AdaptiveAdversary for Box<A> {
    fn begin(&mut self, k: usize, rng: &mut Rng) -> Result<()> {
        (**self).begin(k, rng)
    }
    fn next_query(&mut self, history: &[(Query, Answer)], rng: &mut Rng) -> Result<Option<Query>> {
        (**self).next_query(history, rng)
    }
    fn on_halt(&mut self, history: &[(Query, Answer)]) {
        (**self).on_halt(history)
    }
}

/// Runs a committed adversary in the adaptive model: it commits at
/// [`begin`](AdaptiveAdversary::begin) and then replays its list.
pub struct Committed<A> {
    pub inner: A,
    queue: VecDeque<Query>,
}

impl<A> Committed<A> {
    pub fn new(inner: A) -> Self {
        Self {
            inner,
            queue: VecDeque::new(),
        }
    }
}

impl<A: CommittedAdversary> AdaptiveAdversary for Committed<A> {
    fn begin(&mut self, k: usize, rng: &mut Rng) -> Result<()> {
        self.queue = checked_commit(&mut self.inner, k, rng)?.into();
        Ok(())
    }

    fn next_query(&mut self, history: &[(Query, Answer)], _rng: &mut Rng) -> Result<Option<Query>> {
        if let Some((q, a)) = history.last() {
            self.inner.observe(q, a);
        }
        Ok(self.queue.pop_front())
    }
}

/// A fixed list of queries, committed verbatim.
#[derive(Debug, Clone, Default)]
pub struct QueryScript {
    pub queries: Vec<Query>,
}

impl QueryScript {
    pub fn new(queries: Vec<Query>) -> Self {
        Self { queries }
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }
}

impl CommittedAdversary for QueryScript {
    fn commit(&mut self, k: usize, _rng: &mut Rng) -> Result<Vec<Query>> {
        if k > self.queries.len() {
            return protocol(format!("script holds {} queries, budget is {k}", self.queries.len()));
        }
        Ok(self.queries[..k].to_vec())
    }
}

fn checked_commit<A: CommittedAdversary + ?Sized>(adv: &mut A, k: usize, rng: &mut Rng) -> Result<Vec<Query>> {
    let qs = adv.commit(k, rng)?;
    if qs.len() != k {
        return protocol(format!("adversary committed {} queries, budget is {k}", qs.len()));
    }
    Ok(qs)
}

struct Streams {
    mech: Rng,
    adv: Rng,
}

impl Streams {
    fn new(src: &RandomSource) -> Self {
        Self {
            mech: src.role(Role::Mechanism).rng(),
            adv: src.role(Role::Adversary).rng(),
        }
    }
}

pub fn run_offline<M, A>(mech: &mut M, adv: &mut A, x: &Dataset, k: usize, src: &RandomSource) -> Result<Transcript>
where
    M: Mechanism + ?Sized,
    A: CommittedAdversary + ?Sized,
{
    let mut s = Streams::new(src);
    let qs = checked_commit(adv, k, &mut s.adv)?;
    mech.init(x, &mut s.mech)?;
    let answers = mech.answer_batch(&qs, &mut s.mech)?;
    let halted = mech.halted();
    if answers.len() > k || (answers.len() < k && !halted) {
        return protocol(format!("mechanism returned {} answers to {k} queries", answers.len()));
    }
    let pairs: Vec<(Query, Answer)> = qs.into_iter().zip(answers).collect();
    for (q, a) in &pairs {
        adv.observe(q, a);
    }
    Ok(Transcript {
        model: Model::Offline,
        pairs,
        halted_early: halted,
    })
}

pub fn run_online<M, A>(mech: &mut M, adv: &mut A, x: &Dataset, k: usize, src: &RandomSource) -> Result<Transcript>
where
    M: Mechanism + ?Sized,
    A: CommittedAdversary + ?Sized,
{
    let mut s = Streams::new(src);
    let qs = checked_commit(adv, k, &mut s.adv)?;
    mech.init(x, &mut s.mech)?;
    let mut pairs = Vec::with_capacity(k);
    let mut halted = false;
    for q in qs {
        let a = mech.answer(&q, &mut s.mech)?;
        adv.observe(&q, &a);
        pairs.push((q, a));
        if mech.halted() {
            halted = true;
            break;
        }
    }
    Ok(Transcript {
        model: Model::OnlineNonAdaptive,
        pairs,
        halted_early: halted,
    })
}

pub fn run_adaptive<M, A>(mech: &mut M, adv: &mut A, x: &Dataset, k: usize, src: &RandomSource) -> Result<Transcript>
where
    M: Mechanism + ?Sized,
    A: AdaptiveAdversary + ?Sized,
{
    let mut s = Streams::new(src);
    adv.begin(k, &mut s.adv)?;
    mech.init(x, &mut s.mech)?;
    let mut pairs: Vec<(Query, Answer)> = Vec::with_capacity(k);
    let mut halted = false;
    while pairs.len() < k {
        let Some(q) = adv.next_query(&pairs, &mut s.adv)? else {
            break;
        };
        let a = mech.answer(&q, &mut s.mech)?;
        pairs.push((q, a));
        if mech.halted() {
            halted = true;
            adv.on_halt(&pairs);
            break;
        }
    }
    Ok(Transcript {
        model: Model::OnlineAdaptive,
        pairs,
        halted_early: halted,
    })
}

/// Loss of one answer:
///
/// * statistical, prefix and threshold queries with a real answer: `|q(x) − a|`;
/// * correlated-vector queries: the 0/1 [`correlated_loss`](crate::queries::correlated_loss);
/// * threshold queries with an `L`/`R` answer: 1 iff the interior-point contract
///   fails (`y < min x` must give `L`, `y ≥ max x` must give `R`).
pub fn loss(q: &Query, a: &Answer, x: &Dataset) -> Result<f64> {
    pair_loss(q, a, x, &mut CorrelationCache::default())
}

fn pair_loss(q: &Query, a: &Answer, x: &Dataset, cache: &mut CorrelationCache) -> Result<f64> {
    match (q, a) {
        (Query::Corr(c), Answer::Vector(y)) => Ok(f64::from(cache.loss(c, x.as_signs()?, y)?)),
        (Query::Threshold(t), Answer::Symbol(s)) => {
            let rows = x.as_reals()?;
            if rows.is_empty() {
                return param("interior-point loss needs a nonempty dataset");
            }
            let lo = rows.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = rows.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let bad = (t.tau < lo && *s != Symbol::L) || (t.tau >= hi && *s != Symbol::R);
            Ok(if bad { 1.0 } else { 0.0 })
        }
        (q, Answer::Real(v)) if q.is_statistical() => Ok((eval_statistical(q, x)? - v).abs()),
        (q, a) => param(format!(
            "no loss is defined for a {} answer to a {} query",
            a.kind(),
            q.kind()
        )),
    }
}

/// `max_j L_{q_j}(x, a_j)`, or 0 for an empty transcript.
pub fn max_loss(t: &Transcript, x: &Dataset) -> Result<f64> {
    Ok(t.losses(x)?.into_iter().fold(0.0, f64::max))
}
