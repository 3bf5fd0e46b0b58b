//! Query families and their exact (non-private) evaluation.

mod bitstring;
mod file;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

pub use bitstring::{is_prefix, BitString};
pub use file::{load_queries, parse_queries, QuerySpec};

use crate::dataset::{Dataset, RowRef, UniverseTag};
use crate::error::{param, Result};
use crate::signs::SignVector;

/// `q_S`: a row matches iff some string of `S` is a prefix of it.
#[derive(Clone)]
pub struct PrefixQuery {
    strings: Vec<BitString>,
    bound: Option<usize>,
    by_len: BTreeMap<usize, HashSet<BitString>>,
}

impl PrefixQuery {
    /// Builds `q_S`; duplicates in `strings` collapse.
    pub fn new(strings: impl IntoIterator<Item = BitString>, bound: Option<usize>) -> Result<Self> {
        let mut strings: Vec<BitString> = strings.into_iter().collect();
        strings.sort();
        strings.dedup();
        if let Some(b) = bound {
            if strings.len() > b {
                return param(format!("prefix query has {} strings, bound is {b}", strings.len()));
            }
        }
        let mut by_len: BTreeMap<usize, HashSet<BitString>> = BTreeMap::new();
        for s in &strings {
            by_len.entry(s.len()).or_default().insert(s.clone());
        }
        Ok(Self { strings, bound, by_len })
    }

    pub fn strings(&self) -> &[BitString] {
        &self.strings
    }

    pub fn bound(&self) -> Option<usize> {
        self.bound
    }

    pub fn matches(&self, x: &BitString) -> bool {
        self.by_len
            .range(..=x.len())
            .any(|(&len, set)| set.contains(&x.prefix(len)))
    }
}

impl fmt::Debug for PrefixQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let shown: Vec<String> = self.strings.iter().take(8).map(|s| s.to_string()).collect();
        write!(f, "PrefixQuery({{{}", shown.join(", "))?;
        if self.strings.len() > 8 {
            write!(f, ", … {} total", self.strings.len())?;
        }
        write!(f, "}})")
    }
}

/// `1` iff some element of `S` is a prefix of `x`.
pub fn eval_prefix(q: &PrefixQuery, x: &BitString) -> bool {
    q.matches(x)
}

/// `c_τ`: a real row matches iff it is at most `τ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdQuery {
    pub tau: f64,
}

impl ThresholdQuery {
    pub fn new(tau: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&tau) {
            return param(format!("threshold {tau} lies outside [0, 1]"));
        }
        Ok(Self { tau })
    }

    /// Threshold `c_m` over the discrete domain `{1, …, domain}`, embedded in
    /// `[0, 1]` by `i ↦ i / domain`.
    pub fn discrete(m: u64, domain: u64) -> Result<Self> {
        if domain == 0 || m > domain {
            return param(format!("threshold {m} outside the domain [{domain}]"));
        }
        Self::new(embed_discrete(m, domain))
    }

    pub fn matches(&self, v: f64) -> bool {
        v <= self.tau
    }
}

/// `i ↦ i / domain`, the embedding of `[T]` into the unit interval.
pub fn embed_discrete(i: u64, domain: u64) -> f64 {
    i as f64 / domain as f64
}

type Predicate = dyn Fn(RowRef<'_>) -> bool + Send + Sync;

/// A statistical query given by an arbitrary Boolean predicate on rows.
#[derive(Clone)]
pub struct StatisticalQuery {
    predicate: Arc<Predicate>,
    pub description: String,
}

impl StatisticalQuery {
    pub fn new(description: impl Into<String>, predicate: impl Fn(RowRef<'_>) -> bool + Send + Sync + 'static) -> Self {
        Self {
            predicate: Arc::new(predicate),
            description: description.into(),
        }
    }

    pub fn matches(&self, row: RowRef<'_>) -> bool {
        (self.predicate)(row)
    }
}

impl fmt::Debug for StatisticalQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StatisticalQuery({})", self.description)
    }
}

/// `q_V`: asks for a sign vector about `α`-correlated with the data and no more
/// correlated with any `v ∈ V` than that correlation explains.
#[derive(Debug, Clone)]
pub struct CorrelatedVectorQuery {
    constraints: Vec<Arc<SignVector>>,
    alpha: f64,
    tolerance: f64,
    n: usize,
}

impl CorrelatedVectorQuery {
    /// Query on datasets of length `n` with the default tolerance `α² n / 100`.
    pub fn new(constraints: Vec<Arc<SignVector>>, alpha: f64, n: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return param(format!("alpha must lie in (0, 1), got {alpha}"));
        }
        if let Some(v) = constraints.iter().find(|v| v.len() != n) {
            return param(format!("constraint of length {} in a query over length {n}", v.len()));
        }
        Ok(Self {
            constraints,
            alpha,
            tolerance: alpha * alpha * n as f64 / 100.0,
            n,
        })
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Result<Self> {
        if !(tolerance > 0.0) {
            return param(format!("tolerance must be positive, got {tolerance}"));
        }
        self.tolerance = tolerance;
        Ok(self)
    }

    /// Rejects queries with more than `m` constraints.
    pub fn within(self, m: usize) -> Result<Self> {
        if self.constraints.len() > m {
            return param(format!("{} constraints exceed the limit {m}", self.constraints.len()));
        }
        Ok(self)
    }

    pub fn constraints(&self) -> &[Arc<SignVector>] {
        &self.constraints
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// 0 iff `|⟨y − αx, x⟩|` and every `|⟨y − αx, v⟩|` are within the tolerance.
pub fn correlated_loss(q: &CorrelatedVectorQuery, x: &SignVector, y: &SignVector) -> Result<u8> {
    check_corr_lengths(q, x, y)?;
    let within = |yv: i64, xv: i64| (yv as f64 - q.alpha * xv as f64).abs() <= q.tolerance;
    let ok = within(y.inner(x), x.len() as i64) && q.constraints.iter().all(|v| within(y.inner(v), x.inner(v)));
    Ok(u8::from(!ok))
}

fn check_corr_lengths(q: &CorrelatedVectorQuery, x: &SignVector, y: &SignVector) -> Result<()> {
    if x.len() != q.n || y.len() != q.n {
        return param(format!(
            "correlated query over length {} given data of length {} and answer of length {}",
            q.n,
            x.len(),
            y.len()
        ));
    }
    Ok(())
}

/// Memoised inner products for evaluating many correlated-vector losses that
/// share constraint and answer vectors (keyed by `Arc` identity).
#[derive(Default)]
pub(crate) struct CorrelationCache {
    with_data: HashMap<usize, i64>,
    with_answer: HashMap<(usize, usize), i64>,
}

impl CorrelationCache {
    pub(crate) fn loss(&mut self, q: &CorrelatedVectorQuery, x: &SignVector, y: &Arc<SignVector>) -> Result<u8> {
        check_corr_lengths(q, x, y)?;
        let yk = Arc::as_ptr(y) as usize;
        let within = |yv: i64, xv: i64| (yv as f64 - q.alpha * xv as f64).abs() <= q.tolerance;
        if !within(y.inner(x), x.len() as i64) {
            return Ok(1);
        }
        for v in &q.constraints {
            let vk = Arc::as_ptr(v) as usize;
            let xv = *self.with_data.entry(vk).or_insert_with(|| x.inner(v));
            let yv = *self.with_answer.entry((yk, vk)).or_insert_with(|| y.inner(v));
            if !within(yv, xv) {
                return Ok(1);
            }
        }
        Ok(0)
    }
}

/// Any query the interaction engine can carry.
#[derive(Debug, Clone)]
pub enum Query {
    Statistical(StatisticalQuery),
    Prefix(PrefixQuery),
    Threshold(ThresholdQuery),
    Corr(CorrelatedVectorQuery),
}

impl Query {
    /// Whether the query is an average of a row predicate (and so has sensitivity `1/n`).
    pub fn is_statistical(&self) -> bool {
        !matches!(self, Query::Corr(_))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Query::Statistical(_) => "statistical",
            Query::Prefix(_) => "prefix",
            Query::Threshold(_) => "threshold",
            Query::Corr(_) => "corr",
        }
    }

    /// Per-row predicate, or an error if the row's universe does not fit.
    pub fn matches_row(&self, row: RowRef<'_>) -> Result<bool> {
        match (self, row) {
            (Query::Statistical(q), r) => Ok(q.matches(r)),
            (Query::Prefix(q), RowRef::Bits(b)) => Ok(q.matches(b)),
            (Query::Threshold(q), RowRef::Real(v)) => Ok(q.matches(v)),
            (q, r) => param(format!("{} query cannot be evaluated on row {r:?}", q.kind())),
        }
    }

    pub fn domain(&self) -> Option<UniverseTag> {
        match self {
            Query::Statistical(_) => None,
            Query::Prefix(_) => Some(UniverseTag::BitString),
            Query::Threshold(_) => Some(UniverseTag::UnitReal),
            Query::Corr(_) => Some(UniverseTag::SignBit),
        }
    }
}

/// `q(x) = (1/n) Σ_i q(x_i)` for statistical, prefix and threshold queries.
pub fn eval_statistical(q: &Query, x: &Dataset) -> Result<f64> {
    if let Some(tag) = q.domain() {
        if tag != x.universe() {
            return param(format!(
                "{} query expects {tag:?} rows, dataset is {:?}",
                q.kind(),
                x.universe()
            ));
        }
    }
    if x.is_empty() {
        return param("cannot evaluate a statistical query on an empty dataset");
    }
    let count = match (q, x) {
        (Query::Corr(_), _) => return param("correlated-vector queries are search queries, not statistics"),
        // sorted-free fast path for thresholds
        (Query::Threshold(t), Dataset::Reals(v)) => v.iter().filter(|&&r| t.matches(r)).count(),
        _ => {
            let mut c = 0;
            for row in x.rows() {
                if q.matches_row(row)? {
                    c += 1;
                }
            }
            c
        }
    };
    Ok(count as f64 / x.len() as f64)
}

/// Result of mapping every row to its longest prefix in `X_S = (∪_j S_j) ∪ {∅}`.
#[derive(Debug, Clone)]
pub struct ReducedDataset {
    /// `X_S`, sorted by length then lexicographically.
    pub universe: Vec<BitString>,
    pub dataset: Dataset,
}

/// Replaces each row `x_i` with the longest element of `X_S` that is a prefix of it.
///
/// Two prefixes of the same string with equal length are equal, so the
/// longest match is unique.
pub fn restrict_universe(queries: &[PrefixQuery], x: &Dataset) -> Result<ReducedDataset> {
    if queries.is_empty() {
        return param("universe reduction needs at least one query");
    }
    let rows = x.as_strings()?;
    let mut universe: Vec<BitString> = queries
        .iter()
        .flat_map(|q| q.strings().iter().cloned())
        .chain(std::iter::once(BitString::empty()))
        .collect();
    universe.sort();
    universe.dedup();

    let mut by_len: BTreeMap<usize, HashSet<&BitString>> = BTreeMap::new();
    for u in &universe {
        by_len.entry(u.len()).or_default().insert(u);
    }
    let reduced = rows
        .iter()
        .map(|row| {
            by_len
                .range(..=row.len())
                .rev()
                .find_map(|(&len, set)| set.get(&row.prefix(len)).map(|u| (*u).clone()))
                .expect("the empty string prefixes every row")
        })
        .collect();
    Ok(ReducedDataset {
        universe,
        dataset: Dataset::Strings(reduced),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomSource;
    use crate::signs::Sign;
    use proptest::prelude::*;
    use rand::Rng;

    fn bs(s: &str) -> BitString {
        BitString::parse(s).unwrap()
    }

    fn pq(strings: &[&str]) -> PrefixQuery {
        PrefixQuery::new(strings.iter().map(|s| bs(s)), None).unwrap()
    }

    #[test]
    fn eval_prefix_examples() {
        let none = pq(&[]);
        let all = pq(&["∅"]);
        for x in ["∅", "+", "-+-"] {
            assert!(!eval_prefix(&none, &bs(x)));
            assert!(eval_prefix(&all, &bs(x)));
        }
        let q = pq(&["+-"]);
        assert!(eval_prefix(&q, &bs("+-+")));
        assert!(!eval_prefix(&q, &bs("++-")));
    }

    #[test]
    fn prefix_bound_enforced() {
        assert!(PrefixQuery::new([bs("+"), bs("-")], Some(1)).is_err());
        assert!(PrefixQuery::new([bs("+"), bs("+")], Some(1)).is_ok());
    }

    #[test]
    fn eval_statistical_examples() {
        let x = Dataset::reals(vec![0.1, 0.6, 0.4, 0.9]).unwrap();
        let ones = Query::Statistical(StatisticalQuery::new("true", |_| true));
        assert_eq!(eval_statistical(&ones, &x).unwrap(), 1.0);
        let t = Query::Threshold(ThresholdQuery::new(0.5).unwrap());
        assert_eq!(eval_statistical(&t, &x).unwrap(), 0.5);

        let strings = Dataset::strings(vec![bs("+-"), bs("--")]);
        let p = Query::Prefix(pq(&["+"]));
        assert_eq!(eval_statistical(&p, &strings).unwrap(), 0.5);

        assert!(eval_statistical(&p, &x).is_err());
        assert!(eval_statistical(&t, &strings).is_err());
    }

    #[test]
    fn restrict_universe_examples() {
        let x = Dataset::strings(vec![bs("+-+"), bs("--"), bs("∅")]);
        let r = restrict_universe(&[pq(&[])], &x).unwrap();
        assert_eq!(r.universe, vec![BitString::empty()]);
        assert!(r.dataset.as_strings().unwrap().iter().all(|s| s.is_empty()));

        let r = restrict_universe(&[pq(&["+", "+-"])], &x).unwrap();
        assert_eq!(r.dataset.as_strings().unwrap()[0], bs("+-"));
        assert_eq!(r.dataset.as_strings().unwrap()[1], BitString::empty());
        assert_eq!(r.universe, vec![BitString::empty(), bs("+"), bs("+-")]);

        assert!(restrict_universe(&[], &x).is_err());
        assert!(restrict_universe(&[pq(&["+"])], &Dataset::reals(vec![0.5]).unwrap()).is_err());
    }

    fn sv(v: &[i64]) -> SignVector {
        SignVector::from_ints(v).unwrap()
    }

    #[test]
    fn correlated_loss_examples() {
        let mut rng = RandomSource::new(1, 0).rng();
        let x = SignVector::random(50, &mut rng);
        let q = CorrelatedVectorQuery::new(vec![], 0.999_999, 50).unwrap();
        // α just below one: ⟨x − αx, x⟩ ≈ 0
        assert_eq!(correlated_loss(&q, &x, &x).unwrap(), 0);
        assert_eq!(correlated_loss(&q, &x, &x.negated()).unwrap(), 1);

        let q = CorrelatedVectorQuery::new(vec![], 0.5, 4)
            .unwrap()
            .with_tolerance(1.0)
            .unwrap();
        assert_eq!(correlated_loss(&q, &sv(&[1, 1, 1, 1]), &sv(&[1, 1, 1, -1])).unwrap(), 0);

        assert!(correlated_loss(&q, &sv(&[1, 1, 1]), &sv(&[1, 1, 1])).is_err());
        assert!(CorrelatedVectorQuery::new(vec![Arc::new(sv(&[1]))], 0.5, 4).is_err());
        assert!(CorrelatedVectorQuery::new(vec![], 1.0, 4).is_err());
    }

    #[test]
    fn constraint_term_counts() {
        let x = sv(&[1, 1, 1, 1]);
        let y = sv(&[1, 1, 1, -1]);
        // ⟨y − 0.5x, v⟩ for v = y: 4 − 0.5·2 = 3
        let v = Arc::new(y.clone());
        let q = CorrelatedVectorQuery::new(vec![v.clone()], 0.5, 4)
            .unwrap()
            .with_tolerance(2.5)
            .unwrap();
        assert_eq!(correlated_loss(&q, &x, &y).unwrap(), 1);
        let q = q.with_tolerance(3.0).unwrap();
        assert_eq!(correlated_loss(&q, &x, &y).unwrap(), 0);
        let mut cache = CorrelationCache::default();
        assert_eq!(cache.loss(&q, &x, &Arc::new(y)).unwrap(), 0);
        assert!(CorrelatedVectorQuery::new(vec![v.clone(), v], 0.5, 4)
            .unwrap()
            .within(1)
            .is_err());
    }

    fn random_string(rng: &mut crate::rng::Rng, max_len: usize) -> BitString {
        let len = rng.random_range(0..=max_len);
        let mut s = BitString::empty();
        s.extend((0..len).map(|_| if rng.random_bool(0.5) { Sign::Plus } else { Sign::Minus }));
        s
    }

    proptest! {
        #[test]
        fn reduction_preserves_answers(seed in any::<u64>()) {
            let mut rng = RandomSource::new(seed, 0).rng();
            let qs: Vec<PrefixQuery> = (0..rng.random_range(1..=6))
                .map(|_| {
                    let k = rng.random_range(0..=4);
                    PrefixQuery::new((0..k).map(|_| random_string(&mut rng, 6)), None).unwrap()
                })
                .collect();
            let x = Dataset::strings((0..rng.random_range(1..=30)).map(|_| random_string(&mut rng, 8)).collect());
            let r = restrict_universe(&qs, &x).unwrap();
            for q in qs {
                let q = Query::Prefix(q);
                prop_assert_eq!(eval_statistical(&q, &x).unwrap(), eval_statistical(&q, &r.dataset).unwrap());
            }
        }

        #[test]
        fn statistic_has_sensitivity_one_over_n(seed in any::<u64>(), n in 1usize..60) {
            let mut rng = RandomSource::new(seed, 1).rng();
            let rows: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let mut other = rows.clone();
            other[rng.random_range(0..n)] = rng.random::<f64>();
            let q = Query::Threshold(ThresholdQuery::new(rng.random::<f64>()).unwrap());
            let a = eval_statistical(&q, &Dataset::reals(rows).unwrap()).unwrap();
            let b = eval_statistical(&q, &Dataset::reals(other).unwrap()).unwrap();
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert!((a - b).abs() <= 1.0 / n as f64 + 1e-12);
        }

        #[test]
        fn loosening_tolerance_never_adds_loss(seed in any::<u64>(), t in 0.5f64..20.0, extra in 0.0f64..20.0) {
            let mut rng = RandomSource::new(seed, 2).rng();
            let n = 40;
            let x = SignVector::random(n, &mut rng);
            let y = x.with_flips(0.3, &mut rng);
            let v = vec![Arc::new(SignVector::random(n, &mut rng))];
            let tight = CorrelatedVectorQuery::new(v.clone(), 0.4, n).unwrap().with_tolerance(t).unwrap();
            let loose = CorrelatedVectorQuery::new(v, 0.4, n).unwrap().with_tolerance(t + extra).unwrap();
            prop_assert!(correlated_loss(&loose, &x, &y).unwrap() <= correlated_loss(&tight, &x, &y).unwrap());
        }
    }
}
