//! Config-driven experiments.
//!
//! One JSON object names the interaction model, a mechanism, an adversary, a
//! dataset (file or generator), the query budget `k`, the number of trials and
//! a seed:
//!
//! ```json
//! {
//!   "model": "adaptive",
//!   "mechanism": {"name": "m_corr", "alpha": 0.5},
//!   "adversary": {"name": "reconstruction", "alpha": 0.5},
//!   "dataset": {"kind": "signbits", "n": 1000000},
//!   "k": 2,
//!   "trials": 20,
//!   "seed": 7
//! }
//! ```
//!
//! Compatibility of the pieces is checked before any trial runs. Trials use
//! independent streams and are reduced in order, so a report depends only on
//! its config.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attacks::{
    analyze_reconstruction, fingerprint_statistic, gen_fingerprint_instance, gen_packing_dataset,
    is_approximate_median, BandEdgeAdversary, FingerprintAdversary, MedianAdversary, OipStress,
    ReconstructionAdversary, ThresholdMix,
};
use crate::dataset::{Dataset, UniverseTag};
use crate::error::{config, Error, Result};
use crate::io::{load_dataset, tag_for_path};
use crate::mechanisms::{
    bt_loss, AdaptiveThresholds, AdaptiveThresholdsConfig, BetweenThresholds, BlrConfig, ExactAnswerer,
    FreshRandomizedResponse, IdentityMechanism, LaplaceMechanism, MCorr, MPrefix, Oip, UniformNoiseAnswerer,
};
use crate::protocol::{
    run_adaptive, run_offline, run_online, AdaptiveAdversary, Answer, Committed, CommittedAdversary, Mechanism, Model,
    QueryScript, Transcript,
};
use crate::queries::{eval_statistical, load_queries, BitString, Query};
use crate::rng::{RandomSource, Role};
use crate::signs::SignVector;
use crate::stats::{hoeffding_half_width, quantile_sorted, RangeSum};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum MechanismSpec {
    Exact,
    Laplace {
        epsilon: f64,
    },
    UniformNoise {
        alpha: f64,
    },
    MCorr {
        alpha: f64,
    },
    FreshRr {
        alpha: f64,
    },
    Identity,
    MPrefix {
        synthetic_size: usize,
        epsilon: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        candidate_cap: Option<u64>,
    },
    BetweenThresholds {
        t_lower: f64,
        t_upper: f64,
        epsilon: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<f64>,
    },
    Oip {
        epsilon: f64,
    },
    AdaptiveThresholds {
        alpha: f64,
        beta: f64,
        epsilon: f64,
        delta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        chunk_size: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum AdversarySpec {
    /// Commits the queries of a JSON query file, in order.
    Script {
        queries_file: PathBuf,
    },
    /// The fingerprinting attack; needs a `fingerprint` dataset.
    Fingerprint,
    Reconstruction {
        alpha: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<f64>,
    },
    /// Bisection on real answers mixed with uniform thresholds.
    RandomThresholds {
        #[serde(default = "half")]
        search_fraction: f64,
    },
    OipStress,
    BandEdge {
        t_lower: f64,
        t_upper: f64,
        alpha: f64,
        #[serde(default)]
        in_band_rate: f64,
    },
    /// Binary search for a median over `{1, …, domain}`; `alpha` is used to
    /// score the output.
    Median {
        domain: u64,
        alpha: f64,
    },
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSpec {
    /// A `.bits`, `.reals` or `.strings` file.
    File {
        path: PathBuf,
    },
    /// `n` signs with mean `mean`.
    Signbits {
        n: usize,
        #[serde(default)]
        mean: f64,
    },
    /// Rows `i/n` for `i = 1..=n`.
    Grid {
        n: usize,
    },
    UniformReals {
        n: usize,
    },
    /// The median packing dataset `x^t` over `{1, …, domain}`.
    Packing {
        domain: u64,
        t: u64,
        n: usize,
        alpha: f64,
    },
    /// A fresh fingerprinting instance with `k` columns per trial.
    Fingerprint {
        n: usize,
    },
    /// `n` uniformly random strings of length `len`.
    Strings {
        n: usize,
        len: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: Model,
    pub mechanism: MechanismSpec,
    pub adversary: AdversarySpec,
    pub dataset: DatasetSpec,
    pub k: usize,
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    /// Where to write the JSON report; the CSV goes next to it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum AnswerKind {
    Real,
    Symbol,
    Vector,
}

impl MechanismSpec {
    fn answers(&self) -> AnswerKind {
        match self {
            MechanismSpec::MCorr { .. } | MechanismSpec::FreshRr { .. } | MechanismSpec::Identity => AnswerKind::Vector,
            MechanismSpec::BetweenThresholds { .. } | MechanismSpec::Oip { .. } => AnswerKind::Symbol,
            _ => AnswerKind::Real,
        }
    }

    fn universe(&self) -> Option<UniverseTag> {
        match self {
            MechanismSpec::MCorr { .. } | MechanismSpec::FreshRr { .. } | MechanismSpec::Identity => {
                Some(UniverseTag::SignBit)
            }
            MechanismSpec::BetweenThresholds { .. }
            | MechanismSpec::Oip { .. }
            | MechanismSpec::AdaptiveThresholds { .. } => Some(UniverseTag::UnitReal),
            MechanismSpec::MPrefix { .. } => Some(UniverseTag::BitString),
            _ => None,
        }
    }

    fn build(&self, k: usize) -> Result<Box<dyn Mechanism>> {
        Ok(match *self {
            MechanismSpec::Exact => Box::new(ExactAnswerer::default()),
            MechanismSpec::Laplace { epsilon } => Box::new(LaplaceMechanism::new(epsilon)?),
            MechanismSpec::UniformNoise { alpha } => Box::new(UniformNoiseAnswerer::new(alpha)?),
            MechanismSpec::MCorr { alpha } => Box::new(MCorr::new(alpha)?),
            MechanismSpec::FreshRr { alpha } => Box::new(FreshRandomizedResponse::new(alpha)?),
            MechanismSpec::Identity => Box::new(IdentityMechanism::default()),
            MechanismSpec::MPrefix {
                synthetic_size,
                epsilon,
                candidate_cap,
            } => {
                let mut cfg = BlrConfig::new(synthetic_size, epsilon)?;
                if let Some(cap) = candidate_cap {
                    cfg = cfg.with_cap(cap);
                }
                Box::new(MPrefix::new(cfg))
            }
            MechanismSpec::BetweenThresholds {
                t_lower,
                t_upper,
                epsilon,
                delta,
            } => {
                let bt = BetweenThresholds::new(t_lower, t_upper, epsilon)?;
                Box::new(match delta {
                    Some(d) => bt.with_delta(d),
                    None => bt,
                })
            }
            MechanismSpec::Oip { epsilon } => Box::new(Oip::new(epsilon)?),
            MechanismSpec::AdaptiveThresholds {
                alpha,
                beta,
                epsilon,
                delta,
                chunk_size,
            } => {
                let mut cfg = AdaptiveThresholdsConfig::new(alpha, beta, epsilon, delta, k);
                cfg.chunk_size = chunk_size;
                Box::new(AdaptiveThresholds::new(cfg)?)
            }
        })
    }
}

impl AdversarySpec {
    fn adaptive_only(&self) -> bool {
        !matches!(self, AdversarySpec::Script { .. } | AdversarySpec::Fingerprint)
    }

    fn universe(&self) -> Option<UniverseTag> {
        match self {
            AdversarySpec::Script { .. } => None,
            AdversarySpec::Fingerprint => Some(UniverseTag::BitString),
            AdversarySpec::Reconstruction { .. } => Some(UniverseTag::SignBit),
            _ => Some(UniverseTag::UnitReal),
        }
    }

    /// The answer kind the adversary reads, if it reads answers at all.
    fn reads(&self) -> Option<AnswerKind> {
        match self {
            AdversarySpec::Fingerprint | AdversarySpec::RandomThresholds { .. } | AdversarySpec::Median { .. } => {
                Some(AnswerKind::Real)
            }
            AdversarySpec::Reconstruction { .. } => Some(AnswerKind::Vector),
            AdversarySpec::OipStress => Some(AnswerKind::Symbol),
            AdversarySpec::Script { .. } | AdversarySpec::BandEdge { .. } => None,
        }
    }
}

impl DatasetSpec {
    fn universe(&self) -> Result<UniverseTag> {
        Ok(match self {
            DatasetSpec::File { path } => tag_for_path(path)?,
            DatasetSpec::Signbits { .. } => UniverseTag::SignBit,
            DatasetSpec::Grid { .. } | DatasetSpec::UniformReals { .. } | DatasetSpec::Packing { .. } => {
                UniverseTag::UnitReal
            }
            DatasetSpec::Fingerprint { .. } | DatasetSpec::Strings { .. } => UniverseTag::BitString,
        })
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Checks that the model, mechanism, adversary and dataset fit together.
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return config("trials must be positive");
        }
        if self.k == 0 {
            return config("query budget k must be positive");
        }
        let (m, a) = (&self.mechanism, &self.adversary);
        if a.adaptive_only() && self.model != Model::OnlineAdaptive {
            return config(format!(
                "adversary {a:?} chooses queries adaptively and needs model \"adaptive\""
            ));
        }
        if matches!(m, MechanismSpec::MPrefix { .. }) && self.model != Model::Offline {
            return config("m_prefix answers whole batches and needs model \"offline\"");
        }
        let data = self.dataset.universe()?;
        for (who, need) in [("mechanism", m.universe()), ("adversary", a.universe())] {
            if let Some(need) = need {
                if need != data {
                    return config(format!("{who} needs a {need:?} dataset, got {data:?}"));
                }
            }
        }
        if let Some(need) = a.reads() {
            if need != m.answers() {
                return config(format!(
                    "adversary reads {need:?} answers but the mechanism gives {:?}",
                    m.answers()
                ));
            }
        }
        if matches!(a, AdversarySpec::Fingerprint) != matches!(self.dataset, DatasetSpec::Fingerprint { .. }) {
            return config("the fingerprint adversary and the fingerprint dataset go together");
        }
        if let (AdversarySpec::Median { domain, .. }, DatasetSpec::Packing { domain: d, .. }) = (a, &self.dataset) {
            if domain != d {
                return config(format!("median domain {domain} differs from the packing domain {d}"));
            }
        }
        Ok(())
    }
}

/// Resolves relative paths in `cfg` against `base`.
pub fn resolve_paths(cfg: &mut ExperimentConfig, base: &Path) {
    if let DatasetSpec::File { path } = &mut cfg.dataset {
        *path = base.join(&*path);
    }
    if let AdversarySpec::Script { queries_file } = &mut cfg.adversary {
        *queries_file = base.join(&*queries_file);
    }
}

/// Reads a config file, resolving its relative paths against its directory.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let mut cfg = ExperimentConfig::from_json(&fs::read_to_string(path)?)?;
    resolve_paths(&mut cfg, path.parent().unwrap_or(Path::new(".")));
    Ok(cfg)
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub max_loss: f64,
    pub mean_loss: f64,
    pub queries: usize,
    pub halted_early: bool,
    /// 1-based index of the halting query.
    pub halt_position: Option<usize>,
    /// 1-based index of the first query with loss at least 1, if any.
    pub first_full_loss: Option<usize>,
    /// Adversary-specific statistics.
    pub stats: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Aggregate {
    pub name: String,
    pub trials: u64,
    pub mean: f64,
    pub half_width: f64,
    pub interval: &'static str,
    pub min: f64,
    pub max: f64,
    pub p50: f64,
    pub p90: f64,
    pub p99: f64,
}

const INTERVAL: &str = "hoeffding, failure probability 0.01, realized range";

impl Aggregate {
    fn of(name: &str, values: &[f64]) -> Self {
        let mut acc = RangeSum::default();
        values.iter().for_each(|&v| acc.push(v));
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self {
            name: name.to_string(),
            trials: acc.count,
            mean: acc.mean(),
            half_width: hoeffding_half_width(acc.range(), acc.count, 0.01),
            interval: INTERVAL,
            min: acc.min,
            max: acc.max,
            p50: quantile_sorted(&sorted, 0.5),
            p90: quantile_sorted(&sorted, 0.9),
            p99: quantile_sorted(&sorted, 0.99),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub trials: Vec<TrialRecord>,
    pub aggregates: Vec<Aggregate>,
    pub wall_clock_seconds: f64,
}

impl ExperimentReport {
    pub fn aggregate(&self, name: &str) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.name == name)
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per trial; stat columns are the union of all stat keys.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let keys: BTreeSet<&String> = self.trials.iter().flat_map(|t| t.stats.keys()).collect();
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = [
            "trial",
            "max_loss",
            "mean_loss",
            "queries",
            "halted_early",
            "halt_position",
            "first_full_loss",
        ]
        .map(String::from)
        .to_vec();
        header.extend(keys.iter().map(|k| k.to_string()));
        w.write_record(&header)?;
        let opt = |v: Option<usize>| v.map(|v| v.to_string()).unwrap_or_default();
        for t in &self.trials {
            let mut row = vec![
                t.trial.to_string(),
                t.max_loss.to_string(),
                t.mean_loss.to_string(),
                t.queries.to_string(),
                t.halted_early.to_string(),
                opt(t.halt_position),
                opt(t.first_full_loss),
            ];
            row.extend(
                keys.iter()
                    .map(|k| t.stats.get(*k).map(|v| v.to_string()).unwrap_or_default()),
            );
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

enum Adversary {
    Committed(Box<dyn CommittedAdversary>),
    Adaptive(Box<dyn AdaptiveAdversary>),
}

fn random_strings(n: usize, len: usize, rng: &mut crate::rng::Rng) -> Dataset {
    let rows = (0..n)
        .map(|_| {
            let signs: Vec<_> = SignVector::random(len, rng).iter().collect();
            BitString::from_signs(&signs)
        })
        .collect();
    Dataset::strings(rows)
}

struct Runner<'a> {
    cfg: &'a ExperimentConfig,
    file_data: Option<Dataset>,
    script: Option<QueryScript>,
}

impl Runner<'_> {
    fn new(cfg: &ExperimentConfig) -> Result<Runner<'_>> {
        cfg.validate()?;
        let file_data = match &cfg.dataset {
            DatasetSpec::File { path } => Some(load_dataset(path)?),
            _ => None,
        };
        let script = match &cfg.adversary {
            AdversarySpec::Script { queries_file } => {
                let s = QueryScript::new(load_queries(queries_file)?);
                if s.len() < cfg.k {
                    return config(format!("script holds {} queries, k is {}", s.len(), cfg.k));
                }
                Some(s)
            }
            _ => None,
        };
        Ok(Runner { cfg, file_data, script })
    }

    fn interact(&self, t: u64) -> Result<(Dataset, Transcript, Option<crate::attacks::FingerprintInstance>)> {
        let cfg = self.cfg;
        let src = RandomSource::trial(cfg.seed, t);
        let mut data_rng = src.role(Role::Data).rng();
        let mut fingerprint = None;
        let x = match &cfg.dataset {
            DatasetSpec::File { .. } => self.file_data.clone().expect("loaded before trials"),
            DatasetSpec::Signbits { n, mean } => Dataset::signs(SignVector::random_with_mean(*n, *mean, &mut data_rng)),
            DatasetSpec::Grid { n } => crate::attacks::grid_dataset(*n)?,
            DatasetSpec::UniformReals { n } => Dataset::reals((0..*n).map(|_| data_rng.random::<f64>()).collect())?,
            DatasetSpec::Packing { domain, t, n, alpha } => gen_packing_dataset(*domain, *t, *n, *alpha)?,
            DatasetSpec::Fingerprint { n } => {
                let inst = gen_fingerprint_instance(*n, cfg.k, &mut src.role(Role::Instance).rng())?;
                let x = inst.x.clone();
                fingerprint = Some(inst);
                x
            }
            DatasetSpec::Strings { n, len } => random_strings(*n, *len, &mut data_rng),
        };

        let adversary = match &cfg.adversary {
            AdversarySpec::Script { .. } => Adversary::Committed(Box::new(self.script.clone().expect("loaded"))),
            AdversarySpec::Fingerprint => Adversary::Committed(Box::new(FingerprintAdversary::new(
                fingerprint.clone().expect("validated"),
            ))),
            AdversarySpec::Reconstruction { alpha, tolerance } => {
                let mut a = ReconstructionAdversary::new(*alpha, x.len())?;
                if let Some(tol) = tolerance {
                    a = a.with_tolerance(*tol);
                }
                Adversary::Adaptive(Box::new(a))
            }
            AdversarySpec::RandomThresholds { search_fraction } => {
                Adversary::Adaptive(Box::new(ThresholdMix::new(*search_fraction)?))
            }
            AdversarySpec::OipStress => Adversary::Adaptive(Box::new(OipStress::new(&x)?)),
            AdversarySpec::BandEdge {
                t_lower,
                t_upper,
                alpha,
                in_band_rate,
            } => Adversary::Adaptive(Box::new(BandEdgeAdversary::new(
                x.len(),
                *t_lower,
                *t_upper,
                *alpha,
                *in_band_rate,
            )?)),
            AdversarySpec::Median { domain, .. } => Adversary::Adaptive(Box::new(MedianAdversary::new(*domain)?)),
        };

        let mut mech = cfg.mechanism.build(cfg.k)?;
        let transcript = match (cfg.model, adversary) {
            (Model::Offline, Adversary::Committed(mut a)) => run_offline(&mut mech, &mut a, &x, cfg.k, &src)?,
            (Model::OnlineNonAdaptive, Adversary::Committed(mut a)) => run_online(&mut mech, &mut a, &x, cfg.k, &src)?,
            (Model::OnlineAdaptive, Adversary::Committed(a)) => {
                run_adaptive(&mut mech, &mut Committed::new(a), &x, cfg.k, &src)?
            }
            (Model::OnlineAdaptive, Adversary::Adaptive(mut a)) => run_adaptive(&mut mech, &mut a, &x, cfg.k, &src)?,
            _ => return config("adaptive adversary outside the adaptive model"),
        };
        Ok((x, transcript, fingerprint))
    }

    fn trial(&self, t: u64) -> Result<TrialRecord> {
        let cfg = self.cfg;
        let (x, transcript, fingerprint) = self.interact(t)?;
        let losses = self.losses(&transcript, &x)?;
        let mut stats = BTreeMap::new();
        match &cfg.adversary {
            AdversarySpec::Reconstruction { alpha, .. } => {
                let answers: Vec<Arc<SignVector>> = transcript
                    .answers()
                    .map(|a| a.as_vector().cloned())
                    .collect::<Result<_>>()?;
                let run = analyze_reconstruction(x.as_signs()?, &answers, *alpha)?;
                stats.insert("overlap_fraction".into(), run.overlap as f64 / x.len() as f64);
                stats.insert("empirical_a".into(), run.empirical.a);
                stats.insert("empirical_b".into(), run.empirical.b);
            }
            AdversarySpec::Fingerprint => {
                let inst = fingerprint.as_ref().expect("validated");
                let answers: Vec<f64> = transcript.real_answers()?;
                let signed: Vec<f64> = answers.iter().map(|&a| crate::attacks::to_sign_scale(a)).collect();
                let s = fingerprint_statistic(&signed, inst, 0)?;
                stats.insert("statistic_total".into(), s.total);
                stats.insert("statistic_max_row".into(), s.per_row[s.argmax]);
                stats.insert("argmax_row".into(), s.argmax as f64);
            }
            AdversarySpec::Median { domain, alpha } => {
                let rows: Vec<u64> = x
                    .as_reals()?
                    .iter()
                    .map(|v| (v * *domain as f64).round() as u64)
                    .collect();
                let out = median_output(&transcript, *domain)?;
                stats.insert("median_output".into(), out as f64);
                stats.insert(
                    "is_alpha_median".into(),
                    f64::from(u8::from(is_approximate_median(&rows, out, *alpha))),
                );
            }
            _ => {}
        }
        let n_q = losses.len();
        Ok(TrialRecord {
            trial: t,
            max_loss: losses.iter().copied().fold(0.0, f64::max),
            mean_loss: if n_q == 0 {
                0.0
            } else {
                losses.iter().sum::<f64>() / n_q as f64
            },
            queries: n_q,
            halted_early: transcript.halted_early,
            halt_position: transcript.halted_early.then_some(n_q),
            first_full_loss: losses.iter().position(|&l| l >= 1.0).map(|i| i + 1),
            stats,
        })
    }

    fn losses(&self, t: &Transcript, x: &Dataset) -> Result<Vec<f64>> {
        if let MechanismSpec::BetweenThresholds { t_lower, t_upper, .. } = self.cfg.mechanism {
            return t
                .pairs
                .iter()
                .map(|(q, a)| Ok(bt_loss(a.as_symbol()?, eval_statistical(q, x)?, t_lower, t_upper)))
                .collect();
        }
        t.losses(x)
    }
}

/// Replays the binary search on a transcript's answers to recover its output.
fn median_output(t: &Transcript, domain: u64) -> Result<u64> {
    let mut adv = MedianAdversary::new(domain)?;
    let mut rng = RandomSource::new(0, 0).rng();
    let mut history: Vec<(Query, Answer)> = Vec::new();
    for pair in &t.pairs {
        adv.next_query(&history, &mut rng)?;
        history.push(pair.clone());
    }
    adv.next_query(&history, &mut rng)?;
    Ok(adv.result())
}

/// Validates `cfg`, runs every trial and aggregates the results.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let runner = Runner::new(cfg)?;
    let trials: Vec<TrialRecord> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            runner.trial(t).map_err(|e| Error::Trial {
                index: t,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    let mut aggregates = vec![
        Aggregate::of("max_loss", &trials.iter().map(|t| t.max_loss).collect::<Vec<_>>()),
        Aggregate::of("mean_loss", &trials.iter().map(|t| t.mean_loss).collect::<Vec<_>>()),
        Aggregate::of(
            "halted",
            &trials
                .iter()
                .map(|t| f64::from(u8::from(t.halted_early)))
                .collect::<Vec<_>>(),
        ),
    ];
    let keys: BTreeSet<String> = trials.iter().flat_map(|t| t.stats.keys().cloned()).collect();
    for k in keys {
        let vals: Vec<f64> = trials.iter().filter_map(|t| t.stats.get(&k).copied()).collect();
        aggregates.push(Aggregate::of(&k, &vals));
    }
    Ok(ExperimentReport {
        config: cfg.clone(),
        trials,
        aggregates,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Re-runs trial `t` of `cfg` and writes its transcript as JSON lines, each
/// pair carrying its loss.
pub fn write_trial_transcript<W: Write>(cfg: &ExperimentConfig, t: u64, out: W) -> Result<()> {
    let runner = Runner::new(cfg)?;
    let (x, transcript, _) = runner.interact(t)?;
    let losses = runner.losses(&transcript, &x)?;
    transcript.write_jsonl_with_losses(Some(&losses), out)
}

/// Runs `cfg` and writes the JSON report and CSV rows when it names an output.
pub fn run_and_write(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let report = cmd_run(cfg)?;
    if let Some(out) = &cfg.output {
        fs::write(out, report.to_json_pretty()?)?;
        report.write_csv(fs::File::create(out.with_extension("csv"))?)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruction_cfg() -> ExperimentConfig {
        ExperimentConfig::from_json(
            r#"{"model": "adaptive", "mechanism": {"name": "m_corr", "alpha": 0.5},
                "adversary": {"name": "reconstruction", "alpha": 0.5},
                "dataset": {"kind": "signbits", "n": 1000000}, "k": 2, "trials": 8, "seed": 3}"#,
        )
        .unwrap()
    }

    #[test]
    fn reconstruction_reports_full_loss_at_query_two() {
        let r = cmd_run(&reconstruction_cfg()).unwrap();
        assert!(r.trials.iter().all(|t| t.first_full_loss == Some(2)), "{:?}", r.trials);
        assert_eq!(r.aggregate("max_loss").unwrap().mean, 1.0);
    }

    #[test]
    fn reports_are_deterministic() {
        let mut a = cmd_run(&reconstruction_cfg()).unwrap();
        let mut b = cmd_run(&reconstruction_cfg()).unwrap();
        a.wall_clock_seconds = 0.0;
        b.wall_clock_seconds = 0.0;
        assert_eq!(a.to_json_pretty().unwrap(), b.to_json_pretty().unwrap());
    }

    #[test]
    fn incompatible_pairings_are_rejected() {
        let mut cfg = reconstruction_cfg();
        cfg.model = Model::OnlineNonAdaptive;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let mut cfg = reconstruction_cfg();
        cfg.mechanism = MechanismSpec::Oip { epsilon: 1.0 };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let mut cfg = reconstruction_cfg();
        cfg.mechanism = MechanismSpec::MPrefix {
            synthetic_size: 2,
            epsilon: 1.0,
            candidate_cap: None,
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn median_on_packing_data() {
        let cfg = ExperimentConfig::from_json(
            r#"{"model": "adaptive", "mechanism": {"name": "exact"},
                "adversary": {"name": "median", "domain": 64, "alpha": 0.1},
                "dataset": {"kind": "packing", "domain": 64, "t": 7, "n": 1000, "alpha": 0.1},
                "k": 10, "trials": 2}"#,
        )
        .unwrap();
        let r = cmd_run(&cfg).unwrap();
        for t in &r.trials {
            assert_eq!(t.stats["median_output"], 7.0);
            assert_eq!(t.stats["is_alpha_median"], 1.0);
            assert!(t.queries <= MedianAdversary::query_budget(64));
        }
    }

    #[test]
    fn csv_has_one_row_per_trial() {
        let r = cmd_run(&reconstruction_cfg()).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 8);
        assert!(text.lines().next().unwrap().contains("overlap_fraction"));
    }
}
