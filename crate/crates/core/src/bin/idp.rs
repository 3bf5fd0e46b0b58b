//! `idp`: run experiments, verify lemmas, generate fixtures, run the suite.
//!
//! Exit status: 0 on success or a passing check, 1 on a failing check or a
//! runtime failure, 2 on usage and configuration errors.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde_json::json;

use interactive_dp::attacks::{gen_fingerprint_instance, packing_multiplicity, packing_rows};
use interactive_dp::experiment::{load_config, run_and_write, write_trial_transcript};
use interactive_dp::io::save_dataset;
use interactive_dp::mechanisms::{FreshRandomizedResponse, MCorr};
use interactive_dp::prelude::*;
use interactive_dp::queries::QuerySpec;
use interactive_dp::suite::{self, AcOutcome, PRIMARY};
use interactive_dp::verify::{
    claim_lap_sweep, corr_err2_mc, empirical_dp_audit, fingerprint_lemma_mc, AuditConfig, Estimator, TestFunction,
    VerifyReport, LEMMA_BOUND, SWEEP_SCALES,
};

#[derive(Parser)]
#[command(name = "idp", version, about = "Interactive differentially private query answering")]
struct Cli {
    /// Master seed; overrides the seed stored in a config.
    #[arg(long, global = true, env = "IDP_SEED")]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an experiment config and print its report.
    Run(RunArgs),
    /// Run one numeric check and print a JSON report.
    #[command(subcommand)]
    Verify(Check),
    /// Write datasets and query fixtures.
    #[command(subcommand)]
    Gen(Gen),
    /// Run a named acceptance preset.
    Suite(SuiteArgs),
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    /// Report path; the CSV of per-trial rows goes next to it.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also write one trial's transcript as JSON lines.
    #[arg(long)]
    transcript: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    transcript_trial: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Direct,
    Conditional,
}

impl From<EstimatorArg> for Estimator {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::Direct => Estimator::Direct,
            EstimatorArg::Conditional => Estimator::Conditional,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AuditMech {
    #[value(name = "m_corr", alias = "m-corr")]
    MCorr,
    #[value(name = "fresh_rr", alias = "fresh-rr")]
    FreshRr,
}

#[derive(Subcommand)]
enum Check {
    /// E[f(c)·Σ(c_i − p) + 2|f(c) − c̄|] ≥ 1/3.
    FingerprintLemma {
        #[arg(long, default_value = "mean")]
        f: String,
        #[arg(long, default_value_t = 128)]
        n: usize,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, value_enum, default_value_t = EstimatorArg::Conditional)]
        estimator: EstimatorArg,
    },
    /// The squared-error variant; `--bias` scores `(f − p)²` instead of `(f − c̄)²`.
    CorrErr2 {
        #[arg(long, default_value = "mean")]
        f: String,
        #[arg(long, default_value_t = 128)]
        n: usize,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long)]
        bias: bool,
        #[arg(long, value_enum, default_value_t = EstimatorArg::Conditional)]
        estimator: EstimatorArg,
    },
    /// Exact sweep of the nested-interval Laplace inequality.
    ClaimLap {
        #[arg(long, default_value_t = 1000)]
        pairs: usize,
    },
    /// Empirical privacy audit of randomized response on all-plus data
    /// against its neighbour with the first row flipped.
    DpAudit {
        #[arg(long, value_enum, default_value_t = AuditMech::MCorr)]
        mech: AuditMech,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
    },
}

#[derive(Subcommand)]
enum Gen {
    /// Packing dataset over [1, T] as a `.reals` file.
    Packing {
        #[arg(long = "T")]
        domain: u64,
        #[arg(long)]
        t: u64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value = "packing.reals")]
        out: PathBuf,
    },
    /// Fingerprinting instance directory: x.strings, p.json, c.strings, queries.json.
    Fingerprint {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = "fingerprint")]
        out: PathBuf,
    },
    /// Random ±1 dataset (`.bits`).
    Signbits {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.0)]
        mean: f64,
        #[arg(long, default_value = "x.bits")]
        out: PathBuf,
    },
    /// Uniform reals in [0, 1] (`.reals`).
    Reals {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "x.reals")]
        out: PathBuf,
    },
    /// Uniform ±1 strings of a fixed length (`.strings`).
    Strings {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        len: usize,
        #[arg(long, default_value = "x.strings")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    AcPrimary,
}

#[derive(Args)]
struct SuiteArgs {
    #[arg(value_enum)]
    preset: Preset,
    /// Run only these criteria (e.g. `--only AC-5 --only AC-13`).
    #[arg(long)]
    only: Vec<String>,
}

/// Writes to stdout; a closed pipe (`idp ... | head`) is not an error.
fn emit(text: &str) -> Result<()> {
    match writeln!(io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn is_usage(e: &Error) -> bool {
    match e {
        Error::Parameter(_) | Error::Config(_) | Error::Parse { .. } | Error::Json(_) | Error::Io(_) => true,
        Error::Trial { source, .. } => is_usage(source),
        _ => false,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("idp: {e}");
            return ExitCode::from(2);
        }
    }
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("idp: {e}");
            ExitCode::from(if is_usage(&e) { 2 } else { 1 })
        }
    }
}

fn dispatch(cli: &Cli) -> Result<bool> {
    match &cli.cmd {
        Cmd::Run(args) => run(cli, args),
        Cmd::Verify(check) => verify(cli, check),
        Cmd::Gen(g) => gen(cli, g).map(|()| true),
        Cmd::Suite(args) => run_suite(cli, args),
    }
}

fn run(cli: &Cli, args: &RunArgs) -> Result<bool> {
    let mut cfg = load_config(&args.config)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &args.output {
        cfg.output = Some(o.clone());
    }
    info!("running {} trials", cfg.trials);
    let report = run_and_write(&cfg)?;
    match cli.format {
        Format::Json => emit(&report.to_json_pretty()?)?,
        Format::Csv => {
            let mut buf = Vec::new();
            report.write_csv(&mut buf)?;
            emit(String::from_utf8_lossy(&buf).trim_end())?;
        }
    }
    if let Some(path) = &args.transcript {
        write_trial_transcript(&cfg, args.transcript_trial, fs::File::create(path)?)?;
    }
    Ok(true)
}

fn print_report(cli: &Cli, r: &VerifyReport) -> Result<bool> {
    match cli.format {
        Format::Json => emit(&serde_json::to_string_pretty(r)?)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["check", "estimate", "half_width", "bound", "pass"])?;
            w.write_record([
                r.check.clone(),
                r.estimate.to_string(),
                r.half_width.to_string(),
                r.bound.to_string(),
                r.pass.to_string(),
            ])?;
            emit(String::from_utf8_lossy(&csv_bytes(w)?).trim_end())?;
        }
    }
    Ok(r.pass)
}

fn verify(cli: &Cli, check: &Check) -> Result<bool> {
    let seed = cli.seed.unwrap_or(0);
    let report = match check {
        Check::FingerprintLemma {
            f,
            n,
            trials,
            estimator,
        } => {
            let func = TestFunction::by_name(f)?;
            let e = fingerprint_lemma_mc(&func, *n, *trials, (*estimator).into(), seed)?;
            VerifyReport {
                check: "fingerprint-lemma".into(),
                parameters: json!({"f": f, "n": n, "trials": trials, "estimator": Estimator::from(*estimator), "seed": seed}),
                estimate: e.mean,
                half_width: e.half_width,
                bound: LEMMA_BOUND,
                pass: e.consistent_with_lower_bound(LEMMA_BOUND),
                details: json!({"range": e.range}),
            }
        }
        Check::CorrErr2 {
            f,
            n,
            trials,
            bias,
            estimator,
        } => {
            let func = TestFunction::by_name(f)?;
            let e = corr_err2_mc(&func, *n, *trials, *bias, (*estimator).into(), seed)?;
            VerifyReport {
                check: "corr-err2".into(),
                parameters: json!({"f": f, "n": n, "trials": trials, "bias": bias, "estimator": Estimator::from(*estimator), "seed": seed}),
                estimate: e.mean,
                half_width: e.half_width,
                bound: LEMMA_BOUND,
                pass: e.consistent_with_lower_bound(LEMMA_BOUND),
                details: json!({"range": e.range}),
            }
        }
        Check::ClaimLap { pairs } => {
            let s = claim_lap_sweep(&SWEEP_SCALES, *pairs, seed)?;
            VerifyReport {
                check: "claim-lap".into(),
                parameters: json!({"scales": SWEEP_SCALES, "pairs_per_scale": pairs, "seed": seed}),
                estimate: s.failures as f64,
                half_width: 0.0,
                bound: 0.0,
                pass: s.passed(),
                details: serde_json::to_value(&s)?,
            }
        }
        Check::DpAudit {
            mech,
            n,
            alpha,
            eps,
            delta,
            trials,
        } => {
            let x = Dataset::signs(SignVector::all_plus(*n));
            let x2 = neighbor_of(&x, 0, UniverseElement::Sign(Sign::Minus))?;
            let script = QueryScript::new(vec![Query::Corr(CorrelatedVectorQuery::new(vec![], *alpha, *n)?)]);
            let cfg = AuditConfig::new(*trials, *eps, *delta, seed);
            // validate before handing a panicking factory to the auditor
            MCorr::new(*alpha)?;
            let a = *alpha;
            let r = match mech {
                AuditMech::MCorr => empirical_dp_audit(|| MCorr::new(a).expect("checked"), &x, &x2, &script, &cfg)?,
                AuditMech::FreshRr => empirical_dp_audit(
                    || FreshRandomizedResponse::new(a).expect("checked"),
                    &x,
                    &x2,
                    &script,
                    &cfg,
                )?,
            };
            VerifyReport {
                check: "dp-audit".into(),
                parameters: json!({"mech": match mech { AuditMech::MCorr => "m_corr", AuditMech::FreshRr => "fresh_rr" },
                    "n": n, "alpha": alpha, "eps": eps, "delta": delta, "trials": trials, "seed": seed}),
                estimate: r.worst.as_ref().map_or(0.0, |w| w.confident_margin),
                half_width: r.worst.as_ref().map_or(0.0, |w| w.margin - w.confident_margin),
                bound: 0.0,
                pass: !r.violated(),
                details: serde_json::to_value(&r)?,
            }
        }
    };
    print_report(cli, &report)
}

fn csv_bytes(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn write_lines(path: &Path, lines: impl IntoIterator<Item = String>) -> Result<()> {
    let mut f = io::BufWriter::new(fs::File::create(path)?);
    for l in lines {
        writeln!(f, "{l}")?;
    }
    f.flush()?;
    Ok(())
}

fn gen(cli: &Cli, g: &Gen) -> Result<()> {
    let seed = cli.seed.unwrap_or(0);
    let mut rng = RandomSource::new(seed, 0).role(Role::Data).rng();
    let out = match g {
        Gen::Packing {
            domain,
            t,
            n,
            alpha,
            out,
        } => {
            let rows = packing_rows(*domain, *t, *n, *alpha)?;
            let m = packing_multiplicity(*n, *alpha);
            let low = rows.iter().filter(|&&v| v == 1).count();
            let high = rows.iter().filter(|&&v| v == *domain).count();
            // when t sits at an endpoint its copies land there too
            let ok = (low == m || *t == 1) && (high == m || *t == *domain) && rows.len() == *n;
            if !ok {
                return Err(Error::Protocol(format!(
                    "multiplicity check failed: {low} and {high} copies, expected {m}"
                )));
            }
            eprintln!("multiplicity m = {m} at 1 and at {domain}; {} copies of {t}", n - 2 * m);
            save_dataset(&interactive_dp::attacks::discrete_dataset(&rows, *domain)?, out)?;
            out
        }
        Gen::Fingerprint { n, k, out } => {
            let inst = gen_fingerprint_instance(*n, *k, &mut RandomSource::new(seed, 0).role(Role::Instance).rng())?;
            fs::create_dir_all(out)?;
            save_dataset(&inst.x, out.join("x.strings"))?;
            fs::write(out.join("p.json"), serde_json::to_string_pretty(&inst.p)?)?;
            write_lines(&out.join("c.strings"), inst.c.iter().map(|c| c.to_pm_string()))?;
            let specs: Vec<QuerySpec> = inst
                .queries
                .iter()
                .map(|q| QuerySpec::Prefix {
                    strings: q.strings().iter().map(ToString::to_string).collect(),
                    bound: None,
                })
                .collect();
            fs::write(out.join("queries.json"), serde_json::to_string(&specs)?)?;
            out
        }
        Gen::Signbits { n, mean, out } => {
            save_dataset(&Dataset::signs(SignVector::random_with_mean(*n, *mean, &mut rng)), out)?;
            out
        }
        Gen::Reals { n, out } => {
            use rand::Rng as _;
            save_dataset(&Dataset::reals((0..*n).map(|_| rng.random::<f64>()).collect())?, out)?;
            out
        }
        Gen::Strings { n, len, out } => {
            let rows = (0..*n)
                .map(|_| BitString::from_signs(&SignVector::random(*len, &mut rng).iter().collect::<Vec<_>>()))
                .collect();
            save_dataset(&Dataset::strings(rows), out)?;
            out
        }
    };
    info!("wrote {}", out.display());
    emit(&out.display().to_string())?;
    Ok(())
}

fn run_suite(cli: &Cli, args: &SuiteArgs) -> Result<bool> {
    let Preset::AcPrimary = args.preset;
    let seed = cli.seed.unwrap_or(suite::DEFAULT_SEED);
    for id in &args.only {
        if suite::by_id(id).is_none() {
            return Err(Error::Parameter(format!("unknown criterion {id}")));
        }
    }
    let selected = PRIMARY
        .iter()
        .filter(|(id, _)| args.only.is_empty() || args.only.iter().any(|o| o.eq_ignore_ascii_case(id)));
    let mut outcomes: Vec<AcOutcome> = Vec::new();
    let mut all = true;
    for (id, run) in selected {
        info!("running {id}");
        let o = match run(seed) {
            Ok(o) => o,
            Err(e) => {
                eprintln!("{id} FAIL error: {e}");
                all = false;
                continue;
            }
        };
        all &= o.pass;
        eprintln!("{}", o.line());
        outcomes.push(o);
    }
    match cli.format {
        Format::Json => emit(&serde_json::to_string_pretty(
            &json!({"seed": seed, "pass": all, "criteria": outcomes}),
        )?)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["id", "pass", "seconds", "budget_seconds", "summary"])?;
            for o in &outcomes {
                w.write_record([
                    o.id.to_string(),
                    o.pass.to_string(),
                    format!("{:.3}", o.seconds),
                    o.budget_seconds.to_string(),
                    o.summary.clone(),
                ])?;
            }
            emit(String::from_utf8_lossy(&csv_bytes(w)?).trim_end())?;
        }
    }
    Ok(all)
}
