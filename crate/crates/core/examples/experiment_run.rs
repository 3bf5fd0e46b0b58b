//! Experiments from JSON: the config the CLI reads, run in-process.

use interactive_dp::experiment::{cmd_run, ExperimentConfig};

fn main() -> interactive_dp::Result<()> {
    let cfg = ExperimentConfig::from_json(
        r#"{
            "model": "adaptive",
            "mechanism": {"name": "adaptive_thresholds", "alpha": 0.2, "beta": 0.1, "epsilon": 1.0, "delta": 1e-6},
            "adversary": {"name": "random_thresholds"},
            "dataset": {"kind": "uniform_reals", "n": 30000},
            "k": 500, "trials": 4, "seed": 9
        }"#,
    )?;
    let report = cmd_run(&cfg)?;
    for a in &report.aggregates {
        println!(
            "{:>10}: {:.4} +- {:.4} ({}, {} trials)",
            a.name, a.mean, a.half_width, a.interval, a.trials
        );
    }
    Ok(())
}
