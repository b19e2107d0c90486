//! A small repeated-sampling study: BMDL coverage and spread per estimator.
//!
//! cargo run --release --example simulation_study

use bayes_bmd::simulate::{simulate, Pattern, SimConfig};
use bayes_bmd::ModelId;

fn main() -> bayes_bmd::Result<()> {
    let mut config = SimConfig::new(ModelId::LogProbit, Pattern::PII, 50);
    config.replicates = 40;
    config.iterations = 10_000;
    let report = simulate(&config)?;
    println!(
        "generating {} {}, true BMD {}",
        config.generating_model, config.pattern, report.true_xi
    );
    println!(
        "{:<5} {:>5} {:>9} {:>8} {:>8} {:>8}",
        "", "n", "coverage", "q1", "median", "p95"
    );
    for s in &report.summaries {
        println!(
            "{:<5} {:>5} {:>9.3} {:>8.4} {:>8.4} {:>8.4}",
            s.estimator, s.count, s.coverage, s.q1, s.median, s.p95
        );
    }
    println!(
        "data failures {}, algorithm failures {}",
        report.data_failures, report.algorithm_failures
    );
    Ok(())
}
