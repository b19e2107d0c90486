//! Full model-averaged analysis of the cumene inhalation data with elicited priors.
//!
//! cargo run --release --example cumene_analysis [seed]

use bayes_bmd::data::cumene;
use bayes_bmd::pipeline::{analyze, AnalysisConfig, PriorsInput};

fn main() -> bayes_bmd::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1);
    let config = AnalysisConfig {
        seed,
        priors: PriorsInput::cumene(),
        ..AnalysisConfig::default()
    };
    let report = analyze(&cumene(), &config)?;
    println!("priors: {:?}\n", report.priors);
    print!("{}", report.to_table());
    for row in &report.models {
        println!(
            "{}: burn-in {} restarts {} acceptance {:.3}",
            row.id, row.burn_in, row.restarts, row.acceptance_rate
        );
    }
    Ok(())
}
