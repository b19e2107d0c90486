use std::path::PathBuf;
use std::process::ExitCode;

use bayes_bmd::pipeline::{analyze, AnalysisConfig, PriorsInput};
use bayes_bmd::priors::{
    elicit_beta, elicit_inverse_gamma, BetaLaw, ElicitedQuartiles, InverseGamma,
};
use bayes_bmd::simulate::{simulate, Pattern, SimConfig};
use bayes_bmd::{Error, ModelId, QuantalDataset};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

/// Bayesian model-averaged benchmark dose analysis for quantal data.
#[derive(Parser)]
#[command(name = "bmd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 0.10)]
    bmr: f64,
    /// MCMC iterations per chain [default: 100000 for analyze, 20000 for simulate]
    #[arg(long, global = true)]
    iterations: Option<usize>,
    /// Write the JSON report here.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit all models to a CSV dataset (`dose,responders,n`) and average them.
    Analyze {
        dataset: PathBuf,
        /// `objective` or a JSON priors file.
        #[arg(long, default_value = "objective")]
        priors: String,
        /// Comma-separated model codes, e.g. `M3,M6`.
        #[arg(long, value_delimiter = ',')]
        models: Option<Vec<ModelId>>,
        /// Print JSON instead of the table.
        #[arg(long)]
        json: bool,
    },
    /// Solve prior hyperparameters from a lower quartile and median.
    Elicit {
        #[arg(value_enum)]
        distribution: Family,
        q1: f64,
        q2: f64,
    },
    /// Repeated-sampling study under a known generating curve.
    Simulate {
        #[arg(long)]
        model: ModelId,
        #[arg(long, default_value = "P-I")]
        config: Pattern,
        #[arg(long, default_value_t = 50)]
        n: u64,
        #[arg(long, default_value_t = 200)]
        replicates: usize,
        /// 2000 replicates of 100000 iterations.
        #[arg(long)]
        full_scale: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Ig,
    Beta,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::DataFailure { .. } | Error::DegenerateBackground => 3,
        Error::NoValidModel | Error::AlgorithmFailure { .. } => 4,
        Error::Io(_) => 5,
        _ => 1,
    }
}

fn write_out(path: &Option<PathBuf>, value: &impl serde::Serialize) -> Result<(), Error> {
    if let Some(p) = path {
        std::fs::write(p, serde_json::to_string_pretty(value)?)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Analyze {
            dataset,
            priors,
            models,
            json,
        } => {
            let data = QuantalDataset::from_csv_path(&dataset)?;
            let priors = if priors == "objective" {
                PriorsInput::default()
            } else {
                PriorsInput::from_json_path(&priors)?
            };
            let config = AnalysisConfig {
                bmr: cli.bmr,
                seed: cli.seed,
                iterations: cli.iterations.unwrap_or(100_000),
                models: models.unwrap_or_else(|| ModelId::ALL.to_vec()),
                priors,
                ..AnalysisConfig::default()
            };
            let report = analyze(&data, &config)?;
            write_out(&cli.out, &report)?;
            if json {
                println!("{}", report.to_json()?);
            } else {
                print!("{}", report.to_table());
            }
        }
        Command::Elicit {
            distribution,
            q1,
            q2,
        } => {
            let (name, a, b, residual) = match distribution {
                Family::Ig => {
                    let (a, b) = elicit_inverse_gamma(ElicitedQuartiles::new(q1, q2)?)?;
                    let law = InverseGamma { alpha: a, beta: b };
                    ("inverse-gamma", a, b, half_norm(law.cdf(q1), law.cdf(q2)))
                }
                Family::Beta => {
                    let (a, b) = elicit_beta(ElicitedQuartiles::for_probability(q1, q2)?)?;
                    let law = BetaLaw { a, b };
                    ("beta", a, b, half_norm(law.cdf(q1), law.cdf(q2)))
                }
            };
            let value = json!({ "distribution": name, "q1": q1, "q2": q2, "params": [a, b], "residual": residual });
            write_out(&cli.out, &value)?;
            println!("{name}({a:.6}, {b:.6})  half squared residual {residual:.3e}");
        }
        Command::Simulate {
            model,
            config,
            n,
            replicates,
            full_scale,
        } => {
            let mut sim = SimConfig::new(model, config, n);
            sim.replicates = replicates;
            sim.seed = cli.seed;
            sim.bmr = cli.bmr;
            if full_scale {
                sim = sim.full_scale();
            }
            if let Some(k) = cli.iterations {
                sim.iterations = k;
            }
            eprintln!(
                "simulating {} replicates from {model} {config}, N = {n}, true BMD {}",
                sim.replicates,
                sim.true_xi()
            );
            let report = simulate(&sim)?;
            write_out(&cli.out, &report)?;
            println!(
                "{:<9} {:>5} {:>9} {:>9} {:>9} {:>9} {:>9}",
                "estimator", "n", "coverage", "q1", "median", "q3", "p95"
            );
            for s in &report.summaries {
                println!(
                    "{:<9} {:>5} {:>9.3} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
                    s.estimator, s.count, s.coverage, s.q1, s.median, s.q3, s.p95
                );
            }
            println!(
                "data failures {}, algorithm failures {}",
                report.data_failures, report.algorithm_failures
            );
        }
    }
    Ok(())
}

fn half_norm(c1: f64, c2: f64) -> f64 {
    0.5 * ((c1 - 0.25).powi(2) + (c2 - 0.5).powi(2))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
