//! Repeated-sampling study: simulate quantal data from a known curve, run the
//! full pipeline with objective priors and summarize the BMDLs against the
//! true benchmark dose.

use std::fmt;
use std::str::FromStr;

use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::QuantalDataset;
use crate::error::{Error, Result};
use crate::models::{ModelId, ReparamCurve, ThetaVector};
use crate::pipeline::{analyze, AnalysisConfig, PriorsInput};
use crate::sampler::{rng_for, Stream};

/// The two dose-response patterns: `R(0), R(1/2), R(1)` of
/// (0.05, 0.30, 0.50) and (0.10, 0.50, 0.90).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pattern {
    #[serde(rename = "P-I")]
    PI,
    #[serde(rename = "P-II")]
    PII,
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pattern::PI => "P-I",
            Pattern::PII => "P-II",
        })
    }
}

impl FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('_', "-").as_str() {
            "P-I" | "PI" => Ok(Pattern::PI),
            "P-II" | "PII" => Ok(Pattern::PII),
            _ => Err(Error::Config(format!(
                "unknown configuration `{s}`, expected P-I or P-II"
            ))),
        }
    }
}

const XI_PI: [f64; 8] = [
    0.3974, 0.3567, 0.1642, 0.4052, 0.1783, 0.2083, 0.2267, 0.1852,
];
const XI_PII: [f64; 8] = [
    0.1700, 0.1575, 0.0480, 0.2190, 0.1925, 0.2760, 0.2794, 0.2025,
];

/// Generating parameters for `model` under `pattern` at BMR 0.10 (doses scaled to `[0, 1]`).
pub fn generating_theta(model: ModelId, pattern: Pattern) -> ThetaVector {
    let (xi, g0, g1) = match pattern {
        Pattern::PI => (XI_PI[model.index()], 0.05, 0.50),
        Pattern::PII => (XI_PII[model.index()], 0.10, 0.90),
    };
    if model.n_params() == 3 {
        ThetaVector::three(xi, g0, g1)
    } else {
        ThetaVector::two(xi, g0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub generating_model: ModelId,
    pub pattern: Pattern,
    pub per_dose_n: u64,
    pub replicates: usize,
    pub doses: Vec<f64>,
    pub seed: u64,
    pub iterations: usize,
    pub bmr: f64,
}

impl SimConfig {
    /// Desk-scale defaults: 200 replicates of 20,000 iterations.
    pub fn new(generating_model: ModelId, pattern: Pattern, per_dose_n: u64) -> Self {
        Self {
            generating_model,
            pattern,
            per_dose_n,
            replicates: 200,
            doses: vec![0.0, 0.25, 0.5, 1.0],
            seed: 0,
            iterations: 20_000,
            bmr: 0.10,
        }
    }

    /// The full-scale study: 2,000 replicates of 100,000 iterations.
    pub fn full_scale(mut self) -> Self {
        self.replicates = 2000;
        self.iterations = 100_000;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config("at least one replicate is required".into()));
        }
        if self.per_dose_n == 0 {
            return Err(Error::Config(
                "per-dose sample size must be positive".into(),
            ));
        }
        if self.doses.len() < 2 || self.doses[0] != 0.0 || self.doses.last() != Some(&1.0) {
            return Err(Error::Config(
                "simulation doses must run from 0 to 1".into(),
            ));
        }
        Ok(())
    }

    pub fn true_xi(&self) -> f64 {
        generating_theta(self.generating_model, self.pattern).xi
    }

    /// Risk at each design dose under the generating curve.
    pub fn true_risks(&self) -> Result<Vec<f64>> {
        let curve = ReparamCurve::new(
            self.generating_model,
            &generating_theta(self.generating_model, self.pattern),
            self.bmr,
            1.0,
        )?;
        Ok(self.doses.iter().map(|&d| curve.risk(d)).collect())
    }

    fn replicate_seed(&self, r: usize) -> u64 {
        self.seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(r as u64)
    }

    /// Responder counts for replicate `r`; reproducible from the seed.
    pub fn generate(&self, r: usize) -> Result<Vec<u64>> {
        let mut rng = rng_for(self.replicate_seed(r), Stream::Data);
        self.true_risks()?
            .into_iter()
            .map(|p| {
                let dist =
                    Binomial::new(self.per_dose_n, p).map_err(|e| Error::Domain(e.to_string()))?;
                Ok(dist.sample(&mut rng))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ReplicateOutcome {
    Ok {
        /// Per-model BMDLs; `None` for a model excluded by algorithm failure.
        model_bmdl: Vec<(ModelId, Option<f64>)>,
        bma_bmdl: f64,
    },
    DataFailure {
        s_max: f64,
    },
    AlgorithmFailure {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRow {
    pub replicate: usize,
    pub responders: Vec<u64>,
    pub outcome: ReplicateOutcome,
}

/// Coverage and modified-boxplot statistics for one estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub estimator: String,
    pub count: usize,
    /// Fraction of BMDLs strictly below the true `ξ`.
    pub coverage: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub p95: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimReport {
    pub config: SimConfig,
    pub true_xi: f64,
    pub replicates: Vec<ReplicateRow>,
    pub summaries: Vec<EstimatorSummary>,
    pub data_failures: usize,
    pub algorithm_failures: usize,
}

impl SimReport {
    pub fn summary(&self, estimator: &str) -> Option<&EstimatorSummary> {
        self.summaries.iter().find(|s| s.estimator == estimator)
    }
}

/// Linear-interpolation sample quantile (type 7).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn summarize(name: String, mut values: Vec<f64>, true_xi: f64) -> Option<EstimatorSummary> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    Some(EstimatorSummary {
        estimator: name,
        count: values.len(),
        coverage: values.iter().filter(|&&v| v < true_xi).count() as f64 / values.len() as f64,
        q1: quantile(&values, 0.25),
        median: quantile(&values, 0.5),
        q3: quantile(&values, 0.75),
        p95: quantile(&values, 0.95),
    })
}

pub fn run_replicate(config: &SimConfig, r: usize) -> Result<ReplicateRow> {
    let responders = config.generate(r)?;
    let n = vec![config.per_dose_n; config.doses.len()];
    let data = QuantalDataset::new(&config.doses, &responders, &n)?;
    let analysis = AnalysisConfig {
        bmr: config.bmr,
        iterations: config.iterations,
        seed: config.replicate_seed(r),
        priors: PriorsInput::default(),
        ..AnalysisConfig::default()
    };
    let outcome = match analyze(&data, &analysis) {
        Ok(rep) => ReplicateOutcome::Ok {
            model_bmdl: ModelId::ALL
                .iter()
                .map(|&m| (m, rep.row(m).map(|row| row.bmdl)))
                .collect(),
            bma_bmdl: rep.bma.bmdl,
        },
        Err(Error::DataFailure { s_max }) => ReplicateOutcome::DataFailure { s_max },
        Err(Error::DegenerateBackground) => ReplicateOutcome::DataFailure { s_max: f64::NAN },
        Err(e @ (Error::NoValidModel | Error::AlgorithmFailure { .. })) => {
            ReplicateOutcome::AlgorithmFailure {
                reason: e.to_string(),
            }
        }
        Err(e) => return Err(e),
    };
    Ok(ReplicateRow {
        replicate: r,
        responders,
        outcome,
    })
}

pub fn simulate(config: &SimConfig) -> Result<SimReport> {
    config.validate()?;
    let rows: Vec<ReplicateRow> = (0..config.replicates)
        .into_par_iter()
        .map(|r| run_replicate(config, r))
        .collect::<Result<_>>()?;
    let true_xi = config.true_xi();
    let mut summaries = Vec::new();
    for m in ModelId::ALL {
        let vals: Vec<f64> = rows
            .iter()
            .filter_map(|row| match &row.outcome {
                ReplicateOutcome::Ok { model_bmdl, .. } => model_bmdl[m.index()].1,
                _ => None,
            })
            .collect();
        summaries.extend(summarize(m.code().to_string(), vals, true_xi));
    }
    let bma: Vec<f64> = rows
        .iter()
        .filter_map(|row| match &row.outcome {
            ReplicateOutcome::Ok { bma_bmdl, .. } => Some(*bma_bmdl),
            _ => None,
        })
        .collect();
    summaries.extend(summarize("BMA".into(), bma, true_xi));
    let data_failures = rows
        .iter()
        .filter(|r| matches!(r.outcome, ReplicateOutcome::DataFailure { .. }))
        .count();
    let algorithm_failures = rows
        .iter()
        .filter(|r| matches!(r.outcome, ReplicateOutcome::AlgorithmFailure { .. }))
        .count();
    Ok(SimReport {
        config: config.clone(),
        true_xi,
        replicates: rows,
        summaries,
        data_failures,
        algorithm_failures,
    })
}
