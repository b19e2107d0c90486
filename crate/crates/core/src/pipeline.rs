//! End-to-end analysis: screen, sample each model with restarts, diagnose,
//! bridge-sample and average.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::averaging::{average, model_posterior_summary, BmaReport, Exclusion, ModelPosterior};
use crate::data::QuantalDataset;
use crate::diagnostics::{run_with_restarts, SpectralMethod};
use crate::error::{Error, Result};
use crate::models::{Benchmark, ModelId};
use crate::priors::{
    elicit_beta, elicit_inverse_gamma, objective_priors, BetaLaw, ElicitedQuartiles, InverseGamma,
    PriorSpec,
};
use crate::sampler::{derive_seed, rng_for, run_chain, AmConfig, PosteriorTarget, Stream};
use crate::screen::{screen, ScreenResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Objective,
}

/// Prior on `ξ` as given in a priors file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum XiPriorInput {
    Hyper { alpha: f64, beta: f64 },
    Quartiles { q1: f64, q2: f64 },
    Objective(Objective),
}

/// Prior on a probability parameter as given in a priors file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProbPriorInput {
    Hyper { a: f64, b: f64 },
    Quartiles { q1: f64, q2: f64 },
    Objective(Objective),
}

impl Default for XiPriorInput {
    fn default() -> Self {
        XiPriorInput::Objective(Objective::Objective)
    }
}

impl Default for ProbPriorInput {
    fn default() -> Self {
        ProbPriorInput::Objective(Objective::Objective)
    }
}

/// Priors file contents; omitted parameters get objective priors.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorsInput {
    #[serde(default)]
    pub xi: XiPriorInput,
    #[serde(default)]
    pub gamma0: ProbPriorInput,
    #[serde(default)]
    pub gamma1: ProbPriorInput,
}

impl PriorsInput {
    /// Quartile-elicited `ξ` and `γ0` priors used for the cumene analysis.
    pub fn cumene() -> Self {
        Self {
            xi: XiPriorInput::Quartiles { q1: 0.18, q2: 0.5 },
            gamma0: ProbPriorInput::Quartiles { q1: 0.04, q2: 0.08 },
            gamma1: ProbPriorInput::default(),
        }
    }

    pub fn from_json_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn resolve(&self) -> Result<PriorSpec> {
        let objective = objective_priors(3);
        let xi = match self.xi {
            XiPriorInput::Hyper { alpha, beta } => InverseGamma::new(alpha, beta)?,
            XiPriorInput::Quartiles { q1, q2 } => {
                let (alpha, beta) = elicit_inverse_gamma(ElicitedQuartiles::new(q1, q2)?)?;
                InverseGamma { alpha, beta }
            }
            XiPriorInput::Objective(_) => objective.xi,
        };
        let prob = |p: ProbPriorInput| -> Result<BetaLaw> {
            match p {
                ProbPriorInput::Hyper { a, b } => BetaLaw::new(a, b),
                ProbPriorInput::Quartiles { q1, q2 } => {
                    let (a, b) = elicit_beta(ElicitedQuartiles::for_probability(q1, q2)?)?;
                    Ok(BetaLaw { a, b })
                }
                ProbPriorInput::Objective(_) => Ok(BetaLaw::JEFFREYS),
            }
        };
        Ok(PriorSpec {
            xi,
            gamma0: prob(self.gamma0)?,
            gamma1: Some(prob(self.gamma1)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub bmr: f64,
    pub credible_level: f64,
    pub iterations: usize,
    pub seed: u64,
    pub models: Vec<ModelId>,
    pub priors: PriorsInput,
    /// 1-based dose group whose risk is `γ1`; the highest dose when absent.
    pub gamma1_dose_index: Option<usize>,
    pub spectral: SpectralMethod,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            bmr: 0.10,
            credible_level: 0.95,
            iterations: 100_000,
            seed: 0,
            models: ModelId::ALL.to_vec(),
            priors: PriorsInput::default(),
            gamma1_dose_index: None,
            spectral: SpectralMethod::Glm,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.bmr > 0.0 && self.bmr < 1.0) {
            return Err(Error::Config(format!(
                "bmr must lie in (0, 1), got {}",
                self.bmr
            )));
        }
        if !(self.credible_level > 0.0 && self.credible_level < 1.0) {
            return Err(Error::Config(format!(
                "credible level must lie in (0, 1), got {}",
                self.credible_level
            )));
        }
        if self.models.is_empty() {
            return Err(Error::Config("at least one model is required".into()));
        }
        self.am_config(0).validate()
    }

    fn am_config(&self, seed: u64) -> AmConfig {
        AmConfig::default()
            .with_iterations(self.iterations)
            .with_seed(seed)
    }

    fn benchmark(&self, data: &QuantalDataset) -> Result<Benchmark> {
        let m = data.len();
        let idx = self.gamma1_dose_index.unwrap_or(m);
        if idx < 2 || idx > m {
            return Err(Error::Config(format!(
                "gamma1 dose index must lie in 2..={m}, got {idx}"
            )));
        }
        Ok(Benchmark::with_ref_dose(self.bmr, data.doses()[idx - 1]))
    }
}

/// One row of the report, in original dose units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRow {
    pub id: ModelId,
    pub bmd: f64,
    pub bmdl: f64,
    pub weight: f64,
    pub log_marginal: f64,
    pub burn_in: usize,
    pub restarts: u32,
    pub acceptance_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BmaRow {
    pub bmd: f64,
    pub bmdl: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Failure {
    pub id: ModelId,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub config: AnalysisConfig,
    pub priors: PriorSpec,
    pub dose_scale: f64,
    pub screen: ScreenResult,
    pub models: Vec<ModelRow>,
    pub bma: BmaRow,
    pub failures: Vec<Failure>,
    #[serde(skip)]
    pub detail: Option<BmaReport>,
}

impl AnalysisReport {
    pub fn row(&self, id: ModelId) -> Option<&ModelRow> {
        self.models.iter().find(|r| r.id == id)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Aligned text table: model, BMD, BMDL, weight, then the averaged row.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<6} {:>12} {:>12} {:>9}",
            "model", "BMD", "BMDL", "weight"
        );
        for r in &self.models {
            let _ = writeln!(
                out,
                "{:<6} {:>12.4} {:>12.4} {:>9.5}",
                r.id.code(),
                r.bmd,
                r.bmdl,
                r.weight
            );
        }
        let _ = writeln!(
            out,
            "{:<6} {:>12.4} {:>12.4}",
            "BMA", self.bma.bmd, self.bma.bmdl
        );
        for f in &self.failures {
            let _ = writeln!(out, "{:<6} excluded: {}", f.id.code(), f.reason);
        }
        out
    }
}

/// Samples one model to convergence and summarizes it.
pub fn fit_model(
    data: &QuantalDataset,
    screen: &ScreenResult,
    model: ModelId,
    priors: &PriorSpec,
    bench: &Benchmark,
    config: &AnalysisConfig,
) -> Result<ModelPosterior> {
    let (chain, report) = run_with_restarts(model, config.spectral, |restart| {
        let am = config.am_config(derive_seed(config.seed, model, restart));
        run_chain(data, screen, model, priors, bench, &am)
    })?;
    let target = PosteriorTarget::new(data, model, priors, *bench);
    let mut rng = rng_for(
        derive_seed(config.seed, model, report.restarts_used),
        Stream::Bridge,
    );
    model_posterior_summary(&chain, &report, &target, config.credible_level, &mut rng)
}

/// Full pipeline. Fails with [`Error::DataFailure`] before any sampling when
/// the screen rejects the data, and with [`Error::NoValidModel`] when every
/// model fails.
pub fn analyze(data: &QuantalDataset, config: &AnalysisConfig) -> Result<AnalysisReport> {
    config.validate()?;
    let priors = config.priors.resolve()?;
    let screened = screen(data)?.into_result()?;
    let bench = config.benchmark(data)?;

    let fits: Vec<(ModelId, Result<ModelPosterior>)> = config
        .models
        .par_iter()
        .map(|&m| (m, fit_model(data, &screened, m, &priors, &bench, config)))
        .collect();

    let mut survivors = Vec::new();
    let mut exclusions = Vec::new();
    for (m, fit) in fits {
        match fit {
            Ok(p) if p.log_marginal.is_finite() => survivors.push(p),
            Ok(_) => exclusions.push(Exclusion {
                model: m,
                reason: "marginal likelihood is not finite".into(),
            }),
            Err(e) => exclusions.push(Exclusion {
                model: m,
                reason: e.to_string(),
            }),
        }
    }
    if survivors.is_empty() {
        return Err(Error::NoValidModel);
    }
    let scale = data.dose_scale();
    let bma = average(
        survivors,
        exclusions,
        config.credible_level,
        scale,
        config.bmr,
    )?;
    let models = bma
        .per_model
        .iter()
        .zip(&bma.weights)
        .map(|(p, &w)| ModelRow {
            id: p.model,
            bmd: p.bmd_mean * scale,
            bmdl: p.bmdl * scale,
            weight: w,
            log_marginal: p.log_marginal,
            burn_in: p.diagnostic.burn_in_index,
            restarts: p.diagnostic.restarts_used,
            acceptance_rate: p.acceptance_rate,
        })
        .collect();
    let failures = bma
        .exclusions
        .iter()
        .map(|e| Failure {
            id: e.model,
            reason: e.reason.clone(),
        })
        .collect();
    Ok(AnalysisReport {
        config: config.clone(),
        priors,
        dose_scale: scale,
        screen: screened,
        models,
        bma: BmaRow {
            bmd: bma.bma_bmd * scale,
            bmdl: bma.bma_bmdl * scale,
        },
        failures,
        detail: Some(bma),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn priors_file_forms() {
        let p: PriorsInput = serde_json::from_str(
            r#"{"xi": {"q1": 0.18, "q2": 0.5}, "gamma0": {"a": 1.36, "b": 12.31}, "gamma1": "objective"}"#,
        )
        .unwrap();
        assert_eq!(p.xi, XiPriorInput::Quartiles { q1: 0.18, q2: 0.5 });
        let spec = p.resolve().unwrap();
        assert!((spec.xi.alpha - 0.534_067).abs() < 1e-5);
        assert_eq!(spec.gamma0, BetaLaw { a: 1.36, b: 12.31 });
        assert_eq!(spec.gamma1, Some(BetaLaw::JEFFREYS));

        let empty: PriorsInput = serde_json::from_str("{}").unwrap();
        assert_eq!(empty.resolve().unwrap(), objective_priors(3));
        assert!(serde_json::from_str::<PriorsInput>(r#"{"delta": 1}"#).is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = AnalysisConfig::default();
        assert!(c.validate().is_ok());
        c.bmr = 1.0;
        assert!(c.validate().is_err());
        let c = AnalysisConfig {
            models: vec![],
            ..AnalysisConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn flat_data_is_a_data_failure() {
        let data = QuantalDataset::new(&[0.0, 1.0, 2.0, 4.0], &[5, 5, 5, 5], &[50; 4]).unwrap();
        let err = analyze(&data, &AnalysisConfig::default()).unwrap_err();
        assert!(matches!(err, Error::DataFailure { s_max } if s_max == 0.0));
    }
}
