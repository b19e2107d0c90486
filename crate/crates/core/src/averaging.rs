//! Marginal likelihoods by geometric bridge sampling, posterior model
//! probabilities and model-averaged BMD/BMDL.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::diagnostics::DiagnosticReport;
use crate::error::{Error, Result};
use crate::models::{ModelId, ThetaVector, LOG_ZERO};
use crate::sampler::{Chain, LogDensity};
use crate::special::log_sum_exp;

/// Multivariate normal fitted to a sample, used as the bridge density `g`.
#[derive(Debug, Clone)]
pub struct FittedNormal {
    mean: DVector<f64>,
    chol: DMatrix<f64>,
    log_norm: f64,
}

impl FittedNormal {
    /// Empirical mean and covariance of row-major `draws`, regularized by `1e-10·I`.
    pub fn fit(draws: &[f64], dim: usize) -> Result<Self> {
        let n = draws.len() / dim;
        if n < 2 {
            return Err(Error::Domain(
                "need at least two draws to fit a normal".into(),
            ));
        }
        let mut mean = DVector::<f64>::zeros(dim);
        for row in draws.chunks(dim) {
            for j in 0..dim {
                mean[j] += row[j];
            }
        }
        mean /= n as f64;
        let mut cov = DMatrix::<f64>::zeros(dim, dim);
        for row in draws.chunks(dim) {
            for i in 0..dim {
                for j in 0..=i {
                    cov[(i, j)] += (row[i] - mean[i]) * (row[j] - mean[j]);
                }
            }
        }
        for i in 0..dim {
            for j in 0..=i {
                cov[(i, j)] /= (n - 1) as f64;
                cov[(j, i)] = cov[(i, j)];
            }
            cov[(i, i)] += 1e-10;
        }
        let chol = cov
            .cholesky()
            .ok_or_else(|| Error::Singular("bridge covariance is not positive definite".into()))?
            .l();
        let log_det: f64 = (0..dim).map(|i| 2.0 * chol[(i, i)].ln()).sum();
        let log_norm = -0.5 * (dim as f64 * (2.0 * std::f64::consts::PI).ln() + log_det);
        Ok(Self {
            mean,
            chol,
            log_norm,
        })
    }

    pub fn ln_pdf(&self, x: &[f64]) -> f64 {
        let d = DVector::from_iterator(x.len(), x.iter().zip(self.mean.iter()).map(|(a, m)| a - m));
        let w = self
            .chol
            .solve_lower_triangular(&d)
            .expect("cholesky factor has a positive diagonal");
        self.log_norm - 0.5 * w.norm_squared()
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let dim = self.mean.len();
        let z = DVector::from_iterator(dim, (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)));
        (&self.mean + &self.chol * z).iter().copied().collect()
    }
}

/// Geometric-bridge estimate of `log m(Y)` from row-major posterior draws,
/// drawing as many points from the fitted normal as there are posterior draws.
pub fn bridge_marginal<T: LogDensity + ?Sized>(
    target: &T,
    draws: &[f64],
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let dim = target.dim();
    let n = draws.len() / dim;
    let g = FittedNormal::fit(draws, dim)?;

    let num: Vec<f64> = (0..n)
        .map(|_| {
            let x = g.sample(rng);
            let lp = target.log_density(&x);
            if lp == LOG_ZERO || lp.is_nan() {
                LOG_ZERO
            } else {
                0.5 * (lp - g.ln_pdf(&x))
            }
        })
        .collect();
    let log_num = log_sum_exp(&num);
    if log_num == LOG_ZERO {
        return Err(Error::BridgeDegenerate);
    }
    let den: Vec<f64> = draws
        .chunks(dim)
        .map(|x| {
            let lp = target.log_density(x);
            0.5 * (g.ln_pdf(x) - lp)
        })
        .collect();
    if den.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
        return Err(Error::Domain(
            "posterior draw with zero density passed to bridge sampling".into(),
        ));
    }
    let ln_n = (n as f64).ln();
    Ok((log_num - ln_n) - (log_sum_exp(&den) - ln_n))
}

/// `w_q ∝ m_q P(M_q)`, normalized in log space. `prior_probs` defaults to uniform.
pub fn posterior_model_probs(
    log_marginals: &[f64],
    prior_probs: Option<&[f64]>,
) -> Result<Vec<f64>> {
    let q = log_marginals.len();
    if q == 0 {
        return Err(Error::NoValidModel);
    }
    let logs: Vec<f64> = match prior_probs {
        Some(p) => {
            if p.len() != q || p.iter().any(|&v| !(v >= 0.0)) {
                return Err(Error::Domain(
                    "prior model probabilities must be nonnegative, one per model".into(),
                ));
            }
            log_marginals
                .iter()
                .zip(p)
                .map(|(m, pr)| m + pr.ln())
                .collect()
        }
        None => log_marginals.to_vec(),
    };
    let total = log_sum_exp(&logs);
    if total == LOG_ZERO || total.is_nan() {
        return Err(Error::NoValidModel);
    }
    Ok(logs.iter().map(|l| (l - total).exp()).collect())
}

pub fn bma_point_estimate(means: &[f64], weights: &[f64]) -> f64 {
    means.iter().zip(weights).map(|(m, w)| m * w).sum()
}

/// Mixture of per-model empirical cdfs over sorted samples.
#[derive(Debug, Clone)]
pub struct MixtureCdf {
    sorted: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl MixtureCdf {
    pub fn new(samples: &[&[f64]], weights: &[f64]) -> Self {
        let sorted = samples
            .iter()
            .map(|s| {
                let mut v = s.to_vec();
                v.sort_by(f64::total_cmp);
                v
            })
            .collect();
        Self {
            sorted,
            weights: weights.to_vec(),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.sorted
            .iter()
            .zip(&self.weights)
            .map(|(s, w)| w * s.partition_point(|&v| v <= x) as f64 / s.len() as f64)
            .sum()
    }

    fn pooled_min_max(&self) -> (f64, f64) {
        let lo = self
            .sorted
            .iter()
            .filter_map(|s| s.first())
            .copied()
            .fold(f64::INFINITY, f64::min);
        let hi = self
            .sorted
            .iter()
            .filter_map(|s| s.last())
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }
}

/// Infimum of `{x : F(x) ≥ level}` for the mixture cdf `F`. Bisection narrows
/// the bracket below `2^-13`, then the crossing is resolved to the exact
/// pooled draw.
pub fn bma_bmdl(samples: &[&[f64]], weights: &[f64], level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!(
            "level must lie in (0, 1), got {level}"
        )));
    }
    if samples.is_empty() || samples.iter().any(|s| s.is_empty()) || samples.len() != weights.len()
    {
        return Err(Error::Domain(
            "every included model needs draws and a weight".into(),
        ));
    }
    let mix = MixtureCdf::new(samples, weights);
    let (mut lo, mut hi) = mix.pooled_min_max();
    if mix.cdf(lo) >= level {
        return Ok(lo);
    }
    // Invariant: F(lo) < level ≤ F(hi).
    let tol = 2f64.powi(-13);
    while hi - lo >= tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mix.cdf(mid) >= level {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let root = mix
        .sorted
        .iter()
        .flat_map(|s| {
            let start = s.partition_point(|&v| v <= lo);
            let end = s.partition_point(|&v| v <= hi);
            s[start..end].iter().copied()
        })
        .filter(|&x| mix.cdf(x) >= level)
        .fold(f64::INFINITY, f64::min);
    Ok(root)
}

/// Lower-tail order statistic `x_(⌊(1 − credible)·n⌋)` (1-based, at least the first).
pub fn lower_order_statistic(values: &[f64], credible_level: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = (((1.0 - credible_level) * v.len() as f64) + 1e-9).floor() as usize;
    v[rank.max(1) - 1]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelPosterior {
    pub model: ModelId,
    #[serde(skip)]
    pub retained_draws: Vec<ThetaVector>,
    /// Posterior mean of `ξ`, scaled dose.
    pub bmd_mean: f64,
    /// Lower order statistic of the retained `ξ`, scaled dose.
    pub bmdl: f64,
    pub log_marginal: f64,
    pub acceptance_rate: f64,
    pub diagnostic: DiagnosticReport,
}

impl ModelPosterior {
    pub fn xi_draws(&self) -> Vec<f64> {
        self.retained_draws.iter().map(|t| t.xi).collect()
    }
}

/// Drops the burn-in, summarizes `ξ` and attaches the bridge estimate.
pub fn model_posterior_summary<T: LogDensity + ?Sized>(
    chain: &Chain,
    report: &DiagnosticReport,
    target: &T,
    credible_level: f64,
    bridge_rng: &mut ChaCha8Rng,
) -> Result<ModelPosterior> {
    if !report.passed() {
        return Err(Error::AlgorithmFailure {
            model: chain.model,
            restarts: report.restarts_used,
        });
    }
    let retained: Vec<ThetaVector> = chain.draws[report.burn_in_index - 1..].to_vec();
    let xi: Vec<f64> = retained.iter().map(|t| t.xi).collect();
    let bmd_mean = xi.iter().sum::<f64>() / xi.len() as f64;
    let bmdl = lower_order_statistic(&xi, credible_level);
    let dim = chain.dim();
    let flat: Vec<f64> = retained
        .iter()
        .flat_map(|t| t.to_array()[..dim].to_vec())
        .collect();
    let log_marginal = bridge_marginal(target, &flat, bridge_rng)?;
    Ok(ModelPosterior {
        model: chain.model,
        retained_draws: retained,
        bmd_mean,
        bmdl,
        log_marginal,
        acceptance_rate: chain.acceptance_rate(),
        diagnostic: report.clone(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Exclusion {
    pub model: ModelId,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BmaReport {
    pub per_model: Vec<ModelPosterior>,
    pub weights: Vec<f64>,
    /// Scaled dose.
    pub bma_bmd: f64,
    /// Scaled dose.
    pub bma_bmdl: f64,
    pub dose_scale: f64,
    pub bmr: f64,
    pub credible_level: f64,
    pub exclusions: Vec<Exclusion>,
}

impl BmaReport {
    pub fn weight_of(&self, model: ModelId) -> Option<f64> {
        self.per_model
            .iter()
            .position(|p| p.model == model)
            .map(|i| self.weights[i])
    }
}

/// Combines surviving model posteriors with uniform prior model probabilities.
pub fn average(
    per_model: Vec<ModelPosterior>,
    exclusions: Vec<Exclusion>,
    credible_level: f64,
    dose_scale: f64,
    bmr: f64,
) -> Result<BmaReport> {
    let lm: Vec<f64> = per_model.iter().map(|p| p.log_marginal).collect();
    let weights = posterior_model_probs(&lm, None)?;
    let means: Vec<f64> = per_model.iter().map(|p| p.bmd_mean).collect();
    let bma_bmd = bma_point_estimate(&means, &weights);
    let xi: Vec<Vec<f64>> = per_model.iter().map(|p| p.xi_draws()).collect();
    let refs: Vec<&[f64]> = xi.iter().map(|v| v.as_slice()).collect();
    let bma_bmdl = bma_bmdl(&refs, &weights, 1.0 - credible_level)?;
    Ok(BmaReport {
        per_model,
        weights,
        bma_bmd,
        bma_bmdl,
        dose_scale,
        bmr,
        credible_level,
        exclusions,
    })
}
