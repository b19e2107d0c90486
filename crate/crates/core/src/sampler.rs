//! Globally adaptive Metropolis with componentwise scaling.
//!
//! Proposals are `Z ~ N(0, V^½ Σ V^½)`, where `Σ` tracks the running
//! covariance of the chain and `V = diag(v)` holds per-coordinate scales that
//! are nudged toward a 0.44 single-coordinate acceptance rate. All adaptation
//! uses the decaying step `s_k = k^{-p}`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::QuantalDataset;
use crate::error::{Error, Result};
use crate::models::{
    curve_log_likelihood, support_curve, Benchmark, ModelId, ThetaVector, LOG_ZERO,
};
use crate::priors::PriorSpec;
use crate::screen::ScreenResult;

/// An unnormalized log density on `R^dim`; `LOG_ZERO` marks zero density.
pub trait LogDensity {
    fn dim(&self) -> usize;
    fn log_density(&self, x: &[f64]) -> f64;
}

impl<F: Fn(&[f64]) -> f64> LogDensity for (usize, F) {
    fn dim(&self) -> usize {
        self.0
    }
    fn log_density(&self, x: &[f64]) -> f64 {
        (self.1)(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmConfig {
    pub iterations: usize,
    pub target_acceptance: f64,
    pub step_exponent: f64,
    pub seed: u64,
    /// When false, `μ`, `Σ` and `v` stay at their initial values.
    pub adapt: bool,
}

impl Default for AmConfig {
    fn default() -> Self {
        Self {
            iterations: 100_000,
            target_acceptance: 0.44,
            step_exponent: 2.0 / 3.0,
            seed: 0,
            adapt: true,
        }
    }
}

impl AmConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations < 1000 {
            return Err(Error::Config(format!(
                "iterations must be at least 1000, got {}",
                self.iterations
            )));
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return Err(Error::Config(format!(
                "target acceptance must lie in (0, 1), got {}",
                self.target_acceptance
            )));
        }
        if !(self.step_exponent > 0.5) {
            return Err(Error::Config(format!(
                "step exponent must exceed 1/2, got {}",
                self.step_exponent
            )));
        }
        Ok(())
    }
}

/// Adaptation state after the last iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct AmState {
    pub mu: DVector<f64>,
    pub sigma: DMatrix<f64>,
    /// `log v_u`.
    pub log_scales: DVector<f64>,
    pub current: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct AmRun {
    /// Row-major `iterations × dim`.
    pub draws: Vec<f64>,
    pub log_densities: Vec<f64>,
    pub acceptance_count: usize,
    /// Mean single-coordinate acceptance probability per coordinate.
    pub component_acceptance: Vec<f64>,
    pub state: AmState,
}

impl AmRun {
    pub fn dim(&self) -> usize {
        self.state.current.len()
    }

    pub fn draw(&self, k: usize) -> &[f64] {
        let u = self.dim();
        &self.draws[k * u..(k + 1) * u]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.draws
            .iter()
            .skip(j)
            .step_by(self.dim())
            .copied()
            .collect()
    }
}

fn accept_prob(lp_new: f64, lp_old: f64) -> f64 {
    if lp_new == LOG_ZERO || lp_new.is_nan() {
        0.0
    } else {
        (lp_new - lp_old).exp().min(1.0)
    }
}

fn proposal_factor(sigma: &DMatrix<f64>, log_scales: &DVector<f64>) -> DMatrix<f64> {
    let u = sigma.nrows();
    let d = DVector::from_iterator(u, log_scales.iter().map(|l| (0.5 * l).exp()));
    let mut cov = DMatrix::from_fn(u, u, |i, j| d[i] * sigma[(i, j)] * d[j]);
    for i in 0..u {
        cov[(i, i)] += 1e-12;
    }
    match cov.clone().cholesky() {
        Some(ch) => ch.l(),
        None => DMatrix::from_fn(u, u, |i, j| {
            if i == j {
                cov[(i, i)].max(1e-12).sqrt()
            } else {
                0.0
            }
        }),
    }
}

/// Runs the sampler from `start`, which must have positive density.
pub fn run_adaptive_metropolis<T: LogDensity + ?Sized>(
    target: &T,
    start: &[f64],
    config: &AmConfig,
    rng: &mut ChaCha8Rng,
) -> AmRun {
    let u = target.dim();
    assert_eq!(start.len(), u, "start point has the wrong dimension");
    let k_total = config.iterations;
    let mut theta = start.to_vec();
    let mut lp = target.log_density(&theta);
    let mut mu = DVector::from_column_slice(start);
    let mut sigma = DMatrix::<f64>::identity(u, u);
    let mut log_scales = DVector::from_element(u, (2.38f64 * 2.38 / u as f64).ln());
    let mut draws = Vec::with_capacity(k_total * u);
    let mut lps = Vec::with_capacity(k_total);
    draws.extend_from_slice(&theta);
    lps.push(lp);
    let mut accepted = 0usize;
    let mut comp_sum = vec![0.0; u];
    let mut factor = proposal_factor(&sigma, &log_scales);
    let mut z = DVector::<f64>::zeros(u);
    let mut trial = vec![0.0; u];

    for k in 2..=k_total {
        let noise = DVector::from_iterator(u, (0..u).map(|_| rng.sample::<f64, _>(StandardNormal)));
        factor.mul_to(&noise, &mut z);
        for i in 0..u {
            trial[i] = theta[i] + z[i];
        }
        let lp_prop = target.log_density(&trial);
        let alpha = accept_prob(lp_prop, lp);
        let uniform: f64 = rng.random();

        // Single-coordinate moves from the pre-move state reuse Z's components.
        let mut comp_alpha = vec![0.0; u];
        for c in 0..u {
            trial.copy_from_slice(&theta);
            trial[c] += z[c];
            comp_alpha[c] = accept_prob(target.log_density(&trial), lp);
            comp_sum[c] += comp_alpha[c];
        }

        if uniform < alpha {
            for i in 0..u {
                theta[i] += z[i];
            }
            lp = lp_prop;
            accepted += 1;
        }
        draws.extend_from_slice(&theta);
        lps.push(lp);

        if config.adapt {
            let s = (k as f64).powf(-config.step_exponent);
            for c in 0..u {
                log_scales[c] += s * (comp_alpha[c] - config.target_acceptance);
            }
            let diff = DVector::from_iterator(u, (0..u).map(|i| theta[i] - mu[i]));
            mu += s * &diff;
            let outer = &diff * diff.transpose();
            sigma += s * (outer - &sigma);
            // Keep exact symmetry against rounding.
            for i in 0..u {
                for j in 0..i {
                    let m = 0.5 * (sigma[(i, j)] + sigma[(j, i)]);
                    sigma[(i, j)] = m;
                    sigma[(j, i)] = m;
                }
            }
            factor = proposal_factor(&sigma, &log_scales);
        }
    }
    let steps = (k_total - 1).max(1) as f64;
    AmRun {
        draws,
        log_densities: lps,
        acceptance_count: accepted,
        component_acceptance: comp_sum.into_iter().map(|s| s / steps).collect(),
        state: AmState {
            mu,
            sigma,
            log_scales,
            current: theta,
        },
    }
}

/// Unnormalized posterior of one reparameterized model. `likelihood_weight`
/// of 0 gives the prior alone.
#[derive(Debug, Clone)]
pub struct PosteriorTarget<'a> {
    pub data: &'a QuantalDataset,
    pub model: ModelId,
    pub priors: &'a PriorSpec,
    pub bench: Benchmark,
    pub likelihood_weight: f64,
}

impl<'a> PosteriorTarget<'a> {
    pub fn new(
        data: &'a QuantalDataset,
        model: ModelId,
        priors: &'a PriorSpec,
        bench: Benchmark,
    ) -> Self {
        Self {
            data,
            model,
            priors,
            bench,
            likelihood_weight: 1.0,
        }
    }

    pub fn prior_only(mut self) -> Self {
        self.likelihood_weight = 0.0;
        self
    }

    pub fn eval(&self, theta: &ThetaVector) -> f64 {
        let Some(curve) = support_curve(self.model, theta, &self.bench) else {
            return LOG_ZERO;
        };
        let lp = self.priors.log_density(theta);
        if lp == LOG_ZERO || self.likelihood_weight == 0.0 {
            return lp;
        }
        lp + self.likelihood_weight * curve_log_likelihood(self.data, &curve)
    }
}

impl LogDensity for PosteriorTarget<'_> {
    fn dim(&self) -> usize {
        self.model.n_params()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        self.eval(&ThetaVector::from_slice(x))
    }
}

/// `log f(Y|θ) + log π(θ)`, or [`LOG_ZERO`] outside the support.
pub fn log_unnormalized_posterior(
    data: &QuantalDataset,
    model: ModelId,
    theta: &ThetaVector,
    priors: &PriorSpec,
    bench: &Benchmark,
) -> f64 {
    PosteriorTarget::new(data, model, priors, *bench).eval(theta)
}

/// Shrunken empirical starting point, moved into the support if needed.
pub fn initial_theta(
    data: &QuantalDataset,
    screen: &ScreenResult,
    model: ModelId,
    bench: &Benchmark,
) -> ThetaVector {
    let shrink =
        |i: usize| (data.responders()[i] as f64 + 0.25) / (data.group_sizes()[i] as f64 + 0.5);
    let g0 = shrink(0);
    let dl = bench.ref_dose;
    if model.n_params() == 2 {
        let mut theta = ThetaVector::two(bench.bmr / screen.s_max, g0);
        for _ in 0..60 {
            if support_curve(model, &theta, bench).is_some() {
                break;
            }
            theta.xi *= 0.5;
        }
        return theta;
    }
    let mut g1 = shrink(screen.argmax_index - 1);
    if g1 <= g0 {
        g1 = (g0 + 0.01).min(0.5 * (g0 + 1.0));
    }
    let mut xi = bench.bmr / ((g1 - g0) / (1.0 - g0));
    if xi >= 0.95 * dl {
        xi = 0.9 * dl;
    }
    let mut theta = ThetaVector::three(xi, g0, g1);
    // Log-dose and two-stage curves can still be non-monotone here; shrink ξ
    // toward zero (and then widen γ1) until the implied coefficients are valid.
    for step in 0..120 {
        if support_curve(model, &theta, bench).is_some() {
            break;
        }
        if step % 2 == 0 {
            theta.xi *= 0.8;
        } else {
            let g1 = theta.gamma1.unwrap();
            theta.gamma1 = Some(g1 + 0.5 * (1.0 - g1) * 0.1);
        }
    }
    theta
}

const MODEL_SALT: [u64; 8] = [
    0x9E37_79B9_7F4A_7C15,
    0xBF58_476D_1CE4_E5B9,
    0x94D0_49BB_1331_11EB,
    0xD6E8_FEB8_6659_FD93,
    0xA076_1D64_78BD_642F,
    0xE703_7ED1_A0B4_28DB,
    0x8EBC_6AF0_9C88_C6E3,
    0x5899_65CC_7537_4CC3,
];

/// What a generator is used for; each gets its own ChaCha stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Chain = 0,
    Bridge = 1,
    Data = 2,
}

/// Per-model, per-restart seed: `seed ⊕ salt(model)` advanced by the restart counter.
pub fn derive_seed(seed: u64, model: ModelId, restart: u32) -> u64 {
    (seed ^ MODEL_SALT[model.index()]).wrapping_add(restart as u64)
}

pub fn rng_for(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

#[derive(Debug, Clone)]
pub struct Chain {
    pub model: ModelId,
    pub seed: u64,
    pub draws: Vec<ThetaVector>,
    pub log_posteriors: Vec<f64>,
    pub acceptance_count: usize,
    pub component_acceptance: Vec<f64>,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.acceptance_count as f64 / (self.len().saturating_sub(1)).max(1) as f64
    }

    /// Values of one coordinate (0 = ξ, 1 = γ0, 2 = γ1).
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.draws.iter().map(|t| t.to_array()[j]).collect()
    }

    pub fn dim(&self) -> usize {
        self.model.n_params()
    }
}

/// Runs one chain for `model`, using `config.seed` as the (already derived) chain seed.
pub fn run_chain(
    data: &QuantalDataset,
    screen: &ScreenResult,
    model: ModelId,
    priors: &PriorSpec,
    bench: &Benchmark,
    config: &AmConfig,
) -> Result<Chain> {
    config.validate()?;
    let target = PosteriorTarget::new(data, model, priors, *bench);
    run_chain_on(&target, initial_theta(data, screen, model, bench), config)
}

pub fn run_chain_on(
    target: &PosteriorTarget<'_>,
    start: ThetaVector,
    config: &AmConfig,
) -> Result<Chain> {
    if target.eval(&start) == LOG_ZERO {
        return Err(Error::Validity {
            model: target.model,
            reason: "starting point has zero posterior density".into(),
        });
    }
    let mut rng = rng_for(config.seed, Stream::Chain);
    let run = run_adaptive_metropolis(target, &start.to_array()[..target.dim()], config, &mut rng);
    let draws = run
        .draws
        .chunks(run.dim())
        .map(ThetaVector::from_slice)
        .collect();
    Ok(Chain {
        model: target.model,
        seed: config.seed,
        draws,
        log_posteriors: run.log_densities,
        acceptance_count: run.acceptance_count,
        component_acceptance: run.component_acceptance,
    })
}
