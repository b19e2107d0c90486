//! Burn-in selection by bifurcated Geweke-style Z tests.
//!
//! The chain is cut into an early block (first 10%, 20% or 30%) and the final
//! 50%. For each block we compare coordinate means and pairwise covariances;
//! standard errors come from the spectral density at frequency zero.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::ModelId;
use crate::sampler::Chain;

const Z_CRIT: f64 = 1.96;
const MAX_RESTARTS: u32 = 5;
const NAMES: [&str; 3] = ["xi", "gamma0", "gamma1"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SpectralMethod {
    /// Periodogram regression, falling back to AR when the fit fails.
    #[default]
    Glm,
    Ar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    #[serde(rename = "10%")]
    Ten,
    #[serde(rename = "20%")]
    Twenty,
    #[serde(rename = "30%")]
    Thirty,
    #[serde(rename = "failed")]
    Failed,
}

impl Stage {
    pub const TESTED: [Stage; 3] = [Stage::Ten, Stage::Twenty, Stage::Thirty];

    /// Early-block length as a fraction of the chain, in tenths.
    fn tenths(self) -> usize {
        match self {
            Stage::Ten => 1,
            Stage::Twenty => 2,
            Stage::Thirty => 3,
            Stage::Failed => 0,
        }
    }

    /// 1-based index of the first retained draw if this stage passes.
    pub fn burn_in_index(self, k: usize) -> usize {
        self.tenths() * k / 10 + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureZ {
    pub measure: String,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageOutcome {
    pub stage: Stage,
    pub passed: bool,
    pub z: Vec<MeasureZ>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    /// 1-based index `K0` of the first retained draw.
    pub burn_in_index: usize,
    pub stage_passed: Stage,
    pub stages: Vec<StageOutcome>,
    pub restarts_used: u32,
}

impl DiagnosticReport {
    pub fn passed(&self) -> bool {
        self.stage_passed != Stage::Failed
    }

    /// `K* = K − K0 + 1`.
    pub fn retained(&self, k: usize) -> usize {
        k + 1 - self.burn_in_index
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn check_series(x: &[f64]) -> Result<f64> {
    if x.len() < 2 || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateSeries(format!(
            "series of length {} is unusable",
            x.len()
        )));
    }
    let m = mean(x);
    let var = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64;
    if !(var > 0.0) {
        return Err(Error::DegenerateSeries("series has zero variance".into()));
    }
    Ok(m)
}

/// Long-run variance from an autoregressive fit (Yule–Walker, order by AIC).
pub fn spectral_density_zero_ar(series: &[f64]) -> Result<f64> {
    let m = check_series(series)?;
    let n = series.len();
    let max_order = 30.min(n / 10);
    let x: Vec<f64> = series.iter().map(|v| v - m).collect();
    let acov: Vec<f64> = (0..=max_order)
        .map(|h| {
            x[..n - h]
                .iter()
                .zip(&x[h..])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / n as f64
        })
        .collect();

    // Levinson–Durbin, keeping the best AIC order's coefficients.
    let mut phi: Vec<f64> = Vec::new();
    let mut sigma2 = acov[0];
    let mut best = (n as f64 * sigma2.ln(), sigma2, 0.0);
    for p in 1..=max_order {
        let acc: f64 = (0..p - 1).map(|j| phi[j] * acov[p - 1 - j]).sum();
        let kappa = (acov[p] - acc) / sigma2;
        let mut next = vec![0.0; p];
        for j in 0..p - 1 {
            next[j] = phi[j] - kappa * phi[p - 2 - j];
        }
        next[p - 1] = kappa;
        phi = next;
        sigma2 *= 1.0 - kappa * kappa;
        if !(sigma2 > 0.0) {
            break;
        }
        let aic = n as f64 * sigma2.ln() + 2.0 * p as f64;
        if aic < best.0 {
            best = (aic, sigma2, phi.iter().sum());
        }
    }
    let (_, s2, phi_sum) = best;
    let s0 = s2 / (1.0 - phi_sum).powi(2);
    if s0.is_finite() && s0 > 0.0 {
        Ok(s0)
    } else {
        Err(Error::DegenerateSeries(
            "autoregressive fit is non-stationary".into(),
        ))
    }
}

/// Periodogram ordinates `|Σ x_t e^{-2πijt/L}|²/L` for `j = 1..=count`.
fn periodogram(x: &[f64], count: usize) -> Vec<f64> {
    let n = x.len();
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    (1..=count).map(|j| buf[j].norm_sqr() / n as f64).collect()
}

/// Gamma-family log-link fit `log E[I_j] = a + b f_j` to the lowest `⌈√L⌉`
/// periodogram ordinates; returns `exp(a)`. Errors if the fit breaks down.
pub fn spectral_density_zero_glm_only(series: &[f64]) -> Result<f64> {
    let m = check_series(series)?;
    let n = series.len();
    let count = ((n as f64).sqrt().ceil() as usize).min(n / 2);
    if count < 3 {
        return Err(Error::DegenerateSeries(format!(
            "series of length {n} is too short for a periodogram fit"
        )));
    }
    let x: Vec<f64> = series.iter().map(|v| v - m).collect();
    let y = periodogram(&x, count);
    let f: Vec<f64> = (1..=count).map(|j| j as f64 / n as f64).collect();

    // IRLS; with a log link and gamma variance the working weights are constant.
    let ybar = mean(&y);
    if !(ybar > 0.0) {
        return Err(Error::DegenerateSeries(
            "periodogram is identically zero".into(),
        ));
    }
    let (mut a, mut b) = (ybar.ln(), 0.0);
    let fbar = mean(&f);
    let sff: f64 = f.iter().map(|v| (v - fbar).powi(2)).sum();
    for _ in 0..100 {
        let z: Vec<f64> = f
            .iter()
            .zip(&y)
            .map(|(&fi, &yi)| {
                let eta = a + b * fi;
                eta + yi * (-eta).exp() - 1.0
            })
            .collect();
        let zbar = mean(&z);
        let nb = f
            .iter()
            .zip(&z)
            .map(|(fi, zi)| (fi - fbar) * (zi - zbar))
            .sum::<f64>()
            / sff;
        let na = zbar - nb * fbar;
        if !(na.is_finite() && nb.is_finite()) {
            return Err(Error::DegenerateSeries(
                "periodogram regression diverged".into(),
            ));
        }
        let done = (na - a).abs() < 1e-10 && (nb - b).abs() * fbar < 1e-10;
        a = na;
        b = nb;
        if done {
            let s0 = a.exp();
            return if s0 > 0.0 && s0.is_finite() {
                Ok(s0)
            } else {
                Err(Error::DegenerateSeries(
                    "periodogram intercept out of range".into(),
                ))
            };
        }
    }
    Err(Error::DegenerateSeries(
        "periodogram regression did not converge".into(),
    ))
}

/// Periodogram-regression estimate with the autoregressive estimate as fallback.
pub fn spectral_density_zero_glm(series: &[f64]) -> Result<f64> {
    spectral_density_zero_glm_only(series).or_else(|_| spectral_density_zero_ar(series))
}

pub fn spectral_density_zero(series: &[f64], method: SpectralMethod) -> Result<f64> {
    match method {
        SpectralMethod::Glm => spectral_density_zero_glm(series),
        SpectralMethod::Ar => spectral_density_zero_ar(series),
    }
}

/// Scalar summaries compared between blocks: each coordinate's mean, then
/// each pairwise covariance via the product series `τ_k`.
fn measures(cols: &[&[f64]]) -> Vec<(String, Vec<f64>, f64)> {
    let u = cols.len();
    let means: Vec<f64> = cols.iter().map(|c| mean(c)).collect();
    let mut out = Vec::new();
    for i in 0..u {
        out.push((format!("mean({})", NAMES[i]), cols[i].to_vec(), means[i]));
    }
    for i in 0..u {
        for j in i + 1..u {
            let tau: Vec<f64> = cols[i]
                .iter()
                .zip(cols[j])
                .map(|(a, b)| (a - means[i]) * (b - means[j]))
                .collect();
            let stat = mean(&tau);
            out.push((format!("cov({},{})", NAMES[i], NAMES[j]), tau, stat));
        }
    }
    out
}

/// Z statistics between an early and a late block of draws, given as
/// per-coordinate columns.
pub fn geweke_z(
    early: &[&[f64]],
    late: &[&[f64]],
    method: SpectralMethod,
) -> Result<Vec<MeasureZ>> {
    if early.is_empty()
        || early.len() != late.len()
        || early.iter().chain(late).any(|c| c.is_empty())
    {
        return Err(Error::DegenerateSeries(
            "blocks must be nonempty with matching dimensions".into(),
        ));
    }
    let me = measures(early);
    let ml = measures(late);
    me.into_iter()
        .zip(ml)
        .map(|((name, se, stat_e), (_, sl, stat_l))| {
            let diff = stat_e - stat_l;
            if diff == 0.0 {
                return Ok(MeasureZ {
                    measure: name,
                    z: 0.0,
                });
            }
            let ve = spectral_density_zero(&se, method)? / se.len() as f64;
            let vl = spectral_density_zero(&sl, method)? / sl.len() as f64;
            Ok(MeasureZ {
                measure: name,
                z: diff / (ve + vl).sqrt(),
            })
        })
        .collect()
}

/// Runs the 10%, 20% and 30% stages in turn on per-coordinate columns.
pub fn select_burn_in_columns(cols: &[Vec<f64>], method: SpectralMethod) -> DiagnosticReport {
    let k = cols[0].len();
    let late: Vec<&[f64]> = cols.iter().map(|c| &c[k / 2..]).collect();
    let mut stages = Vec::new();
    for stage in Stage::TESTED {
        let cut = stage.tenths() * k / 10;
        let early: Vec<&[f64]> = cols.iter().map(|c| &c[..cut]).collect();
        let outcome = match geweke_z(&early, &late, method) {
            Ok(z) => StageOutcome {
                stage,
                passed: z.iter().all(|m| m.z.abs() < Z_CRIT),
                z,
                error: None,
            },
            Err(e) => StageOutcome {
                stage,
                passed: false,
                z: Vec::new(),
                error: Some(e.to_string()),
            },
        };
        let passed = outcome.passed;
        stages.push(outcome);
        if passed {
            return DiagnosticReport {
                burn_in_index: stage.burn_in_index(k),
                stage_passed: stage,
                stages,
                restarts_used: 0,
            };
        }
    }
    DiagnosticReport {
        burn_in_index: k + 1,
        stage_passed: Stage::Failed,
        stages,
        restarts_used: 0,
    }
}

pub fn select_burn_in(chain: &Chain, method: SpectralMethod) -> DiagnosticReport {
    let cols: Vec<Vec<f64>> = (0..chain.dim()).map(|j| chain.column(j)).collect();
    select_burn_in_columns(&cols, method)
}

/// Runs `make_chain(restart)` until a chain passes, allowing up to five
/// restarts. Returns the passing chain and its report.
pub fn run_with_restarts(
    model: ModelId,
    method: SpectralMethod,
    mut make_chain: impl FnMut(u32) -> Result<Chain>,
) -> Result<(Chain, DiagnosticReport)> {
    for restart in 0..=MAX_RESTARTS {
        let chain = make_chain(restart)?;
        let mut report = select_burn_in(&chain, method);
        if report.passed() {
            report.restarts_used = restart;
            return Ok((chain, report));
        }
    }
    Err(Error::AlgorithmFailure {
        model,
        restarts: MAX_RESTARTS,
    })
}
