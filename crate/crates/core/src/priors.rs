//! Independent priors on `ξ`, `γ0` and `γ1`, and quartile-matched elicitation
//! of their hyperparameters.
//!
//! `ξ ~ IG(α, β)`, `γ0 ~ Beta(ψ, ω)` and, for three-parameter models,
//! `γ1 ~ Beta(κ, λ)`. The objective defaults are `IG(0.001, 0.001)` and the
//! Jeffreys `Beta(1/2, 1/2)`.

use serde::{Deserialize, Serialize};
use statrs::function::beta::{checked_beta_reg, ln_beta};
use statrs::function::gamma::{checked_gamma_ur, ln_gamma};

use crate::error::{Error, Result};
use crate::models::{ThetaVector, LOG_ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InverseGamma {
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaLaw {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub xi: InverseGamma,
    pub gamma0: BetaLaw,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma1: Option<BetaLaw>,
}

/// Lower quartile and median of a parameter's prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElicitedQuartiles {
    pub q1: f64,
    pub q2: f64,
}

impl InverseGamma {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        positive("alpha", alpha)?;
        positive("beta", beta)?;
        Ok(Self { alpha, beta })
    }

    pub fn ln_pdf(&self, x: f64) -> Result<f64> {
        ig_log_density(x, self.alpha, self.beta)
    }

    /// `P(X ≤ x) = Q(α, β/x)`, the upper regularized incomplete gamma.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        checked_gamma_ur(self.alpha, self.beta / x).unwrap_or(f64::NAN)
    }
}

impl BetaLaw {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        positive("a", a)?;
        positive("b", b)?;
        Ok(Self { a, b })
    }

    pub const JEFFREYS: BetaLaw = BetaLaw { a: 0.5, b: 0.5 };

    pub fn ln_pdf(&self, p: f64) -> Result<f64> {
        beta_log_density(p, self.a, self.b)
    }

    pub fn cdf(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        if p >= 1.0 {
            return 1.0;
        }
        checked_beta_reg(self.a, self.b, p).unwrap_or(f64::NAN)
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "hyperparameter {name} must be positive and finite, got {v}"
        )))
    }
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        InverseGamma::new(self.xi.alpha, self.xi.beta)?;
        BetaLaw::new(self.gamma0.a, self.gamma0.b)?;
        if let Some(g1) = self.gamma1 {
            BetaLaw::new(g1.a, g1.b)?;
        }
        Ok(())
    }

    /// Sum of the component log densities; [`LOG_ZERO`] outside the support.
    /// A missing `γ1` prior on a three-parameter θ falls back to Jeffreys.
    pub fn log_density(&self, theta: &ThetaVector) -> f64 {
        let mut lp = match self.xi.ln_pdf(theta.xi) {
            Ok(v) => v,
            Err(_) => return LOG_ZERO,
        };
        lp += match self.gamma0.ln_pdf(theta.gamma0) {
            Ok(v) => v,
            Err(_) => return LOG_ZERO,
        };
        if let Some(g1) = theta.gamma1 {
            lp += match self.gamma1.unwrap_or(BetaLaw::JEFFREYS).ln_pdf(g1) {
                Ok(v) => v,
                Err(_) => return LOG_ZERO,
            };
        }
        lp
    }
}

impl ElicitedQuartiles {
    pub fn new(q1: f64, q2: f64) -> Result<Self> {
        if !(q1 > 0.0 && q1 < q2 && q2.is_finite()) {
            return Err(Error::Domain(format!(
                "quartiles must satisfy 0 < q1 < q2, got ({q1}, {q2})"
            )));
        }
        Ok(Self { q1, q2 })
    }

    pub fn for_probability(q1: f64, q2: f64) -> Result<Self> {
        let q = Self::new(q1, q2)?;
        if q2 >= 1.0 {
            return Err(Error::Domain(format!(
                "probability quartiles must lie below 1, got median {q2}"
            )));
        }
        Ok(q)
    }
}

pub fn ig_log_density(xi: f64, alpha: f64, beta: f64) -> Result<f64> {
    if !(xi > 0.0) {
        return Err(Error::Domain(format!(
            "inverse-gamma density needs xi > 0, got {xi}"
        )));
    }
    Ok(alpha * beta.ln() - ln_gamma(alpha) - (alpha + 1.0) * xi.ln() - beta / xi)
}

pub fn beta_log_density(p: f64, a: f64, b: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!(
            "beta density needs 0 < p < 1, got {p}"
        )));
    }
    Ok((a - 1.0) * p.ln() + (b - 1.0) * (-p).ln_1p() - ln_beta(a, b))
}

pub fn objective_priors(n_params: usize) -> PriorSpec {
    PriorSpec {
        xi: InverseGamma {
            alpha: 0.001,
            beta: 0.001,
        },
        gamma0: BetaLaw::JEFFREYS,
        gamma1: (n_params == 3).then_some(BetaLaw::JEFFREYS),
    }
}

/// `log π(θ)` under independent priors.
pub fn log_prior(priors: &PriorSpec, theta: &ThetaVector) -> f64 {
    priors.log_density(theta)
}

const TARGET_HALF_NORM: f64 = 1e-10;
const MAX_ITERATIONS: usize = 10_000;
const MAX_RESTARTS: usize = 5;
// z_{0.75}: lower-quartile distance in standard-normal units.
const Z_QUARTILE: f64 = 0.674_489_750_196_081_7;

pub fn elicit_inverse_gamma(q: ElicitedQuartiles) -> Result<(f64, f64)> {
    ElicitedQuartiles::new(q.q1, q.q2)?;
    // Match a log-normal to the quartiles, then an IG to its first two moments.
    let sigma = (q.q2.ln() - q.q1.ln()) / Z_QUARTILE;
    let mean = q.q2 * (0.5 * sigma * sigma).exp();
    let cv2 = (sigma * sigma).exp_m1();
    let alpha = (1.0 / cv2 + 2.0).min(1e6);
    let start = [alpha.ln(), (mean * (alpha - 1.0)).ln()];
    solve_quartiles(start, q, |a, b, x| {
        InverseGamma { alpha: a, beta: b }.cdf(x)
    })
}

pub fn elicit_beta(q: ElicitedQuartiles) -> Result<(f64, f64)> {
    ElicitedQuartiles::for_probability(q.q1, q.q2)?;
    let mean = q.q2;
    let sd = (q.q2 - q.q1) / Z_QUARTILE;
    let total = (mean * (1.0 - mean) / (sd * sd) - 1.0).max(1.0);
    let start = [(mean * total).ln(), ((1.0 - mean) * total).ln()];
    solve_quartiles(start, q, |a, b, x| BetaLaw { a, b }.cdf(x))
}

fn residuals(u: [f64; 2], q: ElicitedQuartiles, cdf: &impl Fn(f64, f64, f64) -> f64) -> [f64; 2] {
    let (a, b) = (u[0].exp(), u[1].exp());
    [cdf(a, b, q.q1) - 0.25, cdf(a, b, q.q2) - 0.5]
}

fn half_norm(f: [f64; 2]) -> f64 {
    let v = 0.5 * (f[0] * f[0] + f[1] * f[1]);
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Levenberg–Marquardt on the two quartile equations in log-hyperparameter
/// space, with a central-difference Jacobian.
fn solve_quartiles(
    start: [f64; 2],
    q: ElicitedQuartiles,
    cdf: impl Fn(f64, f64, f64) -> f64,
) -> Result<(f64, f64)> {
    let mut best = f64::INFINITY;
    for restart in 0..=MAX_RESTARTS {
        // Deterministic perturbations: shrink/expand both log-parameters.
        let shift = [0.0, -1.0, 1.0, -2.0, 0.5, 2.0][restart];
        let mut u = [start[0] + shift, start[1] + shift];
        let mut f = residuals(u, q, &cdf);
        let mut obj = half_norm(f);
        let mut lambda = 1e-3;
        for _ in 0..MAX_ITERATIONS {
            if obj < 1e-30 {
                break;
            }
            let h = 1e-6;
            let mut jac = [[0.0; 2]; 2];
            for k in 0..2 {
                let (mut up, mut dn) = (u, u);
                up[k] += h;
                dn[k] -= h;
                let (fu, fd) = (residuals(up, q, &cdf), residuals(dn, q, &cdf));
                for r in 0..2 {
                    jac[r][k] = (fu[r] - fd[r]) / (2.0 * h);
                }
            }
            let g = [
                jac[0][0] * f[0] + jac[1][0] * f[1],
                jac[0][1] * f[0] + jac[1][1] * f[1],
            ];
            let jtj = [
                [
                    jac[0][0].powi(2) + jac[1][0].powi(2),
                    jac[0][0] * jac[0][1] + jac[1][0] * jac[1][1],
                ],
                [0.0, jac[0][1].powi(2) + jac[1][1].powi(2)],
            ];
            let mut improved = false;
            while lambda < 1e12 {
                let a11 = jtj[0][0] * (1.0 + lambda);
                let a22 = jtj[1][1] * (1.0 + lambda);
                let a12 = jtj[0][1];
                let det = a11 * a22 - a12 * a12;
                if det.is_finite() && det != 0.0 {
                    let step = [
                        (-g[0] * a22 + g[1] * a12) / det,
                        (g[0] * a12 - g[1] * a11) / det,
                    ];
                    let cand = [
                        u[0] + step[0].clamp(-2.0, 2.0),
                        u[1] + step[1].clamp(-2.0, 2.0),
                    ];
                    let fc = residuals(cand, q, &cdf);
                    let oc = half_norm(fc);
                    if oc < obj {
                        u = cand;
                        f = fc;
                        obj = oc;
                        lambda = (lambda * 0.1).max(1e-12);
                        improved = true;
                        break;
                    }
                }
                lambda *= 10.0;
            }
            if !improved {
                break;
            }
        }
        if obj < TARGET_HALF_NORM {
            return Ok((u[0].exp(), u[1].exp()));
        }
        best = best.min(obj);
    }
    Err(Error::Elicitation { residual: best })
}

/// Quartiles `(q1, q2)` implied by an inverse-gamma law.
pub fn inverse_gamma_quartiles(law: InverseGamma) -> (f64, f64) {
    let q = |p: f64| {
        let (mut lo, mut hi) = (1.0, 1.0);
        while law.cdf(lo) > p {
            lo *= 0.5;
        }
        while law.cdf(hi) < p {
            hi *= 2.0;
        }
        // Bisect on the log scale.
        bisect(|x| law.cdf(x.exp()), p, lo.ln(), hi.ln()).exp()
    };
    (q(0.25), q(0.5))
}

/// Quartiles `(q1, q2)` implied by a beta law.
pub fn beta_quartiles(law: BetaLaw) -> (f64, f64) {
    (
        bisect(|x| law.cdf(x), 0.25, 0.0, 1.0),
        bisect(|x| law.cdf(x), 0.5, 0.0, 1.0),
    )
}

fn bisect(cdf: impl Fn(f64) -> f64, p: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ig_density_examples() {
        assert_abs_diff_eq!(
            ig_log_density(1.0, 1.0, 1.0).unwrap(),
            -1.0,
            epsilon = 1e-14
        );
        assert!(ig_log_density(1.0, 0.001, 0.001).unwrap().is_finite());
        assert!(ig_log_density(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn beta_density_examples() {
        assert_abs_diff_eq!(
            beta_log_density(0.3, 1.0, 1.0).unwrap(),
            0.0,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            beta_log_density(0.5, 0.5, 0.5).unwrap(),
            (2.0 / std::f64::consts::PI).ln(),
            epsilon = 1e-14
        );
        assert!(beta_log_density(1.0, 2.0, 2.0).is_err());
    }

    #[test]
    fn uniform_quartiles_give_uniform_beta() {
        let (a, b) = elicit_beta(ElicitedQuartiles::new(0.25, 0.5).unwrap()).unwrap();
        assert_abs_diff_eq!(a, 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(b, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn objective_priors_shape() {
        assert!(objective_priors(2).gamma1.is_none());
        let p3 = objective_priors(3);
        assert_eq!(p3.gamma1, Some(BetaLaw { a: 0.5, b: 0.5 }));
        p3.validate().unwrap();
    }

    #[test]
    fn log_prior_is_a_sum() {
        let p = objective_priors(3);
        let t = ThetaVector::three(0.2, 0.1, 0.6);
        let expected = ig_log_density(0.2, 0.001, 0.001).unwrap()
            + beta_log_density(0.1, 0.5, 0.5).unwrap()
            + beta_log_density(0.6, 0.5, 0.5).unwrap();
        assert_abs_diff_eq!(log_prior(&p, &t), expected, epsilon = 1e-12);
        assert_eq!(log_prior(&p, &ThetaVector::three(-0.2, 0.1, 0.6)), LOG_ZERO);
    }

    #[test]
    fn invalid_quartiles_are_rejected() {
        assert!(ElicitedQuartiles::new(0.5, 0.2).is_err());
        assert!(elicit_beta(ElicitedQuartiles { q1: 0.4, q2: 1.2 }).is_err());
    }
}
