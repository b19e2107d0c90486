//! The eight quantal dose-response models, in both their regression-coefficient
//! form and the form reparameterized by the benchmark dose.
//!
//! Reparameterized models are indexed by `θ = (ξ, γ0[, γ1])`: `ξ` is the
//! benchmark dose at the configured BMR, `γ0 = R(0)` is background risk and,
//! for the three-parameter models, `γ1 = R(d_ℓ)` is the risk at a reference
//! dose (the highest dose unless configured otherwise).
//!
//! Coefficient vectors use a per-model ordering:
//!
//! | model | coefficients |
//! |-------|--------------|
//! | M1–M3 | `(β0, β1)` |
//! | M4    | `(γ0, β1)` |
//! | M5    | `(β0, β1, β2)` |
//! | M6–M8 | `(γ0, β0, β1)` |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::QuantalDataset;
use crate::error::{Error, Result};
use crate::special::{logit, norm_cdf, norm_quantile};

/// Stand-in for `ln 0`; every impossible configuration maps here.
pub const LOG_ZERO: f64 = f64::NEG_INFINITY;

const RISK_FLOOR: f64 = 1e-300;
const RISK_CEIL: f64 = 1.0 - 1e-16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelId {
    #[serde(rename = "M1")]
    Logistic,
    #[serde(rename = "M2")]
    Probit,
    #[serde(rename = "M3")]
    QuantalLinear,
    #[serde(rename = "M4")]
    QuantalQuadratic,
    #[serde(rename = "M5")]
    TwoStage,
    #[serde(rename = "M6")]
    LogLogistic,
    #[serde(rename = "M7")]
    LogProbit,
    #[serde(rename = "M8")]
    Weibull,
}

impl ModelId {
    pub const ALL: [ModelId; 8] = [
        ModelId::Logistic,
        ModelId::Probit,
        ModelId::QuantalLinear,
        ModelId::QuantalQuadratic,
        ModelId::TwoStage,
        ModelId::LogLogistic,
        ModelId::LogProbit,
        ModelId::Weibull,
    ];

    pub fn n_params(self) -> usize {
        match self {
            ModelId::Logistic
            | ModelId::Probit
            | ModelId::QuantalLinear
            | ModelId::QuantalQuadratic => 2,
            _ => 3,
        }
    }

    /// Zero-based position in [`ModelId::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn code(self) -> &'static str {
        ["M1", "M2", "M3", "M4", "M5", "M6", "M7", "M8"][self.index()]
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelId::Logistic => "logistic",
            ModelId::Probit => "probit",
            ModelId::QuantalLinear => "quantal-linear",
            ModelId::QuantalQuadratic => "quantal-quadratic",
            ModelId::TwoStage => "two-stage",
            ModelId::LogLogistic => "log-logistic",
            ModelId::LogProbit => "log-probit",
            ModelId::Weibull => "weibull",
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        ModelId::ALL
            .into_iter()
            .find(|m| m.code().eq_ignore_ascii_case(t) || m.name().eq_ignore_ascii_case(t))
            .ok_or_else(|| Error::Config(format!("unknown model `{s}` (expected M1..M8)")))
    }
}

/// Reparameterized model parameters `(ξ, γ0[, γ1])`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaVector {
    pub xi: f64,
    pub gamma0: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gamma1: Option<f64>,
}

impl ThetaVector {
    pub fn two(xi: f64, gamma0: f64) -> Self {
        Self {
            xi,
            gamma0,
            gamma1: None,
        }
    }

    pub fn three(xi: f64, gamma0: f64, gamma1: f64) -> Self {
        Self {
            xi,
            gamma0,
            gamma1: Some(gamma1),
        }
    }

    /// Builds θ from a flat `[ξ, γ0, γ1?]` slice.
    pub fn from_slice(values: &[f64]) -> Self {
        match values {
            [xi, g0] => Self::two(*xi, *g0),
            [xi, g0, g1] => Self::three(*xi, *g0, *g1),
            _ => panic!("θ has 2 or 3 components, got {}", values.len()),
        }
    }

    pub fn dim(&self) -> usize {
        if self.gamma1.is_some() {
            3
        } else {
            2
        }
    }

    /// Flat `[ξ, γ0, γ1]`; only the first [`dim`](Self::dim) entries are meaningful.
    pub fn to_array(&self) -> [f64; 3] {
        [self.xi, self.gamma0, self.gamma1.unwrap_or(f64::NAN)]
    }

    /// Checks the type-level invariants of θ for `model`.
    pub fn validate(&self, model: ModelId) -> Result<()> {
        let invalid = |reason: String| Err(Error::Validity { model, reason });
        if self.dim() != model.n_params() {
            return invalid(format!(
                "expected {} parameters, got {}",
                model.n_params(),
                self.dim()
            ));
        }
        if !(self.xi > 0.0 && self.xi.is_finite()) {
            return invalid(format!("ξ must be positive, got {}", self.xi));
        }
        if !(self.gamma0 > 0.0 && self.gamma0 < 1.0) {
            return invalid(format!("γ0 must lie in (0,1), got {}", self.gamma0));
        }
        if let Some(g1) = self.gamma1 {
            if !(g1 > 0.0 && g1 < 1.0) {
                return invalid(format!("γ1 must lie in (0,1), got {g1}"));
            }
            if g1 <= self.gamma0 {
                return invalid(format!("γ1 = {g1} must exceed γ0 = {}", self.gamma0));
            }
        }
        Ok(())
    }

    pub fn is_valid(&self, model: ModelId) -> bool {
        self.validate(model).is_ok()
    }
}

/// Regression coefficients in the traditional parameterization. See the module
/// docs for the per-model ordering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaVector {
    values: [f64; 3],
    len: usize,
}

impl BetaVector {
    pub fn new(values: &[f64]) -> Self {
        assert!(
            (2..=3).contains(&values.len()),
            "coefficient vectors have 2 or 3 entries"
        );
        let mut v = [0.0; 3];
        v[..values.len()].copy_from_slice(values);
        Self {
            values: v,
            len: values.len(),
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values[..self.len]
    }

    fn get(&self, i: usize) -> f64 {
        self.values[i]
    }
}

impl std::ops::Index<usize> for BetaVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.as_slice()[i]
    }
}

/// Benchmark response and the reference dose that defines `γ1 = R(d_ℓ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Benchmark {
    pub bmr: f64,
    pub ref_dose: f64,
}

impl Benchmark {
    /// BMR with the reference dose at the (scaled) highest dose, 1.
    pub fn new(bmr: f64) -> Self {
        Self { bmr, ref_dose: 1.0 }
    }

    pub fn with_ref_dose(bmr: f64, ref_dose: f64) -> Self {
        Self { bmr, ref_dose }
    }
}

fn check_bmr(bmr: f64) -> Result<()> {
    if bmr > 0.0 && bmr < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("BMR must lie in (0,1), got {bmr}")))
    }
}

/// Verifies the constraint column of the traditional parameterization.
pub fn check_constraints(model: ModelId, beta: &BetaVector) -> Result<()> {
    if beta.len != model.n_params() {
        return Err(Error::Domain(format!(
            "{model} takes {} coefficients, got {}",
            model.n_params(),
            beta.len
        )));
    }
    if beta.as_slice().iter().any(|b| b.is_nan()) {
        return Err(Error::Domain(format!("{model} coefficients contain NaN")));
    }
    let violated = |constraint: &'static str, value: f64| {
        Err(Error::Constraint {
            model,
            constraint,
            value,
        })
    };
    match model {
        ModelId::Logistic | ModelId::Probit => Ok(()),
        ModelId::QuantalLinear => {
            if beta.get(0) < 0.0 {
                violated("β0 ≥ 0", beta.get(0))
            } else if beta.get(1) < 0.0 {
                violated("β1 ≥ 0", beta.get(1))
            } else {
                Ok(())
            }
        }
        ModelId::TwoStage => {
            for (i, c) in ["β0 ≥ 0", "β1 ≥ 0", "β2 ≥ 0"].into_iter().enumerate() {
                if beta.get(i) < 0.0 {
                    return violated(c, beta.get(i));
                }
            }
            Ok(())
        }
        ModelId::QuantalQuadratic
        | ModelId::LogLogistic
        | ModelId::LogProbit
        | ModelId::Weibull => {
            let g0 = beta.get(0);
            if !(0.0..1.0).contains(&g0) {
                return violated("0 ≤ γ0 < 1", g0);
            }
            let slope = beta.get(beta.len - 1);
            if model == ModelId::Weibull {
                if slope < 1.0 {
                    return violated("β1 ≥ 1", slope);
                }
            } else if slope < 0.0 {
                return violated("β1 ≥ 0", slope);
            }
            Ok(())
        }
    }
}

/// `1 - exp(-x)` without cancellation for small `x`.
fn one_minus_exp_neg(x: f64) -> f64 {
    -(-x).exp_m1()
}

/// Risk `R(d)` in the traditional parameterization.
pub fn risk_traditional(model: ModelId, beta: &BetaVector, d: f64) -> Result<f64> {
    check_constraints(model, beta)?;
    if !(d >= 0.0) {
        return Err(Error::Domain(format!("dose must be nonnegative, got {d}")));
    }
    let b = |i| beta.get(i);
    let r = match model {
        ModelId::Logistic => 1.0 / (1.0 + (-b(0) - b(1) * d).exp()),
        ModelId::Probit => norm_cdf(b(0) + b(1) * d),
        ModelId::QuantalLinear => one_minus_exp_neg(b(0) + b(1) * d),
        ModelId::QuantalQuadratic => b(0) + (1.0 - b(0)) * one_minus_exp_neg(b(1) * d * d),
        ModelId::TwoStage => one_minus_exp_neg(b(0) + b(1) * d + b(2) * d * d),
        ModelId::LogLogistic | ModelId::LogProbit | ModelId::Weibull if d == 0.0 => b(0),
        ModelId::LogLogistic => b(0) + (1.0 - b(0)) / (1.0 + (-b(1) - b(2) * d.ln()).exp()),
        ModelId::LogProbit => b(0) + (1.0 - b(0)) * norm_cdf(b(1) + b(2) * d.ln()),
        ModelId::Weibull => b(0) + (1.0 - b(0)) * one_minus_exp_neg(b(1).exp() * d.powf(b(2))),
    };
    Ok(r)
}

/// Extra risk `(R(d) - R(0)) / (1 - R(0))` in the traditional parameterization.
pub fn extra_risk_traditional(model: ModelId, beta: &BetaVector, d: f64) -> Result<f64> {
    let r0 = risk_traditional(model, beta, 0.0)?;
    if r0 >= 1.0 {
        return Err(Error::DegenerateBackground);
    }
    Ok((risk_traditional(model, beta, d)? - r0) / (1.0 - r0))
}

/// Closed-form benchmark dose from traditional coefficients.
pub fn bmd_from_beta(model: ModelId, beta: &BetaVector, bmr: f64) -> Result<f64> {
    check_bmr(bmr)?;
    check_constraints(model, beta)?;
    let b = |i| beta.get(i);
    let slope = match model {
        ModelId::TwoStage => None,
        ModelId::LogLogistic | ModelId::LogProbit | ModelId::Weibull => Some(b(2)),
        _ => Some(b(1)),
    };
    if slope == Some(0.0) {
        return Err(Error::Singular(format!(
            "{model} slope coefficient is zero; BMD undefined"
        )));
    }
    let c = -(-bmr).ln_1p();
    let bmd = match model {
        ModelId::Logistic => ((1.0 + bmr * (-b(0)).exp()) / (1.0 - bmr)).ln() / b(1),
        ModelId::Probit => {
            let p0 = norm_cdf(b(0));
            (norm_quantile((1.0 - p0) * bmr + p0) - b(0)) / b(1)
        }
        ModelId::QuantalLinear => c / b(1),
        ModelId::QuantalQuadratic => (c / b(1)).sqrt(),
        ModelId::TwoStage => {
            if b(1) == 0.0 && b(2) == 0.0 {
                return Err(Error::Singular(
                    "two-stage with β1 = β2 = 0 has no BMD".into(),
                ));
            }
            // Rationalized root of β2 x² + β1 x - c = 0; stays finite as β2 → 0.
            2.0 * c / (b(1) + (b(1) * b(1) + 4.0 * b(2) * c).sqrt())
        }
        ModelId::LogLogistic => ((logit(bmr) - b(1)) / b(2)).exp(),
        ModelId::LogProbit => ((norm_quantile(bmr) - b(1)) / b(2)).exp(),
        ModelId::Weibull => ((c.ln() - b(1)) / b(2)).exp(),
    };
    Ok(bmd)
}

/// Risk curve of one reparameterized model with its derived constants
/// precomputed. Construction validates θ, so evaluation never fails.
#[derive(Debug, Clone, Copy)]
pub struct ReparamCurve {
    model: ModelId,
    xi: f64,
    gamma0: f64,
    ref_dose: f64,
    /// Model-specific constants; see `new`.
    a: f64,
    b: f64,
}

impl ReparamCurve {
    pub fn new(model: ModelId, theta: &ThetaVector, bmr: f64, ref_dose: f64) -> Result<Self> {
        check_bmr(bmr)?;
        theta.validate(model)?;
        let ThetaVector { xi, gamma0, gamma1 } = *theta;
        if model.n_params() == 3 {
            if !(ref_dose > 0.0) {
                return Err(Error::Domain(format!(
                    "reference dose must be positive, got {ref_dose}"
                )));
            }
            if xi == ref_dose {
                return Err(Error::Singular(format!(
                    "{model} is singular at ξ = d_ℓ = {ref_dose}"
                )));
            }
            // Monotone curves are exactly those whose implied coefficients satisfy
            // the traditional constraints.
            reparam_to_beta(model, theta, bmr, ref_dose).map_err(|e| match e {
                Error::Constraint { .. } => Error::Validity {
                    model,
                    reason: format!("implied curve is not monotone: {e}"),
                },
                other => other,
            })?;
        }
        let c_bmr = (-bmr).ln_1p(); // ln(1 - BMR) < 0
        let e1 = gamma1.map(|g1| (g1 - gamma0) / (1.0 - gamma0));
        let (a, b) = match model {
            ModelId::Logistic => {
                let l0 = logit(gamma0);
                (l0, ((1.0 + (-l0).exp() * bmr) / (1.0 - bmr)).ln())
            }
            ModelId::Probit => {
                let q0 = norm_quantile(gamma0);
                (q0, norm_quantile(bmr * (1.0 - gamma0) + gamma0) - q0)
            }
            ModelId::QuantalLinear | ModelId::QuantalQuadratic => ((-gamma0).ln_1p(), c_bmr),
            ModelId::TwoStage => {
                let g1 = gamma1.expect("validated");
                (((1.0 - g1) / (1.0 - gamma0)).ln(), -c_bmr)
            }
            ModelId::LogLogistic => {
                let g1 = gamma1.expect("validated");
                (((1.0 - g1) / (g1 - gamma0)).ln(), logit(bmr))
            }
            ModelId::LogProbit => (norm_quantile(e1.expect("validated")), norm_quantile(bmr)),
            ModelId::Weibull => ((-(-e1.expect("validated")).ln_1p()).ln(), (-c_bmr).ln()),
        };
        Ok(Self {
            model,
            xi,
            gamma0,
            ref_dose,
            a,
            b,
        })
    }

    pub fn model(&self) -> ModelId {
        self.model
    }

    /// `R(d)` for `d ≥ 0`.
    pub fn risk(&self, d: f64) -> f64 {
        let Self {
            xi,
            gamma0: g0,
            ref_dose: dl,
            a,
            b,
            ..
        } = *self;
        if d == 0.0 {
            return g0;
        }
        match self.model {
            ModelId::Logistic => 1.0 / (1.0 + (-a - d / xi * b).exp()),
            ModelId::Probit => norm_cdf(a + b * d / xi),
            ModelId::QuantalLinear => -(a + b / xi * d).exp_m1(),
            ModelId::QuantalQuadratic => g0 + (1.0 - g0) * -(b / (xi * xi) * d * d).exp_m1(),
            ModelId::TwoStage => {
                // a = Γ5, b = C5
                let num = b * dl * d * (dl - d) + a * xi * d * (xi - d);
                let den = xi * dl * (xi - dl);
                g0 + (1.0 - g0) * -(num / den).exp_m1()
            }
            ModelId::LogLogistic => {
                // a = Γ6 = ln((1-γ1)/(γ1-γ0)), b = C6 = logit(BMR)
                let (ld, lx, ll) = (d.ln(), xi.ln(), dl.ln());
                let z = (b * (ll - ld) + a * (lx - ld)) / (lx - ll);
                g0 + (1.0 - g0) / (1.0 + z.exp())
            }
            ModelId::LogProbit => {
                let (ld, lx, ll) = (d.ln(), xi.ln(), dl.ln());
                let z = (b * (ll - ld) + a * (ld - lx)) / (ll - lx);
                g0 + (1.0 - g0) * norm_cdf(z)
            }
            ModelId::Weibull => {
                let (ld, lx, ll) = (d.ln(), xi.ln(), dl.ln());
                let z = (b * (ll - ld) + a * (ld - lx)) / (ll - lx);
                g0 + (1.0 - g0) * one_minus_exp_neg(z.exp())
            }
        }
    }

    pub fn extra_risk(&self, d: f64) -> f64 {
        (self.risk(d) - self.gamma0) / (1.0 - self.gamma0)
    }
}

/// Risk under the reparameterized form of `model`.
pub fn risk_reparam(
    model: ModelId,
    theta: &ThetaVector,
    d: f64,
    bmr: f64,
    ref_dose: f64,
) -> Result<f64> {
    if !(d >= 0.0) {
        return Err(Error::Domain(format!("dose must be nonnegative, got {d}")));
    }
    Ok(ReparamCurve::new(model, theta, bmr, ref_dose)?.risk(d))
}

/// Extra risk `(R(d) - R(0)) / (1 - R(0))` under the reparameterized form.
pub fn extra_risk(
    model: ModelId,
    theta: &ThetaVector,
    d: f64,
    bmr: f64,
    ref_dose: f64,
) -> Result<f64> {
    if theta.gamma0 == 1.0 {
        return Err(Error::DegenerateBackground);
    }
    if !(d >= 0.0) {
        return Err(Error::Domain(format!("dose must be nonnegative, got {d}")));
    }
    Ok(ReparamCurve::new(model, theta, bmr, ref_dose)?.extra_risk(d))
}

/// Maps θ back to traditional coefficients and checks the constraint column.
pub fn reparam_to_beta(
    model: ModelId,
    theta: &ThetaVector,
    bmr: f64,
    ref_dose: f64,
) -> Result<BetaVector> {
    check_bmr(bmr)?;
    theta.validate(model)?;
    let ThetaVector {
        xi,
        gamma0: g0,
        gamma1,
    } = *theta;
    let c5 = -(-bmr).ln_1p();
    let beta = match model {
        ModelId::Logistic => {
            let b0 = logit(g0);
            BetaVector::new(&[b0, ((1.0 + bmr * (-b0).exp()) / (1.0 - bmr)).ln() / xi])
        }
        ModelId::Probit => {
            let b0 = norm_quantile(g0);
            BetaVector::new(&[b0, (norm_quantile(bmr * (1.0 - g0) + g0) - b0) / xi])
        }
        ModelId::QuantalLinear => BetaVector::new(&[-(-g0).ln_1p(), c5 / xi]),
        ModelId::QuantalQuadratic => BetaVector::new(&[g0, c5 / (xi * xi)]),
        ModelId::TwoStage => {
            let dl = ref_dose;
            if xi == dl {
                return Err(Error::Singular(format!(
                    "{model} is singular at ξ = d_ℓ = {dl}"
                )));
            }
            let g1 = gamma1.expect("validated");
            let big_g = ((1.0 - g1) / (1.0 - g0)).ln();
            let b1 = (c5 * dl * dl + big_g * xi * xi) / (xi * dl * (dl - xi));
            let b2 = (big_g * xi + c5 * dl) / (xi * dl * (xi - dl));
            BetaVector::new(&[-(-g0).ln_1p(), b1, b2])
        }
        ModelId::LogLogistic | ModelId::LogProbit | ModelId::Weibull => {
            let dl = ref_dose;
            if xi == dl {
                return Err(Error::Singular(format!(
                    "{model} is singular at ξ = d_ℓ = {dl}"
                )));
            }
            let g1 = gamma1.expect("validated");
            let e1 = (g1 - g0) / (1.0 - g0);
            // Transformed extra risk at d_ℓ and at ξ; the transformed extra risk
            // is linear in ln d.
            let (at_ref, at_xi) = match model {
                ModelId::LogLogistic => (((g1 - g0) / (1.0 - g1)).ln(), logit(bmr)),
                ModelId::LogProbit => (norm_quantile(e1), norm_quantile(bmr)),
                _ => ((-(-e1).ln_1p()).ln(), c5.ln()),
            };
            let b1 = (at_ref - at_xi) / (dl.ln() - xi.ln());
            BetaVector::new(&[g0, at_xi - b1 * xi.ln(), b1])
        }
    };
    check_constraints(model, &beta)?;
    Ok(beta)
}

/// Binomial log-likelihood `Σ ln C(N,Y) + Y ln R + (N - Y) ln(1 - R)`.
///
/// Returns [`LOG_ZERO`] when θ is not a valid parameter for `model`. Valid
/// curves never reach 0 or 1 exactly, so a value that rounds there is clamped
/// to `[1e-300, 1 - 1e-16]` rather than treated as impossible.
pub fn log_likelihood(
    data: &QuantalDataset,
    model: ModelId,
    theta: &ThetaVector,
    bench: &Benchmark,
) -> f64 {
    match ReparamCurve::new(model, theta, bench.bmr, bench.ref_dose) {
        Ok(curve) => curve_log_likelihood(data, &curve),
        Err(_) => LOG_ZERO,
    }
}

pub(crate) fn curve_log_likelihood(data: &QuantalDataset, curve: &ReparamCurve) -> f64 {
    binomial_terms(data, |d| curve.risk(d), false)
}

/// Binomial log-likelihood for an arbitrary risk function of scaled dose.
/// A risk of exactly 0 with responders, or exactly 1 with non-responders,
/// gives [`LOG_ZERO`].
pub fn binomial_log_likelihood(data: &QuantalDataset, risk: impl Fn(f64) -> f64) -> f64 {
    binomial_terms(data, risk, true)
}

fn binomial_terms(
    data: &QuantalDataset,
    risk: impl Fn(f64) -> f64,
    exact_bounds_impossible: bool,
) -> f64 {
    let mut ll = 0.0;
    let doses = data.doses();
    let ys = data.responders();
    let ns = data.group_sizes();
    let coefs = data.log_coefficients();
    for i in 0..doses.len() {
        let r = risk(doses[i]);
        let (y, n) = (ys[i] as f64, ns[i] as f64);
        if r.is_nan() {
            return LOG_ZERO;
        }
        if exact_bounds_impossible && ((r <= 0.0 && y > 0.0) || (r >= 1.0 && y < n)) {
            return LOG_ZERO;
        }
        ll += coefs[i];
        if y > 0.0 {
            ll += y * r.max(RISK_FLOOR).ln();
        }
        if y < n {
            ll += (n - y) * (-r.min(RISK_CEIL)).ln_1p();
        }
    }
    ll
}

/// Whether θ lies in the region where the posterior is positive: valid
/// type-level invariants, `ξ < d_ℓ` for M5–M8 and admissible implied
/// coefficients.
pub fn in_support(model: ModelId, theta: &ThetaVector, bench: &Benchmark) -> bool {
    support_curve(model, theta, bench).is_some()
}

pub(crate) fn support_curve(
    model: ModelId,
    theta: &ThetaVector,
    bench: &Benchmark,
) -> Option<ReparamCurve> {
    if model.n_params() == 3 && !(theta.xi < bench.ref_dose) {
        return None;
    }
    ReparamCurve::new(model, theta, bench.bmr, bench.ref_dose).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const BMR: f64 = 0.10;

    #[test]
    fn traditional_risk_examples() {
        let b = BetaVector::new(&[0.0, 1.0]);
        assert_eq!(
            risk_traditional(ModelId::QuantalLinear, &b, 0.0).unwrap(),
            0.0
        );
        let flat = BetaVector::new(&[0.0, 0.0]);
        for d in [0.0, 0.3, 7.0] {
            assert_eq!(risk_traditional(ModelId::Logistic, &flat, d).unwrap(), 0.5);
        }
        let b = BetaVector::new(&[0.05, 2.0]);
        let expected = 1.0 - (-1.05f64).exp();
        assert_abs_diff_eq!(
            risk_traditional(ModelId::QuantalLinear, &b, 0.5).unwrap(),
            expected,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(expected, 0.650062, epsilon = 1e-6);
    }

    #[test]
    fn log_dose_models_return_background_at_zero() {
        let b = BetaVector::new(&[0.07, -1.0, 1.5]);
        for m in [ModelId::LogLogistic, ModelId::LogProbit, ModelId::Weibull] {
            assert_eq!(risk_traditional(m, &b, 0.0).unwrap(), 0.07);
        }
    }

    #[test]
    fn constraint_violation_names_the_constraint() {
        let err = risk_traditional(ModelId::Weibull, &BetaVector::new(&[0.1, 0.0, 0.5]), 0.5)
            .unwrap_err();
        assert!(err.to_string().contains("β1 ≥ 1"), "{err}");
        let err = risk_traditional(ModelId::QuantalLinear, &BetaVector::new(&[-0.1, 1.0]), 0.5)
            .unwrap_err();
        assert!(err.to_string().contains("β0 ≥ 0"), "{err}");
        let err = risk_traditional(
            ModelId::QuantalQuadratic,
            &BetaVector::new(&[1.0, 1.0]),
            0.5,
        )
        .unwrap_err();
        assert!(err.to_string().contains("γ0 < 1"), "{err}");
    }

    #[test]
    fn bmd_closed_forms() {
        let m3 = bmd_from_beta(ModelId::QuantalLinear, &BetaVector::new(&[0.0, 1.0]), BMR).unwrap();
        assert_abs_diff_eq!(m3, -(0.9f64).ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(m3, 0.105361, epsilon = 1e-6);
        let m4 = bmd_from_beta(
            ModelId::QuantalQuadratic,
            &BetaVector::new(&[0.0, 1.0]),
            BMR,
        )
        .unwrap();
        assert_abs_diff_eq!(m4, (-(0.9f64).ln()).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(m4, 0.324593, epsilon = 1e-6);
        let m5 = bmd_from_beta(ModelId::TwoStage, &BetaVector::new(&[0.0, 0.0, 1.0]), BMR).unwrap();
        assert_abs_diff_eq!(m5, m4, epsilon = 1e-15);
    }

    #[test]
    fn bmd_singular_slopes() {
        for (m, b) in [
            (ModelId::Logistic, vec![0.0, 0.0]),
            (ModelId::QuantalLinear, vec![0.0, 0.0]),
            (ModelId::TwoStage, vec![0.1, 0.0, 0.0]),
            (ModelId::LogProbit, vec![0.1, 0.0, 0.0]),
        ] {
            let err = bmd_from_beta(m, &BetaVector::new(&b), BMR).unwrap_err();
            assert!(matches!(err, Error::Singular(_)), "{m}: {err}");
        }
    }

    #[test]
    fn bmd_hits_bmr_for_traditional_curves() {
        let cases = [
            (ModelId::Logistic, vec![-2.0, 3.0]),
            (ModelId::Probit, vec![-1.2, 2.0]),
            (ModelId::QuantalLinear, vec![0.1, 1.7]),
            (ModelId::QuantalQuadratic, vec![0.2, 4.0]),
            (ModelId::TwoStage, vec![0.1, 0.5, 2.0]),
            (ModelId::LogLogistic, vec![0.1, 0.4, 1.3]),
            (ModelId::LogProbit, vec![0.05, -0.2, 0.9]),
            (ModelId::Weibull, vec![0.05, 0.3, 1.6]),
        ];
        for (m, b) in cases {
            let beta = BetaVector::new(&b);
            let bmd = bmd_from_beta(m, &beta, BMR).unwrap();
            let re = extra_risk_traditional(m, &beta, bmd).unwrap();
            assert_abs_diff_eq!(re, BMR, epsilon = 1e-10);
        }
    }

    #[test]
    fn reparam_examples() {
        let beta =
            reparam_to_beta(ModelId::Logistic, &ThetaVector::two(1.0, 0.5), BMR, 1.0).unwrap();
        assert_abs_diff_eq!(beta[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(beta[1], (1.1f64 / 0.9).ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(beta[1], 0.200671, epsilon = 1e-6);

        // γ0 → 0 limit of M3 via a tiny background.
        let beta = reparam_to_beta(
            ModelId::QuantalLinear,
            &ThetaVector::two(-(0.9f64).ln(), 1e-300),
            BMR,
            1.0,
        )
        .unwrap();
        assert_abs_diff_eq!(beta[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(beta[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn two_stage_with_equal_gammas_has_zero_gamma5() {
        // γ1 = γ0 is outside the valid region, so check the formula directly.
        let (xi, dl) = (0.3, 1.0);
        let c5 = -(0.9f64).ln();
        let b2 = c5 * dl / (xi * dl * (xi - dl));
        let b1 = c5 * dl * dl / (xi * dl * (dl - xi));
        assert!(b2 < 0.0 && b1 > 0.0);
        let err = reparam_to_beta(
            ModelId::TwoStage,
            &ThetaVector::three(xi, 0.1, 0.1),
            BMR,
            dl,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Validity { .. }), "{err}");
    }

    #[test]
    fn reparam_boundaries() {
        let t = ThetaVector::three(0.1783, 0.05, 0.50);
        let m = ModelId::TwoStage;
        assert_eq!(risk_reparam(m, &t, 0.0, BMR, 1.0).unwrap(), 0.05);
        assert_abs_diff_eq!(
            risk_reparam(m, &t, 1.0, BMR, 1.0).unwrap(),
            0.50,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            extra_risk(m, &t, t.xi, BMR, 1.0).unwrap(),
            BMR,
            epsilon = 1e-12
        );
        assert_eq!(extra_risk(m, &t, 0.0, BMR, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn singular_at_reference_dose() {
        for m in [
            ModelId::TwoStage,
            ModelId::LogLogistic,
            ModelId::LogProbit,
            ModelId::Weibull,
        ] {
            let err =
                risk_reparam(m, &ThetaVector::three(1.0, 0.05, 0.5), 0.5, BMR, 1.0).unwrap_err();
            assert!(matches!(err, Error::Singular(_)), "{m}: {err}");
        }
    }

    #[test]
    fn degenerate_background() {
        let err = extra_risk(
            ModelId::QuantalLinear,
            &ThetaVector::two(0.2, 1.0),
            0.5,
            BMR,
            1.0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::DegenerateBackground));
    }

    #[test]
    fn non_monotone_three_parameter_curve_is_rejected() {
        // γ1 barely above γ0 with small ξ would need a decreasing log-logistic.
        let err = risk_reparam(
            ModelId::LogLogistic,
            &ThetaVector::three(0.2, 0.05, 0.06),
            0.5,
            BMR,
            1.0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Validity { .. }), "{err}");
    }

    #[test]
    fn extra_risk_matches_traditional_oracle() {
        let t = ThetaVector::two(0.1642, 0.05);
        let m = ModelId::QuantalLinear;
        let beta = reparam_to_beta(m, &t, BMR, 1.0).unwrap();
        let oracle = {
            let r0 = 1.0 - (-beta[0]).exp();
            let r = 1.0 - (-beta[0] - beta[1] * 0.5).exp();
            (r - r0) / (1.0 - r0)
        };
        assert_abs_diff_eq!(
            extra_risk(m, &t, 0.5, BMR, 1.0).unwrap(),
            oracle,
            epsilon = 1e-14
        );
    }

    /// Every three-parameter row of the simulation configuration table was
    /// generated from `R(0)`, `R(1/2)`, `R(1)`; the curves must pass through
    /// the middle point as well.
    #[test]
    fn simulation_configurations_hit_midpoint() {
        let rows = [
            (ModelId::TwoStage, 0.1783, 0.1925),
            (ModelId::LogLogistic, 0.2083, 0.2760),
            (ModelId::LogProbit, 0.2267, 0.2794),
            (ModelId::Weibull, 0.1852, 0.2025),
        ];
        for (m, xi1, xi2) in rows {
            let r1 = risk_reparam(m, &ThetaVector::three(xi1, 0.05, 0.5), 0.5, BMR, 1.0).unwrap();
            let r2 = risk_reparam(m, &ThetaVector::three(xi2, 0.10, 0.9), 0.5, BMR, 1.0).unwrap();
            assert_abs_diff_eq!(r1, 0.30, epsilon = 2e-4);
            assert_abs_diff_eq!(r2, 0.50, epsilon = 2e-4);
        }
    }

    #[test]
    fn log_likelihood_sentinels() {
        let saturated = QuantalDataset::new(&[0.0, 1.0], &[10, 10], &[10, 10]).unwrap();
        assert_eq!(binomial_log_likelihood(&saturated, |_| 1.0), 0.0);

        let data = QuantalDataset::new(&[0.0, 1.0], &[0, 1], &[10, 10]).unwrap();
        assert_eq!(binomial_log_likelihood(&data, |_| 0.0), LOG_ZERO);
        assert_eq!(binomial_log_likelihood(&data, |_| 1.0), LOG_ZERO);

        let bad = ThetaVector::two(0.2, 1.5);
        assert_eq!(
            log_likelihood(&data, ModelId::QuantalLinear, &bad, &Benchmark::new(BMR)),
            LOG_ZERO
        );
    }

    #[test]
    fn model_ids_parse_and_count() {
        assert_eq!("m6".parse::<ModelId>().unwrap(), ModelId::LogLogistic);
        assert_eq!("weibull".parse::<ModelId>().unwrap(), ModelId::Weibull);
        assert!("M9".parse::<ModelId>().is_err());
        for m in ModelId::ALL {
            let expected = if m.index() < 4 { 2 } else { 3 };
            assert_eq!(m.n_params(), expected);
        }
        assert_eq!(serde_json::to_string(&ModelId::TwoStage).unwrap(), "\"M5\"");
    }
}
