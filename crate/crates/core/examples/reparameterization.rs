//! Move between regression coefficients and the (xi, gamma0, gamma1) form.

use bayes_bmd::models::{bmd_from_beta, reparam_to_beta, risk_traditional, ReparamCurve};
use bayes_bmd::{BetaVector, ModelId, ThetaVector};

fn main() -> bayes_bmd::Result<()> {
    let bmr = 0.10;
    let beta = BetaVector::new(&[-2.0, 1.5]);
    let xi = bmd_from_beta(ModelId::Logistic, &beta, bmr)?;
    println!("logistic {:?}: BMD {xi:.6}", beta.as_slice());

    let theta = ThetaVector::three(0.2083, 0.05, 0.50);
    let curve = ReparamCurve::new(ModelId::LogLogistic, &theta, bmr, 1.0)?;
    let beta = reparam_to_beta(ModelId::LogLogistic, &theta, bmr, 1.0)?;
    println!(
        "log-logistic theta {:?} -> beta {:?}",
        theta.to_array(),
        beta.as_slice()
    );
    println!(
        "{:>6} {:>10} {:>10} {:>10}",
        "dose", "risk", "extra", "via beta"
    );
    for d in [0.0, 0.1, theta.xi, 0.5, 1.0] {
        println!(
            "{d:>6.4} {:>10.6} {:>10.6} {:>10.6}",
            curve.risk(d),
            curve.extra_risk(d),
            risk_traditional(ModelId::LogLogistic, &beta, d)?
        );
    }
    Ok(())
}
