//! Turn expert quartiles into inverse-gamma and beta hyperparameters.
//!
//! cargo run --example elicit_priors

use bayes_bmd::priors::{
    elicit_beta, elicit_inverse_gamma, inverse_gamma_quartiles, ElicitedQuartiles, InverseGamma,
};

fn main() -> bayes_bmd::Result<()> {
    // BMD (scaled dose): lower quartile 0.18, median 0.5.
    let (alpha, beta) = elicit_inverse_gamma(ElicitedQuartiles::new(0.18, 0.5)?)?;
    println!("xi     ~ IG({alpha:.6}, {beta:.6})");
    let (q1, q2) = inverse_gamma_quartiles(InverseGamma { alpha, beta });
    println!("         recovered quartiles {q1:.6}, {q2:.6}");

    // Background risk: lower quartile 4%, median 8%.
    let (a, b) = elicit_beta(ElicitedQuartiles::for_probability(0.04, 0.08)?)?;
    println!("gamma0 ~ Beta({a:.6}, {b:.6})");
    Ok(())
}
