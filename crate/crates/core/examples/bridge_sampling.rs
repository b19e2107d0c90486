//! Bridge-sampling marginal likelihood on a case with a closed form.

use bayes_bmd::averaging::bridge_marginal;
use bayes_bmd::sampler::{rng_for, Stream};
use rand_distr::{Beta, Distribution};
use statrs::function::beta::ln_beta;

fn main() -> bayes_bmd::Result<()> {
    // Binomial likelihood without its coefficient under a uniform prior.
    let (y, n) = (7.0, 20.0);
    let target = (1usize, |x: &[f64]| {
        let p = x[0];
        if p <= 0.0 || p >= 1.0 {
            f64::NEG_INFINITY
        } else {
            y * p.ln() + (n - y) * (1.0 - p).ln()
        }
    });
    let posterior = Beta::new(y + 1.0, n - y + 1.0).unwrap();
    let mut rng = rng_for(1, Stream::Data);
    let exact = ln_beta(y + 1.0, n - y + 1.0);
    for k in [1_000, 10_000, 100_000] {
        let draws: Vec<f64> = (0..k).map(|_| posterior.sample(&mut rng)).collect();
        let est = bridge_marginal(&target, &draws, &mut rng_for(k as u64, Stream::Bridge))?;
        println!(
            "K = {k:>6}: log m = {est:.5}  exact {exact:.5}  ratio {:.4}",
            (est - exact).exp()
        );
    }
    Ok(())
}
