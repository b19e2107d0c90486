#![allow(dead_code)]

use bayes_bmd::diagnostics::spectral_density_zero_ar;
use bayes_bmd::models::{in_support, Benchmark, ModelId, ThetaVector};
use bayes_bmd::sampler::Chain;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

pub fn ar1(rng: &mut ChaCha8Rng, n: usize, phi: f64) -> Vec<f64> {
    let mut x = vec![0.0; n];
    let mut prev: f64 = StandardNormal.sample(rng);
    prev /= (1.0 - phi * phi).sqrt();
    for v in x.iter_mut() {
        let e: f64 = StandardNormal.sample(rng);
        prev = phi * prev + e;
        *v = prev;
    }
    x
}

/// Bisection inverse of a continuous cdf on `[lo, hi]`.
pub fn invert(cdf: impl Fn(f64) -> f64, p: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Empirical `p`-quantile of a correlated sample with its Monte Carlo
/// standard error, via the long-run variance of the indicator series and a
/// known density at the true quantile.
pub fn quantile_with_se(draws: &[f64], p: f64, true_q: f64, density_at_q: f64) -> (f64, f64) {
    let mut v = draws.to_vec();
    v.sort_by(f64::total_cmp);
    let est = v[((p * v.len() as f64) as usize).min(v.len() - 1)];
    let ind: Vec<f64> = draws
        .iter()
        .map(|&x| if x <= true_q { 1.0 } else { 0.0 })
        .collect();
    let s0 = spectral_density_zero_ar(&ind).unwrap();
    (est, (s0 / draws.len() as f64).sqrt() / density_at_q)
}

/// A valid θ for `model` at BMR 0.10 and reference dose 1, by rejection.
pub fn random_valid_theta(model: ModelId, rng: &mut ChaCha8Rng) -> ThetaVector {
    let bench = Benchmark::new(0.10);
    loop {
        let g0 = rng.random_range(0.01..0.6);
        let theta = if model.n_params() == 2 {
            let xi = (rng.random_range((0.01f64).ln()..(3.0f64).ln())).exp();
            ThetaVector::two(xi, g0)
        } else {
            let xi = rng.random_range(0.02..0.95);
            let g1 = rng.random_range(g0 + 0.02..0.98);
            ThetaVector::three(xi, g0, g1)
        };
        if in_support(model, &theta, &bench) {
            return theta;
        }
    }
}

/// Wraps two or three columns as a chain for the diagnostics.
pub fn synthetic_chain(cols: &[Vec<f64>]) -> Chain {
    let k = cols[0].len();
    let (model, draws) = match cols.len() {
        2 => (
            ModelId::Logistic,
            (0..k)
                .map(|i| ThetaVector::two(cols[0][i], cols[1][i]))
                .collect(),
        ),
        3 => (
            ModelId::Weibull,
            (0..k)
                .map(|i| ThetaVector::three(cols[0][i], cols[1][i], cols[2][i]))
                .collect(),
        ),
        d => panic!("chains have 2 or 3 coordinates, got {d}"),
    };
    Chain {
        model,
        seed: 0,
        draws,
        log_posteriors: vec![0.0; k],
        acceptance_count: 0,
        component_acceptance: vec![0.0; cols.len()],
    }
}

/// The first coordinate ramps linearly from `-a` to `+a` over the first
/// quarter of the chain; everything else is stationary noise. The early-block
/// mean is offset for the 10% and 20% stages and back to zero at 30%.
pub fn drift_then_stationary(seed: u64, k: usize, a: f64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    let mut x = normals(&mut r, k);
    let ramp = k / 4;
    for (i, v) in x.iter_mut().enumerate().take(ramp) {
        *v += -a + 2.0 * a * i as f64 / ramp as f64;
    }
    vec![x, normals(&mut r, k)]
}
