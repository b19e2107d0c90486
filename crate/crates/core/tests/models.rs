mod common;

use bayes_bmd::data::cumene;
use bayes_bmd::models::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const BMR: f64 = 0.10;

fn model_strategy() -> impl Strategy<Value = ModelId> {
    (0usize..8).prop_map(|i| ModelId::ALL[i])
}

fn theta_strategy() -> impl Strategy<Value = (ModelId, ThetaVector)> {
    (model_strategy(), any::<u64>()).prop_map(|(m, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (m, common::random_valid_theta(m, &mut rng))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn extra_risk_at_xi_is_bmr((m, t) in theta_strategy()) {
        prop_assert!((extra_risk(m, &t, t.xi, BMR, 1.0).unwrap() - BMR).abs() < 1e-10);
    }

    #[test]
    fn boundary_values((m, t) in theta_strategy()) {
        prop_assert!((risk_reparam(m, &t, 0.0, BMR, 1.0).unwrap() - t.gamma0).abs() < 1e-12);
        if let Some(g1) = t.gamma1 {
            prop_assert!((risk_reparam(m, &t, 1.0, BMR, 1.0).unwrap() - g1).abs() < 1e-10);
        }
    }

    #[test]
    fn reparameterized_and_traditional_forms_agree((m, t) in theta_strategy()) {
        let beta = reparam_to_beta(m, &t, BMR, 1.0).unwrap();
        for i in 0..100 {
            let d = i as f64 / 99.0;
            let a = risk_reparam(m, &t, d, BMR, 1.0).unwrap();
            let b = risk_traditional(m, &beta, d).unwrap();
            prop_assert!((a - b).abs() < 1e-9, "{} at d={}: {} vs {}", m, d, a, b);
        }
    }

    #[test]
    fn risk_is_nondecreasing((m, t) in theta_strategy()) {
        let curve = ReparamCurve::new(m, &t, BMR, 1.0).unwrap();
        let mut prev = curve.risk(0.0);
        for i in 1..=200 {
            let r = curve.risk(i as f64 / 200.0);
            prop_assert!(r >= prev - 1e-15);
            prev = r;
        }
    }

    #[test]
    fn closed_form_bmd_recovers_xi((m, t) in theta_strategy()) {
        let beta = reparam_to_beta(m, &t, BMR, 1.0).unwrap();
        let xi = bmd_from_beta(m, &beta, BMR).unwrap();
        prop_assert!((xi - t.xi).abs() < 1e-9 * t.xi.max(1.0), "{} {} vs {}", m, xi, t.xi);
    }
}

// Direct product of binomial pmfs with the coefficient built multiplicatively.
fn direct_log_pmf(y: &[u64], n: &[u64], r: &[f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..y.len() {
        let mut coef = 1.0f64;
        for j in 0..y[i] {
            coef *= (n[i] - j) as f64 / (j + 1) as f64;
        }
        total += coef.ln() + y[i] as f64 * r[i].ln() + (n[i] - y[i]) as f64 * (1.0 - r[i]).ln();
    }
    total
}

#[test]
fn cumene_log_likelihood_matches_direct_pmf() {
    let data = cumene();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for m in ModelId::ALL {
        for _ in 0..20 {
            let t = common::random_valid_theta(m, &mut rng);
            let beta = reparam_to_beta(m, &t, BMR, 1.0).unwrap();
            let r: Vec<f64> = data
                .doses()
                .iter()
                .map(|&d| risk_traditional(m, &beta, d).unwrap())
                .collect();
            if r.iter().any(|&p| p <= 1e-300 || p >= 1.0 - 1e-15) {
                continue;
            }
            let expected = direct_log_pmf(data.responders(), data.group_sizes(), &r);
            let got = log_likelihood(&data, m, &t, &Benchmark::new(BMR));
            assert_close(got, expected, 1e-10 * expected.abs().max(1.0));
        }
    }
}

fn assert_close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() < tol, "{a} vs {b}");
}

#[test]
fn saturated_group_contributes_zero() {
    let data = bayes_bmd::QuantalDataset::new(&[0.0, 1.0], &[0, 10], &[10, 10]).unwrap();
    let ll = binomial_log_likelihood(&data, |d| if d == 0.0 { 0.0 } else { 1.0 });
    assert_eq!(ll, 0.0);
    let impossible = bayes_bmd::QuantalDataset::new(&[0.0, 1.0], &[1, 10], &[10, 10]).unwrap();
    assert_eq!(
        binomial_log_likelihood(&impossible, |d| if d == 0.0 { 0.0 } else { 1.0 }),
        LOG_ZERO
    );
}

#[test]
fn three_parameter_models_require_xi_below_reference_dose() {
    let bench = Benchmark::new(BMR);
    for m in [
        ModelId::TwoStage,
        ModelId::LogLogistic,
        ModelId::LogProbit,
        ModelId::Weibull,
    ] {
        assert!(!in_support(m, &ThetaVector::three(1.0, 0.1, 0.5), &bench));
        assert!(!in_support(m, &ThetaVector::three(1.2, 0.1, 0.5), &bench));
    }
}
