mod common;

use common::{beta_cdf_by_quadrature, ln_gamma_lanczos, Check};
use feedback_bandit::special::{ln_gamma, regularized_beta};

fn assert_check(c: Check) {
    assert!(c.pass, "{}: {}", c.name, c.detail);
}

#[test]
fn likelihood_gradient_matches_finite_differences() {
    assert_check(common::likelihood_gradient_check());
}

#[test]
fn linear_loss_subgradient_matches_finite_differences() {
    assert_check(common::linear_loss_gradient_check());
}

#[test]
fn softmax_sums_to_one() {
    assert_check(common::softmax_normalization_check());
}

#[test]
fn chi2_survival_matches_quadrature() {
    assert_check(common::chi2_quadrature_check());
}

#[test]
fn beta_draws_pass_ks() {
    assert_check(common::beta_sampler_check());
}

#[test]
fn poisson_draws_match_moments() {
    assert_check(common::poisson_sampler_check());
}

#[test]
fn dirichlet_draws_match_moments() {
    assert_check(common::dirichlet_sampler_check());
}

#[test]
fn ln_gamma_agrees_with_independent_lanczos() {
    for x in [0.1, 0.4, 0.6, 1.0, 1.5, 3.0, 7.25, 20.0, 150.0] {
        let (lib, oracle): (f64, f64) = (ln_gamma(x), ln_gamma_lanczos(x));
        assert!(
            (lib - oracle).abs() <= 1e-10 * oracle.abs().max(1.0),
            "x = {x}: {lib} vs {oracle}"
        );
    }
    // Gamma(0.1) = 9.513507698668731836...
    assert!((ln_gamma(0.1f64) - 9.513_507_698_668_732f64.ln()).abs() < 1e-12);
}

#[test]
fn incomplete_beta_matches_density_quadrature() {
    for (a, b) in [(1.0, 1.0), (3.0, 3.0), (7.0, 5.0), (4.0, 12.0), (1.0, 2.5)] {
        for x in [0.05, 0.3, 0.5, 0.77, 0.95] {
            let lib: f64 = regularized_beta(a, b, x).unwrap();
            let oracle = beta_cdf_by_quadrature(a, b, x);
            assert!((lib - oracle).abs() < 1e-9, "I_{x}({a}, {b}) = {lib} vs {oracle}");
        }
    }
}

#[test]
fn generated_preferences_have_beta_mean() {
    use feedback_bandit::{sample_scenario, sim::run_rng, GenConfig};
    let gen = GenConfig {
        topics: 10,
        followers: 10,
        ..Default::default()
    };
    let mut rng = run_rng(21, 0);
    let mut total = 0.0;
    for _ in 0..1000 {
        let s = sample_scenario(&gen, &mut rng).unwrap();
        total += s.preferences().grid().values().iter().sum::<f64>();
    }
    let mean = total / 100_000.0;
    assert!((mean - 0.4).abs() < 0.01, "mean {mean}");
}
