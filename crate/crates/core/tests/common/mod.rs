//! Independent numerical oracles shared by the integration tests and the
//! acceptance suite.
#![allow(dead_code)]

use feedback_bandit::estimation::{
    linear_loss_subgradient, log_likelihood_gradient, log_likelihood_params, softmax_prob, ChoiceObservation,
};
use feedback_bandit::scalar::argmax_first;
use feedback_bandit::sim::{poisson_draw, run_rng, sample_dirichlet};
use feedback_bandit::special::regularized_beta;
use feedback_bandit::{chi2_survival, BetaPosteriorTable, BetaPrior, Grid, Params, Scalar, TopicId};

/// Outcome of one numerical check.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, pass: bool, detail: String) -> Self {
        Check {
            name: name.into(),
            pass,
            detail,
        }
    }
}

/// Asymptotic Kolmogorov-Smirnov critical value at level 0.01.
pub fn ks_critical_01(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

/// Two-sided KS distance between a sample and a continuous CDF.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (((i + 1) as f64) / n - f).max(f - (i as f64) / n)
        })
        .fold(0.0, f64::max)
}

fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(fa, flm, fm, a, m);
    let right = simpson(fm, frm, fb, m, b);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    adaptive(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1)
        + adaptive(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64) -> f64 {
    let (fa, fb) = (f(a), f(b));
    let fm = f(0.5 * (a + b));
    let whole = simpson(fa, fm, fb, a, b);
    adaptive(f, a, b, fa, fm, fb, whole, eps, 50)
}

/// Upper tail of chi-square(1) by integrating its density from `x` outward.
pub fn chi2_one_tail_by_quadrature(x: f64) -> f64 {
    let density = |t: f64| (-t / 2.0).exp() / (2.0 * std::f64::consts::PI * t).sqrt();
    // beyond x + 150 the tail is below 1e-33
    (0..15)
        .map(|i| {
            let a = x + 10.0 * i as f64;
            integrate(&density, a, a + 10.0, 1e-15)
        })
        .sum()
}

/// Beta(a, b) CDF by quadrature of the density, for shapes >= 1.
pub fn beta_cdf_by_quadrature(a: f64, b: f64, x: f64) -> f64 {
    let ln_norm = ln_gamma_lanczos(a + b) - ln_gamma_lanczos(a) - ln_gamma_lanczos(b);
    let density = |t: f64| (ln_norm + (a - 1.0) * t.ln() + (b - 1.0) * (1.0 - t).ln()).exp();
    let f = |t: f64| density(t.clamp(1e-300, 1.0 - 1e-16));
    integrate(&f, 0.0, x, 1e-14)
}

/// Lanczos ln Gamma (g = 7, n = 9), written out here so the oracle does not
/// reuse the library's own special functions.
pub fn ln_gamma_lanczos(x: f64) -> f64 {
    const G: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma_lanczos(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = G[0];
    for (i, &g) in G.iter().enumerate().skip(1) {
        acc += g / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

pub fn chi2_quadrature_check() -> Check {
    let mut worst: f64 = 0.0;
    for x in [1.0, 4.0, 9.0, 16.0, 25.0] {
        let lib: f64 = chi2_survival(x, 1).unwrap();
        worst = worst.max((lib - chi2_one_tail_by_quadrature(x)).abs());
    }
    Check::new(
        "chi2 survival vs quadrature (dof 1)",
        worst <= 1e-8,
        format!("max abs error {worst:.2e} (tol 1e-8)"),
    )
}

/// KS of posterior draws against the Beta CDF, for several count patterns.
pub fn beta_sampler_check() -> Check {
    let n = 10_000;
    let mut worst = 0.0f64;
    let cases: [(u64, u64); 3] = [(0, 0), (4, 2), (1, 9)];
    for (i, &(likes, dislikes)) in cases.iter().enumerate() {
        let mut table = BetaPosteriorTable::new(BetaPrior::new(3.0, 3.0).unwrap(), 1, 1);
        table.record_counts(TopicId(0), 0, likes, dislikes).unwrap();
        let (a, b) = table.posterior(TopicId(0), 0).unwrap();
        let mut rng = run_rng(11, i as u64);
        let mut draws: Vec<f64> = (0..n)
            .map(|_| table.sample_estimate(TopicId(0), 0, &mut rng).unwrap())
            .collect();
        let d = ks_statistic(&mut draws, |x| regularized_beta(a, b, x).unwrap());
        worst = worst.max(d);
    }
    // the generator's own Beta(0.4, 0.6) draws
    let mut rng = run_rng(11, 99);
    let mut draws: Vec<f64> = (0..n).map(|_| f64::sample_beta(0.4, 0.6, &mut rng)).collect();
    worst = worst.max(ks_statistic(&mut draws, |x| regularized_beta(0.4, 0.6, x).unwrap()));
    let crit = ks_critical_01(n);
    Check::new(
        "Beta sampler KS",
        worst < crit,
        format!("max KS {worst:.4} (critical {crit:.4})"),
    )
}

pub fn poisson_sampler_check() -> Check {
    let n = 100_000;
    let mut rng = run_rng(12, 0);
    let draws: Vec<f64> = (0..n).map(|_| poisson_draw(2.0f64, &mut rng).unwrap() as f64).collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let zero_ok = (0..100).all(|_| poisson_draw(0.0f64, &mut rng).unwrap() == 0);
    let pass = (mean - 2.0).abs() <= 0.02 && (var - 2.0).abs() <= 0.1 && zero_ok;
    Check::new(
        "Poisson sampler moments",
        pass,
        format!("mean {mean:.4}, variance {var:.4}, rate-0 all zero {zero_ok}"),
    )
}

/// Coordinate means and variances of a symmetric Dirichlet against
/// `1/d` and `(1/d)(1 - 1/d)/(d gamma + 1)`.
pub fn dirichlet_sampler_check() -> Check {
    let (gamma, d, n) = (0.8f64, 11usize, 20_000usize);
    let mut rng = run_rng(13, 0);
    let draws: Vec<Vec<f64>> = (0..n).map(|_| sample_dirichlet(gamma, d, &mut rng)).collect();
    let sum_err = draws
        .iter()
        .map(|w| (w.iter().sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    let m = 1.0 / d as f64;
    let var = m * (1.0 - m) / (d as f64 * gamma + 1.0);
    let mut worst_mean_z: f64 = 0.0;
    let mut worst_var_rel: f64 = 0.0;
    for i in 0..d {
        let xs: Vec<f64> = draws.iter().map(|w| w[i]).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let v = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        worst_mean_z = worst_mean_z.max((mean - m).abs() / (var / n as f64).sqrt());
        worst_var_rel = worst_var_rel.max((v - var).abs() / var);
    }
    let pass = sum_err <= 1e-12 && worst_mean_z <= 4.5 && worst_var_rel <= 0.1;
    Check::new(
        "Dirichlet sampler moments",
        pass,
        format!("sum error {sum_err:.1e}, worst mean z {worst_mean_z:.2}, worst variance rel {worst_var_rel:.3}"),
    )
}

pub fn random_observations(seed: u64, steps: usize, topics: usize, followers: usize) -> Vec<ChoiceObservation<f64>> {
    let mut rng = run_rng(seed, 1);
    (0..steps)
        .map(|_| ChoiceObservation {
            estimates: Grid::from_fn(topics, followers, |_, _| f64::sample_unit(&mut rng)),
            chosen: TopicId((f64::sample_unit(&mut rng) * topics as f64) as usize % topics),
            weight: 1.0,
        })
        .collect()
}

/// Interior point of the feasible set: positive weights, `0 < z_c < a_u`.
pub fn random_interior(seed: u64, topics: usize, followers: usize) -> Params {
    let mut rng = run_rng(seed, 2);
    let w = sample_dirichlet(2.0f64, followers + 1, &mut rng);
    let au = w[followers];
    Params {
        follower_weights: w[..followers].to_vec(),
        self_weight: au,
        z: (0..topics)
            .map(|_| au * (0.1 + 0.8 * f64::sample_unit(&mut rng)))
            .collect(),
    }
}

fn flat(p: &Params) -> Vec<f64> {
    let mut v = p.follower_weights.clone();
    v.push(p.self_weight);
    v.extend_from_slice(&p.z);
    v
}

fn unflat(v: &[f64], followers: usize) -> Params {
    Params {
        follower_weights: v[..followers].to_vec(),
        self_weight: v[followers],
        z: v[followers + 1..].to_vec(),
    }
}

fn central_difference(p: &Params, h: f64, f: &dyn Fn(&Params) -> f64) -> Vec<f64> {
    let n = p.followers();
    let base = flat(p);
    (0..base.len())
        .map(|i| {
            let mut up = base.clone();
            let mut down = base.clone();
            up[i] += h;
            down[i] -= h;
            (f(&unflat(&up, n)) - f(&unflat(&down, n))) / (2.0 * h)
        })
        .collect()
}

/// Worst `|g - fd| / max(1, |g|)` of the likelihood gradient over random
/// interior points.
pub fn likelihood_gradient_check() -> Check {
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let (k, n) = (2 + seed as usize % 4, 1 + seed as usize % 3);
        let obs = random_observations(seed, 25, k, n);
        let p = random_interior(seed, k, n);
        let lambda = 10.0;
        let (_, g) = log_likelihood_gradient(&p, &obs, lambda);
        let fd = central_difference(&p, 1e-5, &|q| log_likelihood_params(q, &obs, lambda));
        for (a, b) in flat(&g).iter().zip(&fd) {
            worst = worst.max((a - b).abs() / a.abs().max(1.0));
        }
    }
    Check::new(
        "log-likelihood gradient vs finite differences",
        worst <= 1e-5,
        format!("max relative error {worst:.2e} (tol 1e-5)"),
    )
}

/// Smallest gap between the best and second-best score over all steps.
pub fn argmax_margin(p: &Params, obs: &[ChoiceObservation<f64>]) -> f64 {
    obs.iter()
        .map(|o| {
            let mut s = p.scores(&o.estimates);
            s.sort_by(|a, b| b.total_cmp(a));
            if s.len() > 1 {
                s[0] - s[1]
            } else {
                f64::INFINITY
            }
        })
        .fold(f64::INFINITY, f64::min)
}

/// Linear-loss subgradient against central differences at points whose
/// per-step argmax is unique by more than 1e-3.
pub fn linear_loss_gradient_check() -> Check {
    let mut worst: f64 = 0.0;
    let mut tested = 0;
    let mut seed = 0u64;
    while tested < 20 && seed < 10_000 {
        let (k, n) = (2 + seed as usize % 3, 1 + seed as usize % 3);
        let obs = random_observations(1000 + seed, 5, k, n);
        let p = random_interior(1000 + seed, k, n);
        seed += 1;
        if argmax_margin(&p, &obs) <= 1e-3 {
            continue;
        }
        tested += 1;
        let (_, g) = linear_loss_subgradient(&p, &obs);
        let fd = central_difference(&p, 1e-7, &|q| linear_loss_subgradient(q, &obs).0);
        for (a, b) in flat(&g).iter().zip(&fd) {
            worst = worst.max((a - b).abs());
        }
    }
    Check::new(
        "linear-loss subgradient vs finite differences",
        tested == 20 && worst <= 1e-5,
        format!("{tested} margin-interior points, max error {worst:.2e} (tol 1e-5)"),
    )
}

pub fn softmax_normalization_check() -> Check {
    let mut rng = run_rng(14, 0);
    let mut worst: f64 = 0.0;
    let mut argmax_ok = true;
    for trial in 0..500 {
        let k = 1 + trial % 12;
        let scores: Vec<f64> = (0..k).map(|_| 100.0 * f64::sample_unit(&mut rng) - 50.0).collect();
        for lambda in [0.0, 0.1, 1.0, 10.0, 1e3, 1e6] {
            let p = softmax_prob(&scores, lambda).unwrap();
            worst = worst.max((p.iter().sum::<f64>() - 1.0).abs());
            if lambda > 0.0 && argmax_first(p.iter().copied()) != argmax_first(scores.iter().copied()) {
                argmax_ok = false;
            }
        }
    }
    Check::new(
        "softmax normalization",
        worst <= 1e-12 && argmax_ok,
        format!("max |sum - 1| {worst:.1e} (tol 1e-12), argmax preserved {argmax_ok}"),
    )
}

/// Every numerical check, in a fixed order.
pub fn numerical_suite() -> Vec<Check> {
    vec![
        likelihood_gradient_check(),
        linear_loss_gradient_check(),
        softmax_normalization_check(),
        chi2_quadrature_check(),
        beta_sampler_check(),
        poisson_sampler_check(),
        dirichlet_sampler_check(),
    ]
}
