//! Recovering utility parameters from an observed feedback log.
//!
//! A log is replayed into the preference estimates the user had at each of
//! their posts. Two fits are offered on top of that replay:
//!
//! * the linear loss, `sum_t max_c score_c(t) - score_{c_t}(t)`, which is
//!   convex in `(a, a_u, z)` with `z_c = a_u x_c`, solved by projected
//!   subgradient descent or exactly as an epigraph LP;
//! * the softmax log-likelihood, also concave in `(a, a_u, z)`, maximized by
//!   accelerated projected gradient ascent from several starts.

mod log;
mod objective;
mod params;
mod projection;
mod replay;
mod solvers;

pub use log::{EventKind, FeedbackEvent, FeedbackLog};
pub use objective::{
    linear_loss, linear_loss_subgradient, log_likelihood, log_likelihood_gradient, log_likelihood_params, softmax_prob,
};
pub use params::{ChoiceObservation, FeasibleRegion, UtilityParams, SELF_WEIGHT_GUARD};
pub use projection::{project_feasible, project_region, project_self_only, project_simplex};
pub use replay::{replay, Replay, ReplayStep};
pub use solvers::{
    maximize_log_likelihood, minimize_linear_loss_lp, minimize_linear_loss_subgradient, AscentOptions, SolverOutput,
    StepRule, SubgradientOptions,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::BetaPrior;
use crate::model::{OwnPreferences, UtilityWeights};
use crate::policy::EstimatorKind;
use crate::scalar::Scalar;
use crate::sim::run_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Subgradient,
    ExactLp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar + Serialize", deserialize = "S: Scalar + Deserialize<'de>"))]
pub struct EstimationConfig<S: Scalar> {
    /// Softmax temperature.
    pub lambda: S,
    pub prior: BetaPrior<S>,
    /// Which estimates the user is assumed to have acted on.
    pub variant: EstimatorKind,
    /// Frozen posterior draws per post for the posterior-sample variant.
    pub samples: usize,
    pub solver: SolverKind,
    /// Subgradient iteration budget.
    pub max_iters: usize,
    /// Subgradient initial step scale.
    pub step_scale: S,
    /// Subgradient iterations per restart stage (diminishing rule only).
    pub stage_len: usize,
    pub step_rule: StepRule,
    /// Likelihood ascent iteration budget per start.
    pub mle_max_iters: usize,
    /// Likelihood ascent stopping tolerance on the step length.
    pub tolerance: S,
    /// Random feasible starts for the likelihood fit.
    pub restarts: usize,
    /// Seed for frozen posterior draws and random starts.
    pub seed: u64,
}

impl<S: Scalar> Default for EstimationConfig<S> {
    fn default() -> Self {
        EstimationConfig {
            lambda: S::lit(10.0),
            prior: BetaPrior::default(),
            variant: EstimatorKind::PointEstimate,
            samples: 10,
            solver: SolverKind::Subgradient,
            max_iters: 2000,
            step_scale: S::lit(0.5),
            stage_len: 2000,
            step_rule: StepRule::Diminishing,
            mle_max_iters: 5000,
            tolerance: S::lit(1e-10),
            restarts: 5,
            seed: 0,
        }
    }
}

impl<S: Scalar> EstimationConfig<S> {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > S::zero() && self.lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be positive, got {}", self.lambda)));
        }
        if self.samples == 0 {
            return Err(Error::invalid("samples must be at least 1"));
        }
        if !(self.step_scale > S::zero()) {
            return Err(Error::invalid("step scale must be positive"));
        }
        Ok(())
    }

    fn subgradient_options(&self) -> SubgradientOptions<S> {
        SubgradientOptions {
            max_iters: self.max_iters,
            step_scale: self.step_scale,
            tolerance: S::lit(1e-12),
            stage_len: self.stage_len,
            rule: self.step_rule,
        }
    }

    fn ascent_options(&self) -> AscentOptions<S> {
        AscentOptions {
            max_iters: self.mle_max_iters,
            tolerance: self.tolerance,
        }
    }
}

/// Fitted parameters plus solver diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar + Serialize", deserialize = "S: Scalar + Deserialize<'de>"))]
pub struct EstimationResult<S: Scalar> {
    pub weights_hat: UtilityWeights<S>,
    pub x_hat: OwnPreferences<S>,
    pub z_hat: Vec<S>,
    /// Linear loss (minimized) or log-likelihood (maximized).
    pub objective: S,
    pub iterations: usize,
    pub converged: bool,
    /// False when `a_u` is too small for `x = z / a_u` to mean anything.
    pub x_identifiable: bool,
}

impl<S: Scalar> EstimationResult<S> {
    pub fn from_output(out: SolverOutput<S>) -> Result<Self> {
        let (weights_hat, x_hat, x_identifiable) = out.params.to_natural()?;
        Ok(EstimationResult {
            weights_hat,
            x_hat,
            z_hat: out.params.z.clone(),
            objective: out.objective,
            iterations: out.iterations,
            converged: out.converged,
            x_identifiable,
        })
    }

    pub fn params(&self) -> UtilityParams<S> {
        UtilityParams {
            follower_weights: self.weights_hat.follower_weights().to_vec(),
            self_weight: self.weights_hat.self_weight(),
            z: self.z_hat.clone(),
        }
    }
}

/// Observations the fits run on: posterior modes, or `samples` frozen
/// posterior draws per post, depending on `cfg.variant`.
pub fn build_observations<S: Scalar>(
    log: &FeedbackLog,
    cfg: &EstimationConfig<S>,
) -> Result<Vec<ChoiceObservation<S>>> {
    let replayed = replay(log, cfg.prior);
    if replayed.is_empty() {
        return Err(Error::invalid("log contains no own posts"));
    }
    match cfg.variant {
        EstimatorKind::PointEstimate => replayed.point_observations(),
        EstimatorKind::PosteriorSample => {
            let mut rng = run_rng(cfg.seed, 0);
            Ok(replayed.sampled_observations(cfg.samples, &mut rng))
        }
    }
}

/// Minimizes the linear loss on prepared observations.
pub fn fit_linear_loss_observations<S: Scalar>(
    obs: &[ChoiceObservation<S>],
    followers: usize,
    topics: usize,
    cfg: &EstimationConfig<S>,
) -> Result<SolverOutput<S>> {
    match cfg.solver {
        SolverKind::Subgradient => Ok(minimize_linear_loss_subgradient(
            obs,
            &UtilityParams::uniform(followers, topics),
            &cfg.subgradient_options(),
        )),
        SolverKind::ExactLp => minimize_linear_loss_lp(obs, followers, topics),
    }
}

/// Linear-loss fit of `(a, a_u, x)` to a log.
pub fn fit_linear_loss<S: Scalar>(log: &FeedbackLog, cfg: &EstimationConfig<S>) -> Result<EstimationResult<S>> {
    cfg.validate()?;
    let obs = build_observations(log, cfg)?;
    let out = fit_linear_loss_observations(&obs, log.num_followers(), log.num_topics(), cfg)?;
    EstimationResult::from_output(out)
}

/// Maximizes the log-likelihood over `region` from the linear-loss
/// solution, `cfg.restarts` random feasible points and `extra_starts`,
/// keeping the best.
pub fn fit_mle_observations<S: Scalar>(
    obs: &[ChoiceObservation<S>],
    followers: usize,
    topics: usize,
    region: FeasibleRegion,
    cfg: &EstimationConfig<S>,
    extra_starts: &[UtilityParams<S>],
) -> Result<SolverOutput<S>> {
    let mut starts = Vec::with_capacity(cfg.restarts + extra_starts.len() + 1);
    let warm = fit_linear_loss_observations(obs, followers, topics, cfg)?;
    starts.push(warm.params);
    let mut rng = run_rng(cfg.seed, 1);
    for _ in 0..cfg.restarts {
        starts.push(UtilityParams::random(followers, topics, region, &mut rng));
    }
    starts.extend_from_slice(extra_starts);

    let opts = cfg.ascent_options();
    let mut best: Option<SolverOutput<S>> = None;
    let mut iterations = 0;
    for start in &starts {
        let out = maximize_log_likelihood(obs, cfg.lambda, start, region, &opts);
        iterations += out.iterations;
        if best.as_ref().is_none_or(|b| out.objective > b.objective) {
            best = Some(out);
        }
    }
    let mut best = best.expect("at least one start");
    best.iterations = iterations;
    Ok(best)
}

/// Maximum-likelihood fit of `(a, a_u, x)` under the softmax choice model.
pub fn fit_mle<S: Scalar>(log: &FeedbackLog, cfg: &EstimationConfig<S>) -> Result<EstimationResult<S>> {
    cfg.validate()?;
    let obs = build_observations(log, cfg)?;
    let out = fit_mle_observations(
        &obs,
        log.num_followers(),
        log.num_topics(),
        FeasibleRegion::Full,
        cfg,
        &[],
    )?;
    EstimationResult::from_output(out)
}

/// Squared parameter error `|a - a_hat|^2 + (a_u - a_u_hat)^2 + |x - x_hat|^2`.
pub fn squared_error<S: Scalar>(
    true_weights: &UtilityWeights<S>,
    true_x: &OwnPreferences<S>,
    weights_hat: &UtilityWeights<S>,
    x_hat: &OwnPreferences<S>,
) -> Result<S> {
    Error::check_len("follower weights", true_weights.followers(), weights_hat.followers())?;
    Error::check_len("own preferences", true_x.len(), x_hat.len())?;
    let sq = |a: &[S], b: &[S]| a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum::<S>();
    let du = true_weights.self_weight() - weights_hat.self_weight();
    Ok(sq(true_weights.follower_weights(), weights_hat.follower_weights())
        + du * du
        + sq(true_x.values(), x_hat.values()))
}

/// Root of [`squared_error`] for a single fit.
pub fn rmse<S: Scalar>(
    true_weights: &UtilityWeights<S>,
    true_x: &OwnPreferences<S>,
    result: &EstimationResult<S>,
) -> Result<S> {
    squared_error(true_weights, true_x, &result.weights_hat, &result.x_hat).map(|e| e.sqrt())
}

/// RMSE over several trials: squared errors are averaged before the root.
pub fn pooled_rmse<S: Scalar>(squared_errors: &[S]) -> S {
    if squared_errors.is_empty() {
        return S::zero();
    }
    let mean = squared_errors.iter().copied().sum::<S>() / S::of_usize(squared_errors.len());
    mean.sqrt()
}
