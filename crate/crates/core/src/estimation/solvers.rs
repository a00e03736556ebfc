//! Optimizers for the linear loss (projected subgradient, exact epigraph LP)
//! and for the softmax log-likelihood (accelerated projected gradient).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, Relation};
use crate::scalar::Scalar;

use super::objective::{linear_loss_subgradient, log_likelihood_gradient, log_likelihood_params};
use super::params::{ChoiceObservation, FeasibleRegion, UtilityParams};
use super::projection::{project_feasible, project_region};

/// Raw optimizer output in `(a, a_u, z)` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverOutput<S: Scalar> {
    pub params: UtilityParams<S>,
    pub objective: S,
    pub iterations: usize,
    pub converged: bool,
}

/// Step-length rule for projected subgradient descent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// `eta / sqrt(k)` along the normalized subgradient, restarted from the
    /// best iterate with `eta` halved every `stage_len` iterations.
    Diminishing,
    /// Polyak step towards an adaptive target level below the best value;
    /// the gap to the target halves whenever the target looks unreachable.
    /// Exploits the known lower bound `0` of the linear loss.
    AdaptiveLevel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubgradientOptions<S> {
    /// Total iteration budget.
    pub max_iters: usize,
    /// `eta_0` for the diminishing rule; the initial target gap as a
    /// fraction of the starting loss for the adaptive-level rule.
    pub step_scale: S,
    /// Objective at or below this counts as an exact zero-loss fit.
    pub tolerance: S,
    /// Iterations per restart stage of the diminishing rule.
    pub stage_len: usize,
    pub rule: StepRule,
}

impl<S: Scalar> Default for SubgradientOptions<S> {
    fn default() -> Self {
        SubgradientOptions {
            max_iters: 2000,
            step_scale: S::lit(0.5),
            tolerance: S::lit(1e-12),
            stage_len: 2000,
            rule: StepRule::Diminishing,
        }
    }
}

/// Projected subgradient descent on the linear loss; returns the best
/// iterate.
pub fn minimize_linear_loss_subgradient<S: Scalar>(
    obs: &[ChoiceObservation<S>],
    start: &UtilityParams<S>,
    opts: &SubgradientOptions<S>,
) -> SolverOutput<S> {
    match opts.rule {
        StepRule::Diminishing => diminishing(obs, start, opts),
        StepRule::AdaptiveLevel => adaptive_level(obs, start, opts),
    }
}

fn norm2<S: Scalar>(g: &UtilityParams<S>) -> S {
    g.to_vec().iter().map(|&v| v * v).sum::<S>()
}

fn step_along<S: Scalar>(x: &UtilityParams<S>, g: &UtilityParams<S>, step: S) -> UtilityParams<S> {
    let moved: Vec<S> = x
        .to_vec()
        .iter()
        .zip(g.to_vec())
        .map(|(&xi, gi)| xi - step * gi)
        .collect();
    project_feasible(&UtilityParams::from_slice(&moved, x.followers()))
}

fn diminishing<S: Scalar>(
    obs: &[ChoiceObservation<S>],
    start: &UtilityParams<S>,
    opts: &SubgradientOptions<S>,
) -> SolverOutput<S> {
    let mut x = project_feasible(start);
    let (mut best_value, _) = linear_loss_subgradient(&x, obs);
    let mut best = x.clone();
    let mut eta = opts.step_scale;
    let stage_len = opts.stage_len.max(1);
    let mut local = 0usize;
    let mut iterations = 0usize;
    let mut converged = best_value <= opts.tolerance;

    while iterations < opts.max_iters && !converged {
        if local == stage_len {
            local = 0;
            eta /= S::lit(2.0);
            x = best.clone();
        }
        local += 1;
        iterations += 1;
        let (value, g) = linear_loss_subgradient(&x, obs);
        if value < best_value {
            best_value = value;
            best = x.clone();
        }
        if best_value <= opts.tolerance {
            converged = true;
            break;
        }
        let norm = norm2(&g).sqrt();
        if norm == S::zero() {
            // zero subgradient: x minimizes the loss
            converged = true;
            break;
        }
        x = step_along(&x, &g, eta / (S::of_usize(local).sqrt() * norm));
    }
    let (last_value, _) = linear_loss_subgradient(&x, obs);
    if last_value < best_value {
        best_value = last_value;
        best = x;
    }
    SolverOutput {
        params: best,
        objective: best_value,
        iterations,
        converged,
    }
}

fn adaptive_level<S: Scalar>(
    obs: &[ChoiceObservation<S>],
    start: &UtilityParams<S>,
    opts: &SubgradientOptions<S>,
) -> SolverOutput<S> {
    let mut x = project_feasible(start);
    let (mut best_value, _) = linear_loss_subgradient(&x, obs);
    let mut best = x.clone();
    // distance budget before a target is declared unreachable; about the
    // diameter of the feasible set
    let budget = S::lit(2.0) * S::of_usize(x.topics() + 2).sqrt();
    let mut gap = opts.step_scale * best_value.max(S::EPS);
    let mut record = best_value;
    let mut travelled = S::zero();
    let mut iterations = 0usize;
    let mut converged = best_value <= opts.tolerance;

    while iterations < opts.max_iters && !converged {
        iterations += 1;
        let (value, g) = linear_loss_subgradient(&x, obs);
        if value < best_value {
            best_value = value;
            best = x.clone();
        }
        if best_value <= opts.tolerance {
            converged = true;
            break;
        }
        if best_value <= record - gap / S::lit(2.0) {
            // enough progress: keep the gap, re-anchor the target
            record = best_value;
            travelled = S::zero();
        }
        let g2 = norm2(&g);
        if g2 == S::zero() {
            converged = true;
            break;
        }
        let target = (record - gap).max(S::zero());
        let step = (value - target) / g2;
        travelled += step * g2.sqrt();
        x = step_along(&x, &g, step);
        if travelled > budget {
            gap /= S::lit(2.0);
            record = best_value;
            travelled = S::zero();
            x = best.clone();
            if gap <= S::EPS * S::EPS * (S::one() + best_value) {
                converged = true;
            }
        }
    }
    SolverOutput {
        params: best,
        objective: best_value,
        iterations,
        converged,
    }
}

/// Exact minimum of the linear loss via its epigraph linear program.
///
/// Variables are `a` (followers), `a_u`, `z` (topics) and one epigraph
/// variable `m_r` per observation with `m_r >= a . q_c(r) + z_c` for every
/// topic `c`; the objective is `sum_r w_r (m_r - a . q_chosen(r) - z_chosen)`.
pub fn minimize_linear_loss_lp<S: Scalar>(
    obs: &[ChoiceObservation<S>],
    followers: usize,
    topics: usize,
) -> Result<SolverOutput<S>> {
    let n = followers;
    let k = topics;
    let self_var = n;
    let z_var = |c: usize| n + 1 + c;
    let m_var = |r: usize| n + 1 + k + r;
    let mut lp = LinearProgram::new(n + 1 + k + obs.len());

    for (r, o) in obs.iter().enumerate() {
        let chosen = o.chosen.0;
        lp.add_objective(m_var(r), o.weight);
        for v in 0..n {
            lp.add_objective(v, -o.weight * o.estimates.get(chosen, v));
        }
        lp.add_objective(z_var(chosen), -o.weight);
        for c in 0..k {
            let mut row: Vec<(usize, S)> = Vec::with_capacity(n + 2);
            row.push((m_var(r), S::one()));
            for v in 0..n {
                let q = o.estimates.get(c, v);
                if q != S::zero() {
                    row.push((v, -q));
                }
            }
            row.push((z_var(c), -S::one()));
            lp.add_row(row, Relation::Ge, S::zero())?;
        }
    }
    for c in 0..k {
        lp.add_row(
            vec![(z_var(c), S::one()), (self_var, -S::one())],
            Relation::Le,
            S::zero(),
        )?;
    }
    let simplex: Vec<(usize, S)> = (0..=n).map(|v| (v, S::one())).collect();
    lp.add_row(simplex, Relation::Eq, S::one())?;

    let solution = lp.solve()?;
    let raw = UtilityParams {
        follower_weights: solution.x[..n].to_vec(),
        self_weight: solution.x[self_var],
        z: (0..k).map(|c| solution.x[z_var(c)]).collect(),
    };
    // snap simplex rounding back onto the feasible set
    let params = project_feasible(&raw);
    let (objective, _) = linear_loss_subgradient(&params, obs);
    if !objective.is_finite() {
        return Err(Error::Solver("epigraph program returned a non-finite objective".into()));
    }
    Ok(SolverOutput {
        params,
        objective,
        iterations: solution.pivots,
        converged: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AscentOptions<S> {
    pub max_iters: usize,
    /// Stop once an accepted step moves the iterate less than this.
    pub tolerance: S,
}

impl<S: Scalar> Default for AscentOptions<S> {
    fn default() -> Self {
        AscentOptions {
            max_iters: 5000,
            tolerance: S::lit(1e-10),
        }
    }
}

fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Maximizes the softmax log-likelihood over `region` from `start`.
///
/// Accelerated projected gradient ascent with backtracking on the step and
/// a monotone restart: a momentum step that lowers the objective is
/// discarded, so the returned value never falls below the start's.
pub fn maximize_log_likelihood<S: Scalar>(
    obs: &[ChoiceObservation<S>],
    lambda: S,
    start: &UtilityParams<S>,
    region: FeasibleRegion,
    opts: &AscentOptions<S>,
) -> SolverOutput<S> {
    let followers = start.followers();
    let two = S::lit(2.0);
    let mut x = project_region(start, region);
    let mut fx = log_likelihood_params(&x, obs, lambda);
    let mut prev = x.to_vec();
    let mut momentum = S::one();
    let mut step = S::one();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iters {
        iterations += 1;
        let xv = x.to_vec();
        let next_momentum = (S::one() + (S::one() + S::lit(4.0) * momentum * momentum).sqrt()) / two;
        let beta = (momentum - S::one()) / next_momentum;
        let yv: Vec<S> = xv.iter().zip(&prev).map(|(&a, &b)| a + beta * (a - b)).collect();
        let y = project_region(&UtilityParams::from_slice(&yv, followers), region);
        let yv = y.to_vec();
        let (fy, gy) = log_likelihood_gradient(&y, obs, lambda);
        let gv = gy.to_vec();

        // backtracking on the quadratic lower model at y
        let (candidate, fc, moved) = loop {
            let raw: Vec<S> = yv.iter().zip(&gv).map(|(&a, &g)| a + step * g).collect();
            let c = project_region(&UtilityParams::from_slice(&raw, followers), region);
            let cv = c.to_vec();
            let d: Vec<S> = cv.iter().zip(&yv).map(|(&a, &b)| a - b).collect();
            let fc = log_likelihood_params(&c, obs, lambda);
            let model = fy + dot(&gv, &d) - dot(&d, &d) / (two * step);
            let moved = dot(&d, &d).sqrt();
            if fc >= model - S::EPS * (S::one() + fy.abs()) || step < S::lit(1e-30) {
                break (c, fc, moved);
            }
            step /= two;
        };

        if fc < fx {
            // momentum overshot; restart from x without it
            if momentum == S::one() {
                converged = true;
                break;
            }
            momentum = S::one();
            prev = xv;
            continue;
        }
        prev = xv;
        x = candidate;
        fx = fc;
        momentum = next_momentum;
        step *= S::lit(1.5);
        if moved < opts.tolerance {
            converged = true;
            break;
        }
    }
    SolverOutput {
        params: x,
        objective: fx,
        iterations,
        converged,
    }
}
