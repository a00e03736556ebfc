//! Likelihood-ratio test of whether a user's choices respond to feedback.
//!
//! The alternative frees the follower weights on the simplex; the null pins
//! them at zero (`a_u = 1`, `x` free). `2 * LLR` is compared against a
//! chi-squared distribution with `dof` degrees of freedom.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{
    build_observations, fit_mle_observations, EstimationConfig, EstimationResult, FeasibleRegion, FeedbackLog,
};
use crate::scalar::Scalar;
use crate::special::gamma_q;

/// Levels reported when the caller does not choose any.
pub const DEFAULT_LEVELS: [f64; 3] = [0.01, 0.05, 0.1];

/// Upper tail `P(X > x)` of a chi-squared variable with `dof` degrees of
/// freedom.
pub fn chi2_survival<S: Scalar>(x: S, dof: usize) -> Result<S> {
    if dof == 0 {
        return Err(Error::invalid("chi-squared needs dof >= 1"));
    }
    if !(x >= S::zero()) {
        return Err(Error::invalid(format!("chi-squared survival needs x >= 0, got {x}")));
    }
    let half = S::lit(0.5);
    gamma_q(S::of_usize(dof) * half, x * half)
}

fn level_key(level: f64) -> String {
    format!("{level}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar + Serialize", deserialize = "S: Scalar + Deserialize<'de>"))]
pub struct TestReport<S: Scalar> {
    pub user: String,
    /// `loglik_alt - loglik_null`.
    pub llr: S,
    pub dof: usize,
    pub p_value: S,
    /// Significance level (as written) to whether the null is rejected.
    pub verdicts: BTreeMap<String, bool>,
    pub fit_alt: EstimationResult<S>,
    pub fit_null: EstimationResult<S>,
}

impl<S: Scalar> TestReport<S> {
    pub fn rejects_at(&self, level: f64) -> bool {
        self.p_value.to_f64_lossy() < level
    }
}

/// Fits both models to `log` and forms the Wilks p-value.
///
/// `dof` defaults to the number of followers. The alternative fit is also
/// started from the null optimum, so `llr` is non-negative up to rounding.
pub fn llr_statistic<S: Scalar>(
    user: impl Into<String>,
    log: &FeedbackLog,
    cfg: &EstimationConfig<S>,
    dof: Option<usize>,
    levels: &[f64],
) -> Result<TestReport<S>> {
    cfg.validate()?;
    let posts = log.posted_topics();
    if posts.len() < 2 {
        return Err(Error::Untestable(format!("{} own posts, need at least 2", posts.len())));
    }
    let distinct: BTreeSet<_> = posts.iter().collect();
    if distinct.len() < 2 {
        return Err(Error::Untestable("every own post is on the same topic".into()));
    }
    let followers = log.num_followers();
    let topics = log.num_topics();
    let dof = dof.unwrap_or(followers);
    if dof == 0 {
        return Err(Error::Untestable("no followers and no dof override".into()));
    }

    let obs = build_observations(log, cfg)?;
    let null = fit_mle_observations(&obs, followers, topics, FeasibleRegion::SelfOnly, cfg, &[])?;
    let alt = fit_mle_observations(
        &obs,
        followers,
        topics,
        FeasibleRegion::Full,
        cfg,
        std::slice::from_ref(&null.params),
    )?;
    let llr = alt.objective - null.objective;
    let stat = (S::lit(2.0) * llr).max(S::zero());
    let p_value = chi2_survival(stat, dof)?.max(S::zero()).min(S::one());
    let verdicts = levels
        .iter()
        .map(|&l| (level_key(l), p_value.to_f64_lossy() < l))
        .collect();
    Ok(TestReport {
        user: user.into(),
        llr,
        dof,
        p_value,
        verdicts,
        fit_alt: EstimationResult::from_output(alt)?,
        fit_null: EstimationResult::from_output(null)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: f64,
    pub rejected: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSummary {
    pub total: usize,
    pub levels: Vec<LevelSummary>,
}

impl CohortSummary {
    pub fn fraction_at(&self, level: f64) -> Option<f64> {
        self.levels.iter().find(|l| l.level == level).map(|l| l.fraction)
    }
}

/// Rejection counts per level over a nonempty set of p-values.
pub fn cohort_summary_from_p_values(p_values: &[f64], levels: &[f64]) -> Result<CohortSummary> {
    if p_values.is_empty() {
        return Err(Error::invalid("cohort summary needs at least one report"));
    }
    let total = p_values.len();
    let levels = levels
        .iter()
        .map(|&level| {
            let rejected = p_values.iter().filter(|&&p| p < level).count();
            LevelSummary {
                level,
                rejected,
                fraction: rejected as f64 / total as f64,
            }
        })
        .collect();
    Ok(CohortSummary { total, levels })
}

pub fn cohort_summary<S: Scalar>(reports: &[TestReport<S>], levels: &[f64]) -> Result<CohortSummary> {
    let p: Vec<f64> = reports.iter().map(|r| r.p_value.to_f64_lossy()).collect();
    cohort_summary_from_p_values(&p, levels)
}
