//! A model of posting as utility maximization under follower feedback.
//!
//! A user repeatedly picks a topic to post on. The utility mixes the
//! feedback expected from each follower with the user's own taste for the
//! topic. Follower preferences are learned from Beta posteriors, and the
//! user acts either on posterior modes or on posterior draws. The crate simulates
//! that loop, measures its regret, fits the utility weights back from an
//! observed feedback log and tests whether feedback matters at all.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix it to `f64`.

// `!(x > 0)` style guards are intentional: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimation;
pub mod hypothesis;
pub mod inference;
pub mod io;
pub mod lp;
pub mod model;
pub mod policy;
pub mod scalar;
pub mod sim;
pub mod special;

pub use error::{Error, Result};
pub use estimation::{
    fit_linear_loss, fit_mle, replay, rmse, EstimationConfig, EstimationResult, EventKind, FeasibleRegion,
    FeedbackEvent, FeedbackLog, SolverKind, UtilityParams,
};
pub use hypothesis::{chi2_survival, cohort_summary, llr_statistic, CohortSummary, TestReport};
pub use inference::{BetaPosteriorTable, BetaPrior};
pub use model::{Grid, OwnPreferences, PreferenceMatrix, PreferenceScenario, TopicId, UtilityWeights};
pub use policy::{choose_topic, run_episode, ChoiceRule, EstimatorKind, PolicyConfig};
pub use scalar::Scalar;
pub use sim::{
    appendix_walk, compute_regret, monte_carlo_regret, sample_scenario, MonteCarloConfig, RegretTrace,
    ScenarioGenConfig, ScenarioSource, Trajectory, WalkReport,
};

pub type Scenario = PreferenceScenario<f64>;
pub type Weights = UtilityWeights<f64>;
pub type Preferences = PreferenceMatrix<f64>;
pub type Own = OwnPreferences<f64>;
pub type Prior = BetaPrior<f64>;
pub type Table = BetaPosteriorTable<f64>;
pub type Policy = PolicyConfig<f64>;
pub type GenConfig = ScenarioGenConfig<f64>;
pub type McConfig = MonteCarloConfig<f64>;
pub type Trace = RegretTrace<f64>;
pub type Params = UtilityParams<f64>;
pub type EstConfig = EstimationConfig<f64>;
pub type EstResult = EstimationResult<f64>;
pub type Report = TestReport<f64>;
