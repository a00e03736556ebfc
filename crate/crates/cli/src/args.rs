use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use feedback_bandit::estimation::StepRule;
use feedback_bandit::{EstimatorKind, SolverKind};

#[derive(Debug, Parser)]
#[command(
    name = "feedback-bandit",
    version,
    about = "Simulate, estimate and test the feedback posting model"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one user and write its event log and trajectory.
    Simulate(SimulateArgs),
    /// Monte Carlo regret traces as CSV, over a grid of settings.
    Regret(RegretArgs),
    /// Fit utility parameters to an event log.
    Estimate(EstimateArgs),
    /// Likelihood-ratio test on one or more event logs.
    Test(TestArgs),
    /// Two-topic lock-in experiment with point estimates.
    #[command(name = "a1-walk")]
    A1Walk(WalkArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Point,
    Posterior,
}

impl From<Estimator> for EstimatorKind {
    fn from(e: Estimator) -> Self {
        match e {
            Estimator::Point => EstimatorKind::PointEstimate,
            Estimator::Posterior => EstimatorKind::PosteriorSample,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Switch {
    On,
    Off,
}

impl Switch {
    pub fn on(self) -> bool {
        self == Switch::On
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    Lp,
    Subgradient,
}

impl From<Solver> for SolverKind {
    fn from(s: Solver) -> Self {
        match s {
            Solver::Lp => SolverKind::ExactLp,
            Solver::Subgradient => SolverKind::Subgradient,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    Diminishing,
    Level,
}

impl From<Step> for StepRule {
    fn from(s: Step) -> Self {
        match s {
            Step::Diminishing => StepRule::Diminishing,
            Step::Level => StepRule::AdaptiveLevel,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Linear-loss heuristic.
    Linear,
    /// Softmax maximum likelihood.
    Mle,
}

/// Shape of the synthetic user.
#[derive(Debug, Clone, Args, Serialize)]
pub struct ScenarioArgs {
    /// Number of topics.
    #[arg(long = "K", default_value_t = 10)]
    pub topics: usize,
    /// Number of followers.
    #[arg(long, default_value_t = 10)]
    pub followers: usize,
    /// Horizon.
    #[arg(long = "T", default_value_t = 1000)]
    pub horizon: usize,
    /// Symmetric Dirichlet concentration of the utility weights.
    #[arg(long, default_value_t = 0.8)]
    pub gamma: f64,
    /// External rates are drawn from Unif[0, 2 mu-bar].
    #[arg(long = "mu-bar", default_value_t = 0.0)]
    pub mu_bar: f64,
    /// Fix the self weight; follower weights keep their drawn proportions.
    #[arg(long = "self-weight")]
    pub self_weight: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PriorArgs {
    #[arg(long, default_value_t = 3.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 3.0)]
    pub beta: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub prior: PriorArgs,
    #[arg(long, value_enum, default_value_t = Estimator::Point)]
    pub estimator: Estimator,
    /// Whether the user also learns from feedback to other users' posts.
    #[arg(long, value_enum, default_value_t = Switch::Off)]
    pub external: Switch,
    /// Post by softmax with this temperature instead of argmax.
    #[arg(long)]
    pub softmax: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Event log output (JSON lines).
    #[arg(long)]
    #[serde(skip)]
    pub log: PathBuf,
    /// Scenario and trajectory summary (JSON); stdout when omitted.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct RegretArgs {
    /// One or more estimator kinds.
    #[arg(long, value_enum, value_delimiter = ',', num_args = 1.., default_value = "point")]
    pub estimator: Vec<Estimator>,
    #[arg(long, value_enum, default_value_t = Switch::Off)]
    pub external: Switch,
    /// One or more topic counts.
    #[arg(long = "K", value_delimiter = ',', num_args = 1.., default_value = "10")]
    pub topics: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    pub followers: usize,
    #[arg(long = "T", default_value_t = 1000)]
    pub horizon: usize,
    /// One or more mean external rates.
    #[arg(long = "mu-bar", value_delimiter = ',', num_args = 1.., default_value = "0")]
    pub mu_bar: Vec<f64>,
    #[arg(long, default_value_t = 0.8)]
    pub gamma: f64,
    #[command(flatten)]
    pub prior: PriorArgs,
    #[arg(long, default_value_t = 200)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; defaults to FEEDBACK_BANDIT_THREADS or all cores.
    #[arg(long)]
    #[serde(skip)]
    pub threads: Option<usize>,
    /// CSV output for a single setting; stdout when omitted.
    #[arg(long, conflicts_with = "out_dir")]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Directory receiving one CSV per setting.
    #[arg(long = "out-dir")]
    #[serde(skip)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    #[arg(long, value_enum, default_value_t = Method::Linear)]
    pub method: Method,
    #[arg(long, value_enum, default_value_t = Solver::Subgradient)]
    pub solver: Solver,
    #[arg(long, value_enum, default_value_t = Step::Diminishing)]
    pub step: Step,
    /// Softmax temperature.
    #[arg(long, default_value_t = 10.0)]
    pub lambda: f64,
    /// Which estimates the user is assumed to act on.
    #[arg(long, value_enum, default_value_t = Estimator::Point)]
    pub variant: Estimator,
    /// Frozen posterior draws per post for the posterior variant.
    #[arg(long, default_value_t = 10)]
    pub samples: usize,
    #[arg(long = "max-iters", default_value_t = 2000)]
    pub max_iters: usize,
    #[arg(long = "step-scale", default_value_t = 0.5)]
    pub step_scale: f64,
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    #[command(flatten)]
    pub prior: PriorArgs,
    /// Minimum topic count when the log does not mention every topic.
    #[arg(long)]
    pub topics: Option<usize>,
    /// Minimum follower count when the log does not mention every follower.
    #[arg(long)]
    pub followers: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct EstimateArgs {
    /// Event log (JSON lines).
    #[arg(long)]
    #[serde(skip)]
    pub log: PathBuf,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Result document; stdout when omitted.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct TestArgs {
    /// Event logs, one user each; the user id is the file stem.
    #[arg(required = true)]
    #[serde(skip)]
    pub logs: Vec<PathBuf>,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Degrees of freedom; defaults to the follower count.
    #[arg(long)]
    pub dof: Option<usize>,
    /// Significance levels.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "0.01,0.05,0.1")]
    pub levels: Vec<f64>,
    #[arg(long)]
    #[serde(skip)]
    pub threads: Option<usize>,
    /// Per-user reports (JSON lines); stdout when omitted.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Cohort summary with the resolved configuration (JSON); stderr when omitted.
    #[arg(long)]
    #[serde(skip)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct WalkArgs {
    #[arg(long = "T", default_value_t = 1000)]
    pub horizon: usize,
    #[arg(long, default_value_t = 1000)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub threads: Option<usize>,
    /// Report document; stdout when omitted.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}
