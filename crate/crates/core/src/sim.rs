//! Scenario generation, pseudo-regret, and the Monte Carlo harness.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::inference::{BetaPosteriorTable, BetaPrior};
use crate::model::{Grid, OwnPreferences, PreferenceMatrix, PreferenceScenario, TopicId, UtilityWeights};
use crate::policy::{run_episode, EstimatorKind, PolicyConfig};
use crate::scalar::Scalar;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "FEEDBACK_BANDIT_THREADS";

/// One external label: follower `follower` reacted to someone else's story
/// on `topic`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalLabel {
    pub topic: TopicId,
    pub follower: usize,
    pub liked: bool,
}

/// Chosen topics and every label recorded during one run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    num_topics: usize,
    num_followers: usize,
    topics: Vec<TopicId>,
    own_feedback: Vec<Vec<bool>>,
    external_feedback: Vec<Vec<ExternalLabel>>,
}

impl Trajectory {
    pub fn new(num_topics: usize, num_followers: usize) -> Self {
        Trajectory {
            num_topics,
            num_followers,
            topics: Vec::new(),
            own_feedback: Vec::new(),
            external_feedback: Vec::new(),
        }
    }

    pub(crate) fn push_step(&mut self, topic: TopicId, own: Vec<bool>, external: Vec<ExternalLabel>) {
        debug_assert_eq!(own.len(), self.num_followers);
        self.topics.push(topic);
        self.own_feedback.push(own);
        self.external_feedback.push(external);
    }

    pub fn num_topics(&self) -> usize {
        self.num_topics
    }

    pub fn num_followers(&self) -> usize {
        self.num_followers
    }

    pub fn len(&self) -> usize {
        self.topics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }

    pub fn topics(&self) -> &[TopicId] {
        &self.topics
    }

    pub fn own_feedback(&self) -> &[Vec<bool>] {
        &self.own_feedback
    }

    pub fn external_feedback(&self) -> &[Vec<ExternalLabel>] {
        &self.external_feedback
    }

    /// Number of posts per topic.
    pub fn topic_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_topics];
        for t in &self.topics {
            counts[t.0] += 1;
        }
        counts
    }

    /// Belief table after all recorded labels.
    pub fn posterior_table<S: Scalar>(&self, prior: BetaPrior<S>) -> Result<BetaPosteriorTable<S>> {
        let mut table = BetaPosteriorTable::new(prior, self.num_topics, self.num_followers);
        for step in 0..self.len() {
            let c = self.topics[step];
            for (v, &liked) in self.own_feedback[step].iter().enumerate() {
                table.record_feedback(c, v, liked)?;
            }
            for e in &self.external_feedback[step] {
                table.record_feedback(e.topic, e.follower, e.liked)?;
            }
        }
        Ok(table)
    }
}

/// Parameters of the synthetic scenario generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar + Serialize", deserialize = "S: Scalar + Deserialize<'de>"))]
pub struct ScenarioGenConfig<S: Scalar> {
    pub topics: usize,
    pub followers: usize,
    /// Symmetric Dirichlet concentration over followers plus self.
    pub gamma: S,
    /// Beta shapes for follower preferences.
    pub q_beta: (S, S),
    /// Beta shapes for own preferences.
    pub x_beta: (S, S),
    /// External rates are drawn from `Unif[0, 2 * mu_bar]`.
    pub mu_bar: S,
    pub horizon: usize,
    /// Pins the self weight after the Dirichlet draw, rescaling followers.
    #[serde(default)]
    pub self_weight: Option<S>,
}

impl<S: Scalar> Default for ScenarioGenConfig<S> {
    fn default() -> Self {
        ScenarioGenConfig {
            topics: 10,
            followers: 10,
            gamma: S::lit(0.8),
            q_beta: (S::lit(0.4), S::lit(0.6)),
            x_beta: (S::lit(0.4), S::lit(0.6)),
            mu_bar: S::zero(),
            horizon: 1000,
            self_weight: None,
        }
    }
}

impl<S: Scalar> ScenarioGenConfig<S> {
    pub fn validate(&self) -> Result<()> {
        if self.topics == 0 || self.followers == 0 || self.horizon == 0 {
            return Err(Error::invalid("topics, followers and horizon must be at least 1"));
        }
        let positive = [self.gamma, self.q_beta.0, self.q_beta.1, self.x_beta.0, self.x_beta.1];
        if positive.iter().any(|&p| !(p > S::zero() && p.is_finite())) {
            return Err(Error::invalid("gamma and beta shapes must be positive and finite"));
        }
        if !(self.mu_bar >= S::zero() && self.mu_bar.is_finite()) {
            return Err(Error::invalid("mu_bar must be nonnegative and finite"));
        }
        if let Some(au) = self.self_weight {
            if !(au >= S::zero() && au <= S::one()) {
                return Err(Error::invalid(format!("self weight {au} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Symmetric Dirichlet draw via normalized Gamma(gamma, 1) variates.
pub fn sample_dirichlet<S: Scalar, R: Rng + ?Sized>(gamma: S, dim: usize, rng: &mut R) -> Vec<S> {
    loop {
        let draws: Vec<S> = (0..dim).map(|_| S::sample_gamma(gamma, rng)).collect();
        let total: S = draws.iter().copied().sum();
        if total > S::zero() && total.is_finite() {
            return draws.into_iter().map(|g| g / total).collect();
        }
    }
}

/// Draws a ground-truth scenario.
///
/// Weights come from one symmetric Dirichlet over the followers plus self,
/// with the self weight taking the residual so the simplex constraint holds
/// to rounding.
pub fn sample_scenario<S: Scalar, R: Rng + ?Sized>(
    cfg: &ScenarioGenConfig<S>,
    rng: &mut R,
) -> Result<PreferenceScenario<S>> {
    cfg.validate()?;
    let k = cfg.topics;
    let n = cfg.followers;
    let w = sample_dirichlet(cfg.gamma, n + 1, rng);
    let a = w[..n].to_vec();
    let au = (S::one() - a.iter().copied().sum::<S>()).max(S::zero());
    let q = Grid::from_fn(k, n, |_, _| S::sample_beta(cfg.q_beta.0, cfg.q_beta.1, rng));
    let x: Vec<S> = (0..k)
        .map(|_| S::sample_beta(cfg.x_beta.0, cfg.x_beta.1, rng))
        .collect();
    let span = S::lit(2.0) * cfg.mu_bar;
    let mu = Grid::from_fn(k, n, |_, _| span * S::sample_unit(rng));
    let mut weights = UtilityWeights::new(a, au)?;
    if let Some(pinned) = cfg.self_weight {
        weights = weights.with_self_weight(pinned)?;
    }
    PreferenceScenario::new(
        weights,
        PreferenceMatrix::new(q)?,
        OwnPreferences::new(x)?,
        mu,
        cfg.horizon,
    )
}

/// Exact Poisson draw; rate zero always yields zero.
pub fn poisson_draw<S: Scalar, R: Rng + ?Sized>(rate: S, rng: &mut R) -> Result<u64> {
    if !rate.is_finite() {
        return Err(Error::NonFinite("poisson rate"));
    }
    if rate < S::zero() {
        return Err(Error::invalid(format!("negative poisson rate {rate}")));
    }
    if rate == S::zero() {
        return Ok(0);
    }
    Ok(S::sample_poisson(rate, rng))
}

/// Cumulative pseudo-regret averaged over runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar + Serialize", deserialize = "S: Scalar + Deserialize<'de>"))]
pub struct RegretTrace<S: Scalar> {
    pub cumulative_regret: Vec<S>,
    /// Standard error of the mean at each step; zero for a single run.
    pub stderr: Vec<S>,
    pub runs: usize,
    pub scenario_digest: String,
}

impl<S: Scalar> RegretTrace<S> {
    pub fn final_regret(&self) -> S {
        self.cumulative_regret.last().copied().unwrap_or_else(S::zero)
    }

    /// Mean cumulative regret after `t` steps (1-based).
    pub fn at(&self, t: usize) -> S {
        self.cumulative_regret[t - 1]
    }
}

/// Short hex digest of any serializable value.
pub fn digest_of<T: Serialize + ?Sized>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("in-memory serialization");
    let hash = Sha256::digest(&bytes);
    hash[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn regret_steps<S: Scalar>(trajectory: &Trajectory, scenario: &PreferenceScenario<S>) -> Result<Vec<S>> {
    Error::check_len("trajectory topics", scenario.topics(), trajectory.num_topics())?;
    Error::check_len("trajectory followers", scenario.followers(), trajectory.num_followers())?;
    let utilities = scenario.step_utilities();
    let best = utilities[scenario.optimal_topic().0];
    let mut total = S::zero();
    let mut out = Vec::with_capacity(trajectory.len());
    for &c in trajectory.topics() {
        Error::check_index("topic", c.0, utilities.len())?;
        total += best - utilities[c.0];
        out.push(total);
    }
    Ok(out)
}

/// Cumulative pseudo-regret of one trajectory against the best fixed topic,
/// computed from the true preferences rather than realized feedback.
pub fn compute_regret<S: Scalar + Serialize>(
    trajectory: &Trajectory,
    scenario: &PreferenceScenario<S>,
) -> Result<RegretTrace<S>> {
    let cumulative_regret = regret_steps(trajectory, scenario)?;
    let stderr = vec![S::zero(); cumulative_regret.len()];
    Ok(RegretTrace {
        cumulative_regret,
        stderr,
        runs: 1,
        scenario_digest: digest_of(scenario),
    })
}

/// Where each Monte Carlo run gets its ground truth from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[serde(bound(serialize = "S: Scalar + Serialize", deserialize = "S: Scalar + Deserialize<'de>"))]
pub enum ScenarioSource<S: Scalar> {
    /// A fresh scenario per run.
    Generated(ScenarioGenConfig<S>),
    /// The same scenario in every run.
    Fixed(PreferenceScenario<S>),
}

/// Independent random stream for run `run` of a batch seeded with `master_seed`.
pub fn run_rng(master_seed: u64, run: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(run);
    rng
}

/// Thread cap from [`THREADS_ENV`], if set to a positive integer.
pub fn thread_limit() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Evaluates `job(run)` for every run index and returns results in index
/// order, whatever the thread count.
pub fn run_ordered<T, F>(runs: usize, threads: Option<usize>, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    match threads.or_else(thread_limit) {
        Some(1) => (0..runs).map(job).collect(),
        limit => {
            let mut builder = rayon::ThreadPoolBuilder::new();
            if let Some(n) = limit {
                builder = builder.num_threads(n);
            }
            let pool = builder
                .build()
                .map_err(|e| Error::Solver(format!("thread pool: {e}")))?;
            pool.install(|| (0..runs).into_par_iter().map(job).collect())
        }
    }
}

/// Everything needed to reproduce one Monte Carlo batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar + Serialize", deserialize = "S: Scalar + Deserialize<'de>"))]
pub struct MonteCarloConfig<S: Scalar> {
    pub source: ScenarioSource<S>,
    pub policy: PolicyConfig<S>,
    pub runs: usize,
    pub master_seed: u64,
}

fn run_one<S: Scalar>(cfg: &MonteCarloConfig<S>, run: usize) -> Result<(PreferenceScenario<S>, Trajectory)> {
    let mut rng = run_rng(cfg.master_seed, run as u64);
    let scenario = match &cfg.source {
        ScenarioSource::Generated(gen) => sample_scenario(gen, &mut rng)?,
        ScenarioSource::Fixed(s) => s.clone(),
    };
    let trajectory = run_episode(&scenario, &cfg.policy, &mut rng)?;
    Ok((scenario, trajectory))
}

/// Averages pseudo-regret traces over `cfg.runs` independent runs.
///
/// Run `i` draws its scenario and episode from [`run_rng`]`(seed, i)` and
/// the reduction is ordered by run index, so the trace does not depend on
/// the thread count.
pub fn monte_carlo_regret<S: Scalar + Serialize>(
    cfg: &MonteCarloConfig<S>,
    threads: Option<usize>,
) -> Result<RegretTrace<S>> {
    if cfg.runs == 0 {
        return Err(Error::invalid("runs must be at least 1"));
    }
    let traces = run_ordered(cfg.runs, threads, |run| {
        let (scenario, trajectory) = run_one(cfg, run)?;
        regret_steps(&trajectory, &scenario)
    })?;
    let (mean, stderr) = mean_and_stderr(&traces);
    Ok(RegretTrace {
        cumulative_regret: mean,
        stderr,
        runs: cfg.runs,
        scenario_digest: digest_of(cfg),
    })
}

/// Columnwise mean and standard error of equal-length rows.
pub fn mean_and_stderr<S: Scalar>(rows: &[Vec<S>]) -> (Vec<S>, Vec<S>) {
    let len = rows.first().map_or(0, Vec::len);
    let runs = S::of_usize(rows.len());
    let mut mean = vec![S::zero(); len];
    for row in rows {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= runs;
    }
    let mut stderr = vec![S::zero(); len];
    if rows.len() > 1 {
        for row in rows {
            for ((s, &v), &m) in stderr.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let dof = runs - S::one();
        for s in &mut stderr {
            *s = (*s / dof / runs).sqrt();
        }
    }
    (mean, stderr)
}

/// Two topics, one follower, `q = [0.9, 0.5]`, equal weights and equal own
/// preferences: the point-estimate policy can lock onto the worse topic.
pub fn appendix_walk_scenario<S: Scalar>(horizon: usize) -> Result<PreferenceScenario<S>> {
    let half = S::lit(0.5);
    PreferenceScenario::without_external(
        UtilityWeights::new(vec![half], half)?,
        PreferenceMatrix::from_rows(vec![vec![S::lit(0.9)], vec![half]])?,
        OwnPreferences::new(vec![half, half])?,
        horizon,
    )
}

/// Outcome of the two-topic lock-in experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkReport {
    pub horizon: usize,
    pub runs: usize,
    pub master_seed: u64,
    /// Mean number of posts on the worse topic.
    pub mean_worse_posts: f64,
    pub stderr_worse_posts: f64,
    /// `mean_worse_posts / horizon`.
    pub mean_fraction: f64,
    /// Mean final pseudo-regret.
    pub mean_regret: f64,
}

/// Runs the two-topic lock-in experiment with point estimates, a
/// `Beta(3, 3)` prior and no external feedback.
pub fn appendix_walk(horizon: usize, runs: usize, master_seed: u64, threads: Option<usize>) -> Result<WalkReport> {
    if runs == 0 {
        return Err(Error::invalid("runs must be at least 1"));
    }
    let scenario = appendix_walk_scenario::<f64>(horizon)?;
    let cfg = MonteCarloConfig {
        source: ScenarioSource::Fixed(scenario),
        policy: PolicyConfig::new(EstimatorKind::PointEstimate, false),
        runs,
        master_seed,
    };
    let per_run = run_ordered(runs, threads, |run| {
        let (scenario, trajectory) = run_one(&cfg, run)?;
        let worse = trajectory.topic_counts()[1] as f64;
        let regret = regret_steps(&trajectory, &scenario)?.last().copied().unwrap_or(0.0);
        Ok(vec![worse, regret])
    })?;
    let (mean, stderr) = mean_and_stderr(&per_run);
    Ok(WalkReport {
        horizon,
        runs,
        master_seed,
        mean_worse_posts: mean[0],
        stderr_worse_posts: stderr[0],
        mean_fraction: mean[0] / horizon as f64,
        mean_regret: mean[1],
    })
}
