//! Posting policy for unknown follower preferences.
//!
//! At every step the user replaces the unknown preferences by estimates
//! (posterior mode or a posterior draw), posts the topic maximizing the
//! estimated utility, then folds the feedback of that step into the belief
//! table before the next decision.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::softmax_prob;
use crate::inference::{BetaPosteriorTable, BetaPrior};
use crate::model::{Grid, OwnPreferences, PreferenceScenario, TopicId, UtilityWeights};
use crate::scalar::{argmax_first, Scalar};
use crate::sim::{ExternalLabel, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// Posterior mode of every cell.
    PointEstimate,
    /// One fresh posterior draw of every cell per decision.
    PosteriorSample,
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EstimatorKind::PointEstimate => "point",
            EstimatorKind::PosteriorSample => "posterior",
        })
    }
}

/// How the topic is picked from estimated scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
#[serde(bound(serialize = "S: Scalar + Serialize", deserialize = "S: Scalar + Deserialize<'de>"))]
pub enum ChoiceRule<S: Scalar> {
    /// Deterministic argmax, lowest index on ties.
    Argmax,
    /// Draw from `softmax(lambda * score)`. Used to generate logs that follow
    /// the smoothed choice model assumed by the estimators.
    Softmax { lambda: S },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar + Serialize", deserialize = "S: Scalar + Deserialize<'de>"))]
pub struct PolicyConfig<S: Scalar> {
    pub estimator: EstimatorKind,
    pub prior: BetaPrior<S>,
    pub use_external_feedback: bool,
    #[serde(default = "argmax_rule")]
    pub choice: ChoiceRule<S>,
}

fn argmax_rule<S: Scalar>() -> ChoiceRule<S> {
    ChoiceRule::Argmax
}

impl<S: Scalar> PolicyConfig<S> {
    pub fn new(estimator: EstimatorKind, use_external_feedback: bool) -> Self {
        PolicyConfig {
            estimator,
            prior: BetaPrior::default(),
            use_external_feedback,
            choice: ChoiceRule::Argmax,
        }
    }

    pub fn with_prior(mut self, prior: BetaPrior<S>) -> Self {
        self.prior = prior;
        self
    }

    pub fn with_choice(mut self, choice: ChoiceRule<S>) -> Self {
        self.choice = choice;
        self
    }
}

/// Preference estimates for every (topic, follower) cell.
pub fn estimate_preferences<S: Scalar, R: Rng + ?Sized>(
    table: &BetaPosteriorTable<S>,
    estimator: EstimatorKind,
    rng: &mut R,
) -> Result<Grid<S>> {
    match estimator {
        EstimatorKind::PointEstimate => table.map_estimates(),
        EstimatorKind::PosteriorSample => Ok(table.sample_estimates(rng)),
    }
}

fn estimated_scores<S: Scalar>(estimates: &Grid<S>, weights: &UtilityWeights<S>, x: &OwnPreferences<S>) -> Vec<S> {
    (0..estimates.topics())
        .map(|c| weights.score(estimates.row(c), x.get(c)))
        .collect()
}

fn check_dimensions<S: Scalar>(
    table: &BetaPosteriorTable<S>,
    weights: &UtilityWeights<S>,
    x: &OwnPreferences<S>,
) -> Result<()> {
    Error::check_len("follower weights", table.followers(), weights.followers())?;
    Error::check_len("own preferences", table.topics(), x.len())?;
    if table.topics() == 0 {
        return Err(Error::invalid("no topics to choose from"));
    }
    Ok(())
}

/// Empirical argmax of estimated utility, lowest index on ties.
pub fn choose_topic<S: Scalar, R: Rng + ?Sized>(
    table: &BetaPosteriorTable<S>,
    weights: &UtilityWeights<S>,
    x: &OwnPreferences<S>,
    estimator: EstimatorKind,
    rng: &mut R,
) -> Result<TopicId> {
    choose_with_rule(table, weights, x, estimator, ChoiceRule::Argmax, rng)
}

pub fn choose_with_rule<S: Scalar, R: Rng + ?Sized>(
    table: &BetaPosteriorTable<S>,
    weights: &UtilityWeights<S>,
    x: &OwnPreferences<S>,
    estimator: EstimatorKind,
    choice: ChoiceRule<S>,
    rng: &mut R,
) -> Result<TopicId> {
    check_dimensions(table, weights, x)?;
    let estimates = estimate_preferences(table, estimator, rng)?;
    let scores = estimated_scores(&estimates, weights, x);
    match choice {
        ChoiceRule::Argmax => Ok(TopicId(argmax_first(scores).expect("nonempty"))),
        ChoiceRule::Softmax { lambda } => {
            let probs = softmax_prob(&scores, lambda)?;
            Ok(TopicId(sample_categorical(&probs, rng)))
        }
    }
}

fn sample_categorical<S: Scalar, R: Rng + ?Sized>(probs: &[S], rng: &mut R) -> usize {
    let u = S::sample_unit(rng);
    let mut acc = S::zero();
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding left u above the accumulated mass; take the last positive entry
    probs.iter().rposition(|&p| p > S::zero()).unwrap_or(0)
}

fn bernoulli<S: Scalar, R: Rng + ?Sized>(p: S, rng: &mut R) -> bool {
    S::sample_unit(rng) < p
}

/// Runs the policy for `scenario.horizon()` steps.
///
/// Each step: choose a topic from the current beliefs, draw one
/// Bernoulli(q[c][v]) label per follower, then, when external feedback is
/// enabled, draw Poisson(mu[c][v]) exposures for every cell with one
/// Bernoulli(q[c][v]) label each. All labels of step `t` are recorded after
/// the decision of step `t`.
pub fn run_episode<S: Scalar, R: Rng + ?Sized>(
    scenario: &PreferenceScenario<S>,
    config: &PolicyConfig<S>,
    rng: &mut R,
) -> Result<Trajectory> {
    run_episode_for(scenario, config, scenario.horizon(), rng)
}

/// [`run_episode`] with an explicit number of steps (may be zero).
pub fn run_episode_for<S: Scalar, R: Rng + ?Sized>(
    scenario: &PreferenceScenario<S>,
    config: &PolicyConfig<S>,
    steps: usize,
    rng: &mut R,
) -> Result<Trajectory> {
    let k = scenario.topics();
    let n = scenario.followers();
    let q = scenario.preferences();
    let mu = scenario.external_rates();
    let mut table = BetaPosteriorTable::new(config.prior, k, n);
    let mut trajectory = Trajectory::new(k, n);

    for _ in 0..steps {
        let c = choose_with_rule(
            &table,
            scenario.weights(),
            scenario.own_preferences(),
            config.estimator,
            config.choice,
            rng,
        )?;
        let own: Vec<bool> = (0..n).map(|v| bernoulli(q.get(c.0, v), rng)).collect();
        for (v, &liked) in own.iter().enumerate() {
            table.record_feedback(c, v, liked)?;
        }

        let mut external = Vec::new();
        if config.use_external_feedback {
            for ec in 0..k {
                for v in 0..n {
                    let exposures = poisson_count(mu.get(ec, v), rng);
                    for _ in 0..exposures {
                        let liked = bernoulli(q.get(ec, v), rng);
                        table.record_feedback(TopicId(ec), v, liked)?;
                        external.push(ExternalLabel {
                            topic: TopicId(ec),
                            follower: v,
                            liked,
                        });
                    }
                }
            }
        }
        trajectory.push_step(c, own, external);
    }
    Ok(trajectory)
}

fn poisson_count<S: Scalar, R: Rng + ?Sized>(rate: S, rng: &mut R) -> u64 {
    if rate > S::zero() {
        S::sample_poisson(rate, rng)
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PreferenceMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn weights(a: Vec<f64>, au: f64) -> UtilityWeights<f64> {
        UtilityWeights::new(a, au).unwrap()
    }

    #[test]
    fn point_estimate_with_flat_beliefs_follows_own_preference() {
        let table = BetaPosteriorTable::new(BetaPrior::default(), 2, 1);
        let x = OwnPreferences::new(vec![0.1, 0.9]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c = choose_topic(
            &table,
            &weights(vec![0.5], 0.5),
            &x,
            EstimatorKind::PointEstimate,
            &mut rng,
        )
        .unwrap();
        assert_eq!(c, TopicId(1));
    }

    #[test]
    fn full_tie_goes_to_topic_zero() {
        let table = BetaPosteriorTable::new(BetaPrior::default(), 4, 2);
        let x = OwnPreferences::new(vec![0.5; 4]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c = choose_topic(
            &table,
            &weights(vec![0.3, 0.3], 0.4),
            &x,
            EstimatorKind::PointEstimate,
            &mut rng,
        )
        .unwrap();
        assert_eq!(c, TopicId(0));
    }

    #[test]
    fn concentrated_posterior_picks_liked_topic() {
        let mut table = BetaPosteriorTable::new(BetaPrior::default(), 3, 2);
        for v in 0..2 {
            table.record_counts(TopicId(0), v, 1_000_000, 0).unwrap();
        }
        let x = OwnPreferences::new(vec![0.0, 1.0, 1.0]).unwrap();
        let w = weights(vec![0.5, 0.5], 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let hits = (0..1000)
            .filter(|_| choose_topic(&table, &w, &x, EstimatorKind::PosteriorSample, &mut rng).unwrap() == TopicId(0))
            .count();
        assert!(hits as f64 / 1000.0 >= 0.999, "hits {hits}");
    }

    #[test]
    fn degenerate_prior_propagates() {
        let table = BetaPosteriorTable::new(BetaPrior::new(1.0, 1.0).unwrap(), 2, 1);
        let x = OwnPreferences::new(vec![0.1, 0.9]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = choose_topic(
            &table,
            &weights(vec![0.5], 0.5),
            &x,
            EstimatorKind::PointEstimate,
            &mut rng,
        );
        assert!(matches!(err, Err(Error::DegeneratePrior { .. })));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let table = BetaPosteriorTable::new(BetaPrior::default(), 2, 2);
        let x = OwnPreferences::new(vec![0.1, 0.9]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(choose_topic(
            &table,
            &weights(vec![0.5], 0.5),
            &x,
            EstimatorKind::PointEstimate,
            &mut rng
        )
        .is_err());
    }

    fn scenario(q: Vec<Vec<f64>>, mu: f64, horizon: usize) -> PreferenceScenario<f64> {
        let k = q.len();
        let n = q[0].len();
        let a = vec![0.8 / n as f64; n];
        PreferenceScenario::new(
            weights(a, 0.2),
            PreferenceMatrix::from_rows(q).unwrap(),
            OwnPreferences::new(vec![0.5; k]).unwrap(),
            Grid::filled(k, n, mu),
            horizon,
        )
        .unwrap()
    }

    #[test]
    fn zero_steps_give_empty_trajectory() {
        let s = scenario(vec![vec![0.3, 0.6]; 3], 0.0, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = run_episode_for(&s, &PolicyConfig::new(EstimatorKind::PointEstimate, false), 0, &mut rng).unwrap();
        assert!(t.is_empty());
    }

    #[test]
    fn certain_preferences_always_give_likes() {
        let s = scenario(vec![vec![1.0, 1.0]; 3], 0.0, 50);
        for est in [EstimatorKind::PointEstimate, EstimatorKind::PosteriorSample] {
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let t = run_episode(&s, &PolicyConfig::new(est, false), &mut rng).unwrap();
            assert_eq!(t.len(), 50);
            assert!(t.own_feedback().iter().flatten().all(|&l| l));
        }
    }

    #[test]
    fn trajectory_replays_into_final_table() {
        let s = scenario(vec![vec![0.2, 0.7], vec![0.5, 0.5], vec![0.9, 0.1]], 0.7, 200);
        for (est, ext) in [
            (EstimatorKind::PointEstimate, true),
            (EstimatorKind::PosteriorSample, true),
            (EstimatorKind::PosteriorSample, false),
        ] {
            let config = PolicyConfig::new(est, ext);
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let t = run_episode(&s, &config, &mut rng).unwrap();
            // rebuild the table by an independent path: count labels per cell
            let mut likes = [[0u64; 2]; 3];
            let mut dislikes = [[0u64; 2]; 3];
            for step in 0..t.len() {
                let c = t.topics()[step].0;
                for (v, &l) in t.own_feedback()[step].iter().enumerate() {
                    if l {
                        likes[c][v] += 1
                    } else {
                        dislikes[c][v] += 1
                    }
                }
                for e in &t.external_feedback()[step] {
                    if e.liked {
                        likes[e.topic.0][e.follower] += 1
                    } else {
                        dislikes[e.topic.0][e.follower] += 1
                    }
                }
            }
            let table = t.posterior_table(config.prior).unwrap();
            for c in 0..3 {
                for v in 0..2 {
                    assert_eq!(table.likes(TopicId(c), v).unwrap(), likes[c][v]);
                    assert_eq!(table.dislikes(TopicId(c), v).unwrap(), dislikes[c][v]);
                }
            }
            if !ext {
                assert!(t.external_feedback().iter().all(Vec::is_empty));
            }
        }
    }

    #[test]
    fn point_estimate_episode_is_a_function_of_the_seed() {
        let s = scenario(vec![vec![0.2, 0.7], vec![0.5, 0.5], vec![0.9, 0.1]], 1.0, 100);
        let config = PolicyConfig::new(EstimatorKind::PointEstimate, true);
        let a = run_episode(&s, &config, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = run_episode(&s, &config, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn softmax_rule_explores_every_topic() {
        let s = scenario(vec![vec![0.5, 0.5]; 3], 0.0, 300);
        let config =
            PolicyConfig::new(EstimatorKind::PointEstimate, false).with_choice(ChoiceRule::Softmax { lambda: 0.0 });
        let t = run_episode(&s, &config, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let counts = t.topic_counts();
        assert!(counts.iter().all(|&n| n > 50), "{counts:?}");
    }
}
