//! Causal replay of a feedback log into per-decision belief snapshots.

use rand::Rng;

use crate::error::Result;
use crate::inference::{BetaPosteriorTable, BetaPrior};
use crate::model::{Grid, TopicId};
use crate::scalar::Scalar;

use super::log::{EventKind, FeedbackLog};
use super::params::ChoiceObservation;

/// Beliefs in force when one own post was made.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayStep<S: Scalar> {
    pub t: u64,
    pub topic: TopicId,
    /// Counts from every event strictly before `t`.
    pub table: BetaPosteriorTable<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replay<S: Scalar> {
    pub steps: Vec<ReplayStep<S>>,
    pub num_topics: usize,
    pub num_followers: usize,
}

/// Replays `log` under `prior`; each own post sees only events with a
/// strictly smaller timestamp.
pub fn replay<S: Scalar>(log: &FeedbackLog, prior: BetaPrior<S>) -> Replay<S> {
    let mut table = BetaPosteriorTable::new(prior, log.num_topics(), log.num_followers());
    let mut steps = Vec::new();
    let events = log.events();
    let mut i = 0;
    while i < events.len() {
        let t = events[i].t;
        let end = events[i..]
            .iter()
            .position(|e| e.t != t)
            .map_or(events.len(), |p| i + p);
        for e in &events[i..end] {
            if let EventKind::OwnPost { topic, .. } = &e.kind {
                steps.push(ReplayStep {
                    t,
                    topic: *topic,
                    table: table.clone(),
                });
            }
        }
        for e in &events[i..end] {
            // indices were validated when the log was built
            match &e.kind {
                EventKind::OwnPost { topic, labels } => {
                    for (&v, &liked) in labels {
                        table.record_feedback(*topic, v, liked).expect("validated log");
                    }
                }
                EventKind::External { topic, follower, liked } => {
                    table.record_feedback(*topic, *follower, *liked).expect("validated log");
                }
            }
        }
        i = end;
    }
    Replay {
        steps,
        num_topics: log.num_topics(),
        num_followers: log.num_followers(),
    }
}

impl<S: Scalar> Replay<S> {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn topics(&self) -> Vec<TopicId> {
        self.steps.iter().map(|s| s.topic).collect()
    }

    /// Posterior-mode snapshot per own post.
    pub fn point_estimates(&self) -> Result<Vec<Grid<S>>> {
        self.steps.iter().map(|s| s.table.map_estimates()).collect()
    }

    /// One observation per own post with posterior-mode estimates.
    pub fn point_observations(&self) -> Result<Vec<ChoiceObservation<S>>> {
        self.steps
            .iter()
            .map(|s| {
                Ok(ChoiceObservation {
                    estimates: s.table.map_estimates()?,
                    chosen: s.topic,
                    weight: S::one(),
                })
            })
            .collect()
    }

    /// `samples` frozen posterior draws per own post, each weighted
    /// `1 / samples`.
    pub fn sampled_observations<R: Rng + ?Sized>(&self, samples: usize, rng: &mut R) -> Vec<ChoiceObservation<S>> {
        let weight = S::one() / S::of_usize(samples.max(1));
        let mut out = Vec::with_capacity(self.steps.len() * samples);
        for s in &self.steps {
            for _ in 0..samples {
                out.push(ChoiceObservation {
                    estimates: s.table.sample_estimates(rng),
                    chosen: s.topic,
                    weight,
                });
            }
        }
        out
    }
}
