use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::TopicId;
use crate::sim::Trajectory;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// The user posted on `topic`; `labels` maps follower id to whether the
    /// follower gave feedback.
    OwnPost {
        topic: TopicId,
        labels: BTreeMap<usize, bool>,
    },
    /// A follower's reaction to a story on `topic` posted by someone else.
    External {
        topic: TopicId,
        follower: usize,
        liked: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackEvent {
    pub t: u64,
    pub kind: EventKind,
}

impl FeedbackEvent {
    pub fn topic(&self) -> TopicId {
        match &self.kind {
            EventKind::OwnPost { topic, .. } | EventKind::External { topic, .. } => *topic,
        }
    }

    pub fn is_own_post(&self) -> bool {
        matches!(self.kind, EventKind::OwnPost { .. })
    }
}

/// Time-ordered feedback history of one user.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackLog {
    num_topics: usize,
    num_followers: usize,
    events: Vec<FeedbackEvent>,
}

impl FeedbackLog {
    /// Validates ordering and index ranges.
    pub fn new(events: Vec<FeedbackEvent>, num_topics: usize, num_followers: usize) -> Result<Self> {
        let mut last = None;
        for (i, e) in events.iter().enumerate() {
            if let Some(prev) = last {
                if e.t < prev {
                    return Err(Error::Ordering {
                        line: i + 1,
                        previous: prev,
                        found: e.t,
                    });
                }
            }
            last = Some(e.t);
            Error::check_index("topic", e.topic().0, num_topics)?;
            match &e.kind {
                EventKind::OwnPost { labels, .. } => {
                    if let Some((&v, _)) = labels.iter().next_back() {
                        Error::check_index("follower", v, num_followers)?;
                    }
                }
                EventKind::External { follower, .. } => {
                    Error::check_index("follower", *follower, num_followers)?;
                }
            }
        }
        Ok(FeedbackLog {
            num_topics,
            num_followers,
            events,
        })
    }

    /// Builds a log whose dimensions are the smallest consistent with the
    /// events, raised to `min_topics` / `min_followers` when given.
    pub fn with_inferred_dimensions(
        events: Vec<FeedbackEvent>,
        min_topics: Option<usize>,
        min_followers: Option<usize>,
    ) -> Result<Self> {
        let mut topics = min_topics.unwrap_or(0);
        let mut followers = min_followers.unwrap_or(0);
        for e in &events {
            topics = topics.max(e.topic().0 + 1);
            match &e.kind {
                EventKind::OwnPost { labels, .. } => {
                    if let Some((&v, _)) = labels.iter().next_back() {
                        followers = followers.max(v + 1);
                    }
                }
                EventKind::External { follower, .. } => followers = followers.max(follower + 1),
            }
        }
        Self::new(events, topics, followers)
    }

    /// Log of a simulated run; step `i` is stamped `t = i + 1` and its
    /// external labels share the step's timestamp.
    pub fn from_trajectory(trajectory: &Trajectory) -> Self {
        let mut events = Vec::new();
        for step in 0..trajectory.len() {
            let t = step as u64 + 1;
            let labels = trajectory.own_feedback()[step].iter().copied().enumerate().collect();
            events.push(FeedbackEvent {
                t,
                kind: EventKind::OwnPost {
                    topic: trajectory.topics()[step],
                    labels,
                },
            });
            for e in &trajectory.external_feedback()[step] {
                events.push(FeedbackEvent {
                    t,
                    kind: EventKind::External {
                        topic: e.topic,
                        follower: e.follower,
                        liked: e.liked,
                    },
                });
            }
        }
        FeedbackLog {
            num_topics: trajectory.num_topics(),
            num_followers: trajectory.num_followers(),
            events,
        }
    }

    pub fn num_topics(&self) -> usize {
        self.num_topics
    }

    pub fn num_followers(&self) -> usize {
        self.num_followers
    }

    pub fn events(&self) -> &[FeedbackEvent] {
        &self.events
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Topics of the user's own posts, in order.
    pub fn posted_topics(&self) -> Vec<TopicId> {
        self.events
            .iter()
            .filter(|e| e.is_own_post())
            .map(FeedbackEvent::topic)
            .collect()
    }
}
