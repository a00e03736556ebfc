//! Beta-Bernoulli beliefs over follower preferences.
//!
//! Each (topic, follower) cell carries like/dislike counts `n`, `nbar` on top
//! of a shared `Beta(alpha, beta)` prior, so the posterior for the cell is
//! `Beta(alpha + n, beta + nbar)`. Two summaries feed the posting policy: the
//! posterior mode and a fresh posterior draw.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Grid, TopicId};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPrior<S>")]
#[serde(bound(serialize = "S: Scalar + Serialize", deserialize = "S: Scalar + Deserialize<'de>"))]
pub struct BetaPrior<S: Scalar> {
    alpha: S,
    beta: S,
}

#[derive(Deserialize)]
struct RawPrior<S> {
    alpha: S,
    beta: S,
}

impl<S: Scalar> TryFrom<RawPrior<S>> for BetaPrior<S> {
    type Error = Error;
    fn try_from(r: RawPrior<S>) -> Result<Self> {
        BetaPrior::new(r.alpha, r.beta)
    }
}

impl<S: Scalar> BetaPrior<S> {
    pub fn new(alpha: S, beta: S) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite()) {
            return Err(Error::NonFinite("beta prior"));
        }
        if alpha <= S::zero() || beta <= S::zero() {
            return Err(Error::invalid(format!(
                "beta prior needs alpha > 0 and beta > 0, got ({alpha}, {beta})"
            )));
        }
        Ok(BetaPrior { alpha, beta })
    }

    pub fn alpha(&self) -> S {
        self.alpha
    }

    pub fn beta(&self) -> S {
        self.beta
    }

    /// `alpha + beta`.
    pub fn strength(&self) -> S {
        self.alpha + self.beta
    }
}

impl<S: Scalar> Default for BetaPrior<S> {
    /// `Beta(3, 3)`: symmetric and with `alpha + beta > 3`.
    fn default() -> Self {
        BetaPrior {
            alpha: S::lit(3.0),
            beta: S::lit(3.0),
        }
    }
}

/// Like/dislike counts for every (topic, follower) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar + Serialize", deserialize = "S: Scalar + Deserialize<'de>"))]
pub struct BetaPosteriorTable<S: Scalar> {
    prior: BetaPrior<S>,
    topics: usize,
    followers: usize,
    likes: Vec<u64>,
    dislikes: Vec<u64>,
}

impl<S: Scalar> BetaPosteriorTable<S> {
    pub fn new(prior: BetaPrior<S>, topics: usize, followers: usize) -> Self {
        BetaPosteriorTable {
            prior,
            topics,
            followers,
            likes: vec![0; topics * followers],
            dislikes: vec![0; topics * followers],
        }
    }

    pub fn prior(&self) -> &BetaPrior<S> {
        &self.prior
    }

    pub fn topics(&self) -> usize {
        self.topics
    }

    pub fn followers(&self) -> usize {
        self.followers
    }

    fn cell(&self, c: TopicId, v: usize) -> Result<usize> {
        Error::check_index("topic", c.0, self.topics)?;
        Error::check_index("follower", v, self.followers)?;
        Ok(c.0 * self.followers + v)
    }

    /// Adds one labeled observation for `(c, v)`.
    pub fn record_feedback(&mut self, c: TopicId, v: usize, liked: bool) -> Result<()> {
        let i = self.cell(c, v)?;
        if liked {
            self.likes[i] += 1;
        } else {
            self.dislikes[i] += 1;
        }
        Ok(())
    }

    /// Value-semantic variant of [`record_feedback`](Self::record_feedback).
    pub fn with_feedback(mut self, c: TopicId, v: usize, liked: bool) -> Result<Self> {
        self.record_feedback(c, v, liked)?;
        Ok(self)
    }

    /// Adds `likes` and `dislikes` observations at once.
    pub fn record_counts(&mut self, c: TopicId, v: usize, likes: u64, dislikes: u64) -> Result<()> {
        let i = self.cell(c, v)?;
        self.likes[i] += likes;
        self.dislikes[i] += dislikes;
        Ok(())
    }

    pub fn likes(&self, c: TopicId, v: usize) -> Result<u64> {
        Ok(self.likes[self.cell(c, v)?])
    }

    pub fn dislikes(&self, c: TopicId, v: usize) -> Result<u64> {
        Ok(self.dislikes[self.cell(c, v)?])
    }

    /// Posterior parameters `(alpha + n, beta + nbar)`.
    pub fn posterior(&self, c: TopicId, v: usize) -> Result<(S, S)> {
        let i = self.cell(c, v)?;
        Ok(self.posterior_at(i))
    }

    fn posterior_at(&self, i: usize) -> (S, S) {
        (
            self.prior.alpha + S::from_count(self.likes[i]),
            self.prior.beta + S::from_count(self.dislikes[i]),
        )
    }

    fn map_at(&self, i: usize) -> Result<S> {
        let (a, b) = self.posterior_at(i);
        let two = S::lit(2.0);
        let denominator = a + b - two;
        if denominator <= S::zero() {
            return Err(Error::DegeneratePrior {
                denominator: denominator.to_f64_lossy(),
            });
        }
        let mode = (a - S::one()) / denominator;
        Ok(mode.max(S::zero()).min(S::one()))
    }

    /// Posterior mode `(alpha + n - 1) / (alpha + beta + n + nbar - 2)`,
    /// clamped to `[0, 1]`.
    pub fn map_estimate(&self, c: TopicId, v: usize) -> Result<S> {
        let i = self.cell(c, v)?;
        self.map_at(i)
    }

    /// One draw from `Beta(alpha + n, beta + nbar)`.
    pub fn sample_estimate<R: Rng + ?Sized>(&self, c: TopicId, v: usize, rng: &mut R) -> Result<S> {
        let i = self.cell(c, v)?;
        let (a, b) = self.posterior_at(i);
        Ok(S::sample_beta(a, b, rng))
    }

    /// Posterior modes for every cell.
    pub fn map_estimates(&self) -> Result<Grid<S>> {
        let mut out = Grid::filled(self.topics, self.followers, S::zero());
        for c in 0..self.topics {
            for v in 0..self.followers {
                out.set(c, v, self.map_at(c * self.followers + v)?);
            }
        }
        Ok(out)
    }

    /// Independent posterior draws for every cell, in row-major order.
    pub fn sample_estimates<R: Rng + ?Sized>(&self, rng: &mut R) -> Grid<S> {
        Grid::from_fn(self.topics, self.followers, |c, v| {
            let (a, b) = self.posterior_at(c * self.followers + v);
            S::sample_beta(a, b, rng)
        })
    }
}
