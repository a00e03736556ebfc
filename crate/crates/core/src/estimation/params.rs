use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Grid, OwnPreferences, TopicId, UtilityWeights};
use crate::scalar::Scalar;
use crate::sim::sample_dirichlet;

/// Self weight below which `x = z / a_u` is not recovered.
pub const SELF_WEIGHT_GUARD: f64 = 1e-6;

/// Utility parameters in the convex coordinates `(a, a_u, z)` with
/// `z_c = a_u * x_c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Scalar + Serialize", deserialize = "S: Scalar + Deserialize<'de>"))]
pub struct UtilityParams<S: Scalar> {
    pub follower_weights: Vec<S>,
    pub self_weight: S,
    pub z: Vec<S>,
}

/// Which parameters an estimator is allowed to move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeasibleRegion {
    /// Weights on the simplex, `0 <= z_c <= a_u`.
    Full,
    /// Null model: `a = 0`, `a_u = 1`, `0 <= z_c <= 1`.
    SelfOnly,
}

impl<S: Scalar> UtilityParams<S> {
    pub fn from_natural(weights: &UtilityWeights<S>, x: &OwnPreferences<S>) -> Self {
        let au = weights.self_weight();
        UtilityParams {
            follower_weights: weights.follower_weights().to_vec(),
            self_weight: au,
            z: x.values().iter().map(|&xc| au * xc).collect(),
        }
    }

    /// Uniform weights over followers plus self and `z = a_u / 2`.
    pub fn uniform(followers: usize, topics: usize) -> Self {
        let w = S::one() / S::of_usize(followers + 1);
        UtilityParams {
            follower_weights: vec![w; followers],
            self_weight: w,
            z: vec![w / S::lit(2.0); topics],
        }
    }

    /// Null-model point `a = 0`, `a_u = 1`, `z = x`.
    pub fn self_only(followers: usize, x: &[S]) -> Self {
        UtilityParams {
            follower_weights: vec![S::zero(); followers],
            self_weight: S::one(),
            z: x.to_vec(),
        }
    }

    /// Random feasible point: Dirichlet(1) weights, `z_c ~ a_u * U[0, 1)`.
    pub fn random<R: Rng + ?Sized>(followers: usize, topics: usize, region: FeasibleRegion, rng: &mut R) -> Self {
        match region {
            FeasibleRegion::Full => {
                let w = sample_dirichlet(S::one(), followers + 1, rng);
                let au = (S::one() - w[..followers].iter().copied().sum::<S>()).max(S::zero());
                let z = (0..topics).map(|_| au * S::sample_unit(rng)).collect();
                UtilityParams {
                    follower_weights: w[..followers].to_vec(),
                    self_weight: au,
                    z,
                }
            }
            FeasibleRegion::SelfOnly => {
                let x: Vec<S> = (0..topics).map(|_| S::sample_unit(rng)).collect();
                Self::self_only(followers, &x)
            }
        }
    }

    pub fn followers(&self) -> usize {
        self.follower_weights.len()
    }

    pub fn topics(&self) -> usize {
        self.z.len()
    }

    pub fn is_feasible(&self, tol: f64) -> bool {
        let tol = S::lit(tol);
        let total: S = self.follower_weights.iter().copied().sum::<S>() + self.self_weight;
        self.follower_weights.iter().all(|&a| a >= -tol)
            && self.self_weight >= -tol
            && (total - S::one()).abs() <= tol
            && self.z.iter().all(|&z| z >= -tol && z <= self.self_weight + tol)
    }

    /// Recovers `(weights, x, identifiable)`; `x` is zero when `a_u` is below
    /// [`SELF_WEIGHT_GUARD`].
    pub fn to_natural(&self) -> Result<(UtilityWeights<S>, OwnPreferences<S>, bool)> {
        let a: Vec<S> = self.follower_weights.iter().map(|&w| w.max(S::zero())).collect();
        let total: S = a.iter().copied().sum();
        let au = (S::one() - total).max(S::zero());
        let weights = UtilityWeights::new(a, au)?;
        if au < S::lit(SELF_WEIGHT_GUARD) {
            return Ok((weights, OwnPreferences::zeros(self.topics()), false));
        }
        let x = self.z.iter().map(|&z| (z / au).max(S::zero()).min(S::one())).collect();
        Ok((weights, OwnPreferences::new(x)?, true))
    }

    pub(crate) fn to_vec(&self) -> Vec<S> {
        let mut v = self.follower_weights.clone();
        v.push(self.self_weight);
        v.extend_from_slice(&self.z);
        v
    }

    pub(crate) fn from_slice(v: &[S], followers: usize) -> Self {
        UtilityParams {
            follower_weights: v[..followers].to_vec(),
            self_weight: v[followers],
            z: v[followers + 1..].to_vec(),
        }
    }

    pub fn distance2(&self, other: &Self) -> S {
        self.to_vec()
            .iter()
            .zip(other.to_vec())
            .map(|(&a, b)| (a - b) * (a - b))
            .sum()
    }

    /// Score of every topic under estimates `q`: `a . q_c + z_c`.
    pub fn scores(&self, q: &Grid<S>) -> Vec<S> {
        (0..q.topics())
            .map(|c| {
                self.follower_weights
                    .iter()
                    .zip(q.row(c))
                    .fold(self.z[c], |acc, (&a, &qv)| acc + a * qv)
            })
            .collect()
    }
}

/// One observed decision: the preference estimates in force at that step,
/// the topic actually posted, and the weight of this row in the objective
/// (`1 / S` for each of `S` posterior draws).
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceObservation<S: Scalar> {
    pub estimates: Grid<S>,
    pub chosen: TopicId,
    pub weight: S,
}

pub(crate) fn check_observations<S: Scalar>(params: &UtilityParams<S>, obs: &[ChoiceObservation<S>]) -> Result<()> {
    for o in obs {
        Error::check_len("estimate topics", params.topics(), o.estimates.topics())?;
        Error::check_len("estimate followers", params.followers(), o.estimates.followers())?;
        Error::check_index("observed topic", o.chosen.0, params.topics())?;
    }
    Ok(())
}
