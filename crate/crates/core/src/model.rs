//! Ground-truth model objects: topics, utility weights, follower and own
//! preferences, and the evaluation of expected per-step utility.
//!
//! The utility of posting topic `c` is the convex combination
//! `sum_v a_v * q[c][v] + a_u * x[c]`. With known preferences the optimal
//! policy is deterministic: always post the topic maximizing that score.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{argmax_first, Scalar};

/// Tolerance for the weight-simplex constraint at construction time.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// Dense topic identifier in `[0, K)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TopicId(pub usize);

impl TopicId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl std::fmt::Display for TopicId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Row-major topics x followers matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<S> {
    topics: usize,
    followers: usize,
    data: Vec<S>,
}

impl<S: Scalar> Grid<S> {
    pub fn filled(topics: usize, followers: usize, value: S) -> Self {
        Grid {
            topics,
            followers,
            data: vec![value; topics * followers],
        }
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        let topics = rows.len();
        let followers = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(topics * followers);
        for row in rows {
            Error::check_len("matrix row", followers, row.len())?;
            data.extend(row);
        }
        Ok(Grid {
            topics,
            followers,
            data,
        })
    }

    pub fn from_fn(topics: usize, followers: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(topics * followers);
        for c in 0..topics {
            for v in 0..followers {
                data.push(f(c, v));
            }
        }
        Grid {
            topics,
            followers,
            data,
        }
    }

    pub fn topics(&self) -> usize {
        self.topics
    }

    pub fn followers(&self) -> usize {
        self.followers
    }

    pub fn get(&self, c: usize, v: usize) -> S {
        self.data[c * self.followers + v]
    }

    pub fn set(&mut self, c: usize, v: usize, value: S) {
        self.data[c * self.followers + v] = value;
    }

    pub fn row(&self, c: usize) -> &[S] {
        &self.data[c * self.followers..(c + 1) * self.followers]
    }

    pub fn values(&self) -> &[S] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<S>> {
        (0..self.topics).map(|c| self.row(c).to_vec()).collect()
    }
}

impl<S: Scalar + Serialize> Serialize for Grid<S> {
    fn serialize<Ser: serde::Serializer>(&self, s: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de, S: Scalar + Deserialize<'de>> Deserialize<'de> for Grid<S> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<S>>::deserialize(d)?;
        Grid::from_rows(rows).map_err(serde::de::Error::custom)
    }
}

fn check_unit_interval<S: Scalar>(what: &'static str, values: &[S]) -> Result<()> {
    for &v in values {
        if !v.is_finite() {
            return Err(Error::NonFinite(what));
        }
        if v < S::zero() || v > S::one() {
            return Err(Error::invalid(format!("{what} entry {v} outside [0, 1]")));
        }
    }
    Ok(())
}

/// Weights `a_v` on each follower's feedback and `a_u` on own preferences.
///
/// All weights are nonnegative and sum to one within [`SIMPLEX_TOLERANCE`].
/// Construction rejects violations instead of renormalizing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWeights<S>", bound(deserialize = "S: Scalar + Deserialize<'de>"))]
pub struct UtilityWeights<S> {
    #[serde(rename = "followers")]
    follower_weights: Vec<S>,
    #[serde(rename = "self")]
    self_weight: S,
}

#[derive(Deserialize)]
struct RawWeights<S> {
    followers: Vec<S>,
    #[serde(rename = "self")]
    self_weight: S,
}

impl<S: Scalar> TryFrom<RawWeights<S>> for UtilityWeights<S> {
    type Error = Error;
    fn try_from(raw: RawWeights<S>) -> Result<Self> {
        UtilityWeights::new(raw.followers, raw.self_weight)
    }
}

impl<S: Scalar> UtilityWeights<S> {
    pub fn new(follower_weights: Vec<S>, self_weight: S) -> Result<Self> {
        let all = follower_weights.iter().chain(std::iter::once(&self_weight));
        let mut total = S::zero();
        for &w in all {
            if !w.is_finite() {
                return Err(Error::NonFinite("utility weights"));
            }
            if w < S::zero() {
                return Err(Error::invalid(format!("negative utility weight {w}")));
            }
            total += w;
        }
        if (total - S::one()).abs().to_f64_lossy() > SIMPLEX_TOLERANCE {
            return Err(Error::invalid(format!("utility weights sum to {total}, expected 1")));
        }
        Ok(UtilityWeights {
            follower_weights,
            self_weight,
        })
    }

    /// All weight on own preferences; followers are ignored.
    pub fn self_only(followers: usize) -> Self {
        UtilityWeights {
            follower_weights: vec![S::zero(); followers],
            self_weight: S::one(),
        }
    }

    /// Same follower proportions with the self weight set to `self_weight`.
    /// Follower weights that are all zero become uniform.
    pub fn with_self_weight(&self, self_weight: S) -> Result<Self> {
        if !(self_weight >= S::zero() && self_weight <= S::one()) {
            return Err(Error::invalid(format!("self weight {self_weight} outside [0, 1]")));
        }
        let rest = S::one() - self_weight;
        let total: S = self.follower_weights.iter().copied().sum();
        let n = self.follower_weights.len();
        if n == 0 && rest > S::zero() {
            return Err(Error::invalid("no followers to carry the remaining weight"));
        }
        let follower_weights = if total > S::zero() {
            self.follower_weights.iter().map(|&w| rest * w / total).collect()
        } else {
            vec![rest / S::of_usize(n.max(1)); n]
        };
        // absorb rounding so the simplex check is exact
        let self_weight = S::one() - follower_weights.iter().copied().sum::<S>();
        UtilityWeights::new(follower_weights, self_weight.max(S::zero()))
    }

    pub fn follower_weights(&self) -> &[S] {
        &self.follower_weights
    }

    pub fn self_weight(&self) -> S {
        self.self_weight
    }

    pub fn followers(&self) -> usize {
        self.follower_weights.len()
    }

    /// `a . q_row + a_u * own`.
    pub fn score(&self, q_row: &[S], own: S) -> S {
        self.follower_weights
            .iter()
            .zip(q_row)
            .fold(self.self_weight * own, |acc, (&a, &q)| acc + a * q)
    }
}

/// Follower preferences `q[c][v]`, each the probability that follower `v`
/// gives feedback to a story on topic `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Grid<S>", into = "Grid<S>")]
#[serde(bound(serialize = "S: Scalar + Serialize", deserialize = "S: Scalar + Deserialize<'de>"))]
pub struct PreferenceMatrix<S: Scalar>(Grid<S>);

impl<S: Scalar> TryFrom<Grid<S>> for PreferenceMatrix<S> {
    type Error = Error;
    fn try_from(grid: Grid<S>) -> Result<Self> {
        PreferenceMatrix::new(grid)
    }
}

impl<S: Scalar> From<PreferenceMatrix<S>> for Grid<S> {
    fn from(m: PreferenceMatrix<S>) -> Self {
        m.0
    }
}

impl<S: Scalar> PreferenceMatrix<S> {
    pub fn new(grid: Grid<S>) -> Result<Self> {
        check_unit_interval("preference matrix", grid.values())?;
        Ok(PreferenceMatrix(grid))
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        Self::new(Grid::from_rows(rows)?)
    }

    pub fn grid(&self) -> &Grid<S> {
        &self.0
    }

    pub fn topics(&self) -> usize {
        self.0.topics()
    }

    pub fn followers(&self) -> usize {
        self.0.followers()
    }

    pub fn get(&self, c: usize, v: usize) -> S {
        self.0.get(c, v)
    }

    pub fn row(&self, c: usize) -> &[S] {
        self.0.row(c)
    }
}

/// The user's own topic preferences `x[c]` in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<S>", into = "Vec<S>")]
#[serde(bound(serialize = "S: Scalar + Serialize", deserialize = "S: Scalar + Deserialize<'de>"))]
pub struct OwnPreferences<S: Scalar>(Vec<S>);

impl<S: Scalar> TryFrom<Vec<S>> for OwnPreferences<S> {
    type Error = Error;
    fn try_from(v: Vec<S>) -> Result<Self> {
        OwnPreferences::new(v)
    }
}

impl<S: Scalar> From<OwnPreferences<S>> for Vec<S> {
    fn from(x: OwnPreferences<S>) -> Self {
        x.0
    }
}

impl<S: Scalar> OwnPreferences<S> {
    pub fn new(values: Vec<S>) -> Result<Self> {
        check_unit_interval("own preferences", &values)?;
        Ok(OwnPreferences(values))
    }

    pub fn zeros(topics: usize) -> Self {
        OwnPreferences(vec![S::zero(); topics])
    }

    pub fn values(&self) -> &[S] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, c: usize) -> S {
        self.0[c]
    }
}

/// Ground truth for one user: weights, preferences, external-feedback rates
/// and horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScenario<S>")]
#[serde(bound(serialize = "S: Scalar + Serialize", deserialize = "S: Scalar + Deserialize<'de>"))]
pub struct PreferenceScenario<S: Scalar> {
    weights: UtilityWeights<S>,
    q: PreferenceMatrix<S>,
    x: OwnPreferences<S>,
    mu: Grid<S>,
    horizon: usize,
}

#[derive(Deserialize)]
#[serde(bound(deserialize = "S: Scalar + Deserialize<'de>"))]
struct RawScenario<S: Scalar> {
    weights: UtilityWeights<S>,
    q: PreferenceMatrix<S>,
    x: OwnPreferences<S>,
    mu: Grid<S>,
    horizon: usize,
}

impl<S: Scalar> TryFrom<RawScenario<S>> for PreferenceScenario<S> {
    type Error = Error;
    fn try_from(r: RawScenario<S>) -> Result<Self> {
        PreferenceScenario::new(r.weights, r.q, r.x, r.mu, r.horizon)
    }
}

impl<S: Scalar> PreferenceScenario<S> {
    pub fn new(
        weights: UtilityWeights<S>,
        q: PreferenceMatrix<S>,
        x: OwnPreferences<S>,
        mu: Grid<S>,
        horizon: usize,
    ) -> Result<Self> {
        let topics = q.topics();
        if topics == 0 {
            return Err(Error::invalid("scenario needs at least one topic"));
        }
        Error::check_len("follower weights", q.followers(), weights.followers())?;
        Error::check_len("own preferences", topics, x.len())?;
        Error::check_len("external rate topics", topics, mu.topics())?;
        Error::check_len("external rate followers", q.followers(), mu.followers())?;
        for &m in mu.values() {
            if !m.is_finite() {
                return Err(Error::NonFinite("external rates"));
            }
            if m < S::zero() {
                return Err(Error::invalid(format!("negative external rate {m}")));
            }
        }
        if horizon == 0 {
            return Err(Error::invalid("horizon must be at least 1"));
        }
        Ok(PreferenceScenario {
            weights,
            q,
            x,
            mu,
            horizon,
        })
    }

    /// Scenario without external feedback.
    pub fn without_external(
        weights: UtilityWeights<S>,
        q: PreferenceMatrix<S>,
        x: OwnPreferences<S>,
        horizon: usize,
    ) -> Result<Self> {
        let mu = Grid::filled(q.topics(), q.followers(), S::zero());
        Self::new(weights, q, x, mu, horizon)
    }

    pub fn weights(&self) -> &UtilityWeights<S> {
        &self.weights
    }

    pub fn preferences(&self) -> &PreferenceMatrix<S> {
        &self.q
    }

    pub fn own_preferences(&self) -> &OwnPreferences<S> {
        &self.x
    }

    pub fn external_rates(&self) -> &Grid<S> {
        &self.mu
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn with_horizon(mut self, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::invalid("horizon must be at least 1"));
        }
        self.horizon = horizon;
        Ok(self)
    }

    pub fn topics(&self) -> usize {
        self.q.topics()
    }

    pub fn followers(&self) -> usize {
        self.q.followers()
    }

    /// Expected utility gained from one post on topic `c`.
    pub fn expected_step_utility(&self, c: TopicId) -> Result<S> {
        Error::check_index("topic", c.0, self.topics())?;
        Ok(self.weights.score(self.q.row(c.0), self.x.get(c.0)))
    }

    /// Per-topic expected utilities.
    pub fn step_utilities(&self) -> Vec<S> {
        (0..self.topics())
            .map(|c| self.weights.score(self.q.row(c), self.x.get(c)))
            .collect()
    }

    /// Topic maximizing expected utility, lowest index on ties.
    pub fn optimal_topic(&self) -> TopicId {
        TopicId(argmax_first(self.step_utilities()).expect("at least one topic"))
    }

    /// `T` times the optimal step utility.
    pub fn optimal_cumulative_utility(&self) -> S {
        let best = self.step_utilities()[self.optimal_topic().0];
        S::of_usize(self.horizon) * best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn scenario(a: Vec<f64>, au: f64, q: Vec<Vec<f64>>, x: Vec<f64>, t: usize) -> PreferenceScenario<f64> {
        PreferenceScenario::without_external(
            UtilityWeights::new(a, au).unwrap(),
            PreferenceMatrix::from_rows(q).unwrap(),
            OwnPreferences::new(x).unwrap(),
            t,
        )
        .unwrap()
    }

    #[test]
    fn self_weight_only_reduces_to_own_preference() {
        let s = scenario(vec![0.0], 1.0, vec![vec![0.3]], vec![0.8], 1);
        assert_relative_eq!(s.expected_step_utility(TopicId(0)).unwrap(), 0.8);
    }

    #[test]
    fn one_follower_half_weights() {
        let s = scenario(vec![0.5], 0.5, vec![vec![0.9]], vec![0.2], 1);
        assert_relative_eq!(s.expected_step_utility(TopicId(0)).unwrap(), 0.55, epsilon = 1e-15);
    }

    #[test]
    fn zero_preferences_give_zero_utility() {
        let s = scenario(vec![0.4, 0.3], 0.3, vec![vec![0.0, 0.0]], vec![0.0], 5);
        assert_eq!(s.expected_step_utility(TopicId(0)).unwrap(), 0.0);
        assert_eq!(s.optimal_cumulative_utility(), 0.0);
    }

    #[test]
    fn invalid_topic_is_structural_error() {
        let s = scenario(vec![1.0], 0.0, vec![vec![0.5]], vec![0.5], 1);
        assert!(matches!(s.expected_step_utility(TopicId(1)), Err(Error::Index { .. })));
    }

    #[test]
    fn optimal_topic_examples() {
        let s = scenario(vec![0.5], 0.5, vec![vec![0.9], vec![0.5]], vec![0.2, 0.8], 10);
        assert_eq!(s.optimal_topic(), TopicId(1));
        assert_relative_eq!(s.optimal_cumulative_utility(), 6.5, epsilon = 1e-12);

        let tie = scenario(vec![0.5], 0.5, vec![vec![0.5]; 3], vec![0.5; 3], 1);
        assert_eq!(tie.optimal_topic(), TopicId(0));

        let single = scenario(vec![0.5], 0.5, vec![vec![0.1]], vec![0.7], 1);
        assert_eq!(single.optimal_topic(), TopicId(0));
        assert_relative_eq!(
            single.optimal_cumulative_utility(),
            single.expected_step_utility(TopicId(0)).unwrap()
        );
    }

    #[test]
    fn construction_rejects_invalid_inputs() {
        assert!(UtilityWeights::new(vec![0.5, 0.6], 0.0f64).is_err());
        assert!(UtilityWeights::new(vec![-0.1, 0.6], 0.5f64).is_err());
        assert!(UtilityWeights::new(vec![0.5], 0.5 + 1e-12f64).is_ok());
        assert!(PreferenceMatrix::from_rows(vec![vec![1.2f64]]).is_err());
        assert!(OwnPreferences::new(vec![f64::NAN]).is_err());
        let w = UtilityWeights::new(vec![1.0], 0.0f64).unwrap();
        let q = PreferenceMatrix::from_rows(vec![vec![0.5]]).unwrap();
        let x = OwnPreferences::new(vec![0.5]).unwrap();
        let bad_mu = Grid::from_rows(vec![vec![-1.0]]).unwrap();
        assert!(PreferenceScenario::new(w.clone(), q.clone(), x.clone(), bad_mu, 1).is_err());
        assert!(PreferenceScenario::without_external(w.clone(), q.clone(), x.clone(), 0).is_err());
        let x2 = OwnPreferences::new(vec![0.5, 0.5]).unwrap();
        assert!(PreferenceScenario::without_external(w, q, x2, 1).is_err());
    }

    #[test]
    fn scenario_json_round_trip_validates() {
        let s = scenario(vec![0.5], 0.5, vec![vec![0.9], vec![0.5]], vec![0.2, 0.8], 10);
        let json = serde_json::to_string(&s).unwrap();
        let back: PreferenceScenario<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        let broken = json.replace("0.9", "1.9");
        assert!(serde_json::from_str::<PreferenceScenario<f64>>(&broken).is_err());
    }

    fn simplex(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.01f64..1.0, n).prop_map(|v| {
            let s: f64 = v.iter().sum();
            v.into_iter().map(|w| w / s).collect()
        })
    }

    fn random_scenario() -> impl Strategy<Value = PreferenceScenario<f64>> {
        (1usize..=6, 1usize..=32).prop_flat_map(|(n, k)| {
            (
                simplex(n + 1),
                prop::collection::vec(prop::collection::vec(0.0f64..=1.0, n), k),
                prop::collection::vec(0.0f64..=1.0, k),
            )
                .prop_map(|(w, q, x)| {
                    let au = w[w.len() - 1];
                    let mut a = w[..w.len() - 1].to_vec();
                    // absorb rounding so the simplex check is exact
                    let drift = 1.0 - (a.iter().sum::<f64>() + au);
                    a[0] = (a[0] + drift).max(0.0);
                    scenario(a, au, q, x, 3)
                })
        })
    }

    proptest! {
        #[test]
        fn utilities_lie_in_unit_interval(s in random_scenario()) {
            for u in s.step_utilities() {
                prop_assert!((-1e-12..=1.0 + 1e-12).contains(&u));
            }
        }

        #[test]
        fn optimal_topic_dominates_all(s in random_scenario()) {
            let best = s.expected_step_utility(s.optimal_topic()).unwrap();
            for c in 0..s.topics() {
                let u = s.expected_step_utility(TopicId(c)).unwrap();
                prop_assert!(best >= u);
                if u == best {
                    prop_assert!(s.optimal_topic().0 <= c);
                }
            }
        }

        #[test]
        fn follower_permutation_leaves_utility_unchanged(s in random_scenario(), rot in 0usize..6) {
            let n = s.followers();
            let perm: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
            let a: Vec<f64> = perm.iter().map(|&i| s.weights().follower_weights()[i]).collect();
            let q: Vec<Vec<f64>> = (0..s.topics())
                .map(|c| perm.iter().map(|&i| s.preferences().get(c, i)).collect())
                .collect();
            let permuted = scenario(a, s.weights().self_weight(), q, s.own_preferences().values().to_vec(), 3);
            for c in 0..s.topics() {
                let lhs = s.expected_step_utility(TopicId(c)).unwrap();
                let rhs = permuted.expected_step_utility(TopicId(c)).unwrap();
                prop_assert!((lhs - rhs).abs() < 1e-12);
            }
        }
    }
}
