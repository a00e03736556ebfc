//! Softmax choice likelihood and the linear-loss surrogate.

use crate::error::{Error, Result};
use crate::model::{OwnPreferences, UtilityWeights};
use crate::scalar::{argmax_first, Scalar};

use super::params::{check_observations, ChoiceObservation, UtilityParams};

/// `exp(lambda * s_c) / sum_c' exp(lambda * s_c')`, shifted by the maximum
/// score so large `lambda` cannot overflow.
pub fn softmax_prob<S: Scalar>(scores: &[S], lambda: S) -> Result<Vec<S>> {
    if !lambda.is_finite() || lambda < S::zero() {
        return Err(Error::invalid(format!(
            "softmax temperature must be finite and >= 0, got {lambda}"
        )));
    }
    if scores.is_empty() {
        return Err(Error::invalid("softmax of an empty score vector"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("softmax scores"));
    }
    let max = scores.iter().copied().fold(S::neg_infinity(), S::max);
    let mut out: Vec<S> = scores.iter().map(|&s| (lambda * (s - max)).exp()).collect();
    let total: S = out.iter().copied().sum();
    for p in &mut out {
        *p /= total;
    }
    Ok(out)
}

/// `log sum_c exp(lambda * s_c)` and the softmax probabilities.
fn log_partition<S: Scalar>(scores: &[S], lambda: S) -> (S, Vec<S>) {
    let max = scores.iter().copied().fold(S::neg_infinity(), S::max);
    let mut probs: Vec<S> = scores.iter().map(|&s| (lambda * (s - max)).exp()).collect();
    let total: S = probs.iter().copied().sum();
    for p in &mut probs {
        *p /= total;
    }
    (lambda * max + total.ln(), probs)
}

/// Log-likelihood of the observed topics under the softmax choice model with
/// scores `a . q_c(t) + a_u * x_c`.
pub fn log_likelihood<S: Scalar>(
    weights: &UtilityWeights<S>,
    x: &OwnPreferences<S>,
    obs: &[ChoiceObservation<S>],
    lambda: S,
) -> Result<S> {
    let params = UtilityParams::from_natural(weights, x);
    check_observations(&params, obs)?;
    check_lambda(lambda)?;
    Ok(log_likelihood_params(&params, obs, lambda))
}

fn check_lambda<S: Scalar>(lambda: S) -> Result<()> {
    if lambda.is_finite() && lambda >= S::zero() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "softmax temperature must be finite and >= 0, got {lambda}"
        )))
    }
}

/// [`log_likelihood`] in `(a, a_u, z)` coordinates; dimensions unchecked.
pub fn log_likelihood_params<S: Scalar>(params: &UtilityParams<S>, obs: &[ChoiceObservation<S>], lambda: S) -> S {
    obs.iter()
        .map(|o| {
            let scores = params.scores(&o.estimates);
            let (lse, _) = log_partition(&scores, lambda);
            o.weight * (lambda * scores[o.chosen.0] - lse)
        })
        .sum()
}

/// Log-likelihood and its gradient with respect to `(a, a_u, z)`.
///
/// The self weight does not enter the scores in these coordinates, so its
/// partial derivative is zero; it moves only through the constraints.
pub fn log_likelihood_gradient<S: Scalar>(
    params: &UtilityParams<S>,
    obs: &[ChoiceObservation<S>],
    lambda: S,
) -> (S, UtilityParams<S>) {
    let n = params.followers();
    let k = params.topics();
    let mut grad = UtilityParams {
        follower_weights: vec![S::zero(); n],
        self_weight: S::zero(),
        z: vec![S::zero(); k],
    };
    let mut value = S::zero();
    for o in obs {
        let scores = params.scores(&o.estimates);
        let (lse, probs) = log_partition(&scores, lambda);
        let chosen = o.chosen.0;
        let scale = o.weight * lambda;
        value += o.weight * (lambda * scores[chosen] - lse);
        for v in 0..n {
            let expected: S = (0..k).map(|c| probs[c] * o.estimates.get(c, v)).sum();
            grad.follower_weights[v] += scale * (o.estimates.get(chosen, v) - expected);
        }
        for (g, &p) in grad.z.iter_mut().zip(&probs) {
            *g -= scale * p;
        }
        grad.z[chosen] += scale;
    }
    (value, grad)
}

/// Sum over observations of `max_c' score_c' - score_chosen`.
pub fn linear_loss<S: Scalar>(params: &UtilityParams<S>, obs: &[ChoiceObservation<S>]) -> Result<S> {
    check_observations(params, obs)?;
    Ok(linear_loss_subgradient(params, obs).0)
}

/// Linear loss and one subgradient. When the chosen topic attains the inner
/// max its term contributes nothing; other ties resolve to the lowest index.
pub fn linear_loss_subgradient<S: Scalar>(
    params: &UtilityParams<S>,
    obs: &[ChoiceObservation<S>],
) -> (S, UtilityParams<S>) {
    let n = params.followers();
    let mut grad = UtilityParams {
        follower_weights: vec![S::zero(); n],
        self_weight: S::zero(),
        z: vec![S::zero(); params.topics()],
    };
    let mut value = S::zero();
    for o in obs {
        let scores = params.scores(&o.estimates);
        let chosen = o.chosen.0;
        let mut best = argmax_first(scores.iter().copied()).expect("at least one topic");
        if scores[chosen] >= scores[best] {
            best = chosen;
        }
        value += o.weight * (scores[best] - scores[chosen]);
        if best != chosen {
            for v in 0..n {
                grad.follower_weights[v] += o.weight * (o.estimates.get(best, v) - o.estimates.get(chosen, v));
            }
            grad.z[best] += o.weight;
            grad.z[chosen] -= o.weight;
        }
    }
    (value, grad)
}
