//! Euclidean projections onto the estimation feasible sets.

use crate::scalar::Scalar;

use super::params::{FeasibleRegion, UtilityParams};

/// Projects `v` in place onto `{w >= 0, sum(w) = radius}` and returns the
/// shift `tau` such that `w_i = max(v_i - tau, 0)`.
///
/// Sort-based exact algorithm, `O(n log n)`.
pub fn project_simplex<S: Scalar>(v: &mut [S], radius: S) -> S {
    if v.is_empty() {
        return S::zero();
    }
    if radius <= S::zero() {
        let tau = v.iter().copied().fold(S::neg_infinity(), S::max);
        v.iter_mut().for_each(|w| *w = S::zero());
        return tau;
    }
    let mut sorted: Vec<S> = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cumulative = S::zero();
    let mut tau = S::zero();
    for (j, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - radius) / S::of_usize(j + 1);
        if u - candidate > S::zero() {
            tau = candidate;
        }
    }
    for w in v.iter_mut() {
        *w = (*w - tau).max(S::zero());
    }
    tau
}

/// Exact Euclidean projection onto
/// `{a >= 0, a_u >= 0, sum(a) + a_u = 1, 0 <= z_c <= a_u}`.
///
/// For a fixed self weight `s` the problem splits into a simplex projection
/// of `a` with radius `1 - s` and a clamp of `z` to `[0, s]`; the remaining
/// one-dimensional problem in `s` is convex, so its derivative is bisected.
pub fn project_feasible<S: Scalar>(p: &UtilityParams<S>) -> UtilityParams<S> {
    let a0 = &p.follower_weights;
    let u0 = p.self_weight;
    let z0 = &p.z;
    let two = S::lit(2.0);

    let derivative = |s: S| -> S {
        let mut a = a0.clone();
        let tau = if a.is_empty() {
            // no followers: the self weight is pinned to one
            S::zero()
        } else {
            project_simplex(&mut a, S::one() - s)
        };
        let mut g = tau + (s - u0);
        for &z in z0 {
            if z > s {
                g -= z - s;
            }
        }
        two * g
    };

    let s = if a0.is_empty() {
        S::one()
    } else if derivative(S::zero()) >= S::zero() {
        S::zero()
    } else if derivative(S::one()) <= S::zero() {
        S::one()
    } else {
        let (mut lo, mut hi) = (S::zero(), S::one());
        for _ in 0..200 {
            let mid = (lo + hi) / two;
            if mid <= lo || mid >= hi {
                break;
            }
            if derivative(mid) < S::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo + hi) / two
    };

    let mut a = a0.clone();
    project_simplex(&mut a, S::one() - s);
    let z = z0.iter().map(|&z| z.max(S::zero()).min(s)).collect();
    UtilityParams {
        follower_weights: a,
        self_weight: s,
        z,
    }
}

/// Projection onto the null-model set `{a = 0, a_u = 1, 0 <= z_c <= 1}`.
pub fn project_self_only<S: Scalar>(p: &UtilityParams<S>) -> UtilityParams<S> {
    UtilityParams {
        follower_weights: vec![S::zero(); p.follower_weights.len()],
        self_weight: S::one(),
        z: p.z.iter().map(|&z| z.max(S::zero()).min(S::one())).collect(),
    }
}

pub fn project_region<S: Scalar>(p: &UtilityParams<S>, region: FeasibleRegion) -> UtilityParams<S> {
    match region {
        FeasibleRegion::Full => project_feasible(p),
        FeasibleRegion::SelfOnly => project_self_only(p),
    }
}
