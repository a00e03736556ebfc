//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, Poisson};

/// Floating point type usable by the model, the estimators and the solvers.
///
/// Implemented for `f32` and `f64`. Random variates are routed through the
/// trait so generic code does not have to repeat the `rand_distr` bounds.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + NumAssign + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Machine-precision-aware tolerance used by pivoting and tie detection.
    const EPS: Self;

    /// Converts an `f64` literal. Panics only if the value is not representable,
    /// which cannot happen for finite literals and `f32`/`f64`.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite literal")
    }

    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count fits in a float")
    }

    fn of_usize(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize fits in a float")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Uniform draw on `[0, 1)`.
    fn sample_unit<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Gamma(shape, 1) draw. `shape` must be positive and finite.
    fn sample_gamma<R: Rng + ?Sized>(shape: Self, rng: &mut R) -> Self;

    /// Beta(alpha, beta) draw. Both parameters must be positive and finite.
    fn sample_beta<R: Rng + ?Sized>(alpha: Self, beta: Self, rng: &mut R) -> Self;

    /// Poisson(rate) draw. `rate` must be positive and finite.
    fn sample_poisson<R: Rng + ?Sized>(rate: Self, rng: &mut R) -> u64;
}

macro_rules! impl_scalar {
    ($t:ty, $eps:expr) => {
        impl Scalar for $t {
            const EPS: Self = $eps;

            fn sample_unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.random::<$t>()
            }

            fn sample_gamma<R: Rng + ?Sized>(shape: Self, rng: &mut R) -> Self {
                Gamma::new(shape, 1.0)
                    .expect("gamma shape must be positive")
                    .sample(rng)
            }

            fn sample_beta<R: Rng + ?Sized>(alpha: Self, beta: Self, rng: &mut R) -> Self {
                Beta::new(alpha, beta)
                    .expect("beta parameters must be positive")
                    .sample(rng)
            }

            fn sample_poisson<R: Rng + ?Sized>(rate: Self, rng: &mut R) -> u64 {
                let draw: $t = Poisson::new(rate)
                    .expect("poisson rate must be positive")
                    .sample(rng);
                draw as u64
            }
        }
    };
}

impl_scalar!(f32, 1e-5);
impl_scalar!(f64, 1e-10);

/// Index of the largest value; ties go to the lowest index.
///
/// Returns `None` for an empty iterator.
pub fn argmax_first<S: Scalar, I: IntoIterator<Item = S>>(values: I) -> Option<usize> {
    let mut best: Option<(usize, S)> = None;
    for (i, v) in values.into_iter().enumerate() {
        match best {
            Some((_, b)) if !(v > b) => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}
