//! Scalar abstraction over floating-point types.
//!
//! All numeric code in this crate is generic over [`Scalar`], which bundles
//! the floating-point, conversion, formatting, and sampling bounds the
//! library needs. `f32` and `f64` are the supported instantiations.

use rand::distr::uniform::SampleUniform;
use rand::Rng;
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar usable throughout the crate.
pub trait Scalar:
    num_traits::Float
    + num_traits::NumAssign
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + SampleUniform
    + Serialize
    + DeserializeOwned
    + std::iter::Sum<Self>
    + std::fmt::Debug
    + std::fmt::Display
    + std::str::FromStr
    + Send
    + Sync
    + 'static
{
    /// Draws from the standard normal distribution.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Scalar for f32 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(rand_distr::StandardNormal)
    }
}

impl Scalar for f64 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(rand_distr::StandardNormal)
    }
}

/// Converts an `f64` constant into the scalar type.
///
/// Panics if the value is not representable, which cannot happen for the
/// finite literals this crate feeds it.
pub fn real<S: Scalar>(v: f64) -> S {
    S::from_f64(v).expect("f64 constant must convert to the scalar type")
}

/// Converts a count into the scalar type.
pub fn real_of_usize<S: Scalar>(n: usize) -> S {
    S::from_usize(n).expect("count must convert to the scalar type")
}

/// Formats a scalar for diagnostics, independent of the scalar type.
pub fn display<S: Scalar>(v: S) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// Compensated (Kahan) accumulator.
///
/// The incremental pair sums in the estimator see on the order of `T²`
/// additions over a run; naive summation drifts past the reproducibility
/// tolerance the estimator promises against a batch recompute.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KahanSum<S> {
    sum: S,
    compensation: S,
}

impl<S: Scalar> KahanSum<S> {
    pub fn new() -> Self {
        KahanSum {
            sum: S::zero(),
            compensation: S::zero(),
        }
    }

    pub fn add(&mut self, v: S) {
        let y = v - self.compensation;
        let t = self.sum + y;
        self.compensation = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> S {
        self.sum
    }
}

impl<S: Scalar> Default for KahanSum<S> {
    fn default() -> Self {
        Self::new()
    }
}
