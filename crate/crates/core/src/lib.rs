//! Online selection of the optimal mixture of sample sources under
//! quadratic kernel losses.
//!
//! A fixed set of sources ("arms") each produce i.i.d. samples in a common
//! embedding space. The quality of a mixture weight vector `α` over the arms
//! is a quadratic function `L(α) = αᵀKα + fᵀα`, where `K` collects expected
//! kernel values between pairs of arms and `f` collects expected per-sample
//! penalties. Examples include the RKE diversity loss (squared kernel, no
//! linear term) and the squared MMD to a reference pool. This crate provides:
//!
//! * seeded sample sources ([`arms`]),
//! * kernel and loss definitions ([`kernel`], [`score`]),
//! * incremental estimation of the empirical loss surface ([`estimator`]),
//! * simplex-constrained quadratic optimization ([`simplex`]),
//! * online sampling policies that learn the optimal mixture ([`bandit`]),
//! * and an experiment harness with CSV/JSON export ([`harness`]).
//!
//! Everything numeric is generic over the scalar type through the
//! [`Scalar`] trait, so the whole stack runs in either `f32` or `f64`.
//! The aliases below fix the common `f64` instantiations used by the
//! harness and the CLI.

pub mod arms;
pub mod bandit;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod kernel;
pub mod mixture;
pub mod scalar;
pub mod score;
pub mod simplex;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Default scalar type for the harness and CLI.
pub type Real = f64;

/// A single embedded sample with `f64` coordinates.
pub type Sample = arms::Sample<Real>;
/// A source specification with `f64` parameters.
pub type SourceSpec = arms::SourceSpec<Real>;
/// A stateful sample source drawing `f64` samples.
pub type SampleSource = arms::SampleSource<Real>;
/// A kernel with `f64` bandwidth.
pub type KernelSpec = kernel::KernelSpec<Real>;
/// A loss definition over `f64` samples.
pub type LossSpec = score::LossSpec<Real>;
/// A probability vector over arms with `f64` entries.
pub type MixtureWeights = mixture::MixtureWeights<Real>;
/// Incremental empirical loss state over `f64` samples.
pub type EmpiricalState = estimator::EmpiricalState<Real>;
/// A simplex-constrained quadratic program with `f64` coefficients.
pub type QuadraticProgram = simplex::QuadraticProgram<Real>;
/// A sampling policy configuration with `f64` parameters.
pub type PolicyConfig = bandit::PolicyConfig<Real>;
/// A completed run trajectory with `f64` losses.
pub type Trajectory = bandit::Trajectory<Real>;
/// An experiment configuration with `f64` parameters.
pub type ExperimentConfig = harness::ExperimentConfig<Real>;
/// Results of a full experiment with `f64` losses.
pub type ExperimentResult = harness::ExperimentResult<Real>;
