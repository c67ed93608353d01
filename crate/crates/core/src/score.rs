//! Loss definitions over mixtures of sources.
//!
//! Every loss here has the quadratic form `L(α) = αᵀKα + fᵀα`, with
//! `K_ij = E[κ(X_i, X_j)]` for independent samples of arms `i` and `j`, and
//! `f_i = E[f(X_i)]` for a per-sample penalty `f`. Concrete instances:
//!
//! * RKE diversity loss: `κ = k²` for a base kernel `k`, `f = 0`. Its
//!   reciprocal is the RKE mode count, a soft count of distinct modes the
//!   mixture covers.
//! * Squared MMD to a reference pool: `κ = k`,
//!   `f(x) = -2·mean_y k(x, y)` over the pool. The sample-independent
//!   constant `E[k(Y, Y')]` is dropped from the loss and available
//!   separately through [`mmd_constant`] for reporting.
//! * Quality penalties: precision (is a sample inside any reference
//!   k-NN ball?) and density (how many balls?), each scaled by a weight λ
//!   and added to a base loss via [`combine`].

use serde::{Deserialize, Serialize};

use crate::arms::{build_source, RngSeed, Sample, SourceSpec};
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::mixture::MixtureWeights;
use crate::scalar::{real, real_of_usize, Scalar};

/// Reference-pool term for MMD losses: `f(x) = -2·mean_y k(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MmdTerm<S> {
    pub kernel: KernelSpec<S>,
    pub points: Vec<Sample<S>>,
}

/// k-NN ball term for precision/density penalties.
///
/// `radii[i]` is the distance from reference point `i` to its `k_nn`-th
/// nearest neighbor among the other reference points (k-th smallest
/// distance, duplicates counted).
#[derive(Debug, Clone, PartialEq)]
pub struct KnnTerm<S> {
    pub points: Vec<Sample<S>>,
    pub radii: Vec<S>,
    pub k_nn: usize,
    pub lambda: S,
}

/// The linear (per-sample) part of a loss.
#[derive(Debug, Clone, PartialEq)]
pub enum LinearTerm<S> {
    Zero,
    MmdReference(MmdTerm<S>),
    /// `f(x) = -λ` if `x` falls inside any reference ball, else 0.
    Precision(KnnTerm<S>),
    /// `f(x) = -(λ / k_nn) · #{reference balls containing x}`.
    Density(KnnTerm<S>),
    Sum(Vec<LinearTerm<S>>),
}

impl<S: Scalar> LinearTerm<S> {
    /// Evaluates `f(x)`.
    pub fn eval(&self, x: &Sample<S>) -> Result<S> {
        match self {
            LinearTerm::Zero => Ok(S::zero()),
            LinearTerm::MmdReference(term) => {
                let mut acc = S::zero();
                for y in &term.points {
                    acc += term.kernel.eval(x, y)?;
                }
                let mean = acc / real_of_usize::<S>(term.points.len());
                Ok(-real::<S>(2.0) * mean)
            }
            LinearTerm::Precision(term) => {
                for (y, &r) in term.points.iter().zip(term.radii.iter()) {
                    if x.squared_distance(y)? <= r * r {
                        return Ok(-term.lambda);
                    }
                }
                Ok(S::zero())
            }
            LinearTerm::Density(term) => {
                let mut hits = 0usize;
                for (y, &r) in term.points.iter().zip(term.radii.iter()) {
                    if x.squared_distance(y)? <= r * r {
                        hits += 1;
                    }
                }
                Ok(-term.lambda * real_of_usize::<S>(hits) / real_of_usize::<S>(term.k_nn))
            }
            LinearTerm::Sum(parts) => {
                let mut acc = S::zero();
                for p in parts {
                    acc += p.eval(x)?;
                }
                Ok(acc)
            }
        }
    }

    /// Range `(f₀, f₁)` of values `f` can take.
    pub fn bounds(&self) -> (S, S) {
        match self {
            LinearTerm::Zero => (S::zero(), S::zero()),
            LinearTerm::MmdReference(term) => {
                let (klo, khi) = term.kernel.bounds();
                (-real::<S>(2.0) * khi, -real::<S>(2.0) * klo)
            }
            LinearTerm::Precision(term) => (-term.lambda, S::zero()),
            LinearTerm::Density(term) => {
                let m = real_of_usize::<S>(term.points.len());
                let k = real_of_usize::<S>(term.k_nn);
                (-term.lambda * m / k, S::zero())
            }
            LinearTerm::Sum(parts) => {
                let mut lo = S::zero();
                let mut hi = S::zero();
                for p in parts {
                    let (plo, phi) = p.bounds();
                    lo += plo;
                    hi += phi;
                }
                (lo, hi)
            }
        }
    }
}

/// A full loss: quadratic kernel plus linear per-sample term.
#[derive(Debug, Clone, PartialEq)]
pub struct LossSpec<S> {
    pub quad: KernelSpec<S>,
    pub linear: LinearTerm<S>,
}

impl<S: Scalar> LossSpec<S> {
    pub fn new(quad: KernelSpec<S>, linear: LinearTerm<S>) -> Result<Self> {
        quad.validate()?;
        Ok(LossSpec { quad, linear })
    }

    /// Evaluates the quadratic kernel `κ(x, y)`.
    pub fn eval_quad(&self, x: &Sample<S>, y: &Sample<S>) -> Result<S> {
        self.quad.eval(x, y)
    }

    /// Evaluates the linear term `f(x)`.
    pub fn eval_linear(&self, x: &Sample<S>) -> Result<S> {
        self.linear.eval(x)
    }

    /// Width of the quadratic kernel's value range.
    pub fn delta_kappa(&self) -> S {
        self.quad.delta()
    }

    /// Width of the linear term's value range.
    pub fn delta_f(&self) -> S {
        let (lo, hi) = self.linear.bounds();
        hi - lo
    }

    /// Sensitivity `Δ_L = 2Δκ + Δf` of the sample loss to one sample swap.
    pub fn delta_l(&self) -> S {
        real::<S>(2.0) * self.delta_kappa() + self.delta_f()
    }
}

/// RKE diversity loss built from a base kernel: `κ = k²`, no linear term.
pub fn rke_spec<S: Scalar>(base: KernelSpec<S>) -> Result<LossSpec<S>> {
    LossSpec::new(base.into_squared(), LinearTerm::Zero)
}

/// Squared-MMD loss against a reference pool, constant term dropped.
pub fn mmd_spec<S: Scalar>(kernel: KernelSpec<S>, reference: Vec<Sample<S>>) -> Result<LossSpec<S>> {
    if reference.is_empty() {
        return Err(Error::InvalidLoss("reference pool is empty".into()));
    }
    let d = reference[0].dim();
    if reference.iter().any(|p| p.dim() != d) {
        return Err(Error::InvalidLoss(
            "reference pool has inconsistent dimensions".into(),
        ));
    }
    LossSpec::new(
        kernel,
        LinearTerm::MmdReference(MmdTerm {
            kernel,
            points: reference,
        }),
    )
}

/// The dropped MMD constant `E[k(Y, Y')]` over the reference pool
/// (all ordered pairs, self-pairs included). Adding it back to an MMD loss
/// value yields the interpretable squared MMD.
pub fn mmd_constant<S: Scalar>(kernel: &KernelSpec<S>, reference: &[Sample<S>]) -> Result<S> {
    if reference.is_empty() {
        return Err(Error::InvalidLoss("reference pool is empty".into()));
    }
    let mut acc = S::zero();
    for a in reference {
        for b in reference {
            acc += kernel.eval(a, b)?;
        }
    }
    let m = real_of_usize::<S>(reference.len());
    Ok(acc / (m * m))
}

fn knn_radii<S: Scalar>(points: &[Sample<S>], k_nn: usize) -> Result<Vec<S>> {
    if k_nn == 0 {
        return Err(Error::InvalidLoss("k_nn must be at least 1".into()));
    }
    if points.len() < k_nn + 1 {
        return Err(Error::InvalidLoss(format!(
            "reference pool of {} points cannot support k_nn = {}",
            points.len(),
            k_nn
        )));
    }
    let mut radii = Vec::with_capacity(points.len());
    for (i, y) in points.iter().enumerate() {
        let mut dists = Vec::with_capacity(points.len() - 1);
        for (j, other) in points.iter().enumerate() {
            if i != j {
                dists.push(y.squared_distance(other)?);
            }
        }
        dists.sort_by(|a, b| a.partial_cmp(b).expect("distances are finite"));
        radii.push(dists[k_nn - 1].sqrt());
    }
    Ok(radii)
}

fn knn_term<S: Scalar>(reference: Vec<Sample<S>>, k_nn: usize, lambda: S) -> Result<KnnTerm<S>> {
    if !lambda.is_finite() || lambda < S::zero() {
        return Err(Error::InvalidLoss(format!(
            "quality weight must be finite and nonnegative, got {}",
            lambda
        )));
    }
    let d = reference.first().map(|p| p.dim()).unwrap_or(0);
    if reference.iter().any(|p| p.dim() != d) {
        return Err(Error::InvalidLoss(
            "reference pool has inconsistent dimensions".into(),
        ));
    }
    let radii = knn_radii(&reference, k_nn)?;
    Ok(KnnTerm {
        points: reference,
        radii,
        k_nn,
        lambda,
    })
}

/// Precision penalty: `-λ` per sample inside any reference k-NN ball.
pub fn precision_term<S: Scalar>(
    reference: Vec<Sample<S>>,
    k_nn: usize,
    lambda: S,
) -> Result<LinearTerm<S>> {
    Ok(LinearTerm::Precision(knn_term(reference, k_nn, lambda)?))
}

/// Density penalty: `-λ/k_nn` per reference ball containing the sample.
pub fn density_term<S: Scalar>(
    reference: Vec<Sample<S>>,
    k_nn: usize,
    lambda: S,
) -> Result<LinearTerm<S>> {
    Ok(LinearTerm::Density(knn_term(reference, k_nn, lambda)?))
}

/// Adds an extra linear term to an existing loss.
pub fn combine<S: Scalar>(spec: LossSpec<S>, extra: LinearTerm<S>) -> LossSpec<S> {
    let linear = match (spec.linear, extra) {
        (LinearTerm::Zero, extra) => extra,
        (linear, LinearTerm::Zero) => linear,
        (LinearTerm::Sum(mut parts), extra) => {
            parts.push(extra);
            LinearTerm::Sum(parts)
        }
        (linear, extra) => LinearTerm::Sum(vec![linear, extra]),
    };
    LossSpec {
        quad: spec.quad,
        linear,
    }
}

/// Metric families the harness can build; determines what the score column
/// of a trajectory reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    /// RKE diversity loss; score is the mode count `1 / L`.
    Rke,
    /// Squared MMD to a reference pool; score is `L + mmd_constant`.
    Mmd,
    /// RKE plus precision penalty; no scalar score.
    RkePrecision,
    /// RKE plus density penalty; no scalar score.
    RkeDensity,
    /// Zero quadratic kernel with an MMD-style linear term: a plain linear
    /// bandit on per-sample rewards.
    Linear,
}

/// RKE mode count: the reciprocal of a positive RKE loss.
pub fn rke_mode_count<S: Scalar>(loss: S) -> Result<S> {
    if loss <= S::zero() || !loss.is_finite() {
        return Err(Error::NonPositiveLoss {
            loss: crate::scalar::display(loss),
        });
    }
    Ok(S::one() / loss)
}

/// Monte Carlo estimate of the population loss `L(α)`.
///
/// Each arm with positive weight contributes `n_mc` fresh draws from a
/// source seeded by `seed.stream(arm_index)`. Off-diagonal `K_ij` use all
/// cross pairs; diagonal `K_ii` average over distinct pairs only, so
/// point-mass arms come out exact.
pub fn population_loss<S: Scalar>(
    spec: &LossSpec<S>,
    sources: &[SourceSpec<S>],
    alpha: &MixtureWeights<S>,
    n_mc: usize,
    seed: RngSeed,
) -> Result<S> {
    if alpha.len() != sources.len() {
        return Err(Error::DimensionMismatch {
            expected: sources.len(),
            actual: alpha.len(),
        });
    }
    if n_mc < 2 {
        return Err(Error::InvalidLoss(format!(
            "population loss needs n_mc >= 2 draws per arm, got {}",
            n_mc
        )));
    }
    let support = alpha.support();
    let mut draws: Vec<Vec<Sample<S>>> = Vec::new();
    let mut dim: Option<usize> = None;
    for &i in &support {
        let mut source = build_source(&sources[i], seed.stream(i as u64))?;
        match dim {
            None => dim = Some(source.dim()),
            Some(d) if d != source.dim() => {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: source.dim(),
                });
            }
            _ => {}
        }
        draws.push(source.draw_batch(n_mc)?);
    }

    let n = real_of_usize::<S>(n_mc);
    let mut loss = S::zero();
    for (a, &i) in support.iter().enumerate() {
        for (b, &j) in support.iter().enumerate() {
            if b < a {
                continue;
            }
            let k_ij = if a == b {
                let mut total = S::zero();
                let mut diag = S::zero();
                for x in &draws[a] {
                    for y in &draws[a] {
                        total += spec.eval_quad(x, y)?;
                    }
                    diag += spec.eval_quad(x, x)?;
                }
                (total - diag) / (n * (n - S::one()))
            } else {
                let mut total = S::zero();
                for x in &draws[a] {
                    for y in &draws[b] {
                        total += spec.eval_quad(x, y)?;
                    }
                }
                total / (n * n)
            };
            let weight = if a == b {
                alpha[i] * alpha[i]
            } else {
                real::<S>(2.0) * alpha[i] * alpha[j]
            };
            loss += weight * k_ij;
        }
    }
    for (a, &i) in support.iter().enumerate() {
        let mut acc = S::zero();
        for x in &draws[a] {
            acc += spec.eval_linear(x)?;
        }
        loss += alpha[i] * acc / n;
    }
    Ok(loss)
}
