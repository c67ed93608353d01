//! Kernels over the embedding space.
//!
//! The Gaussian kernel `k(x, y) = exp(-‖x-y‖² / (2σ²))` is the workhorse;
//! its square (obtained with the `squared` flag) drives the RKE diversity
//! loss. A degenerate `zero` kernel is also available: it turns the
//! quadratic part of a loss off entirely, leaving a plain linear bandit.

use serde::{Deserialize, Serialize};

use crate::arms::Sample;
use crate::error::{Error, Result};
use crate::scalar::{real, Scalar};

/// Kernel family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    Gaussian,
    /// `k ≡ 0`; useful for isolating the linear term of a loss.
    Zero,
}

/// A kernel with its bandwidth and an optional squaring flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec<S> {
    pub kind: KernelKind,
    /// Bandwidth σ of the Gaussian; ignored by the zero kernel.
    pub bandwidth: S,
    /// Evaluate `k²` instead of `k`. Squaring is idempotent here: the flag
    /// selects the squared Gaussian, it does not compose.
    #[serde(default)]
    pub squared: bool,
}

impl<S: Scalar> KernelSpec<S> {
    /// Gaussian kernel with bandwidth `σ > 0`.
    pub fn gaussian(bandwidth: S) -> Result<Self> {
        let spec = KernelSpec {
            kind: KernelKind::Gaussian,
            bandwidth,
            squared: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// The zero kernel.
    pub fn zero() -> Self {
        KernelSpec {
            kind: KernelKind::Zero,
            bandwidth: S::one(),
            squared: false,
        }
    }

    /// Same kernel with the squaring flag set.
    pub fn into_squared(mut self) -> Self {
        self.squared = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            KernelKind::Gaussian => {
                if !self.bandwidth.is_finite() || self.bandwidth <= S::zero() {
                    Err(Error::InvalidKernel(format!(
                        "bandwidth must be positive and finite, got {}",
                        self.bandwidth
                    )))
                } else {
                    Ok(())
                }
            }
            KernelKind::Zero => Ok(()),
        }
    }

    /// Evaluates the kernel on a pair of samples.
    pub fn eval(&self, x: &Sample<S>, y: &Sample<S>) -> Result<S> {
        match self.kind {
            KernelKind::Zero => {
                if x.dim() != y.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: x.dim(),
                        actual: y.dim(),
                    });
                }
                Ok(S::zero())
            }
            KernelKind::Gaussian => {
                let sq = x.squared_distance(y)?;
                let two = real::<S>(2.0);
                let mut v = (-sq / (two * self.bandwidth * self.bandwidth)).exp();
                if self.squared {
                    v = v * v;
                }
                Ok(v)
            }
        }
    }

    /// Range `(κ₀, κ₁)` of kernel values.
    pub fn bounds(&self) -> (S, S) {
        match self.kind {
            KernelKind::Gaussian => (S::zero(), S::one()),
            KernelKind::Zero => (S::zero(), S::zero()),
        }
    }

    /// Width `Δκ = κ₁ - κ₀` of the value range.
    pub fn delta(&self) -> S {
        let (lo, hi) = self.bounds();
        hi - lo
    }
}
