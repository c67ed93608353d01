//! Probability vectors over arms.

use crate::error::{Error, Result};
use crate::scalar::{real, real_of_usize, Scalar};

/// A mixture weight vector: nonnegative entries summing to one.
///
/// Constructed through [`MixtureWeights::new`], which validates the simplex
/// constraint, so downstream code can rely on it.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureWeights<S>(Vec<S>);

/// Absolute tolerance on the simplex sum constraint.
///
/// `1e-9` for `f64`; widened for scalar types whose epsilon cannot resolve
/// that (a length-m `f32` sum already carries ~m·ε of rounding).
pub fn simplex_tolerance<S: Scalar>(len: usize) -> S {
    let rounding = S::epsilon() * real_of_usize::<S>(32 * len.max(1));
    real::<S>(1e-9).max(rounding)
}

impl<S: Scalar> MixtureWeights<S> {
    /// Validates and wraps a weight vector.
    pub fn new(weights: Vec<S>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidWeights("weight vector is empty".into()));
        }
        let mut sum = S::zero();
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::NonFinite {
                    context: "mixture weight",
                });
            }
            if w < S::zero() {
                return Err(Error::InvalidWeights(format!(
                    "entry {} is negative ({})",
                    i + 1,
                    w
                )));
            }
            sum += w;
        }
        if (sum - S::one()).abs() > simplex_tolerance::<S>(weights.len()) {
            return Err(Error::InvalidWeights(format!(
                "entries sum to {} instead of 1",
                sum
            )));
        }
        Ok(MixtureWeights(weights))
    }

    /// The uniform distribution over `m` arms.
    pub fn uniform(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidWeights("weight vector is empty".into()));
        }
        let w = S::one() / real_of_usize::<S>(m);
        Ok(MixtureWeights(vec![w; m]))
    }

    /// The point mass on arm `i` (0-based) among `m` arms.
    pub fn basis(m: usize, i: usize) -> Result<Self> {
        if i >= m {
            return Err(Error::InvalidWeights(format!(
                "basis index {} out of range for {} arms",
                i, m
            )));
        }
        let mut w = vec![S::zero(); m];
        w[i] = S::one();
        Ok(MixtureWeights(w))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[S] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, S> {
        self.0.iter()
    }

    /// Indices of the strictly positive entries.
    pub fn support(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > S::zero())
            .map(|(i, _)| i)
            .collect()
    }

    /// Largest absolute difference to another weight vector.
    pub fn linf_distance(&self, other: &Self) -> S {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(&a, &b)| (a - b).abs())
            .fold(S::zero(), S::max)
    }

    pub fn into_vec(self) -> Vec<S> {
        self.0
    }
}

impl<S> std::ops::Index<usize> for MixtureWeights<S> {
    type Output = S;
    fn index(&self, i: usize) -> &S {
        &self.0[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_valid_simplex_points() {
        let w = MixtureWeights::new(vec![0.5, 0.3, 0.2]).unwrap();
        assert_eq!(w.len(), 3);
        assert_eq!(w.support(), vec![0, 1, 2]);
    }

    #[test]
    fn rejects_negative_entries() {
        assert!(MixtureWeights::new(vec![1.2, -0.2]).is_err());
    }

    #[test]
    fn rejects_bad_sum() {
        assert!(MixtureWeights::new(vec![0.5, 0.6]).is_err());
        assert!(MixtureWeights::new(vec![0.5, 0.5 - 1e-6]).is_err());
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(MixtureWeights::<f64>::new(vec![]).is_err());
        assert!(MixtureWeights::new(vec![f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn uniform_and_basis_are_valid() {
        let u = MixtureWeights::<f64>::uniform(4).unwrap();
        assert_eq!(u.as_slice(), &[0.25; 4]);
        let b = MixtureWeights::<f64>::basis(3, 1).unwrap();
        assert_eq!(b.as_slice(), &[0.0, 1.0, 0.0]);
        assert_eq!(b.support(), vec![1]);
        assert!(MixtureWeights::<f64>::basis(3, 3).is_err());
    }

    #[test]
    fn f32_tolerance_accommodates_single_precision_sums() {
        let w = vec![0.1f32; 10];
        assert!(MixtureWeights::new(w).is_ok());
    }
}
