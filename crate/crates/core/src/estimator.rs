//! Incremental estimation of the empirical loss surface.
//!
//! [`EmpiricalState`] maintains, per pair of arms, the running double sum
//! of kernel values `S_ij = Σ_a Σ_b κ(x_{i,a}, x_{j,b})` (self-pairs
//! included on the diagonal) and per arm the running sum of linear values
//! `F_i = Σ_a f(x_{i,a})`. Adding one sample costs one kernel evaluation
//! per stored sample, so a whole run of `T` rounds costs `O(T²)` instead of
//! the `O(T³)` of recomputing from scratch each round.
//!
//! From these sums the plug-in estimates are
//! `K̂_ij = S_ij / (n_i n_j)`, `f̂_i = F_i / n_i`, and the sample loss
//! `L̂(α) = αᵀK̂α + f̂ᵀα`.

use crate::arms::Sample;
use crate::error::{Error, Result};
use crate::mixture::MixtureWeights;
use crate::scalar::{real, real_of_usize, KahanSum, Scalar};
use crate::score::LossSpec;

/// Parameters of the round-dependent confidence vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceParams<S> {
    /// Exploration multiplier β; the regret guarantee wants β ≥ 4.
    pub beta: S,
    /// Sensitivity of the sample loss to one replaced sample.
    pub delta_l: S,
    /// Width of the kernel value range.
    pub delta_kappa: S,
}

impl<S: Scalar> ConfidenceParams<S> {
    pub fn new(beta: S, delta_l: S, delta_kappa: S) -> Result<Self> {
        if !beta.is_finite() || beta <= S::one() {
            return Err(Error::InvalidConfidence(format!(
                "beta must be finite and greater than 1, got {}",
                beta
            )));
        }
        if !delta_l.is_finite() || delta_l < S::zero() {
            return Err(Error::InvalidConfidence(format!(
                "delta_l must be finite and nonnegative, got {}",
                delta_l
            )));
        }
        if !delta_kappa.is_finite() || delta_kappa < S::zero() {
            return Err(Error::InvalidConfidence(format!(
                "delta_kappa must be finite and nonnegative, got {}",
                delta_kappa
            )));
        }
        Ok(ConfidenceParams {
            beta,
            delta_l,
            delta_kappa,
        })
    }

    /// Theory-exact widths taken from the loss spec.
    pub fn from_spec(beta: S, spec: &LossSpec<S>) -> Result<Self> {
        ConfidenceParams::new(beta, spec.delta_l(), spec.delta_kappa())
    }
}

/// Running empirical state over all gathered samples.
#[derive(Debug, Clone)]
pub struct EmpiricalState<S> {
    spec: LossSpec<S>,
    samples: Vec<Vec<Sample<S>>>,
    pair_sums: Vec<Vec<KahanSum<S>>>,
    linear_sums: Vec<KahanSum<S>>,
    total: usize,
    dim: Option<usize>,
}

impl<S: Scalar> EmpiricalState<S> {
    /// Empty state over `m` arms.
    pub fn new(spec: LossSpec<S>, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidConfig("need at least one arm".into()));
        }
        Ok(EmpiricalState {
            spec,
            samples: vec![Vec::new(); m],
            pair_sums: vec![vec![KahanSum::new(); m]; m],
            linear_sums: vec![KahanSum::new(); m],
            total: 0,
            dim: None,
        })
    }

    pub fn arms(&self) -> usize {
        self.samples.len()
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn counts(&self) -> Vec<usize> {
        self.samples.iter().map(Vec::len).collect()
    }

    pub fn count(&self, arm: usize) -> usize {
        self.samples[arm].len()
    }

    pub fn samples(&self, arm: usize) -> &[Sample<S>] {
        &self.samples[arm]
    }

    pub fn spec(&self) -> &LossSpec<S> {
        &self.spec
    }

    /// Records one sample for `arm`, updating all pair and linear sums.
    pub fn add_sample(&mut self, arm: usize, sample: Sample<S>) -> Result<()> {
        if arm >= self.samples.len() {
            return Err(Error::InvalidConfig(format!(
                "arm index {} out of range for {} arms",
                arm + 1,
                self.samples.len()
            )));
        }
        match self.dim {
            None => self.dim = Some(sample.dim()),
            Some(d) if d != sample.dim() => {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: sample.dim(),
                });
            }
            _ => {}
        }
        let f_val = self.spec.eval_linear(&sample)?;
        let two = real::<S>(2.0);
        for j in 0..self.samples.len() {
            if j == arm {
                for y in &self.samples[arm] {
                    let v = self.spec.eval_quad(&sample, y)?;
                    // The new sample pairs with y in both orders.
                    self.pair_sums[arm][arm].add(two * v);
                }
            } else {
                for y in &self.samples[j] {
                    let v = self.spec.eval_quad(&sample, y)?;
                    self.pair_sums[arm][j].add(v);
                    self.pair_sums[j][arm].add(v);
                }
            }
        }
        let self_pair = self.spec.eval_quad(&sample, &sample)?;
        self.pair_sums[arm][arm].add(self_pair);
        self.linear_sums[arm].add(f_val);
        self.samples[arm].push(sample);
        self.total += 1;
        Ok(())
    }

    /// Records a batch of samples for one arm.
    pub fn add_batch(&mut self, arm: usize, batch: Vec<Sample<S>>) -> Result<()> {
        for sample in batch {
            self.add_sample(arm, sample)?;
        }
        Ok(())
    }

    /// Plug-in kernel matrix `K̂`; entries touching an empty arm are zero.
    pub fn khat(&self) -> Vec<Vec<S>> {
        let m = self.arms();
        let mut k = vec![vec![S::zero(); m]; m];
        for i in 0..m {
            for j in 0..m {
                let ni = self.samples[i].len();
                let nj = self.samples[j].len();
                if ni > 0 && nj > 0 {
                    k[i][j] = self.pair_sums[i][j].value()
                        / (real_of_usize::<S>(ni) * real_of_usize::<S>(nj));
                }
            }
        }
        k
    }

    /// Plug-in linear vector `f̂`; entries of empty arms are zero.
    pub fn fhat(&self) -> Vec<S> {
        self.samples
            .iter()
            .zip(self.linear_sums.iter())
            .map(|(s, f)| {
                if s.is_empty() {
                    S::zero()
                } else {
                    f.value() / real_of_usize::<S>(s.len())
                }
            })
            .collect()
    }

    /// Sample loss `L̂(α) = αᵀK̂α + f̂ᵀα`.
    ///
    /// Arms with zero weight contribute zero even when they hold no
    /// samples; arms with positive weight must have at least one.
    pub fn sample_loss(&self, alpha: &MixtureWeights<S>) -> Result<S> {
        if alpha.len() != self.arms() {
            return Err(Error::DimensionMismatch {
                expected: self.arms(),
                actual: alpha.len(),
            });
        }
        let support = alpha.support();
        for &i in &support {
            if self.samples[i].is_empty() {
                return Err(Error::MissingSamples { arm: i + 1 });
            }
        }
        let mut loss = S::zero();
        for &i in &support {
            let ni = real_of_usize::<S>(self.samples[i].len());
            for &j in &support {
                let nj = real_of_usize::<S>(self.samples[j].len());
                loss += alpha[i] * alpha[j] * self.pair_sums[i][j].value() / (ni * nj);
            }
            loss += alpha[i] * self.linear_sums[i].value() / ni;
        }
        Ok(loss)
    }

    /// Loss of the empirical distribution of all gathered samples:
    /// `(1/t²)·Σ_ij S_ij + (1/t)·Σ_i F_i`, which equals the sample loss at
    /// the proportion vector without the intermediate divisions.
    pub fn empirical_distribution_loss(&self) -> Result<S> {
        if self.total == 0 {
            return Err(Error::RoundTooSmall { t: 0, min: 1 });
        }
        let t = real_of_usize::<S>(self.total);
        let mut quad = S::zero();
        for row in &self.pair_sums {
            for cell in row {
                quad += cell.value();
            }
        }
        let mut lin = S::zero();
        for cell in &self.linear_sums {
            lin += cell.value();
        }
        Ok(quad / (t * t) + lin / t)
    }

    /// Round-dependent confidence vector
    /// `ε_i = Δ_L·√(β·ln t / (2 n_i)) + Δκ / n_i`.
    pub fn confidence_vector_t(&self, params: &ConfidenceParams<S>) -> Result<Vec<S>> {
        if self.total < 2 {
            return Err(Error::RoundTooSmall {
                t: self.total,
                min: 2,
            });
        }
        let ln_t = real_of_usize::<S>(self.total).ln();
        let two = real::<S>(2.0);
        let mut eps = Vec::with_capacity(self.arms());
        for (i, arm_samples) in self.samples.iter().enumerate() {
            if arm_samples.is_empty() {
                return Err(Error::MissingSamples { arm: i + 1 });
            }
            let n = real_of_usize::<S>(arm_samples.len());
            let radius = params.delta_l * (params.beta * ln_t / (two * n)).sqrt()
                + params.delta_kappa / n;
            eps.push(radius);
        }
        Ok(eps)
    }

    /// Fixed-confidence radius
    /// `ε(δ)_i = Δ_L·√(ln(1/δ) / (2 n_i)) + Δκ / n_i`, with widths taken
    /// from the loss spec. For any fixed α and counts, the sample loss is
    /// within `ε(δ)ᵀα` of the population loss with probability ≥ 1 - 2δ.
    pub fn confidence_vector_delta(&self, delta: S) -> Result<Vec<S>> {
        confidence_radius(
            &self.counts(),
            delta,
            self.spec.delta_l(),
            self.spec.delta_kappa(),
        )
    }

    /// Proportion vector `n / t` of gathered samples.
    pub fn proportion_vector(&self) -> Result<MixtureWeights<S>> {
        if self.total == 0 {
            return Err(Error::RoundTooSmall { t: 0, min: 1 });
        }
        let t = real_of_usize::<S>(self.total);
        MixtureWeights::new(
            self.samples
                .iter()
                .map(|s| real_of_usize::<S>(s.len()) / t)
                .collect(),
        )
    }
}

/// Fixed-confidence radius for explicit counts.
pub fn confidence_radius<S: Scalar>(
    counts: &[usize],
    delta: S,
    delta_l: S,
    delta_kappa: S,
) -> Result<Vec<S>> {
    if !delta.is_finite() || delta <= S::zero() || delta >= S::one() {
        return Err(Error::InvalidConfidence(format!(
            "delta must lie strictly between 0 and 1, got {}",
            delta
        )));
    }
    let ln_inv = (S::one() / delta).ln();
    let two = real::<S>(2.0);
    counts
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            if n == 0 {
                return Err(Error::MissingSamples { arm: i + 1 });
            }
            let n = real_of_usize::<S>(n);
            Ok(delta_l * (ln_inv / (two * n)).sqrt() + delta_kappa / n)
        })
        .collect()
}

/// Worst-case simultaneous radius over all rounds of a horizon:
/// `ε_i = Δ_L·√(ln(m²T² / (2δ)) / (2 n_i)) + Δκ / n_i`.
pub fn worst_case_radius<S: Scalar>(
    counts: &[usize],
    delta: S,
    horizon: usize,
    delta_l: S,
    delta_kappa: S,
) -> Result<Vec<S>> {
    if !delta.is_finite() || delta <= S::zero() || delta >= S::one() {
        return Err(Error::InvalidConfidence(format!(
            "delta must lie strictly between 0 and 1, got {}",
            delta
        )));
    }
    let m = real_of_usize::<S>(counts.len());
    let t = real_of_usize::<S>(horizon);
    let ln_term = (m * m * t * t / (real::<S>(2.0) * delta)).ln();
    let two = real::<S>(2.0);
    counts
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            if n == 0 {
                return Err(Error::MissingSamples { arm: i + 1 });
            }
            let n = real_of_usize::<S>(n);
            Ok(delta_l * (ln_term / (two * n)).sqrt() + delta_kappa / n)
        })
        .collect()
}
