//! Simplex-constrained quadratic programs.
//!
//! Minimizes `αᵀQα + cᵀα` over the probability simplex, optionally
//! restricted to a face (a subset of coordinates; the rest are pinned to
//! zero). `Q` is expected positive semidefinite, which the plug-in kernel
//! matrices feeding this module always are.
//!
//! The solver is accelerated projected gradient descent with a fixed step
//! `1/λ_max(Q)` (λ_max from a deterministic power iteration), gradient
//! restarts, and a gradient-mapping stopping rule. When `Q` is numerically
//! zero the quadratic part carries no information and the minimizer is the
//! best vertex of the linear term, lowest index on ties.

use crate::error::{Error, Result};
use crate::mixture::MixtureWeights;
use crate::scalar::{real, real_of_usize, Scalar};

/// Symmetry tolerance for `Q`.
fn symmetry_tolerance<S: Scalar>() -> S {
    real::<S>(1e-12).max(S::epsilon() * real::<S>(64.0))
}

/// λ_max below this is treated as a zero quadratic.
fn singular_threshold<S: Scalar>() -> S {
    real::<S>(1e-12)
}

/// Euclidean projection of `v` onto the probability simplex.
///
/// Sort-and-threshold: with the entries sorted descending, find the
/// largest prefix whose shifted average keeps all prefix entries positive,
/// and subtract that shift, clamping the rest to zero.
pub fn project_simplex<S: Scalar>(v: &[S]) -> Vec<S> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("projection input is finite"));
    let mut cumulative = S::zero();
    let mut theta = S::zero();
    for (j, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - S::one()) / real_of_usize::<S>(j + 1);
        if u - candidate > S::zero() {
            theta = candidate;
        }
    }
    v.iter().map(|&x| (x - theta).max(S::zero())).collect()
}

/// A quadratic program over the simplex, possibly restricted to a face.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticProgram<S> {
    q: Vec<Vec<S>>,
    c: Vec<S>,
    support: Vec<usize>,
}

impl<S: Scalar> QuadraticProgram<S> {
    /// Program over the full simplex.
    pub fn new(q: Vec<Vec<S>>, c: Vec<S>) -> Result<Self> {
        let m = c.len();
        QuadraticProgram::with_support(q, c, (0..m).collect())
    }

    /// Program restricted to the face spanned by `support`.
    pub fn with_support(q: Vec<Vec<S>>, c: Vec<S>, mut support: Vec<usize>) -> Result<Self> {
        let m = c.len();
        if m == 0 {
            return Err(Error::InvalidProgram("empty problem".into()));
        }
        if q.len() != m || q.iter().any(|row| row.len() != m) {
            return Err(Error::InvalidProgram(format!(
                "Q must be {m}x{m} to match c"
            )));
        }
        let tol = symmetry_tolerance::<S>();
        for i in 0..m {
            if !c[i].is_finite() {
                return Err(Error::NonFinite {
                    context: "linear coefficient",
                });
            }
            for j in 0..m {
                if !q[i][j].is_finite() {
                    return Err(Error::NonFinite {
                        context: "quadratic coefficient",
                    });
                }
                if (q[i][j] - q[j][i]).abs() > tol {
                    return Err(Error::InvalidProgram(format!(
                        "Q is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        support.sort_unstable();
        support.dedup();
        if support.is_empty() {
            return Err(Error::InvalidProgram("support is empty".into()));
        }
        if let Some(&last) = support.last() {
            if last >= m {
                return Err(Error::InvalidProgram(format!(
                    "support index {last} out of range for {m} arms"
                )));
            }
        }
        Ok(QuadraticProgram { q, c, support })
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// Objective `αᵀQα + cᵀα`.
    pub fn objective(&self, alpha: &[S]) -> Result<S> {
        if alpha.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: alpha.len(),
            });
        }
        let mut quad = S::zero();
        let mut lin = S::zero();
        for i in 0..alpha.len() {
            lin += self.c[i] * alpha[i];
            for j in 0..alpha.len() {
                quad += alpha[i] * self.q[i][j] * alpha[j];
            }
        }
        Ok(quad + lin)
    }

    fn reduced(&self) -> (Vec<Vec<S>>, Vec<S>) {
        let s = self.support.len();
        let mut q = vec![vec![S::zero(); s]; s];
        let mut c = vec![S::zero(); s];
        for (a, &i) in self.support.iter().enumerate() {
            c[a] = self.c[i];
            for (b, &j) in self.support.iter().enumerate() {
                q[a][b] = self.q[i][j];
            }
        }
        (q, c)
    }

    fn scatter(&self, reduced: &[S]) -> Vec<S> {
        let mut full = vec![S::zero(); self.dim()];
        for (a, &i) in self.support.iter().enumerate() {
            full[i] = reduced[a];
        }
        full
    }

    /// Largest eigenvalue of the reduced `Q` by power iteration.
    fn lambda_max(q: &[Vec<S>]) -> S {
        let s = q.len();
        let mut v: Vec<S> = (0..s)
            .map(|i| S::one() + real::<S>(0.01) * real_of_usize::<S>(i))
            .collect();
        let start_norm = v.iter().map(|&x| x * x).sum::<S>().sqrt();
        for x in &mut v {
            *x /= start_norm;
        }
        let mut lambda = S::zero();
        for _ in 0..100 {
            let mut w = vec![S::zero(); s];
            for i in 0..s {
                for j in 0..s {
                    w[i] += q[i][j] * v[j];
                }
            }
            let norm = w.iter().map(|&x| x * x).sum::<S>().sqrt();
            if norm <= S::zero() {
                return S::zero();
            }
            let next = norm
                * v.iter()
                    .zip(w.iter())
                    .map(|(&a, &b)| a * b)
                    .sum::<S>()
                    .signum();
            for x in &mut w {
                *x /= norm;
            }
            let converged = (next - lambda).abs() <= real::<S>(1e-9) * next.abs().max(S::one());
            v = w;
            lambda = next;
            if converged {
                break;
            }
        }
        lambda.abs()
    }

    /// Gradient `2Qα + c` restricted to the support coordinates.
    fn reduced_gradient(q: &[Vec<S>], c: &[S], x: &[S]) -> Vec<S> {
        let s = x.len();
        let two = real::<S>(2.0);
        let mut g = vec![S::zero(); s];
        for i in 0..s {
            let mut acc = S::zero();
            for j in 0..s {
                acc += q[i][j] * x[j];
            }
            g[i] = two * acc + c[i];
        }
        g
    }

    fn gradient_mapping_norm(q: &[Vec<S>], c: &[S], x: &[S]) -> S {
        let g = Self::reduced_gradient(q, c, x);
        let shifted: Vec<S> = x.iter().zip(g.iter()).map(|(&a, &b)| a - b).collect();
        let projected = project_simplex(&shifted);
        x.iter()
            .zip(projected.iter())
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<S>()
            .sqrt()
    }

    /// First-order stationarity residual of `alpha` for this program.
    ///
    /// Zero at an exact constrained minimizer; [`minimize`] drives it below
    /// its tolerance.
    ///
    /// [`minimize`]: QuadraticProgram::minimize
    pub fn kkt_residual(&self, alpha: &MixtureWeights<S>) -> Result<S> {
        if alpha.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: alpha.len(),
            });
        }
        let (q, c) = self.reduced();
        let x: Vec<S> = self.support.iter().map(|&i| alpha[i]).collect();
        Ok(Self::gradient_mapping_norm(&q, &c, &x))
    }

    /// Minimizes the program over the (restricted) simplex.
    ///
    /// `warm_start` seeds the iteration, which matters for the per-round
    /// solves of the online policies where consecutive programs barely
    /// differ. Tolerance is on the gradient-mapping norm; `1e-8` is the
    /// customary default.
    pub fn minimize(
        &self,
        warm_start: Option<&MixtureWeights<S>>,
        tol: S,
    ) -> Result<MixtureWeights<S>> {
        if !tol.is_finite() || tol <= S::zero() {
            return Err(Error::InvalidProgram(format!(
                "tolerance must be positive, got {}",
                tol
            )));
        }
        let s = self.support.len();
        if s == 1 {
            return MixtureWeights::new(self.scatter(&[S::one()]));
        }
        let (q, c) = self.reduced();

        let lambda = Self::lambda_max(&q);
        if lambda <= singular_threshold::<S>() {
            // Quadratic part is numerically zero: minimize the linear term
            // at a vertex, lowest index on ties.
            let mut best = 0usize;
            for (i, &ci) in c.iter().enumerate() {
                if ci < c[best] {
                    best = i;
                }
            }
            let mut x = vec![S::zero(); s];
            x[best] = S::one();
            return MixtureWeights::new(self.scatter(&x));
        }

        // The gradient 2Qα + c is Lipschitz with constant 2λ_max; keep a
        // small margin against power-iteration error.
        let step = S::one() / (real::<S>(2.02) * lambda);
        let mut x: Vec<S> = match warm_start {
            Some(w) => {
                if w.len() != self.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: self.dim(),
                        actual: w.len(),
                    });
                }
                let raw: Vec<S> = self.support.iter().map(|&i| w[i]).collect();
                project_simplex(&raw)
            }
            None => vec![S::one() / real_of_usize::<S>(s); s],
        };
        let mut y = x.clone();
        let mut momentum = S::one();

        let cap = {
            let scaled = real::<S>(10.0) * real_of_usize::<S>(s) / tol.sqrt();
            (scaled.to_f64().unwrap_or(2e5) as usize).clamp(200, 200_000)
        };
        for _ in 0..cap {
            let g = Self::reduced_gradient(&q, &c, &y);
            let candidate: Vec<S> = y
                .iter()
                .zip(g.iter())
                .map(|(&yi, &gi)| yi - step * gi)
                .collect();
            let next = project_simplex(&candidate);

            // Gradient-based adaptive restart keeps the momentum sequence
            // from overshooting on strongly convex instances.
            let restart = y
                .iter()
                .zip(next.iter().zip(x.iter()))
                .map(|(&yi, (&ni, &xi))| (yi - ni) * (ni - xi))
                .sum::<S>()
                > S::zero();
            let next_momentum = if restart {
                S::one()
            } else {
                (S::one() + (S::one() + real::<S>(4.0) * momentum * momentum).sqrt())
                    / real::<S>(2.0)
            };
            let blend = (momentum - S::one()) / next_momentum;
            y = next
                .iter()
                .zip(x.iter())
                .map(|(&ni, &xi)| ni + blend * (ni - xi))
                .collect();
            momentum = next_momentum;
            x = next;

            if Self::gradient_mapping_norm(&q, &c, &x) <= tol {
                break;
            }
        }
        MixtureWeights::new(self.scatter(&x))
    }

    /// Exhaustive search over the grid `{k/resolution}` on the support
    /// face; the independent check for [`minimize`]. Cost grows
    /// combinatorially, so the support may have at most 4 arms.
    ///
    /// Ties keep the lexicographically smallest grid point.
    ///
    /// [`minimize`]: QuadraticProgram::minimize
    pub fn grid_oracle(&self, resolution: usize) -> Result<(MixtureWeights<S>, S)> {
        if resolution == 0 {
            return Err(Error::InvalidProgram("grid resolution must be positive".into()));
        }
        let s = self.support.len();
        if s > 4 {
            return Err(Error::InvalidProgram(format!(
                "grid oracle supports at most 4 arms, got {s}"
            )));
        }
        let (q, c) = self.reduced();
        let res = real_of_usize::<S>(resolution);
        let mut best_point: Option<Vec<S>> = None;
        let mut best_value = S::infinity();
        let mut counts = vec![0usize; s];
        Self::enumerate_compositions(resolution, 0, &mut counts, &mut |counts| {
            let point: Vec<S> = counts
                .iter()
                .map(|&k| real_of_usize::<S>(k) / res)
                .collect();
            let mut quad = S::zero();
            let mut lin = S::zero();
            for i in 0..s {
                lin += c[i] * point[i];
                for j in 0..s {
                    quad += point[i] * q[i][j] * point[j];
                }
            }
            let value = quad + lin;
            if value < best_value {
                best_value = value;
                best_point = Some(point);
            }
        });
        let reduced = best_point.expect("grid enumeration is nonempty");
        Ok((MixtureWeights::new(self.scatter(&reduced))?, best_value))
    }

    fn enumerate_compositions(
        remaining: usize,
        index: usize,
        counts: &mut Vec<usize>,
        visit: &mut impl FnMut(&[usize]),
    ) {
        if index == counts.len() - 1 {
            counts[index] = remaining;
            visit(counts);
            return;
        }
        for k in 0..=remaining {
            counts[index] = k;
            Self::enumerate_compositions(remaining - k, index + 1, counts, visit);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn qp(q: Vec<Vec<f64>>, c: Vec<f64>) -> QuadraticProgram<f64> {
        QuadraticProgram::new(q, c).unwrap()
    }

    #[test]
    fn projection_matches_hand_examples() {
        assert_eq!(project_simplex(&[2.0, 0.0]), vec![1.0, 0.0]);
        let p = project_simplex(&[0.6, 0.6]);
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.5, epsilon = 1e-15);
        let q = project_simplex(&[-1.0, -2.0, -3.0]);
        assert_eq!(q, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn diagonal_program_has_analytic_solution() {
        // minimize 2α₁² + α₂² on the simplex: α* = (1/3, 2/3).
        let program = qp(vec![vec![2.0, 0.0], vec![0.0, 1.0]], vec![0.0, 0.0]);
        let alpha = program.minimize(None, 1e-10).unwrap();
        assert_abs_diff_eq!(alpha[0], 1.0 / 3.0, epsilon = 1e-6);
        assert_abs_diff_eq!(alpha[1], 2.0 / 3.0, epsilon = 1e-6);
        let value = program.objective(alpha.as_slice()).unwrap();
        assert_abs_diff_eq!(value, 2.0 / 3.0, epsilon = 1e-9);
    }

    #[test]
    fn zero_quadratic_falls_back_to_best_vertex() {
        let program = qp(
            vec![vec![0.0; 3], vec![0.0; 3], vec![0.0; 3]],
            vec![0.3, -0.2, 0.1],
        );
        let alpha = program.minimize(None, 1e-8).unwrap();
        assert_eq!(alpha.as_slice(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn vertex_ties_break_to_the_lowest_index() {
        let program = qp(
            vec![vec![0.0; 3], vec![0.0; 3], vec![0.0; 3]],
            vec![0.5, 0.2, 0.2],
        );
        let alpha = program.minimize(None, 1e-8).unwrap();
        assert_eq!(alpha.as_slice(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn support_restriction_pins_excluded_arms_to_zero() {
        let q = vec![
            vec![2.0, 0.0, 0.0],
            vec![0.0, 5.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        let program = QuadraticProgram::with_support(q, vec![0.0; 3], vec![0, 2]).unwrap();
        let alpha = program.minimize(None, 1e-10).unwrap();
        assert_eq!(alpha[1], 0.0);
        assert_abs_diff_eq!(alpha[0], 1.0 / 3.0, epsilon = 1e-6);
        assert_abs_diff_eq!(alpha[2], 2.0 / 3.0, epsilon = 1e-6);
    }

    #[test]
    fn warm_starts_do_not_change_the_answer() {
        let program = qp(
            vec![vec![1.0, 0.2], vec![0.2, 3.0]],
            vec![-0.5, 0.1],
        );
        let cold = program.minimize(None, 1e-10).unwrap();
        for warm in [
            MixtureWeights::new(vec![1.0, 0.0]).unwrap(),
            MixtureWeights::new(vec![0.0, 1.0]).unwrap(),
            MixtureWeights::new(vec![0.9, 0.1]).unwrap(),
        ] {
            let result = program.minimize(Some(&warm), 1e-10).unwrap();
            assert_abs_diff_eq!(result[0], cold[0], epsilon = 1e-6);
            assert_abs_diff_eq!(result[1], cold[1], epsilon = 1e-6);
        }
    }

    #[test]
    fn identical_arms_give_a_deterministic_split() {
        let program = qp(vec![vec![1.0, 1.0], vec![1.0, 1.0]], vec![0.0, 0.0]);
        let a = program.minimize(None, 1e-8).unwrap();
        let b = program.minimize(None, 1e-8).unwrap();
        assert_eq!(a, b);
        assert_abs_diff_eq!(program.objective(a.as_slice()).unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn grid_oracle_brackets_the_continuous_minimum() {
        let program = qp(vec![vec![2.0, 0.0], vec![0.0, 1.0]], vec![0.0, 0.0]);
        let (point, value) = program.grid_oracle(1000).unwrap();
        assert_abs_diff_eq!(point[0], 1.0 / 3.0, epsilon = 1e-3);
        assert!(value >= 2.0 / 3.0 - 1e-12);
        assert!(value <= 2.0 / 3.0 + 1e-4);
    }

    #[test]
    fn grid_oracle_respects_support_and_size_limits() {
        let q = vec![vec![0.0; 5]; 5];
        let program = QuadraticProgram::new(q.clone(), vec![0.0; 5]).unwrap();
        assert!(program.grid_oracle(10).is_err());
        let restricted =
            QuadraticProgram::with_support(q, vec![3.0, 0.0, 1.0, 0.0, 2.0], vec![0, 2]).unwrap();
        let (point, value) = restricted.grid_oracle(10).unwrap();
        assert_eq!(point.as_slice(), &[0.0, 0.0, 1.0, 0.0, 0.0]);
        assert_abs_diff_eq!(value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_malformed_programs() {
        assert!(QuadraticProgram::new(vec![vec![0.0, 1.0]], vec![0.0, 0.0]).is_err());
        assert!(
            QuadraticProgram::new(vec![vec![0.0, 1.0], vec![0.5, 0.0]], vec![0.0, 0.0]).is_err()
        );
        assert!(QuadraticProgram::new(
            vec![vec![f64::NAN, 0.0], vec![0.0, 0.0]],
            vec![0.0, 0.0]
        )
        .is_err());
        assert!(QuadraticProgram::with_support(
            vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            vec![0.0, 0.0],
            vec![]
        )
        .is_err());
        assert!(QuadraticProgram::with_support(
            vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            vec![0.0, 0.0],
            vec![2]
        )
        .is_err());
        let ok = qp(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.0, 0.0]);
        assert!(ok.minimize(None, 0.0).is_err());
    }

    fn random_psd(m: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
        let a: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..m).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let mut q = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    q[i][j] += a[k][i] * a[k][j];
                }
            }
        }
        q
    }

    #[test]
    fn solver_beats_the_grid_on_random_instances() {
        let mut rng = crate::arms::RngSeed(2024).rng();
        for _ in 0..25 {
            let m = rng.random_range(2..4usize);
            let q = random_psd(m, &mut rng);
            let c: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
            let program = QuadraticProgram::new(q, c).unwrap();
            let alpha = program.minimize(None, 1e-8).unwrap();
            let solved = program.objective(alpha.as_slice()).unwrap();
            let (_, grid) = program.grid_oracle(400).unwrap();
            assert!(
                solved <= grid + 1e-4,
                "solved {} vs grid {} on m = {}",
                solved,
                grid,
                m
            );
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn projection_lands_on_the_simplex_and_is_closest(
            v in proptest::collection::vec(-5.0f64..5.0, 1..6),
            w_raw in proptest::collection::vec(0.01f64..1.0, 1..6),
        ) {
            let p = project_simplex(&v);
            let sum: f64 = p.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            prop_assert!(p.iter().all(|&x| x >= 0.0));

            // Any other simplex point of the same dimension is no closer.
            if w_raw.len() == v.len() {
                let total: f64 = w_raw.iter().sum();
                let w: Vec<f64> = w_raw.iter().map(|x| x / total).collect();
                let dp: f64 = v.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum();
                let dw: f64 = v.iter().zip(&w).map(|(a, b)| (a - b) * (a - b)).sum();
                prop_assert!(dp <= dw + 1e-9);
            }
        }

        #[test]
        fn minimizer_satisfies_first_order_conditions(seed in 0u64..500) {
            let mut rng = crate::arms::RngSeed(seed).rng();
            let m = rng.random_range(2..5usize);
            let q = random_psd(m, &mut rng);
            let c: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
            let program = QuadraticProgram::new(q, c).unwrap();
            let alpha = program.minimize(None, 1e-8).unwrap();
            let residual = program.kkt_residual(&alpha).unwrap();
            prop_assert!(residual <= 1e-7, "KKT residual {}", residual);
        }
    }
}
