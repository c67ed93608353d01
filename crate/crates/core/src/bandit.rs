//! Arm-selection policies and the simulation loop.
//!
//! A run repeatedly picks an arm, draws a batch of samples from it, and
//! feeds them to the running loss estimator. The UCB-family policies
//! (Mixture-UCB-CAB, Mixture-UCB-OGD, Sparse-Mixture-UCB-CAB, Vanilla-UCB)
//! start with one round-robin pass so every arm has at least one sample,
//! then trade off empirical loss against the per-arm confidence widths.
//! Successive Halving and the two oracle policies serve as baselines.
//!
//! Runs are deterministic: the whole trajectory is a pure function of the
//! policy configuration, the source specs, and the seed. Arm-choice
//! randomness and sample-draw randomness live on separate seed streams, so
//! policies compared under the same seed see the same sample noise.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::arms::{build_source, RngSeed, SampleSource, SourceSpec};
use crate::error::{Error, Result};
use crate::estimator::{ConfidenceParams, EmpiricalState};
use crate::mixture::MixtureWeights;
use crate::scalar::{real, real_of_usize, Scalar};
use crate::score::LossSpec;
use crate::simplex::QuadraticProgram;

/// Gradient-mapping tolerance for the per-round mixture solves.
fn qp_tolerance<S: Scalar>() -> S {
    real::<S>(1e-8)
}

fn default_batch() -> usize {
    1
}

fn default_stride() -> usize {
    1
}

/// One arm-selection policy with its parameters.
///
/// Arm indices in configs (`arm` of the one-arm oracle) are 1-based, as
/// are the arm and subscription columns of exported trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PolicyConfig<S> {
    /// Solves the optimistic mixture program each round and samples the
    /// arm from the resulting weights.
    MixtureUcbCab {
        #[serde(skip_serializing_if = "Option::is_none")]
        beta: Option<S>,
        #[serde(default = "default_batch")]
        batch: usize,
        /// Re-solve the mixture program every `stride` decisions, reusing
        /// the previous weights in between.
        #[serde(default = "default_stride")]
        stride: usize,
        #[serde(skip_serializing_if = "Option::is_none")]
        name: Option<String>,
    },
    /// Pulls the steepest-descent arm of the optimistic loss.
    MixtureUcbOgd {
        #[serde(skip_serializing_if = "Option::is_none")]
        beta: Option<S>,
        #[serde(default = "default_batch")]
        batch: usize,
        #[serde(skip_serializing_if = "Option::is_none")]
        name: Option<String>,
    },
    /// Mixture-UCB-CAB with a per-round subscription fee `lambda` per
    /// subscribed arm; arms whose removal does not hurt the optimistic
    /// objective are unsubscribed and never pulled again.
    SparseMixtureUcbCab {
        #[serde(skip_serializing_if = "Option::is_none")]
        beta: Option<S>,
        #[serde(default = "default_batch")]
        batch: usize,
        #[serde(skip_serializing_if = "Option::is_none")]
        lambda: Option<S>,
        /// Target support size. When set, `lambda` is ignored: the fee
        /// starts at zero and grows geometrically each decision until the
        /// subscription shrinks to this size, then everything freezes.
        #[serde(skip_serializing_if = "Option::is_none")]
        sparsity: Option<usize>,
        #[serde(skip_serializing_if = "Option::is_none")]
        growth: Option<S>,
        /// Seed value for the first fee-growth step (geometric growth
        /// cannot leave zero on its own).
        #[serde(skip_serializing_if = "Option::is_none")]
        lambda_init: Option<S>,
        #[serde(skip_serializing_if = "Option::is_none")]
        name: Option<String>,
    },
    /// Classic UCB on the single-arm losses.
    VanillaUcb {
        #[serde(skip_serializing_if = "Option::is_none")]
        beta: Option<S>,
        #[serde(default = "default_batch")]
        batch: usize,
        #[serde(skip_serializing_if = "Option::is_none")]
        name: Option<String>,
    },
    /// Phased elimination by single-arm sample loss.
    SuccessiveHalving {
        #[serde(default = "default_batch")]
        batch: usize,
        #[serde(skip_serializing_if = "Option::is_none")]
        name: Option<String>,
    },
    /// Samples every round from a fixed mixture.
    MixtureOracle {
        weights: Vec<S>,
        #[serde(default = "default_batch")]
        batch: usize,
        #[serde(skip_serializing_if = "Option::is_none")]
        name: Option<String>,
    },
    /// Pulls one fixed arm every round (1-based index).
    OneArmOracle {
        arm: usize,
        #[serde(default = "default_batch")]
        batch: usize,
        #[serde(skip_serializing_if = "Option::is_none")]
        name: Option<String>,
    },
}

impl<S: Scalar> PolicyConfig<S> {
    pub fn cab() -> Self {
        PolicyConfig::MixtureUcbCab {
            beta: None,
            batch: 1,
            stride: 1,
            name: None,
        }
    }

    pub fn ogd() -> Self {
        PolicyConfig::MixtureUcbOgd {
            beta: None,
            batch: 1,
            name: None,
        }
    }

    pub fn vanilla() -> Self {
        PolicyConfig::VanillaUcb {
            beta: None,
            batch: 1,
            name: None,
        }
    }

    pub fn sparse(lambda: S) -> Self {
        PolicyConfig::SparseMixtureUcbCab {
            beta: None,
            batch: 1,
            lambda: Some(lambda),
            sparsity: None,
            growth: None,
            lambda_init: None,
            name: None,
        }
    }

    pub fn fixed_sparsity(target: usize) -> Self {
        PolicyConfig::SparseMixtureUcbCab {
            beta: None,
            batch: 1,
            lambda: None,
            sparsity: Some(target),
            growth: None,
            lambda_init: None,
            name: None,
        }
    }

    pub fn successive_halving() -> Self {
        PolicyConfig::SuccessiveHalving {
            batch: 1,
            name: None,
        }
    }

    pub fn mixture_oracle(weights: Vec<S>) -> Self {
        PolicyConfig::MixtureOracle {
            weights,
            batch: 1,
            name: None,
        }
    }

    pub fn one_arm_oracle(arm: usize) -> Self {
        PolicyConfig::OneArmOracle {
            arm,
            batch: 1,
            name: None,
        }
    }

    /// Stable kind string, identical to the `kind` value in configs.
    pub fn kind_slug(&self) -> &'static str {
        match self {
            PolicyConfig::MixtureUcbCab { .. } => "mixture-ucb-cab",
            PolicyConfig::MixtureUcbOgd { .. } => "mixture-ucb-ogd",
            PolicyConfig::SparseMixtureUcbCab { .. } => "sparse-mixture-ucb-cab",
            PolicyConfig::VanillaUcb { .. } => "vanilla-ucb",
            PolicyConfig::SuccessiveHalving { .. } => "successive-halving",
            PolicyConfig::MixtureOracle { .. } => "mixture-oracle",
            PolicyConfig::OneArmOracle { .. } => "one-arm-oracle",
        }
    }

    /// Display name: the explicit `name` field, or the kind string.
    pub fn name(&self) -> String {
        let explicit = match self {
            PolicyConfig::MixtureUcbCab { name, .. }
            | PolicyConfig::MixtureUcbOgd { name, .. }
            | PolicyConfig::SparseMixtureUcbCab { name, .. }
            | PolicyConfig::VanillaUcb { name, .. }
            | PolicyConfig::SuccessiveHalving { name, .. }
            | PolicyConfig::MixtureOracle { name, .. }
            | PolicyConfig::OneArmOracle { name, .. } => name,
        };
        explicit
            .clone()
            .unwrap_or_else(|| self.kind_slug().to_string())
    }

    pub fn set_name(&mut self, new_name: String) {
        match self {
            PolicyConfig::MixtureUcbCab { name, .. }
            | PolicyConfig::MixtureUcbOgd { name, .. }
            | PolicyConfig::SparseMixtureUcbCab { name, .. }
            | PolicyConfig::VanillaUcb { name, .. }
            | PolicyConfig::SuccessiveHalving { name, .. }
            | PolicyConfig::MixtureOracle { name, .. }
            | PolicyConfig::OneArmOracle { name, .. } => *name = Some(new_name),
        }
    }

    pub fn batch(&self) -> usize {
        match self {
            PolicyConfig::MixtureUcbCab { batch, .. }
            | PolicyConfig::MixtureUcbOgd { batch, .. }
            | PolicyConfig::SparseMixtureUcbCab { batch, .. }
            | PolicyConfig::VanillaUcb { batch, .. }
            | PolicyConfig::SuccessiveHalving { batch, .. }
            | PolicyConfig::MixtureOracle { batch, .. }
            | PolicyConfig::OneArmOracle { batch, .. } => *batch,
        }
    }

    /// Per-policy exploration multiplier override, where applicable.
    pub fn beta(&self) -> Option<S> {
        match self {
            PolicyConfig::MixtureUcbCab { beta, .. }
            | PolicyConfig::MixtureUcbOgd { beta, .. }
            | PolicyConfig::SparseMixtureUcbCab { beta, .. }
            | PolicyConfig::VanillaUcb { beta, .. } => *beta,
            _ => None,
        }
    }

    /// Policies that need every arm pulled once before the main loop.
    pub fn needs_initialization(&self) -> bool {
        matches!(
            self,
            PolicyConfig::MixtureUcbCab { .. }
                | PolicyConfig::MixtureUcbOgd { .. }
                | PolicyConfig::SparseMixtureUcbCab { .. }
                | PolicyConfig::VanillaUcb { .. }
                | PolicyConfig::SuccessiveHalving { .. }
        )
    }

    pub fn validate(&self, arms: usize) -> Result<()> {
        if self.batch() == 0 {
            return Err(Error::InvalidPolicy("batch size must be at least 1".into()));
        }
        if let Some(beta) = self.beta() {
            if !beta.is_finite() || beta <= S::one() {
                return Err(Error::InvalidPolicy(format!(
                    "beta must be finite and greater than 1, got {}",
                    beta
                )));
            }
        }
        match self {
            PolicyConfig::MixtureUcbCab { stride, .. } => {
                if *stride == 0 {
                    return Err(Error::InvalidPolicy("stride must be at least 1".into()));
                }
            }
            PolicyConfig::SparseMixtureUcbCab {
                lambda,
                sparsity,
                growth,
                lambda_init,
                ..
            } => {
                if let Some(l) = lambda {
                    if !l.is_finite() || *l < S::zero() {
                        return Err(Error::InvalidPolicy(format!(
                            "lambda must be finite and nonnegative, got {}",
                            l
                        )));
                    }
                }
                if let Some(target) = sparsity {
                    if *target == 0 || *target > arms {
                        return Err(Error::InvalidPolicy(format!(
                            "sparsity target must be between 1 and {arms}, got {target}"
                        )));
                    }
                }
                if let Some(g) = growth {
                    if !g.is_finite() || *g <= S::one() {
                        return Err(Error::InvalidPolicy(format!(
                            "growth factor must be greater than 1, got {}",
                            g
                        )));
                    }
                }
                if let Some(init) = lambda_init {
                    if !init.is_finite() || *init <= S::zero() {
                        return Err(Error::InvalidPolicy(format!(
                            "lambda_init must be positive, got {}",
                            init
                        )));
                    }
                }
            }
            PolicyConfig::MixtureOracle { weights, .. } => {
                if weights.len() != arms {
                    return Err(Error::InvalidPolicy(format!(
                        "oracle weights cover {} arms but the instance has {arms}",
                        weights.len()
                    )));
                }
                MixtureWeights::new(weights.clone())?;
            }
            PolicyConfig::OneArmOracle { arm, .. } => {
                if *arm == 0 || *arm > arms {
                    return Err(Error::InvalidPolicy(format!(
                        "oracle arm must be between 1 and {arms}, got {arm}"
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// State after one policy decision landed.
///
/// `arm` and the `subscribed` entries are 1-based to match exported
/// trajectories; `counts` is indexed from zero as usual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct RoundRecord<S> {
    /// Total samples gathered so far, counting this decision's batch.
    pub t: usize,
    pub arm: usize,
    pub counts: Vec<usize>,
    /// Sample loss of everything gathered so far.
    pub loss: S,
    /// Mixture weights behind this decision, for the policies that
    /// compute one.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alpha: Option<Vec<S>>,
    /// Subscribed arms, for the sparse policy.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub subscribed: Option<Vec<usize>>,
}

/// Complete log of one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Trajectory<S> {
    pub policy: String,
    pub seed: u64,
    pub rounds: Vec<RoundRecord<S>>,
    pub final_counts: Vec<usize>,
    pub final_proportions: Vec<S>,
    /// Sample loss of the gathered collection, `L(P̂)`.
    pub final_loss: S,
    /// Wall-clock duration of the run in seconds. Excluded from
    /// serialization and equality; exports stay deterministic.
    #[serde(skip)]
    pub wall_time: f64,
}

impl<S: PartialEq> PartialEq for Trajectory<S> {
    fn eq(&self, other: &Self) -> bool {
        self.policy == other.policy
            && self.seed == other.seed
            && self.rounds == other.rounds
            && self.final_counts == other.final_counts
            && self.final_proportions == other.final_proportions
            && self.final_loss == other.final_loss
    }
}

/// A finished run: the trajectory plus the estimator state holding the
/// gathered samples.
#[derive(Debug, Clone)]
pub struct RunOutcome<S> {
    pub trajectory: Trajectory<S>,
    pub state: EmpiricalState<S>,
}

/// Per-round regret of a finished run against the optimal mixture loss.
pub fn regret_per_round<S: Scalar>(trajectory: &Trajectory<S>, optimal_loss: S) -> S {
    trajectory.final_loss - optimal_loss
}

/// Theoretical regret-per-round envelope, `4·Δ_L·√(β·m·ln T / T)`.
pub fn regret_envelope<S: Scalar>(delta_l: S, beta: S, arms: usize, rounds: usize) -> S {
    let t = real_of_usize::<S>(rounds);
    let m = real_of_usize::<S>(arms);
    real::<S>(4.0) * delta_l * (beta * m * t.ln() / t).sqrt()
}

/// Draws an index from `alpha`; zero-weight arms are never returned.
fn sample_arm<S: Scalar>(alpha: &MixtureWeights<S>, rng: &mut impl rand::Rng) -> usize {
    let u: S = rng.random_range(S::zero()..S::one());
    let mut acc = S::zero();
    let mut last_positive = 0;
    for (i, &w) in alpha.as_slice().iter().enumerate() {
        if w > S::zero() {
            acc += w;
            last_positive = i;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

fn argmin<S: Scalar>(values: &[S]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// Optimistic single-arm scores `K̂_ii + f̂_i − ε_i`.
fn vanilla_scores<S: Scalar>(state: &EmpiricalState<S>, eps: &[S]) -> Vec<S> {
    let khat = state.khat();
    let fhat = state.fhat();
    (0..state.arms())
        .map(|i| khat[i][i] + fhat[i] - eps[i])
        .collect()
}

/// Optimistic loss gradient `(2/t)·K̂ n + f̂ − ε` at the current counts.
fn ogd_scores<S: Scalar>(state: &EmpiricalState<S>, eps: &[S]) -> Vec<S> {
    let khat = state.khat();
    let fhat = state.fhat();
    let counts = state.counts();
    let t = real_of_usize::<S>(state.total());
    let two = real::<S>(2.0);
    (0..state.arms())
        .map(|i| {
            let mut kn = S::zero();
            for j in 0..state.arms() {
                kn += khat[i][j] * real_of_usize::<S>(counts[j]);
            }
            two / t * kn + fhat[i] - eps[i]
        })
        .collect()
}

/// Solves `min αᵀK̂α + cᵀα` over the simplex face on `support`; returns
/// the minimizer and the objective value.
fn solve_weighted<S: Scalar>(
    khat: &[Vec<S>],
    c: &[S],
    support: &[usize],
    warm: Option<&MixtureWeights<S>>,
) -> Result<(MixtureWeights<S>, S)> {
    let qp = QuadraticProgram::with_support(khat.to_vec(), c.to_vec(), support.to_vec())?;
    let alpha = qp.minimize(warm, qp_tolerance::<S>())?;
    let value = qp.objective(alpha.as_slice())?;
    Ok((alpha, value))
}

/// The optimistic mixture of the CAB step: `argmin L̂(α) − εᵀα`.
fn cab_mixture<S: Scalar>(
    state: &EmpiricalState<S>,
    eps: &[S],
    support: &[usize],
    warm: Option<&MixtureWeights<S>>,
) -> Result<(MixtureWeights<S>, S)> {
    let khat = state.khat();
    let fhat = state.fhat();
    let c: Vec<S> = fhat.iter().zip(eps).map(|(&f, &e)| f - e).collect();
    solve_weighted(&khat, &c, support, warm)
}

struct RunCtx<S: Scalar> {
    state: EmpiricalState<S>,
    sources: Vec<SampleSource<S>>,
    records: Vec<RoundRecord<S>>,
    batch: usize,
}

impl<S: Scalar> RunCtx<S> {
    /// Pulls `arm` for one batch and records the decision.
    fn pull(
        &mut self,
        arm: usize,
        alpha: Option<&MixtureWeights<S>>,
        subscribed: Option<&[usize]>,
    ) -> Result<()> {
        let samples = self.sources[arm].draw_batch(self.batch)?;
        self.state.add_batch(arm, samples)?;
        let loss = self.state.empirical_distribution_loss()?;
        self.records.push(RoundRecord {
            t: self.state.total(),
            arm: arm + 1,
            counts: self.state.counts(),
            loss,
            alpha: alpha.map(|a| a.as_slice().to_vec()),
            subscribed: subscribed.map(|s| s.iter().map(|&i| i + 1).collect()),
        });
        Ok(())
    }

    fn decisions(&self) -> usize {
        self.records.len()
    }
}

/// Runs one policy for `rounds` samples and returns the trajectory along
/// with the final estimator state.
///
/// `rounds` is rounded up to a whole number of batches when the policy
/// pulls more than one sample per decision. The confidence parameters are
/// shared across policies; a per-policy `beta` overrides the multiplier.
pub fn run<S: Scalar>(
    policy: &PolicyConfig<S>,
    sources: &[SourceSpec<S>],
    spec: &LossSpec<S>,
    params: &ConfidenceParams<S>,
    rounds: usize,
    seed: RngSeed,
) -> Result<RunOutcome<S>> {
    let start = Instant::now();
    let m = sources.len();
    if m == 0 {
        return Err(Error::InvalidConfig("no arms configured".into()));
    }
    policy.validate(m)?;
    let params = match policy.beta() {
        Some(beta) => ConfidenceParams::new(beta, params.delta_l, params.delta_kappa)?,
        None => *params,
    };
    if rounds == 0 {
        return Err(Error::BudgetTooSmall {
            required: 1,
            actual: 0,
        });
    }
    let decisions = rounds.div_ceil(policy.batch());
    if policy.needs_initialization() && decisions < m {
        return Err(Error::BudgetTooSmall {
            required: m,
            actual: decisions,
        });
    }

    let mut ctx = RunCtx {
        state: EmpiricalState::new(spec.clone(), m)?,
        sources: sources
            .iter()
            .enumerate()
            .map(|(i, s)| build_source(s, seed.stream(i as u64 + 1)))
            .collect::<Result<Vec<_>>>()?,
        records: Vec::with_capacity(decisions),
        batch: policy.batch(),
    };
    let mut policy_rng = seed.stream(0).rng();

    if m == 1 {
        run_single_arm(policy, &mut ctx, decisions)?;
    } else {
        match policy {
            PolicyConfig::MixtureUcbCab { stride, .. } => {
                run_cab(&mut ctx, &params, decisions, *stride, &mut policy_rng)?
            }
            PolicyConfig::MixtureUcbOgd { .. } => run_ogd(&mut ctx, &params, decisions)?,
            PolicyConfig::SparseMixtureUcbCab {
                lambda,
                sparsity,
                growth,
                lambda_init,
                ..
            } => {
                let opts = SparseOptions {
                    lambda: lambda.unwrap_or_else(S::zero),
                    target: *sparsity,
                    growth: growth.unwrap_or_else(|| real::<S>(1.05)),
                    lambda_init: lambda_init.unwrap_or_else(|| real::<S>(1e-3)),
                };
                run_sparse(&mut ctx, &params, decisions, &opts, &mut policy_rng)?
            }
            PolicyConfig::VanillaUcb { .. } => run_vanilla(&mut ctx, &params, decisions)?,
            PolicyConfig::SuccessiveHalving { .. } => {
                run_successive_halving(&mut ctx, decisions)?
            }
            PolicyConfig::MixtureOracle { weights, .. } => {
                let alpha = MixtureWeights::new(weights.clone())?;
                while ctx.decisions() < decisions {
                    let arm = sample_arm(&alpha, &mut policy_rng);
                    ctx.pull(arm, Some(&alpha), None)?;
                }
            }
            PolicyConfig::OneArmOracle { arm, .. } => {
                let target = arm - 1;
                while ctx.decisions() < decisions {
                    ctx.pull(target, None, None)?;
                }
            }
        }
    }

    let trajectory = Trajectory {
        policy: policy.name(),
        seed: seed.0,
        rounds: ctx.records,
        final_counts: ctx.state.counts(),
        final_proportions: ctx.state.proportion_vector()?.into_vec(),
        final_loss: ctx.state.empirical_distribution_loss()?,
        wall_time: start.elapsed().as_secs_f64(),
    };
    Ok(RunOutcome {
        trajectory,
        state: ctx.state,
    })
}

/// With one arm every policy degenerates to pulling it each decision.
fn run_single_arm<S: Scalar>(
    policy: &PolicyConfig<S>,
    ctx: &mut RunCtx<S>,
    decisions: usize,
) -> Result<()> {
    let mixture = matches!(
        policy,
        PolicyConfig::MixtureUcbCab { .. }
            | PolicyConfig::SparseMixtureUcbCab { .. }
            | PolicyConfig::MixtureOracle { .. }
    );
    let alpha = MixtureWeights::basis(1, 0)?;
    let subscribed = [0usize];
    while ctx.decisions() < decisions {
        ctx.pull(
            0,
            mixture.then_some(&alpha),
            matches!(policy, PolicyConfig::SparseMixtureUcbCab { .. }).then_some(&subscribed[..]),
        )?;
    }
    Ok(())
}

fn init_round_robin<S: Scalar>(ctx: &mut RunCtx<S>, subscribed: Option<&[usize]>) -> Result<()> {
    for arm in 0..ctx.state.arms() {
        ctx.pull(arm, None, subscribed)?;
    }
    Ok(())
}

fn run_cab<S: Scalar>(
    ctx: &mut RunCtx<S>,
    params: &ConfidenceParams<S>,
    decisions: usize,
    stride: usize,
    rng: &mut impl rand::Rng,
) -> Result<()> {
    let m = ctx.state.arms();
    let support: Vec<usize> = (0..m).collect();
    init_round_robin(ctx, None)?;
    let mut alpha: Option<MixtureWeights<S>> = None;
    let mut since_solve = 0;
    while ctx.decisions() < decisions {
        if alpha.is_none() || since_solve % stride == 0 {
            let eps = ctx.state.confidence_vector_t(params)?;
            let (next, _) = cab_mixture(&ctx.state, &eps, &support, alpha.as_ref())?;
            alpha = Some(next);
        }
        since_solve += 1;
        let current = alpha.as_ref().expect("mixture solved above");
        let arm = sample_arm(current, rng);
        ctx.pull(arm, Some(current), None)?;
    }
    Ok(())
}

fn run_ogd<S: Scalar>(
    ctx: &mut RunCtx<S>,
    params: &ConfidenceParams<S>,
    decisions: usize,
) -> Result<()> {
    init_round_robin(ctx, None)?;
    while ctx.decisions() < decisions {
        let eps = ctx.state.confidence_vector_t(params)?;
        let arm = argmin(&ogd_scores(&ctx.state, &eps));
        ctx.pull(arm, None, None)?;
    }
    Ok(())
}

fn run_vanilla<S: Scalar>(
    ctx: &mut RunCtx<S>,
    params: &ConfidenceParams<S>,
    decisions: usize,
) -> Result<()> {
    init_round_robin(ctx, None)?;
    while ctx.decisions() < decisions {
        let eps = ctx.state.confidence_vector_t(params)?;
        let arm = argmin(&vanilla_scores(&ctx.state, &eps));
        ctx.pull(arm, None, None)?;
    }
    Ok(())
}

struct SparseOptions<S> {
    lambda: S,
    target: Option<usize>,
    growth: S,
    lambda_init: S,
}

fn run_sparse<S: Scalar>(
    ctx: &mut RunCtx<S>,
    params: &ConfidenceParams<S>,
    decisions: usize,
    opts: &SparseOptions<S>,
    rng: &mut impl rand::Rng,
) -> Result<()> {
    let m = ctx.state.arms();
    let mut subscribed: Vec<usize> = (0..m).collect();
    init_round_robin(ctx, Some(subscribed.as_slice()))?;

    let growing = opts.target.is_some();
    let mut lambda = if growing { S::zero() } else { opts.lambda };
    let mut frozen = false;
    let mut alpha_prev: Option<MixtureWeights<S>> = None;

    while ctx.decisions() < decisions {
        if growing && !frozen {
            if subscribed.len() <= opts.target.expect("growing implies target") {
                frozen = true;
            } else if lambda == S::zero() {
                lambda = opts.lambda_init;
            } else {
                lambda *= opts.growth;
            }
        }

        let eps = ctx.state.confidence_vector_t(params)?;
        let khat = ctx.state.khat();
        let fhat = ctx.state.fhat();
        let c_lower: Vec<S> = fhat.iter().zip(&eps).map(|(&f, &e)| f - e).collect();

        let alpha = loop {
            let (alpha, base) = solve_weighted(&khat, &c_lower, &subscribed, alpha_prev.as_ref())?;
            let fee = lambda * real_of_usize::<S>(subscribed.len());
            let keep_cost = base + fee;

            let can_remove = subscribed.len() >= 2
                && (!growing || (!frozen && subscribed.len() > opts.target.unwrap()));
            if can_remove {
                // Cost of dropping an arm, judged pessimistically: the
                // remaining mixture pays +εᵀα instead of earning the bonus.
                let c_upper: Vec<S> = fhat.iter().zip(&eps).map(|(&f, &e)| f + e).collect();
                let mut best: Option<(S, usize)> = None;
                for &i in &subscribed {
                    let rest: Vec<usize> =
                        subscribed.iter().copied().filter(|&j| j != i).collect();
                    let (_, drop_base) =
                        solve_weighted(&khat, &c_upper, &rest, alpha_prev.as_ref())?;
                    let drop_cost =
                        drop_base + lambda * real_of_usize::<S>(subscribed.len() - 1);
                    if best.map_or(true, |(v, _)| drop_cost < v) {
                        best = Some((drop_cost, i));
                    }
                }
                let (drop_cost, victim) = best.expect("subscription is nonempty");
                if drop_cost <= keep_cost {
                    subscribed.retain(|&j| j != victim);
                    if growing && subscribed.len() <= opts.target.unwrap() {
                        frozen = true;
                    }
                    continue;
                }
            }
            break alpha;
        };

        let arm = sample_arm(&alpha, rng);
        ctx.pull(arm, Some(&alpha), Some(subscribed.as_slice()))?;
        alpha_prev = Some(alpha);
    }
    Ok(())
}

fn run_successive_halving<S: Scalar>(ctx: &mut RunCtx<S>, decisions: usize) -> Result<()> {
    let m = ctx.state.arms();
    let phases = (usize::BITS - (m - 1).leading_zeros()) as usize;
    let per_phase = decisions / (phases + 1);
    if per_phase < m {
        return Err(Error::BudgetTooSmall {
            required: m * (phases + 1),
            actual: decisions,
        });
    }

    let mut alive: Vec<usize> = (0..m).collect();
    for _ in 0..phases {
        for k in 0..per_phase {
            ctx.pull(alive[k % alive.len()], None, None)?;
        }
        let khat = ctx.state.khat();
        let fhat = ctx.state.fhat();
        // Drop the worse half by single-arm loss; on equal losses the
        // higher index goes first.
        let eliminate = alive.len() / 2;
        let mut ranked = alive.clone();
        ranked.sort_by(|&a, &b| {
            let la = khat[a][a] + fhat[a];
            let lb = khat[b][b] + fhat[b];
            la.partial_cmp(&lb)
                .expect("sample losses are finite")
                .then(a.cmp(&b))
        });
        ranked.truncate(alive.len() - eliminate);
        ranked.sort_unstable();
        alive = ranked;
    }

    debug_assert_eq!(alive.len(), 1);
    let survivor = alive[0];
    while ctx.decisions() < decisions {
        ctx.pull(survivor, None, None)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arms::Sample;
    use crate::kernel::KernelSpec;
    use crate::score::{mmd_spec, rke_spec, LinearTerm, MmdTerm};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn far_point_masses(m: usize) -> Vec<SourceSpec<f64>> {
        (0..m)
            .map(|i| SourceSpec::point_mass(vec![100.0 * i as f64]))
            .collect()
    }

    fn rke() -> LossSpec<f64> {
        rke_spec(KernelSpec::gaussian(1.0).unwrap()).unwrap()
    }

    fn rke_params() -> ConfidenceParams<f64> {
        ConfidenceParams::from_spec(4.0, &rke()).unwrap()
    }

    fn arm_sequence(trajectory: &Trajectory<f64>) -> Vec<usize> {
        trajectory.rounds.iter().map(|r| r.arm).collect()
    }

    #[test]
    fn one_arm_oracle_pulls_only_its_arm() {
        let outcome = run(
            &PolicyConfig::one_arm_oracle(2),
            &far_point_masses(3),
            &rke(),
            &rke_params(),
            10,
            RngSeed(1),
        )
        .unwrap();
        assert_eq!(outcome.trajectory.final_counts, vec![0, 10, 0]);
        assert!(outcome.trajectory.rounds.iter().all(|r| r.arm == 2));
    }

    #[test]
    fn mixture_oracle_tracks_its_weights() {
        let outcome = run(
            &PolicyConfig::mixture_oracle(vec![0.5, 0.5]),
            &far_point_masses(2),
            &rke(),
            &rke_params(),
            10_000,
            RngSeed(7),
        )
        .unwrap();
        let share = outcome.trajectory.final_counts[0] as f64 / 10_000.0;
        assert!((share - 0.5).abs() < 0.02, "share {}", share);
        // Two far-apart point masses: the optimal mixture loss is 1/2, and
        // the oracle's gap is binomial sampling noise, tiny at this T.
        let regret = regret_per_round(&outcome.trajectory, 0.5);
        assert!(regret >= 0.0);
        assert!(regret <= 0.01, "regret {}", regret);
    }

    #[test]
    fn identical_arms_make_every_mixture_equal() {
        let sources = vec![
            SourceSpec::point_mass(vec![0.0]),
            SourceSpec::point_mass(vec![0.0]),
        ];
        let outcome = run(
            &PolicyConfig::cab(),
            &sources,
            &rke(),
            &rke_params(),
            60,
            RngSeed(3),
        )
        .unwrap();
        assert_eq!(outcome.trajectory.final_loss, 1.0);
        assert_eq!(regret_per_round(&outcome.trajectory, 1.0), 0.0);
    }

    #[test]
    fn ucb_family_and_halving_initialize_round_robin() {
        let sources = far_point_masses(3);
        for policy in [
            PolicyConfig::cab(),
            PolicyConfig::ogd(),
            PolicyConfig::vanilla(),
            PolicyConfig::sparse(0.0),
            PolicyConfig::successive_halving(),
        ] {
            let outcome = run(&policy, &sources, &rke(), &rke_params(), 12, RngSeed(5)).unwrap();
            let arms: Vec<usize> = arm_sequence(&outcome.trajectory)[..3].to_vec();
            assert_eq!(arms, vec![1, 2, 3], "policy {}", policy.name());
        }
    }

    #[test]
    fn counts_telescope_one_arm_per_decision() {
        let sources = far_point_masses(2);
        for (policy, batch) in [
            (PolicyConfig::cab(), 1),
            (PolicyConfig::ogd(), 1),
            (PolicyConfig::vanilla(), 3),
            (PolicyConfig::mixture_oracle(vec![0.4, 0.6]), 2),
        ] {
            let mut policy = policy;
            match &mut policy {
                PolicyConfig::MixtureUcbCab { batch: b, .. }
                | PolicyConfig::MixtureUcbOgd { batch: b, .. }
                | PolicyConfig::VanillaUcb { batch: b, .. }
                | PolicyConfig::MixtureOracle { batch: b, .. } => *b = batch,
                _ => unreachable!(),
            }
            let outcome = run(&policy, &sources, &rke(), &rke_params(), 24, RngSeed(11)).unwrap();
            let mut prev = vec![0usize; 2];
            for record in &outcome.trajectory.rounds {
                let mut changed = 0;
                for i in 0..2 {
                    if record.counts[i] != prev[i] {
                        changed += 1;
                        assert_eq!(record.counts[i], prev[i] + batch);
                        assert_eq!(record.arm, i + 1);
                    }
                }
                assert_eq!(changed, 1);
                assert_eq!(record.counts.iter().sum::<usize>(), record.t);
                prev = record.counts.clone();
            }
        }
    }

    #[test]
    fn batched_runs_round_up_to_whole_batches() {
        let mut policy = PolicyConfig::vanilla();
        if let PolicyConfig::VanillaUcb { batch, .. } = &mut policy {
            *batch = 3;
        }
        let outcome = run(
            &policy,
            &far_point_masses(2),
            &rke(),
            &rke_params(),
            10,
            RngSeed(2),
        )
        .unwrap();
        let ts: Vec<usize> = outcome.trajectory.rounds.iter().map(|r| r.t).collect();
        assert_eq!(ts, vec![3, 6, 9, 12]);
        assert_eq!(outcome.trajectory.final_counts.iter().sum::<usize>(), 12);
    }

    #[test]
    fn ogd_gradient_matches_hand_evaluation() {
        // Far point masses make K̂ the identity; with counts (9, 1) at
        // t = 10 the gradient is (2/10)·(9, 1) = (1.8, 0.2).
        let mut state = EmpiricalState::new(rke(), 2).unwrap();
        for _ in 0..9 {
            state.add_sample(0, Sample::new(vec![0.0]).unwrap()).unwrap();
        }
        state.add_sample(1, Sample::new(vec![100.0]).unwrap()).unwrap();
        let scores = ogd_scores(&state, &[0.0, 0.0]);
        assert_abs_diff_eq!(scores[0], 1.8, epsilon = 1e-12);
        assert_abs_diff_eq!(scores[1], 0.2, epsilon = 1e-12);
        assert_eq!(argmin(&scores), 1);

        // The confidence bonus only favors the under-pulled arm further.
        let eps = state.confidence_vector_t(&rke_params()).unwrap();
        assert_eq!(argmin(&ogd_scores(&state, &eps)), 1);
    }

    #[test]
    fn vanilla_explores_the_least_pulled_of_equal_arms() {
        let mut state = EmpiricalState::new(rke(), 2).unwrap();
        for _ in 0..3 {
            state.add_sample(0, Sample::new(vec![0.0]).unwrap()).unwrap();
        }
        state.add_sample(1, Sample::new(vec![0.0]).unwrap()).unwrap();
        let eps = state.confidence_vector_t(&rke_params()).unwrap();
        assert_eq!(argmin(&vanilla_scores(&state, &eps)), 1);
    }

    #[test]
    fn vanilla_exploits_the_lower_loss_at_equal_counts() {
        // MMD against a reference at the first arm's location: single-arm
        // losses are 1 − 2k(x_i, ref), lowest for the nearby arm.
        let reference = vec![Sample::new(vec![0.0]).unwrap()];
        let spec = mmd_spec(KernelSpec::gaussian(1.0).unwrap(), reference).unwrap();
        let mut state = EmpiricalState::new(spec, 2).unwrap();
        state.add_sample(0, Sample::new(vec![0.5]).unwrap()).unwrap();
        state.add_sample(1, Sample::new(vec![3.0]).unwrap()).unwrap();
        let scores = vanilla_scores(&state, &[0.0, 0.0]);
        assert_eq!(argmin(&scores), 0);
    }

    #[test]
    fn cab_mixture_is_uniform_on_a_symmetric_instance() {
        let mut state = EmpiricalState::new(rke(), 2).unwrap();
        state.add_sample(0, Sample::new(vec![0.0]).unwrap()).unwrap();
        state.add_sample(1, Sample::new(vec![100.0]).unwrap()).unwrap();
        let eps = state.confidence_vector_t(&rke_params()).unwrap();
        let (alpha, _) = cab_mixture(&state, &eps, &[0, 1], None).unwrap();
        assert_abs_diff_eq!(alpha[0], 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(alpha[1], 0.5, epsilon = 1e-6);
    }

    #[test]
    fn cab_mixture_lands_on_a_vertex_when_one_arm_dominates() {
        let khat = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let c = vec![0.0, 10.0];
        let (alpha, _) = solve_weighted(&khat, &c, &[0, 1], None).unwrap();
        assert_abs_diff_eq!(alpha[0], 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(alpha[1], 0.0, epsilon = 1e-6);
    }

    #[test]
    fn growing_confidence_never_shrinks_an_arms_weight() {
        let khat = vec![vec![1.0, 0.3], vec![0.3, 1.0]];
        let mut last = 0.0;
        for step in 0..6 {
            let eps2 = 0.2 * step as f64;
            let c = vec![0.0, -eps2];
            let (alpha, _) = solve_weighted(&khat, &c, &[0, 1], None).unwrap();
            assert!(
                alpha[1] >= last - 1e-8,
                "alpha_2 {} fell below {} at eps_2 {}",
                alpha[1],
                last,
                eps2
            );
            last = alpha[1];
        }
    }

    #[test]
    fn zero_kernel_ogd_matches_vanilla_exactly() {
        // With no quadratic part the gradient is f̂ − ε, the vanilla
        // score; both policies are deterministic, so the runs coincide.
        let reference = vec![Sample::new(vec![1.0]).unwrap()];
        let spec = LossSpec::new(
            KernelSpec::zero(),
            LinearTerm::MmdReference(MmdTerm {
                kernel: KernelSpec::gaussian(1.0).unwrap(),
                points: reference,
            }),
        )
        .unwrap();
        let sources = vec![
            SourceSpec::gaussian(vec![0.0], 0.5),
            SourceSpec::gaussian(vec![1.0], 0.5),
            SourceSpec::gaussian(vec![2.5], 0.5),
        ];
        let params = ConfidenceParams::from_spec(4.0, &spec).unwrap();
        let ogd = run(&PolicyConfig::ogd(), &sources, &spec, &params, 120, RngSeed(13)).unwrap();
        let vanilla =
            run(&PolicyConfig::vanilla(), &sources, &spec, &params, 120, RngSeed(13)).unwrap();
        assert_eq!(
            arm_sequence(&ogd.trajectory),
            arm_sequence(&vanilla.trajectory)
        );
    }

    #[test]
    fn sparse_with_zero_fee_matches_cab_exactly() {
        let sources = vec![
            SourceSpec::gaussian(vec![0.0], 0.5),
            SourceSpec::gaussian(vec![4.0], 0.5),
        ];
        let cab = run(
            &PolicyConfig::cab(),
            &sources,
            &rke(),
            &rke_params(),
            60,
            RngSeed(17),
        )
        .unwrap();
        let sparse = run(
            &PolicyConfig::sparse(0.0),
            &sources,
            &rke(),
            &rke_params(),
            60,
            RngSeed(17),
        )
        .unwrap();
        assert_eq!(
            arm_sequence(&cab.trajectory),
            arm_sequence(&sparse.trajectory)
        );
        for record in &sparse.trajectory.rounds {
            assert_eq!(record.subscribed.as_deref(), Some(&[1, 2][..]));
        }
    }

    #[test]
    fn full_sparsity_target_matches_cab_exactly() {
        let sources = vec![
            SourceSpec::gaussian(vec![0.0], 0.5),
            SourceSpec::gaussian(vec![4.0], 0.5),
        ];
        let cab = run(
            &PolicyConfig::cab(),
            &sources,
            &rke(),
            &rke_params(),
            60,
            RngSeed(19),
        )
        .unwrap();
        let fixed = run(
            &PolicyConfig::fixed_sparsity(2),
            &sources,
            &rke(),
            &rke_params(),
            60,
            RngSeed(19),
        )
        .unwrap();
        assert_eq!(
            arm_sequence(&cab.trajectory),
            arm_sequence(&fixed.trajectory)
        );
    }

    #[test]
    fn overwhelming_fee_collapses_to_a_single_arm() {
        let outcome = run(
            &PolicyConfig::sparse(10.0),
            &far_point_masses(3),
            &rke(),
            &rke_params(),
            30,
            RngSeed(23),
        )
        .unwrap();
        let post_init = &outcome.trajectory.rounds[3..];
        let survivor = post_init[0].arm;
        for record in post_init {
            let subscribed = record.subscribed.as_ref().unwrap();
            assert_eq!(subscribed.len(), 1);
            assert_eq!(record.arm, survivor);
        }
    }

    #[test]
    fn fixed_sparsity_reaches_its_target_and_freezes() {
        let outcome = run(
            &PolicyConfig::fixed_sparsity(2),
            &far_point_masses(3),
            &rke(),
            &rke_params(),
            200,
            RngSeed(29),
        )
        .unwrap();
        let sizes: Vec<usize> = outcome
            .trajectory
            .rounds
            .iter()
            .map(|r| r.subscribed.as_ref().unwrap().len())
            .collect();
        assert_eq!(*sizes.last().unwrap(), 2);
        let reached = sizes.iter().position(|&s| s == 2).unwrap();
        assert!(sizes[reached..].iter().all(|&s| s == 2));
        let frozen_set = outcome.trajectory.rounds[reached]
            .subscribed
            .clone()
            .unwrap();
        for record in &outcome.trajectory.rounds[reached..] {
            assert_eq!(record.subscribed.as_ref().unwrap(), &frozen_set);
        }
    }

    #[test]
    fn halving_splits_the_budget_then_backs_the_survivor() {
        // MMD with the reference on arm 2 makes the single-arm losses
        // deterministic; arm 2 must survive.
        let reference = vec![Sample::new(vec![100.0]).unwrap()];
        let spec = mmd_spec(KernelSpec::gaussian(1.0).unwrap(), reference).unwrap();
        let params = ConfidenceParams::from_spec(4.0, &spec).unwrap();
        let outcome = run(
            &PolicyConfig::successive_halving(),
            &far_point_masses(2),
            &spec,
            &params,
            20,
            RngSeed(31),
        )
        .unwrap();
        assert_eq!(outcome.trajectory.final_counts, vec![5, 15]);
    }

    #[test]
    fn halving_narrows_four_arms_over_two_phases() {
        let reference = vec![Sample::new(vec![0.0]).unwrap()];
        let spec = mmd_spec(KernelSpec::gaussian(50.0).unwrap(), reference).unwrap();
        let params = ConfidenceParams::from_spec(4.0, &spec).unwrap();
        let outcome = run(
            &PolicyConfig::successive_halving(),
            &far_point_masses(4),
            &spec,
            &params,
            120,
            RngSeed(37),
        )
        .unwrap();
        // Phases of 40 decisions: 10 per arm, then 20 for the best two,
        // then the rest on the winner (the arm sitting on the reference).
        assert_eq!(outcome.trajectory.final_counts, vec![70, 30, 10, 10]);
    }

    #[test]
    fn halving_rejects_budgets_below_one_pull_per_arm_per_phase() {
        let err = run(
            &PolicyConfig::successive_halving(),
            &far_point_masses(4),
            &rke(),
            &rke_params(),
            8,
            RngSeed(1),
        )
        .unwrap_err();
        assert!(matches!(
            err,
            Error::BudgetTooSmall {
                required: 12,
                actual: 8
            }
        ));
    }

    #[test]
    fn ucb_policies_need_one_round_per_arm() {
        let err = run(
            &PolicyConfig::cab(),
            &far_point_masses(2),
            &rke(),
            &rke_params(),
            1,
            RngSeed(1),
        )
        .unwrap_err();
        assert!(matches!(
            err,
            Error::BudgetTooSmall {
                required: 2,
                actual: 1
            }
        ));
    }

    #[test]
    fn single_arm_instances_degenerate_to_constant_pulls() {
        let sources = vec![SourceSpec::point_mass(vec![0.0])];
        for policy in [
            PolicyConfig::cab(),
            PolicyConfig::vanilla(),
            PolicyConfig::successive_halving(),
        ] {
            let outcome = run(&policy, &sources, &rke(), &rke_params(), 10, RngSeed(1)).unwrap();
            assert_eq!(outcome.trajectory.final_counts, vec![10]);
        }
    }

    #[test]
    fn runs_are_reproducible_and_seed_sensitive() {
        let sources = vec![
            SourceSpec::gaussian(vec![0.0], 0.5),
            SourceSpec::gaussian(vec![4.0], 0.5),
        ];
        let a = run(
            &PolicyConfig::cab(),
            &sources,
            &rke(),
            &rke_params(),
            50,
            RngSeed(41),
        )
        .unwrap();
        let b = run(
            &PolicyConfig::cab(),
            &sources,
            &rke(),
            &rke_params(),
            50,
            RngSeed(41),
        )
        .unwrap();
        assert_eq!(a.trajectory, b.trajectory);
        let c = run(
            &PolicyConfig::cab(),
            &sources,
            &rke(),
            &rke_params(),
            50,
            RngSeed(42),
        )
        .unwrap();
        assert_ne!(a.trajectory, c.trajectory);
    }

    #[test]
    fn invalid_policies_are_rejected_before_running() {
        let sources = far_point_masses(2);
        let cases: Vec<PolicyConfig<f64>> = vec![
            PolicyConfig::one_arm_oracle(0),
            PolicyConfig::one_arm_oracle(3),
            PolicyConfig::mixture_oracle(vec![0.5, 0.4]),
            PolicyConfig::mixture_oracle(vec![1.0]),
            PolicyConfig::sparse(-0.1),
            PolicyConfig::fixed_sparsity(0),
            PolicyConfig::fixed_sparsity(3),
            PolicyConfig::MixtureUcbCab {
                beta: Some(1.0),
                batch: 1,
                stride: 1,
                name: None,
            },
            PolicyConfig::MixtureUcbCab {
                beta: None,
                batch: 0,
                stride: 1,
                name: None,
            },
        ];
        for policy in cases {
            assert!(
                run(&policy, &sources, &rke(), &rke_params(), 20, RngSeed(1)).is_err(),
                "policy {:?} should be rejected",
                policy
            );
        }
    }

    #[test]
    fn policy_configs_round_trip_through_toml() {
        let policies = vec![
            PolicyConfig::cab(),
            PolicyConfig::ogd(),
            PolicyConfig::sparse(0.25),
            PolicyConfig::fixed_sparsity(2),
            PolicyConfig::vanilla(),
            PolicyConfig::successive_halving(),
            PolicyConfig::mixture_oracle(vec![0.3, 0.7]),
            PolicyConfig::one_arm_oracle(1),
        ];
        for policy in policies {
            let text = toml::to_string(&policy).unwrap();
            let back: PolicyConfig<f64> = toml::from_str(&text).unwrap();
            assert_eq!(policy, back, "round trip through:\n{text}");
        }
        let parsed: PolicyConfig<f64> = toml::from_str(
            "kind = \"sparse-mixture-ucb-cab\"\nlambda = 0.5\nbatch = 2\n",
        )
        .unwrap();
        assert_eq!(parsed.kind_slug(), "sparse-mixture-ucb-cab");
        assert_eq!(parsed.batch(), 2);
    }

    #[test]
    fn regret_envelope_matches_the_frozen_value() {
        let env = regret_envelope(2.0, 4.0, 2, 1000);
        assert_abs_diff_eq!(env, 1.88063, epsilon = 1e-4);
        assert!(regret_envelope(2.0, 4.0, 2, 4000) < env);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn sampled_arms_always_carry_weight(
            raw in proptest::collection::vec(0.0f64..1.0, 2..6),
            seed in 0u64..1000,
        ) {
            let total: f64 = raw.iter().sum();
            prop_assume!(total > 0.1);
            let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
            let alpha = MixtureWeights::new(weights).unwrap();
            let mut rng = RngSeed(seed).rng();
            for _ in 0..32 {
                let arm = sample_arm(&alpha, &mut rng);
                prop_assert!(alpha[arm] > 0.0);
            }
        }
    }
}
