//! Experiment orchestration.
//!
//! An [`ExperimentConfig`] describes a complete experiment in one TOML
//! file: the arms, the loss, the confidence parameters, the policies to
//! compare, and the run geometry (rounds, seeds, oracle budget). The
//! harness executes every (policy, seed) pair, computes the oracle
//! mixture, aggregates loss curves over a checkpoint grid, validates the
//! concentration bounds by Monte Carlo, and exports everything as CSV or
//! JSON plus a manifest that echoes the configuration.
//!
//! Outputs carry no timestamps and every random draw derives from the
//! configured base seed, so a re-run of the same config reproduces every
//! file byte for byte.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arms::{build_source, read_pool, RngSeed, Sample, SourceSpec};
use crate::bandit::{self, PolicyConfig, Trajectory};
use crate::error::{Error, Result};
use crate::estimator::{
    confidence_radius, worst_case_radius, ConfidenceParams, EmpiricalState,
};
use crate::kernel::KernelSpec;
use crate::mixture::MixtureWeights;
use crate::scalar::{real, real_of_usize, KahanSum, Scalar};
use crate::score::{
    mmd_constant, mmd_spec, population_loss, precision_term, density_term, rke_mode_count,
    rke_spec, LinearTerm, LossSpec, MetricKind, MmdTerm,
};
use crate::simplex::QuadraticProgram;

/// Seed stream for the oracle's sample draws.
const ORACLE_STREAM: u64 = 1 << 40;
/// Seed stream for population-loss truths in bound validation.
const TRUTH_STREAM: u64 = (1 << 40) + 1;
/// Base seed stream for concentration replications (one per replication).
const REPLICATION_STREAM: u64 = 1 << 41;

fn default_num_seeds() -> usize {
    1
}

fn default_oracle_samples() -> usize {
    2000
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_replications() -> usize {
    2000
}

fn default_deltas<S: Scalar>() -> Vec<S> {
    vec![real::<S>(0.05)]
}

/// Output file format for trajectory and aggregate exports.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExportFormat {
    #[default]
    Csv,
    Json,
}

/// The `[run]` section: geometry shared by every policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// Samples gathered per run (T).
    pub rounds: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Seeds are `base_seed, base_seed + 1, ..` shared across policies so
    /// comparisons see the same sample noise.
    #[serde(default = "default_num_seeds")]
    pub num_seeds: usize,
    /// Oracle draws per arm; the kernel matrix build costs O(m²·n²).
    #[serde(default = "default_oracle_samples")]
    pub oracle_samples: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub format: ExportFormat,
}

/// The `[loss]` section: which loss to optimize.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound = "S: Scalar")]
pub struct LossSection<S> {
    pub metric: MetricKind,
    pub kernel: KernelSpec<S>,
    /// Reference pool path; required by every metric except `rke`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<PathBuf>,
    /// Quality-penalty weight for the precision/density metrics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<S>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_nn: Option<usize>,
}

/// The `[confidence]` section: overrides for the UCB radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound = "S: Scalar")]
pub struct ConfidenceSection<S> {
    /// Exploration multiplier; defaults to 4 (the regret theorem's value).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<S>,
    /// Overrides the loss-derived sensitivity Δ_L.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_l: Option<S>,
    /// Overrides the loss-derived kernel width Δκ.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_kappa: Option<S>,
}

impl<S> Default for ConfidenceSection<S> {
    fn default() -> Self {
        ConfidenceSection {
            beta: None,
            delta_l: None,
            delta_kappa: None,
        }
    }
}

/// The `[validation]` section: scenario for the concentration checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound = "S: Scalar")]
pub struct ValidationSection<S> {
    /// Fixed mixture the deviation is measured at.
    pub alpha: Vec<S>,
    /// Per-arm sample counts of the estimated state.
    pub counts: Vec<usize>,
    #[serde(default = "default_deltas")]
    pub deltas: Vec<S>,
    #[serde(default = "default_replications")]
    pub replications: usize,
}

/// One experiment: arms, loss, confidence, policies, run geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound = "S: Scalar")]
pub struct ExperimentConfig<S> {
    pub run: RunSection,
    pub arms: Vec<SourceSpec<S>>,
    pub loss: LossSection<S>,
    #[serde(default)]
    pub confidence: ConfidenceSection<S>,
    pub policies: Vec<PolicyConfig<S>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationSection<S>>,
}

impl<S: Scalar> ExperimentConfig<S> {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::ConfigParse(e.to_string()))
    }

    /// Structural validation; does not touch the filesystem.
    pub fn validate(&self) -> Result<()> {
        let m = self.arms.len();
        if m == 0 {
            return Err(Error::InvalidConfig("at least one arm is required".into()));
        }
        for arm in &self.arms {
            arm.validate()?;
        }
        if self.policies.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one policy is required".into(),
            ));
        }
        for policy in &self.policies {
            policy.validate(m)?;
            let name = policy.name();
            if name.is_empty() || name.contains([',', '"', '\n', '\r']) {
                return Err(Error::InvalidConfig(format!(
                    "policy name {name:?} must be nonempty and free of commas, quotes, and line breaks"
                )));
            }
        }
        if self.run.num_seeds == 0 {
            return Err(Error::InvalidConfig("num_seeds must be at least 1".into()));
        }
        if self.run.rounds < m {
            return Err(Error::InvalidConfig(format!(
                "rounds = {} is smaller than the number of arms {m}",
                self.run.rounds
            )));
        }
        self.loss.validate_shape()?;
        if let Some(beta) = self.confidence.beta {
            if !beta.is_finite() || beta <= S::one() {
                return Err(Error::InvalidConfig(format!(
                    "confidence beta must be finite and greater than 1, got {}",
                    beta
                )));
            }
        }
        for (label, value) in [
            ("delta_l", self.confidence.delta_l),
            ("delta_kappa", self.confidence.delta_kappa),
        ] {
            if let Some(v) = value {
                if !v.is_finite() || v < S::zero() {
                    return Err(Error::InvalidConfig(format!(
                        "confidence {label} must be finite and nonnegative, got {}",
                        v
                    )));
                }
            }
        }
        if let Some(validation) = &self.validation {
            if validation.alpha.len() != m {
                return Err(Error::InvalidConfig(format!(
                    "validation alpha has {} entries for {m} arms",
                    validation.alpha.len()
                )));
            }
            MixtureWeights::new(validation.alpha.clone())?;
            if validation.counts.len() != m {
                return Err(Error::InvalidConfig(format!(
                    "validation counts has {} entries for {m} arms",
                    validation.counts.len()
                )));
            }
            if validation.counts.iter().any(|&n| n == 0) {
                return Err(Error::InvalidConfig(
                    "validation counts must all be at least 1".into(),
                ));
            }
            if validation.deltas.is_empty() {
                return Err(Error::InvalidConfig(
                    "validation deltas must be nonempty".into(),
                ));
            }
            for &delta in &validation.deltas {
                if !delta.is_finite() || delta <= S::zero() || delta >= S::one() {
                    return Err(Error::InvalidConfig(format!(
                        "validation delta must lie strictly between 0 and 1, got {}",
                        delta
                    )));
                }
            }
        }
        Ok(())
    }

    /// Validated copy with unique policy names: duplicates get `-2`, `-3`,
    /// .. suffixes so aggregation and exports can key on the name.
    pub fn normalized(&self) -> Result<Self> {
        self.validate()?;
        let mut config = self.clone();
        let mut used = BTreeSet::new();
        for policy in &mut config.policies {
            let base = policy.name();
            let mut candidate = base.clone();
            let mut k = 2;
            while !used.insert(candidate.clone()) {
                candidate = format!("{base}-{k}");
                k += 1;
            }
            if candidate != base {
                policy.set_name(candidate);
            }
        }
        Ok(config)
    }

    /// The seed of every run, in order; shared across policies.
    pub fn seeds(&self) -> Vec<RngSeed> {
        (0..self.run.num_seeds)
            .map(|k| RngSeed(self.run.base_seed.wrapping_add(k as u64)))
            .collect()
    }

    /// Confidence parameters: loss-derived sensitivities unless the
    /// `[confidence]` section overrides them.
    pub fn confidence_params(&self, spec: &LossSpec<S>) -> Result<ConfidenceParams<S>> {
        let beta = self.confidence.beta.unwrap_or_else(|| real::<S>(4.0));
        let base = ConfidenceParams::from_spec(beta, spec)?;
        ConfidenceParams::new(
            beta,
            self.confidence.delta_l.unwrap_or(base.delta_l),
            self.confidence.delta_kappa.unwrap_or(base.delta_kappa),
        )
    }

    fn radius_widths(&self, spec: &LossSpec<S>) -> (S, S) {
        (
            self.confidence.delta_l.unwrap_or_else(|| spec.delta_l()),
            self.confidence
                .delta_kappa
                .unwrap_or_else(|| spec.delta_kappa()),
        )
    }
}

impl<S: Scalar> LossSection<S> {
    fn validate_shape(&self) -> Result<()> {
        self.kernel.validate()?;
        let needs_reference = !matches!(self.metric, MetricKind::Rke);
        if needs_reference && self.reference.is_none() {
            return Err(Error::InvalidConfig(format!(
                "metric {:?} requires a reference pool path",
                self.metric
            )));
        }
        if !needs_reference && self.reference.is_some() {
            return Err(Error::InvalidConfig(
                "the rke metric takes no reference pool".into(),
            ));
        }
        let needs_knn = matches!(self.metric, MetricKind::RkePrecision | MetricKind::RkeDensity);
        if needs_knn {
            match self.lambda {
                Some(l) if l.is_finite() && l >= S::zero() => {}
                Some(l) => {
                    return Err(Error::InvalidConfig(format!(
                        "loss lambda must be finite and nonnegative, got {}",
                        l
                    )))
                }
                None => {
                    return Err(Error::InvalidConfig(format!(
                        "metric {:?} requires lambda",
                        self.metric
                    )))
                }
            }
            match self.k_nn {
                Some(k) if k >= 1 => {}
                _ => {
                    return Err(Error::InvalidConfig(format!(
                        "metric {:?} requires k_nn >= 1",
                        self.metric
                    )))
                }
            }
        } else if self.lambda.is_some() || self.k_nn.is_some() {
            return Err(Error::InvalidConfig(format!(
                "metric {:?} takes neither lambda nor k_nn",
                self.metric
            )));
        }
        Ok(())
    }
}

/// Builds the loss the section describes, reading the reference pool when
/// one is named. Paths resolve relative to the working directory.
pub fn build_loss_spec<S: Scalar>(section: &LossSection<S>) -> Result<LossSpec<S>> {
    section.validate_shape()?;
    let reference = || -> Result<Vec<Sample<S>>> {
        read_pool(section.reference.as_deref().expect("checked by shape"))
    };
    match section.metric {
        MetricKind::Rke => rke_spec(section.kernel),
        MetricKind::Mmd => mmd_spec(section.kernel, reference()?),
        MetricKind::RkePrecision => {
            let term = precision_term(
                reference()?,
                section.k_nn.expect("checked by shape"),
                section.lambda.expect("checked by shape"),
            )?;
            Ok(crate::score::combine(rke_spec(section.kernel)?, term))
        }
        MetricKind::RkeDensity => {
            let term = density_term(
                reference()?,
                section.k_nn.expect("checked by shape"),
                section.lambda.expect("checked by shape"),
            )?;
            Ok(crate::score::combine(rke_spec(section.kernel)?, term))
        }
        MetricKind::Linear => LossSpec::new(
            KernelSpec::zero(),
            LinearTerm::MmdReference(MmdTerm {
                kernel: section.kernel,
                points: reference()?,
            }),
        ),
    }
}

/// How a loss value maps to the reported score column.
enum ScoreMap<S> {
    /// RKE mode count `1 / L`.
    ModeCount,
    /// Squared MMD: loss plus the dropped reference self-similarity.
    Shift(S),
    NoScore,
}

impl<S: Scalar> ScoreMap<S> {
    fn apply(&self, loss: S) -> Option<S> {
        match self {
            ScoreMap::ModeCount => rke_mode_count(loss).ok(),
            ScoreMap::Shift(c) => Some(loss + *c),
            ScoreMap::NoScore => None,
        }
    }
}

fn score_map<S: Scalar>(section: &LossSection<S>) -> Result<ScoreMap<S>> {
    match section.metric {
        MetricKind::Rke => Ok(ScoreMap::ModeCount),
        MetricKind::Mmd => {
            let points = read_pool::<S>(section.reference.as_deref().expect("mmd has a pool"))?;
            Ok(ScoreMap::Shift(mmd_constant(&section.kernel, &points)?))
        }
        _ => Ok(ScoreMap::NoScore),
    }
}

/// The optimal mixture and its loss on the oracle sample budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct OracleSolution<S> {
    pub weights: Vec<S>,
    pub loss: S,
    /// Score at the optimum (mode count for RKE, squared MMD for MMD).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub score: Option<S>,
}

/// Draws `oracle_samples` per arm, builds the empirical kernel matrices,
/// and solves the mixture program with no exploration bonus.
///
/// For `m <= 3` the solver objective is cross-checked against a
/// resolution-1000 grid search; a discrepancy beyond 1e-3 fails loudly,
/// and the reported loss is the larger (more conservative) of the two.
pub fn compute_oracle<S: Scalar>(config: &ExperimentConfig<S>) -> Result<OracleSolution<S>> {
    let config = config.normalized()?;
    let spec = build_loss_spec(&config.loss)?;
    oracle_for(&config, &spec)
}

fn oracle_for<S: Scalar>(
    config: &ExperimentConfig<S>,
    spec: &LossSpec<S>,
) -> Result<OracleSolution<S>> {
    let n = config.run.oracle_samples;
    if n < 100 {
        return Err(Error::BudgetTooSmall {
            required: 100,
            actual: n,
        });
    }
    let m = config.arms.len();
    let oracle_seed = RngSeed(config.run.base_seed).stream(ORACLE_STREAM);
    let mut draws: Vec<Vec<Sample<S>>> = Vec::with_capacity(m);
    for (i, arm) in config.arms.iter().enumerate() {
        let mut source = build_source(arm, oracle_seed.stream(i as u64))?;
        draws.push(source.draw_batch(n)?);
    }

    let scale = real_of_usize::<S>(n) * real_of_usize::<S>(n);
    let mut khat = vec![vec![S::zero(); m]; m];
    for i in 0..m {
        for j in i..m {
            let mut acc = KahanSum::<S>::new();
            for x in &draws[i] {
                for y in &draws[j] {
                    acc.add(spec.eval_quad(x, y)?);
                }
            }
            let value = acc.value() / scale;
            khat[i][j] = value;
            khat[j][i] = value;
        }
    }
    let mut fhat = vec![S::zero(); m];
    for i in 0..m {
        let mut acc = KahanSum::<S>::new();
        for x in &draws[i] {
            acc.add(spec.eval_linear(x)?);
        }
        fhat[i] = acc.value() / real_of_usize::<S>(n);
    }

    let qp = QuadraticProgram::new(khat, fhat)?;
    let alpha = qp.minimize(None, real::<S>(1e-8))?;
    let mut loss = qp.objective(alpha.as_slice())?;
    if m <= 3 {
        let (_, grid) = qp.grid_oracle(1000)?;
        if (loss - grid).abs() > real::<S>(1e-3) {
            return Err(Error::OracleMismatch {
                solver: loss.to_f64().unwrap_or(f64::NAN),
                grid: grid.to_f64().unwrap_or(f64::NAN),
            });
        }
        loss = loss.max(grid);
    }
    let score = score_map(&config.loss)?.apply(loss);
    Ok(OracleSolution {
        weights: alpha.into_vec(),
        loss,
        score,
    })
}

/// One finished run with its headline numbers.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "S: Scalar")]
pub struct RunSummary<S> {
    pub policy: String,
    pub seed: u64,
    pub final_loss: S,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_score: Option<S>,
    /// Final loss minus the oracle loss.
    pub regret: S,
    pub trajectory: Trajectory<S>,
}

/// Mean and across-seed standard deviation of the loss per checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateCurve<S> {
    pub policy: String,
    pub rounds: Vec<usize>,
    pub mean_loss: Vec<S>,
    pub sd_loss: Vec<S>,
}

/// Everything `run_experiment` produces.
#[derive(Debug, Clone)]
pub struct ExperimentResult<S> {
    /// The normalized config the runs actually used.
    pub config: ExperimentConfig<S>,
    pub oracle: OracleSolution<S>,
    /// Policy-major, seed-minor; length |policies| × |seeds|.
    pub runs: Vec<RunSummary<S>>,
    pub checkpoints: Vec<usize>,
    pub aggregates: Vec<AggregateCurve<S>>,
}

/// Checkpoint rounds: `m`, `2m`, then geometric ×1.5 growth, closed by
/// the final round. Dense early points capture the exploration phase.
pub fn checkpoint_grid(arms: usize, rounds: usize) -> Vec<usize> {
    let mut grid = vec![arms.min(rounds)];
    let mut next = arms * 2;
    while next < rounds {
        grid.push(next);
        next = (next as f64 * 1.5).floor() as usize;
    }
    if rounds > *grid.last().expect("grid starts nonempty") {
        grid.push(rounds);
    }
    grid
}

/// Loss at the first record that reaches `round` (the last record for a
/// round past the end).
fn loss_at_checkpoint<S: Scalar>(trajectory: &Trajectory<S>, round: usize) -> S {
    let records = &trajectory.rounds;
    let idx = records.partition_point(|r| r.t < round);
    if idx < records.len() {
        records[idx].loss
    } else {
        records.last().expect("runs have at least one record").loss
    }
}

fn mean_sd<S: Scalar>(values: &[S]) -> (S, S) {
    let n = real_of_usize::<S>(values.len());
    let mean = values.iter().copied().sum::<S>() / n;
    if values.len() < 2 {
        return (mean, S::zero());
    }
    let var = values
        .iter()
        .map(|&v| (v - mean) * (v - mean))
        .sum::<S>()
        / (n - S::one());
    (mean, var.sqrt())
}

/// Executes every (policy, seed) run, in parallel, and aggregates.
pub fn run_experiment<S: Scalar>(config: &ExperimentConfig<S>) -> Result<ExperimentResult<S>> {
    let config = config.normalized()?;
    let spec = build_loss_spec(&config.loss)?;
    let params = config.confidence_params(&spec)?;
    let oracle = oracle_for(&config, &spec)?;
    let score = score_map(&config.loss)?;
    let seeds = config.seeds();

    let jobs: Vec<(usize, RngSeed)> = (0..config.policies.len())
        .flat_map(|p| seeds.iter().map(move |&s| (p, s)))
        .collect();
    let runs: Vec<RunSummary<S>> = jobs
        .par_iter()
        .map(|&(p, seed)| {
            let outcome = bandit::run(
                &config.policies[p],
                &config.arms,
                &spec,
                &params,
                config.run.rounds,
                seed,
            )?;
            let final_loss = outcome.trajectory.final_loss;
            Ok(RunSummary {
                policy: config.policies[p].name(),
                seed: seed.0,
                final_loss,
                final_score: score.apply(final_loss),
                regret: final_loss - oracle.loss,
                trajectory: outcome.trajectory,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let checkpoints = checkpoint_grid(config.arms.len(), config.run.rounds);
    let num_seeds = seeds.len();
    let aggregates = config
        .policies
        .iter()
        .enumerate()
        .map(|(p, policy)| {
            let slice = &runs[p * num_seeds..(p + 1) * num_seeds];
            let mut mean_loss = Vec::with_capacity(checkpoints.len());
            let mut sd_loss = Vec::with_capacity(checkpoints.len());
            for &cp in &checkpoints {
                let losses: Vec<S> = slice
                    .iter()
                    .map(|r| loss_at_checkpoint(&r.trajectory, cp))
                    .collect();
                let (mean, sd) = mean_sd(&losses);
                mean_loss.push(mean);
                sd_loss.push(sd);
            }
            AggregateCurve {
                policy: policy.name(),
                rounds: checkpoints.clone(),
                mean_loss,
                sd_loss,
            }
        })
        .collect();

    Ok(ExperimentResult {
        config,
        oracle,
        runs,
        checkpoints,
        aggregates,
    })
}

/// One-sided violation rates of the fixed-confidence bound at the
/// configured scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationRow<S> {
    pub delta: S,
    /// The deterministic radius `ε(δ)ᵀα` at the configured counts.
    pub radius: S,
    pub upper_rate: f64,
    pub lower_rate: f64,
}

/// Any-violation rate of the worst-case (horizon-uniform) bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow<S> {
    pub delta: S,
    pub rate: f64,
    /// (prefix, mixture) pairs checked per replication.
    pub grid_points: usize,
}

/// Report of `validate_concentration`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationReport<S> {
    pub replications: usize,
    pub alpha: Vec<S>,
    pub counts: Vec<usize>,
    pub truth: S,
    pub rows: Vec<ConcentrationRow<S>>,
    pub sweep: Vec<SweepRow<S>>,
}

struct RepOutcome {
    upper: Vec<bool>,
    lower: Vec<bool>,
    sweep: Vec<bool>,
}

/// Monte Carlo check of the concentration bounds.
///
/// For each configured δ: the rate at which the sample loss at the fixed
/// mixture deviates from its population value by more than `ε(δ)ᵀα`, per
/// side. Additionally a worst-case sweep: prefixes of a growing state are
/// checked at several mixtures against the horizon-uniform radius with
/// its `ln(m²T²/(2δ))` factor; a replication counts as violating when any
/// grid point does.
pub fn validate_concentration<S: Scalar>(
    config: &ExperimentConfig<S>,
) -> Result<ConcentrationReport<S>> {
    let config = config.normalized()?;
    let section = config.validation.clone().ok_or_else(|| {
        Error::InvalidConfig("a [validation] section is required for bound checks".into())
    })?;
    if section.replications < 1000 {
        return Err(Error::BudgetTooSmall {
            required: 1000,
            actual: section.replications,
        });
    }
    let spec = build_loss_spec(&config.loss)?;
    let m = config.arms.len();
    let alpha = MixtureWeights::new(section.alpha.clone())?;
    let (delta_l, delta_kappa) = config.radius_widths(&spec);
    let truth_budget = config.run.oracle_samples.max(1000);
    let base = RngSeed(config.run.base_seed);

    let truth = population_loss(
        &spec,
        &config.arms,
        &alpha,
        truth_budget,
        base.stream(TRUTH_STREAM),
    )?;

    // Mixture grid for the worst-case sweep: uniform, the vertices, and
    // the configured mixture.
    let mut sweep_alphas = vec![MixtureWeights::uniform(m)?];
    for i in 0..m {
        sweep_alphas.push(MixtureWeights::basis(m, i)?);
    }
    sweep_alphas.push(alpha.clone());
    let sweep_truths: Vec<S> = sweep_alphas
        .iter()
        .enumerate()
        .map(|(g, a)| {
            population_loss(
                &spec,
                &config.arms,
                a,
                truth_budget,
                base.stream(TRUTH_STREAM + 1 + g as u64),
            )
        })
        .collect::<Result<Vec<_>>>()?;

    // Deterministic fill order for the sweep prefixes: arms cycle until
    // each hits its quota.
    let horizon: usize = section.counts.iter().sum();
    let mut fill_order = Vec::with_capacity(horizon);
    let max_count = *section.counts.iter().max().expect("counts nonempty");
    for k in 0..max_count {
        for (i, &quota) in section.counts.iter().enumerate() {
            if k < quota {
                fill_order.push(i);
            }
        }
    }
    let mut prefix_marks = Vec::new();
    let mut mark = m;
    while mark < horizon {
        prefix_marks.push(mark);
        mark *= 2;
    }
    prefix_marks.push(horizon);
    let grid_points = prefix_marks.len() * sweep_alphas.len();

    let radii: Vec<S> = section
        .deltas
        .iter()
        .map(|&delta| {
            let eps = confidence_radius(&section.counts, delta, delta_l, delta_kappa)?;
            Ok(eps
                .iter()
                .zip(alpha.iter())
                .map(|(&e, &a)| e * a)
                .sum::<S>())
        })
        .collect::<Result<Vec<_>>>()?;

    let outcomes: Vec<RepOutcome> = (0..section.replications)
        .into_par_iter()
        .map(|r| {
            let rep_seed = base.stream(REPLICATION_STREAM + r as u64);

            // Fixed-mixture state at exactly the configured counts.
            let mut state = EmpiricalState::new(spec.clone(), m)?;
            for (i, arm) in config.arms.iter().enumerate() {
                let mut source = build_source(arm, rep_seed.stream(i as u64))?;
                state.add_batch(i, source.draw_batch(section.counts[i])?)?;
            }
            let lhat = state.sample_loss(&alpha)?;
            let upper: Vec<bool> = radii.iter().map(|&rad| lhat - truth > rad).collect();
            let lower: Vec<bool> = radii.iter().map(|&rad| truth - lhat > rad).collect();

            // Worst-case sweep over prefixes of an independently grown
            // state.
            let mut sweep = vec![false; section.deltas.len()];
            let mut grow = EmpiricalState::new(spec.clone(), m)?;
            let mut sources = config
                .arms
                .iter()
                .enumerate()
                .map(|(i, arm)| build_source(arm, rep_seed.stream((m + i) as u64)))
                .collect::<Result<Vec<_>>>()?;
            let mut filled = 0;
            for &target in &prefix_marks {
                while filled < target {
                    let arm = fill_order[filled];
                    grow.add_sample(arm, sources[arm].draw()?)?;
                    filled += 1;
                }
                let counts = grow.counts();
                for (d, &delta) in section.deltas.iter().enumerate() {
                    if sweep[d] {
                        continue;
                    }
                    let wc = worst_case_radius(&counts, delta, horizon, delta_l, delta_kappa)?;
                    for (g, a) in sweep_alphas.iter().enumerate() {
                        if a.support().iter().any(|&i| counts[i] == 0) {
                            continue;
                        }
                        let dev = (grow.sample_loss(a)? - sweep_truths[g]).abs();
                        let rad = wc
                            .iter()
                            .zip(a.iter())
                            .map(|(&e, &w)| e * w)
                            .sum::<S>();
                        if dev > rad {
                            sweep[d] = true;
                            break;
                        }
                    }
                }
            }
            Ok(RepOutcome { upper, lower, sweep })
        })
        .collect::<Result<Vec<_>>>()?;

    let reps = section.replications as f64;
    let rate = |pick: &dyn Fn(&RepOutcome) -> &Vec<bool>, d: usize| {
        outcomes.iter().filter(|o| pick(o)[d]).count() as f64 / reps
    };
    let rows = section
        .deltas
        .iter()
        .enumerate()
        .map(|(d, &delta)| ConcentrationRow {
            delta,
            radius: radii[d],
            upper_rate: rate(&|o: &RepOutcome| &o.upper, d),
            lower_rate: rate(&|o: &RepOutcome| &o.lower, d),
        })
        .collect();
    let sweep = section
        .deltas
        .iter()
        .enumerate()
        .map(|(d, &delta)| SweepRow {
            delta,
            rate: rate(&|o: &RepOutcome| &o.sweep, d),
            grid_points,
        })
        .collect();

    Ok(ConcentrationReport {
        replications: section.replications,
        alpha: section.alpha.clone(),
        counts: section.counts.clone(),
        truth,
        rows,
        sweep,
    })
}

/// The manifest written beside every export: config echo, seeds, oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Manifest<S> {
    pub config: ExperimentConfig<S>,
    pub seeds: Vec<u64>,
    pub checkpoints: Vec<usize>,
    pub oracle: OracleSolution<S>,
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).map_err(|source| Error::ExportIo {
        path: path.to_path_buf(),
        source,
    })
}

fn fmt_opt<S: Scalar>(value: Option<S>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes trajectories, aggregate curves, and the manifest into `dir`.
///
/// Returns the created paths. Re-exporting the same result overwrites the
/// same files with byte-identical content.
pub fn export<S: Scalar>(result: &ExperimentResult<S>, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|source| Error::ExportIo {
        path: dir.to_path_buf(),
        source,
    })?;
    let score = score_map(&result.config.loss)?;
    let m = result.config.arms.len();
    let mut written = Vec::new();

    match result.config.run.format {
        ExportFormat::Csv => {
            let mut csv = String::from("t,policy,seed,arm,loss,score");
            for i in 1..=m {
                let _ = write!(csv, ",n_{i}");
            }
            for i in 1..=m {
                let _ = write!(csv, ",alpha_{i}");
            }
            csv.push('\n');
            for run in &result.runs {
                for record in &run.trajectory.rounds {
                    let _ = write!(
                        csv,
                        "{},{},{},{},{},{}",
                        record.t,
                        run.policy,
                        run.seed,
                        record.arm,
                        record.loss,
                        fmt_opt(score.apply(record.loss))
                    );
                    for &n in &record.counts {
                        let _ = write!(csv, ",{n}");
                    }
                    match &record.alpha {
                        Some(alpha) => {
                            for &a in alpha {
                                let _ = write!(csv, ",{a}");
                            }
                        }
                        None => {
                            for _ in 0..m {
                                csv.push(',');
                            }
                        }
                    }
                    csv.push('\n');
                }
            }
            let path = dir.join("trajectories.csv");
            write_file(&path, &csv)?;
            written.push(path);

            let mut agg = String::from("policy,t,mean_loss,sd_loss\n");
            for curve in &result.aggregates {
                for (k, &round) in curve.rounds.iter().enumerate() {
                    let _ = writeln!(
                        agg,
                        "{},{},{},{}",
                        curve.policy, round, curve.mean_loss[k], curve.sd_loss[k]
                    );
                }
            }
            let path = dir.join("aggregates.csv");
            write_file(&path, &agg)?;
            written.push(path);
        }
        ExportFormat::Json => {
            let trajectories: Vec<&Trajectory<S>> =
                result.runs.iter().map(|r| &r.trajectory).collect();
            let path = dir.join("trajectories.json");
            write_file(&path, &to_json(&trajectories)?)?;
            written.push(path);

            let path = dir.join("aggregates.json");
            write_file(&path, &to_json(&result.aggregates)?)?;
            written.push(path);
        }
    }

    let manifest = Manifest {
        config: result.config.clone(),
        seeds: result.config.seeds().iter().map(|s| s.0).collect(),
        checkpoints: result.checkpoints.clone(),
        oracle: result.oracle.clone(),
    };
    let path = dir.join("manifest.json");
    write_file(&path, &to_json(&manifest)?)?;
    written.push(path);

    Ok(written)
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::ConfigParse(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_point_mass_config() -> ExperimentConfig<f64> {
        ExperimentConfig {
            run: RunSection {
                rounds: 20,
                base_seed: 1,
                num_seeds: 1,
                oracle_samples: 200,
                output_dir: PathBuf::from("out"),
                format: ExportFormat::Csv,
            },
            arms: vec![
                SourceSpec::point_mass(vec![0.0]),
                SourceSpec::point_mass(vec![100.0]),
            ],
            loss: LossSection {
                metric: MetricKind::Rke,
                kernel: KernelSpec::gaussian(1.0).unwrap(),
                reference: None,
                lambda: None,
                k_nn: None,
            },
            confidence: ConfidenceSection::default(),
            policies: vec![PolicyConfig::cab()],
            validation: None,
        }
    }

    #[test]
    fn configs_round_trip_through_toml() {
        let text = r#"
[run]
rounds = 100
base_seed = 7
num_seeds = 3
oracle_samples = 500

[[arms]]
kind = "gaussian-mixture"
means = [[0.0], [4.0]]
std_devs = [0.5, 0.5]
weights = [0.5, 0.5]

[[arms]]
kind = "point-wait"
"#;
        // A bad arm kind is a parse error, not a panic.
        assert!(ExperimentConfig::<f64>::from_toml_str(text).is_err());

        let config = two_point_mass_config();
        let serialized = config.to_toml_string().unwrap();
        let back = ExperimentConfig::<f64>::from_toml_str(&serialized).unwrap();
        assert_eq!(config, back, "round trip through:\n{serialized}");
    }

    #[test]
    fn parses_a_full_featured_config() {
        let text = r#"
[run]
rounds = 200
base_seed = 3
num_seeds = 2
oracle_samples = 400
output_dir = "results"
format = "json"

[[arms]]
kind = "gaussian-mixture"
means = [[0.0, 0.0]]
std_devs = [0.25]
weights = [1.0]

[[arms]]
kind = "file-pool"
path = "pool.csv"
mode = "with-replacement"

[loss]
metric = "rke"

[loss.kernel]
kind = "gaussian"
bandwidth = 0.75

[confidence]
beta = 4.0
delta_l = 0.5

[[policies]]
kind = "mixture-ucb-cab"

[[policies]]
kind = "sparse-mixture-ucb-cab"
lambda = 0.25
name = "sparse"

[validation]
alpha = [0.5, 0.5]
counts = [40, 40]
deltas = [0.05, 0.5]
replications = 1500
"#;
        let config = ExperimentConfig::<f64>::from_toml_str(text).unwrap();
        assert_eq!(config.arms.len(), 2);
        assert_eq!(config.policies[1].name(), "sparse");
        assert_eq!(config.run.format, ExportFormat::Json);
        assert_eq!(config.validation.as_ref().unwrap().replications, 1500);
        config.validate().unwrap();
    }

    #[test]
    fn validation_catches_structural_mistakes() {
        let base = two_point_mass_config();

        let mut no_policies = base.clone();
        no_policies.policies.clear();
        assert!(no_policies.validate().is_err());

        let mut no_arms = base.clone();
        no_arms.arms.clear();
        assert!(no_arms.validate().is_err());

        let mut short_run = base.clone();
        short_run.run.rounds = 1;
        assert!(short_run.validate().is_err());

        let mut no_seeds = base.clone();
        no_seeds.run.num_seeds = 0;
        assert!(no_seeds.validate().is_err());

        let mut bad_name = base.clone();
        bad_name.policies[0].set_name("a,b".into());
        assert!(bad_name.validate().is_err());

        let mut stray_reference = base.clone();
        stray_reference.loss.reference = Some(PathBuf::from("ref.csv"));
        assert!(stray_reference.validate().is_err());

        let mut missing_reference = base.clone();
        missing_reference.loss.metric = MetricKind::Mmd;
        assert!(missing_reference.validate().is_err());

        let mut bad_alpha = base.clone();
        bad_alpha.validation = Some(ValidationSection {
            alpha: vec![1.0],
            counts: vec![10, 10],
            deltas: vec![0.05],
            replications: 2000,
        });
        assert!(bad_alpha.validate().is_err());

        let mut bad_beta = base;
        bad_beta.confidence.beta = Some(1.0);
        assert!(bad_beta.validate().is_err());
    }

    #[test]
    fn normalization_makes_duplicate_policy_names_unique() {
        let mut config = two_point_mass_config();
        config.policies = vec![
            PolicyConfig::cab(),
            PolicyConfig::cab(),
            PolicyConfig::cab(),
            PolicyConfig::vanilla(),
        ];
        let normalized = config.normalized().unwrap();
        let names: Vec<String> = normalized.policies.iter().map(|p| p.name()).collect();
        assert_eq!(
            names,
            vec![
                "mixture-ucb-cab",
                "mixture-ucb-cab-2",
                "mixture-ucb-cab-3",
                "vanilla-ucb"
            ]
        );
    }

    #[test]
    fn checkpoint_grid_is_dense_early_then_geometric() {
        assert_eq!(checkpoint_grid(2, 2), vec![2]);
        assert_eq!(checkpoint_grid(2, 4), vec![2, 4]);
        assert_eq!(checkpoint_grid(3, 5), vec![3, 5]);
        let grid = checkpoint_grid(2, 100);
        assert_eq!(grid.first(), Some(&2));
        assert_eq!(grid.last(), Some(&100));
        assert!(grid.contains(&4));
        assert!(grid.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn oracle_recovers_the_even_split_on_far_point_masses() {
        let oracle = compute_oracle(&two_point_mass_config()).unwrap();
        assert_abs_diff_eq!(oracle.weights[0], 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(oracle.weights[1], 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(oracle.loss, 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(oracle.score.unwrap(), 2.0, epsilon = 1e-8);
    }

    #[test]
    fn oracle_enforces_its_minimum_budget() {
        let mut config = two_point_mass_config();
        config.run.oracle_samples = 50;
        assert!(matches!(
            compute_oracle(&config),
            Err(Error::BudgetTooSmall {
                required: 100,
                ..
            })
        ));
    }

    #[test]
    fn trivial_experiment_runs_one_round_per_arm() {
        let mut config = two_point_mass_config();
        config.run.rounds = 2;
        let result = run_experiment(&config).unwrap();
        assert_eq!(result.runs.len(), 1);
        let run = &result.runs[0];
        assert_eq!(run.trajectory.rounds.len(), 2);
        assert_eq!(run.trajectory.final_proportions, vec![0.5, 0.5]);
        assert_eq!(result.checkpoints, vec![2]);
        assert_eq!(result.aggregates.len(), 1);
    }

    #[test]
    fn identical_policies_produce_identical_runs() {
        let mut config = two_point_mass_config();
        config.policies = vec![PolicyConfig::cab(), PolicyConfig::cab()];
        config.run.num_seeds = 2;
        let result = run_experiment(&config).unwrap();
        assert_eq!(result.runs.len(), 4);
        for k in 0..2 {
            let (a, b) = (&result.runs[k], &result.runs[2 + k]);
            // Identical up to the deduplicated policy name.
            assert_eq!(a.trajectory.rounds, b.trajectory.rounds);
            assert_eq!(a.trajectory.final_counts, b.trajectory.final_counts);
            assert_eq!(a.trajectory.final_loss, b.trajectory.final_loss);
            assert_eq!(a.regret, b.regret);
        }
        assert_ne!(result.runs[0].policy, result.runs[2].policy);
    }

    #[test]
    fn mixture_oracle_mode_count_sits_just_under_two() {
        let mut config = two_point_mass_config();
        config.policies = vec![PolicyConfig::mixture_oracle(vec![0.5, 0.5])];
        config.run.rounds = 500;
        config.run.num_seeds = 10;
        let result = run_experiment(&config).unwrap();
        let mean: f64 = result
            .runs
            .iter()
            .map(|r| r.final_score.unwrap())
            .sum::<f64>()
            / 10.0;
        assert!(mean > 1.9 && mean <= 2.0, "mean mode count {}", mean);
    }

    #[test]
    fn aggregates_have_zero_spread_on_deterministic_runs() {
        let mut config = two_point_mass_config();
        config.policies = vec![PolicyConfig::one_arm_oracle(1)];
        config.run.num_seeds = 3;
        let result = run_experiment(&config).unwrap();
        let curve = &result.aggregates[0];
        assert!(curve.sd_loss.iter().all(|&sd| sd == 0.0));
        assert!(curve.mean_loss.iter().all(|&l| l == 1.0));
    }

    #[test]
    fn csv_export_matches_the_expected_layout_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = two_point_mass_config();
        config.policies = vec![PolicyConfig::one_arm_oracle(2)];
        config.run.rounds = 2;
        let result = run_experiment(&config).unwrap();
        let written = export(&result, dir.path()).unwrap();
        let csv = fs::read_to_string(dir.path().join("trajectories.csv")).unwrap();
        let expected = "t,policy,seed,arm,loss,score,n_1,n_2,alpha_1,alpha_2\n\
                        1,one-arm-oracle,1,2,1,1,0,1,,\n\
                        2,one-arm-oracle,1,2,1,1,0,2,,\n";
        assert_eq!(csv, expected);

        // Re-export is byte-identical.
        export(&result, dir.path()).unwrap();
        assert_eq!(
            fs::read_to_string(dir.path().join("trajectories.csv")).unwrap(),
            csv
        );
        assert_eq!(written.len(), 3);
    }

    #[test]
    fn manifest_round_trips_the_config() {
        let dir = tempfile::tempdir().unwrap();
        let config = two_point_mass_config();
        let result = run_experiment(&config).unwrap();
        export(&result, dir.path()).unwrap();
        let manifest: Manifest<f64> = serde_json::from_str(
            &fs::read_to_string(dir.path().join("manifest.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(manifest.config, result.config);
        assert_eq!(manifest.seeds, vec![1]);
        assert_eq!(manifest.oracle, result.oracle);
    }

    #[test]
    fn json_export_writes_parseable_trajectories() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = two_point_mass_config();
        config.run.format = ExportFormat::Json;
        let result = run_experiment(&config).unwrap();
        export(&result, dir.path()).unwrap();
        let trajectories: Vec<Trajectory<f64>> = serde_json::from_str(
            &fs::read_to_string(dir.path().join("trajectories.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(trajectories.len(), 1);
        assert_eq!(trajectories[0], result.runs[0].trajectory);
    }

    fn concentration_config() -> ExperimentConfig<f64> {
        let mut config = two_point_mass_config();
        config.arms = vec![
            SourceSpec::gaussian(vec![0.0], 0.5),
            SourceSpec::gaussian(vec![4.0], 0.5),
        ];
        config.run.oracle_samples = 2000;
        config.validation = Some(ValidationSection {
            alpha: vec![0.5, 0.5],
            counts: vec![20, 20],
            deltas: vec![0.05, 0.5],
            replications: 1000,
        });
        config
    }

    #[test]
    fn concentration_rates_stay_below_their_deltas() {
        let report = validate_concentration(&concentration_config()).unwrap();
        for row in &report.rows {
            assert!(
                row.upper_rate <= row.delta && row.lower_rate <= row.delta,
                "rates ({}, {}) at delta {}",
                row.upper_rate,
                row.lower_rate,
                row.delta
            );
        }
        for row in &report.sweep {
            assert!(row.rate <= row.delta, "sweep rate {} at {}", row.rate, row.delta);
            assert!(row.grid_points > 0);
        }
    }

    #[test]
    fn inflated_sensitivity_silences_all_violations() {
        let mut config = concentration_config();
        config.confidence.delta_l = Some(20.0);
        let report = validate_concentration(&config).unwrap();
        for row in &report.rows {
            assert_eq!(row.upper_rate, 0.0);
            assert_eq!(row.lower_rate, 0.0);
        }
    }

    #[test]
    fn concentration_requires_enough_replications() {
        let mut config = concentration_config();
        config.validation.as_mut().unwrap().replications = 100;
        assert!(matches!(
            validate_concentration(&config),
            Err(Error::BudgetTooSmall {
                required: 1000,
                ..
            })
        ));
        let mut missing = concentration_config();
        missing.validation = None;
        assert!(validate_concentration(&missing).is_err());
    }
}
