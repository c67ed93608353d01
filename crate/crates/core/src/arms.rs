//! Sample sources ("arms") and their deterministic draw streams.
//!
//! An arm is either a Gaussian mixture in the embedding space or a pool of
//! pre-computed embeddings loaded from a file. Sources are seeded: for a
//! fixed spec and seed the draw stream is a pure function of the number of
//! prior draws, which is what makes whole policy runs replayable.

use std::fmt;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixture::simplex_tolerance;
use crate::scalar::Scalar;

/// A point in the embedding space.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<S> {
    values: Vec<S>,
}

impl<S: Scalar> Sample<S> {
    /// Validates coordinates: at least one, all finite.
    pub fn new(values: Vec<S>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                actual: 0,
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "sample coordinate",
            });
        }
        Ok(Sample { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn as_slice(&self) -> &[S] {
        &self.values
    }

    /// Squared Euclidean distance to another sample of the same dimension.
    pub fn squared_distance(&self, other: &Sample<S>) -> Result<S> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        let mut acc = S::zero();
        for (&a, &b) in self.values.iter().zip(other.values.iter()) {
            let d = a - b;
            acc += d * d;
        }
        Ok(acc)
    }
}

/// Seed for one run or source stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed(pub u64);

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngSeed {
    /// Derives an independent child seed for stream `k`.
    ///
    /// Policy randomness and per-arm sample randomness run on separate
    /// streams of the same base seed, so two policies sharing a seed see
    /// identical sample noise while making independent random choices.
    pub fn stream(self, k: u64) -> RngSeed {
        RngSeed(splitmix64(self.0 ^ splitmix64(k)))
    }

    pub fn rng(self) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(self.0)
    }
}

/// Replacement behavior for file-backed pools.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DrawMode {
    WithReplacement,
    /// Default: a finite pool of generated samples is spent, not resampled.
    #[default]
    WithoutReplacement,
}

/// Declarative description of an arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SourceSpec<S> {
    /// Isotropic Gaussian mixture: component `c` draws `mean_c + sd_c · z`
    /// with `z` standard normal. `sd = 0` components are point masses.
    GaussianMixture {
        means: Vec<Vec<S>>,
        std_devs: Vec<S>,
        weights: Vec<S>,
    },
    /// Pool of embeddings read from a file, one comma-separated row per
    /// sample, optional leading `#` header line.
    FilePool {
        path: PathBuf,
        #[serde(default)]
        mode: DrawMode,
    },
}

impl<S: Scalar> SourceSpec<S> {
    /// A single isotropic Gaussian component.
    pub fn gaussian(mean: Vec<S>, std_dev: S) -> Self {
        SourceSpec::GaussianMixture {
            means: vec![mean],
            std_devs: vec![std_dev],
            weights: vec![S::one()],
        }
    }

    /// A point mass at `point`.
    pub fn point_mass(point: Vec<S>) -> Self {
        SourceSpec::gaussian(point, S::zero())
    }

    /// An equal-weight mixture of point masses.
    pub fn point_mass_mixture(points: Vec<Vec<S>>) -> Self {
        let k = points.len();
        let w = S::one() / crate::scalar::real_of_usize::<S>(k.max(1));
        SourceSpec::GaussianMixture {
            std_devs: vec![S::zero(); k],
            weights: vec![w; k],
            means: points,
        }
    }

    /// Checks structural validity without touching the filesystem.
    pub fn validate(&self) -> Result<()> {
        match self {
            SourceSpec::GaussianMixture {
                means,
                std_devs,
                weights,
            } => {
                if means.is_empty() {
                    return Err(Error::InvalidSource("mixture has no components".into()));
                }
                let d = means[0].len();
                if d == 0 {
                    return Err(Error::InvalidSource("component mean is empty".into()));
                }
                for (c, mean) in means.iter().enumerate() {
                    if mean.len() != d {
                        return Err(Error::InvalidSource(format!(
                            "component {} has dimension {} but component 1 has {}",
                            c + 1,
                            mean.len(),
                            d
                        )));
                    }
                    if mean.iter().any(|v| !v.is_finite()) {
                        return Err(Error::NonFinite {
                            context: "component mean",
                        });
                    }
                }
                if std_devs.len() != means.len() {
                    return Err(Error::InvalidSource(format!(
                        "{} std_devs for {} components",
                        std_devs.len(),
                        means.len()
                    )));
                }
                if std_devs.iter().any(|s| !s.is_finite() || *s < S::zero()) {
                    return Err(Error::InvalidSource(
                        "std_devs must be finite and nonnegative".into(),
                    ));
                }
                if weights.len() != means.len() {
                    return Err(Error::InvalidSource(format!(
                        "{} weights for {} components",
                        weights.len(),
                        means.len()
                    )));
                }
                let mut sum = S::zero();
                for &w in weights {
                    if !w.is_finite() || w < S::zero() {
                        return Err(Error::InvalidSource(
                            "component weights must be finite and nonnegative".into(),
                        ));
                    }
                    sum += w;
                }
                if (sum - S::one()).abs() > simplex_tolerance::<S>(weights.len()) {
                    return Err(Error::InvalidSource(format!(
                        "component weights sum to {} instead of 1",
                        sum
                    )));
                }
                Ok(())
            }
            SourceSpec::FilePool { path, .. } => {
                if path.as_os_str().is_empty() {
                    return Err(Error::InvalidSource("pool path is empty".into()));
                }
                Ok(())
            }
        }
    }
}

/// Reads an embedding pool file: one comma-separated sample per line.
///
/// The first line may be a `#` header; blank lines are skipped; every data
/// row must have the same number of fields.
pub fn read_pool<S: Scalar>(path: &Path) -> Result<Vec<Sample<S>>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::PoolIo {
        path: path.to_path_buf(),
        source,
    })?;
    let mut rows: Vec<Sample<S>> = Vec::new();
    let mut dim: Option<usize> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if idx == 0 && line.starts_with('#') {
            continue;
        }
        let mut values = Vec::new();
        for field in line.split(',') {
            let field = field.trim();
            let v: S = field.parse().map_err(|_| Error::PoolParse {
                path: path.to_path_buf(),
                line: idx + 1,
                reason: format!("field {:?} is not a number", field),
            })?;
            if !v.is_finite() {
                return Err(Error::PoolParse {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    reason: format!("field {:?} is not finite", field),
                });
            }
            values.push(v);
        }
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(Error::PoolParse {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    reason: format!("expected {} fields, got {}", d, values.len()),
                });
            }
            _ => {}
        }
        rows.push(Sample::new(values)?);
    }
    if rows.is_empty() {
        return Err(Error::InvalidSource(format!(
            "pool file {} contains no samples",
            path.display()
        )));
    }
    Ok(rows)
}

enum SourceState<S> {
    Gaussian {
        means: Vec<Vec<S>>,
        std_devs: Vec<S>,
        weights: Vec<S>,
    },
    Pool {
        rows: Vec<Sample<S>>,
        mode: DrawMode,
        /// Pre-shuffled visit order for draws without replacement.
        order: Vec<usize>,
        next: usize,
    },
}

/// A stateful, seeded sample source.
pub struct SampleSource<S> {
    state: SourceState<S>,
    rng: ChaCha12Rng,
    dim: usize,
    draws: usize,
}

impl<S> fmt::Debug for SampleSource<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampleSource")
            .field("dim", &self.dim)
            .field("draws", &self.draws)
            .finish()
    }
}

/// Builds a ready-to-draw source from a spec and seed.
///
/// File pools are read eagerly; for draws without replacement the visit
/// order is fixed here by one seeded shuffle, so later draws are pure
/// lookups.
pub fn build_source<S: Scalar>(spec: &SourceSpec<S>, seed: RngSeed) -> Result<SampleSource<S>> {
    spec.validate()?;
    let mut rng = seed.rng();
    match spec {
        SourceSpec::GaussianMixture {
            means,
            std_devs,
            weights,
        } => Ok(SampleSource {
            dim: means[0].len(),
            state: SourceState::Gaussian {
                means: means.clone(),
                std_devs: std_devs.clone(),
                weights: weights.clone(),
            },
            rng,
            draws: 0,
        }),
        SourceSpec::FilePool { path, mode } => {
            let rows = read_pool::<S>(path)?;
            let mut order: Vec<usize> = (0..rows.len()).collect();
            if *mode == DrawMode::WithoutReplacement {
                order.shuffle(&mut rng);
            }
            Ok(SampleSource {
                dim: rows[0].dim(),
                state: SourceState::Pool {
                    rows,
                    mode: *mode,
                    order,
                    next: 0,
                },
                rng,
                draws: 0,
            })
        }
    }
}

impl<S: Scalar> SampleSource<S> {
    /// Embedding dimension of every sample this source produces.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of draws made so far.
    pub fn draws(&self) -> usize {
        self.draws
    }

    /// Draws the next sample in the stream.
    pub fn draw(&mut self) -> Result<Sample<S>> {
        let sample = match &mut self.state {
            SourceState::Gaussian {
                means,
                std_devs,
                weights,
            } => {
                let u: S = self.rng.random_range(S::zero()..S::one());
                let mut component = means.len() - 1;
                let mut cum = S::zero();
                for (c, &w) in weights.iter().enumerate() {
                    cum += w;
                    if u < cum {
                        component = c;
                        break;
                    }
                }
                let mean = &means[component];
                let sd = std_devs[component];
                let mut values = Vec::with_capacity(mean.len());
                for &m in mean {
                    let z = S::standard_normal(&mut self.rng);
                    values.push(m + sd * z);
                }
                Sample { values }
            }
            SourceState::Pool {
                rows,
                mode,
                order,
                next,
            } => match mode {
                DrawMode::WithReplacement => {
                    let i = self.rng.random_range(0..rows.len());
                    rows[i].clone()
                }
                DrawMode::WithoutReplacement => {
                    if *next >= order.len() {
                        return Err(Error::PoolExhausted {
                            available: order.len(),
                        });
                    }
                    let row = rows[order[*next]].clone();
                    *next += 1;
                    row
                }
            },
        };
        self.draws += 1;
        Ok(sample)
    }

    /// Draws `l` consecutive samples; equivalent to `l` calls to [`draw`].
    ///
    /// [`draw`]: SampleSource::draw
    pub fn draw_batch(&mut self, l: usize) -> Result<Vec<Sample<S>>> {
        if l == 0 {
            return Err(Error::InvalidSource("batch size must be positive".into()));
        }
        let mut out = Vec::with_capacity(l);
        for _ in 0..l {
            out.push(self.draw()?);
        }
        Ok(out)
    }
}
