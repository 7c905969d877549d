//! Config-driven replicated experiments.
//!
//! Each replica draws its own generator from `(seed, replica, kind)`, samples
//! its orbits or sequences once at the largest `n` of the ladder and evaluates
//! the statistic on prefixes. Replicas may run on any number of threads; rows
//! are collected in `(n, replica)` order, so the emitted files depend only on
//! the config.

pub mod report;

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dimension::{self, DimensionOptions, Estimator, RadiiLadder};
use crate::distance::{self, MetricKind, OrbitSet};
use crate::dynamics::{self, MapSpec, ObservationSpec, PointSet};
use crate::error::{Error, Result};
use crate::matching::{self, EncoderSpec, ScrabbleSpec};
use crate::regression::{self, LinearFit};
use crate::seed;
use crate::symbolic::{self, MarkovModel, SymbolSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    ShortestDistance,
    ObservedDistance,
    RandomOrbits,
    Lcs,
    LcsEncoded,
    Scrabble,
    Dimension,
    Entropy,
}

impl Kind {
    pub const ALL: [Kind; 8] = [
        Kind::ShortestDistance,
        Kind::ObservedDistance,
        Kind::RandomOrbits,
        Kind::Lcs,
        Kind::LcsEncoded,
        Kind::Scrabble,
        Kind::Dimension,
        Kind::Entropy,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Kind::ShortestDistance => "shortest-distance",
            Kind::ObservedDistance => "observed-distance",
            Kind::RandomOrbits => "random-orbits",
            Kind::Lcs => "lcs",
            Kind::LcsEncoded => "lcs-encoded",
            Kind::Scrabble => "scrabble",
            Kind::Dimension => "dimension",
            Kind::Entropy => "entropy",
        }
    }

    /// What the per-n summary and the regression use.
    pub fn abscissa(self) -> Abscissa {
        match self {
            Kind::ShortestDistance | Kind::ObservedDistance | Kind::RandomOrbits => Abscissa::NegLogN,
            Kind::Lcs | Kind::LcsEncoded | Kind::Scrabble => Abscissa::LogN,
            Kind::Dimension | Kind::Entropy => Abscissa::None,
        }
    }
}

/// How the statistic is regressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Abscissa {
    /// `log m_n` against `-log n`; zero distances are left out.
    NegLogN,
    /// The statistic against `log n`.
    LogN,
    /// No regression; the estimate is the mean at the largest `n`.
    None,
}

/// Either explicit values or `base^from ..= base^to`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NLadder {
    Values(Vec<usize>),
    Geometric { base: usize, from: u32, to: u32 },
}

impl NLadder {
    pub fn values(&self) -> Vec<usize> {
        match self {
            NLadder::Values(v) => v.clone(),
            NLadder::Geometric { base, from, to } => (*from..=*to).map(|e| base.saturating_pow(e)).collect(),
        }
    }
}

/// The `system.*` table; which keys are needed depends on the kind.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observation: Option<ObservationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub markov: Option<MarkovModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoder: Option<EncoderSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub k: usize,
    pub replicas: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Dimension kind only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator: Option<Estimator>,
    /// Entropy kind only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cylinder_length: Option<usize>,
    pub n_ladder: NLadder,
    #[serde(default)]
    pub system: SystemSpec,
    /// Dimension kind only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<RadiiLadder>,
}

fn missing(kind: Kind, key: &str) -> Error {
    Error::ConfigInvalid(format!("kind {} needs system.{key}", kind.tag()))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn ladder(&self) -> Vec<usize> {
        self.n_ladder.values()
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::ConfigInvalid(format!("k must be >= 2, got {}", self.k)));
        }
        if self.replicas < 1 {
            return Err(Error::ConfigInvalid("replicas must be >= 1".into()));
        }
        let ladder = self.ladder();
        if ladder.is_empty() {
            return Err(Error::ConfigInvalid("n_ladder is empty".into()));
        }
        if ladder.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::ConfigInvalid(format!(
                "n_ladder must be strictly increasing, got {ladder:?}"
            )));
        }
        let min_n = if self.kind.abscissa() == Abscissa::None {
            1
        } else {
            2
        };
        if ladder[0] < min_n {
            return Err(Error::ConfigInvalid(format!("n must be >= {min_n}")));
        }
        let sys = &self.system;
        match self.kind {
            Kind::ShortestDistance | Kind::ObservedDistance | Kind::RandomOrbits | Kind::Dimension => {
                let map = sys.map.as_ref().ok_or_else(|| missing(self.kind, "map"))?;
                map.validate()?;
                if self.kind == Kind::RandomOrbits && !matches!(map, MapSpec::SkewProduct(_)) {
                    return Err(Error::ConfigInvalid(
                        "random-orbits needs a skew-product map".into(),
                    ));
                }
                if let Some(obs) = &sys.observation {
                    obs.validate(map.dim())?;
                } else if self.kind == Kind::ObservedDistance {
                    return Err(missing(self.kind, "observation"));
                }
                if self.kind == Kind::Dimension {
                    self.radii.unwrap_or_default().validate()?;
                }
            }
            Kind::Lcs | Kind::Entropy => {
                let model = sys.markov.as_ref().ok_or_else(|| missing(self.kind, "markov"))?;
                model.require_ergodic()?;
                if self.kind == Kind::Entropy {
                    let len = self
                        .cylinder_length
                        .ok_or_else(|| Error::ConfigInvalid("kind entropy needs cylinder_length".into()))?;
                    if len == 0 || len > ladder[0] {
                        return Err(Error::CylinderTooLong {
                            len,
                            seq_len: ladder[0],
                        });
                    }
                }
            }
            Kind::LcsEncoded => {
                let model = sys.markov.as_ref().ok_or_else(|| missing(self.kind, "markov"))?;
                model.require_ergodic()?;
                let enc = sys
                    .encoder
                    .as_ref()
                    .ok_or_else(|| missing(self.kind, "encoder"))?;
                enc.validate()?;
                if let Some(a) = enc.input_alphabet() {
                    if a != model.alphabet() {
                        return Err(Error::AlphabetMismatch(format!(
                            "encoder expects {a} letters, chain has {}",
                            model.alphabet()
                        )));
                    }
                }
            }
            Kind::Scrabble => {
                let model = sys.markov.clone().ok_or_else(|| missing(self.kind, "markov"))?;
                let weights = sys.weights.clone().ok_or_else(|| missing(self.kind, "weights"))?;
                ScrabbleSpec::new(model, weights)?;
            }
        }
        Ok(())
    }

    fn metric(&self, dim: usize) -> distance::MetricSpec {
        self.system.metric.unwrap_or(MetricKind::TorusWrap).with_dim(dim)
    }

    /// Limit constant the regression estimates, when known.
    pub fn theory(&self) -> Option<f64> {
        let k = self.k;
        let sys = &self.system;
        let exponent = |d: f64| k as f64 / ((k - 1) as f64 * d);
        match self.kind {
            Kind::ShortestDistance | Kind::RandomOrbits => {
                dimension::theoretical_dk(sys.map.as_ref()?, k).map(exponent)
            }
            Kind::ObservedDistance => {
                observed_dk(sys.map.as_ref()?, sys.observation.as_ref()?, k).map(exponent)
            }
            Kind::Dimension => match &sys.observation {
                Some(obs) => observed_dk(sys.map.as_ref()?, obs, k),
                None => dimension::theoretical_dk(sys.map.as_ref()?, k),
            },
            Kind::Lcs => matching::lcs_limit_constant(sys.markov.as_ref()?, k).ok(),
            Kind::LcsEncoded => {
                let model = sys.markov.as_ref()?;
                match sys.encoder.as_ref()? {
                    EncoderSpec::Identity => matching::lcs_limit_constant(model, k).ok(),
                    EncoderSpec::LetterRepetition { weights } => {
                        let spec = ScrabbleSpec::new(model.clone(), weights.clone()).ok()?;
                        matching::scrabble_limit_constant(&spec, k).ok()
                    }
                    EncoderSpec::BlockSubstitution { .. } => None,
                }
            }
            Kind::Scrabble => {
                let spec = ScrabbleSpec::new(sys.markov.clone()?, sys.weights.clone()?).ok()?;
                matching::scrabble_limit_constant(&spec, k).ok()
            }
            Kind::Entropy => symbolic::renyi_entropy_markov(sys.markov.as_ref()?, k).ok(),
        }
    }
}

/// `D_k` of the image measure when the observation is known to preserve it
/// (identity and contracting affine maps) or when a Lebesgue measure is
/// projected onto distinct coordinates.
pub fn observed_dk(map: &MapSpec, obs: &ObservationSpec, k: usize) -> Option<f64> {
    let d = dimension::theoretical_dk(map, k)?;
    match obs {
        ObservationSpec::Identity => Some(d),
        // Clamping never triggers for |scale| <= 1 and an offset keeping the image inside.
        ObservationSpec::Affine { scale, offset } => {
            let ends = [*offset, scale + offset];
            let inside = ends.iter().all(|e| (0.0..=1.0).contains(e));
            (scale.abs() <= 1.0 && inside).then_some(d)
        }
        ObservationSpec::CoordinateProjection { indices } => {
            if !map.preserves_lebesgue() {
                return None;
            }
            let mut distinct = indices.clone();
            distinct.sort_unstable();
            distinct.dedup();
            (distinct.len() == indices.len()).then_some(distinct.len() as f64)
        }
    }
}

/// One `(n, replica)` row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub n: usize,
    pub replica: usize,
    /// `m_n`, `M_n`, `M_n^f`, `V_n`, `D_k` or `H_k` estimate.
    pub statistic: f64,
    /// `log m_n / -log n`, or the statistic over `log n`, or the statistic.
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerN {
    pub n: usize,
    /// Mean of the statistic over replicas.
    #[serde(deserialize_with = "nan_if_null")]
    pub mean_statistic: f64,
    /// Mean and standard error of the regressed quantity (NaN, written as
    /// `null`, when no replica is usable).
    #[serde(deserialize_with = "nan_if_null")]
    pub mean: f64,
    #[serde(deserialize_with = "nan_if_null")]
    pub stderr: f64,
    /// Replicas entering `mean` (zero distances are excluded).
    pub used: usize,
}

fn nan_if_null<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

/// The deterministic part of a result; written as `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub kind: Kind,
    pub k: usize,
    pub seed: u64,
    pub replicas: usize,
    pub abscissa: Abscissa,
    pub per_n: Vec<PerN>,
    pub fit: Option<LinearFit>,
    /// Regression slope, or the mean at the largest `n`.
    pub estimate: Option<f64>,
    pub theory: Option<f64>,
    pub abs_error: Option<f64>,
    pub rel_error: Option<f64>,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub summary: Summary,
    pub rows: Vec<Row>,
    /// Wall-clock seconds; kept out of the deterministic outputs.
    pub runtime_secs: f64,
    pub threads: usize,
}

/// Runs on `threads` workers (the global pool if `None`).
pub fn run(config: &ExperimentConfig, threads: Option<usize>) -> Result<ExperimentResult> {
    config.validate()?;
    let start = Instant::now();
    let (per_replica, threads) = match threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| Error::ConfigInvalid(format!("thread pool: {e}")))?;
            (pool.install(|| run_replicas(config)), pool.current_num_threads())
        }
        None => (run_replicas(config), rayon::current_num_threads()),
    };
    let per_replica = per_replica?;
    let ladder = config.ladder();
    let mut rows = Vec::with_capacity(ladder.len() * config.replicas);
    for (j, &n) in ladder.iter().enumerate() {
        for (replica, stats) in per_replica.iter().enumerate() {
            let statistic = stats[j];
            rows.push(Row {
                n,
                replica,
                statistic,
                exponent: row_exponent(config.kind, statistic, n),
            });
        }
    }
    Ok(ExperimentResult {
        summary: summarize(config, &rows),
        rows,
        runtime_secs: start.elapsed().as_secs_f64(),
        threads,
    })
}

fn row_exponent(kind: Kind, statistic: f64, n: usize) -> f64 {
    match kind.abscissa() {
        Abscissa::NegLogN => distance::exponent(statistic, n),
        Abscissa::LogN => statistic / (n as f64).ln(),
        Abscissa::None => statistic,
    }
}

/// Per-n means and the regression, from rows in `(n, replica)` order.
pub fn summarize(config: &ExperimentConfig, rows: &[Row]) -> Summary {
    let abscissa = config.kind.abscissa();
    let mut per_n = Vec::new();
    for n in config.ladder() {
        let stats: Vec<f64> = rows.iter().filter(|r| r.n == n).map(|r| r.statistic).collect();
        let ys: Vec<f64> = match abscissa {
            Abscissa::NegLogN => stats.iter().filter(|&&m| m > 0.0).map(|m| m.ln()).collect(),
            _ => stats.clone(),
        };
        let (mean, stderr) = regression::mean_and_stderr(&ys);
        per_n.push(PerN {
            n,
            mean_statistic: regression::mean_and_stderr(&stats).0,
            mean,
            stderr,
            used: ys.len(),
        });
    }
    let usable: Vec<&PerN> = per_n.iter().filter(|p| p.used > 0).collect();
    let (fit, estimate) = match abscissa {
        Abscissa::NegLogN | Abscissa::LogN => {
            let xs: Vec<f64> = usable
                .iter()
                .map(|p| {
                    let l = (p.n as f64).ln();
                    if abscissa == Abscissa::NegLogN {
                        -l
                    } else {
                        l
                    }
                })
                .collect();
            let ys: Vec<f64> = usable.iter().map(|p| p.mean).collect();
            let fit = regression::fit(&xs, &ys);
            (fit, fit.map(|f| f.slope))
        }
        Abscissa::None => (None, usable.last().map(|p| p.mean)),
    };
    let theory = config.theory();
    let (abs_error, rel_error) = match (estimate, theory) {
        (Some(e), Some(t)) => (Some((e - t).abs()), Some((e - t).abs() / t.abs())),
        _ => (None, None),
    };
    Summary {
        kind: config.kind,
        k: config.k,
        seed: config.seed,
        replicas: config.replicas,
        abscissa,
        per_n,
        fit,
        estimate,
        theory,
        abs_error,
        rel_error,
        config: config.clone(),
    }
}

fn run_replicas(config: &ExperimentConfig) -> Result<Vec<Vec<f64>>> {
    (0..config.replicas)
        .into_par_iter()
        .map(|r| run_replica(config, r))
        .collect()
}

fn annotate(n: usize, replica: usize) -> impl Fn(Error) -> Error {
    move |e| Error::Replica {
        n,
        replica,
        source: Box::new(e),
    }
}

/// Statistic at every ladder point for one replica.
pub fn run_replica(config: &ExperimentConfig, replica: usize) -> Result<Vec<f64>> {
    let ladder = config.ladder();
    let n_max = *ladder.last().expect("validated ladder");
    let mut rng = seed::replica_rng(config.seed, replica as u64, config.kind.tag());
    let sys = &config.system;
    let k = config.k;
    let at_max = annotate(n_max, replica);
    match config.kind {
        Kind::ShortestDistance | Kind::ObservedDistance | Kind::RandomOrbits => {
            let map = sys.map.as_ref().expect("validated");
            let orbits = (0..k)
                .map(|_| dynamics::sample_orbit(map, n_max, &mut rng))
                .collect::<Result<Vec<PointSet>>>()
                .map_err(&at_max)?;
            let mut set = OrbitSet::new(orbits, config.metric(map.dim())).map_err(&at_max)?;
            if config.kind == Kind::ObservedDistance {
                set = set
                    .observe(sys.observation.as_ref().expect("validated"))
                    .map_err(&at_max)?;
            }
            ladder
                .iter()
                .map(|&n| distance::shortest_distance_fast(&set, n).map_err(annotate(n, replica)))
                .collect()
        }
        Kind::Dimension => {
            let map = sys.map.as_ref().expect("validated");
            let mut points = dynamics::sample_orbit(map, n_max, &mut rng).map_err(&at_max)?;
            if let Some(obs) = &sys.observation {
                points = obs.apply_set(&points).map_err(&at_max)?;
            }
            let metric = config.metric(points.dim());
            let radii = config.radii.unwrap_or_default();
            ladder
                .iter()
                .map(|&n| {
                    let opts = DimensionOptions {
                        estimator: config.estimator.unwrap_or_default(),
                        seed: seed::replica_seed(config.seed, replica as u64, "dimension-tuples") ^ n as u64,
                        ..DimensionOptions::default()
                    };
                    dimension::estimate_dk_with(&points.prefix(n), &radii, k, metric, &opts)
                        .map(|e| e.dimension)
                        .map_err(annotate(n, replica))
                })
                .collect()
        }
        Kind::Lcs | Kind::LcsEncoded | Kind::Scrabble => {
            let model = sys.markov.as_ref().expect("validated");
            let mut seqs = (0..k)
                .map(|_| symbolic::sample_markov(model, n_max, &mut rng))
                .collect::<Result<Vec<SymbolSequence>>>()
                .map_err(&at_max)?;
            if config.kind == Kind::LcsEncoded {
                let enc = sys.encoder.as_ref().expect("validated");
                seqs = seqs
                    .iter()
                    .map(|s| matching::apply_encoder(enc, s))
                    .collect::<Result<_>>()
                    .map_err(&at_max)?;
            }
            let mut previous = 0;
            ladder
                .iter()
                .map(|&n| {
                    let value = if config.kind == Kind::Scrabble {
                        let weights = sys.weights.as_ref().expect("validated");
                        matching::scrabble_vn(&seqs, weights, n)
                    } else {
                        // M_n is non-decreasing in n, so the last value bounds it below.
                        matching::lcs_k_fast_from(&seqs, n, previous).map(|w| w.len)
                    }
                    .map_err(annotate(n, replica))?;
                    previous = value;
                    Ok(value as f64)
                })
                .collect()
        }
        Kind::Entropy => {
            let model = sys.markov.as_ref().expect("validated");
            let seq = symbolic::sample_markov(model, n_max, &mut rng).map_err(&at_max)?;
            let len = config.cylinder_length.expect("validated");
            ladder
                .iter()
                .map(|&n| {
                    let prefix = SymbolSequence::new(seq.symbols()[..n].to_vec(), seq.alphabet())?;
                    let table = symbolic::cylinder_counts(&prefix, len)?;
                    symbolic::empirical_renyi(&table, k)
                })
                .enumerate()
                .map(|(j, r)| r.map_err(annotate(ladder[j], replica)))
                .collect()
        }
    }
}
