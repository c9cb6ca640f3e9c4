//! Seeded Monte Carlo sweeps over network size, M rule, SNR and step size.
//!
//! Realization `i` of every grid point uses the seed `derive_seed(seed, i)`,
//! so grid points share channel draws and a realization's result never
//! depends on how many realizations were requested. Realizations run in
//! parallel; results are folded in realization order.

mod emit;
mod pipelines;

use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assignment::{optimal_permutation, AssignmentResult};
use crate::channel::{ChannelRealization, PowerProfile};
use crate::dynamics::ResetSchedule;
use crate::equilibrium::DEFAULT_ENUMERATION_BUDGET;
use crate::error::{Error, Result};
use crate::game::{rates, weighted_sum_rate, Allocation, GameKind};
use crate::rng;
use crate::scalar::{rate, Scalar};

pub use emit::{emit_results, write_csv, write_jsonl, CSV_COLUMNS, SCHEMA_VERSION};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Single long fictitious-play runs tracked against the optimum.
    Convergence,
    /// Rates of the converged allocation, the optimum and a random permutation versus N.
    RatesVsN,
    /// Same metrics as `RatesVsN`, swept over SNR.
    SnrSweep,
    /// Strong-interference condition and exhaustive equilibrium count of the naive game.
    Lemma1Check,
    /// Perfect matchings in the M-best preference graph.
    MatchingCheck,
    /// Exhaustive price of anarchy of both games on small networks.
    PpoaSmall,
    /// Harmonic-step fictitious play against the joint-strategy reference.
    FpEquivalence,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::RatesVsN => "rates_vs_n",
            ExperimentKind::SnrSweep => "snr_sweep",
            ExperimentKind::Lemma1Check => "lemma1_check",
            ExperimentKind::MatchingCheck => "matching_check",
            ExperimentKind::PpoaSmall => "ppoa_small",
            ExperimentKind::FpEquivalence => "fp_equivalence",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        const ALL: [ExperimentKind; 7] = [
            ExperimentKind::Convergence,
            ExperimentKind::RatesVsN,
            ExperimentKind::SnrSweep,
            ExperimentKind::Lemma1Check,
            ExperimentKind::MatchingCheck,
            ExperimentKind::PpoaSmall,
            ExperimentKind::FpEquivalence,
        ];
        ALL.into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::config(format!("unknown experiment '{s}'")))
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How the game parameter M is chosen for a network of N users.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MRule {
    Fixed(usize),
    /// `ceil(c * ln N)`, clamped to `1..=K`.
    CeilCLnN(f64),
}

impl MRule {
    pub fn resolve(self, n: usize, n_channels: usize) -> usize {
        let m = match self {
            MRule::Fixed(m) => m,
            MRule::CeilCLnN(c) => (c * (n as f64).ln()).ceil() as usize,
        };
        m.clamp(1, n_channels.max(1))
    }

    /// `fixed:9` or `ceil:3` (for `ceil(3 ln N)`).
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::config(format!("cannot parse M rule '{s}' (use fixed:M or ceil:C)"));
        match s.split_once(':') {
            Some(("fixed", m)) => m.trim().parse().map(MRule::Fixed).map_err(|_| bad()),
            Some(("ceil", c)) => c.trim().parse().map(MRule::CeilCLnN).map_err(|_| bad()),
            None => s.trim().parse().map(MRule::Fixed).map_err(|_| bad()),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for MRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MRule::Fixed(m) => write!(f, "fixed:{m}"),
            MRule::CeilCLnN(c) => write!(f, "ceil:{c}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameChoice {
    Naive,
    #[default]
    Mfsig,
}

impl GameChoice {
    pub fn game_kind(self, m: usize) -> GameKind {
        match self {
            GameChoice::Naive => GameKind::Naive,
            GameChoice::Mfsig => GameKind::MFsig { m },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightRange {
    pub min: f64,
    pub max: f64,
}

/// A Monte Carlo sweep. Every network is square (`K = N`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub game: GameChoice,
    pub n: Vec<usize>,
    #[serde(default = "default_m")]
    pub m: Vec<MRule>,
    #[serde(default = "default_snr")]
    pub snr_db: Vec<f64>,
    #[serde(default = "default_alpha")]
    pub alpha: Vec<f64>,
    #[serde(default = "default_tau")]
    pub tau: usize,
    #[serde(default)]
    pub reset_schedule: ResetSchedule,
    #[serde(default = "default_t_max")]
    pub t_max: usize,
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_n0")]
    pub n0: f64,
    /// Uniform random weights; unit weights when absent.
    #[serde(default)]
    pub weights: Option<WeightRange>,
    /// Multiplier on every cross gain (small-network equilibrium studies).
    #[serde(default = "default_scale")]
    pub cross_gain_scale: f64,
    #[serde(default = "default_budget")]
    pub enumeration_budget: u128,
    /// Also write one trajectory JSONL per dynamics run into the output directory.
    #[serde(default)]
    pub save_trajectories: bool,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_m() -> Vec<MRule> {
    vec![MRule::CeilCLnN(3.0)]
}
fn default_snr() -> Vec<f64> {
    vec![20.0]
}
fn default_alpha() -> Vec<f64> {
    vec![0.5]
}
fn default_tau() -> usize {
    60
}
fn default_t_max() -> usize {
    300
}
fn default_realizations() -> usize {
    50
}
fn default_n0() -> f64 {
    1.0
}
fn default_scale() -> f64 {
    1.0
}
fn default_budget() -> u128 {
    DEFAULT_ENUMERATION_BUDGET
}

impl ExperimentSpec {
    /// Defaults for everything but the experiment kind and network sizes.
    pub fn new(experiment: ExperimentKind, n: Vec<usize>) -> Self {
        Self {
            experiment,
            game: GameChoice::default(),
            n,
            m: default_m(),
            snr_db: default_snr(),
            alpha: default_alpha(),
            tau: default_tau(),
            reset_schedule: ResetSchedule::default(),
            t_max: default_t_max(),
            realizations: default_realizations(),
            seed: 0,
            n0: default_n0(),
            weights: None,
            cross_gain_scale: default_scale(),
            enumeration_budget: default_budget(),
            save_trajectories: false,
            out: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            path: PathBuf::from("<string>"),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.realizations == 0 {
            return Err(Error::config("realizations must be at least 1"));
        }
        if self.n.is_empty() || self.m.is_empty() || self.snr_db.is_empty() || self.alpha.is_empty() {
            return Err(Error::config("every parameter grid must be non-empty"));
        }
        if self.n.contains(&0) {
            return Err(Error::config("network size must be positive"));
        }
        if self.m.iter().any(|m| matches!(m, MRule::Fixed(0))) {
            return Err(Error::config("fixed M must be positive"));
        }
        if let Some(a) = self.alpha.iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
            return Err(Error::config(format!("alpha must lie in (0, 1], got {a}")));
        }
        if self.t_max == 0 {
            return Err(Error::config("t_max must be at least 1"));
        }
        if [self.n0, self.cross_gain_scale].iter().any(|v| v.is_nan() || *v <= 0.0) {
            return Err(Error::config("n0 and cross_gain_scale must be positive"));
        }
        if let Some(w) = self.weights {
            if !(w.min > 0.0 && w.min <= w.max) {
                return Err(Error::config("weights need 0 < min <= max"));
            }
        }
        Ok(())
    }

    /// Cartesian product of the grids, N outermost, then M, SNR and alpha.
    pub fn grid(&self) -> Vec<GridPoint> {
        let mut points = Vec::new();
        for &n in &self.n {
            for &m_rule in &self.m {
                for &snr_db in &self.snr_db {
                    for &alpha in &self.alpha {
                        points.push(GridPoint {
                            n,
                            k: n,
                            m: m_rule.resolve(n, n),
                            m_rule,
                            snr_db,
                            alpha,
                            tau: self.tau,
                            t_max: self.t_max,
                        });
                    }
                }
            }
        }
        points
    }

    /// Seed of realization `i`.
    pub fn realization_seed(&self, i: usize) -> u64 {
        rng::derive_seed(self.seed, i as u64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridPoint {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub m_rule: MRule,
    pub snr_db: f64,
    pub alpha: f64,
    pub tau: usize,
    pub t_max: usize,
}

/// Named metric values of one realization, in a fixed order per experiment.
pub type Metrics = Vec<(&'static str, f64)>;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RealizationRow {
    pub realization: usize,
    pub seed: u64,
    pub metrics: Metrics,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Aggregate {
    pub metric: &'static str,
    pub mean: f64,
    pub std: f64,
    /// Realizations with a finite value; the others are excluded.
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridResult {
    pub point: GridPoint,
    pub rows: Vec<RealizationRow>,
    pub aggregates: Vec<Aggregate>,
    /// Why this grid point could not be run, if it could not.
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultSet {
    pub experiment: ExperimentKind,
    pub realizations: usize,
    pub points: Vec<GridResult>,
}

/// Mean and sample standard deviation of the finite entries.
pub fn mean_std(values: &[f64]) -> (f64, f64, usize) {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let count = finite.len();
    if count == 0 {
        return (f64::NAN, f64::NAN, 0);
    }
    let mean = finite.iter().sum::<f64>() / count as f64;
    let std = if count > 1 {
        (finite.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
    } else {
        0.0
    };
    (mean, std, count)
}

pub fn aggregate(rows: &[RealizationRow]) -> Vec<Aggregate> {
    let Some(first) = rows.first() else {
        return Vec::new();
    };
    first
        .metrics
        .iter()
        .enumerate()
        .map(|(i, &(metric, _))| {
            let values: Vec<f64> = rows.iter().map(|r| r.metrics[i].1).collect();
            let (mean, std, count) = mean_std(&values);
            Aggregate {
                metric,
                mean,
                std,
                count,
            }
        })
        .collect()
}

/// Run every grid point of `spec`.
///
/// A grid point that cannot be evaluated (an enumeration over budget, an
/// invalid M) is reported in its [`GridResult::error`] and the sweep goes on.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ResultSet> {
    spec.validate()?;
    let points = spec
        .grid()
        .into_iter()
        .map(|point| run_point(spec, point))
        .collect::<Result<Vec<_>>>()?;
    Ok(ResultSet {
        experiment: spec.experiment,
        realizations: spec.realizations,
        points,
    })
}

fn run_point(spec: &ExperimentSpec, point: GridPoint) -> Result<GridResult> {
    let outcome: Result<Vec<RealizationRow>> = (0..spec.realizations)
        .into_par_iter()
        .map(|i| {
            let seed = spec.realization_seed(i);
            pipelines::run(spec, &point, i, seed).map(|metrics| RealizationRow {
                realization: i,
                seed,
                metrics,
            })
        })
        .collect();
    match outcome {
        Ok(rows) => Ok(GridResult {
            point,
            aggregates: aggregate(&rows),
            rows,
            error: None,
        }),
        Err(e @ Error::Io { .. }) => Err(e),
        Err(e) => Ok(GridResult {
            point,
            rows: Vec::new(),
            aggregates: Vec::new(),
            error: Some(e.to_string()),
        }),
    }
}

/// How close an allocation comes to the centralized benchmarks.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimalityRatios<T> {
    /// `W(alloc)` over the optimal interference-free permutation value.
    pub to_hungarian: T,
    /// `W(alloc)` over `sum_n w_n log2(1 + P_n h2_best(n) / N0)`, every user
    /// on its best channel with no interference.
    pub to_best_channels: T,
    /// Smallest user rate over the smallest rate of the optimal permutation.
    pub min_rate_ratio: T,
    pub optimum: AssignmentResult<T>,
}

/// Ratios of `W(alloc)` to the Hungarian optimum and to the best-channel bound.
pub fn ratio_to_optimal<T: Scalar>(
    realization: &ChannelRealization<T>,
    powers: &PowerProfile<T>,
    alloc: &Allocation,
) -> Result<OptimalityRatios<T>> {
    let (n_users, n_channels) = (realization.n_users(), realization.n_channels());
    let free_rate = |n: usize, k: usize| rate(powers.power(n), realization.h2(n, k), powers.n0(), T::zero());
    let matrix: Vec<Vec<T>> = (0..n_users)
        .map(|n| (0..n_channels).map(|k| powers.weight(n) * free_rate(n, k)).collect())
        .collect();
    let optimum = optimal_permutation(&matrix)?;
    let w = weighted_sum_rate(realization, powers, alloc);
    let best: T = (0..n_users)
        .map(|n| {
            let g = realization
                .direct_gains(n)
                .iter()
                .copied()
                .fold(T::neg_infinity(), T::max);
            powers.weight(n) * rate(powers.power(n), g, powers.n0(), T::zero())
        })
        .sum();
    let min_of = |a: &Allocation| {
        rates(realization, powers, a)
            .into_iter()
            .fold(T::infinity(), T::min)
    };
    let min_rate_ratio = min_of(alloc) / min_of(&optimum.allocation());
    Ok(OptimalityRatios {
        to_hungarian: w / optimum.value,
        to_best_channels: w / best,
        min_rate_ratio,
        optimum,
    })
}
