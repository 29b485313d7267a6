//! Monte Carlo experiment orchestration: sweeps model points across the
//! threshold statistic, aggregates recovery statistics, and emits
//! phase-diagram CSV data.
//!
//! Trials are indexed by a point-major global counter (point `p`, trial
//! `t` gets counter `p * trials_per_point + t`), so appending points
//! never perturbs earlier points' draws, and any worker count produces
//! identical results.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::ml_union_bound;
use crate::divergence::renyi_half;
use crate::error::{Error, Result};
use crate::estimators::{ml_exact, ml_heuristic, recovery_metrics};
use crate::model::{make_bernoulli_sbm, make_independent_views, ModelSpec, MvsbmParams};
use crate::sampler::{sample_labeling, sample_tensor, SeedSpec};

/// Estimation method driven by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Heuristic,
}

/// One sweep: a list of model points, a trial budget per point, an
/// estimator, and a master seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub points: Vec<ModelSpec>,
    pub trials_per_point: usize,
    pub method: Method,
    /// Restarts for the heuristic; ignored by the exact method.
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub output_path: Option<String>,
}

fn default_restarts() -> usize {
    1
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidJson(e.to_string()))
    }

    /// Validates the config and realizes every point's parameters.
    pub fn realize_points(&self) -> Result<Vec<MvsbmParams>> {
        if self.trials_per_point == 0 {
            return Err(Error::BadConfig("trials_per_point must be at least 1".into()));
        }
        if self.points.is_empty() {
            return Err(Error::BadConfig("at least one model point required".into()));
        }
        if self.method == Method::Heuristic && self.restarts == 0 {
            return Err(Error::BadRestarts);
        }
        let params: Vec<MvsbmParams> =
            self.points.iter().map(|p| p.to_params()).collect::<Result<_>>()?;
        if self.method == Method::Exact {
            if let Some(p) = params.iter().find(|p| p.n() > 32) {
                return Err(Error::TooLargeForExact(p.n()));
            }
        }
        Ok(params)
    }
}

/// Outcome of a single trial.
#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub point_index: usize,
    pub trial_index: usize,
    pub mis_count: usize,
    pub exact: bool,
    pub wall_time: f64,
}

/// Aggregated statistics for one model point.
#[derive(Debug, Clone, Serialize)]
pub struct PointSummary {
    pub point_index: usize,
    /// Threshold statistic `n I / ln n` of the point.
    pub tau: f64,
    pub trials: usize,
    pub success_rate: f64,
    /// 95% Wilson interval for the success rate.
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub mean_mis: f64,
    pub se_mis: f64,
    pub union_bound: f64,
}

/// Per-point aggregates of a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub points: Vec<PointSummary>,
}

const WILSON_Z: f64 = 1.959963984540054;

/// 95% Wilson score interval; valid near rates 0 and 1 where the Wald
/// interval collapses.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

fn run_trial(
    params: &MvsbmParams,
    method: Method,
    restarts: usize,
    seed: SeedSpec,
    point_index: usize,
    trial_index: usize,
) -> Result<TrialRecord> {
    let start = Instant::now();
    let truth = sample_labeling(params.n(), seed)?;
    let tensor = sample_tensor(params, &truth, seed)?;
    let estimate = match method {
        Method::Exact => ml_exact(params, &tensor)?,
        Method::Heuristic => ml_heuristic(params, &tensor, restarts)?,
    };
    let metrics = recovery_metrics(&estimate.labeling, &truth)?;
    Ok(TrialRecord {
        point_index,
        trial_index,
        mis_count: metrics.mis_count,
        exact: metrics.exact,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Runs every trial of the sweep. Trials execute in parallel under the
/// ambient rayon pool; the output ordering is fixed by the global trial
/// counter, so results do not depend on the worker count.
pub fn run_trials(config: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    let params = config.realize_points()?;
    let trials = config.trials_per_point;
    let total = params.len() * trials;
    (0..total)
        .into_par_iter()
        .map(|global| {
            let point_index = global / trials;
            let trial_index = global % trials;
            let seed = SeedSpec::for_trial(config.master_seed, global as u64);
            run_trial(
                &params[point_index],
                config.method,
                config.restarts,
                seed,
                point_index,
                trial_index,
            )
            .map_err(|e| {
                Error::BadConfig(format!(
                    "trial failed at point {point_index}, trial {trial_index}: {e}"
                ))
            })
        })
        .collect()
}

/// Runs the sweep and aggregates per-point statistics.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    let params = config.realize_points()?;
    let records = run_trials(config)?;
    let trials = config.trials_per_point;
    let mut points = Vec::with_capacity(params.len());
    for (point_index, point) in params.iter().enumerate() {
        let slice = &records[point_index * trials..(point_index + 1) * trials];
        let successes = slice.iter().filter(|r| r.exact).count();
        let success_rate = successes as f64 / trials as f64;
        let (ci_lo, ci_hi) = wilson_interval(successes, trials);
        let mean_mis =
            slice.iter().map(|r| r.mis_count as f64).sum::<f64>() / trials as f64;
        let var_mis = slice
            .iter()
            .map(|r| {
                let d = r.mis_count as f64 - mean_mis;
                d * d
            })
            .sum::<f64>()
            / (trials as f64 - 1.0).max(1.0);
        let se_mis = (var_mis / trials as f64).sqrt();
        let renyi = renyi_half(point.within(), point.across())?;
        let tau = point.n() as f64 * renyi / (point.n() as f64).ln();
        let union_bound = ml_union_bound(point)?.union_bound;
        points.push(PointSummary {
            point_index,
            tau,
            trials,
            success_rate,
            ci_lo,
            ci_hi,
            mean_mis,
            se_mis,
            union_bound,
        });
    }
    Ok(SweepResult { points })
}

/// Shape of a synthesized experiment point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointShape {
    /// Single view, within-edge probability searched, `q_edge` across.
    Bernoulli,
    /// `D` independent views sharing one within-edge probability.
    IndependentEqual,
}

impl std::str::FromStr for PointShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bernoulli" => Ok(PointShape::Bernoulli),
            "independent_equal" => Ok(PointShape::IndependentEqual),
            other => Err(Error::BadShape(other.to_string())),
        }
    }
}

/// Tolerance on the achieved threshold statistic of a synthesized
/// point.
pub const SYNTHESIS_TOL: f64 = 1e-6;

/// Finds, by bisection on the within-edge probability, a model point
/// whose threshold statistic `n I / ln n` is within [`SYNTHESIS_TOL`]
/// of `target_tau`. The divergence is strictly increasing on
/// `[q_edge, 1]`, so the root is unique there.
pub fn synthesize_point(
    n: usize,
    num_views: usize,
    target_tau: f64,
    shape: PointShape,
    q_edge: f64,
) -> Result<MvsbmParams> {
    if target_tau <= 0.0 || !target_tau.is_finite() {
        return Err(Error::NonpositiveTau(target_tau));
    }
    if !(0.0 < q_edge && q_edge < 1.0) {
        return Err(Error::ProbabilityOutOfRange(q_edge));
    }
    if shape == PointShape::Bernoulli && num_views != 1 {
        return Err(Error::BadShape(format!(
            "bernoulli points have one view, got D = {num_views}"
        )));
    }
    let build = |p_edge: f64| -> Result<MvsbmParams> {
        match shape {
            PointShape::Bernoulli => make_bernoulli_sbm(p_edge, q_edge, n),
            PointShape::IndependentEqual => make_independent_views(
                &vec![p_edge; num_views],
                &vec![q_edge; num_views],
                n,
            ),
        }
    };
    let tau_of = |p_edge: f64| -> Result<f64> {
        let params = build(p_edge)?;
        Ok(params.n() as f64 * renyi_half(params.within(), params.across())?
            / (params.n() as f64).ln())
    };

    let max_tau = tau_of(1.0)?;
    if target_tau > max_tau + SYNTHESIS_TOL {
        return Err(Error::Unreachable { target: target_tau, max: max_tau });
    }
    let (mut lo, mut hi) = (q_edge, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if tau_of(mid)? < target_tau {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo).abs() < f64::EPSILON {
            break;
        }
    }
    let p_edge = if (tau_of(lo)? - target_tau).abs() < (tau_of(hi)? - target_tau).abs() {
        lo
    } else {
        hi
    };
    let achieved = tau_of(p_edge)?;
    if (achieved - target_tau).abs() > SYNTHESIS_TOL {
        return Err(Error::Unreachable { target: target_tau, max: max_tau });
    }
    build(p_edge)
}

fn fmt_sig9(value: f64) -> String {
    if value.is_finite() {
        format!("{value:.8e}")
    } else if value.is_nan() {
        "nan".to_string()
    } else if value > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Renders a sweep result as CSV: fixed header, one row per point,
/// floats at 9 significant digits. Byte-deterministic for identical
/// results.
pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = String::from(
        "point,tau,trials,success_rate,ci_lo,ci_hi,mean_mis,se_mis,union_bound\n",
    );
    for p in &result.points {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            p.point_index,
            fmt_sig9(p.tau),
            p.trials,
            fmt_sig9(p.success_rate),
            fmt_sig9(p.ci_lo),
            fmt_sig9(p.ci_hi),
            fmt_sig9(p.mean_mis),
            fmt_sig9(p.se_mis),
            fmt_sig9(p.union_bound),
        ));
    }
    out
}

/// Writes the CSV rendering of a sweep result to a file.
pub fn emit_csv(result: &SweepResult, path: &std::path::Path) -> Result<()> {
    std::fs::write(path, sweep_csv(result))?;
    Ok(())
}
