//! Ensemble statistics: moment, correlation, and spectrum estimates with
//! standard errors, built to be compared against the closed forms.
//!
//! Time samples within one trajectory are correlated, so naive i.i.d.
//! error bars would be optimistic; standard errors for the moments come
//! from batch means with a batch length of several correlation times.
//! Per-lag correlation errors use the spread across trajectories, which
//! are independent by construction.
//!
//! The simulated field carries normally-ordered information only. Every
//! antinormally-ordered factor (the `(gamma_c/kappa) n_b` pieces of the
//! photon variance and quadrature variances) is taken as an explicit input
//! sourced from the population module, never from field trajectories.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::langevin::{simulate_trajectory, SimConfig, SimError, Trajectory};
use crate::model::LaserParams;

/// Trajectories processed per parallel wave; keeps peak memory bounded
/// while the final reduction stays in index order.
const CHUNK: u64 = 512;

#[derive(Debug, Error, PartialEq)]
pub enum EstimatorError {
    #[error("no trajectories supplied")]
    EmptyInput,
    #[error("stationary window is empty past burn-in {burn_in}")]
    EmptyStationaryWindow { burn_in: f64 },
    #[error("batch length must be positive, got {0}")]
    InvalidBatchLen(f64),
    #[error("need at least two full batches, got {got}")]
    TooFewBatches { got: usize },
    #[error("steady-state statistics need burn_in >= {required}, got {got}")]
    BurnInTooShort { required: f64, got: f64 },
    #[error("max_lag {max_lag} exceeds half the stationary window {limit}")]
    MaxLagTooLarge { max_lag: f64, limit: f64 },
    #[error("trajectories disagree in sample count or spacing")]
    MismatchedTrajectories,
    #[error("correlation lags must be uniform and start at zero")]
    NonUniformLags,
    #[error(
        "correlation has not decayed to 1% of its lag-0 value; \
         extend max_lag to about {required:?}"
    )]
    InsufficientLagCoverage { required: Option<f64> },
    #[error("frequency grid must be finite and strictly increasing")]
    BadFrequencyGrid,
    #[error("antinormal population factor must be non-negative, got {0}")]
    NegativeAntinormalInput(f64),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Stationary ensemble moments with batch-means standard errors.
///
/// `n_eff` is the number of batches feeding the error bars.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleMoments {
    pub mean_b: Complex64,
    pub e_abs_b2: f64,
    pub e_abs_b4: f64,
    pub e_abs_m2: f64,
    pub n_eff: usize,
    pub se_mean_b: f64,
    pub se_abs_b2: f64,
    pub se_abs_b4: f64,
    pub se_abs_m2: f64,
}

/// Normally-ordered quadrature fluctuation statistics of one run, before
/// the antinormal factor is attached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureParts {
    pub mean_q_plus: f64,
    pub mean_q_minus: f64,
    /// Mean of `q_plus^2 - |b|^2` and its standard error.
    pub w_plus: f64,
    pub se_w_plus: f64,
    /// Mean of `q_minus^2 - |b|^2` and its standard error.
    pub w_minus: f64,
    pub se_w_minus: f64,
}

/// Paper-convention quadrature variance estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureEstimate {
    pub var_plus: f64,
    pub se_plus: f64,
    pub var_minus: f64,
    pub se_minus: f64,
}

/// Photon-number variance assembled from the simulated normally-ordered
/// factor and the analytic antinormal factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhotonVarianceEstimate {
    pub value: f64,
    pub se: f64,
}

/// Two-time correlation estimate on a uniform lag grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationEstimate {
    pub lags: Vec<f64>,
    pub values: Vec<Complex64>,
    pub se: Vec<f64>,
    pub n_traj: usize,
}

/// Power-spectrum estimate obtained by transforming a correlation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumEstimate {
    pub omega_offsets: Vec<f64>,
    pub values: Vec<f64>,
    pub se: Vec<f64>,
    /// Frequency-grid spacing.
    pub resolution: f64,
    /// Taper applied to the correlation before transforming.
    pub window_id: String,
}

impl SpectrumEstimate {
    /// Trapezoidal integral over the frequency grid; the image of the
    /// sum rule, to be compared with the lag-0 correlation.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.omega_offsets, &self.values)
    }
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

/// Ensemble-mean field at every recorded time, for the zero-mean checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanFieldSeries {
    pub times: Vec<f64>,
    pub mean_m: Vec<Complex64>,
    pub se_m: Vec<f64>,
    pub mean_b: Vec<Complex64>,
    pub se_b: Vec<f64>,
}

/// What to estimate during a streaming ensemble run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateRequest {
    /// Batch length (time units) for the batch-means errors; should span
    /// at least ten correlation times.
    pub batch_len: f64,
    pub correlation: Option<CorrelationRequest>,
    pub mean_series: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationRequest {
    pub max_lag: f64,
    /// Approximate number of lag points; the grid is thinned to roughly
    /// this many. Lags always sit on multiples of the recording step.
    pub n_lags: usize,
}

/// Everything a streaming ensemble run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleEstimates {
    pub moments: EnsembleMoments,
    pub quadrature_parts: QuadratureParts,
    pub correlation: Option<CorrelationEstimate>,
    pub mean_series: Option<MeanFieldSeries>,
}

/// Default batch length: ten correlation times of the slower rate.
pub fn default_batch_len(params: &LaserParams) -> f64 {
    10.0 / params.kappa.min(params.eta())
}

/// Minimum burn-in for steady-state statistics: five relaxation times of
/// the slower rate.
pub fn required_burn_in(params: &LaserParams) -> f64 {
    5.0 / params.kappa.min(params.eta())
}

// ---------------------------------------------------------------------------
// per-trajectory accumulation

#[derive(Debug, Clone, Copy, Default)]
struct BatchStats {
    re_b: f64,
    im_b: f64,
    abs_b2: f64,
    abs_b4: f64,
    abs_m2: f64,
    w_plus: f64,
    w_minus: f64,
}

#[derive(Debug, Clone, Default)]
struct SeriesSums {
    sum_m: Vec<Complex64>,
    sum_b: Vec<Complex64>,
    sq_m: Vec<f64>,
    sq_b: Vec<f64>,
}

#[derive(Debug, Clone)]
struct TrajStats {
    count: u64,
    sum_b: Complex64,
    sum_b2: f64,
    sum_b4: f64,
    sum_m2: f64,
    sum_qp: f64,
    sum_qm: f64,
    batches: Vec<BatchStats>,
    /// Per-lag mean of `conj(b(t)) b(t+lag)` for this trajectory.
    lag_means: Vec<Complex64>,
    series: Option<SeriesSums>,
}

struct Plan {
    start: usize,
    batch_size: usize,
    lag_indices: Vec<usize>,
    mean_series: bool,
}

fn make_plan(
    traj_len: usize,
    record_dt: f64,
    burn_start: usize,
    req: &EstimateRequest,
) -> Result<Plan, EstimatorError> {
    if !(req.batch_len.is_finite() && req.batch_len > 0.0) {
        return Err(EstimatorError::InvalidBatchLen(req.batch_len));
    }
    let batch_size = ((req.batch_len / record_dt).round() as usize).max(1);
    let lag_indices = match req.correlation {
        None => Vec::new(),
        Some(c) => {
            let max_k = (c.max_lag / record_dt).round() as usize;
            let stride = (max_k / c.n_lags.max(1)).max(1);
            (0..=max_k).step_by(stride).collect()
        }
    };
    if let Some(&max_k) = lag_indices.last() {
        // need origins: max lag at most half the stationary window
        let window = traj_len - 1 - burn_start;
        if 2 * max_k > window {
            return Err(EstimatorError::MaxLagTooLarge {
                max_lag: max_k as f64 * record_dt,
                limit: window as f64 * record_dt / 2.0,
            });
        }
    }
    Ok(Plan {
        start: burn_start,
        batch_size,
        lag_indices,
        mean_series: req.mean_series,
    })
}

fn accumulate_trajectory(traj: &Trajectory, plan: &Plan) -> TrajStats {
    let i0 = plan.start;
    let n = traj.len();
    let mut s = TrajStats {
        count: 0,
        sum_b: Complex64::ZERO,
        sum_b2: 0.0,
        sum_b4: 0.0,
        sum_m2: 0.0,
        sum_qp: 0.0,
        sum_qm: 0.0,
        batches: Vec::new(),
        lag_means: Vec::with_capacity(plan.lag_indices.len()),
        series: None,
    };
    let mut batch = BatchStats::default();
    let mut in_batch = 0usize;
    for i in i0..n {
        let b = traj.b[i];
        let m = traj.m[i];
        let b2 = b.norm_sqr();
        let m2 = m.norm_sqr();
        let qp = 2.0 * b.re;
        let qm = 2.0 * b.im;
        s.count += 1;
        s.sum_b += b;
        s.sum_b2 += b2;
        s.sum_b4 += b2 * b2;
        s.sum_m2 += m2;
        s.sum_qp += qp;
        s.sum_qm += qm;
        batch.re_b += b.re;
        batch.im_b += b.im;
        batch.abs_b2 += b2;
        batch.abs_b4 += b2 * b2;
        batch.abs_m2 += m2;
        batch.w_plus += qp * qp - b2;
        batch.w_minus += qm * qm - b2;
        in_batch += 1;
        if in_batch == plan.batch_size {
            let inv = 1.0 / plan.batch_size as f64;
            s.batches.push(BatchStats {
                re_b: batch.re_b * inv,
                im_b: batch.im_b * inv,
                abs_b2: batch.abs_b2 * inv,
                abs_b4: batch.abs_b4 * inv,
                abs_m2: batch.abs_m2 * inv,
                w_plus: batch.w_plus * inv,
                w_minus: batch.w_minus * inv,
            });
            batch = BatchStats::default();
            in_batch = 0;
        }
    }
    // trailing partial batch dropped: equal-length batches only
    for &k in &plan.lag_indices {
        let mut acc = Complex64::ZERO;
        let mut cnt = 0u64;
        for t in i0..n - k {
            acc += traj.b[t].conj() * traj.b[t + k];
            cnt += 1;
        }
        s.lag_means.push(acc / cnt as f64);
    }
    if plan.mean_series {
        let mut series = SeriesSums {
            sum_m: vec![Complex64::ZERO; n],
            sum_b: vec![Complex64::ZERO; n],
            sq_m: vec![0.0; n],
            sq_b: vec![0.0; n],
        };
        for i in 0..n {
            series.sum_m[i] = traj.m[i];
            series.sum_b[i] = traj.b[i];
            series.sq_m[i] = traj.m[i].norm_sqr();
            series.sq_b[i] = traj.b[i].norm_sqr();
        }
        s.series = Some(series);
    }
    s
}

fn merge(into: &mut TrajStats, other: &TrajStats) {
    into.count += other.count;
    into.sum_b += other.sum_b;
    into.sum_b2 += other.sum_b2;
    into.sum_b4 += other.sum_b4;
    into.sum_m2 += other.sum_m2;
    into.sum_qp += other.sum_qp;
    into.sum_qm += other.sum_qm;
    into.batches.extend_from_slice(&other.batches);
    if let (Some(a), Some(b)) = (into.series.as_mut(), other.series.as_ref()) {
        for i in 0..a.sum_m.len() {
            a.sum_m[i] += b.sum_m[i];
            a.sum_b[i] += b.sum_b[i];
            a.sq_m[i] += b.sq_m[i];
            a.sq_b[i] += b.sq_b[i];
        }
    }
}

fn mean_and_se(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let mean = values.clone().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

struct Reduced {
    pooled: TrajStats,
    per_traj: Vec<TrajStats>,
    n_traj: usize,
}

fn finalize(
    reduced: Reduced,
    plan: &Plan,
    record_dt: f64,
    times: &[f64],
) -> Result<EnsembleEstimates, EstimatorError> {
    let pooled = &reduced.pooled;
    if pooled.count == 0 {
        return Err(EstimatorError::EmptyStationaryWindow { burn_in: 0.0 });
    }
    let nb = pooled.batches.len();
    if nb < 2 {
        return Err(EstimatorError::TooFewBatches { got: nb });
    }
    let inv = 1.0 / pooled.count as f64;
    let (_, se_re) = mean_and_se(pooled.batches.iter().map(|b| b.re_b), nb);
    let (_, se_im) = mean_and_se(pooled.batches.iter().map(|b| b.im_b), nb);
    let (_, se_b2) = mean_and_se(pooled.batches.iter().map(|b| b.abs_b2), nb);
    let (_, se_b4) = mean_and_se(pooled.batches.iter().map(|b| b.abs_b4), nb);
    let (_, se_m2) = mean_and_se(pooled.batches.iter().map(|b| b.abs_m2), nb);
    let (w_plus, se_wp) = mean_and_se(pooled.batches.iter().map(|b| b.w_plus), nb);
    let (w_minus, se_wm) = mean_and_se(pooled.batches.iter().map(|b| b.w_minus), nb);
    let moments = EnsembleMoments {
        mean_b: pooled.sum_b * inv,
        e_abs_b2: pooled.sum_b2 * inv,
        e_abs_b4: pooled.sum_b4 * inv,
        e_abs_m2: pooled.sum_m2 * inv,
        n_eff: nb,
        se_mean_b: (se_re * se_re + se_im * se_im).sqrt(),
        se_abs_b2: se_b2,
        se_abs_b4: se_b4,
        se_abs_m2: se_m2,
    };
    debug_assert!(moments.e_abs_b4 >= moments.e_abs_b2 * moments.e_abs_b2 * (1.0 - 1e-12));
    let quadrature_parts = QuadratureParts {
        mean_q_plus: pooled.sum_qp * inv,
        mean_q_minus: pooled.sum_qm * inv,
        w_plus,
        se_w_plus: se_wp,
        w_minus,
        se_w_minus: se_wm,
    };

    let correlation = if plan.lag_indices.is_empty() {
        None
    } else {
        let n_traj = reduced.n_traj;
        let n_lags = plan.lag_indices.len();
        let mut values = Vec::with_capacity(n_lags);
        let mut se = Vec::with_capacity(n_lags);
        for l in 0..n_lags {
            let (re, se_re) =
                mean_and_se(reduced.per_traj.iter().map(|t| t.lag_means[l].re), n_traj);
            let (im, se_im) =
                mean_and_se(reduced.per_traj.iter().map(|t| t.lag_means[l].im), n_traj);
            values.push(Complex64::new(re, im));
            se.push(if n_traj > 1 {
                (se_re * se_re + se_im * se_im).sqrt()
            } else {
                f64::NAN
            });
        }
        Some(CorrelationEstimate {
            lags: plan.lag_indices.iter().map(|&k| k as f64 * record_dt).collect(),
            values,
            se,
            n_traj,
        })
    };

    let mean_series = reduced.pooled.series.as_ref().map(|s| {
        let n_traj = reduced.n_traj as f64;
        let mut mean_m = Vec::with_capacity(s.sum_m.len());
        let mut mean_b = Vec::with_capacity(s.sum_b.len());
        let mut se_m = Vec::with_capacity(s.sum_m.len());
        let mut se_b = Vec::with_capacity(s.sum_b.len());
        for i in 0..s.sum_m.len() {
            let mm = s.sum_m[i] / n_traj;
            let mb = s.sum_b[i] / n_traj;
            mean_m.push(mm);
            mean_b.push(mb);
            // spread of the complex samples about their mean
            let var_m = (s.sq_m[i] / n_traj - mm.norm_sqr()).max(0.0);
            let var_b = (s.sq_b[i] / n_traj - mb.norm_sqr()).max(0.0);
            se_m.push((var_m / n_traj).sqrt());
            se_b.push((var_b / n_traj).sqrt());
        }
        MeanFieldSeries {
            times: times.to_vec(),
            mean_m,
            se_m,
            mean_b,
            se_b,
        }
    });

    Ok(EnsembleEstimates {
        moments,
        quadrature_parts,
        correlation,
        mean_series,
    })
}

/// Simulate the configured ensemble and reduce it to estimates without
/// keeping trajectories around: each trajectory is accumulated as soon as
/// it is produced, in waves, and merged in index order so the result is
/// independent of thread scheduling.
pub fn run_ensemble(
    params: &LaserParams,
    config: &SimConfig,
    req: &EstimateRequest,
) -> Result<EnsembleEstimates, EstimatorError> {
    config.validate(params)?;
    let required = required_burn_in(params);
    if config.burn_in < required {
        return Err(EstimatorError::BurnInTooShort {
            required,
            got: config.burn_in,
        });
    }
    // probe one trajectory for the recording grid
    let probe = simulate_trajectory(params, config, 0);
    let record_dt = probe.record_dt;
    let burn_start = probe.stationary_start(config.burn_in);
    if burn_start >= probe.len() {
        return Err(EstimatorError::EmptyStationaryWindow {
            burn_in: config.burn_in,
        });
    }
    let plan = make_plan(probe.len(), record_dt, burn_start, req)?;
    let times = probe.times.clone();

    let mut pooled: Option<TrajStats> = None;
    let mut per_traj: Vec<TrajStats> = Vec::new();
    let keep_lags = !plan.lag_indices.is_empty();
    let mut start = 0u64;
    while start < config.n_traj {
        let end = (start + CHUNK).min(config.n_traj);
        let wave: Vec<TrajStats> = (start..end)
            .into_par_iter()
            .map(|i| {
                let traj = if i == 0 {
                    probe.clone()
                } else {
                    simulate_trajectory(params, config, i)
                };
                accumulate_trajectory(&traj, &plan)
            })
            .collect();
        for mut stats in wave {
            match pooled.as_mut() {
                None => {
                    pooled = Some(stats.clone());
                    if !keep_lags {
                        stats.lag_means = Vec::new();
                    }
                    stats.series = None;
                    stats.batches = Vec::new();
                    per_traj.push(stats);
                }
                Some(p) => {
                    merge(p, &stats);
                    stats.series = None;
                    stats.batches = Vec::new();
                    per_traj.push(stats);
                }
            }
        }
        start = end;
    }
    let pooled = pooled.ok_or(EstimatorError::EmptyInput)?;
    let n_traj = per_traj.len();
    finalize(
        Reduced {
            pooled,
            per_traj,
            n_traj,
        },
        &plan,
        record_dt,
        &times,
    )
}

fn reduce_slices(
    trajectories: &[Trajectory],
    burn_in: f64,
    req: &EstimateRequest,
) -> Result<EnsembleEstimates, EstimatorError> {
    let first = trajectories.first().ok_or(EstimatorError::EmptyInput)?;
    let record_dt = first.record_dt;
    if trajectories
        .iter()
        .any(|t| t.len() != first.len() || t.record_dt != record_dt)
    {
        return Err(EstimatorError::MismatchedTrajectories);
    }
    let burn_start = first.stationary_start(burn_in);
    if burn_start >= first.len() {
        return Err(EstimatorError::EmptyStationaryWindow { burn_in });
    }
    let plan = make_plan(first.len(), record_dt, burn_start, req)?;
    let mut pooled: Option<TrajStats> = None;
    let mut per_traj = Vec::with_capacity(trajectories.len());
    for traj in trajectories {
        let mut stats = accumulate_trajectory(traj, &plan);
        match pooled.as_mut() {
            None => pooled = Some(stats.clone()),
            Some(p) => merge(p, &stats),
        }
        stats.series = None;
        stats.batches = Vec::new();
        per_traj.push(stats);
    }
    let n_traj = per_traj.len();
    finalize(
        Reduced {
            pooled: pooled.unwrap(),
            per_traj,
            n_traj,
        },
        &plan,
        record_dt,
        &first.times,
    )
}

/// Stationary moments of recorded trajectories.
pub fn estimate_moments(
    trajectories: &[Trajectory],
    burn_in: f64,
    batch_len: f64,
) -> Result<EnsembleMoments, EstimatorError> {
    let req = EstimateRequest {
        batch_len,
        correlation: None,
        mean_series: false,
    };
    Ok(reduce_slices(trajectories, burn_in, &req)?.moments)
}

/// Photon-number variance: the simulated normally-ordered intensity times
/// the analytic antinormal factor `(gamma_c / kappa) n_b`.
pub fn estimate_photon_variance(
    moments: &EnsembleMoments,
    n_b: f64,
    params: &LaserParams,
) -> Result<PhotonVarianceEstimate, EstimatorError> {
    if n_b.is_nan() || n_b < 0.0 {
        return Err(EstimatorError::NegativeAntinormalInput(n_b));
    }
    let antinormal = params.gamma_c() / params.kappa * n_b;
    Ok(PhotonVarianceEstimate {
        value: moments.e_abs_b2 * antinormal,
        se: moments.se_abs_b2 * antinormal,
    })
}

/// Attach the antinormal factor to the measured quadrature fluctuations:
/// `var_pm = <q_pm^2> - <q_pm>^2 - E|b|^2 + (gamma_c / kappa) n_b`,
/// whose expectation is `E|b|^2 + (gamma_c / kappa) n_b`.
pub fn assemble_quadrature_variances(
    estimates: &EnsembleEstimates,
    params: &LaserParams,
    n_b: f64,
) -> Result<QuadratureEstimate, EstimatorError> {
    if n_b.is_nan() || n_b < 0.0 {
        return Err(EstimatorError::NegativeAntinormalInput(n_b));
    }
    let antinormal = params.gamma_c() / params.kappa * n_b;
    let parts = &estimates.quadrature_parts;
    let var_plus = parts.w_plus - parts.mean_q_plus * parts.mean_q_plus + antinormal;
    let var_minus = parts.w_minus - parts.mean_q_minus * parts.mean_q_minus + antinormal;
    Ok(QuadratureEstimate {
        var_plus,
        se_plus: parts.se_w_plus,
        var_minus,
        se_minus: parts.se_w_minus,
    })
}

/// Quadrature variances straight from recorded trajectories.
pub fn estimate_quadrature_variances(
    trajectories: &[Trajectory],
    burn_in: f64,
    batch_len: f64,
    params: &LaserParams,
    n_b: f64,
) -> Result<QuadratureEstimate, EstimatorError> {
    let req = EstimateRequest {
        batch_len,
        correlation: None,
        mean_series: false,
    };
    let est = reduce_slices(trajectories, burn_in, &req)?;
    assemble_quadrature_variances(&est, params, n_b)
}

/// Lag products `conj(b(t)) b(t + tau)` averaged over stationary time
/// origins and trajectories.
pub fn estimate_correlation(
    trajectories: &[Trajectory],
    burn_in: f64,
    max_lag: f64,
    n_lags: usize,
) -> Result<CorrelationEstimate, EstimatorError> {
    let first = trajectories.first().ok_or(EstimatorError::EmptyInput)?;
    let t_last = first.times.last().copied().ok_or(EstimatorError::EmptyInput)?;
    let req = EstimateRequest {
        batch_len: (t_last - burn_in).max(first.record_dt) / 2.0,
        correlation: Some(CorrelationRequest { max_lag, n_lags }),
        mean_series: false,
    };
    Ok(reduce_slices(trajectories, burn_in, &req)?
        .correlation
        .expect("correlation was requested"))
}

/// Options for the correlation-to-spectrum transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumOptions {
    /// Strength of the exponential taper `e^{-eps tau}`; zero disables it.
    pub taper_eps: f64,
}

impl SpectrumOptions {
    /// Default taper: one percent of the slower relaxation rate. The bias
    /// it introduces can be quantified by pushing an analytic correlation
    /// curve through the same transform.
    pub fn for_params(params: &LaserParams) -> Self {
        Self {
            taper_eps: 0.01 * params.kappa.min(params.eta()),
        }
    }

    pub fn no_taper() -> Self {
        Self { taper_eps: 0.0 }
    }
}

/// Check that the correlation has decayed enough for its transform to be
/// trustworthy, by fitting an exponential rate over the high-signal lags
/// and extrapolating to the 1% point.
fn check_lag_coverage(corr: &CorrelationEstimate) -> Result<(), EstimatorError> {
    let v0 = corr.values[0].re;
    if v0 == 0.0 {
        // an all-zero correlation transforms to an all-zero spectrum
        return if corr.values.iter().all(|v| v.norm() == 0.0) {
            Ok(())
        } else {
            Err(EstimatorError::InsufficientLagCoverage { required: None })
        };
    }
    if v0 < 0.0 {
        return Err(EstimatorError::InsufficientLagCoverage { required: None });
    }
    // least-squares slope of ln(Re g) over the lags still above 10% of lag 0
    let pts: Vec<(f64, f64)> = corr
        .lags
        .iter()
        .zip(corr.values.iter())
        .filter(|(_, v)| v.re >= 0.1 * v0)
        .map(|(&l, v)| (l, (v.re / v0).ln()))
        .collect();
    if pts.len() < 3 {
        return Err(EstimatorError::InsufficientLagCoverage { required: None });
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom <= 0.0 {
        return Err(EstimatorError::InsufficientLagCoverage { required: None });
    }
    let slope = (n * sxy - sx * sy) / denom;
    let rate = -slope;
    if rate <= 0.0 {
        return Err(EstimatorError::InsufficientLagCoverage { required: None });
    }
    let required = (100.0_f64).ln() / rate;
    let max_lag = *corr.lags.last().unwrap();
    if max_lag + 1e-12 * required < required {
        return Err(EstimatorError::InsufficientLagCoverage {
            required: Some(required),
        });
    }
    Ok(())
}

/// Cosine-transform quadrature of the correlation onto a frequency grid:
/// `P(w) = (1/pi) * trapz_tau Re g(tau) e^{-eps tau} cos(w tau)`.
///
/// Standard errors propagate the per-lag errors through the quadrature
/// weights (cross-lag correlations are ignored, so they are indicative).
pub fn estimate_spectrum(
    corr: &CorrelationEstimate,
    omega_offsets: &[f64],
    opts: SpectrumOptions,
) -> Result<SpectrumEstimate, EstimatorError> {
    if corr.lags.len() < 4 || corr.lags[0] != 0.0 {
        return Err(EstimatorError::NonUniformLags);
    }
    let dtau = corr.lags[1] - corr.lags[0];
    if dtau <= 0.0 {
        return Err(EstimatorError::NonUniformLags);
    }
    for (k, w) in corr.lags.windows(2).enumerate() {
        if ((w[1] - w[0]) - dtau).abs() > 1e-9 * dtau {
            let _ = k;
            return Err(EstimatorError::NonUniformLags);
        }
    }
    if omega_offsets.len() < 2
        || omega_offsets
            .windows(2)
            .any(|w| !(w[0].is_finite() && w[1].is_finite() && w[1] > w[0]))
    {
        return Err(EstimatorError::BadFrequencyGrid);
    }
    check_lag_coverage(corr)?;

    let n = corr.lags.len();
    let tapered: Vec<f64> = corr
        .values
        .iter()
        .zip(corr.lags.iter())
        .map(|(v, &tau)| v.re * (-opts.taper_eps * tau).exp())
        .collect();
    let tapered_se: Vec<f64> = corr
        .se
        .iter()
        .zip(corr.lags.iter())
        .map(|(s, &tau)| s * (-opts.taper_eps * tau).exp())
        .collect();
    let scale = dtau / std::f64::consts::PI;
    let weight = |k: usize| if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
    let mut values = Vec::with_capacity(omega_offsets.len());
    let mut se = Vec::with_capacity(omega_offsets.len());
    for &w in omega_offsets {
        let mut acc = 0.0;
        let mut var = 0.0;
        for k in 0..n {
            let c = weight(k) * (w * corr.lags[k]).cos();
            acc += c * tapered[k];
            let term = c * tapered_se[k];
            var += term * term;
        }
        values.push(scale * acc);
        se.push(scale * var.sqrt());
    }
    let resolution =
        (omega_offsets[omega_offsets.len() - 1] - omega_offsets[0]) / (omega_offsets.len() - 1) as f64;
    let window_id = if opts.taper_eps == 0.0 {
        "none".to_string()
    } else {
        format!("exp_taper(eps={:.6e})", opts.taper_eps)
    };
    Ok(SpectrumEstimate {
        omega_offsets: omega_offsets.to_vec(),
        values,
        se,
        resolution,
        window_id,
    })
}
