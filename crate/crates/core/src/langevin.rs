//! Stochastic c-number dynamics of the collective polarization and the
//! cavity field.
//!
//! The polarization amplitude `m` relaxes at `eta / 2` and is driven by a
//! complex white noise whose discrete correlation reproduces
//! `E[f* f] = r_a N^2 dt` (the normally-ordered reservoir correlation; all
//! simulated field moments are therefore normally-ordered equivalents, and
//! antinormally-ordered factors are assembled from population output
//! elsewhere). The cavity field `b` is damped at `kappa / 2` and driven by
//! `m` alone; the vacuum port contributes no noise in this ordering.
//!
//! `m` is an Ornstein-Uhlenbeck process, so its default update is the exact
//! one-step transition (no step-size bias at any `dt`); an Euler-Maruyama
//! update is retained for cross-validation. The `b` update integrates the
//! cavity decay exactly and holds `m` at its step-start value, which keeps
//! the full mode stable at large `kappa * dt`.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use thiserror::Error;

use crate::model::LaserParams;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("integration step must be positive and finite, got {0}")]
    InvalidDt(f64),
    #[error("trajectory length must exceed the step, got t_end = {0}")]
    InvalidTEnd(f64),
    #[error("burn-in must be non-negative and shorter than t_end, got {0}")]
    InvalidBurnIn(f64),
    #[error("ensemble needs at least one trajectory")]
    NoTrajectories,
    #[error("record stride must be at least 1")]
    InvalidStride,
    #[error(
        "euler m-update is unstable/inaccurate at dt * max(kappa, eta) = {product:.3} (limit 0.1)"
    )]
    EulerStability { product: f64 },
    #[error("run would cost {required} field samples, over the budget of {budget}")]
    SampleBudget { required: u64, budget: u64 },
}

/// Whether the cavity field carries its own dynamics or is slaved to the
/// polarization through the steady-state relation `b = 2g/(kappa sqrt(N)) m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Full,
    Adiabatic,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Full => "full",
            Mode::Adiabatic => "adiabatic",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(Mode::Full),
            "adiabatic" => Ok(Mode::Adiabatic),
            other => Err(format!("unknown mode '{other}' (expected full|adiabatic)")),
        }
    }
}

/// Update rule for the polarization amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MUpdate {
    ExactOu,
    Euler,
}

impl std::fmt::Display for MUpdate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MUpdate::ExactOu => "exact_ou",
            MUpdate::Euler => "euler",
        })
    }
}

impl std::str::FromStr for MUpdate {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact_ou" => Ok(MUpdate::ExactOu),
            "euler" => Ok(MUpdate::Euler),
            other => Err(format!(
                "unknown m_update '{other}' (expected exact_ou|euler)"
            )),
        }
    }
}

/// Simulation configuration shared by every trajectory of an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    pub burn_in: f64,
    pub n_traj: u64,
    pub seed: u64,
    pub mode: Mode,
    pub m_update: MUpdate,
    /// Record every this-many integration steps.
    pub record_stride: u32,
    /// Hard cap on `n_traj * steps`; violations are caught before any
    /// trajectory runs.
    pub sample_budget: u64,
    pub initial_m: Complex64,
    pub initial_b: Complex64,
}

pub const DEFAULT_SAMPLE_BUDGET: u64 = 2_000_000_000;

impl SimConfig {
    /// Baseline configuration; callers override the fields they care about.
    pub fn new(dt: f64, t_end: f64, burn_in: f64, n_traj: u64, seed: u64) -> Self {
        Self {
            dt,
            t_end,
            burn_in,
            n_traj,
            seed,
            mode: Mode::Adiabatic,
            m_update: MUpdate::ExactOu,
            record_stride: 1,
            sample_budget: DEFAULT_SAMPLE_BUDGET,
            initial_m: Complex64::ZERO,
            initial_b: Complex64::ZERO,
        }
    }

    /// Number of integration steps per trajectory.
    pub fn steps(&self) -> u64 {
        ((self.t_end / self.dt) - 1e-9).ceil().max(1.0) as u64
    }

    /// Spacing of recorded samples.
    pub fn record_dt(&self) -> f64 {
        self.dt * self.record_stride as f64
    }

    pub fn validate(&self, params: &LaserParams) -> Result<(), SimError> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(SimError::InvalidDt(self.dt));
        }
        if !(self.t_end.is_finite() && self.t_end >= self.dt) {
            return Err(SimError::InvalidTEnd(self.t_end));
        }
        if !(self.burn_in >= 0.0 && self.burn_in < self.t_end) {
            return Err(SimError::InvalidBurnIn(self.burn_in));
        }
        if self.n_traj == 0 {
            return Err(SimError::NoTrajectories);
        }
        if self.record_stride == 0 {
            return Err(SimError::InvalidStride);
        }
        if self.m_update == MUpdate::Euler {
            let product = self.dt * params.kappa.max(params.eta());
            if product > 0.1 {
                return Err(SimError::EulerStability { product });
            }
        }
        let required = self.n_traj.saturating_mul(self.steps());
        if required > self.sample_budget {
            return Err(SimError::SampleBudget {
                required,
                budget: self.sample_budget,
            });
        }
        Ok(())
    }
}

/// Instantaneous field state: polarization `m`, cavity amplitude `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldState {
    pub m: Complex64,
    pub b: Complex64,
    pub t: f64,
}

/// Cavity amplitude slaved to the polarization, `b = 2g/(kappa sqrt(N)) m`.
#[inline]
pub fn slave_b(params: &LaserParams, m: Complex64) -> Complex64 {
    2.0 * params.g / (params.kappa * params.n().sqrt()) * m
}

/// One complex Gaussian noise increment over `dt`: zero mean, independent
/// real and imaginary parts of variance `r_a N^2 dt / 2` each, so that
/// `E[f* f] = r_a N^2 dt` and `E[f f] = 0`.
pub fn noise_sample<R: Rng + ?Sized>(params: &LaserParams, dt: f64, rng: &mut R) -> Complex64 {
    if params.pump_rate == 0.0 {
        return Complex64::ZERO;
    }
    let sigma = (0.5 * params.pump_rate * params.n() * params.n() * dt).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(sigma * re, sigma * im)
}

/// Advance the polarization by one step.
///
/// `exact_ou` draws from the exact one-step transition of the
/// Ornstein-Uhlenbeck process (decay `e^{-eta dt/2}` plus a Gaussian of
/// total variance `(r_a N^2 / eta)(1 - e^{-eta dt})`); `euler` applies the
/// Euler-Maruyama update. Both leave the stationary second moment at
/// `E|m|^2 = r_a N^2 / eta`.
pub fn step_m<R: Rng + ?Sized>(
    m: Complex64,
    params: &LaserParams,
    config: &SimConfig,
    rng: &mut R,
) -> Complex64 {
    let eta = params.eta();
    let dt = config.dt;
    match config.m_update {
        MUpdate::Euler => m - 0.5 * eta * dt * m + noise_sample(params, dt, rng),
        MUpdate::ExactOu => {
            let decay = (-0.5 * eta * dt).exp();
            let decayed = m * decay;
            if params.pump_rate == 0.0 {
                return decayed;
            }
            let total_var =
                params.pump_rate * params.n() * params.n() / eta * (1.0 - decay * decay);
            let sigma = (0.5 * total_var).sqrt();
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            decayed + Complex64::new(sigma * re, sigma * im)
        }
    }
}

/// Advance the cavity field by one step of the full mode: exact decay over
/// `dt` plus the response to the polarization held at its step-start value.
/// No noise acts on `b` directly.
pub fn step_b(b: Complex64, m_start: Complex64, params: &LaserParams, dt: f64) -> Complex64 {
    let half_kappa = 0.5 * params.kappa;
    let decay = (-half_kappa * dt).exp();
    let gain = params.g / params.n().sqrt() * (1.0 - decay) / half_kappa;
    b * decay + gain * m_start
}

/// Trajectory samples recorded on a uniform grid of spacing `record_dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub record_dt: f64,
    pub times: Vec<f64>,
    pub m: Vec<Complex64>,
    pub b: Vec<Complex64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Index of the first recorded sample at or after `burn_in`.
    pub fn stationary_start(&self, burn_in: f64) -> usize {
        self.times.partition_point(|&t| t < burn_in)
    }
}

/// Precomputed one-step transition for a fixed (params, config) pair.
///
/// Arithmetic is kept expression-identical to [`step_m`]/[`step_b`] so a
/// stepper-driven trajectory replays the public step functions bit for bit
/// (checked in the tests).
struct Stepper {
    params: LaserParams,
    config: SimConfig,
}

impl Stepper {
    fn advance<R: Rng + ?Sized>(&self, state: &mut FieldState, rng: &mut R) {
        match self.config.mode {
            Mode::Full => {
                let b_next = step_b(state.b, state.m, &self.params, self.config.dt);
                let m_next = step_m(state.m, &self.params, &self.config, rng);
                state.m = m_next;
                state.b = b_next;
            }
            Mode::Adiabatic => {
                state.m = step_m(state.m, &self.params, &self.config, rng);
                state.b = slave_b(&self.params, state.m);
            }
        }
        state.t += self.config.dt;
    }
}

/// RNG stream for one trajectory: the base seed plus the trajectory index.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(index))
}

/// Integrate a single trajectory from the configured initial state
/// (`m = b = 0` by default: atoms in the lower level, cavity in vacuum),
/// recording every `record_stride` steps. Replays exactly for equal
/// `(seed, index)`.
pub fn simulate_trajectory(params: &LaserParams, config: &SimConfig, index: u64) -> Trajectory {
    let mut rng = trajectory_rng(config.seed, index);
    let stepper = Stepper {
        params: *params,
        config: *config,
    };
    let steps = config.steps();
    let stride = config.record_stride as u64;
    let mut state = FieldState {
        m: config.initial_m,
        b: match config.mode {
            Mode::Adiabatic => slave_b(params, config.initial_m),
            Mode::Full => config.initial_b,
        },
        t: 0.0,
    };
    let n_rec = (steps / stride) as usize + 1;
    let mut times = Vec::with_capacity(n_rec);
    let mut ms = Vec::with_capacity(n_rec);
    let mut bs = Vec::with_capacity(n_rec);
    times.push(0.0);
    ms.push(state.m);
    bs.push(state.b);
    for k in 1..=steps {
        stepper.advance(&mut state, &mut rng);
        if k % stride == 0 {
            times.push(k as f64 * config.dt);
            ms.push(state.m);
            bs.push(state.b);
        }
    }
    Trajectory {
        record_dt: config.record_dt(),
        times,
        m: ms,
        b: bs,
    }
}

/// Simulate the whole ensemble, one independent RNG stream per trajectory.
///
/// Trajectories run in parallel; the returned order is by index, so the
/// result does not depend on scheduling. Prefer the streaming estimators
/// for large ensembles; this materializes every recorded sample.
pub fn simulate_ensemble(
    params: &LaserParams,
    config: &SimConfig,
) -> Result<Vec<Trajectory>, SimError> {
    use rayon::prelude::*;
    config.validate(params)?;
    Ok((0..config.n_traj)
        .into_par_iter()
        .map(|i| simulate_trajectory(params, config, i))
        .collect())
}
