//! Atomic level populations under pumping and stimulated emission.
//!
//! The mean populations obey a linear two-level rate equation whose upper
//! level relaxes at `eta = gamma_c + pump_rate` toward `r_a N / eta`; the
//! ODE path evaluates that exponential solution in closed form. The jump
//! path realizes the same rates as a continuous-time Markov chain over the
//! aggregate counts (atoms are exchangeable, so only the counts matter and
//! the cost per event is independent of N).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::model::LaserParams;

/// Cap on the expected number of jump events in one call, to catch
/// accidentally huge rate * time products before they start running.
pub const MAX_JUMP_EVENTS: u64 = 50_000_000;

/// Cap on the number of samples one rate-equation evolution may emit.
pub const MAX_ODE_SAMPLES: u64 = 50_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum PopulationError {
    #[error("initial state invalid: n_a = {n_a}, n_b = {n_b} for N = {n_atoms}")]
    InvalidInitialState { n_a: f64, n_b: f64, n_atoms: u64 },
    #[error("jump process needs an integer-valued initial upper count, got {0}")]
    NonIntegerInitial(f64),
    #[error("evolution time must be positive, got {0}")]
    InvalidTime(f64),
    #[error("sampling step must be positive, got {0}")]
    InvalidStep(f64),
    #[error("expected ~{expected} jump events exceeds the budget of {budget}")]
    EventBudget { expected: u64, budget: u64 },
    #[error("t_end / dt_max asks for {requested} samples, over the cap of {cap}")]
    SampleCap { requested: u64, cap: u64 },
    #[error("stationary window is empty: burn-in {burn_in} leaves no samples before t = {t_end}")]
    EmptyWindow { burn_in: f64, t_end: f64 },
    #[error("need at least two full batches of length {batch_len} in the window, got {got}")]
    TooFewBatches { batch_len: f64, got: usize },
}

/// Level populations at one instant. `n_a + n_b = N` always.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PopulationState {
    pub n_a: f64,
    pub n_b: f64,
    pub t: f64,
}

impl PopulationState {
    pub fn new(n_a: f64, n_b: f64, t: f64) -> Self {
        Self { n_a, n_b, t }
    }

    fn validate(&self, params: &LaserParams) -> Result<(), PopulationError> {
        let n = params.n();
        let ok = self.n_a.is_finite()
            && self.n_b.is_finite()
            && self.n_a >= 0.0
            && self.n_a <= n
            && (self.n_a + self.n_b - n).abs() <= 1e-9 * n;
        if ok {
            Ok(())
        } else {
            Err(PopulationError::InvalidInitialState {
                n_a: self.n_a,
                n_b: self.n_b,
                n_atoms: params.n_atoms,
            })
        }
    }
}

/// Steady-state upper-level population `r_a N / eta`.
pub fn ode_fixed_point(params: &LaserParams) -> f64 {
    if params.pump_rate == 0.0 {
        return 0.0;
    }
    params.pump_rate * params.n() / params.eta()
}

/// Default burn-in for stationary averages: ten relaxation times.
pub fn default_burn_in(params: &LaserParams) -> f64 {
    10.0 / params.eta()
}

/// Evolve the mean populations over `[0, t_end]`, sampled at a uniform step
/// no larger than `dt_max`.
///
/// The rate equation is linear and scalar, so the samples come from the
/// exact exponential solution
/// `n_a(t) = n_a(inf) + (n_a(0) - n_a(inf)) e^{-eta t}`; a generic
/// high-order integrator exists only as a test oracle.
pub fn ode_evolve(
    params: &LaserParams,
    initial: PopulationState,
    t_end: f64,
    dt_max: f64,
) -> Result<Vec<PopulationState>, PopulationError> {
    initial.validate(params)?;
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(PopulationError::InvalidTime(t_end));
    }
    if !(dt_max.is_finite() && dt_max > 0.0) {
        return Err(PopulationError::InvalidStep(dt_max));
    }
    let eta = params.eta();
    let n = params.n();
    let n_inf = ode_fixed_point(params);
    let raw_steps = (t_end / dt_max).ceil().max(1.0);
    if raw_steps > MAX_ODE_SAMPLES as f64 {
        return Err(PopulationError::SampleCap {
            requested: raw_steps as u64,
            cap: MAX_ODE_SAMPLES,
        });
    }
    let steps = raw_steps as usize;
    let dt = t_end / steps as f64;
    let mut out = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = k as f64 * dt;
        let n_a = n_inf + (initial.n_a - n_inf) * (-eta * t).exp();
        out.push(PopulationState::new(n_a, n - n_a, t));
    }
    Ok(out)
}

/// Event record of one continuous-time Markov chain realization.
///
/// `n_a[i]` holds the upper-level count on `[times[i], times[i+1])`
/// (right-continuous, piecewise constant); the last value extends to
/// `t_end`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpTrajectory {
    pub times: Vec<f64>,
    pub n_a: Vec<u64>,
    pub n_atoms: u64,
    pub t_end: f64,
}

impl JumpTrajectory {
    pub fn n_events(&self) -> usize {
        self.times.len().saturating_sub(1)
    }

    /// Populations at each recorded event time.
    pub fn states<'a>(&'a self) -> impl Iterator<Item = PopulationState> + 'a {
        self.times.iter().zip(self.n_a.iter()).map(|(&t, &na)| {
            PopulationState::new(na as f64, (self.n_atoms - na) as f64, t)
        })
    }
}

/// Realize the pump/decay dynamics as an exact jump process on the
/// aggregate counts: upward rate `r_a n_b`, downward rate `gamma_c n_a`,
/// exponential waiting times. Equal seeds replay identically.
pub fn jump_evolve(
    params: &LaserParams,
    initial: PopulationState,
    t_end: f64,
    seed: u64,
) -> Result<JumpTrajectory, PopulationError> {
    initial.validate(params)?;
    if initial.n_a.fract() != 0.0 {
        return Err(PopulationError::NonIntegerInitial(initial.n_a));
    }
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(PopulationError::InvalidTime(t_end));
    }
    let n = params.n_atoms;
    let gamma_c = params.gamma_c();
    let r_a = params.pump_rate;
    // worst-case total rate bounds the expected event count
    let expected = ((r_a + gamma_c) * params.n() * t_end).ceil();
    if expected > MAX_JUMP_EVENTS as f64 {
        return Err(PopulationError::EventBudget {
            expected: expected as u64,
            budget: MAX_JUMP_EVENTS,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut n_a = initial.n_a as u64;
    let mut t = 0.0_f64;
    let mut times = vec![0.0];
    let mut counts = vec![n_a];
    loop {
        let up = r_a * (n - n_a) as f64;
        let down = gamma_c * n_a as f64;
        let total = up + down;
        if total <= 0.0 {
            break; // absorbing: both rates zero
        }
        // inverse-CDF exponential waiting time
        let u: f64 = rng.random();
        let wait = -(1.0 - u).ln() / total;
        t += wait;
        if t >= t_end {
            break;
        }
        let pick: f64 = rng.random();
        if pick * total < up {
            n_a += 1;
        } else {
            n_a -= 1;
        }
        times.push(t);
        counts.push(n_a);
    }
    Ok(JumpTrajectory {
        times,
        n_a: counts,
        n_atoms: n,
        t_end,
    })
}

/// Time-weighted stationary average with a batch-means standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeAverage {
    pub mean: f64,
    pub se: f64,
    pub n_batches: usize,
    pub window: f64,
}

/// Average `n_a` over `[burn_in, t_end]`, splitting the window into equal
/// batches of length `batch_len` whose means feed the standard error.
/// Trailing time that does not fill a whole batch is dropped.
pub fn jump_time_average(
    traj: &JumpTrajectory,
    burn_in: f64,
    batch_len: f64,
) -> Result<TimeAverage, PopulationError> {
    if !(batch_len.is_finite() && batch_len > 0.0) {
        return Err(PopulationError::InvalidStep(batch_len));
    }
    let window = traj.t_end - burn_in;
    if window <= 0.0 {
        return Err(PopulationError::EmptyWindow {
            burn_in,
            t_end: traj.t_end,
        });
    }
    let n_batches = (window / batch_len).floor() as usize;
    if n_batches < 2 {
        return Err(PopulationError::TooFewBatches {
            batch_len,
            got: n_batches,
        });
    }
    let mut batch_sums = vec![0.0_f64; n_batches];
    let horizon = burn_in + n_batches as f64 * batch_len;
    // piecewise-constant integration of n_a over each batch interval
    for i in 0..traj.times.len() {
        let seg_start = traj.times[i];
        let seg_end = if i + 1 < traj.times.len() {
            traj.times[i + 1]
        } else {
            traj.t_end
        };
        let lo = seg_start.max(burn_in);
        let hi = seg_end.min(horizon);
        if hi <= lo {
            continue;
        }
        let value = traj.n_a[i] as f64;
        let mut b = ((lo - burn_in) / batch_len).floor() as usize;
        let mut cursor = lo;
        while cursor < hi && b < n_batches {
            let batch_end = burn_in + (b + 1) as f64 * batch_len;
            let stop = hi.min(batch_end);
            batch_sums[b] += value * (stop - cursor);
            cursor = stop;
            b += 1;
        }
    }
    let means: Vec<f64> = batch_sums.iter().map(|s| s / batch_len).collect();
    let mean = means.iter().sum::<f64>() / n_batches as f64;
    let var = means.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>()
        / (n_batches - 1) as f64;
    let se = (var / n_batches as f64).sqrt();
    Ok(TimeAverage {
        mean,
        se,
        n_batches,
        window: n_batches as f64 * batch_len,
    })
}
