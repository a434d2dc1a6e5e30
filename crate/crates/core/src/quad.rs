//! Adaptive Simpson quadrature.
//!
//! Used for the spectral sum-rule checks and as the independent quadrature
//! oracle behind the closed-form band-fraction results. Lorentzian tails
//! decay slowly, so callers are expected to keep integration windows finite
//! and account for tails analytically.

/// Default absolute tolerance for oracle-grade integrals.
pub const DEFAULT_ABS_TOL: f64 = 1e-12;

const MAX_DEPTH: u32 = 60;

fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let delta = left + right - whole;
    if depth >= MAX_DEPTH || delta.abs() <= 15.0 * tol {
        // Richardson extrapolation of the composite estimate
        return left + right + delta / 15.0;
    }
    adaptive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)
        + adaptive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)
}

/// Integrate `f` over `[a, b]` to absolute tolerance `abs_tol`.
///
/// The interval is pre-split into a handful of panels so that narrow
/// features away from the endpoints are not missed by the first Simpson
/// probe.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, abs_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let panels = 8;
    let h = (b - a) / panels as f64;
    let tol = abs_tol / panels as f64;
    let mut total = 0.0;
    for i in 0..panels {
        let x0 = a + i as f64 * h;
        let x1 = if i == panels - 1 { b } else { x0 + h };
        let xm = 0.5 * (x0 + x1);
        let (f0, fm, f1) = (f(x0), f(xm), f(x1));
        let whole = simpson(f0, fm, f1, x1 - x0);
        total += adaptive(f, x0, x1, f0, fm, f1, whole, tol, 0);
    }
    total
}

/// Integrate `f` over the panels delimited by `breakpoints` (strictly
/// increasing), to absolute tolerance `abs_tol` overall.
///
/// Placing breakpoints at the scale parameters of a peaked integrand keeps
/// the adaptive refinement cheap and reliable.
pub fn integrate_with_breakpoints<F: Fn(f64) -> f64>(
    f: &F,
    breakpoints: &[f64],
    abs_tol: f64,
) -> f64 {
    assert!(
        breakpoints.len() >= 2,
        "need at least two breakpoints to integrate"
    );
    let tol = abs_tol / (breakpoints.len() - 1) as f64;
    breakpoints
        .windows(2)
        .map(|w| integrate(f, w[0], w[1], tol))
        .sum()
}
