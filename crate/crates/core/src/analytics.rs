//! Closed-form steady-state and spectral quantities of the two-level laser.
//!
//! Everything here is a pure function of [`LaserParams`]. The two cavity
//! rates that shape the field dynamics are the damping `kappa` and the
//! polarization relaxation `eta = gamma_c + pump_rate`; the two-time
//! correlation, the power spectrum, and the band fraction all degenerate
//! when `kappa == eta`, so each of those carries a removable-singularity
//! branch (limits obtained by l'Hopital and checked against an epsilon
//! perturbation of the direct formula in the test suite).

use serde::Serialize;

use crate::model::{classify_regime, LaserParams, ModelError, Regime};
use crate::quad;

/// Relative separation of `kappa` and `eta` below which the degenerate
/// closed limits replace the direct formulas. Below this the direct forms
/// lose precision to catastrophic cancellation.
pub const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AnalyticsError {
    #[error("correlation lag must be non-negative, got {0}")]
    NegativeLag(f64),
    #[error("band half-width must be non-negative, got {0}")]
    NegativeBandHalfwidth(f64),
    #[error("frequency offset must be finite, got {0}")]
    NonFiniteFrequency(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[inline]
fn is_degenerate(kappa: f64, eta: f64) -> bool {
    (kappa - eta).abs() <= DEGENERACY_TOL * kappa.max(eta)
}

/// Mean steady-state level populations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Populations {
    /// Mean upper-level atom count.
    pub n_a: f64,
    /// Mean lower-level atom count.
    pub n_b: f64,
}

/// Steady-state mean populations `n_a = r_a N / eta`, `n_b = N - n_a`.
///
/// Zero pump leaves every atom in the lower level.
pub fn steady_populations(params: &LaserParams) -> Populations {
    let n = params.n();
    if params.pump_rate == 0.0 {
        return Populations { n_a: 0.0, n_b: n };
    }
    let n_a = params.pump_rate * n / params.eta();
    Populations { n_a, n_b: n - n_a }
}

/// Steady-state mean photon number `(gamma_c / kappa) * n_a`.
pub fn mean_photon_number(params: &LaserParams) -> f64 {
    params.gamma_c() / params.kappa * steady_populations(params).n_a
}

/// Normally-ordered photon-number variance `(gamma_c / kappa)^2 * n_a * n_b`.
///
/// Equals `nbar^2` at threshold (chaotic light) and vanishes well above
/// threshold (coherent light).
pub fn photon_variance(params: &LaserParams) -> f64 {
    let pops = steady_populations(params);
    let scale = params.gamma_c() / params.kappa;
    scale * scale * pops.n_a * pops.n_b
}

/// Quadrature variances and the uncertainty-product lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureVariances {
    pub var_plus: f64,
    pub var_minus: f64,
    /// Lower bound on the product of the quadrature uncertainties,
    /// `(gamma_c / kappa) * |n_a - n_b|`.
    pub ub_product: f64,
}

/// Variances of the two field quadratures, `(gamma_c / kappa) (n_a + n_b)`
/// each, plus the uncertainty bound they must satisfy.
pub fn quadrature_variances(params: &LaserParams) -> QuadratureVariances {
    let pops = steady_populations(params);
    let scale = params.gamma_c() / params.kappa;
    let var = scale * (pops.n_a + pops.n_b);
    QuadratureVariances {
        var_plus: var,
        var_minus: var,
        ub_product: scale * (pops.n_a - pops.n_b).abs(),
    }
}

/// Steady-state two-time field correlation `<b*(t) b(t+tau)>` (real).
///
/// Direct form: `nbar [kappa e^{-eta tau/2} - eta e^{-kappa tau/2}] / (kappa - eta)`;
/// at `kappa == eta` the removable singularity is replaced by
/// `nbar (1 + kappa tau / 2) e^{-kappa tau / 2}`.
pub fn correlation_g1(params: &LaserParams, tau: f64) -> Result<f64, AnalyticsError> {
    if tau.is_nan() || tau < 0.0 {
        return Err(AnalyticsError::NegativeLag(tau));
    }
    let kappa = params.kappa;
    let eta = params.eta();
    let nbar = mean_photon_number(params);
    if is_degenerate(kappa, eta) {
        return Ok(nbar * (1.0 + 0.5 * kappa * tau) * (-0.5 * kappa * tau).exp());
    }
    let value = (kappa * (-0.5 * eta * tau).exp() - eta * (-0.5 * kappa * tau).exp())
        / (kappa - eta);
    Ok(nbar * value)
}

/// Steady-state power spectrum `P(omega)` in photons per unit angular
/// frequency, as a function of the offset `w = omega - omega0`.
///
/// Difference of two unit-area Lorentzians of half-widths `eta/2` and
/// `kappa/2`, weighted by `kappa/(kappa-eta)` and `eta/(kappa-eta)`; the
/// convention is such that the spectrum integrates to the mean photon
/// number. The `kappa == eta` branch is the closed limit.
pub fn power_spectrum(params: &LaserParams, omega_offset: f64) -> Result<f64, AnalyticsError> {
    if !omega_offset.is_finite() {
        return Err(AnalyticsError::NonFiniteFrequency(omega_offset));
    }
    let kappa = params.kappa;
    let eta = params.eta();
    let nbar = mean_photon_number(params);
    let w2 = omega_offset * omega_offset;
    if is_degenerate(kappa, eta) {
        let hk = 0.5 * kappa;
        let denom = w2 + hk * hk;
        return Ok(nbar / std::f64::consts::PI
            * (hk / denom + hk * (hk * hk - w2) / (denom * denom)));
    }
    let lor = |rate: f64| (0.5 * rate / std::f64::consts::PI) / (w2 + 0.25 * rate * rate);
    Ok(nbar * (kappa * lor(eta) - eta * lor(kappa)) / (kappa - eta))
}

/// Fraction of the total mean photon number within `+-lambda` of the
/// central frequency.
///
/// `z(0) = 0`, `z` increases strictly, and `z -> 1` as the half-width
/// grows. The `kappa == eta` branch is the closed limit of the direct
/// arctangent form.
pub fn band_fraction_z(params: &LaserParams, band_halfwidth: f64) -> Result<f64, AnalyticsError> {
    if band_halfwidth.is_nan() || band_halfwidth < 0.0 {
        return Err(AnalyticsError::NegativeBandHalfwidth(band_halfwidth));
    }
    let kappa = params.kappa;
    let eta = params.eta();
    let lam = band_halfwidth;
    if is_degenerate(kappa, eta) {
        return Ok((4.0 * kappa * lam / (kappa * kappa + 4.0 * lam * lam)
            + 2.0 * (2.0 * lam / kappa).atan())
            / std::f64::consts::PI);
    }
    let two_over_pi = 2.0 / std::f64::consts::PI;
    Ok(two_over_pi / (kappa - eta)
        * (kappa * (2.0 * lam / eta).atan() - eta * (2.0 * lam / kappa).atan()))
}

/// Mean photon number within `+-lambda` of the central frequency:
/// `nbar * z(lambda)`.
pub fn band_photon_number(params: &LaserParams, band_halfwidth: f64) -> Result<f64, AnalyticsError> {
    Ok(mean_photon_number(params) * band_fraction_z(params, band_halfwidth)?)
}

/// Numerical quadrature of the power spectrum over `[-l, l]`.
///
/// Independent cross-check route for [`band_photon_number`] and the
/// spectral sum rule; breakpoints are placed at the Lorentzian scale
/// parameters so the adaptive scheme resolves the peak.
pub fn integrate_spectrum(params: &LaserParams, l: f64, abs_tol: f64) -> f64 {
    if l == 0.0 {
        return 0.0;
    }
    let kappa = params.kappa;
    let eta = params.eta();
    let mut pts: Vec<f64> = [
        0.0,
        0.5 * eta,
        -0.5 * eta,
        0.5 * kappa,
        -0.5 * kappa,
        eta,
        -eta,
        kappa,
        -kappa,
    ]
    .into_iter()
    .filter(|x| x.abs() < l)
    .collect();
    pts.push(-l);
    pts.push(l);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    let f = |w: f64| power_spectrum(params, w).expect("finite grid point");
    quad::integrate_with_breakpoints(&f, &pts, abs_tol)
}

/// Every closed-form steady-state quantity for one parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyStateReport {
    pub n_a: f64,
    pub n_b: f64,
    pub nbar: f64,
    pub dn2: f64,
    pub var_plus: f64,
    pub var_minus: f64,
    pub ub_product: f64,
    pub regime: Regime,
}

/// Evaluate the full steady-state report, including the regime tag.
pub fn steady_state_report(
    params: &LaserParams,
    tol_rel: f64,
    eps_wat: f64,
) -> Result<SteadyStateReport, AnalyticsError> {
    let regime = classify_regime(params, tol_rel, eps_wat)?;
    let pops = steady_populations(params);
    let quads = quadrature_variances(params);
    Ok(SteadyStateReport {
        n_a: pops.n_a,
        n_b: pops.n_b,
        nbar: mean_photon_number(params),
        dn2: photon_variance(params),
        var_plus: quads.var_plus,
        var_minus: quads.var_minus,
        ub_product: quads.ub_product,
        regime,
    })
}

/// Power spectrum sampled on a frequency-offset grid.
///
/// Positivity over the sampled grid is checked numerically and any
/// violations are reported rather than asserted away.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumCurve {
    pub omega_offsets: Vec<f64>,
    pub values: Vec<f64>,
    pub params_echo: LaserParams,
    /// Indices of grid points with negative spectrum values, if any.
    pub positivity_violations: Vec<usize>,
}

/// Sample the power spectrum on the given offsets.
pub fn spectrum_curve(
    params: &LaserParams,
    omega_offsets: &[f64],
) -> Result<SpectrumCurve, AnalyticsError> {
    let mut values = Vec::with_capacity(omega_offsets.len());
    let mut positivity_violations = Vec::new();
    for (i, &w) in omega_offsets.iter().enumerate() {
        let v = power_spectrum(params, w)?;
        if v < 0.0 {
            positivity_violations.push(i);
        }
        values.push(v);
    }
    Ok(SpectrumCurve {
        omega_offsets: omega_offsets.to_vec(),
        values,
        params_echo: *params,
        positivity_violations,
    })
}
