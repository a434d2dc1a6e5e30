//! Laser parameters, derived rate constants, and operating-regime
//! classification.
//!
//! All rates are reciprocal-time quantities in one user-chosen unit; the
//! toolkit is unit-agnostic and every dimensionless output depends only on
//! rate ratios.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default relative tolerance for declaring the pump rate equal to the
/// stimulated-emission decay constant.
pub const DEFAULT_TOL_REL: f64 = 1e-6;

/// Default cut for "well above threshold": `gamma_c <= eps_wat * pump_rate`.
///
/// At this ratio the strong-pumping limits for the photon statistics hold to
/// better than one percent.
pub const DEFAULT_EPS_WAT: f64 = 1e-2;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("coupling constant g must be positive and finite, got {0}")]
    InvalidCoupling(f64),
    #[error("cavity damping rate kappa must be positive and finite, got {0}")]
    InvalidKappa(f64),
    #[error("pump rate must be non-negative and finite, got {0}")]
    InvalidPumpRate(f64),
    #[error("atom count must be at least 1, got {0}")]
    InvalidAtomCount(u64),
    #[error("central frequency omega0 must be finite, got {0}")]
    InvalidOmega0(f64),
    #[error("{name} must lie strictly in (0, 1), got {value}")]
    InvalidTolerance { name: &'static str, value: f64 },
}

/// Physical inputs of the two-level laser model.
///
/// `g` is the atom-field coupling, `kappa` the cavity damping rate,
/// `pump_rate` the per-atom excitation rate, `n_atoms` the number of
/// two-level atoms in the cavity, and `omega0` the central optical
/// frequency (used only as the origin of spectral offsets).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaserParams {
    pub g: f64,
    pub kappa: f64,
    pub pump_rate: f64,
    pub n_atoms: u64,
    pub omega0: f64,
}

impl LaserParams {
    pub fn new(
        g: f64,
        kappa: f64,
        pump_rate: f64,
        n_atoms: u64,
        omega0: f64,
    ) -> Result<Self, ModelError> {
        if !(g.is_finite() && g > 0.0) {
            return Err(ModelError::InvalidCoupling(g));
        }
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(ModelError::InvalidKappa(kappa));
        }
        if !(pump_rate.is_finite() && pump_rate >= 0.0) {
            return Err(ModelError::InvalidPumpRate(pump_rate));
        }
        if n_atoms < 1 {
            return Err(ModelError::InvalidAtomCount(n_atoms));
        }
        if !omega0.is_finite() {
            return Err(ModelError::InvalidOmega0(omega0));
        }
        Ok(Self {
            g,
            kappa,
            pump_rate,
            n_atoms,
            omega0,
        })
    }

    /// Atom count as a float, for use in the rate formulas.
    #[inline]
    pub fn n(&self) -> f64 {
        self.n_atoms as f64
    }

    /// Stimulated-emission decay constant `gamma_c = 4 g^2 / kappa`: the rate
    /// at which one upper-level atom emits into the cavity mode.
    #[inline]
    pub fn gamma_c(&self) -> f64 {
        4.0 * self.g * self.g / self.kappa
    }

    /// Total polarization relaxation rate `eta = gamma_c + pump_rate`.
    #[inline]
    pub fn eta(&self) -> f64 {
        self.gamma_c() + self.pump_rate
    }

    /// Collective coupling `g / sqrt(N)` (positive branch).
    #[inline]
    pub fn coupling_lambda(&self) -> f64 {
        self.g / self.n().sqrt()
    }
}

/// Rate constants derived from [`LaserParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedConstants {
    pub gamma_c: f64,
    pub eta: f64,
    pub coupling_lambda: f64,
}

/// Compute the derived rate constants for a parameter set.
pub fn derive_constants(params: &LaserParams) -> DerivedConstants {
    DerivedConstants {
        gamma_c: params.gamma_c(),
        eta: params.eta(),
        coupling_lambda: params.coupling_lambda(),
    }
}

/// Operating regime of the laser, set by the ratio `gamma_c / pump_rate`.
///
/// Threshold is the operating point with equal steady-state level
/// populations (`gamma_c = pump_rate`); above threshold the upper level
/// dominates (`gamma_c < pump_rate`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeKind {
    BelowThreshold,
    AtThreshold,
    AboveThreshold,
    WellAboveThreshold,
}

impl RegimeKind {
    /// `WellAboveThreshold` implies `AboveThreshold`.
    pub fn is_above_threshold(&self) -> bool {
        matches!(self, Self::AboveThreshold | Self::WellAboveThreshold)
    }
}

impl std::fmt::Display for RegimeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::BelowThreshold => "below_threshold",
            Self::AtThreshold => "at_threshold",
            Self::AboveThreshold => "above_threshold",
            Self::WellAboveThreshold => "well_above_threshold",
        };
        f.write_str(s)
    }
}

/// Regime classification result.
///
/// `ratio` is `gamma_c / pump_rate` (infinite for zero pump).
/// `degenerate_no_pump` flags the zero-pump case, which is reported as
/// below threshold by convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Regime {
    pub kind: RegimeKind,
    pub ratio: f64,
    pub degenerate_no_pump: bool,
}

/// Classify the operating regime.
///
/// `tol_rel` is the relative tolerance for the threshold test (exact
/// equality of `gamma_c` and `pump_rate` is measure-zero in floating
/// point); `eps_wat` is the "well above threshold" cut on
/// `gamma_c / pump_rate`. Both must lie strictly in `(0, 1)`.
pub fn classify_regime(
    params: &LaserParams,
    tol_rel: f64,
    eps_wat: f64,
) -> Result<Regime, ModelError> {
    for (name, value) in [("tol_rel", tol_rel), ("eps_wat", eps_wat)] {
        if !(value.is_finite() && value > 0.0 && value < 1.0) {
            return Err(ModelError::InvalidTolerance { name, value });
        }
    }
    let gamma_c = params.gamma_c();
    let r_a = params.pump_rate;
    if r_a == 0.0 {
        return Ok(Regime {
            kind: RegimeKind::BelowThreshold,
            ratio: f64::INFINITY,
            degenerate_no_pump: true,
        });
    }
    let ratio = gamma_c / r_a;
    let kind = if (gamma_c - r_a).abs() <= tol_rel * gamma_c.max(r_a) {
        RegimeKind::AtThreshold
    } else if gamma_c < r_a {
        if gamma_c <= eps_wat * r_a {
            RegimeKind::WellAboveThreshold
        } else {
            RegimeKind::AboveThreshold
        }
    } else {
        RegimeKind::BelowThreshold
    };
    Ok(Regime {
        kind,
        ratio,
        degenerate_no_pump: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(g: f64, kappa: f64, pump_rate: f64, n_atoms: u64) -> LaserParams {
        LaserParams::new(g, kappa, pump_rate, n_atoms, 0.0).unwrap()
    }

    #[test]
    fn gamma_c_one_step_substitution() {
        let p = params(1.0, 0.8, 1.0, 10);
        assert_eq!(p.gamma_c(), 5.0);
    }

    #[test]
    fn derived_constants_substitution() {
        let p = params(1.0, 20.0, 2.0, 100);
        let d = derive_constants(&p);
        assert!((d.gamma_c - 0.2).abs() < 1e-15);
        assert!((d.eta - 2.2).abs() < 1e-15);
    }

    #[test]
    fn coupling_lambda_positive_branch() {
        let p = params(1.0, 0.8, 1.0, 100);
        assert_eq!(p.coupling_lambda(), 0.1);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert_eq!(
            LaserParams::new(0.0, 1.0, 1.0, 10, 0.0),
            Err(ModelError::InvalidCoupling(0.0))
        );
        assert_eq!(
            LaserParams::new(1.0, -1.0, 1.0, 10, 0.0),
            Err(ModelError::InvalidKappa(-1.0))
        );
        assert_eq!(
            LaserParams::new(1.0, 1.0, -0.5, 10, 0.0),
            Err(ModelError::InvalidPumpRate(-0.5))
        );
        assert_eq!(
            LaserParams::new(1.0, 1.0, 1.0, 0, 0.0),
            Err(ModelError::InvalidAtomCount(0))
        );
        assert!(LaserParams::new(1.0, 1.0, 1.0, 10, f64::NAN).is_err());
    }

    #[test]
    fn classify_at_threshold() {
        // gamma_c = 4/20 = 0.2 = pump_rate
        let p = params(1.0, 20.0, 0.2, 100);
        let r = classify_regime(&p, 1e-6, 0.01).unwrap();
        assert_eq!(r.kind, RegimeKind::AtThreshold);
        assert!((r.ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn classify_well_above_threshold() {
        // gamma_c = 0.2, pump 2.0, eps_wat 0.1 -> 0.2 <= 0.1 * 2
        let p = params(1.0, 20.0, 2.0, 100);
        let r = classify_regime(&p, 1e-6, 0.1).unwrap();
        assert_eq!(r.kind, RegimeKind::WellAboveThreshold);
        assert!(r.kind.is_above_threshold());
    }

    #[test]
    fn classify_below_threshold() {
        // gamma_c = 5 > pump 1
        let p = params(1.0, 0.8, 1.0, 100);
        let r = classify_regime(&p, 1e-6, 0.01).unwrap();
        assert_eq!(r.kind, RegimeKind::BelowThreshold);
        assert!(!r.degenerate_no_pump);
    }

    #[test]
    fn classify_above_but_not_well_above() {
        // gamma_c = 0.2, pump 0.5: above threshold, ratio 0.4 > eps_wat
        let p = params(1.0, 20.0, 0.5, 100);
        let r = classify_regime(&p, 1e-6, 0.01).unwrap();
        assert_eq!(r.kind, RegimeKind::AboveThreshold);
    }

    #[test]
    fn zero_pump_is_degenerate_below_threshold() {
        let p = params(1.0, 20.0, 0.0, 100);
        let r = classify_regime(&p, 1e-6, 0.01).unwrap();
        assert_eq!(r.kind, RegimeKind::BelowThreshold);
        assert!(r.degenerate_no_pump);
        assert!(r.ratio.is_infinite());
    }

    #[test]
    fn classify_rejects_bad_tolerances() {
        let p = params(1.0, 20.0, 1.0, 100);
        assert!(classify_regime(&p, 0.0, 0.01).is_err());
        assert!(classify_regime(&p, 1e-6, 1.0).is_err());
        assert!(classify_regime(&p, f64::NAN, 0.01).is_err());
    }
}
