//! Toolkit for the two-level laser with pumped atoms in a closed cavity.
//!
//! Two complementary routes to every observable:
//!
//! * [`analytics`] evaluates the closed-form steady-state photon
//!   statistics, quadrature variances, two-time correlation, power
//!   spectrum, and band fraction.
//! * [`langevin`] + [`estimators`] integrate the stochastic c-number
//!   equations for the collective polarization and the cavity field and
//!   turn ensembles into the same observables with standard errors, so the
//!   closed forms can be verified independently.
//!
//! [`population`] evolves the atomic level populations (closed-form ODE
//! and an exact jump process), [`model`] holds parameters and regime
//! classification, [`config`] the flat key-value configuration format,
//! and [`report`] the simulated-vs-analytic comparison rows.

pub mod analytics;
pub mod config;
pub mod estimators;
pub mod langevin;
pub mod model;
pub mod population;
pub mod quad;
pub mod report;

pub use model::{classify_regime, derive_constants, LaserParams, Regime, RegimeKind};
