//! Independent numerical oracles for the closed-form spectral results:
//! quadrature cross-checks, the correlation/spectrum transform pair, and
//! continuity across the degenerate `kappa == eta` switch.

use approx::assert_relative_eq;
use twolevel_laser::analytics::{
    band_fraction_z, correlation_g1, integrate_spectrum, mean_photon_number, power_spectrum,
    DEGENERACY_TOL,
};
use twolevel_laser::quad;
use twolevel_laser::LaserParams;

fn params(g: f64, kappa: f64, pump_rate: f64, n_atoms: u64) -> LaserParams {
    LaserParams::new(g, kappa, pump_rate, n_atoms, 0.0).unwrap()
}

/// kappa = 0.8, eta = 5.
fn band_set() -> LaserParams {
    params(0.2_f64.sqrt(), 0.8, 4.0, 100)
}

/// kappa = 20, eta = 2.2.
fn reference() -> LaserParams {
    params(1.0, 20.0, 2.0, 100)
}

#[test]
fn correlation_and_spectrum_are_a_transform_pair() {
    // (1/pi) Re int_0^inf g1(tau) e^{i w tau} dtau evaluated by adaptive
    // quadrature must match the closed spectrum pointwise to 1e-6 relative.
    for p in [band_set(), reference()] {
        let eta = p.eta();
        let kappa = p.kappa;
        let slow = eta.min(kappa);
        // truncate where both exponentials are below ~1e-16 of their scale
        let t_max = 75.0 / slow;
        let nbar = mean_photon_number(&p);
        for w in [0.0, 0.2, 0.5, 1.3, 3.0, 9.0] {
            let f = |tau: f64| correlation_g1(&p, tau).unwrap() * (w * tau).cos();
            // break the range at the oscillation and decay scales
            let mut pts = vec![0.0];
            let period = if w > 0.0 { std::f64::consts::TAU / w } else { t_max };
            let mut t = period.min(2.0 / slow);
            while t < t_max {
                pts.push(t);
                t += period.min(2.0 / slow);
            }
            pts.push(t_max);
            let integral =
                quad::integrate_with_breakpoints(&f, &pts, 1e-13 * nbar.max(1.0)) / std::f64::consts::PI;
            let spectrum = power_spectrum(&p, w).unwrap();
            assert_relative_eq!(integral, spectrum, max_relative = 1e-6);
        }
    }
}

#[test]
fn sum_rule_quadrature_plus_tail_recovers_nbar() {
    for p in [band_set(), reference()] {
        let nbar = mean_photon_number(&p);
        let fast = p.kappa.max(p.eta());
        for factor in [0.3, 1.0, 10.0] {
            let l = factor * fast;
            let quad_part = integrate_spectrum(&p, l, 1e-13 * nbar);
            let tail = nbar * (1.0 - band_fraction_z(&p, l).unwrap());
            assert_relative_eq!(quad_part + tail, nbar, max_relative = 1e-9);
        }
    }
}

#[test]
fn degenerate_switch_is_continuous_to_1e5() {
    // closed limits against the direct formulas evaluated just outside the
    // switch band, at eta = kappa (1 +- 10 * DEGENERACY_TOL)
    let kappa = 1.3_f64;
    let gamma_c = 0.5;
    let g = (gamma_c * kappa / 4.0).sqrt();
    let at = params(g, kappa, kappa - gamma_c, 100); // eta = kappa up to rounding
    assert!((at.eta() - kappa).abs() <= DEGENERACY_TOL * kappa);
    let eps = 10.0 * DEGENERACY_TOL;
    for sign in [1.0_f64, -1.0] {
        let p_off = params(g, kappa, kappa * (1.0 + sign * eps) - gamma_c, 100);
        for tau in [0.0, 0.4, 1.7, 6.0] {
            assert_relative_eq!(
                correlation_g1(&at, tau).unwrap(),
                correlation_g1(&p_off, tau).unwrap(),
                max_relative = 1e-5
            );
        }
        for w in [0.0, 0.3, 1.1, 4.0] {
            assert_relative_eq!(
                power_spectrum(&at, w).unwrap(),
                power_spectrum(&p_off, w).unwrap(),
                max_relative = 1e-5
            );
        }
        for lam in [0.1, 0.9, 2.5] {
            assert_relative_eq!(
                band_fraction_z(&at, lam).unwrap(),
                band_fraction_z(&p_off, lam).unwrap(),
                max_relative = 1e-5
            );
        }
    }
}

#[test]
fn g1_epsilon_perturbation_oracle_at_unit_kappa() {
    // the degenerate value at kappa = eta = 1, tau = 2 against the direct
    // formula at eta = 1 +- 1e-6, to 1e-5 relative
    let g = 0.125_f64.sqrt(); // gamma_c = 0.5
    let at = params(g, 1.0, 0.5, 100);
    let nbar = mean_photon_number(&at);
    let value = correlation_g1(&at, 2.0).unwrap();
    assert_relative_eq!(value, nbar * 2.0 * (-1.0_f64).exp(), max_relative = 1e-12);
    for sign in [1.0_f64, -1.0] {
        let p_off = params(g, 1.0, 0.5 + sign * 1e-6, 100);
        let direct = correlation_g1(&p_off, 2.0).unwrap();
        assert_relative_eq!(value, direct, max_relative = 1e-5);
    }
}
