//! Flat key-value configuration files and `key=value` override strings.
//!
//! Grammar, line by line: blank lines and lines starting with `#` are
//! skipped; everything else must be `key = value` with a bare identifier
//! key. Later assignments win, so overrides are just appended entries.
//! Only documented keys are accepted.
//!
//! Parsing is total: any input text yields `Ok` or a diagnostic error,
//! never a panic (the fuzz targets lean on this).

use std::collections::BTreeMap;

use num_complex::Complex64;
use thiserror::Error;

use crate::estimators::{CorrelationRequest, EstimateRequest};
use crate::langevin::{MUpdate, Mode, SimConfig, DEFAULT_SAMPLE_BUDGET};
use crate::model::{LaserParams, DEFAULT_EPS_WAT, DEFAULT_TOL_REL};

/// Every key the configuration schema understands.
pub const DOCUMENTED_KEYS: &[&str] = &[
    // model
    "g",
    "kappa",
    "pump_rate",
    "n_atoms",
    "omega0",
    "tol_rel",
    "eps_wat",
    // simulation
    "dt",
    "t_end",
    "burn_in",
    "n_traj",
    "seed",
    "mode",
    "m_update",
    "record_stride",
    "sample_budget",
    "initial_m_re",
    "initial_m_im",
    "initial_b_re",
    "initial_b_im",
    // estimation
    "batch_len",
    "estimate_correlation",
    "max_lag",
    "n_lags",
    "estimate_spectrum",
    "taper_eps",
    "omega_min",
    "omega_max",
    "n_omega",
    // band fraction
    "lambda_list",
    // populations
    "pop_t_end",
    "pop_dt_max",
    "pop_initial_na",
    "pop_burn_in",
    "pop_batch_len",
    // data dumps
    "ode_csv",
    "jump_csv",
    "traj_dump_dir",
    "dump_trajectories",
    "correlation_csv",
    "spectrum_csv",
];

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected 'key = value', got '{text}'")]
    Syntax { line: usize, text: String },
    #[error("line {line}: '{key}' is not a valid key name")]
    BadKeyName { line: usize, key: String },
    #[error("unknown configuration key '{key}'")]
    UnknownKey { key: String },
    #[error("missing required key '{key}'")]
    MissingKey { key: &'static str },
    #[error("key '{key}': cannot parse '{value}' as {expected}")]
    InvalidValue {
        key: String,
        value: String,
        expected: &'static str,
    },
    #[error("key '{key}': {message}")]
    InvalidModel { key: &'static str, message: String },
    #[error("override must look like key=value, got '{0}'")]
    BadOverride(String),
}

fn valid_key_name(key: &str) -> bool {
    let mut chars = key.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Ordered key-value entries; later entries shadow earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Document {
    entries: Vec<(String, String)>,
}

impl Document {
    /// Parse configuration text. Keys are checked against the documented
    /// schema.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some((key, value)) = trimmed.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line,
                    text: trimmed.to_string(),
                });
            };
            let key = key.trim();
            let value = value.trim();
            if !valid_key_name(key) {
                return Err(ConfigError::BadKeyName {
                    line,
                    key: key.to_string(),
                });
            }
            if !DOCUMENTED_KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey {
                    key: key.to_string(),
                });
            }
            if value.is_empty() {
                return Err(ConfigError::Syntax {
                    line,
                    text: trimmed.to_string(),
                });
            }
            entries.push((key.to_string(), value.to_string()));
        }
        Ok(Self { entries })
    }

    /// Apply one `key=value` override (same key rules as the file).
    pub fn apply_override(&mut self, spec: &str) -> Result<(), ConfigError> {
        let Some((key, value)) = spec.split_once('=') else {
            return Err(ConfigError::BadOverride(spec.to_string()));
        };
        let key = key.trim();
        let value = value.trim();
        if !valid_key_name(key) {
            return Err(ConfigError::BadOverride(spec.to_string()));
        }
        if !DOCUMENTED_KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                key: key.to_string(),
            });
        }
        if value.is_empty() {
            return Err(ConfigError::BadOverride(spec.to_string()));
        }
        self.entries.push((key.to_string(), value.to_string()));
        Ok(())
    }

    /// Last value assigned to `key`, if any.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    fn get_parsed<T: std::str::FromStr>(
        &self,
        key: &str,
        expected: &'static str,
    ) -> Result<Option<T>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                ConfigError::InvalidValue {
                    key: key.to_string(),
                    value: raw.to_string(),
                    expected,
                }
            }),
        }
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.get_parsed(key, "a number")
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>, ConfigError> {
        self.get_parsed(key, "a non-negative integer")
    }

    pub fn get_bool(&self, key: &str) -> Result<Option<bool>, ConfigError> {
        self.get_parsed(key, "true or false")
    }

    pub fn require_f64(&self, key: &'static str) -> Result<f64, ConfigError> {
        self.get_f64(key)?.ok_or(ConfigError::MissingKey { key })
    }

    pub fn require_u64(&self, key: &'static str) -> Result<u64, ConfigError> {
        self.get_u64(key)?.ok_or(ConfigError::MissingKey { key })
    }

    /// Comma-separated list of numbers.
    pub fn get_f64_list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .split(',')
                .map(|item| {
                    item.trim().parse::<f64>().map_err(|_| {
                        ConfigError::InvalidValue {
                            key: key.to_string(),
                            value: raw.to_string(),
                            expected: "a comma-separated list of numbers",
                        }
                    })
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
        }
    }
}

/// Model parameters plus regime-classification tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSection {
    pub params: LaserParams,
    pub tol_rel: f64,
    pub eps_wat: f64,
}

/// Resolve the model section (required for every command).
pub fn model_section(doc: &Document) -> Result<ModelSection, ConfigError> {
    let g = doc.require_f64("g")?;
    let kappa = doc.require_f64("kappa")?;
    let pump_rate = doc.require_f64("pump_rate")?;
    let n_atoms = doc.require_u64("n_atoms")?;
    let omega0 = doc.get_f64("omega0")?.unwrap_or(0.0);
    let params = LaserParams::new(g, kappa, pump_rate, n_atoms, omega0).map_err(|e| {
        ConfigError::InvalidModel {
            key: "g/kappa/pump_rate/n_atoms/omega0",
            message: e.to_string(),
        }
    })?;
    Ok(ModelSection {
        params,
        tol_rel: doc.get_f64("tol_rel")?.unwrap_or(DEFAULT_TOL_REL),
        eps_wat: doc.get_f64("eps_wat")?.unwrap_or(DEFAULT_EPS_WAT),
    })
}

/// Resolve the simulation section (required for simulate/compare).
pub fn sim_section(doc: &Document, params: &LaserParams) -> Result<SimConfig, ConfigError> {
    let dt = doc.require_f64("dt")?;
    let t_end = doc.require_f64("t_end")?;
    let n_traj = doc.require_u64("n_traj")?;
    let slow = params.kappa.min(params.eta());
    let burn_in = doc.get_f64("burn_in")?.unwrap_or(10.0 / slow);
    let mut config = SimConfig::new(dt, t_end, burn_in, n_traj, 0);
    config.seed = doc.get_u64("seed")?.unwrap_or(0);
    if let Some(raw) = doc.get("mode") {
        config.mode = raw.parse::<Mode>().map_err(|_| ConfigError::InvalidValue {
            key: "mode".into(),
            value: raw.into(),
            expected: "full or adiabatic",
        })?;
    }
    if let Some(raw) = doc.get("m_update") {
        config.m_update = raw
            .parse::<MUpdate>()
            .map_err(|_| ConfigError::InvalidValue {
                key: "m_update".into(),
                value: raw.into(),
                expected: "exact_ou or euler",
            })?;
    }
    if let Some(stride) = doc.get_u64("record_stride")? {
        config.record_stride = stride.min(u32::MAX as u64) as u32;
    }
    config.sample_budget = doc.get_u64("sample_budget")?.unwrap_or(DEFAULT_SAMPLE_BUDGET);
    config.initial_m = Complex64::new(
        doc.get_f64("initial_m_re")?.unwrap_or(0.0),
        doc.get_f64("initial_m_im")?.unwrap_or(0.0),
    );
    config.initial_b = Complex64::new(
        doc.get_f64("initial_b_re")?.unwrap_or(0.0),
        doc.get_f64("initial_b_im")?.unwrap_or(0.0),
    );
    Ok(config)
}

/// Estimation settings resolved against a simulation window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationSection {
    pub request: EstimateRequest,
    pub spectrum: bool,
    pub taper_eps: Option<f64>,
}

pub fn estimation_section(
    doc: &Document,
    params: &LaserParams,
    sim: &SimConfig,
) -> Result<EstimationSection, ConfigError> {
    let slow = params.kappa.min(params.eta());
    let batch_len = doc.get_f64("batch_len")?.unwrap_or(10.0 / slow);
    let spectrum = doc.get_bool("estimate_spectrum")?.unwrap_or(false);
    let want_corr = doc.get_bool("estimate_correlation")?.unwrap_or(false) || spectrum;
    let correlation = if want_corr {
        let max_lag = doc
            .get_f64("max_lag")?
            .unwrap_or((sim.t_end - sim.burn_in) / 4.0);
        let n_lags = doc.get_u64("n_lags")?.map(|n| n as usize).unwrap_or_else(|| {
            // default: every recorded lag
            (max_lag / sim.record_dt()).round() as usize
        });
        Some(CorrelationRequest { max_lag, n_lags })
    } else {
        None
    };
    Ok(EstimationSection {
        request: EstimateRequest {
            batch_len,
            correlation,
            mean_series: false,
        },
        spectrum,
        taper_eps: doc.get_f64("taper_eps")?,
    })
}

/// Uniform frequency-offset grid for spectra.
pub fn omega_grid(doc: &Document, params: &LaserParams) -> Result<Vec<f64>, ConfigError> {
    let fast = params.kappa.max(params.eta());
    let omega_min = doc.get_f64("omega_min")?.unwrap_or(-4.0 * fast);
    let omega_max = doc.get_f64("omega_max")?.unwrap_or(4.0 * fast);
    let n_omega = doc.get_u64("n_omega")?.unwrap_or(201).max(2);
    if n_omega > 10_000_000 {
        return Err(ConfigError::InvalidValue {
            key: "n_omega".into(),
            value: n_omega.to_string(),
            expected: "at most 1e7 grid points",
        });
    }
    if !(omega_min.is_finite() && omega_max.is_finite() && omega_max > omega_min) {
        return Err(ConfigError::InvalidValue {
            key: "omega_min/omega_max".into(),
            value: format!("{omega_min}..{omega_max}"),
            expected: "a finite increasing range",
        });
    }
    let step = (omega_max - omega_min) / (n_omega - 1) as f64;
    Ok((0..n_omega)
        .map(|i| omega_min + step * i as f64)
        .collect())
}

/// Population-command settings.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSection {
    pub t_end: f64,
    pub dt_max: f64,
    pub initial_na: f64,
    pub burn_in: f64,
    pub batch_len: f64,
    pub seed: u64,
}

pub fn population_section(
    doc: &Document,
    params: &LaserParams,
) -> Result<PopulationSection, ConfigError> {
    let t_end = doc.require_f64("pop_t_end")?;
    let eta = params.eta();
    Ok(PopulationSection {
        t_end,
        dt_max: doc.get_f64("pop_dt_max")?.unwrap_or(t_end / 1000.0),
        initial_na: doc.get_f64("pop_initial_na")?.unwrap_or(0.0),
        burn_in: doc.get_f64("pop_burn_in")?.unwrap_or(10.0 / eta),
        batch_len: doc.get_f64("pop_batch_len")?.unwrap_or(10.0 / eta),
        seed: doc.get_u64("seed")?.unwrap_or(0),
    })
}

/// Band half-widths for the band-fraction table.
pub fn lambda_list(doc: &Document) -> Result<Vec<f64>, ConfigError> {
    Ok(doc
        .get_f64_list("lambda_list")?
        .unwrap_or_else(|| vec![0.5, 1.0, 2.0]))
}

/// Render a resolved value map deterministically (sorted keys).
pub fn echo_to_map(pairs: impl IntoIterator<Item = (String, String)>) -> BTreeMap<String, String> {
    pairs.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "\
# model
g = 1.0
kappa = 20
pump_rate = 2
n_atoms = 100
";

    #[test]
    fn parses_and_resolves_model() {
        let doc = Document::parse(BASE).unwrap();
        let model = model_section(&doc).unwrap();
        assert_eq!(model.params.kappa, 20.0);
        assert_eq!(model.params.n_atoms, 100);
        assert_eq!(model.tol_rel, DEFAULT_TOL_REL);
    }

    #[test]
    fn later_entries_shadow_earlier() {
        let mut doc = Document::parse(BASE).unwrap();
        doc.apply_override("kappa=5").unwrap();
        assert_eq!(doc.get("kappa"), Some("5"));
        let model = model_section(&doc).unwrap();
        assert_eq!(model.params.kappa, 5.0);
    }

    #[test]
    fn rejects_unknown_keys() {
        let err = Document::parse("gg = 1\n").unwrap_err();
        assert_eq!(
            err,
            ConfigError::UnknownKey {
                key: "gg".to_string()
            }
        );
        let mut doc = Document::parse(BASE).unwrap();
        assert!(matches!(
            doc.apply_override("frobnicate=1"),
            Err(ConfigError::UnknownKey { .. })
        ));
    }

    #[test]
    fn reports_syntax_errors_with_line_numbers() {
        let err = Document::parse("g = 1\nnot a setting\n").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 2, .. }));
        let err = Document::parse("kappa =\n").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 1, .. }));
    }

    #[test]
    fn reports_missing_and_invalid_values() {
        let doc = Document::parse("g = 1\nkappa = 20\npump_rate = 2\n").unwrap();
        assert_eq!(
            model_section(&doc).unwrap_err(),
            ConfigError::MissingKey { key: "n_atoms" }
        );
        let doc = Document::parse("g = 1\nkappa = twenty\npump_rate = 2\nn_atoms = 5\n").unwrap();
        assert!(matches!(
            model_section(&doc),
            Err(ConfigError::InvalidValue { .. })
        ));
        let doc = Document::parse("g = -1\nkappa = 20\npump_rate = 2\nn_atoms = 5\n").unwrap();
        assert!(matches!(
            model_section(&doc),
            Err(ConfigError::InvalidModel { .. })
        ));
    }

    #[test]
    fn sim_section_defaults() {
        let text = format!("{BASE}dt = 0.01\nt_end = 20\nn_traj = 4\n");
        let doc = Document::parse(&text).unwrap();
        let model = model_section(&doc).unwrap();
        let sim = sim_section(&doc, &model.params).unwrap();
        assert_eq!(sim.seed, 0);
        assert_eq!(sim.mode, Mode::Adiabatic);
        assert_eq!(sim.m_update, MUpdate::ExactOu);
        // burn-in default: 10 / min(kappa, eta) = 10/2.2
        assert!((sim.burn_in - 10.0 / 2.2).abs() < 1e-12);
        assert!(sim.validate(&model.params).is_ok());
    }

    #[test]
    fn lambda_list_parsing() {
        let mut doc = Document::parse(BASE).unwrap();
        assert_eq!(lambda_list(&doc).unwrap(), vec![0.5, 1.0, 2.0]);
        doc.apply_override("lambda_list = 0.1, 0.2,3").unwrap();
        assert_eq!(lambda_list(&doc).unwrap(), vec![0.1, 0.2, 3.0]);
        doc.apply_override("lambda_list = a,b").unwrap();
        assert!(lambda_list(&doc).is_err());
    }

    #[test]
    fn parser_never_panics_on_junk() {
        for junk in [
            "",
            "=",
            "==",
            "g",
            "g=",
            "=1",
            "\u{0}\u{1}",
            "g = 1 = 2",
            "# only a comment",
            "g=1\x07",
            "lambda_list=,",
        ] {
            let _ = Document::parse(junk);
        }
    }
}
