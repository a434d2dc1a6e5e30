//! One function per subcommand: resolve the configuration, run the
//! library, render the document.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use twolevel_laser::analytics::{self, SteadyStateReport};
use twolevel_laser::config::{
    self, model_section, ConfigError, Document, EstimationSection, ModelSection,
};
use twolevel_laser::estimators::{
    assemble_quadrature_variances, estimate_spectrum, run_ensemble, EnsembleMoments,
    EstimatorError, QuadratureEstimate, SpectrumEstimate, SpectrumOptions,
};
use twolevel_laser::langevin::{simulate_trajectory, SimConfig, SimError};
use twolevel_laser::model::Regime;
use twolevel_laser::population::{
    jump_evolve, jump_time_average, ode_evolve, ode_fixed_point, PopulationState,
};
use twolevel_laser::report::{comparison_rows, ComparisonReport, Verdict};
use twolevel_laser::LaserParams;

use crate::output::{
    csv_config_header, csv_line, fmt_f64, to_json, write_file, write_output, OutputFormat,
};
use crate::{CliError, CommonArgs};

fn config_err(e: ConfigError) -> CliError {
    CliError::Config(e.to_string())
}

fn sim_err(e: SimError) -> CliError {
    match e {
        SimError::SampleBudget { .. } => CliError::Runtime(e.to_string()),
        other => CliError::Config(other.to_string()),
    }
}

fn estimator_err(e: EstimatorError) -> CliError {
    match e {
        EstimatorError::Sim(inner) => sim_err(inner),
        EstimatorError::BurnInTooShort { .. } | EstimatorError::InvalidBatchLen(_) => {
            CliError::Config(e.to_string())
        }
        other => CliError::Runtime(other.to_string()),
    }
}

/// Read the config file and fold in `--set` overrides and `--seed`.
fn load_document(args: &CommonArgs) -> Result<Document, CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        CliError::Config(format!("reading {}: {e}", args.config.display()))
    })?;
    let mut doc = Document::parse(&text).map_err(config_err)?;
    for spec in &args.set {
        doc.apply_override(spec).map_err(config_err)?;
    }
    if let Some(seed) = args.seed {
        doc.apply_override(&format!("seed={seed}")).map_err(config_err)?;
    }
    Ok(doc)
}

fn echo_model(model: &ModelSection) -> Vec<(String, String)> {
    let p = &model.params;
    vec![
        ("g".into(), fmt_f64(p.g)),
        ("kappa".into(), fmt_f64(p.kappa)),
        ("pump_rate".into(), fmt_f64(p.pump_rate)),
        ("n_atoms".into(), p.n_atoms.to_string()),
        ("omega0".into(), fmt_f64(p.omega0)),
        ("tol_rel".into(), fmt_f64(model.tol_rel)),
        ("eps_wat".into(), fmt_f64(model.eps_wat)),
    ]
}

fn echo_sim(sim: &SimConfig) -> Vec<(String, String)> {
    vec![
        ("dt".into(), fmt_f64(sim.dt)),
        ("t_end".into(), fmt_f64(sim.t_end)),
        ("burn_in".into(), fmt_f64(sim.burn_in)),
        ("n_traj".into(), sim.n_traj.to_string()),
        ("seed".into(), sim.seed.to_string()),
        ("mode".into(), sim.mode.to_string()),
        ("m_update".into(), sim.m_update.to_string()),
        ("record_stride".into(), sim.record_stride.to_string()),
        ("sample_budget".into(), sim.sample_budget.to_string()),
        ("initial_m_re".into(), fmt_f64(sim.initial_m.re)),
        ("initial_m_im".into(), fmt_f64(sim.initial_m.im)),
        ("initial_b_re".into(), fmt_f64(sim.initial_b.re)),
        ("initial_b_im".into(), fmt_f64(sim.initial_b.im)),
    ]
}

fn regime_of(model: &ModelSection) -> Result<Regime, CliError> {
    twolevel_laser::classify_regime(&model.params, model.tol_rel, model.eps_wat)
        .map_err(|e| CliError::Config(e.to_string()))
}

// ---------------------------------------------------------------------------
// analytic

#[derive(Serialize)]
struct AnalyticDocument {
    command: String,
    config: BTreeMap<String, String>,
    report: SteadyStateReport,
    sources: BTreeMap<String, String>,
}

fn analytic_sources() -> BTreeMap<String, String> {
    [
        ("n_a", "closed_form:steady_populations"),
        ("n_b", "closed_form:steady_populations"),
        ("nbar", "closed_form:mean_photon_number"),
        ("dn2", "closed_form:photon_variance"),
        ("var_plus", "closed_form:quadrature_variances"),
        ("var_minus", "closed_form:quadrature_variances"),
        ("ub_product", "closed_form:uncertainty_bound"),
        ("regime", "classifier:regime"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

pub fn run_analytic(args: &CommonArgs) -> Result<(), CliError> {
    let doc = load_document(args)?;
    let model = model_section(&doc).map_err(config_err)?;
    let report = analytics::steady_state_report(&model.params, model.tol_rel, model.eps_wat)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let config = config::echo_to_map(echo_model(&model));
    let document = AnalyticDocument {
        command: "analytic".into(),
        config,
        report,
        sources: analytic_sources(),
    };
    let format = OutputFormat::resolve(args.format.as_deref(), OutputFormat::Json);
    let content = match format {
        OutputFormat::Json => to_json(&document)?,
        OutputFormat::Csv => {
            let mut out = csv_config_header(&document.config);
            out.push_str("quantity,value,source\n");
            let r = &document.report;
            let sources = &document.sources;
            for (name, value) in [
                ("n_a", r.n_a),
                ("n_b", r.n_b),
                ("nbar", r.nbar),
                ("dn2", r.dn2),
                ("var_plus", r.var_plus),
                ("var_minus", r.var_minus),
                ("ub_product", r.ub_product),
            ] {
                out.push_str(&csv_line(&[
                    name.into(),
                    fmt_f64(value),
                    sources[name].clone(),
                ]));
            }
            out.push_str(&csv_line(&[
                "regime".into(),
                r.regime.kind.to_string(),
                sources["regime"].clone(),
            ]));
            out.push_str(&csv_line(&[
                "regime_ratio".into(),
                fmt_f64(r.regime.ratio),
                sources["regime"].clone(),
            ]));
            out
        }
    };
    write_output(args.output.as_deref(), &content)
}

// ---------------------------------------------------------------------------
// spectrum (closed form on a grid)

#[derive(Serialize)]
struct SpectrumDocument {
    command: String,
    config: BTreeMap<String, String>,
    omega0: f64,
    omega_offsets: Vec<f64>,
    values: Vec<f64>,
    positivity_violations: Vec<usize>,
    source: String,
}

pub fn run_spectrum(args: &CommonArgs) -> Result<(), CliError> {
    let doc = load_document(args)?;
    let model = model_section(&doc).map_err(config_err)?;
    let grid = config::omega_grid(&doc, &model.params).map_err(config_err)?;
    let curve = analytics::spectrum_curve(&model.params, &grid)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut pairs = echo_model(&model);
    pairs.push(("omega_min".into(), fmt_f64(grid[0])));
    pairs.push(("omega_max".into(), fmt_f64(*grid.last().unwrap())));
    pairs.push(("n_omega".into(), grid.len().to_string()));
    let config = config::echo_to_map(pairs);
    let document = SpectrumDocument {
        command: "spectrum".into(),
        config,
        omega0: model.params.omega0,
        omega_offsets: curve.omega_offsets,
        values: curve.values,
        positivity_violations: curve.positivity_violations,
        source: "closed_form:power_spectrum".into(),
    };
    let format = OutputFormat::resolve(args.format.as_deref(), OutputFormat::Csv);
    let content = match format {
        OutputFormat::Json => to_json(&document)?,
        OutputFormat::Csv => {
            let mut out = csv_config_header(&document.config);
            out.push_str("omega_offset,omega_absolute,value\n");
            for (w, v) in document.omega_offsets.iter().zip(document.values.iter()) {
                out.push_str(&csv_line(&[
                    fmt_f64(*w),
                    fmt_f64(document.omega0 + w),
                    fmt_f64(*v),
                ]));
            }
            out
        }
    };
    write_output(args.output.as_deref(), &content)
}

// ---------------------------------------------------------------------------
// bandfraction

#[derive(Serialize)]
struct BandRow {
    band_halfwidth: f64,
    z: f64,
    band_photon_number: f64,
}

#[derive(Serialize)]
struct BandfractionDocument {
    command: String,
    config: BTreeMap<String, String>,
    nbar: f64,
    rows: Vec<BandRow>,
    sources: BTreeMap<String, String>,
}

pub fn run_bandfraction(args: &CommonArgs) -> Result<(), CliError> {
    let doc = load_document(args)?;
    let model = model_section(&doc).map_err(config_err)?;
    let lambdas = config::lambda_list(&doc).map_err(config_err)?;
    let mut rows = Vec::with_capacity(lambdas.len());
    for lam in &lambdas {
        let z = analytics::band_fraction_z(&model.params, *lam)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let n_band = analytics::band_photon_number(&model.params, *lam)
            .map_err(|e| CliError::Config(e.to_string()))?;
        rows.push(BandRow {
            band_halfwidth: *lam,
            z,
            band_photon_number: n_band,
        });
    }
    let mut pairs = echo_model(&model);
    pairs.push((
        "lambda_list".into(),
        lambdas
            .iter()
            .map(|l| fmt_f64(*l))
            .collect::<Vec<_>>()
            .join(","),
    ));
    let config = config::echo_to_map(pairs);
    let document = BandfractionDocument {
        command: "bandfraction".into(),
        config,
        nbar: analytics::mean_photon_number(&model.params),
        rows,
        sources: [
            ("z", "closed_form:band_fraction"),
            ("band_photon_number", "closed_form:band_photon_number"),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect(),
    };
    let format = OutputFormat::resolve(args.format.as_deref(), OutputFormat::Csv);
    let content = match format {
        OutputFormat::Json => to_json(&document)?,
        OutputFormat::Csv => {
            let mut out = csv_config_header(&document.config);
            out.push_str("band_halfwidth,z,band_photon_number\n");
            for row in &document.rows {
                out.push_str(&csv_line(&[
                    fmt_f64(row.band_halfwidth),
                    fmt_f64(row.z),
                    fmt_f64(row.band_photon_number),
                ]));
            }
            out
        }
    };
    write_output(args.output.as_deref(), &content)
}

// ---------------------------------------------------------------------------
// populations

#[derive(Serialize)]
struct PopulationsDocument {
    command: String,
    config: BTreeMap<String, String>,
    analytic_n_a: f64,
    analytic_n_b: f64,
    ode_fixed_point: f64,
    ode_final_n_a: f64,
    ode_samples: usize,
    jump_events: usize,
    jump_time_average: f64,
    jump_se: f64,
    jump_n_batches: usize,
    verdict: Verdict,
    sources: BTreeMap<String, String>,
}

pub fn run_populations(args: &CommonArgs) -> Result<(), CliError> {
    let doc = load_document(args)?;
    let model = model_section(&doc).map_err(config_err)?;
    let pop = config::population_section(&doc, &model.params).map_err(config_err)?;
    let params = &model.params;
    let n = params.n();
    let initial = PopulationState::new(pop.initial_na, n - pop.initial_na, 0.0);

    let ode = ode_evolve(params, initial, pop.t_end, pop.dt_max)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let jump = jump_evolve(params, initial, pop.t_end, pop.seed)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let avg = jump_time_average(&jump, pop.burn_in, pop.batch_len)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let pops = analytics::steady_populations(params);
    let verdict = if (avg.mean - pops.n_a).abs() <= 3.0 * avg.se {
        Verdict::Pass
    } else {
        Verdict::Fail
    };

    if let Some(path) = doc.get("ode_csv") {
        let mut out = String::from("t,n_a,n_b\n");
        for s in &ode {
            out.push_str(&csv_line(&[fmt_f64(s.t), fmt_f64(s.n_a), fmt_f64(s.n_b)]));
        }
        write_file(Path::new(path), &out)?;
    }
    if let Some(path) = doc.get("jump_csv") {
        let mut out = String::from("t,n_a,n_b\n");
        for s in jump.states() {
            out.push_str(&csv_line(&[fmt_f64(s.t), fmt_f64(s.n_a), fmt_f64(s.n_b)]));
        }
        write_file(Path::new(path), &out)?;
    }

    let mut pairs = echo_model(&model);
    pairs.extend([
        ("pop_t_end".to_string(), fmt_f64(pop.t_end)),
        ("pop_dt_max".to_string(), fmt_f64(pop.dt_max)),
        ("pop_initial_na".to_string(), fmt_f64(pop.initial_na)),
        ("pop_burn_in".to_string(), fmt_f64(pop.burn_in)),
        ("pop_batch_len".to_string(), fmt_f64(pop.batch_len)),
        ("seed".to_string(), pop.seed.to_string()),
    ]);
    let config = config::echo_to_map(pairs);
    let document = PopulationsDocument {
        command: "populations".into(),
        config,
        analytic_n_a: pops.n_a,
        analytic_n_b: pops.n_b,
        ode_fixed_point: ode_fixed_point(params),
        ode_final_n_a: ode.last().map(|s| s.n_a).unwrap_or(f64::NAN),
        ode_samples: ode.len(),
        jump_events: jump.n_events(),
        jump_time_average: avg.mean,
        jump_se: avg.se,
        jump_n_batches: avg.n_batches,
        verdict,
        sources: [
            ("analytic_n_a", "closed_form:steady_populations"),
            ("ode_fixed_point", "closed_form:population_fixed_point"),
            ("ode_final_n_a", "closed_form:population_relaxation"),
            ("jump_time_average", "estimator:jump_time_average"),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect(),
    };
    let format = OutputFormat::resolve(args.format.as_deref(), OutputFormat::Json);
    let content = match format {
        OutputFormat::Json => to_json(&document)?,
        OutputFormat::Csv => {
            let mut out = csv_config_header(&document.config);
            out.push_str("quantity,value,source\n");
            for (name, value, source) in [
                ("analytic_n_a", document.analytic_n_a, "closed_form:steady_populations"),
                ("analytic_n_b", document.analytic_n_b, "closed_form:steady_populations"),
                ("ode_fixed_point", document.ode_fixed_point, "closed_form:population_fixed_point"),
                ("ode_final_n_a", document.ode_final_n_a, "closed_form:population_relaxation"),
                ("jump_time_average", document.jump_time_average, "estimator:jump_time_average"),
                ("jump_se", document.jump_se, "estimator:jump_time_average"),
            ] {
                out.push_str(&csv_line(&[name.into(), fmt_f64(value), source.into()]));
            }
            out.push_str(&csv_line(&[
                "verdict".into(),
                match document.verdict {
                    Verdict::Pass => "pass".into(),
                    Verdict::Fail => "fail".into(),
                },
                "comparison:jump_vs_closed_form".into(),
            ]));
            out
        }
    };
    write_output(args.output.as_deref(), &content)?;
    if args.strict && document.verdict == Verdict::Fail {
        return Err(CliError::ComparisonFailed);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// simulate / compare

#[derive(Serialize)]
struct SpectrumSummary {
    integral: f64,
    lag0: f64,
    window_id: String,
    n_omega: usize,
}

#[derive(Serialize)]
struct SimulateDocument {
    #[serde(flatten)]
    report: ComparisonReport,
    moments: EnsembleMoments,
    quadratures: QuadratureEstimate,
    correlation_lags: Option<usize>,
    spectrum: Option<SpectrumSummary>,
}

fn resolve_spectrum(
    doc: &Document,
    params: &LaserParams,
    est: &EstimationSection,
    correlation: &twolevel_laser::estimators::CorrelationEstimate,
) -> Result<(SpectrumEstimate, Vec<f64>, SpectrumOptions), CliError> {
    let grid = config::omega_grid(doc, params).map_err(config_err)?;
    let opts = match est.taper_eps {
        Some(eps) => SpectrumOptions { taper_eps: eps },
        None => SpectrumOptions::for_params(params),
    };
    let spectrum = estimate_spectrum(correlation, &grid, opts).map_err(estimator_err)?;
    Ok((spectrum, grid, opts))
}

pub fn run_simulate(args: &CommonArgs, command: &str) -> Result<(), CliError> {
    let doc = load_document(args)?;
    let model = model_section(&doc).map_err(config_err)?;
    let params = &model.params;
    let sim = config::sim_section(&doc, params).map_err(config_err)?;
    sim.validate(params).map_err(sim_err)?;
    let est_section = config::estimation_section(&doc, params, &sim).map_err(config_err)?;
    let regime = regime_of(&model)?;

    let estimates = run_ensemble(params, &sim, &est_section.request).map_err(estimator_err)?;
    let n_b = params.n() - ode_fixed_point(params);
    let rows = comparison_rows(params, sim.mode, &estimates, n_b).map_err(estimator_err)?;
    let quadratures =
        assemble_quadrature_variances(&estimates, params, n_b).map_err(estimator_err)?;

    let spectrum_summary = if est_section.spectrum {
        let correlation = estimates
            .correlation
            .as_ref()
            .expect("spectrum request implies correlation");
        let (spectrum, _, _) = resolve_spectrum(&doc, params, &est_section, correlation)?;
        if let Some(path) = doc.get("spectrum_csv") {
            let mut out = String::from("omega_offset,value,se\n");
            for i in 0..spectrum.omega_offsets.len() {
                out.push_str(&csv_line(&[
                    fmt_f64(spectrum.omega_offsets[i]),
                    fmt_f64(spectrum.values[i]),
                    fmt_f64(spectrum.se[i]),
                ]));
            }
            write_file(Path::new(path), &out)?;
        }
        Some(SpectrumSummary {
            integral: spectrum.integral(),
            lag0: correlation.values[0].re,
            window_id: spectrum.window_id.clone(),
            n_omega: spectrum.omega_offsets.len(),
        })
    } else {
        None
    };

    if let Some(corr) = &estimates.correlation {
        if let Some(path) = doc.get("correlation_csv") {
            let mut out = String::from("lag,re,im,se\n");
            for i in 0..corr.lags.len() {
                out.push_str(&csv_line(&[
                    fmt_f64(corr.lags[i]),
                    fmt_f64(corr.values[i].re),
                    fmt_f64(corr.values[i].im),
                    fmt_f64(corr.se[i]),
                ]));
            }
            write_file(Path::new(path), &out)?;
        }
    }

    let n_dump = doc.get_u64("dump_trajectories").map_err(config_err)?.unwrap_or(0);
    if n_dump > 0 {
        let dir = doc
            .get("traj_dump_dir")
            .ok_or_else(|| CliError::Config("dump_trajectories needs traj_dump_dir".into()))?;
        for i in 0..n_dump.min(sim.n_traj) {
            // deterministic replay of the trajectories the estimators saw
            let traj = simulate_trajectory(params, &sim, i);
            let mut out = String::from("t,re_m,im_m,re_b,im_b\n");
            for k in 0..traj.len() {
                out.push_str(&csv_line(&[
                    fmt_f64(traj.times[k]),
                    fmt_f64(traj.m[k].re),
                    fmt_f64(traj.m[k].im),
                    fmt_f64(traj.b[k].re),
                    fmt_f64(traj.b[k].im),
                ]));
            }
            write_file(&Path::new(dir).join(format!("traj_{i:04}.csv")), &out)?;
        }
    }

    let mut pairs = echo_model(&model);
    pairs.extend(echo_sim(&sim));
    pairs.push((
        "batch_len".to_string(),
        fmt_f64(est_section.request.batch_len),
    ));
    if let Some(c) = est_section.request.correlation {
        pairs.push(("estimate_correlation".to_string(), "true".to_string()));
        pairs.push(("max_lag".to_string(), fmt_f64(c.max_lag)));
    }
    pairs.push((
        "estimate_spectrum".to_string(),
        est_section.spectrum.to_string(),
    ));
    let overall_pass = rows.iter().all(|r| r.passed());
    let document = SimulateDocument {
        report: ComparisonReport {
            command: command.to_string(),
            config: config::echo_to_map(pairs),
            regime,
            rows,
            overall_pass,
        },
        moments: estimates.moments,
        quadratures,
        correlation_lags: estimates.correlation.as_ref().map(|c| c.lags.len()),
        spectrum: spectrum_summary,
    };
    let format = OutputFormat::resolve(args.format.as_deref(), OutputFormat::Json);
    let content = match format {
        OutputFormat::Json => to_json(&document)?,
        OutputFormat::Csv => {
            let mut out = csv_config_header(&document.report.config);
            out.push_str(
                "observable,simulated,se,analytic,tolerance,verdict,tolerance_provenance,source_simulated,source_analytic\n",
            );
            for row in &document.report.rows {
                out.push_str(&csv_line(&[
                    row.observable.clone(),
                    fmt_f64(row.simulated),
                    fmt_f64(row.se),
                    fmt_f64(row.analytic),
                    fmt_f64(row.tolerance),
                    match row.verdict {
                        Verdict::Pass => "pass".into(),
                        Verdict::Fail => "fail".into(),
                    },
                    row.tolerance_provenance.clone(),
                    row.source_simulated.clone(),
                    row.source_analytic.clone(),
                ]));
            }
            out
        }
    };
    write_output(args.output.as_deref(), &content)?;
    if args.strict && !document.report.overall_pass {
        return Err(CliError::ComparisonFailed);
    }
    Ok(())
}
