//! Executes a manifest and writes its artifacts.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use chenlee::estimates::{
    measure_contraction_constant, product_bound_slack, verify_bilinear_estimate, verify_kernel_bounds,
    verify_linear_estimates, verify_product_bound, verify_smoothing, BilinearProbe, ContractionProbe, EstimateReport,
    KernelGrid, LinearEstimateGrid, PhaseModel, ProductBoundGrid, RandomFieldSpec, SmoothingGrid, SpectralProfile,
};
use chenlee::fourier::{l2_norm, sup_sobolev_norm};
use chenlee::illposed::{inflation_scan, oracle_check, OracleOptions};
use chenlee::io::{read_field, write_trajectory};
use chenlee::{
    etd_march, existence_time, picard_solve, sobolev_norm, solution_norm, Error, FourierField, ModelParams,
    SobolevIndex, SolverConfig, Trajectory,
};

use crate::config::{Config, Initial};
use crate::error::CliError;
use crate::manifest::{Command, RunManifest};

/// What a finished run reports.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    /// Whether every pass criterion of the command held.
    pub pass: bool,
    /// Contents of `summary.json`.
    pub summary: Value,
}

/// Creates the output directory, refusing a non-empty one unless `force` is set.
pub fn prepare_output(m: &RunManifest) -> Result<(), CliError> {
    if m.out.exists() {
        let mut entries = fs::read_dir(&m.out).map_err(|e| CliError::io(format!("reading {}", m.out.display()), e))?;
        if entries.next().is_some() && !m.force {
            return Err(CliError::OutputExists(m.out.clone()));
        }
    }
    fs::create_dir_all(&m.out).map_err(|e| CliError::io(format!("creating {}", m.out.display()), e))
}

/// Runs the command in `m`, writing `config.cfg`, `summary.json` and the
/// command's own artifacts into `m.out`.
pub fn run(m: &RunManifest) -> Result<RunOutcome, CliError> {
    prepare_output(m)?;
    write(&m.out.join("config.cfg"), m.config.render())?;
    let c = &m.config;
    let (pass, results) = match m.command {
        Command::Simulate => simulate(c, &m.out)?,
        Command::Picard => picard(c, &m.out)?,
        Command::VerifyEstimates => verify(c, &m.out)?,
        Command::InflationScan => scan(c, &m.out)?,
        Command::OracleCheck => oracle(c, &m.out)?,
    };
    let summary = json!({
        "command": m.command.name(),
        "seed": m.seed,
        "config": c.to_json(),
        "pass": pass,
        "results": results,
    });
    write_json(&m.out.join("summary.json"), &summary)?;
    Ok(RunOutcome { pass, summary })
}

/// Writes `failure.json` describing `err` into the output directory, if it exists.
pub fn write_failure(m: &RunManifest, err: &CliError) -> Result<(), CliError> {
    if !m.out.is_dir() {
        return Ok(());
    }
    let mut record = json!({
        "command": m.command.name(),
        "seed": m.seed,
        "config": m.config.to_json(),
        "error_kind": err.kind(),
        "message": err.to_string(),
        "exit_code": err.exit_code(),
    });
    if let CliError::Core(Error::NotConverged(report)) = err {
        record["picard"] = serde_json::to_value(report).expect("report serializes");
    }
    write_json(&m.out.join("failure.json"), &record)
}

fn header(c: &Config) -> Vec<String> {
    let mut h = vec![format!("chenlee {}", c.command().name())];
    h.extend(c.lines());
    h
}

fn write(path: &Path, text: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("json values serialize");
    text.push('\n');
    write(path, text)
}

/// CSV with the resolved config as leading `#` lines.
fn write_csv(path: &Path, c: &Config, body: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<(), CliError> {
    let mut buf = Vec::new();
    for line in header(c) {
        let _ = writeln!(buf, "# {line}");
    }
    body(&mut buf).map_err(|e| CliError::io("formatting csv", e))?;
    write(path, buf)
}

fn params(c: &Config) -> Result<ModelParams, CliError> {
    Ok(ModelParams::new(c.real("beta"), c.real("eta"))?)
}

fn to_value(v: &impl Serialize) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn initial_data(c: &Config, max_mode: usize) -> Result<FourierField, CliError> {
    match c.initial() {
        Initial::Zero => Ok(FourierField::zeros(max_mode)),
        Initial::Random => {
            let mut spec = RandomFieldSpec::new(max_mode, SpectralProfile::Sobolev { s: c.real("profile") }, c.seed());
            spec.amplitude = c.real("amplitude");
            Ok(spec.sample(c.whole("sample")))
        }
        Initial::File(path) => {
            let field = read_field(&path)?;
            if field.max_mode() > max_mode {
                return Err(Error::Precondition(format!(
                    "{} holds modes up to {} but max_mode is {max_mode}",
                    path.display(),
                    field.max_mode()
                ))
                .into());
            }
            Ok(field.resized(max_mode))
        }
    }
}

fn trajectory_summary(traj: &Trajectory, s: SobolevIndex) -> Value {
    let m0 = traj.states()[0].mean();
    json!({
        "times": traj.times(),
        "l2_norms": traj.states().iter().map(l2_norm).collect::<Vec<_>>(),
        "hs_norms": traj.states().iter().map(|u| sobolev_norm(u, s)).collect::<Vec<_>>(),
        "solution_norm": solution_norm(traj, s),
        "sup_hs_norm": sup_sobolev_norm(traj, s),
        "max_mean_drift": traj.states().iter().map(|u| (u.mean() - m0).norm()).fold(0.0, f64::max),
    })
}

fn simulate(c: &Config, out: &Path) -> Result<(bool, Value), CliError> {
    let p = params(c)?;
    let s = SobolevIndex::new(c.real("s"))?;
    let max_mode = c.count("max_mode");
    let mut cfg = SolverConfig::new(p, s, max_mode, c.real("horizon"), c.count("n_steps"));
    cfg.nonlinear = c.flag("nonlinear");
    cfg.energy_slack = c.real("energy_slack");
    let phi = initial_data(c, max_mode)?;
    let traj = etd_march(&phi, &cfg)?;
    write_trajectory(&out.join("trajectory"), &traj, &header(c))?;
    Ok((true, trajectory_summary(&traj, s)))
}

fn picard(c: &Config, out: &Path) -> Result<(bool, Value), CliError> {
    let p = params(c)?;
    let s = SobolevIndex::new(c.real("s"))?.require_above_minus_half()?;
    let max_mode = c.count("max_mode");
    let mut phi = initial_data(c, max_mode)?;
    if let Some(target) = c.optional_real("data_norm") {
        let norm = sobolev_norm(&phi, s);
        if norm > 0.0 {
            phi = phi.scaled(target / norm);
        }
    }
    let (constant, measurement) = match c.optional_real("contraction_constant") {
        Some(v) => (v, Value::Null),
        None => {
            let mut spec = RandomFieldSpec::new(c.count("measure_max_mode"), SpectralProfile::Sobolev { s: s.value() }, c.seed());
            spec.phases = PhaseModel::Shifted;
            let m = measure_contraction_constant(s, p, &spec, c.count("measure_samples"), &ContractionProbe::default())?;
            (m.constant, to_value(&m))
        }
    };
    let phi_norm = sobolev_norm(&phi, s);
    let horizon = match c.optional_real("horizon") {
        Some(t) => t,
        None => existence_time(phi_norm, s, constant)?,
    };
    let mut cfg = SolverConfig::new(p, s, max_mode, horizon, c.count("n_steps"));
    cfg.picard_tol = c.real("picard_tol");
    cfg.picard_max_iter = c.count("picard_max_iter");
    cfg.quadrature_nodes_per_step = c.count("quadrature_nodes_per_step");
    cfg.contraction_constant = constant;
    let (traj, report) = picard_solve(&phi, &cfg)?;
    write_trajectory(&out.join("trajectory"), &traj, &header(c))?;
    let results = json!({
        "horizon": horizon,
        "data_norm": phi_norm,
        "contraction_constant": constant,
        "contraction_measurement": measurement,
        "picard": to_value(&report),
        "trajectory": trajectory_summary(&traj, s),
    });
    write_json(&out.join("picard.json"), &results)?;
    Ok((report.converged, results))
}

fn campaign_summary(rep: &EstimateReport, pass: bool, violations: usize) -> Value {
    json!({
        "name": rep.name,
        "pass": pass,
        "seed": rep.seed,
        "rows": rep.lhs.len(),
        "violations": violations,
        "fitted_constant": rep.fitted_constant,
        "refinement_constants": rep.refinement_constants,
        "refinement_drift": rep.refinement_drift(),
        "fitted_exponent": to_value(&rep.fitted_exponent),
        "groups": to_value(&rep.groups),
    })
}

/// Rows where `lhs > constant · rhs · (1 + slack)`.
fn count_violations(rep: &EstimateReport, constant: f64, slack: f64) -> usize {
    rep.lhs
        .iter()
        .zip(&rep.rhs)
        .filter(|(l, r)| **l > constant * **r * (1.0 + slack))
        .count()
}

fn verify(c: &Config, out: &Path) -> Result<(bool, Value), CliError> {
    let p = params(c)?;
    let seed = c.seed();
    let mut all = true;
    let mut results = Vec::new();
    let mut record = |rep: &EstimateReport, file: String, pass: bool, violations: usize| -> Result<(), CliError> {
        write_csv(&out.join(&file), c, |buf| rep.write_csv(buf))?;
        all &= pass;
        let mut v = campaign_summary(rep, pass, violations);
        v["csv"] = json!(file);
        results.push(v);
        Ok(())
    };
    for campaign in c.campaigns() {
        match campaign.as_str() {
            "linear" => {
                let grid = LinearEstimateGrid {
                    contraction_samples: c.count("linear_samples"),
                    max_mode: c.count("linear_max_mode"),
                    refinements: c.count("linear_refinements"),
                    seed,
                    ..Default::default()
                };
                let rep = verify_linear_estimates(&grid, p)?;
                let v = count_violations(&rep.contraction, c.real("uniform_bound_constant"), 0.0);
                record(&rep.contraction, "linear_uniform.csv".into(), v == 0, v)?;
                record(&rep.smoothing, "linear_weighted.csv".into(), rep.smoothing.pass, 0)?;
            }
            "product" => {
                let grid = ProductBoundGrid {
                    n_samples: c.count("product_samples"),
                    max_mode: c.count("product_max_mode"),
                    seed,
                    ..Default::default()
                };
                let rep = verify_product_bound(&grid)?;
                let v = count_violations(&rep, c.real("product_bound_constant"), product_bound_slack(grid.max_mode));
                record(&rep, "product.csv".into(), v == 0, v)?;
            }
            "kernel" => {
                let grid = KernelGrid {
                    n_times: c.count("kernel_n_times"),
                    ..Default::default()
                };
                let reps = verify_kernel_bounds(&grid)?;
                for (i, rep) in reps.sup_bound.iter().enumerate() {
                    record(rep, format!("kernel_sup_{i}.csv"), rep.pass, 0)?;
                }
                for (i, rep) in reps.l2_bound.iter().enumerate() {
                    record(rep, format!("kernel_l2_{i}.csv"), rep.pass, 0)?;
                }
            }
            "bilinear" => {
                let horizons = c.reals("bilinear_horizons");
                for (i, s) in c.reals("bilinear_s").into_iter().enumerate() {
                    let mut spec = RandomFieldSpec::new(c.count("bilinear_max_mode"), SpectralProfile::Sobolev { s }, seed);
                    spec.phases = PhaseModel::Shifted;
                    let rep = verify_bilinear_estimate(
                        SobolevIndex::new(s)?,
                        &horizons,
                        &spec,
                        p,
                        c.count("bilinear_samples"),
                        &BilinearProbe::default(),
                    )?;
                    record(&rep, format!("bilinear_{i}.csv"), rep.pass, 0)?;
                }
            }
            "smoothing" => {
                let grid = SmoothingGrid {
                    s: c.real("smoothing_s"),
                    time: c.real("smoothing_time"),
                    max_modes: c.counts("smoothing_max_modes"),
                    n_steps: c.count("smoothing_n_steps"),
                    n_samples: c.count("smoothing_samples"),
                    floor: c.real("smoothing_floor"),
                    seed,
                };
                let rep = verify_smoothing(&grid, p)?;
                record(&rep, "smoothing.csv".into(), rep.pass, 0)?;
            }
            other => unreachable!("campaign {other} passed validation"),
        }
    }
    Ok((all, Value::Array(results)))
}

fn scan(c: &Config, out: &Path) -> Result<(bool, Value), CliError> {
    let rep = inflation_scan(SobolevIndex::new(c.real("s"))?, params(c)?, c.real("t"), &c.modes("n"))?;
    write_csv(&out.join("inflation.csv"), c, |buf| rep.write_csv(buf))?;
    Ok((rep.pass, to_value(&rep)))
}

fn oracle(c: &Config, out: &Path) -> Result<(bool, Value), CliError> {
    let opts = OracleOptions {
        n_steps: c.count("n_steps"),
        quadrature_nodes_per_step: c.count("quadrature_nodes_per_step"),
        max_refinements: c.count("max_refinements"),
        tolerance: c.real("tolerance"),
    };
    let rep = oracle_check(c.whole("n"), SobolevIndex::new(c.real("s"))?, params(c)?, c.real("t"), &opts)?;
    let v = to_value(&rep);
    write_json(&out.join("oracle.json"), &json!({ "config": c.to_json(), "seed": c.seed(), "report": v }))?;
    Ok((rep.pass, v))
}
