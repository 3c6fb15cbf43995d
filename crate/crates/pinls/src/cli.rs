//! Experiment orchestration and persistence behind the command-line surface.
//!
//! Every emitted file embeds the fully resolved configuration and the
//! well-posedness window stamp; all floating-point output uses 17
//! significant digits so reruns with an identical config are byte-identical.

use crate::config::{ConfigError, RunConfig};
use crate::diagnostics::{self, DiagnosticRecord};
use crate::evolution::{self, Termination};
use crate::fractional;
use crate::operator::{bound_energy, lambda_coeff, OperatorError};
use num_complex::Complex64;
use serde_json::json;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invariant failure: {0}")]
    Invariant(String),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

/// Comment block stamped at the top of every CSV.
fn csv_preamble(cfg: &RunConfig) -> String {
    let stamp = cfg.evolution.window_stamp(cfg.operator.dimension);
    let resolved = toml::to_string(cfg).unwrap_or_default();
    let mut out = String::new();
    let _ = writeln!(out, "# window: {stamp}");
    for line in resolved.lines() {
        let _ = writeln!(out, "# config: {line}");
    }
    out
}

fn summary_base(cfg: &RunConfig) -> serde_json::Value {
    json!({
        "window": cfg.evolution.window_stamp(cfg.operator.dimension),
        "config": serde_json::to_value(cfg).unwrap_or(serde_json::Value::Null),
    })
}

fn write_summary(out_dir: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    std::fs::write(out_dir.join("summary.json"), serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn trajectory_csv(cfg: &RunConfig, records: &[DiagnosticRecord]) -> String {
    let mut out = csv_preamble(cfg);
    let lp_headers: String = records
        .first()
        .map(|r| r.lp_norms.iter().map(|(q, _)| format!(",l{q}_norm")).collect())
        .unwrap_or_default();
    let _ = writeln!(out, "t,mass,energy,dnorm,dhalf,bc_residual,re_q,im_q{lp_headers}");
    for r in records {
        let lp: String = r.lp_norms.iter().map(|(_, v)| format!(",{}", fmt_f(*v))).collect();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}{lp}",
            fmt_f(r.t),
            fmt_f(r.mass),
            fmt_f(r.energy),
            fmt_f(r.dnorm),
            fmt_f(r.dhalf),
            fmt_f(r.bc_residual),
            fmt_f(r.charge.re),
            fmt_f(r.charge.im),
        );
    }
    out
}

fn termination_str(t: Termination) -> &'static str {
    match t {
        Termination::Completed => "completed",
        Termination::BlowupSuspected => "blowup_suspected",
        Termination::SolverError => "solver_error",
    }
}

/// Spectrum report: eigenpair values, a Lambda table, and the eigen-residual
/// and resolvent-identity suites.  Returns an error on invariant failure so
/// the process exits nonzero.
pub fn cmd_spectrum(cfg: &RunConfig, out_dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir)?;
    let op = cfg.build_operator()?;
    let n = cfg.operator.dimension;
    let alpha = cfg.operator.alpha;
    let mut lines = csv_preamble(cfg);
    let _ = writeln!(lines, "lambda,re_lambda_coeff,im_lambda_coeff");
    for lam in [0.5, 1.0, 2.0, 4.0, 8.0] {
        match lambda_coeff(n, alpha, Complex64::new(lam, 0.0)) {
            Ok(v) => {
                let _ = writeln!(lines, "{},{},{}", fmt_f(lam), fmt_f(v.re), fmt_f(v.im));
            }
            Err(OperatorError::NearPole(_)) => {
                let _ = writeln!(lines, "{},pole,pole", fmt_f(lam));
            }
            Err(e) => return Err(e.into()),
        }
    }
    std::fs::write(out_dir.join("ratios.csv"), &lines)?;

    let mut summary = summary_base(cfg);
    let energy = bound_energy(n, alpha);
    summary["bound_state"] = match (&energy, op.bound_domain_state()) {
        (Some(e), Some(state)) => {
            let psi = op.synthesize(&state);
            let norm_sq = op.grid.l2_norm(&psi).powi(2);
            // eigen-residual suite
            let res = {
                let h = op.h_apply(&state);
                let diff = h.axpy(Complex64::new(-e, 0.0), &psi);
                op.grid.l2_norm(&diff) / op.grid.l2_norm(&psi)
            };
            if res > 1e-2 {
                return Err(CliError::Invariant(format!("eigen residual {res} > 1e-2")));
            }
            // resolvent eigen-identity at lambda = gauge
            let out = op.krein_resolvent_apply(&psi, Complex64::new(op.gauge, 0.0))?;
            let expect = psi.scaled(Complex64::new(1.0 / (e + op.gauge), 0.0));
            let rdiff = op.synthesize(&out).axpy(Complex64::new(-1.0, 0.0), &expect);
            let rres = op.grid.l2_norm(&rdiff) / op.grid.l2_norm(&expect);
            if rres > 1e-3 {
                return Err(CliError::Invariant(format!("resolvent identity residual {rres}")));
            }
            json!({"energy": e, "norm_sq": norm_sq, "eigen_residual": res,
                   "resolvent_identity_residual": rres})
        }
        _ => json!("no bound state"),
    };
    write_summary(out_dir, &summary)
}

pub fn cmd_evolve(cfg: &RunConfig, out_dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir)?;
    let op = cfg.build_operator()?;
    let psi0 = cfg.build_datum(&op)?;
    let traj = evolution::evolve(&op, &psi0, &cfg.evolution);
    std::fs::write(out_dir.join("trajectory.csv"), trajectory_csv(cfg, &traj.records))?;
    let mass0 = traj.records[0].mass;
    let energy0 = traj.records[0].energy;
    let mass_drift = traj
        .records
        .iter()
        .map(|r| (r.mass - mass0).abs() / mass0.abs().max(1e-300))
        .fold(0.0f64, f64::max);
    let energy_drift = traj
        .records
        .iter()
        .map(|r| (r.energy - energy0).abs() / energy0.abs().max(1e-300))
        .fold(0.0f64, f64::max);
    let mut summary = summary_base(cfg);
    summary["termination"] = json!(termination_str(traj.termination));
    summary["mass_drift"] = json!(mass_drift);
    summary["energy_drift"] = json!(energy_drift);
    summary["strichartz_lp_accumulation"] =
        json!(diagnostics::strichartz_accumulate(&op, &traj, cfg.evolution.p));
    if traj.termination == Termination::BlowupSuspected {
        summary["hint"] =
            json!("threshold crossing at fixed resolution; rerun at dt/2 and N x 2 to distinguish blow-up from under-resolution");
    }
    write_summary(out_dir, &summary)
}

pub fn cmd_picard(cfg: &RunConfig, out_dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir)?;
    let op = cfg.build_operator()?;
    let psi0 = cfg.build_datum(&op)?;
    let horizon = cfg.evolution.horizon;
    let outcome = evolution::picard_solve(
        &op,
        &psi0,
        horizon,
        cfg.picard.nodes,
        cfg.picard.iterations,
        &cfg.evolution,
    )?;
    let mut lines = csv_preamble(cfg);
    let _ = writeln!(lines, "k,increment,ratio");
    for (i, d) in outcome.increments.iter().enumerate() {
        let ratio = if i == 0 { String::new() } else { fmt_f(outcome.ratios[i - 1]) };
        let _ = writeln!(lines, "{},{},{ratio}", i + 1, fmt_f(*d));
    }
    std::fs::write(out_dir.join("ratios.csv"), &lines)?;

    // midpoint-vs-Picard discrepancy at the final time, sharing the linear
    // Crank-Nicolson grain with the Picard nodes
    let dt = cfg.evolution.dt;
    let delta = horizon / cfg.picard.nodes as f64;
    let substeps = ((0.5 * dt) / delta).round().max(1.0) as usize;
    let mut mid_cfg = cfg.evolution.clone();
    mid_cfg.cn_substeps = substeps;
    mid_cfg.dt = dt;
    let mut state = psi0.clone();
    let nsteps = (horizon / dt).round().max(1.0) as usize;
    for _ in 0..nsteps {
        state = evolution::exp_midpoint_step(&op, &state, &mid_cfg)?;
    }
    let pic_final = op.synthesize(outcome.states.last().unwrap());
    let diff = op.synthesize(&state).axpy(Complex64::new(-1.0, 0.0), &pic_final);
    let discrepancy = op.grid.l2_norm(&diff);

    let mut summary = summary_base(cfg);
    summary["increments"] = json!(outcome.increments);
    summary["ratios"] = json!(outcome.ratios);
    summary["non_contraction"] = json!(outcome.non_contraction);
    summary["midpoint_discrepancy"] = json!(discrepancy);
    write_summary(out_dir, &summary)
}

pub fn cmd_decay(cfg: &RunConfig, out_dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir)?;
    let op = cfg.build_operator()?;
    let datum = cfg.build_datum(&op)?;
    let phi = op.synthesize(&datum);
    let d = &cfg.decay;
    let sigma = if d.sigma <= 0.0 { f64::INFINITY } else { d.sigma };
    let times: Vec<f64> = (0..d.fit_points)
        .map(|k| {
            d.fit_start + (d.fit_stop - d.fit_start) * k as f64 / (d.fit_points - 1).max(1) as f64
        })
        .collect();
    let fit = diagnostics::decay_fit(&op, &phi, sigma, &times, d.max_substep)?;
    let mut lines = csv_preamble(cfg);
    let _ = writeln!(lines, "t,norm");
    for (t, v) in &fit.samples {
        let _ = writeln!(lines, "{},{}", fmt_f(*t), fmt_f(*v));
    }
    std::fs::write(out_dir.join("decay.csv"), &lines)?;
    let mut summary = summary_base(cfg);
    summary["beta_hat"] = json!(fit.beta_hat);
    summary["target"] = json!(fit.target);
    summary["short_window"] = json!(fit.short_window);
    write_summary(out_dir, &summary)
}

pub fn cmd_inequalities(cfg: &RunConfig, out_dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir)?;
    let op = cfg.build_operator()?;
    let state = cfg.build_datum(&op)?;
    let rows = fractional::inequality_report(&op, &state, &cfg.inequalities.qs)?;
    let mut lines = csv_preamble(cfg);
    let _ = writeln!(lines, "q,s_used,gn_ratio,embedding_ratio,flagged_slow");
    for r in &rows {
        let _ = writeln!(
            lines,
            "{},{},{},{},{}",
            fmt_f(r.q),
            fmt_f(r.s_used),
            fmt_f(r.gn_ratio),
            fmt_f(r.embedding_ratio),
            r.flagged_slow
        );
    }
    std::fs::write(out_dir.join("ratios.csv"), &lines)?;
    let mut summary = summary_base(cfg);
    summary["rows"] = serde_json::to_value(&rows)?;
    write_summary(out_dir, &summary)
}

/// Dispatch used by main and by the integration tests.
pub fn run_command(name: &str, cfg: &RunConfig, out_dir: &Path) -> Result<(), CliError> {
    match name {
        "spectrum" => cmd_spectrum(cfg, out_dir),
        "evolve" => cmd_evolve(cfg, out_dir),
        "picard" => cmd_picard(cfg, out_dir),
        "decay" => cmd_decay(cfg, out_dir),
        "inequalities" => cmd_inequalities(cfg, out_dir),
        other => Err(CliError::Invariant(format!("unknown subcommand {other}"))),
    }
}
