use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use peakgain_core::linalg::Matrix;
use peakgain_core::oracle::{default_horizon, l1_exact, worst_case, L1Estimate};
use peakgain_core::starnorm::{ellipsoid_boundary, solve_point, sweep, Degree, Multiplier, SweepResult};
use peakgain_core::tailsplit::tail_split;
use serde::Serialize;

use crate::io::{read_system, write_csv, write_json, CliError};
use crate::report::{BoundReport, ExactSection, ReportSettings, TailRow};
use crate::SweepArgs;

fn degree(d: u32) -> Result<Degree, CliError> {
    Degree::try_from(d).map_err(CliError::from)
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row_slice(i).to_vec()).collect()
}

fn multiplier_name(m: Multiplier) -> &'static str {
    match m {
        Multiplier::Full => "full",
        Multiplier::Diagonal => "diagonal",
    }
}

pub fn exact(path: &Path, tol: f64, out: Option<&Path>) -> Result<(), CliError> {
    let loaded = read_system(path)?;
    let est = l1_exact(&loaded.sys, tol)?;
    println!("{:<18}{}", "system", loaded.name);
    println!("{:<18}{:.10}", "value", est.value);
    println!("{:<18}{}", "truncation_time", est.truncation_time);
    println!("{:<18}{:.3e}", "tail_bound", est.tail_bound);
    println!("{:<18}{:.3e}", "quadrature_error", est.quadrature_error);
    if let Some(p) = out {
        write_json(p, &est)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct PointRow {
    alpha: f64,
    feasible: bool,
    status: String,
    iterations: usize,
    n_alpha: Option<f64>,
}

#[derive(Serialize)]
struct StarSummary {
    system: String,
    degree: u32,
    multiplier: &'static str,
    kappa: f64,
    alpha: f64,
    star_norm: f64,
    p: Vec<Vec<f64>>,
    points: Vec<PointRow>,
}

fn summarize(name: &str, r: &SweepResult, m: Multiplier) -> StarSummary {
    StarSummary {
        system: name.to_string(),
        degree: r.degree.as_u32(),
        multiplier: multiplier_name(m),
        kappa: r.kappa,
        alpha: r.best.alpha,
        star_norm: r.star_norm,
        p: r.best.p.as_ref().map(rows).unwrap_or_default(),
        points: r
            .points
            .iter()
            .map(|p| PointRow {
                alpha: p.alpha,
                feasible: p.feasible,
                status: p.status.to_string(),
                iterations: p.iterations,
                n_alpha: p.n_alpha,
            })
            .collect(),
    }
}

pub fn star(
    path: &Path,
    d: u32,
    args: &SweepArgs,
    verbose: bool,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let loaded = read_system(path)?;
    let d = degree(d)?;
    let settings = args.settings();
    let r = sweep(&loaded.sys, d, &settings)?;
    if verbose {
        println!("{:>14} {:>9} {:>15} {:>5} {:>14}", "alpha", "feasible", "status", "iter", "n_alpha");
        for p in &r.points {
            let n = p.n_alpha.map_or_else(|| "-".to_string(), |v| format!("{v:.8e}"));
            println!(
                "{:>14.8e} {:>9} {:>15} {:>5} {:>14}",
                p.alpha, p.feasible, p.status, p.iterations, n
            );
        }
        let mut logged = settings.clone();
        logged.sdp.record_iterations = true;
        let sol = solve_point(&loaded.sys, d, &logged, r.best.alpha)?;
        println!();
        println!("solver log at alpha = {:.8e} (normalized units)", r.best.alpha);
        println!(
            "{:>4} {:>15} {:>15} {:>10} {:>10} {:>10} {:>6} {:>6} {:>8}",
            "it", "objective", "dual_bound", "mu", "pinf", "dinf", "ap", "ad", "sigma"
        );
        for rec in &sol.log {
            println!(
                "{:>4} {:>15.8e} {:>15.8e} {:>10.2e} {:>10.2e} {:>10.2e} {:>6.3} {:>6.3} {:>8.2e}",
                rec.iteration,
                rec.objective,
                rec.dual_bound,
                rec.mu,
                rec.primal_infeasibility,
                rec.dual_infeasibility,
                rec.step_primal,
                rec.step_dual,
                rec.sigma
            );
        }
        println!();
    }
    println!("{:<10}{}", "system", loaded.name);
    println!("{:<10}{}", "degree", r.degree.as_u32());
    println!("{:<10}{:.8}", "kappa", r.kappa);
    println!("{:<10}{:.8}", "alpha", r.best.alpha);
    println!("{:<10}{:.8}", "star", r.star_norm);
    if let Some(p) = out {
        write_json(p, &summarize(&loaded.name, &r, settings.multiplier))?;
    }
    Ok(())
}

pub fn worstcase(
    path: &Path,
    dt: f64,
    horizon: Option<f64>,
    out: Option<&Path>,
    args: &SweepArgs,
) -> Result<(), CliError> {
    let loaded = read_system(path)?;
    let sys = &loaded.sys;
    let r = sweep(sys, Degree::One, &args.settings())?;
    let p = r
        .best
        .p
        .as_ref()
        .ok_or_else(|| CliError::Numeric("optimal sweep point has no ellipsoid".into()))?;
    let horizon = horizon.unwrap_or_else(|| default_horizon(sys));
    let run = worst_case(sys, p, dt, horizon)?;
    println!("{:<10}{}", "system", loaded.name);
    println!("{:<10}{:.8}", "peak", run.peak_output);
    println!("{:<10}{:.6}", "at", run.peak_time);
    println!("{:<10}{}", "dt", run.dt);
    println!("{:<10}{}", "horizon", run.horizon);
    if run.peak_near_end() {
        eprintln!(
            "warning: peak is at the end of the {} s horizon; the true peak may not have been reached",
            run.horizon
        );
    }
    if let Some(path) = out {
        let n = sys.n();
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        header.push("u".into());
        header.push("y".into());
        let data: Vec<Vec<f64>> = run
            .trajectory
            .iter()
            .map(|s| {
                let mut row = vec![s.t];
                row.extend_from_slice(&s.x);
                row.push(s.u);
                row.push(s.y);
                row
            })
            .collect();
        write_csv(Some(path), &header, &data)?;
    }
    Ok(())
}

pub fn tailsplit(
    path: &Path,
    t0: f64,
    d: u32,
    tol: f64,
    args: &SweepArgs,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let loaded = read_system(path)?;
    let r = tail_split(&loaded.sys, t0, degree(d)?, tol, &args.settings())?;
    println!("{:<12}{}", "system", loaded.name);
    println!("{:<12}{}", "t0", r.t0);
    println!("{:<12}{}", "degree", r.degree);
    println!("{:<12}{:.8}", "head", r.head);
    println!("{:<12}{:.8}", "tail_bound", r.tail_bound);
    println!("{:<12}{:.8}", "total", r.total);
    if let Some(p) = out {
        write_json(p, &r)?;
    }
    Ok(())
}

pub fn reachset(
    path: &Path,
    d: u32,
    samples: usize,
    out: Option<&Path>,
    args: &SweepArgs,
) -> Result<(), CliError> {
    let loaded = read_system(path)?;
    if loaded.sys.n() != 2 {
        return Err(peakgain_core::Error::NotPlanar { n: loaded.sys.n() }.into());
    }
    let d = degree(d)?;
    let r = sweep(&loaded.sys, d, &args.settings())?;
    let pts = ellipsoid_boundary(&r.best, d, samples)?;
    let header = ["theta", "x1", "x2"].map(String::from);
    let data: Vec<Vec<f64>> = pts.iter().map(|&(t, x1, x2)| vec![t, x1, x2]).collect();
    write_csv(out, &header, &data)
}

/// Exact-value tolerance used by `report`.
const REPORT_EXACT_TOL: f64 = 1e-6;
/// Head quadrature tolerance used by `report`.
const REPORT_QUAD_TOL: f64 = 1e-10;
/// Worst-case step used by `report`.
const REPORT_DT: f64 = 1e-3;

pub fn report(path: &Path, t0s: &[f64], out: Option<&Path>, args: &SweepArgs) -> Result<(), CliError> {
    let loaded = read_system(path)?;
    let sys = &loaded.sys;
    let settings = args.settings();
    let horizon = default_horizon(sys);
    let mut timings = BTreeMap::new();
    let mut errors = BTreeMap::new();

    let clock = Instant::now();
    let exact: Option<L1Estimate> = match l1_exact(sys, REPORT_EXACT_TOL) {
        Ok(e) => Some(e),
        Err(e) => {
            errors.insert("exact".to_string(), e.to_string());
            None
        }
    };
    timings.insert("exact".to_string(), clock.elapsed().as_secs_f64());

    let clock = Instant::now();
    let d1 = sweep(sys, Degree::One, &settings)
        .map_err(|e| errors.insert("star_d1".to_string(), e.to_string()))
        .ok();
    timings.insert("star_d1".to_string(), clock.elapsed().as_secs_f64());

    let clock = Instant::now();
    let d2 = if sys.n() >= 2 {
        sweep(sys, Degree::Two, &settings)
            .map_err(|e| errors.insert("star_d2".to_string(), e.to_string()))
            .ok()
    } else {
        None
    };
    timings.insert("star_d2".to_string(), clock.elapsed().as_secs_f64());

    let clock = Instant::now();
    let lower = d1.as_ref().and_then(|r| r.best.p.as_ref()).and_then(|p| {
        worst_case(sys, p, REPORT_DT, horizon)
            .map_err(|e| errors.insert("lower_bound".to_string(), e.to_string()))
            .ok()
    });
    timings.insert("lower_bound".to_string(), clock.elapsed().as_secs_f64());

    let clock = Instant::now();
    let mut tail_rows = Vec::new();
    for &t0 in t0s {
        for d in [Degree::One, Degree::Two] {
            if d == Degree::Two && sys.n() < 2 {
                continue;
            }
            match tail_split(sys, t0, d, REPORT_QUAD_TOL, &settings) {
                Ok(r) => tail_rows.push(TailRow {
                    t0,
                    degree: r.degree,
                    total: r.total,
                }),
                Err(e) => {
                    errors.insert(format!("tail_split t0={t0} d={}", d.as_u32()), e.to_string());
                }
            }
        }
    }
    timings.insert("tail_split".to_string(), clock.elapsed().as_secs_f64());

    let mut report = BoundReport {
        system_name: loaded.name.clone(),
        exact: exact.map(|e| ExactSection {
            value: e.value,
            tolerance: e.tolerance,
            truncation_time: e.truncation_time,
            tail_bound: e.tail_bound,
            quadrature_error: e.quadrature_error,
        }),
        star_d1: d1.as_ref().map(|r| r.star_norm),
        star_d2: d2.as_ref().map(|r| r.star_norm),
        lower_bound: lower.map(|w| w.peak_output),
        tail_split_rows: tail_rows,
        settings: ReportSettings {
            grid_points: settings.grid_points,
            refine_iterations: settings.refine_iterations,
            multiplier: multiplier_name(settings.multiplier).to_string(),
            sdp_tolerance: settings.sdp.tolerance,
            exact_tolerance: REPORT_EXACT_TOL,
            quad_tolerance: REPORT_QUAD_TOL,
            dt: REPORT_DT,
            horizon,
        },
        timings,
        ordering_violations: Vec::new(),
        errors,
    };
    report.check_ordering();
    print!("{}", report.to_table());
    if let Some(p) = out {
        write_json(p, &report)?;
    }
    if !report.ordering_violations.is_empty() {
        eprintln!("ORDERING VIOLATION: lower <= exact <= upper does not hold");
        return Err(CliError::Numeric(report.ordering_violations.join("; ")));
    }
    if !report.errors.is_empty() {
        let failed: Vec<&str> = report.errors.keys().map(String::as_str).collect();
        return Err(CliError::Numeric(format!("sections failed: {}", failed.join(", "))));
    }
    Ok(())
}
