//! The experiment subcommands. Every output file starts with a version,
//! seed and config-hash header; bodies are byte-stable across reruns and
//! thread counts.

use crate::config::RunConfig;
use crate::output::{fmt, fmt_opt, write_csv, write_json, Meta};
use gibbs_perc::bounds::{self, BoundConstants};
use gibbs_perc::branching;
use gibbs_perc::contour2d::{self, CellGrid, EnvelopeParams};
use gibbs_perc::percolation;
use gibbs_perc::sampler::{self, derive_seed, MoveKind};
use gibbs_perc::snapshot::write_snapshot;
use serde::Serialize;
use std::fs;
use std::path::Path;

pub enum CmdError {
    /// Configuration or hypothesis violations: exit code 2.
    Usage(String),
    /// Runtime failures (I/O and the like): exit code 1.
    Runtime(String),
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::Runtime(format!("io error: {e}"))
    }
}

fn usage<E: std::fmt::Display>(e: E) -> CmdError {
    CmdError::Usage(e.to_string())
}

pub struct Ctx<'a> {
    pub config: &'a RunConfig,
    pub out_dir: &'a Path,
    pub json: bool,
    pub config_hash: &'a str,
}

impl Ctx<'_> {
    fn meta<'a>(&'a self, kind: &'a str) -> Meta<'a> {
        Meta { kind, seed: self.config.mc.seed, config_hash: self.config_hash }
    }
}

#[derive(Serialize)]
struct BoundsRow {
    lambda: f64,
    beta_minus: Option<f64>,
    beta_plus: Option<f64>,
    lambda_minus: Option<f64>,
    lambda_plus: Option<f64>,
    verdict: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta_minus_printed: Option<f64>,
}

/// Phase-diagram table over the lambda grid.
pub fn cmd_bounds(ctx: &Ctx, minus_only: bool, printed_beta_minus: bool) -> Result<(), CmdError> {
    let cfg = ctx.config;
    cfg.validate_common().map_err(CmdError::Usage)?;
    if !minus_only {
        // the table carries the percolation-side columns by default
        cfg.validate_contour().map_err(CmdError::Usage)?;
    }
    let p = cfg.potential().map_err(CmdError::Usage)?;
    let cp = cfg.contour_params();
    let diagram = bounds::phase_diagram(&cfg.sweep.lambda_grid, &p, cfg.model.nu, cfg.model.ell, &cp)
        .map_err(usage)?;
    let printed_constants = if printed_beta_minus {
        BoundConstants::from_potential(&p, cfg.model.nu, cfg.model.ell).ok()
    } else {
        None
    };

    let mut rows = Vec::new();
    let mut json_rows = Vec::new();
    let mut warnings = Vec::new();
    for point in &diagram.points {
        let verdict = match (diagram.lambda_minus, diagram.lambda_plus) {
            (_, Some(lp)) if point.lambda > lp => "above_lambda_plus",
            (Some(lm), _) if point.lambda < lm => "below_lambda_minus",
            _ => "between_thresholds",
        };
        if point.curve_order_violated {
            warnings.push(format!(
                "warning: beta_minus >= beta_plus at lambda={}",
                point.lambda
            ));
        }
        let printed = printed_constants.as_ref().and_then(|c| {
            point.beta_minus.is_some().then(|| c.beta_minus_printed(point.lambda))
        });
        let mut row = vec![
            fmt(point.lambda),
            fmt_opt(point.beta_minus),
            fmt_opt(point.beta_plus),
            fmt_opt(diagram.lambda_minus),
            fmt_opt(diagram.lambda_plus),
            verdict.to_string(),
        ];
        if printed_beta_minus {
            row.push(fmt_opt(printed));
        }
        rows.push(row);
        json_rows.push(BoundsRow {
            lambda: point.lambda,
            beta_minus: point.beta_minus,
            beta_plus: point.beta_plus,
            lambda_minus: diagram.lambda_minus,
            lambda_plus: diagram.lambda_plus,
            verdict: verdict.to_string(),
            beta_minus_printed: printed,
        });
    }
    fs::create_dir_all(ctx.out_dir)?;
    let mut header = "lambda,beta_minus,beta_plus,lambda_minus,lambda_plus,verdict".to_string();
    if printed_beta_minus {
        header.push_str(",beta_minus_printed");
    }
    write_csv(ctx.out_dir.join("bounds.csv"), &ctx.meta("bounds"), &header, &rows, &warnings)?;
    if ctx.json {
        write_json(ctx.out_dir.join("bounds.json"), &ctx.meta("bounds"), &json_rows)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct DiagnosticsRow {
    sweep: u64,
    n: u64,
    density: f64,
    energy: f64,
}

/// One chain at the [mc] parameters: snapshot dumps plus a diagnostics table.
pub fn cmd_simulate(ctx: &Ctx) -> Result<(), CmdError> {
    let cfg = ctx.config;
    cfg.validate_common().map_err(CmdError::Usage)?;
    let p = cfg.potential().map_err(CmdError::Usage)?;
    let params = cfg.mc_params();
    let run = sampler::run_chain(&params, &p).map_err(usage)?;

    let snap_dir = ctx.out_dir.join("snapshots");
    fs::create_dir_all(&snap_dir)?;
    for snap in &run.snapshots {
        let path = snap_dir.join(format!("snap_{:08}.txt", snap.sweep));
        let mut file = std::io::BufWriter::new(fs::File::create(path)?);
        write_snapshot(&mut file, &snap.config, params.seed, snap.sweep)?;
    }

    let volume = params.volume();
    let d = &run.diagnostics;
    let rows: Vec<Vec<String>> = d
        .count_trace
        .iter()
        .zip(&d.energy_trace)
        .enumerate()
        .map(|(i, (&n, &e))| {
            vec![
                (i as u64 + 1).to_string(),
                n.to_string(),
                fmt(n as f64 / volume),
                fmt(e),
            ]
        })
        .collect();
    let json_rows: Vec<DiagnosticsRow> = d
        .count_trace
        .iter()
        .zip(&d.energy_trace)
        .enumerate()
        .map(|(i, (&n, &e))| DiagnosticsRow {
            sweep: i as u64 + 1,
            n,
            density: n as f64 / volume,
            energy: e,
        })
        .collect();
    let footers = vec![
        format!("acc_birth={}", fmt(d.acceptance_rate(MoveKind::Birth))),
        format!("acc_death={}", fmt(d.acceptance_rate(MoveKind::Death))),
        format!("acc_translate={}", fmt(d.acceptance_rate(MoveKind::Translate))),
        format!("r_cut={}", fmt(d.r_cut)),
        format!("truncation_bound_per_particle={}", fmt(d.truncation_bound_per_particle)),
        format!("moves_per_sweep={}", d.moves_per_sweep),
        format!("rng={}", d.rng_name),
    ];
    write_csv(
        ctx.out_dir.join("diagnostics.csv"),
        &ctx.meta("simulate"),
        "sweep,n,density,energy",
        &rows,
        &footers,
    )?;
    if ctx.json {
        write_json(ctx.out_dir.join("diagnostics.json"), &ctx.meta("simulate"), &json_rows)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct PercRow {
    lambda: f64,
    beta: f64,
    ell: f64,
    box_len: f64,
    replicas: u64,
    theta_hat: f64,
    ci_lo: f64,
    ci_hi: f64,
    mean_cluster_size: f64,
}

/// Crossing-probability estimates over the (lambda, beta) grid.
pub fn cmd_percolation(ctx: &Ctx) -> Result<(), CmdError> {
    let cfg = ctx.config;
    cfg.validate_common().map_err(CmdError::Usage)?;
    cfg.validate_percolation().map_err(CmdError::Usage)?;
    if cfg.sweep.replicas == 0 {
        return Err(CmdError::Usage("sweep.replicas must be >= 1".into()));
    }
    if cfg.sweep.lambda_grid.is_empty() || cfg.sweep.beta_grid.is_empty() {
        return Err(CmdError::Usage("empty (lambda, beta) grid".into()));
    }
    let p = cfg.potential().map_err(CmdError::Usage)?;
    let proxy = cfg.proxy().map_err(CmdError::Usage)?;
    let base = cfg.mc_params();
    let ell = cfg.model.ell;

    let mut rows = Vec::new();
    let mut json_rows = Vec::new();
    let mut point_idx = 0_u64;
    for &lambda in &cfg.sweep.lambda_grid {
        for &beta in &cfg.sweep.beta_grid {
            let mut params = base.clone();
            params.lambda = lambda;
            params.beta = beta;
            params.seed = derive_seed(base.seed, point_idx);
            point_idx += 1;
            let est =
                percolation::theta_estimate_with(&params, &p, ell, cfg.sweep.replicas, proxy)
                    .map_err(usage)?;
            rows.push(vec![
                fmt(lambda),
                fmt(beta),
                fmt(ell),
                fmt(params.box_len),
                est.replicas.to_string(),
                fmt(est.theta_hat),
                fmt(est.ci95.0),
                fmt(est.ci95.1),
                fmt(est.mean_cluster_size),
            ]);
            json_rows.push(PercRow {
                lambda,
                beta,
                ell,
                box_len: params.box_len,
                replicas: est.replicas,
                theta_hat: est.theta_hat,
                ci_lo: est.ci95.0,
                ci_hi: est.ci95.1,
                mean_cluster_size: est.mean_cluster_size,
            });
        }
    }
    fs::create_dir_all(ctx.out_dir)?;
    write_csv(
        ctx.out_dir.join("perc.csv"),
        &ctx.meta("percolation"),
        "lambda,beta,ell,L,replicas,theta_hat,ci_lo,ci_hi,mean_cluster_size",
        &rows,
        &[],
    )?;
    if ctx.json {
        write_json(ctx.out_dir.join("perc.json"), &ctx.meta("percolation"), &json_rows)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ContourStatRow {
    n: usize,
    empirical_freq: f64,
    envelope: Option<f64>,
}

#[derive(Serialize)]
struct ContourDump {
    sweep: u64,
    contours: Vec<Vec<(i32, i32)>>,
}

/// Contour-length statistics for one chain, with the exponential envelope
/// where its rate is positive.
pub fn cmd_contours(ctx: &Ctx) -> Result<(), CmdError> {
    let cfg = ctx.config;
    cfg.validate_common().map_err(CmdError::Usage)?;
    cfg.validate_contour().map_err(CmdError::Usage)?;
    let p = cfg.potential().map_err(CmdError::Usage)?;
    let params = cfg.mc_params();
    let run = sampler::run_chain(&params, &p).map_err(usage)?;
    let snapshots: Vec<_> = run.snapshots.iter().map(|s| s.config.clone()).collect();

    let window = p
        .attraction_window(cfg.contour.m, cfg.contour.delta)
        .map_err(usage)?;
    let grid = CellGrid::centered(params.box_len, p.crossover(), cfg.contour.delta);
    let envelope = EnvelopeParams {
        beta: params.beta,
        lambda: params.lambda,
        m: cfg.contour.m,
        eps: window.eps,
        a: window.a,
    };
    let stats = contour2d::contour_statistics(&snapshots, &grid, Some(&envelope));

    let rows: Vec<Vec<String>> = stats
        .iter()
        .map(|s| vec![s.n.to_string(), fmt(s.empirical_freq), fmt_opt(s.envelope)])
        .collect();
    let json_rows: Vec<ContourStatRow> = stats
        .iter()
        .map(|s| ContourStatRow { n: s.n, empirical_freq: s.empirical_freq, envelope: s.envelope })
        .collect();
    fs::create_dir_all(ctx.out_dir)?;
    write_csv(
        ctx.out_dir.join("contours.csv"),
        &ctx.meta("contours"),
        "n,empirical_freq,envelope",
        &rows,
        &[],
    )?;
    if ctx.json {
        write_json(ctx.out_dir.join("contours.json"), &ctx.meta("contours"), &json_rows)?;
        // cell-level dumps for debugging
        let dumps: Vec<ContourDump> = run
            .snapshots
            .iter()
            .map(|s| {
                let empty = contour2d::empty_cells(&s.config, &grid);
                let report = contour2d::c_contours_around_origin(&empty, &grid);
                ContourDump {
                    sweep: s.sweep,
                    contours: report.contours.into_iter().map(|c| c.cells).collect(),
                }
            })
            .collect();
        write_json(ctx.out_dir.join("contour_cells.json"), &ctx.meta("contours"), &dumps)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct GwRow {
    lambda: f64,
    beta: f64,
    mean_bound: f64,
    law_mean: f64,
    extinction_rate: f64,
    mean_total_size: f64,
    bound_1_over_eps: f64,
}

/// Dominating-process extinction statistics over the (lambda, beta) grid.
pub fn cmd_gw(ctx: &Ctx) -> Result<(), CmdError> {
    let cfg = ctx.config;
    cfg.validate_common().map_err(CmdError::Usage)?;
    if cfg.gw.replicas == 0 {
        return Err(CmdError::Usage("gw.replicas must be >= 1".into()));
    }
    if cfg.sweep.lambda_grid.is_empty() || cfg.sweep.beta_grid.is_empty() {
        return Err(CmdError::Usage("empty (lambda, beta) grid".into()));
    }
    let p = cfg.potential().map_err(CmdError::Usage)?;
    let constants =
        BoundConstants::from_potential(&p, cfg.model.nu, cfg.model.ell).map_err(usage)?;

    let mut rows = Vec::new();
    let mut json_rows = Vec::new();
    let mut point_idx = 0_u64;
    for &lambda in &cfg.sweep.lambda_grid {
        for &beta in &cfg.sweep.beta_grid {
            let report = branching::extinction_and_size(
                lambda,
                beta,
                &constants,
                cfg.gw.replicas,
                cfg.gw.max_generations,
                derive_seed(cfg.mc.seed, point_idx),
            );
            point_idx += 1;
            rows.push(vec![
                fmt(lambda),
                fmt(beta),
                fmt(report.mean_bound),
                fmt(report.law_mean),
                fmt(report.extinction_rate),
                fmt(report.mean_total_size),
                fmt(report.bound_one_over_eps),
            ]);
            json_rows.push(GwRow {
                lambda,
                beta,
                mean_bound: report.mean_bound,
                law_mean: report.law_mean,
                extinction_rate: report.extinction_rate,
                mean_total_size: report.mean_total_size,
                bound_1_over_eps: report.bound_one_over_eps,
            });
        }
    }
    fs::create_dir_all(ctx.out_dir)?;
    write_csv(
        ctx.out_dir.join("gw.csv"),
        &ctx.meta("gw"),
        "lambda,beta,mean_bound,law_mean,extinction_rate,mean_total_size,bound_1_over_eps",
        &rows,
        &[],
    )?;
    if ctx.json {
        write_json(ctx.out_dir.join("gw.json"), &ctx.meta("gw"), &json_rows)?;
    }
    Ok(())
}

/// Shape scan of the configured potential; violations exit with code 2.
pub fn cmd_validate_potential(ctx: &Ctx) -> Result<(), CmdError> {
    let cfg = ctx.config;
    let p = cfg.potential().map_err(CmdError::Usage)?;
    let report = p.validate_shape();
    if report.ok {
        println!("ok: potential satisfies the shape conditions");
        println!(
            "f={} d={} g={} M={}",
            p.hard_core(),
            p.crossover(),
            p.tail_onset(),
            p.depth()
        );
        Ok(())
    } else {
        for v in &report.violations {
            println!("violation at r={}: {:?} expected {}", v.r, v.value, v.expected);
        }
        if report.truncated {
            println!("... more violations truncated");
        }
        Err(CmdError::Usage(format!(
            "potential violates the shape conditions at {} grid points{}",
            report.violations.len(),
            if report.truncated { " (or more)" } else { "" }
        )))
    }
}
