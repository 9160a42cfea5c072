//! Solve → checkpoint → diagnose, as driven by the command line.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::checkpoint::{self, write_atomic, Checkpoint, CheckpointError};
use crate::config::{RunConfig, Selection};
use crate::diagnostics::{
    p_function, pucci_check, symmetry_report, viscosity_check, DiagnosticsError, NodeViolation, PucciReport, Score, SymmetryConfig,
    SymmetryReport, ViscosityConfig,
};
use crate::operator::{classical_field_eval, default_grad_floor, PParams};
use crate::report::{heatmap_svg, identity_csv, inside_values, trace_csv};
use crate::solver::{grid_for, residual_on, safe_interior, solve, ConvergenceReport, ProblemSpec, Residual, SolverConfig, SolverError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
}

fn write(dir: &Path, name: &str, text: &str) -> Result<PathBuf, PipelineError> {
    let path = dir.join(name);
    write_atomic(&path, text.as_bytes()).map_err(|source| PipelineError::Output { path: path.clone(), source })?;
    Ok(path)
}

fn ensure_dir(dir: &Path) -> Result<(), PipelineError> {
    fs::create_dir_all(dir).map_err(|source| PipelineError::Output { path: dir.to_path_buf(), source })
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveSummary {
    pub config: RunConfig,
    pub solver: SolverConfig,
    pub report: ConvergenceReport,
    pub checkpoint: PathBuf,
}

/// Solves the configured problem and writes `u.json`/`u.bin`, `solve.json`
/// and `u.svg` into `out`.
pub fn run_solve(config: &RunConfig, out: &Path) -> Result<SolveSummary, PipelineError> {
    ensure_dir(out)?;
    let domain = config.domain();
    let problem = config.problem();
    let solver = config.solver_config();
    let grid = grid_for(&domain, config.h, solver.epsilon).map_err(SolverError::from)?;
    let (u, report) = solve(&problem, &domain, &grid, &solver)?;
    let checkpoint =
        checkpoint::save(out, "u", &u, &domain, problem.p, problem.n, solver.epsilon, report.iterations, problem.rhs, &problem.dirichlet)?;
    let summary = SolveSummary { config: config.clone(), solver, report, checkpoint };
    write(out, "solve.json", &serde_json::to_string_pretty(&summary).expect("summary serializes"))?;
    write(out, "u.svg", &heatmap_svg(&u, &inside_values(&u), &format!("u, {} p={}", domain.kind(), problem.p)))?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct Threshold {
    pub name: String,
    pub value: f64,
    pub bound: String,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ViscositySummary {
    pub tolerance: f64,
    pub checked: usize,
    pub skipped: usize,
    pub untouched: usize,
    pub violating_nodes: usize,
    /// Violating nodes inside [`safe_interior`]; the rest sit in the first
    /// `ε`-layer, where the discrete solution carries node-scale roughness.
    pub violating_in_safe_interior: usize,
    pub worst_sub: Option<NodeViolation>,
    pub worst_super: Option<NodeViolation>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnoseReport {
    pub checkpoint: PathBuf,
    pub p: f64,
    pub selection: Selection,
    pub thresholds: Vec<Threshold>,
    pub symmetry: Option<SymmetryReport>,
    pub viscosity: Option<ViscositySummary>,
    pub pucci: Option<PucciReport>,
    pub residual: Option<Residual>,
    pub p_function: Option<Score>,
    pub notes: Vec<String>,
}

impl DiagnoseReport {
    pub fn passed(&self) -> bool {
        self.thresholds.iter().all(|t| t.pass)
    }
}

/// Runs the selected diagnostics on a checkpoint and writes
/// `diagnostics.json`, CSV traces and SVG heatmaps into `out`.
pub fn run_diagnose(path: &Path, selection: &Selection, out: &Path) -> Result<DiagnoseReport, PipelineError> {
    let Checkpoint { header, field } = checkpoint::load(path)?;
    ensure_dir(out)?;
    let params = PParams::new(header.p, header.n).map_err(DiagnosticsError::from)?;
    let domain = &header.domain;
    let center = domain.center();
    let g = |y| header.dirichlet.eval(center, y);
    let h = field.grid.h;
    let mut report = DiagnoseReport {
        checkpoint: path.to_path_buf(),
        p: header.p,
        selection: selection.clone(),
        thresholds: Vec::new(),
        symmetry: None,
        viscosity: None,
        pucci: None,
        residual: None,
        p_function: None,
        notes: Vec::new(),
    };
    let mut threshold = |name: &str, value: f64, bound: String, pass: bool| {
        report.thresholds.push(Threshold { name: name.to_string(), value, bound, pass: pass && !value.is_nan() });
    };

    write(out, "u.svg", &heatmap_svg(&field, &inside_values(&field), &format!("u, p={}", header.p)))?;

    if selection.symmetry {
        let sym = symmetry_report(&field, domain, &params, &SymmetryConfig::for_grid(h), &g)?;
        write(out, "trace.csv", &trace_csv(&sym.trace))?;
        write(out, "identity.csv", &identity_csv(&sym.identity))?;
        if let Some(t) = selection.ball_threshold {
            let score = sym.score.map_or(f64::NAN, |s| s.spread);
            threshold("ball: Neumann constancy score", score, format!("< {t}"), score < t);
        }
        report.symmetry = Some(sym);
    }
    if selection.viscosity {
        let v = viscosity_check(&field, &params, &ViscosityConfig::for_grid(h));
        let safe = safe_interior(domain, &field.grid, header.epsilon);
        let over = |x: &Option<f64>| x.is_some_and(|x| x > v.tolerance);
        let violating_in_safe_interior =
            (0..field.grid.len()).filter(|&i| safe[i] && (over(&v.sub_violation[i]) || over(&v.super_violation[i]))).count();
        threshold("viscosity: violating nodes", v.violating_nodes as f64, format!("== 0 at tau={:.3e}", v.tolerance), v.passes());
        report.viscosity = Some(ViscositySummary {
            tolerance: v.tolerance,
            checked: v.checked,
            skipped: v.skipped,
            untouched: v.untouched,
            violating_nodes: v.violating_nodes,
            violating_in_safe_interior,
            worst_sub: v.worst_sub,
            worst_super: v.worst_super,
        });
    }
    if selection.pucci {
        let r = pucci_check(&field, &params, header.rhs.abs(), 10.0 * h)?;
        let frac = r.violation_fraction();
        threshold("pucci: violating fraction", frac, "< 0.01".into(), frac < 0.01);
        report.pucci = Some(r);
    }
    if selection.residual {
        let problem = ProblemSpec { p: header.p, n: header.n, rhs: header.rhs, dirichlet: header.dirichlet.clone(), neumann_target: None };
        let floor = default_grad_floor(h);
        let safe = safe_interior(domain, &field.grid, header.epsilon);
        let r = residual_on(&field, &problem, floor, &safe).map_err(PipelineError::Solver)?;
        threshold("residual: masked fraction", r.masked_fraction, "< 0.05".into(), r.masked_fraction < 0.05);
        let eval = classical_field_eval(&field, &params, floor);
        let abs: Vec<Option<f64>> = eval.values.iter().map(|v| v.map(|v| (-v - header.rhs).abs())).collect();
        write(out, "residual.svg", &heatmap_svg(&field, &abs, "|-Δ_p^N u - f| (central differences)"))?;
        report.residual = Some(r);
    }
    if selection.p_function {
        match p_function(&field, &params) {
            Ok(pf) => {
                write(out, "p_function.svg", &heatmap_svg(&field, &pf.values, "P-function"))?;
                report.p_function = pf.score;
            }
            Err(DiagnosticsError::Variant(msg)) => report.notes.push(format!("p-function skipped: {msg}")),
            Err(e) => return Err(e.into()),
        }
    }
    write(out, "diagnostics.json", &serde_json::to_string_pretty(&report).expect("report serializes"))?;
    Ok(report)
}
