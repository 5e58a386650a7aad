//! Command-line driver: single solves, convergence studies, and the
//! structural check suite.
//!
//! Exit codes: 0 on success, 1 on a scientific failure (solver breakdown or
//! a failed verdict), 2 on a usage or configuration error. Every failure
//! path emits a structured JSON error on stderr.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::assembly::{assemble_load, LoadOp};
use crate::cases;
use crate::error::Error;
use crate::export::write_vtk_file;
use crate::fespace::{mean_zero_constraint, FEFunction};
use crate::solvers::{
    biharmonic_spaces, poisson_system, solve_biharmonic, solve_biharmonic_perturbed, solve_hhj,
    solve_poisson, solve_stokes, solve_triharmonic, stokes_problem, MiddleOperator, PoissonForm,
    SolveOptions, StageReport, DEFAULT_MAXIT, DEFAULT_TOL,
};
use crate::verification::{
    error_h1_semi, error_l2, exactness_check, helmholtz_check, infsup_report, run_study, Geometry,
    Problem, StudyConfig,
};

pub const ENV_TOL: &str = "DECOUPLE_FEM_TOL";

#[derive(Parser)]
#[command(
    name = "decfem",
    version,
    about = "Decoupled finite element solvers for fourth- and sixth-order elliptic problems"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve one problem instance and export the solution.
    Solve(SolveArgs),
    /// Run a mesh-refinement convergence study with pass/fail verdicts.
    Study(StudyArgs),
    /// Run the structural property checks (exactness, Helmholtz, inf-sup).
    Check(CheckArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// poisson | stokes | biharmonic | biharmonic-eps | hhj | triharmonic
    #[arg(long)]
    problem: Option<String>,
    /// square | lshape
    #[arg(long)]
    geometry: Option<String>,
    /// Polynomial order of the scalar stages (1..=3).
    #[arg(long)]
    order: Option<usize>,
    /// Perturbation parameter of biharmonic-eps.
    #[arg(long)]
    eps: Option<f64>,
    /// Relative residual tolerance of every linear solve.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    maxit: Option<usize>,
    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Mesh resolution.
    #[arg(long)]
    n: Option<usize>,
    /// Solution JSON path (default solve-<problem>.json).
    #[arg(long)]
    json: Option<PathBuf>,
    /// Also write a VTK file of the solution fields.
    #[arg(long)]
    vtk: Option<PathBuf>,
    /// Also dump the first-stage system matrix in MatrixMarket format.
    #[arg(long)]
    matrix: Option<PathBuf>,
}

#[derive(Args)]
struct StudyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Coarsest mesh resolution.
    #[arg(long)]
    base_n: Option<usize>,
    /// Number of refinement levels (>= 3).
    #[arg(long)]
    levels: Option<usize>,
    /// Stokes pressure order (default order - 1).
    #[arg(long)]
    pressure_order: Option<usize>,
    /// Also compute superconvergence gaps against discrete projections.
    #[arg(long)]
    gap: bool,
    /// Run study levels in parallel.
    #[arg(long)]
    jobs: Option<usize>,
    /// Report CSV path (default study-<problem>.csv).
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Report JSON path (default study-<problem>.json).
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    geometry: Option<String>,
    /// Mesh resolution of the exactness and Helmholtz checks.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Corrupts the mesh orientation before validating (negative control).
    #[arg(long, hide = true)]
    corrupt_mesh: bool,
}

/// Flat key-value config file; any key may be omitted.
#[derive(Debug, Default, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    problem: Option<String>,
    geometry: Option<String>,
    n: Option<usize>,
    base_n: Option<usize>,
    levels: Option<usize>,
    order: Option<usize>,
    pressure_order: Option<usize>,
    eps: Option<f64>,
    tol: Option<f64>,
    maxit: Option<usize>,
    gap: Option<bool>,
    jobs: Option<usize>,
    seed: Option<u64>,
}

fn load_file_config(path: &Option<PathBuf>) -> Result<FileConfig, Error> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            toml::from_str(&text).map_err(|e| Error::Config(format!("bad config file: {e}")))
        }
    }
}

fn env_tol() -> Result<Option<f64>, Error> {
    match std::env::var(ENV_TOL) {
        Err(_) => Ok(None),
        Ok(s) => s
            .parse::<f64>()
            .map(Some)
            .map_err(|_| Error::Config(format!("{ENV_TOL} is not a number: {s:?}"))),
    }
}

/// Flags override the config file, which overrides the environment, which
/// overrides built-in defaults.
fn resolve_tol(flag: Option<f64>, file: Option<f64>) -> Result<f64, Error> {
    Ok(flag.or(file).or(env_tol()?).unwrap_or(DEFAULT_TOL))
}

fn parse_problem(s: &str) -> Result<Problem, Error> {
    Problem::parse(s).ok_or_else(|| Error::Config(format!("unknown problem {s:?}")))
}

fn parse_geometry(s: &str) -> Result<Geometry, Error> {
    Geometry::parse(s).ok_or_else(|| Error::Config(format!("unknown geometry {s:?}")))
}

fn check_order(order: usize) -> Result<(), Error> {
    if (1..=3).contains(&order) {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "order must be between 1 and 3, got {order}"
        )))
    }
}

/// Manufactured cases valid on a geometry: the trigonometric solutions are
/// 1-periodic with flat zeros on integer lines, so they satisfy the
/// boundary conditions on the lshape too; the polynomial Stokes and
/// triharmonic data only vanish on the unit square boundary.
fn has_exact_solution(problem: Problem, geometry: Geometry) -> bool {
    geometry == Geometry::Square
        || !matches!(problem, Problem::Stokes | Problem::Triharmonic)
}

struct SolveOutcome {
    fields: Vec<(String, FEFunction)>,
    reports: Vec<StageReport>,
    errors: BTreeMap<String, f64>,
    div_residual: Option<f64>,
}

fn run_solve_problem(
    problem: Problem,
    geometry: Geometry,
    n: usize,
    order: usize,
    eps: f64,
    opts: SolveOptions,
) -> Result<SolveOutcome, Error> {
    let mesh = geometry.mesh(n)?;
    let with_errors = has_exact_solution(problem, geometry);
    let mut errors = BTreeMap::new();
    let outcome = match problem {
        Problem::Poisson => {
            use cases::poisson as c;
            let (u, rep) = solve_poisson(&mesh, order, &c::f, PoissonForm::Grad, opts)?;
            if with_errors {
                errors.insert("l2".into(), error_l2(&u, &|x, y| vec![c::u(x, y)]));
                errors.insert("h1".into(), error_h1_semi(&u, &|x, y| vec![c::grad_u(x, y)]));
            }
            SolveOutcome {
                fields: vec![("u".into(), u)],
                reports: vec![rep],
                errors,
                div_residual: None,
            }
        }
        Problem::Stokes => {
            use cases::stokes as c;
            if order < 2 {
                return Err(Error::Config(format!(
                    "stokes solve needs order >= 2, got {order}"
                )));
            }
            let s = solve_stokes(&mesh, (order, order - 1), &c::f, opts)?;
            if with_errors {
                errors.insert(
                    "vel_h1".into(),
                    error_h1_semi(&s.velocity, &|x, y| c::grad_velocity(x, y).to_vec()),
                );
                errors.insert(
                    "p_l2".into(),
                    error_l2(&s.pressure, &|x, y| vec![c::pressure(x, y)]),
                );
            }
            SolveOutcome {
                fields: vec![
                    ("velocity".into(), s.velocity),
                    ("pressure".into(), s.pressure),
                ],
                reports: vec![s.report],
                errors,
                div_residual: Some(s.div_residual),
            }
        }
        Problem::Biharmonic | Problem::BiharmonicEps => {
            let s = if problem == Problem::Biharmonic {
                use cases::biharmonic as c;
                solve_biharmonic(&mesh, order, &c::f, opts)?
            } else {
                use cases::brinkman as c;
                solve_biharmonic_perturbed(&mesh, order, &|x, y| c::f(eps, x, y), eps, opts)?
            };
            if with_errors {
                use cases::biharmonic as c;
                errors.insert(
                    "u_h1".into(),
                    error_h1_semi(&s.u, &|x, y| vec![c::grad_u(x, y)]),
                );
            }
            SolveOutcome {
                fields: vec![
                    ("u".into(), s.u),
                    ("w".into(), s.w),
                    ("phi".into(), s.velocity),
                    ("pressure".into(), s.pressure),
                ],
                reports: s.reports,
                errors,
                div_residual: Some(s.div_residual),
            }
        }
        Problem::Hhj => {
            use cases::hhj as c;
            let s = solve_hhj(&mesh, order, &c::f, opts)?;
            if with_errors {
                errors.insert(
                    "u_h1".into(),
                    error_h1_semi(&s.u, &|x, y| vec![c::grad_u(x, y)]),
                );
                errors.insert(
                    "w_h1".into(),
                    error_h1_semi(&s.w, &|x, y| vec![c::grad_w(x, y)]),
                );
            }
            SolveOutcome {
                fields: vec![("u".into(), s.u), ("w".into(), s.w), ("p".into(), s.p)],
                reports: s.reports,
                errors,
                div_residual: None,
            }
        }
        Problem::Triharmonic => {
            use cases::triharmonic as c;
            let s = solve_triharmonic(&mesh, order, &c::f, opts)?;
            if with_errors {
                errors.insert(
                    "u_h1".into(),
                    error_h1_semi(s.u(), &|x, y| vec![c::grad_u(x, y)]),
                );
            }
            SolveOutcome {
                fields: vec![
                    ("u".into(), s.u_stage.u.clone()),
                    ("w".into(), s.w_stage.u.clone()),
                    ("phi".into(), s.phi),
                ],
                reports: s.reports,
                errors,
                div_residual: Some(s.div_residual),
            }
        }
    };
    Ok(outcome)
}

/// First-stage system of a problem in MatrixMarket form (debug output).
fn dump_matrix(
    problem: Problem,
    geometry: Geometry,
    n: usize,
    order: usize,
    path: &PathBuf,
) -> Result<(), Error> {
    let mesh = geometry.mesh(n)?;
    let a = match problem {
        Problem::Stokes => {
            use cases::stokes as c;
            let velocity = crate::fespace::build_space(&mesh, order, crate::fespace::ValueShape::Vector2)?;
            let pressure = crate::fespace::build_space(&mesh, order - 1, crate::fespace::ValueShape::Scalar)?;
            let load = assemble_load(
                &velocity,
                &|x, y| c::f(x, y).to_vec(),
                LoadOp::Identity,
            );
            let constraints = vec![mean_zero_constraint(&pressure)?];
            let problem =
                stokes_problem(&velocity, &pressure, MiddleOperator::Stiffness, &load, constraints)?;
            problem.augmented().0
        }
        _ => {
            let spaces = biharmonic_spaces(&mesh, order.max(2))?;
            let load = assemble_load(&spaces.scalar, &|_, _| vec![0.0], LoadOp::Identity);
            poisson_system(&spaces.scalar, &load).0
        }
    };
    let mut w = BufWriter::new(File::create(path)?);
    a.write_matrix_market(&mut w)?;
    Ok(())
}

fn cmd_solve(args: &SolveArgs) -> Result<(), Error> {
    let file = load_file_config(&args.common.config)?;
    let problem = match args.common.problem.as_deref().or(file.problem.as_deref()) {
        Some(s) => parse_problem(s)?,
        None => return Err(Error::Config("no problem selected".to_string())),
    };
    let geometry = match args.common.geometry.as_deref().or(file.geometry.as_deref()) {
        Some(s) => parse_geometry(s)?,
        None => Geometry::Square,
    };
    let n = args.n.or(file.n).unwrap_or(8);
    let order = args
        .common
        .order
        .or(file.order)
        .unwrap_or_else(|| problem.default_order());
    check_order(order)?;
    let eps = args.common.eps.or(file.eps).unwrap_or(1e-2);
    let opts = SolveOptions {
        tol: resolve_tol(args.common.tol, file.tol)?,
        maxit: args.common.maxit.or(file.maxit).unwrap_or(DEFAULT_MAXIT),
    };

    let out = run_solve_problem(problem, geometry, n, order, eps, opts)?;

    let json_path = args
        .json
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("solve-{}.json", problem.name())));
    let fields_json: Vec<serde_json::Value> = out
        .fields
        .iter()
        .map(|(name, f)| {
            json!({
                "name": name,
                "order": f.space.order,
                "components": f.space.ncomp(),
                "n_dofs": f.space.n_dofs(),
                "coefficients": f.coeffs,
            })
        })
        .collect();
    let doc = json!({
        "problem": problem,
        "geometry": geometry,
        "n": n,
        "order": order,
        "eps": if problem == Problem::BiharmonicEps { Some(eps) } else { None },
        "tol": opts.tol,
        "reports": out.reports,
        "errors": out.errors,
        "div_residual": out.div_residual,
        "fields": fields_json,
    });
    let mut w = BufWriter::new(File::create(&json_path)?);
    serde_json::to_writer_pretty(&mut w, &doc)
        .map_err(|e| Error::Config(format!("json write failed: {e}")))?;
    w.flush()?;

    if let Some(vtk) = &args.vtk {
        let mesh = geometry.mesh(n)?;
        let refs: Vec<(&str, &FEFunction)> = out
            .fields
            .iter()
            .map(|(name, f)| (name.as_str(), f))
            .collect();
        write_vtk_file(vtk, &mesh, &refs)?;
    }
    if let Some(matrix) = &args.matrix {
        dump_matrix(problem, geometry, n, order, matrix)?;
    }

    let total_dofs: usize = out.reports.iter().map(|r| r.n_dofs).max().unwrap_or(0);
    let total_iters: usize = out.reports.iter().map(|r| r.iterations).sum();
    let max_res = out
        .reports
        .iter()
        .map(|r| r.residual)
        .fold(0.0_f64, f64::max);
    println!(
        "solve problem={} geometry={} n={} order={} dofs={} iterations={} max_residual={:.3e} json={}",
        problem.name(),
        geometry.name(),
        n,
        order,
        total_dofs,
        total_iters,
        max_res,
        json_path.display()
    );
    Ok(())
}

/// Ok(true) if every verdict passed, Ok(false) otherwise.
fn cmd_study(args: &StudyArgs) -> Result<bool, Error> {
    let file = load_file_config(&args.common.config)?;
    let problem = match args.common.problem.as_deref().or(file.problem.as_deref()) {
        Some(s) => parse_problem(s)?,
        None => return Err(Error::Config("no problem selected".to_string())),
    };
    let mut cfg = StudyConfig::new(problem);
    if let Some(s) = args.common.geometry.as_deref().or(file.geometry.as_deref()) {
        cfg.geometry = parse_geometry(s)?;
    }
    if let Some(o) = args.common.order.or(file.order) {
        cfg.order = o;
    }
    check_order(cfg.order)?;
    cfg.pressure_order = args.pressure_order.or(file.pressure_order);
    cfg.base_n = args.base_n.or(file.base_n).unwrap_or(4);
    cfg.levels = args.levels.or(file.levels).unwrap_or(4);
    if cfg.levels < 3 {
        return Err(Error::Config(format!(
            "study needs at least 3 levels, got {}",
            cfg.levels
        )));
    }
    if let Some(e) = args.common.eps.or(file.eps) {
        cfg.eps = e;
    }
    cfg.gap = args.gap || file.gap.unwrap_or(false);
    cfg.jobs = args.jobs.or(file.jobs).unwrap_or(1);
    cfg.opts = SolveOptions {
        tol: resolve_tol(args.common.tol, file.tol)?,
        maxit: args.common.maxit.or(file.maxit).unwrap_or(DEFAULT_MAXIT),
    };

    let report = run_study(&cfg)?;

    let csv_path = args
        .csv
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("study-{}.csv", problem.name())));
    std::fs::write(&csv_path, report.to_csv())?;
    let json_path = args
        .json
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("study-{}.json", problem.name())));
    let mut w = BufWriter::new(File::create(&json_path)?);
    serde_json::to_writer_pretty(&mut w, &report)
        .map_err(|e| Error::Config(format!("json write failed: {e}")))?;
    w.flush()?;

    for l in &report.levels {
        let errs: Vec<String> = l
            .errors
            .iter()
            .map(|(k, v)| format!("{k}={v:.3e}"))
            .collect();
        println!("level n={} h={:.4e} dofs={} {}", l.n, l.h, l.n_dofs, errs.join(" "));
    }
    for v in &report.verdicts {
        println!(
            "verdict {}: value={:.4} criterion={:?} {}",
            v.name,
            v.value,
            v.criterion,
            if v.pass { "PASS" } else { "FAIL" }
        );
    }
    Ok(report.passed())
}

/// Ok(true) if all checks passed.
fn cmd_check(args: &CheckArgs) -> Result<bool, Error> {
    let file = load_file_config(&args.config)?;
    let geometry = match args.geometry.as_deref().or(file.geometry.as_deref()) {
        Some(s) => parse_geometry(s)?,
        None => Geometry::Square,
    };
    let n = args.n.or(file.n).unwrap_or(4);
    let order = args.order.or(file.order).unwrap_or(2);
    check_order(order)?;
    let seed = args.seed.or(file.seed).unwrap_or(2024);

    let mesh = if args.corrupt_mesh {
        let mut m = (*geometry.mesh(n)?).clone();
        m.cells[0].swap(0, 1);
        Arc::new(m)
    } else {
        geometry.mesh(n)?
    };
    if let Err(e) = mesh.validate() {
        println!("check mesh-validation FAIL: {e}");
        return Ok(false);
    }
    println!("check mesh-validation PASS");

    let mut all = true;
    let ex = exactness_check(&mesh, order, seed)?;
    all &= ex.pass;
    println!(
        "check exactness {}: div_curl_max={:.3e} rot_grad_max={:.3e} symcurl_kernel={} stiffness_kernel={}",
        if ex.pass { "PASS" } else { "FAIL" },
        ex.div_curl_max,
        ex.rot_grad_max,
        ex.symcurl_kernel_dim,
        ex.stiffness_kernel_dim
    );
    let hh = helmholtz_check(&mesh, seed)?;
    all &= hh.pass;
    println!(
        "check helmholtz {}: residual={:.3e}",
        if hh.pass { "PASS" } else { "FAIL" },
        hh.residual
    );
    let is = infsup_report(geometry)?;
    all &= is.pass;
    println!(
        "check infsup {}: taylor_hood_variation={:.3} equal_order_decay={:.3}",
        if is.pass { "PASS" } else { "FAIL" },
        is.taylor_hood_variation,
        is.equal_order_decay
    );
    Ok(all)
}

fn emit_error(code: &str, message: &str) {
    let doc = json!({ "error": { "code": code, "message": message } });
    eprintln!("{doc}");
}

fn error_exit(e: &Error) -> i32 {
    match e {
        Error::LinAlg(_) => {
            emit_error("solver", &e.to_string());
            1
        }
        Error::Io(_) => {
            emit_error("io", &e.to_string());
            2
        }
        _ => {
            emit_error("usage", &e.to_string());
            2
        }
    }
}

/// Entry point of the binary; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            emit_error("usage", &e.to_string());
            return 2;
        }
    };
    let result = match &cli.cmd {
        Cmd::Solve(a) => cmd_solve(a).map(|()| true),
        Cmd::Study(a) => cmd_study(a),
        Cmd::Check(a) => cmd_check(a),
    };
    match result {
        Ok(true) => 0,
        Ok(false) => {
            emit_error("verdict", "one or more checks failed");
            1
        }
        Err(e) => error_exit(&e),
    }
}
