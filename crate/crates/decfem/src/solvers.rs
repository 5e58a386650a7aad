//! Decoupled solution pipelines: each high-order problem is reduced to a
//! sequence of Poisson-type and Stokes-type solves.
//!
//! Sign conventions, fixed once here and relied on by the manufactured
//! cases:
//! - biharmonic pipeline with load (f, v) produces u_h approximating the
//!   clamped-plate solution of Delta^2 u = f;
//! - the perturbed variant approximates eps^2 Delta^2 u - Delta u = f;
//! - the HHJ pipeline with load f produces u_h approximating Delta^2 u = -f
//!   (its first stage is (grad w, grad v) = -(f, v));
//! - the triharmonic pipeline with load (f, v) approximates -Delta^3 u = f.

use std::sync::Arc;
use std::time::Instant;

use crate::assembly::{assemble_bilinear, assemble_load, assemble_load_with, FormKind, LoadOp};
use crate::error::Error;
use crate::fespace::{
    build_space, mean_zero_constraint, rigid_motion_constraints, CellGeometry, FEFunction,
    FunctionSpace, RigidMotionVariant, ValueShape,
};
use crate::linalg::{add_scaled, apply_dirichlet, cg, zero_columns, CsrMatrix, SaddleProblem};
use crate::mesh::Mesh;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAXIT: usize = 200_000;

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Relative residual target for every linear solve.
    pub tol: f64,
    pub maxit: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: DEFAULT_TOL,
            maxit: DEFAULT_MAXIT,
        }
    }
}

impl SolveOptions {
    pub fn with_tol(tol: f64) -> Self {
        SolveOptions {
            tol,
            ..Default::default()
        }
    }
}

/// Diagnostics of one linear solve inside a pipeline.
#[derive(Debug, Clone, serde::Serialize)]
pub struct StageReport {
    pub stage: String,
    pub n_dofs: usize,
    pub iterations: usize,
    pub residual: f64,
    pub seconds: f64,
}

/// Scalar Poisson solve with homogeneous Dirichlet data and an arbitrary
/// pre-assembled load vector.
pub fn solve_scalar_dirichlet(
    space: &Arc<FunctionSpace>,
    load: &[f64],
    stage: &str,
    opts: SolveOptions,
) -> Result<(FEFunction, StageReport), Error> {
    let t0 = Instant::now();
    let (a, b) = poisson_system(space, load);
    let res = cg(&a, &b, opts.tol, opts.maxit, Some(&a.diag()))?;
    let report = StageReport {
        stage: stage.to_string(),
        n_dofs: space.n_dofs(),
        iterations: res.iterations,
        residual: res.residual,
        seconds: t0.elapsed().as_secs_f64(),
    };
    Ok((
        FEFunction {
            space: Arc::clone(space),
            coeffs: res.x,
        },
        report,
    ))
}

/// Assembled, Dirichlet-eliminated Poisson system (also the dense-oracle
/// entry point in tests).
pub fn poisson_system(space: &Arc<FunctionSpace>, load: &[f64]) -> (CsrMatrix, Vec<f64>) {
    let a = assemble_bilinear(FormKind::Stiffness, space, space).expect("scalar stiffness");
    let constraints: Vec<(usize, f64)> =
        space.dirichlet_dofs().iter().map(|&d| (d, 0.0)).collect();
    apply_dirichlet(&a, load, &constraints)
}

/// Nominal form of the scalar second-order stage. The rotation identity
/// (curl u, curl v) = (grad u, grad v) makes both assemble the same matrix;
/// the tag only documents which weak form a caller means.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoissonForm {
    Grad,
    Curl,
}

/// Poisson solve -Delta u = f with homogeneous Dirichlet data.
pub fn solve_poisson(
    mesh: &Arc<Mesh>,
    order: usize,
    f: &dyn Fn(f64, f64) -> f64,
    _form: PoissonForm,
    opts: SolveOptions,
) -> Result<(FEFunction, StageReport), Error> {
    let space = build_space(mesh, order, ValueShape::Scalar)?;
    let load = assemble_load(&space, &|x, y| vec![f(x, y)], LoadOp::Identity);
    solve_scalar_dirichlet(&space, &load, "poisson", opts)
}

/// Operator of the velocity block in the Stokes-type stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MiddleOperator {
    /// (grad phi, grad psi): the plain Stokes block.
    Stiffness,
    /// (phi, psi) + eps^2 (grad phi, grad psi): the Brinkman block.
    Brinkman(f64),
}

/// Builds the constrained saddle problem of a Stokes-type stage. The
/// velocity space gets homogeneous Dirichlet conditions; the pressure space
/// is quotiented by the given functional constraint rows.
pub fn stokes_problem(
    velocity: &Arc<FunctionSpace>,
    pressure: &Arc<FunctionSpace>,
    middle: MiddleOperator,
    f_load: &[f64],
    pressure_constraints: Vec<Vec<f64>>,
) -> Result<SaddleProblem, Error> {
    let a_raw = match middle {
        MiddleOperator::Stiffness => assemble_bilinear(FormKind::Stiffness, velocity, velocity)?,
        MiddleOperator::Brinkman(eps) => {
            let m = assemble_bilinear(FormKind::Mass, velocity, velocity)?;
            let k = assemble_bilinear(FormKind::Stiffness, velocity, velocity)?;
            add_scaled(&m, &k, 1.0, eps * eps)
        }
    };
    let dd = velocity.dirichlet_dofs();
    let constraints: Vec<(usize, f64)> = dd.iter().map(|&d| (d, 0.0)).collect();
    let (a, f) = apply_dirichlet(&a_raw, f_load, &constraints);
    let b_raw = assemble_bilinear(FormKind::DivPressure, velocity, pressure)?;
    let b = zero_columns(&b_raw, &dd);
    let p_mass = assemble_bilinear(FormKind::Mass, pressure, pressure)?;
    Ok(SaddleProblem {
        a,
        rhs_g: vec![0.0; b.n_rows],
        b: Some(b),
        rhs_f: f,
        primal_constraints: Vec::new(),
        multiplier_constraints: pressure_constraints,
        multiplier_precond_diag: Some(p_mass.diag()),
    })
}

#[derive(Debug, Clone)]
pub struct StokesSolution {
    pub velocity: FEFunction,
    pub pressure: FEFunction,
    /// l2 norm of the assembled divergence constraint residual B*velocity.
    pub div_residual: f64,
    pub report: StageReport,
}

fn solve_stokes_problem(
    velocity: &Arc<FunctionSpace>,
    pressure: &Arc<FunctionSpace>,
    problem: &SaddleProblem,
    stage: &str,
    opts: SolveOptions,
) -> Result<StokesSolution, Error> {
    let t0 = Instant::now();
    let sol = problem.solve(opts.tol, opts.maxit)?;
    let div_residual = crate::linalg::norm2(
        &problem
            .b
            .as_ref()
            .expect("stokes problem has a divergence block")
            .apply(&sol.primal),
    );
    Ok(StokesSolution {
        velocity: FEFunction {
            space: Arc::clone(velocity),
            coeffs: sol.primal,
        },
        pressure: FEFunction {
            space: Arc::clone(pressure),
            coeffs: sol.multiplier,
        },
        div_residual,
        report: StageReport {
            stage: stage.to_string(),
            n_dofs: problem.n_total(),
            iterations: sol.iterations,
            residual: sol.residual,
            seconds: t0.elapsed().as_secs_f64(),
        },
    })
}

/// Stokes solve with Taylor-Hood style orders (velocity order, pressure
/// order), right-hand side (f, psi), no-slip velocity and mean-zero
/// pressure.
pub fn solve_stokes(
    mesh: &Arc<Mesh>,
    orders: (usize, usize),
    f: &dyn Fn(f64, f64) -> [f64; 2],
    opts: SolveOptions,
) -> Result<StokesSolution, Error> {
    let velocity = build_space(mesh, orders.0, ValueShape::Vector2)?;
    let pressure = build_space(mesh, orders.1, ValueShape::Scalar)?;
    let load = assemble_load(
        &velocity,
        &|x, y| {
            let v = f(x, y);
            vec![v[0], v[1]]
        },
        LoadOp::Identity,
    );
    let constraints = vec![mean_zero_constraint(&pressure)?];
    let problem = stokes_problem(&velocity, &pressure, MiddleOperator::Stiffness, &load, constraints)?;
    solve_stokes_problem(&velocity, &pressure, &problem, "stokes", opts)
}

/// Spaces of the decoupled biharmonic pipeline: scalar stages of the given
/// order, velocity of the same order, pressure one order lower.
#[derive(Debug, Clone)]
pub struct BiharmonicSpaces {
    pub scalar: Arc<FunctionSpace>,
    pub velocity: Arc<FunctionSpace>,
    pub pressure: Arc<FunctionSpace>,
}

pub fn biharmonic_spaces(mesh: &Arc<Mesh>, order: usize) -> Result<BiharmonicSpaces, Error> {
    if order < 2 {
        return Err(Error::Config(format!(
            "biharmonic pipeline needs order >= 2 (Taylor-Hood pair), got {order}"
        )));
    }
    Ok(BiharmonicSpaces {
        scalar: build_space(mesh, order, ValueShape::Scalar)?,
        velocity: build_space(mesh, order, ValueShape::Vector2)?,
        pressure: build_space(mesh, order - 1, ValueShape::Scalar)?,
    })
}

#[derive(Debug, Clone)]
pub struct BiharmonicSolution {
    pub spaces: BiharmonicSpaces,
    pub w: FEFunction,
    pub velocity: FEFunction,
    pub pressure: FEFunction,
    pub u: FEFunction,
    pub div_residual: f64,
    pub reports: Vec<StageReport>,
}

/// Runs the three-stage pipeline from a pre-assembled first-stage load:
/// (1) (curl w, curl v) = load(v); (2) Stokes/Brinkman stage with right-hand
/// side (curl w, psi); (3) (curl u, curl chi) = (phi, curl chi).
pub fn solve_biharmonic_with_load(
    spaces: &BiharmonicSpaces,
    stage1_load: &[f64],
    middle: MiddleOperator,
    opts: SolveOptions,
) -> Result<BiharmonicSolution, Error> {
    let (w, rep1) = solve_scalar_dirichlet(&spaces.scalar, stage1_load, "poisson-w", opts)?;

    let couple = assemble_bilinear(FormKind::CurlCouple, &spaces.scalar, &spaces.velocity)?;
    let f2 = couple.apply(&w.coeffs);
    let constraints = vec![mean_zero_constraint(&spaces.pressure)?];
    let problem = stokes_problem(&spaces.velocity, &spaces.pressure, middle, &f2, constraints)?;
    let stokes = solve_stokes_problem(&spaces.velocity, &spaces.pressure, &problem, "stokes", opts)?;

    let f3 = couple.apply_transpose(&stokes.velocity.coeffs);
    let (u, rep3) = solve_scalar_dirichlet(&spaces.scalar, &f3, "poisson-u", opts)?;

    Ok(BiharmonicSolution {
        spaces: spaces.clone(),
        w,
        velocity: stokes.velocity,
        pressure: stokes.pressure,
        u,
        div_residual: stokes.div_residual,
        reports: vec![rep1, stokes.report, rep3],
    })
}

/// Clamped biharmonic Delta^2 u = f via two Poisson solves and one Stokes
/// solve.
pub fn solve_biharmonic(
    mesh: &Arc<Mesh>,
    order: usize,
    f: &dyn Fn(f64, f64) -> f64,
    opts: SolveOptions,
) -> Result<BiharmonicSolution, Error> {
    let spaces = biharmonic_spaces(mesh, order)?;
    let load = assemble_load(&spaces.scalar, &|x, y| vec![f(x, y)], LoadOp::Identity);
    solve_biharmonic_with_load(&spaces, &load, MiddleOperator::Stiffness, opts)
}

/// Singular perturbation eps^2 Delta^2 u - Delta u = f; the middle stage is
/// the Brinkman block, well posed down to eps = 0 (the mixed Poisson limit).
pub fn solve_biharmonic_perturbed(
    mesh: &Arc<Mesh>,
    order: usize,
    f: &dyn Fn(f64, f64) -> f64,
    eps: f64,
    opts: SolveOptions,
) -> Result<BiharmonicSolution, Error> {
    if eps < 0.0 {
        return Err(Error::Config(format!(
            "perturbation parameter must be nonnegative, got {eps}"
        )));
    }
    let spaces = biharmonic_spaces(mesh, order)?;
    let load = assemble_load(&spaces.scalar, &|x, y| vec![f(x, y)], LoadOp::Identity);
    solve_biharmonic_with_load(&spaces, &load, MiddleOperator::Brinkman(eps), opts)
}

/// Constrained sym-curl problem of the HHJ middle stage (exposed for the
/// dense oracle): (sym curl p, sym curl q) = rhs over P_h modulo rigid
/// rotations.
pub fn hhj_symcurl_problem(
    p_space: &Arc<FunctionSpace>,
    rhs: Vec<f64>,
) -> Result<SaddleProblem, Error> {
    let a = assemble_bilinear(FormKind::SymCurl, p_space, p_space)?;
    let rows = rigid_motion_constraints(p_space, RigidMotionVariant::RmRot)?;
    Ok(SaddleProblem {
        a,
        b: None,
        rhs_f: rhs,
        rhs_g: vec![],
        primal_constraints: rows.to_vec(),
        multiplier_constraints: vec![],
        multiplier_precond_diag: None,
    })
}

#[derive(Debug, Clone)]
pub struct HhjSolution {
    pub w: FEFunction,
    /// Auxiliary vector potential, defined up to rigid rotations.
    pub p: FEFunction,
    pub u: FEFunction,
    pub reports: Vec<StageReport>,
}

impl HhjSolution {
    /// Stored components (s11, s12, s22) of the moment tensor
    /// sigma_h = sym curl p_h + w_h I at a point of a cell.
    pub fn sigma_at(&self, cell: usize, geom: &CellGeometry, l: [f64; 3]) -> [f64; 3] {
        let g = self.p.eval_grad_bary(cell, geom, l);
        let w = self.w.eval_bary(cell, l)[0];
        [
            g[0][1] + w,
            0.5 * (g[1][1] - g[0][0]),
            -g[1][0] + w,
        ]
    }
}

/// Decoupled HHJ pipeline (plate problem Delta^2 u = -f): Poisson for w,
/// constrained sym-curl solve for p, Poisson for u driven by the trace of
/// sigma_h.
pub fn solve_hhj(
    mesh: &Arc<Mesh>,
    order: usize,
    f: &dyn Fn(f64, f64) -> f64,
    opts: SolveOptions,
) -> Result<HhjSolution, Error> {
    let w_space = build_space(mesh, order, ValueShape::Scalar)?;
    let p_space = build_space(mesh, order, ValueShape::Vector2)?;

    let mut load = assemble_load(&w_space, &|x, y| vec![f(x, y)], LoadOp::Identity);
    for v in load.iter_mut() {
        *v = -*v;
    }
    let (w, rep1) = solve_scalar_dirichlet(&w_space, &load, "poisson-w", opts)?;

    // (sym curl p, sym curl q) = -(pi w, sym curl q) = -(w, tr sym curl q).
    let trace = assemble_bilinear(FormKind::TracePi, &w_space, &p_space)?;
    let rhs: Vec<f64> = trace.apply(&w.coeffs).iter().map(|v| -v).collect();
    let t0 = Instant::now();
    let problem = hhj_symcurl_problem(&p_space, rhs)?;
    let sol = problem.solve(opts.tol, opts.maxit)?;
    let rep2 = StageReport {
        stage: "sym-curl".to_string(),
        n_dofs: problem.n_total(),
        iterations: sol.iterations,
        residual: sol.residual,
        seconds: t0.elapsed().as_secs_f64(),
    };
    let p = FEFunction {
        space: Arc::clone(&p_space),
        coeffs: sol.primal,
    };

    // (grad u, grad chi) = (sigma_h, pi chi) = (tr sigma_h, chi)
    //                    = (tr sym curl p_h, chi) + 2 (w_h, chi).
    let mass_w = assemble_bilinear(FormKind::Mass, &w_space, &w_space)?;
    let mut f3 = trace.apply_transpose(&p.coeffs);
    let mw = mass_w.apply(&w.coeffs);
    for (a, b) in f3.iter_mut().zip(&mw) {
        *a += 2.0 * b;
    }
    let (u, rep3) = solve_scalar_dirichlet(&w_space, &f3, "poisson-u", opts)?;

    Ok(HhjSolution {
        w,
        p,
        u,
        reports: vec![rep1, rep2, rep3],
    })
}

#[derive(Debug, Clone)]
pub struct TriharmonicSolution {
    /// Inner biharmonic pipeline for w (solves Delta^2 w = f).
    pub w_stage: BiharmonicSolution,
    /// Tensor Stokes velocity (symmetric-tensor field).
    pub phi: FEFunction,
    /// Vector pressure, defined up to rigid motions.
    pub pressure: FEFunction,
    /// Final biharmonic pipeline; its u is the triharmonic solution.
    pub u_stage: BiharmonicSolution,
    pub div_residual: f64,
    pub reports: Vec<StageReport>,
}

impl TriharmonicSolution {
    pub fn u(&self) -> &FEFunction {
        &self.u_stage.u
    }
}

/// Triharmonic problem -Delta^3 u = f via two nested biharmonic pipelines
/// and one symmetric-tensor Stokes solve.
///
/// The middle-stage load needs bold-curl curl w; the nested pipeline never
/// forms second derivatives of w_h, so the H1-conforming Stokes velocity
/// phi_h^w (approximating curl w) is differentiated once per cell instead.
pub fn solve_triharmonic(
    mesh: &Arc<Mesh>,
    order: usize,
    f: &dyn Fn(f64, f64) -> f64,
    opts: SolveOptions,
) -> Result<TriharmonicSolution, Error> {
    let spaces = biharmonic_spaces(mesh, order)?;
    let load = assemble_load(&spaces.scalar, &|x, y| vec![f(x, y)], LoadOp::Identity);
    let w_stage = solve_biharmonic_with_load(&spaces, &load, MiddleOperator::Stiffness, opts)?;

    // Tensor Stokes: velocity in P2 symmetric tensors with Dirichlet BC,
    // pressure in P1 vectors modulo rigid motions. The load is the
    // symmetric part of bold-curl phi_h^w, which equals sym curl phi_h^w.
    let tvel = build_space(mesh, order, ValueShape::SymTensor2)?;
    let tprs = build_space(mesh, order - 1, ValueShape::Vector2)?;
    let phi_w = &w_stage.velocity;
    let f2 = assemble_load_with(&tvel, LoadOp::Identity, |cell, _, l| {
        let geom = CellGeometry::new(mesh, cell);
        let g = phi_w.eval_grad_bary(cell, &geom, l);
        vec![g[0][1], 0.5 * (g[1][1] - g[0][0]), -g[1][0]]
    });
    let rows = rigid_motion_constraints(&tprs, RigidMotionVariant::Rm)?;
    let problem = stokes_problem(&tvel, &tprs, MiddleOperator::Stiffness, &f2, rows.to_vec())?;
    let stokes = solve_stokes_problem(&tvel, &tprs, &problem, "tensor-stokes", opts)?;

    // Final biharmonic: (bold-curl curl u, bold-curl curl chi)
    // = (Phi_h, bold-curl curl chi). With Phi_h vanishing on the boundary,
    // integrating by parts row-wise turns the right-hand side into
    // (rot_rows Phi_h, curl v) on the first stage of the nested pipeline.
    let phi = stokes.velocity.clone();
    let load3 = assemble_load_with(&spaces.scalar, LoadOp::Curl, |cell, _, l| {
        let geom = CellGeometry::new(mesh, cell);
        let g = phi.eval_grad_bary(cell, &geom, l);
        // rows of Phi: (t11, t12) and (t12, t22); rot row i = d1 row_i2 - d2 row_i1.
        vec![g[1][0] - g[0][1], g[2][0] - g[1][1]]
    });
    let u_stage = solve_biharmonic_with_load(&spaces, &load3, MiddleOperator::Stiffness, opts)?;

    let mut reports = w_stage.reports.clone();
    reports.push(stokes.report.clone());
    reports.extend(u_stage.reports.iter().cloned());
    Ok(TriharmonicSolution {
        w_stage,
        phi: stokes.velocity,
        pressure: stokes.pressure,
        u_stage,
        div_residual: stokes.div_residual,
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::unit_square_mesh;

    fn mesh(n: usize) -> Arc<Mesh> {
        Arc::new(unit_square_mesh(n).unwrap())
    }

    #[test]
    fn poisson_zero_load_is_zero() {
        let (u, rep) = solve_poisson(
            &mesh(4),
            1,
            &|_, _| 0.0,
            PoissonForm::Grad,
            SolveOptions::default(),
        )
        .unwrap();
        assert!(u.coeffs.iter().all(|&c| c == 0.0));
        assert_eq!(rep.iterations, 0);
    }

    #[test]
    fn poisson_grad_and_curl_forms_agree() {
        let f = |x: f64, y: f64| (std::f64::consts::PI * x).sin() * y;
        let (a, _) =
            solve_poisson(&mesh(4), 2, &f, PoissonForm::Grad, SolveOptions::default()).unwrap();
        let (b, _) =
            solve_poisson(&mesh(4), 2, &f, PoissonForm::Curl, SolveOptions::default()).unwrap();
        assert_eq!(a.coeffs, b.coeffs);
    }

    #[test]
    fn poisson_matches_dense_oracle_small() {
        let pi = std::f64::consts::PI;
        let m = mesh(4);
        let space = build_space(&m, 1, ValueShape::Scalar).unwrap();
        let load = assemble_load(
            &space,
            &|x, y| vec![2.0 * pi * pi * (pi * x).sin() * (pi * y).sin()],
            LoadOp::Identity,
        );
        let (u, _) =
            solve_scalar_dirichlet(&space, &load, "t", SolveOptions::with_tol(1e-12)).unwrap();
        let (a, b) = poisson_system(&space, &load);
        let exact = crate::linalg::dense_solve(&a, &b).unwrap();
        for (x, e) in u.coeffs.iter().zip(&exact) {
            assert!((x - e).abs() < 1e-8);
        }
    }

    #[test]
    fn stokes_zero_load_is_zero() {
        let s = solve_stokes(&mesh(2), (2, 1), &|_, _| [0.0, 0.0], SolveOptions::default())
            .unwrap();
        assert!(s.velocity.coeffs.iter().all(|&c| c == 0.0));
        assert!(s.pressure.coeffs.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn stokes_matches_dense_oracle_small() {
        let m = mesh(2);
        let velocity = build_space(&m, 2, ValueShape::Vector2).unwrap();
        let pressure = build_space(&m, 1, ValueShape::Scalar).unwrap();
        let load = assemble_load(&velocity, &|x, y| vec![y, -x], LoadOp::Identity);
        let constraints = vec![mean_zero_constraint(&pressure).unwrap()];
        let problem =
            stokes_problem(&velocity, &pressure, MiddleOperator::Stiffness, &load, constraints)
                .unwrap();
        assert!(problem.n_total() <= 200);
        let sol = problem.solve(1e-12, 100_000).unwrap();
        let (k, rhs) = problem.augmented();
        let exact = crate::linalg::dense_solve(&k, &rhs).unwrap();
        for (x, e) in sol.primal.iter().zip(&exact) {
            assert!((x - e).abs() < 1e-8);
        }
    }

    #[test]
    fn stokes_divergence_residual_small() {
        let pi = std::f64::consts::PI;
        let s = solve_stokes(
            &mesh(4),
            (2, 1),
            &|x, y| [(pi * x).sin(), (pi * y).cos()],
            SolveOptions::default(),
        )
        .unwrap();
        assert!(s.div_residual < 1e-9, "div residual {}", s.div_residual);
    }

    #[test]
    fn biharmonic_zero_load_is_zero() {
        let s = solve_biharmonic(&mesh(2), 2, &|_, _| 0.0, SolveOptions::default()).unwrap();
        assert!(s.w.coeffs.iter().all(|&c| c == 0.0));
        assert!(s.velocity.coeffs.iter().all(|&c| c == 0.0));
        assert!(s.u.coeffs.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn biharmonic_w_stage_equals_plain_poisson() {
        let f = |x: f64, y: f64| x * y + 1.0;
        let s = solve_biharmonic(&mesh(2), 2, &f, SolveOptions::default()).unwrap();
        let (w, _) =
            solve_poisson(&mesh(2), 2, &f, PoissonForm::Grad, SolveOptions::default()).unwrap();
        for (a, b) in s.w.coeffs.iter().zip(&w.coeffs) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn hhj_zero_load_is_zero() {
        let s = solve_hhj(&mesh(2), 2, &|_, _| 0.0, SolveOptions::default()).unwrap();
        assert!(s.w.coeffs.iter().all(|&c| c == 0.0));
        assert!(s.p.coeffs.iter().all(|&c| c == 0.0));
        assert!(s.u.coeffs.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn hhj_p_satisfies_rigid_rotation_constraints() {
        let s = solve_hhj(&mesh(2), 2, &|x, y| x * x - y, SolveOptions::default()).unwrap();
        let rows =
            rigid_motion_constraints(&s.p.space, RigidMotionVariant::RmRot).unwrap();
        for row in &rows {
            let v: f64 = row.iter().zip(&s.p.coeffs).map(|(a, b)| a * b).sum();
            assert!(v.abs() < 1e-8, "constraint violated: {v}");
        }
    }

    #[test]
    fn hhj_sigma_consistency_at_quadrature_points() {
        // sigma_at must agree with independently evaluating the two parts.
        let s = solve_hhj(&mesh(2), 2, &|x, y| x + y, SolveOptions::default()).unwrap();
        let m = &s.w.space.mesh;
        let rule = crate::quadrature::norm_rule();
        for cell in 0..m.n_cells() {
            let geom = CellGeometry::new(m, cell);
            for &l in &rule.points {
                let sig = s.sigma_at(cell, &geom, l);
                let g = s.p.eval_grad_bary(cell, &geom, l);
                let w = s.w.eval_bary(cell, l)[0];
                let expect = [g[0][1] + w, 0.5 * (g[1][1] - g[0][0]), -g[1][0] + w];
                for (a, b) in sig.iter().zip(&expect) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn triharmonic_zero_load_is_zero() {
        let s = solve_triharmonic(&mesh(2), 2, &|_, _| 0.0, SolveOptions::default()).unwrap();
        assert!(s.u().coeffs.iter().all(|&c| c.abs() <= 1e-10));
        assert!(s.phi.coeffs.iter().all(|&c| c.abs() <= 1e-10));
    }

    #[test]
    fn brinkman_negative_eps_rejected() {
        let r = solve_biharmonic_perturbed(&mesh(2), 2, &|_, _| 1.0, -0.5, SolveOptions::default());
        assert!(r.is_err());
    }

    #[test]
    fn stage_residuals_verify_by_reassembly() {
        // Re-assemble the first stage of the biharmonic pipeline and check
        // its residual against the reported solver residual.
        let f = |x: f64, y: f64| x + 2.0 * y;
        let m = mesh(4);
        let s = solve_biharmonic(&m, 2, &f, SolveOptions::default()).unwrap();
        let load = assemble_load(&s.spaces.scalar, &|x, y| vec![f(x, y)], LoadOp::Identity);
        let (a, b) = poisson_system(&s.spaces.scalar, &load);
        let r = a.apply(&s.w.coeffs);
        let res: f64 = r
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        let nb = crate::linalg::norm2(&b);
        assert!(res / nb <= 10.0 * DEFAULT_TOL, "residual {res}");
    }
}
