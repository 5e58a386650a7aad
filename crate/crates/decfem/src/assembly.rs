//! Assembly of the bilinear forms and load vectors used by the decoupled
//! solvers.
//!
//! Conventions (fixed throughout the crate):
//! - `curl` of a scalar v is the vector (d2 v, -d1 v);
//! - `rot` of a vector (v1, v2) is the scalar d1 v2 - d2 v1;
//! - `sym curl` of a vector p is the symmetric tensor
//!   [[d2 p1, (d2 p2 - d1 p1)/2], [sym, -d1 p2]];
//! - symmetric tensors are stored as (t11, t12, t22) and contracted with
//!   component weights (1, 2, 1).

use crate::error::AssemblyError;
use crate::fespace::{shape_grads_bary, shape_values, CellGeometry, FunctionSpace, ValueShape};
use crate::linalg::CsrMatrix;
use crate::quadrature::{norm_rule, triangle_rule, MAX_DEGREE};

/// Bilinear forms. Matrix rows index the test space, columns the trial space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormKind {
    /// (u, v), any matching value shape (tensor contraction weights applied).
    Mass,
    /// (grad u, grad v) componentwise, any matching value shape.
    Stiffness,
    /// (div u, q): trial Vector2 / test Scalar, or trial SymTensor2 / test
    /// Vector2 (row-wise divergence).
    DivPressure,
    /// (sym curl u, sym curl v), Vector2 spaces.
    SymCurl,
    /// (eps(u), eps(v)) with eps the symmetric gradient, Vector2 spaces.
    Eps,
    /// (w, tr(sym curl q)) = (w, d2 q1 - d1 q2): trial Scalar, test Vector2.
    TracePi,
    /// (curl w, psi): trial Scalar, test Vector2.
    CurlCouple,
}

impl FormKind {
    fn check(&self, trial: &FunctionSpace, test: &FunctionSpace) -> Result<(), AssemblyError> {
        use ValueShape::*;
        let ok = match self {
            FormKind::Mass | FormKind::Stiffness => trial.shape == test.shape,
            FormKind::DivPressure => matches!(
                (trial.shape, test.shape),
                (Vector2, Scalar) | (SymTensor2, Vector2)
            ),
            FormKind::SymCurl | FormKind::Eps => {
                trial.shape == Vector2 && test.shape == Vector2
            }
            FormKind::TracePi | FormKind::CurlCouple => {
                trial.shape == Scalar && test.shape == Vector2
            }
        };
        if ok {
            Ok(())
        } else {
            Err(AssemblyError::IncompatibleForm {
                form: self.name(),
            })
        }
    }

    fn name(&self) -> &'static str {
        match self {
            FormKind::Mass => "mass",
            FormKind::Stiffness => "stiffness",
            FormKind::DivPressure => "div-pressure",
            FormKind::SymCurl => "sym-curl",
            FormKind::Eps => "eps",
            FormKind::TracePi => "trace-pi",
            FormKind::CurlCouple => "curl-couple",
        }
    }
}

/// Stored sym-curl components (s11, s12, s22) of the vector basis function
/// with scalar gradient `g` in component `comp`.
fn sym_curl_components(g: [f64; 2], comp: usize) -> [f64; 3] {
    match comp {
        0 => [g[1], -0.5 * g[0], 0.0],
        _ => [0.0, 0.5 * g[1], -g[0]],
    }
}

/// Stored symmetric-gradient components of the same basis function.
fn eps_components(g: [f64; 2], comp: usize) -> [f64; 3] {
    match comp {
        0 => [g[0], 0.5 * g[1], 0.0],
        _ => [0.0, 0.5 * g[0], g[1]],
    }
}

/// Row-wise divergence of the symmetric-tensor basis function that has the
/// scalar shape in stored component `comp`.
fn sym_div_components(g: [f64; 2], comp: usize) -> [f64; 2] {
    match comp {
        0 => [g[0], 0.0],
        1 => [g[1], g[0]],
        _ => [0.0, g[1]],
    }
}

const SYM_W: [f64; 3] = [1.0, 2.0, 1.0];

/// Assembles a bilinear form over the common mesh of the two spaces.
pub fn assemble_bilinear(
    kind: FormKind,
    trial: &FunctionSpace,
    test: &FunctionSpace,
) -> Result<CsrMatrix, AssemblyError> {
    kind.check(trial, test)?;
    debug_assert!(std::sync::Arc::ptr_eq(&trial.mesh, &test.mesh) || trial.mesh.cells == test.mesh.cells);
    let mesh = &trial.mesh;
    let degree = (trial.order + test.order).clamp(1, MAX_DEGREE);
    let rule = triangle_rule(degree)?;
    let nq = rule.len();

    // Reference shape data per quadrature point (geometry-independent).
    let nt = crate::fespace::shape_count(trial.order);
    let ns = crate::fespace::shape_count(test.order);
    let nct = trial.ncomp();
    let ncs = test.ncomp();
    let vals_t: Vec<Vec<f64>> = rule.points.iter().map(|&l| shape_values(trial.order, l)).collect();
    let vals_s: Vec<Vec<f64>> = rule.points.iter().map(|&l| shape_values(test.order, l)).collect();
    let gb_t: Vec<Vec<[f64; 3]>> = rule
        .points
        .iter()
        .map(|&l| shape_grads_bary(trial.order, l))
        .collect();
    let gb_s: Vec<Vec<[f64; 3]>> = rule
        .points
        .iter()
        .map(|&l| shape_grads_bary(test.order, l))
        .collect();

    let mut triplets = Vec::new();
    let mut local = vec![0.0; ns * ncs * nt * nct];
    let row_len = nt * nct;
    for cell in 0..mesh.n_cells() {
        let geom = CellGeometry::new(mesh, cell);
        local.fill(0.0);
        for q in 0..nq {
            let w = rule.weights[q] * geom.det;
            let gt: Vec<[f64; 2]> = gb_t[q].iter().map(|&g| geom.push_grad(g)).collect();
            let gs: Vec<[f64; 2]> = gb_s[q].iter().map(|&g| geom.push_grad(g)).collect();
            match kind {
                FormKind::Mass => {
                    let wc = trial.shape.component_weights();
                    for i in 0..ns {
                        for j in 0..nt {
                            let v = w * vals_s[q][i] * vals_t[q][j];
                            for c in 0..nct {
                                local[(i * ncs + c) * row_len + j * nct + c] += wc[c] * v;
                            }
                        }
                    }
                }
                FormKind::Stiffness => {
                    let wc = trial.shape.component_weights();
                    for i in 0..ns {
                        for j in 0..nt {
                            let v = w * (gs[i][0] * gt[j][0] + gs[i][1] * gt[j][1]);
                            for c in 0..nct {
                                local[(i * ncs + c) * row_len + j * nct + c] += wc[c] * v;
                            }
                        }
                    }
                }
                FormKind::DivPressure => {
                    if trial.shape == ValueShape::Vector2 {
                        // (div u, q), scalar test.
                        for i in 0..ns {
                            for j in 0..nt {
                                for cj in 0..2 {
                                    local[i * row_len + j * 2 + cj] +=
                                        w * vals_s[q][i] * gt[j][cj];
                                }
                            }
                        }
                    } else {
                        // (div sigma, v), vector test.
                        for j in 0..nt {
                            for cj in 0..3 {
                                let d = sym_div_components(gt[j], cj);
                                for i in 0..ns {
                                    for ci in 0..2 {
                                        local[(i * 2 + ci) * row_len + j * 3 + cj] +=
                                            w * vals_s[q][i] * d[ci];
                                    }
                                }
                            }
                        }
                    }
                }
                FormKind::SymCurl | FormKind::Eps => {
                    let comp = |g: [f64; 2], c: usize| {
                        if kind == FormKind::SymCurl {
                            sym_curl_components(g, c)
                        } else {
                            eps_components(g, c)
                        }
                    };
                    for i in 0..ns {
                        for ci in 0..2 {
                            let si = comp(gs[i], ci);
                            for j in 0..nt {
                                for cj in 0..2 {
                                    let sj = comp(gt[j], cj);
                                    let mut v = 0.0;
                                    for m in 0..3 {
                                        v += SYM_W[m] * si[m] * sj[m];
                                    }
                                    local[(i * 2 + ci) * row_len + j * 2 + cj] += w * v;
                                }
                            }
                        }
                    }
                }
                FormKind::TracePi => {
                    // tr(sym curl q) for test basis (i, c): c=0 -> d2 N_i,
                    // c=1 -> -d1 N_i.
                    for i in 0..ns {
                        let tr = [gs[i][1], -gs[i][0]];
                        for ci in 0..2 {
                            for j in 0..nt {
                                local[(i * 2 + ci) * row_len + j] += w * vals_t[q][j] * tr[ci];
                            }
                        }
                    }
                }
                FormKind::CurlCouple => {
                    for j in 0..nt {
                        let curl = [gt[j][1], -gt[j][0]];
                        for i in 0..ns {
                            for ci in 0..2 {
                                local[(i * 2 + ci) * row_len + j] += w * vals_s[q][i] * curl[ci];
                            }
                        }
                    }
                }
            }
        }
        let rows = test.cell_dofs(cell);
        let cols = trial.cell_dofs(cell);
        for (i, &r) in rows.iter().enumerate() {
            for (j, &c) in cols.iter().enumerate() {
                let v = local[i * row_len + j];
                if v != 0.0 {
                    triplets.push((r, c, v));
                }
            }
        }
    }
    Ok(CsrMatrix::from_triplets(test.n_dofs(), trial.n_dofs(), triplets))
}

/// How a pointwise data field is paired with the test functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadOp {
    /// (f, v); f has the space's component count (tensor weights applied).
    Identity,
    /// (f, grad v); scalar space, f has 2 components.
    Grad,
    /// (f, curl v); scalar space, f has 2 components.
    Curl,
    /// (f, sym curl v); Vector2 space, f has 3 stored components.
    SymCurl,
}

impl LoadOp {
    fn data_len(&self, space: &FunctionSpace) -> usize {
        match self {
            LoadOp::Identity => space.ncomp(),
            LoadOp::Grad | LoadOp::Curl => 2,
            LoadOp::SymCurl => 3,
        }
    }

    fn check(&self, space: &FunctionSpace) {
        match self {
            LoadOp::Identity => {}
            LoadOp::Grad | LoadOp::Curl => assert_eq!(
                space.shape,
                ValueShape::Scalar,
                "grad/curl loads need a scalar space"
            ),
            LoadOp::SymCurl => assert_eq!(
                space.shape,
                ValueShape::Vector2,
                "sym-curl loads need a vector space"
            ),
        }
    }
}

/// Load vector from data given per cell and quadrature point. The callback
/// receives the cell index, physical coordinates, and barycentric
/// coordinates; it must return `op.data_len(space)` components.
pub fn assemble_load_with<F>(space: &FunctionSpace, op: LoadOp, data: F) -> Vec<f64>
where
    F: Fn(usize, [f64; 2], [f64; 3]) -> Vec<f64>,
{
    op.check(space);
    let want = op.data_len(space);
    let rule = norm_rule();
    let vals: Vec<Vec<f64>> = rule
        .points
        .iter()
        .map(|&l| shape_values(space.order, l))
        .collect();
    let gb: Vec<Vec<[f64; 3]>> = rule
        .points
        .iter()
        .map(|&l| shape_grads_bary(space.order, l))
        .collect();
    let nb = crate::fespace::shape_count(space.order);
    let nc = space.ncomp();
    let mut b = vec![0.0; space.n_dofs()];
    for cell in 0..space.mesh.n_cells() {
        let geom = CellGeometry::new(&space.mesh, cell);
        let dofs = space.cell_dofs(cell);
        for (q, &l) in rule.points.iter().enumerate() {
            let w = rule.weights[q] * geom.det;
            let f = data(cell, geom.point(l), l);
            assert_eq!(f.len(), want, "load data has wrong component count");
            match op {
                LoadOp::Identity => {
                    let wc = space.shape.component_weights();
                    for k in 0..nb {
                        for c in 0..nc {
                            b[dofs[k * nc + c]] += w * wc[c] * f[c] * vals[q][k];
                        }
                    }
                }
                LoadOp::Grad => {
                    for k in 0..nb {
                        let g = geom.push_grad(gb[q][k]);
                        b[dofs[k]] += w * (f[0] * g[0] + f[1] * g[1]);
                    }
                }
                LoadOp::Curl => {
                    for k in 0..nb {
                        let g = geom.push_grad(gb[q][k]);
                        b[dofs[k]] += w * (f[0] * g[1] - f[1] * g[0]);
                    }
                }
                LoadOp::SymCurl => {
                    for k in 0..nb {
                        let g = geom.push_grad(gb[q][k]);
                        for c in 0..2 {
                            let s = sym_curl_components(g, c);
                            let mut v = 0.0;
                            for m in 0..3 {
                                v += SYM_W[m] * f[m] * s[m];
                            }
                            b[dofs[k * 2 + c]] += w * v;
                        }
                    }
                }
            }
        }
    }
    b
}

/// Load vector from a pointwise field of physical coordinates.
pub fn assemble_load(
    space: &FunctionSpace,
    f: &dyn Fn(f64, f64) -> Vec<f64>,
    op: LoadOp,
) -> Vec<f64> {
    assemble_load_with(space, op, |_, p, _| f(p[0], p[1]))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::fespace::{build_space, FEFunction};
    use crate::mesh::{unit_square_mesh, Mesh};

    fn reference_triangle() -> Arc<Mesh> {
        Arc::new(Mesh {
            vertices: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            cells: vec![[0, 1, 2]],
            boundary_edges: vec![[0, 1], [1, 2], [2, 0]],
            level: 0,
        })
    }

    #[test]
    fn p1_stiffness_on_reference_triangle() {
        let mesh = reference_triangle();
        let s = build_space(&mesh, 1, ValueShape::Scalar).unwrap();
        let a = assemble_bilinear(FormKind::Stiffness, &s, &s).unwrap().to_dense();
        let exact = nalgebra::DMatrix::from_row_slice(
            3,
            3,
            &[1.0, -0.5, -0.5, -0.5, 0.5, 0.0, -0.5, 0.0, 0.5],
        );
        assert!((a - exact).abs().max() < 1e-14);
    }

    #[test]
    fn p1_mass_on_reference_triangle() {
        let mesh = reference_triangle();
        let s = build_space(&mesh, 1, ValueShape::Scalar).unwrap();
        let m = assemble_bilinear(FormKind::Mass, &s, &s).unwrap().to_dense();
        let exact = nalgebra::DMatrix::from_row_slice(
            3,
            3,
            &[2.0, 1.0, 1.0, 1.0, 2.0, 1.0, 1.0, 1.0, 2.0],
        ) / 24.0;
        assert!((m - exact).abs().max() < 1e-14);
    }

    #[test]
    fn mass_integrates_constants() {
        for order in 1..=3 {
            let mesh = Arc::new(unit_square_mesh(2).unwrap());
            let s = build_space(&mesh, order, ValueShape::Scalar).unwrap();
            let m = assemble_bilinear(FormKind::Mass, &s, &s).unwrap();
            let one = s.interpolate(|_, _| vec![1.0]).unwrap();
            let v = m.apply(&one.coeffs);
            let total: f64 = one.coeffs.iter().zip(&v).map(|(a, b)| a * b).sum();
            assert!((total - 1.0).abs() < 1e-13, "order {order}: {total}");
        }
    }

    #[test]
    fn forms_are_symmetric() {
        let mesh = Arc::new(unit_square_mesh(2).unwrap());
        for (order, shape) in [
            (2, ValueShape::Scalar),
            (2, ValueShape::Vector2),
            (2, ValueShape::SymTensor2),
        ] {
            let s = build_space(&mesh, order, shape).unwrap();
            for kind in [FormKind::Mass, FormKind::Stiffness] {
                let a = assemble_bilinear(kind, &s, &s).unwrap();
                assert!(a.max_abs_asymmetry() < 1e-13);
            }
        }
        let v = build_space(&mesh, 2, ValueShape::Vector2).unwrap();
        for kind in [FormKind::SymCurl, FormKind::Eps] {
            let a = assemble_bilinear(kind, &v, &v).unwrap();
            assert!(a.max_abs_asymmetry() < 1e-13);
        }
    }

    #[test]
    fn incompatible_shapes_rejected() {
        let mesh = Arc::new(unit_square_mesh(1).unwrap());
        let sc = build_space(&mesh, 2, ValueShape::Scalar).unwrap();
        let ve = build_space(&mesh, 2, ValueShape::Vector2).unwrap();
        assert!(assemble_bilinear(FormKind::Mass, &sc, &ve).is_err());
        assert!(assemble_bilinear(FormKind::SymCurl, &sc, &sc).is_err());
        assert!(assemble_bilinear(FormKind::TracePi, &ve, &sc).is_err());
    }

    #[test]
    fn sym_curl_kernel_contains_rigid_rotations() {
        let mesh = Arc::new(unit_square_mesh(2).unwrap());
        let v = build_space(&mesh, 2, ValueShape::Vector2).unwrap();
        let a = assemble_bilinear(FormKind::SymCurl, &v, &v).unwrap();
        // Kernel of sym curl: constants and the radial field x.
        for f in [
            |_: f64, _: f64| vec![1.0, 0.0],
            |_: f64, _: f64| vec![0.0, 1.0],
            |x: f64, y: f64| vec![x, y],
        ] {
            let r = v.interpolate(f).unwrap();
            let ar = a.apply(&r.coeffs);
            assert!(ar.iter().all(|&x| x.abs() < 1e-13));
        }
        // The rotational field x_perp is not in the kernel.
        let rot = v.interpolate(|x, y| vec![-y, x]).unwrap();
        let ar = a.apply(&rot.coeffs);
        assert!(ar.iter().any(|&x| x.abs() > 1e-3));
    }

    #[test]
    fn eps_kernel_contains_rigid_motions() {
        let mesh = Arc::new(unit_square_mesh(2).unwrap());
        let v = build_space(&mesh, 2, ValueShape::Vector2).unwrap();
        let a = assemble_bilinear(FormKind::Eps, &v, &v).unwrap();
        for f in [
            |_: f64, _: f64| vec![1.0, 0.0],
            |_: f64, _: f64| vec![0.0, 1.0],
            |x: f64, y: f64| vec![-y, x],
        ] {
            let r = v.interpolate(f).unwrap();
            let ar = a.apply(&r.coeffs);
            assert!(ar.iter().all(|&x| x.abs() < 1e-13));
        }
    }

    #[test]
    fn div_pressure_matches_identity_load() {
        // v = (x, 0) has div 1, so (div v, q) equals the load (1, q).
        let mesh = Arc::new(unit_square_mesh(2).unwrap());
        let v = build_space(&mesh, 2, ValueShape::Vector2).unwrap();
        let q = build_space(&mesh, 1, ValueShape::Scalar).unwrap();
        let d = assemble_bilinear(FormKind::DivPressure, &v, &q).unwrap();
        let vf = v.interpolate(|x, _| vec![x, 0.0]).unwrap();
        let got = d.apply(&vf.coeffs);
        let expect = assemble_load(&q, &|_, _| vec![1.0], LoadOp::Identity);
        for (g, e) in got.iter().zip(&expect) {
            assert!((g - e).abs() < 1e-13);
        }
    }

    #[test]
    fn sym_tensor_div_pressure_exact_polynomial() {
        // sigma = [[x, 0], [0, y]] has div (1, 1); test against (1, v)+(1, v2).
        let mesh = Arc::new(unit_square_mesh(2).unwrap());
        let t = build_space(&mesh, 2, ValueShape::SymTensor2).unwrap();
        let v = build_space(&mesh, 2, ValueShape::Vector2).unwrap();
        let d = assemble_bilinear(FormKind::DivPressure, &t, &v).unwrap();
        let sf = t.interpolate(|x, y| vec![x, 0.0, y]).unwrap();
        let got = d.apply(&sf.coeffs);
        let expect = assemble_load(&v, &|_, _| vec![1.0, 1.0], LoadOp::Identity);
        for (g, e) in got.iter().zip(&expect) {
            assert!((g - e).abs() < 1e-13);
        }
    }

    #[test]
    fn curl_couple_matches_direct_quadrature() {
        use rand::prelude::*;
        let mesh = Arc::new(unit_square_mesh(2).unwrap());
        let sc = build_space(&mesh, 2, ValueShape::Scalar).unwrap();
        let ve = build_space(&mesh, 2, ValueShape::Vector2).unwrap();
        let c = assemble_bilinear(FormKind::CurlCouple, &sc, &ve).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let w = FEFunction {
            space: Arc::clone(&sc),
            coeffs: (0..sc.n_dofs()).map(|_| rng.gen::<f64>() - 0.5).collect(),
        };
        let psi = FEFunction {
            space: Arc::clone(&ve),
            coeffs: (0..ve.n_dofs()).map(|_| rng.gen::<f64>() - 0.5).collect(),
        };
        let cw = c.apply(&w.coeffs);
        let lhs: f64 = psi.coeffs.iter().zip(&cw).map(|(a, b)| a * b).sum();
        // Direct quadrature of (curl w, psi).
        let rule = crate::quadrature::norm_rule();
        let mut rhs = 0.0;
        for cell in 0..mesh.n_cells() {
            let geom = CellGeometry::new(&mesh, cell);
            for (q, &l) in rule.points.iter().enumerate() {
                let gw = w.eval_grad_bary(cell, &geom, l)[0];
                let pv = psi.eval_bary(cell, l);
                rhs += rule.weights[q] * geom.det * (gw[1] * pv[0] - gw[0] * pv[1]);
            }
        }
        assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");
    }

    #[test]
    fn trace_pi_exact_on_polynomials() {
        // q = (y, 0): tr(sym curl q) = d2(y) = 1, so (w, tr sym curl q) is
        // the integral of w. Take w = x: 1/2 on the unit square.
        let mesh = Arc::new(unit_square_mesh(2).unwrap());
        let sc = build_space(&mesh, 2, ValueShape::Scalar).unwrap();
        let ve = build_space(&mesh, 2, ValueShape::Vector2).unwrap();
        let t = assemble_bilinear(FormKind::TracePi, &sc, &ve).unwrap();
        let w = sc.interpolate(|x, _| vec![x]).unwrap();
        let q = ve.interpolate(|_, y| vec![y, 0.0]).unwrap();
        let tw = t.apply(&w.coeffs);
        let v: f64 = q.coeffs.iter().zip(&tw).map(|(a, b)| a * b).sum();
        assert!((v - 0.5).abs() < 1e-13, "{v}");
        // q = (0, x): tr = -d1(x) = -1.
        let q2 = ve.interpolate(|x, _| vec![0.0, x]).unwrap();
        let v2: f64 = q2.coeffs.iter().zip(&tw).map(|(a, b)| a * b).sum();
        assert!((v2 + 0.5).abs() < 1e-13, "{v2}");
    }

    #[test]
    fn grad_and_curl_loads_on_linear_fields() {
        let mesh = Arc::new(unit_square_mesh(2).unwrap());
        let sc = build_space(&mesh, 2, ValueShape::Scalar).unwrap();
        let v = sc.interpolate(|x, _| vec![x]).unwrap();
        // (f, grad v) with f = (1, 0): integral of d1 x = 1.
        let b = assemble_load(&sc, &|_, _| vec![1.0, 0.0], LoadOp::Grad);
        let val: f64 = v.coeffs.iter().zip(&b).map(|(a, c)| a * c).sum();
        assert!((val - 1.0).abs() < 1e-13);
        // (f, curl v) with f = (0, -1): curl x = (0, -1), so again 1.
        let b = assemble_load(&sc, &|_, _| vec![0.0, -1.0], LoadOp::Curl);
        let val: f64 = v.coeffs.iter().zip(&b).map(|(a, c)| a * c).sum();
        assert!((val - 1.0).abs() < 1e-13);
    }

    #[test]
    fn sym_curl_load_matches_bilinear_action() {
        // (S, sym curl psi) with S = sym curl(u) for discrete u must equal
        // the sym-curl matrix action.
        use rand::prelude::*;
        let mesh = Arc::new(unit_square_mesh(2).unwrap());
        let ve = build_space(&mesh, 2, ValueShape::Vector2).unwrap();
        let a = assemble_bilinear(FormKind::SymCurl, &ve, &ve).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let u = FEFunction {
            space: Arc::clone(&ve),
            coeffs: (0..ve.n_dofs()).map(|_| rng.gen::<f64>() - 0.5).collect(),
        };
        let expect = a.apply(&u.coeffs);
        let got = assemble_load_with(&ve, LoadOp::SymCurl, |cell, _, l| {
            let geom = CellGeometry::new(&mesh, cell);
            let g = u.eval_grad_bary(cell, &geom, l);
            vec![g[0][1], 0.5 * (g[1][1] - g[0][0]), -g[1][0]]
        });
        for (g, e) in got.iter().zip(&expect) {
            assert!((g - e).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_zero_row_integrates() {
        let mesh = Arc::new(unit_square_mesh(2).unwrap());
        let sc = build_space(&mesh, 1, ValueShape::Scalar).unwrap();
        let row = crate::fespace::mean_zero_constraint(&sc).unwrap();
        let one = sc.interpolate(|_, _| vec![1.0]).unwrap();
        let v: f64 = row.iter().zip(&one.coeffs).map(|(a, b)| a * b).sum();
        assert!((v - 1.0).abs() < 1e-13);
        let xf = sc.interpolate(|x, _| vec![x]).unwrap();
        let v: f64 = row.iter().zip(&xf.coeffs).map(|(a, b)| a * b).sum();
        assert!((v - 0.5).abs() < 1e-13);
    }
}
