//! Lagrange finite element spaces of order 1..3 with scalar, 2-vector, or
//! symmetric 2x2 tensor values.
//!
//! Dof numbering is deterministic: global Lagrange nodes are mesh vertices,
//! then edge nodes (ordered along each edge from the lower vertex index),
//! then cell-interior nodes; components are interleaved last, so the dof of
//! node `n`, component `c` is `n * ncomp + c`.

use std::sync::Arc;

use crate::error::FeError;
use crate::mesh::Mesh;

/// Value shape of a finite element space. Symmetric tensors store the three
/// independent components (t11, t12, t22); the factor-2 weight on t12 is
/// applied inside the assembled forms, not in storage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueShape {
    Scalar,
    Vector2,
    SymTensor2,
}

impl ValueShape {
    pub fn ncomp(self) -> usize {
        match self {
            ValueShape::Scalar => 1,
            ValueShape::Vector2 => 2,
            ValueShape::SymTensor2 => 3,
        }
    }

    /// Inner-product weights per stored component (t12 counts twice).
    pub fn component_weights(self) -> &'static [f64] {
        match self {
            ValueShape::Scalar => &[1.0],
            ValueShape::Vector2 => &[1.0, 1.0],
            ValueShape::SymTensor2 => &[1.0, 2.0, 1.0],
        }
    }
}

/// Number of scalar Lagrange basis functions per cell.
pub fn shape_count(order: usize) -> usize {
    match order {
        1 => 3,
        2 => 6,
        3 => 10,
        _ => unreachable!("order validated at space construction"),
    }
}

/// Barycentric coordinates of the local scalar nodes, in local order:
/// vertices, then edge nodes on edges (0,1), (1,2), (2,0), then interior.
pub fn node_bary(order: usize) -> Vec<[f64; 3]> {
    let v = vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    match order {
        1 => v,
        2 => {
            let mut n = v;
            for (i, j) in [(0, 1), (1, 2), (2, 0)] {
                let mut b = [0.0; 3];
                b[i] = 0.5;
                b[j] = 0.5;
                n.push(b);
            }
            n
        }
        3 => {
            let mut n = v;
            for (i, j) in [(0, 1), (1, 2), (2, 0)] {
                for t in [1.0 / 3.0, 2.0 / 3.0] {
                    let mut b = [0.0; 3];
                    b[i] = 1.0 - t;
                    b[j] = t;
                    n.push(b);
                }
            }
            n.push([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);
            n
        }
        _ => unreachable!(),
    }
}

/// Scalar Lagrange shape functions at barycentric coordinates.
pub fn shape_values(order: usize, l: [f64; 3]) -> Vec<f64> {
    match order {
        1 => l.to_vec(),
        2 => {
            let mut out = Vec::with_capacity(6);
            for i in 0..3 {
                out.push(l[i] * (2.0 * l[i] - 1.0));
            }
            for (i, j) in [(0, 1), (1, 2), (2, 0)] {
                out.push(4.0 * l[i] * l[j]);
            }
            out
        }
        3 => {
            let mut out = Vec::with_capacity(10);
            for i in 0..3 {
                out.push(0.5 * l[i] * (3.0 * l[i] - 1.0) * (3.0 * l[i] - 2.0));
            }
            // On each edge (i, j): node nearer i (major i), then nearer j.
            for (i, j) in [(0, 1), (1, 2), (2, 0)] {
                out.push(4.5 * l[i] * l[j] * (3.0 * l[i] - 1.0));
                out.push(4.5 * l[i] * l[j] * (3.0 * l[j] - 1.0));
            }
            out.push(27.0 * l[0] * l[1] * l[2]);
            out
        }
        _ => unreachable!(),
    }
}

/// Derivatives of the shape functions with respect to each barycentric
/// coordinate (treated as independent; the affine map contracts them).
pub fn shape_grads_bary(order: usize, l: [f64; 3]) -> Vec<[f64; 3]> {
    match order {
        1 => vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        2 => {
            let mut out = Vec::with_capacity(6);
            for i in 0..3 {
                let mut g = [0.0; 3];
                g[i] = 4.0 * l[i] - 1.0;
                out.push(g);
            }
            for (i, j) in [(0, 1), (1, 2), (2, 0)] {
                let mut g = [0.0; 3];
                g[i] = 4.0 * l[j];
                g[j] = 4.0 * l[i];
                out.push(g);
            }
            out
        }
        3 => {
            let mut out = Vec::with_capacity(10);
            for i in 0..3 {
                let mut g = [0.0; 3];
                g[i] = 0.5 * (27.0 * l[i] * l[i] - 18.0 * l[i] + 2.0);
                out.push(g);
            }
            for (i, j) in [(0, 1), (1, 2), (2, 0)] {
                let mut g = [0.0; 3];
                g[i] = 4.5 * l[j] * (6.0 * l[i] - 1.0);
                g[j] = 4.5 * l[i] * (3.0 * l[i] - 1.0);
                out.push(g);
                let mut g = [0.0; 3];
                g[i] = 4.5 * l[j] * (3.0 * l[j] - 1.0);
                g[j] = 4.5 * l[i] * (6.0 * l[j] - 1.0);
                out.push(g);
            }
            out.push([
                27.0 * l[1] * l[2],
                27.0 * l[0] * l[2],
                27.0 * l[0] * l[1],
            ]);
            out
        }
        _ => unreachable!(),
    }
}

/// Second derivatives with respect to barycentric coordinates.
pub fn shape_hess_bary(order: usize, l: [f64; 3]) -> Vec<[[f64; 3]; 3]> {
    let zero = [[0.0; 3]; 3];
    match order {
        1 => vec![zero; 3],
        2 => {
            let mut out = Vec::with_capacity(6);
            for i in 0..3 {
                let mut h = zero;
                h[i][i] = 4.0;
                out.push(h);
            }
            for (i, j) in [(0, 1), (1, 2), (2, 0)] {
                let mut h = zero;
                h[i][j] = 4.0;
                h[j][i] = 4.0;
                out.push(h);
            }
            out
        }
        3 => {
            let mut out = Vec::with_capacity(10);
            for i in 0..3 {
                let mut h = zero;
                h[i][i] = 27.0 * l[i] - 9.0;
                out.push(h);
            }
            for (i, j) in [(0, 1), (1, 2), (2, 0)] {
                let mut h = zero;
                h[i][i] = 27.0 * l[j];
                h[i][j] = 4.5 * (6.0 * l[i] - 1.0);
                h[j][i] = h[i][j];
                out.push(h);
                let mut h = zero;
                h[j][j] = 27.0 * l[i];
                h[i][j] = 4.5 * (6.0 * l[j] - 1.0);
                h[j][i] = h[i][j];
                out.push(h);
            }
            let mut h = zero;
            h[0][1] = 27.0 * l[2];
            h[1][0] = h[0][1];
            h[0][2] = 27.0 * l[1];
            h[2][0] = h[0][2];
            h[1][2] = 27.0 * l[0];
            h[2][1] = h[1][2];
            out.push(h);
            out
        }
        _ => unreachable!(),
    }
}

/// Affine geometry of one cell: barycentric gradients and the Jacobian
/// determinant (twice the area).
#[derive(Debug, Clone, Copy)]
pub struct CellGeometry {
    pub verts: [[f64; 2]; 3],
    /// Twice the (positive) cell area.
    pub det: f64,
    pub grad_lambda: [[f64; 2]; 3],
}

impl CellGeometry {
    pub fn new(mesh: &Mesh, cell: usize) -> Self {
        let [a, b, c] = mesh.cells[cell];
        let p = [mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]];
        let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
            - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]);
        let grad_lambda = [
            [(p[1][1] - p[2][1]) / det, (p[2][0] - p[1][0]) / det],
            [(p[2][1] - p[0][1]) / det, (p[0][0] - p[2][0]) / det],
            [(p[0][1] - p[1][1]) / det, (p[1][0] - p[0][0]) / det],
        ];
        CellGeometry {
            verts: p,
            det,
            grad_lambda,
        }
    }

    pub fn area(&self) -> f64 {
        0.5 * self.det
    }

    pub fn point(&self, l: [f64; 3]) -> [f64; 2] {
        [
            l[0] * self.verts[0][0] + l[1] * self.verts[1][0] + l[2] * self.verts[2][0],
            l[0] * self.verts[0][1] + l[1] * self.verts[1][1] + l[2] * self.verts[2][1],
        ]
    }

    pub fn bary(&self, x: f64, y: f64) -> [f64; 3] {
        let p = self.verts;
        let l1 = ((x - p[0][0]) * (p[2][1] - p[0][1]) - (y - p[0][1]) * (p[2][0] - p[0][0]))
            / self.det;
        let l2 = ((y - p[0][1]) * (p[1][0] - p[0][0]) - (x - p[0][0]) * (p[1][1] - p[0][1]))
            / self.det;
        [1.0 - l1 - l2, l1, l2]
    }

    /// Physical gradient from barycentric derivatives.
    pub fn push_grad(&self, g_bary: [f64; 3]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for i in 0..3 {
            g[0] += g_bary[i] * self.grad_lambda[i][0];
            g[1] += g_bary[i] * self.grad_lambda[i][1];
        }
        g
    }

    /// Physical Hessian from barycentric second derivatives.
    pub fn push_hess(&self, h_bary: [[f64; 3]; 3]) -> [[f64; 2]; 2] {
        let mut h = [[0.0; 2]; 2];
        for i in 0..3 {
            for j in 0..3 {
                for a in 0..2 {
                    for b in 0..2 {
                        h[a][b] += h_bary[i][j] * self.grad_lambda[i][a] * self.grad_lambda[j][b];
                    }
                }
            }
        }
        h
    }
}

#[derive(Debug)]
pub struct FunctionSpace {
    pub mesh: Arc<Mesh>,
    pub order: usize,
    pub shape: ValueShape,
    /// Physical coordinates of all global Lagrange nodes.
    pub nodes: Vec<[f64; 2]>,
    /// Per cell: global node indices in local order.
    pub cell_nodes: Vec<Vec<usize>>,
    /// True for nodes on the domain boundary.
    pub node_on_boundary: Vec<bool>,
}

impl FunctionSpace {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_dofs(&self) -> usize {
        self.nodes.len() * self.shape.ncomp()
    }

    pub fn ncomp(&self) -> usize {
        self.shape.ncomp()
    }

    pub fn dof(&self, node: usize, comp: usize) -> usize {
        node * self.shape.ncomp() + comp
    }

    /// Global dof indices of a cell, nodes-major then components.
    pub fn cell_dofs(&self, cell: usize) -> Vec<usize> {
        let nc = self.shape.ncomp();
        let mut out = Vec::with_capacity(self.cell_nodes[cell].len() * nc);
        for &n in &self.cell_nodes[cell] {
            for c in 0..nc {
                out.push(n * nc + c);
            }
        }
        out
    }

    /// All dofs whose Lagrange node lies on the boundary, all components.
    pub fn dirichlet_dofs(&self) -> Vec<usize> {
        let nc = self.shape.ncomp();
        let mut out = Vec::new();
        for (n, &on) in self.node_on_boundary.iter().enumerate() {
            if on {
                for c in 0..nc {
                    out.push(n * nc + c);
                }
            }
        }
        out
    }

    /// Nodal interpolant of a pointwise-defined field.
    pub fn interpolate<F>(self: &Arc<Self>, g: F) -> Result<FEFunction, FeError>
    where
        F: Fn(f64, f64) -> Vec<f64>,
    {
        let nc = self.shape.ncomp();
        let mut coeffs = vec![0.0; self.n_dofs()];
        for (n, p) in self.nodes.iter().enumerate() {
            let v = g(p[0], p[1]);
            if v.len() != nc {
                return Err(FeError::ShapeMismatch {
                    expected: nc,
                    got: v.len(),
                });
            }
            for c in 0..nc {
                coeffs[n * nc + c] = v[c];
            }
        }
        Ok(FEFunction {
            space: Arc::clone(self),
            coeffs,
        })
    }
}

/// Builds a conforming Lagrange space on a mesh.
pub fn build_space(
    mesh: &Arc<Mesh>,
    order: usize,
    shape: ValueShape,
) -> Result<Arc<FunctionSpace>, FeError> {
    if !(1..=3).contains(&order) {
        return Err(FeError::UnsupportedOrder { order });
    }
    let mut nodes: Vec<[f64; 2]> = mesh.vertices.clone();
    let mut node_on_boundary = vec![false; mesh.n_vertices()];
    for &v in &mesh.boundary_vertices() {
        node_on_boundary[v] = true;
    }
    let mut boundary_edge_set: Vec<(usize, usize)> = mesh
        .boundary_edges
        .iter()
        .map(|e| (e[0].min(e[1]), e[0].max(e[1])))
        .collect();
    boundary_edge_set.sort_unstable();

    // Edge nodes: (order - 1) per edge, from the lower vertex index.
    let edges = mesh.edges();
    let mut edge_nodes: std::collections::BTreeMap<(usize, usize), Vec<usize>> =
        std::collections::BTreeMap::new();
    let per_edge = order - 1;
    for &(a, b) in &edges {
        let pa = mesh.vertices[a];
        let pb = mesh.vertices[b];
        let on_bdry = boundary_edge_set.binary_search(&(a, b)).is_ok();
        let mut ids = Vec::with_capacity(per_edge);
        for k in 1..=per_edge {
            let t = k as f64 / order as f64;
            ids.push(nodes.len());
            nodes.push([
                pa[0] + t * (pb[0] - pa[0]),
                pa[1] + t * (pb[1] - pa[1]),
            ]);
            node_on_boundary.push(on_bdry);
        }
        edge_nodes.insert((a, b), ids);
    }

    // Interior nodes (order 3 only: the centroid).
    let mut cell_nodes = Vec::with_capacity(mesh.n_cells());
    for cell in 0..mesh.n_cells() {
        let [a, b, c] = mesh.cells[cell];
        let mut cn = vec![a, b, c];
        if order >= 2 {
            for (i, j) in [(a, b), (b, c), (c, a)] {
                let key = (i.min(j), i.max(j));
                let ids = &edge_nodes[&key];
                if order == 2 {
                    cn.push(ids[0]);
                } else {
                    // Local order: node nearer the first local vertex first.
                    if i < j {
                        cn.push(ids[0]);
                        cn.push(ids[1]);
                    } else {
                        cn.push(ids[1]);
                        cn.push(ids[0]);
                    }
                }
            }
        }
        if order == 3 {
            let g = CellGeometry::new(mesh, cell);
            cn.push(nodes.len());
            nodes.push(g.point([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]));
            node_on_boundary.push(false);
        }
        cell_nodes.push(cn);
    }

    Ok(Arc::new(FunctionSpace {
        mesh: Arc::clone(mesh),
        order,
        shape,
        nodes,
        cell_nodes,
        node_on_boundary,
    }))
}

/// A coefficient vector bound to a space, evaluable anywhere in the domain.
#[derive(Debug, Clone)]
pub struct FEFunction {
    pub space: Arc<FunctionSpace>,
    pub coeffs: Vec<f64>,
}

impl FEFunction {
    pub fn zero(space: &Arc<FunctionSpace>) -> Self {
        FEFunction {
            space: Arc::clone(space),
            coeffs: vec![0.0; space.n_dofs()],
        }
    }

    /// Value at barycentric coordinates of a given cell (one entry per
    /// component).
    pub fn eval_bary(&self, cell: usize, l: [f64; 3]) -> Vec<f64> {
        let s = &self.space;
        let nc = s.ncomp();
        let shapes = shape_values(s.order, l);
        let mut out = vec![0.0; nc];
        for (k, &n) in s.cell_nodes[cell].iter().enumerate() {
            for c in 0..nc {
                out[c] += shapes[k] * self.coeffs[n * nc + c];
            }
        }
        out
    }

    /// Physical gradient per component at barycentric coordinates.
    pub fn eval_grad_bary(&self, cell: usize, geom: &CellGeometry, l: [f64; 3]) -> Vec<[f64; 2]> {
        let s = &self.space;
        let nc = s.ncomp();
        let grads = shape_grads_bary(s.order, l);
        let mut out = vec![[0.0; 2]; nc];
        for (k, &n) in s.cell_nodes[cell].iter().enumerate() {
            let g = geom.push_grad(grads[k]);
            for c in 0..nc {
                let w = self.coeffs[n * nc + c];
                out[c][0] += w * g[0];
                out[c][1] += w * g[1];
            }
        }
        out
    }

    /// Physical Hessian per component at barycentric coordinates.
    pub fn eval_hess_bary(
        &self,
        cell: usize,
        geom: &CellGeometry,
        l: [f64; 3],
    ) -> Vec<[[f64; 2]; 2]> {
        let s = &self.space;
        let nc = s.ncomp();
        let hess = shape_hess_bary(s.order, l);
        let mut out = vec![[[0.0; 2]; 2]; nc];
        for (k, &n) in s.cell_nodes[cell].iter().enumerate() {
            let h = geom.push_hess(hess[k]);
            for c in 0..nc {
                let w = self.coeffs[n * nc + c];
                for a in 0..2 {
                    for b in 0..2 {
                        out[c][a][b] += w * h[a][b];
                    }
                }
            }
        }
        out
    }

    /// Point evaluation by locating the containing cell (linear scan).
    pub fn eval(&self, x: f64, y: f64) -> Result<Vec<f64>, FeError> {
        let (cell, l) = find_cell(&self.space.mesh, x, y)?;
        Ok(self.eval_bary(cell, l))
    }
}

/// Locates the cell containing a point; returns its barycentric coordinates.
pub fn find_cell(mesh: &Mesh, x: f64, y: f64) -> Result<(usize, [f64; 3]), FeError> {
    const TOL: f64 = 1e-12;
    for cell in 0..mesh.n_cells() {
        let g = CellGeometry::new(mesh, cell);
        let l = g.bary(x, y);
        if l.iter().all(|&li| li >= -TOL) {
            return Ok((cell, l));
        }
    }
    Err(FeError::PointOutsideMesh { x, y })
}

/// Dirichlet dofs plus dense functional constraint rows (mean-zero, rigid
/// motions) for quotient spaces.
#[derive(Debug, Clone, Default)]
pub struct ConstraintSet {
    /// (dof, prescribed value); always 0 for the problems built here.
    pub dirichlet: Vec<(usize, f64)>,
    /// Dense rows c with c . coeffs = 0 enforced by Lagrange multipliers.
    pub functional: Vec<Vec<f64>>,
}

impl ConstraintSet {
    pub fn homogeneous_dirichlet(dofs: &[usize]) -> Self {
        ConstraintSet {
            dirichlet: dofs.iter().map(|&d| (d, 0.0)).collect(),
            functional: Vec::new(),
        }
    }
}

/// Which rigid-motion family spans the constrained subspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RigidMotionVariant {
    /// span{(1,0), (0,1), x} — kernel of sym curl.
    RmRot,
    /// span{(1,0), (0,1), x_perp} — kernel of the symmetric gradient.
    Rm,
}

/// Row c with c . coeffs = integral of the member function over the domain.
pub fn mean_zero_constraint(space: &Arc<FunctionSpace>) -> Result<Vec<f64>, FeError> {
    if space.shape != ValueShape::Scalar {
        return Err(FeError::WrongValueShape { required: "scalar" });
    }
    Ok(crate::assembly::assemble_load(
        space,
        &|_, _| vec![1.0],
        crate::assembly::LoadOp::Identity,
    ))
}

/// Three rows enforcing L2-orthogonality to the rigid-motion span.
pub fn rigid_motion_constraints(
    space: &Arc<FunctionSpace>,
    variant: RigidMotionVariant,
) -> Result<[Vec<f64>; 3], FeError> {
    if space.shape != ValueShape::Vector2 {
        return Err(FeError::WrongValueShape { required: "vector2" });
    }
    let third: Box<dyn Fn(f64, f64) -> Vec<f64>> = match variant {
        RigidMotionVariant::RmRot => Box::new(|x, y| vec![x, y]),
        RigidMotionVariant::Rm => Box::new(|x, y| vec![-y, x]),
    };
    let r0 = crate::assembly::assemble_load(
        space,
        &|_, _| vec![1.0, 0.0],
        crate::assembly::LoadOp::Identity,
    );
    let r1 = crate::assembly::assemble_load(
        space,
        &|_, _| vec![0.0, 1.0],
        crate::assembly::LoadOp::Identity,
    );
    let r2 = crate::assembly::assemble_load(space, &*third, crate::assembly::LoadOp::Identity);
    Ok([r0, r1, r2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::unit_square_mesh;

    fn space(n: usize, order: usize, shape: ValueShape) -> Arc<FunctionSpace> {
        let mesh = Arc::new(unit_square_mesh(n).unwrap());
        build_space(&mesh, order, shape).unwrap()
    }

    #[test]
    fn dof_counts() {
        assert_eq!(space(1, 1, ValueShape::Scalar).n_dofs(), 4);
        assert_eq!(space(1, 2, ValueShape::Scalar).n_dofs(), 9);
        assert_eq!(space(1, 2, ValueShape::Vector2).n_dofs(), 18);
        // P3 on one square: 4 vertices + 2 nodes x 5 edges + 2 interiors.
        assert_eq!(space(1, 3, ValueShape::Scalar).n_dofs(), 16);
    }

    #[test]
    fn unsupported_order_rejected() {
        let mesh = Arc::new(unit_square_mesh(1).unwrap());
        assert!(build_space(&mesh, 4, ValueShape::Scalar).is_err());
        assert!(build_space(&mesh, 0, ValueShape::Scalar).is_err());
    }

    #[test]
    fn boundary_dof_counts() {
        assert_eq!(space(2, 1, ValueShape::Scalar).dirichlet_dofs().len(), 8);
        assert_eq!(space(2, 2, ValueShape::Scalar).dirichlet_dofs().len(), 16);
        assert_eq!(space(2, 2, ValueShape::Vector2).dirichlet_dofs().len(), 32);
    }

    #[test]
    fn partition_of_unity() {
        for order in 1..=3 {
            let l = [0.21, 0.33, 0.46];
            let s: f64 = shape_values(order, l).iter().sum();
            assert!((s - 1.0).abs() < 1e-13, "order {order}");
            let g = shape_grads_bary(order, l);
            // Gradient sum must vanish in every barycentric direction
            // difference; check the physical pushforward on a cell.
            let mesh = unit_square_mesh(1).unwrap();
            let geom = CellGeometry::new(&mesh, 0);
            let mut sum = [0.0; 2];
            for gi in &g {
                let p = geom.push_grad(*gi);
                sum[0] += p[0];
                sum[1] += p[1];
            }
            assert!(sum[0].abs() < 1e-12 && sum[1].abs() < 1e-12);
        }
    }

    #[test]
    fn shapes_are_nodal() {
        for order in 1..=3 {
            let nodes = node_bary(order);
            for (i, l) in nodes.iter().enumerate() {
                let vals = shape_values(order, *l);
                for (j, v) in vals.iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (v - expect).abs() < 1e-12,
                        "order {order} node {i} shape {j}: {v}"
                    );
                }
            }
        }
    }

    #[test]
    fn interpolation_reproduces_polynomials() {
        let s = space(2, 1, ValueShape::Scalar);
        let f = s.interpolate(|x, _| vec![x]).unwrap();
        for &(x, y) in &[(0.3, 0.4), (0.71, 0.09), (0.5, 0.5)] {
            let v = f.eval(x, y).unwrap();
            assert!((v[0] - x).abs() < 1e-13);
        }
        let s = space(2, 2, ValueShape::Scalar);
        let f = s.interpolate(|x, y| vec![x * x + x * y]).unwrap();
        for &(x, y) in &[(0.3, 0.4), (0.71, 0.09)] {
            let v = f.eval(x, y).unwrap();
            assert!((v[0] - (x * x + x * y)).abs() < 1e-13);
        }
    }

    #[test]
    fn interpolation_constant_is_exact() {
        for order in 1..=3 {
            let s = space(2, order, ValueShape::Scalar);
            let f = s.interpolate(|_, _| vec![1.0]).unwrap();
            assert!(f.coeffs.iter().all(|&c| (c - 1.0).abs() < 1e-14));
            let v = f.eval(0.37, 0.81).unwrap();
            assert!((v[0] - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn p1_interpolation_error_of_x_squared() {
        // On h = 1/4, max error of the P1 interpolant of x^2 is h^2/8 .
        // max|g''| = 1/64, attained at edge midpoints of the axis-aligned
        // edges; verified by brute-force sampling.
        let s = space(4, 1, ValueShape::Scalar);
        let f = s.interpolate(|x, _| vec![x * x]).unwrap();
        let mut max_err: f64 = 0.0;
        for i in 0..=400 {
            for j in 0..=40 {
                let x = i as f64 / 400.0;
                let y = j as f64 / 40.0;
                let v = f.eval(x, y).unwrap()[0];
                max_err = max_err.max((v - x * x).abs());
            }
        }
        assert!((max_err - 1.0 / 64.0).abs() < 1e-6, "max err {max_err}");
    }

    #[test]
    fn conformity_across_interior_edges() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for order in [2usize, 3] {
            let s = space(2, order, ValueShape::Vector2);
            let f = FEFunction {
                space: Arc::clone(&s),
                coeffs: (0..s.n_dofs()).map(|_| rng.gen::<f64>() - 0.5).collect(),
            };
            let incidence = s.mesh.edge_incidence();
            for ((a, b), cells) in incidence.iter().filter(|(_, c)| c.len() == 2) {
                let pa = s.mesh.vertices[*a];
                let pb = s.mesh.vertices[*b];
                for t in [0.123, 0.5, 0.871] {
                    let x = pa[0] + t * (pb[0] - pa[0]);
                    let y = pa[1] + t * (pb[1] - pa[1]);
                    let mut vals = Vec::new();
                    for &cell in cells {
                        let g = CellGeometry::new(&s.mesh, cell);
                        vals.push(f.eval_bary(cell, g.bary(x, y)));
                    }
                    for c in 0..2 {
                        assert!(
                            (vals[0][c] - vals[1][c]).abs() < 1e-12,
                            "jump at order {order}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn interpolate_is_projection_on_discrete_functions() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let s = space(2, 2, ValueShape::Scalar);
        let f = FEFunction {
            space: Arc::clone(&s),
            coeffs: (0..s.n_dofs()).map(|_| rng.gen::<f64>() - 0.5).collect(),
        };
        let g = s
            .interpolate(|x, y| f.eval(x, y).unwrap())
            .unwrap();
        for (a, b) in f.coeffs.iter().zip(&g.coeffs) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
