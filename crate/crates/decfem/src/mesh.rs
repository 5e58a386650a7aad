//! Conforming triangular meshes of simply connected polygonal domains.
//!
//! Cells are stored counter-clockwise. Structured generators split every
//! square along the lower-left to upper-right diagonal and order vertices
//! lexicographically (y-major, then x) so that downstream dof numbering is
//! deterministic.

use std::collections::BTreeMap;

use crate::error::MeshError;

/// Boundary tag used for the whole boundary; only homogeneous Dirichlet
/// problems are supported.
pub const BOUNDARY_TAG: &str = "dirichlet";

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    /// Vertex-index triples, counter-clockwise.
    pub cells: Vec<[usize; 3]>,
    /// Vertex-index pairs lying on the domain boundary.
    pub boundary_edges: Vec<[usize; 2]>,
    /// Refinement depth (0 for a freshly generated mesh).
    pub level: u32,
}

impl Mesh {
    fn from_cells(vertices: Vec<[f64; 2]>, cells: Vec<[usize; 3]>, level: u32) -> Self {
        let boundary_edges = boundary_edges_of(&cells);
        Mesh {
            vertices,
            cells,
            boundary_edges,
            level,
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    /// Twice the signed area of a cell; positive for counter-clockwise cells.
    pub fn signed_area2(&self, cell: usize) -> f64 {
        let [a, b, c] = self.cells[cell];
        let p = self.vertices[a];
        let q = self.vertices[b];
        let r = self.vertices[c];
        (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
    }

    /// All undirected edges with the cells sharing them, keyed by sorted
    /// vertex pair. Deterministic (BTreeMap).
    pub fn edge_incidence(&self) -> BTreeMap<(usize, usize), Vec<usize>> {
        let mut map: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (ci, cell) in self.cells.iter().enumerate() {
            for k in 0..3 {
                let key = edge_key(cell[k], cell[(k + 1) % 3]);
                map.entry(key).or_default().push(ci);
            }
        }
        map
    }

    /// Sorted unique undirected edges.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.edge_incidence().into_keys().collect()
    }

    pub fn n_edges(&self) -> usize {
        self.edge_incidence().len()
    }

    /// Maximum edge length over all cells.
    pub fn mesh_size(&self) -> f64 {
        let mut h: f64 = 0.0;
        for cell in &self.cells {
            for k in 0..3 {
                let a = self.vertices[cell[k]];
                let b = self.vertices[cell[(k + 1) % 3]];
                h = h.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
            }
        }
        h
    }

    /// Checks all mesh invariants: orientation, edge-manifoldness, Euler
    /// characteristic of a disk, and a single closed boundary loop.
    pub fn validate(&self) -> Result<(), MeshError> {
        for ci in 0..self.cells.len() {
            if self.signed_area2(ci) <= 0.0 {
                return Err(MeshError::Orientation { cell: ci });
            }
        }
        let incidence = self.edge_incidence();
        for (edge, cells) in &incidence {
            if cells.len() > 2 {
                return Err(MeshError::NonManifoldEdge { edge: *edge });
            }
        }
        let n_e = incidence.len();
        let euler = self.n_vertices() as i64 - n_e as i64 + self.n_cells() as i64;
        if euler != 1 {
            return Err(MeshError::Euler { chi: euler });
        }
        // Boundary edges must match the incidence count and form one loop.
        let mut boundary: Vec<(usize, usize)> = incidence
            .iter()
            .filter(|(_, c)| c.len() == 1)
            .map(|(e, _)| *e)
            .collect();
        boundary.sort_unstable();
        let mut declared: Vec<(usize, usize)> = self
            .boundary_edges
            .iter()
            .map(|e| edge_key(e[0], e[1]))
            .collect();
        declared.sort_unstable();
        if boundary != declared {
            return Err(MeshError::BoundaryMismatch);
        }
        check_single_loop(&boundary)?;
        Ok(())
    }

    /// Vertex indices lying on the boundary.
    pub fn boundary_vertices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .boundary_edges
            .iter()
            .flat_map(|e| e.iter().copied())
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Red refinement: each triangle is split into 4 congruent children via
    /// edge midpoints. Parent vertices keep their indices.
    pub fn refine_uniform(&self) -> Mesh {
        let mut vertices = self.vertices.clone();
        let mut midpoint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for (a, b) in self.edges() {
            let pa = self.vertices[a];
            let pb = self.vertices[b];
            midpoint.insert((a, b), vertices.len());
            vertices.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
        }
        let mut cells = Vec::with_capacity(4 * self.cells.len());
        for &[a, b, c] in &self.cells {
            let mab = midpoint[&edge_key(a, b)];
            let mbc = midpoint[&edge_key(b, c)];
            let mca = midpoint[&edge_key(c, a)];
            cells.push([a, mab, mca]);
            cells.push([b, mbc, mab]);
            cells.push([c, mca, mbc]);
            cells.push([mab, mbc, mca]);
        }
        Mesh::from_cells(vertices, cells, self.level + 1)
    }
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn boundary_edges_of(cells: &[[usize; 3]]) -> Vec<[usize; 2]> {
    let mut map: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for cell in cells {
        for k in 0..3 {
            *map.entry(edge_key(cell[k], cell[(k + 1) % 3])).or_insert(0) += 1;
        }
    }
    map.into_iter()
        .filter(|&(_, count)| count == 1)
        .map(|((a, b), _)| [a, b])
        .collect()
}

fn check_single_loop(boundary: &[(usize, usize)]) -> Result<(), MeshError> {
    if boundary.is_empty() {
        return Err(MeshError::BoundaryMismatch);
    }
    let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(a, b) in boundary {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    }
    if adj.values().any(|n| n.len() != 2) {
        return Err(MeshError::BoundaryNotLoop);
    }
    // Walk the loop; it must visit every boundary edge.
    let start = boundary[0].0;
    let mut prev = start;
    let mut cur = adj[&start][0];
    let mut visited = 1usize;
    while cur != start {
        let next = if adj[&cur][0] == prev {
            adj[&cur][1]
        } else {
            adj[&cur][0]
        };
        prev = cur;
        cur = next;
        visited += 1;
        if visited > boundary.len() {
            return Err(MeshError::BoundaryNotLoop);
        }
    }
    if visited != boundary.len() {
        return Err(MeshError::BoundaryNotLoop);
    }
    Ok(())
}

/// Structured mesh of the unit square with `n` subdivisions per side.
pub fn unit_square_mesh(n: usize) -> Result<Mesh, MeshError> {
    if n == 0 {
        return Err(MeshError::InvalidResolution { n });
    }
    let np = n + 1;
    let mut vertices = Vec::with_capacity(np * np);
    for j in 0..np {
        for i in 0..np {
            vertices.push([i as f64 / n as f64, j as f64 / n as f64]);
        }
    }
    let idx = |i: usize, j: usize| j * np + i;
    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let a = idx(i, j);
            let b = idx(i + 1, j);
            let c = idx(i + 1, j + 1);
            let d = idx(i, j + 1);
            cells.push([a, b, c]);
            cells.push([a, c, d]);
        }
    }
    Ok(Mesh::from_cells(vertices, cells, 0))
}

/// Structured mesh of the L-shaped domain (-1,1)^2 minus the closed
/// lower-right quadrant, with cells of size 1/n. Requires even n so the
/// reentrant corner falls on a vertex of every coarse sub-block.
pub fn lshape_mesh(n: usize) -> Result<Mesh, MeshError> {
    if n == 0 || n % 2 != 0 {
        return Err(MeshError::InvalidResolution { n });
    }
    let m = 2 * n; // intervals across [-1, 1]
    let np = m + 1;
    let coord = |k: usize| -1.0 + k as f64 / n as f64;
    // Keep squares whose center lies in the L (everything except x>0, y<0).
    let keep = |i: usize, j: usize| {
        let cx = 0.5 * (coord(i) + coord(i + 1));
        let cy = 0.5 * (coord(j) + coord(j + 1));
        !(cx > 0.0 && cy < 0.0)
    };
    let mut used = vec![false; np * np];
    for j in 0..m {
        for i in 0..m {
            if keep(i, j) {
                for (di, dj) in [(0, 0), (1, 0), (1, 1), (0, 1)] {
                    used[(j + dj) * np + (i + di)] = true;
                }
            }
        }
    }
    let mut renum = vec![usize::MAX; np * np];
    let mut vertices = Vec::new();
    for j in 0..np {
        for i in 0..np {
            if used[j * np + i] {
                renum[j * np + i] = vertices.len();
                vertices.push([coord(i), coord(j)]);
            }
        }
    }
    let mut cells = Vec::new();
    for j in 0..m {
        for i in 0..m {
            if keep(i, j) {
                let a = renum[j * np + i];
                let b = renum[j * np + i + 1];
                let c = renum[(j + 1) * np + i + 1];
                let d = renum[(j + 1) * np + i];
                cells.push([a, b, c]);
                cells.push([a, c, d]);
            }
        }
    }
    Ok(Mesh::from_cells(vertices, cells, 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_counts() {
        let m = unit_square_mesh(1).unwrap();
        assert_eq!(m.n_vertices(), 4);
        assert_eq!(m.n_cells(), 2);
        assert_eq!(m.boundary_edges.len(), 4);
        m.validate().unwrap();

        let m = unit_square_mesh(2).unwrap();
        assert_eq!(m.n_vertices(), 9);
        assert_eq!(m.n_cells(), 8);
        assert_eq!(m.boundary_edges.len(), 8);
        m.validate().unwrap();
    }

    #[test]
    fn unit_square_euler_n4() {
        let m = unit_square_mesh(4).unwrap();
        assert_eq!(m.n_vertices(), 25);
        assert_eq!(m.n_edges(), 56);
        assert_eq!(m.n_cells(), 32);
        assert_eq!(25i64 - 56 + 32, 1);
        m.validate().unwrap();
    }

    #[test]
    fn zero_resolution_rejected() {
        assert!(unit_square_mesh(0).is_err());
        assert!(lshape_mesh(0).is_err());
        assert!(lshape_mesh(3).is_err());
    }

    #[test]
    fn lshape_counts() {
        let m = lshape_mesh(2).unwrap();
        assert_eq!(m.n_vertices(), 21);
        assert_eq!(m.n_cells(), 24);
        assert_eq!(m.boundary_edges.len(), 16);
        m.validate().unwrap();
        // Reentrant corner is a vertex.
        assert!(m
            .vertices
            .iter()
            .any(|v| v[0] == 0.0 && v[1] == 0.0));
        let m = lshape_mesh(4).unwrap();
        m.validate().unwrap();
        assert!(m.vertices.iter().any(|v| v[0] == 0.0 && v[1] == 0.0));
    }

    #[test]
    fn refinement_counts_and_h() {
        let m = unit_square_mesh(1).unwrap();
        assert!((m.mesh_size() - 2f64.sqrt()).abs() < 1e-15);
        let r = m.refine_uniform();
        assert_eq!(r.n_vertices(), 9);
        assert_eq!(r.n_cells(), 8);
        assert_eq!(r.level, 1);
        assert_eq!(r.mesh_size(), m.mesh_size() / 2.0);
        r.validate().unwrap();
        let rr = r.refine_uniform();
        assert_eq!(rr.n_cells(), 32);
        rr.validate().unwrap();
        assert_eq!(rr.mesh_size(), m.mesh_size() / 4.0);
        // Parent vertices survive with identical indices.
        for (i, v) in m.vertices.iter().enumerate() {
            assert_eq!(&r.vertices[i], v);
        }
    }

    #[test]
    fn mesh_size_unit_square_n4() {
        let m = unit_square_mesh(4).unwrap();
        assert!((m.mesh_size() - 2f64.sqrt() / 4.0).abs() < 1e-15);
    }

    #[test]
    fn refine_preserves_min_angle() {
        let m = lshape_mesh(2).unwrap();
        let r = m.refine_uniform();
        assert!((min_angle(&r) - min_angle(&m)).abs() < 1e-12);
    }

    fn min_angle(m: &Mesh) -> f64 {
        let mut min = f64::INFINITY;
        for ci in 0..m.n_cells() {
            let c = m.cells[ci];
            for k in 0..3 {
                let p = m.vertices[c[k]];
                let q = m.vertices[c[(k + 1) % 3]];
                let r = m.vertices[c[(k + 2) % 3]];
                let u = [q[0] - p[0], q[1] - p[1]];
                let v = [r[0] - p[0], r[1] - p[1]];
                let dot = u[0] * v[0] + u[1] * v[1];
                let nu = (u[0] * u[0] + u[1] * u[1]).sqrt();
                let nv = (v[0] * v[0] + v[1] * v[1]).sqrt();
                min = min.min((dot / (nu * nv)).acos());
            }
        }
        min
    }

    #[test]
    fn flipped_cell_detected() {
        let mut m = unit_square_mesh(2).unwrap();
        m.cells[0].swap(0, 1);
        assert!(matches!(
            m.validate(),
            Err(MeshError::Orientation { cell: 0 })
        ));
    }
}
