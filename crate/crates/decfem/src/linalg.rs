//! Sparse storage and iterative solvers for the SPD and saddle-point systems
//! produced by assembly.
//!
//! The solver core is deliberately iterative-only: CG for SPD systems,
//! preconditioned MINRES for symmetric indefinite ones. Functional
//! constraints (mean-zero, rigid motions) are handled by augmentation with
//! extra multiplier rows.

use std::io::{BufRead, Write};

use crate::error::LinAlgError;

/// Compressed sparse row matrix; column indices strictly increasing per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_offsets: Vec<usize>,
    pub col_indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from coordinate triplets, summing duplicates. Deterministic for
    /// any input order.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_counts = vec![0usize; n_rows];
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut prev: Option<(usize, usize)> = None;
        for &(r, c, v) in &triplets {
            debug_assert!(r < n_rows && c < n_cols);
            if prev == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_indices.push(c);
                values.push(v);
                row_counts[r] += 1;
                prev = Some((r, c));
            }
        }
        let mut row_offsets = vec![0usize; n_rows + 1];
        for r in 0..n_rows {
            row_offsets[r + 1] = row_offsets[r] + row_counts[r];
        }
        CsrMatrix {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let lo = self.row_offsets[r];
        let hi = self.row_offsets[r + 1];
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(y.len(), self.n_rows);
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            let mut s = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                s += v * x[*c];
            }
            y[r] = s;
        }
    }

    pub fn matvec_transpose(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_rows);
        debug_assert_eq!(y.len(), self.n_cols);
        y.fill(0.0);
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                y[*c] += v * x[r];
            }
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.matvec(x, &mut y);
        y
    }

    pub fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_cols];
        self.matvec_transpose(x, &mut y);
        y
    }

    pub fn diag(&self) -> Vec<f64> {
        let n = self.n_rows.min(self.n_cols);
        (0..n).map(|i| self.get(i, i)).collect()
    }

    /// Largest |A_ij - A_ji|; a symmetry check for assembled forms.
    pub fn max_abs_asymmetry(&self) -> f64 {
        let mut m: f64 = 0.0;
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                m = m.max((v - self.get(*c, r)).abs());
            }
        }
        m
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut d = nalgebra::DMatrix::zeros(self.n_rows, self.n_cols);
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                d[(r, *c)] = *v;
            }
        }
        d
    }

    /// Writes the matrix in MatrixMarket coordinate format (debug path).
    pub fn write_matrix_market<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.n_rows, self.n_cols, self.nnz())?;
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                writeln!(w, "{} {} {:.17e}", r + 1, c + 1, v)?;
            }
        }
        Ok(())
    }

    pub fn read_matrix_market<R: BufRead>(r: &mut R) -> std::io::Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        if !header.starts_with("%%MatrixMarket") {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                "missing MatrixMarket header",
            ));
        }
        let mut dims: Option<(usize, usize, usize)> = None;
        let mut triplets = Vec::new();
        for line in lines {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('%') {
                continue;
            }
            let parts: Vec<&str> = t.split_whitespace().collect();
            let bad =
                || std::io::Error::new(std::io::ErrorKind::InvalidData, "bad MatrixMarket line");
            if dims.is_none() {
                if parts.len() != 3 {
                    return Err(bad());
                }
                dims = Some((
                    parts[0].parse().map_err(|_| bad())?,
                    parts[1].parse().map_err(|_| bad())?,
                    parts[2].parse().map_err(|_| bad())?,
                ));
            } else {
                if parts.len() != 3 {
                    return Err(bad());
                }
                let i: usize = parts[0].parse().map_err(|_| bad())?;
                let j: usize = parts[1].parse().map_err(|_| bad())?;
                let v: f64 = parts[2].parse().map_err(|_| bad())?;
                triplets.push((i - 1, j - 1, v));
            }
        }
        let (nr, nc, _) = dims.ok_or_else(|| {
            std::io::Error::new(std::io::ErrorKind::InvalidData, "missing dimensions")
        })?;
        Ok(CsrMatrix::from_triplets(nr, nc, triplets))
    }
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Symmetric elimination of Dirichlet dofs: constrained rows and columns are
/// zeroed, the diagonal set to 1, and the right-hand side fixed so the
/// constrained values are recovered exactly. Returns the modified pair.
pub fn apply_dirichlet(
    a: &CsrMatrix,
    b: &[f64],
    constraints: &[(usize, f64)],
) -> (CsrMatrix, Vec<f64>) {
    let n = a.n_rows;
    let mut fixed = vec![None; n];
    for &(d, v) in constraints {
        fixed[d] = Some(v);
    }
    let mut rhs = b.to_vec();
    let mut triplets = Vec::with_capacity(a.nnz());
    for r in 0..n {
        let (cols, vals) = a.row(r);
        if fixed[r].is_some() {
            continue;
        }
        for (c, v) in cols.iter().zip(vals) {
            match fixed[*c] {
                None => triplets.push((r, *c, *v)),
                Some(val) => rhs[r] -= v * val,
            }
        }
    }
    for &(d, v) in constraints {
        triplets.push((d, d, 1.0));
        rhs[d] = v;
    }
    (CsrMatrix::from_triplets(n, a.n_cols, triplets), rhs)
}

/// alpha*A + beta*B for identically sized matrices.
pub fn add_scaled(a: &CsrMatrix, b: &CsrMatrix, alpha: f64, beta: f64) -> CsrMatrix {
    debug_assert_eq!((a.n_rows, a.n_cols), (b.n_rows, b.n_cols));
    let mut triplets = Vec::with_capacity(a.nnz() + b.nnz());
    for r in 0..a.n_rows {
        let (cols, vals) = a.row(r);
        for (c, v) in cols.iter().zip(vals) {
            triplets.push((r, *c, alpha * v));
        }
        let (cols, vals) = b.row(r);
        for (c, v) in cols.iter().zip(vals) {
            triplets.push((r, *c, beta * v));
        }
    }
    CsrMatrix::from_triplets(a.n_rows, a.n_cols, triplets)
}

/// Zeroes the given columns (used to restrict coupling blocks to the free
/// dofs of an eliminated space).
pub fn zero_columns(a: &CsrMatrix, cols_to_zero: &[usize]) -> CsrMatrix {
    let mut dead = vec![false; a.n_cols];
    for &c in cols_to_zero {
        dead[c] = true;
    }
    let mut triplets = Vec::with_capacity(a.nnz());
    for r in 0..a.n_rows {
        let (cols, vals) = a.row(r);
        for (c, v) in cols.iter().zip(vals) {
            if !dead[*c] {
                triplets.push((r, *c, *v));
            }
        }
    }
    CsrMatrix::from_triplets(a.n_rows, a.n_cols, triplets)
}

#[derive(Debug, Clone)]
pub struct IterativeResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Conjugate gradients with optional Jacobi preconditioning. Converges to
/// relative residual `tol` or fails with the final residual attached.
pub fn cg(
    a: &CsrMatrix,
    b: &[f64],
    tol: f64,
    maxit: usize,
    precond_diag: Option<&[f64]>,
) -> Result<IterativeResult, LinAlgError> {
    let n = b.len();
    if a.n_rows != n || a.n_cols != n {
        return Err(LinAlgError::DimensionMismatch {
            context: format!("cg: A is {}x{}, b has {}", a.n_rows, a.n_cols, n),
        });
    }
    let norm_b = norm2(b);
    if norm_b == 0.0 {
        return Ok(IterativeResult {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
        });
    }
    let inv_diag: Vec<f64> = match precond_diag {
        Some(d) => d.iter().map(|&v| if v.abs() > 0.0 { 1.0 / v } else { 1.0 }).collect(),
        None => vec![1.0; n],
    };
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=maxit {
        a.matvec(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let res = norm2(&r) / norm_b;
        if res <= tol {
            return Ok(IterativeResult {
                x,
                iterations: it,
                residual: res,
            });
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(LinAlgError::NonConvergence {
        solver: "cg",
        iterations: maxit,
        residual: norm2(&r) / norm_b,
    })
}

/// Preconditioned MINRES for symmetric (possibly indefinite) systems with an
/// SPD diagonal preconditioner. Aborts with diagnostics when the recurrence
/// stagnates well above the target tolerance, which is the signature of a
/// singular augmented system (e.g. a missing mean-zero constraint).
pub fn minres(
    a: &CsrMatrix,
    b: &[f64],
    tol: f64,
    maxit: usize,
    precond_diag: Option<&[f64]>,
) -> Result<IterativeResult, LinAlgError> {
    let n = b.len();
    if a.n_rows != n || a.n_cols != n {
        return Err(LinAlgError::DimensionMismatch {
            context: format!("minres: A is {}x{}, b has {}", a.n_rows, a.n_cols, n),
        });
    }
    let norm_b = norm2(b);
    if norm_b == 0.0 {
        return Ok(IterativeResult {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
        });
    }
    let inv_diag: Vec<f64> = match precond_diag {
        Some(d) => d
            .iter()
            .map(|&v| if v.abs() > 1e-300 { 1.0 / v.abs() } else { 1.0 })
            .collect(),
        None => vec![1.0; n],
    };
    let prec = |v: &[f64]| -> Vec<f64> { v.iter().zip(&inv_diag).map(|(a, b)| a * b).collect() };

    let mut x = vec![0.0; n];
    let mut v_prev = vec![0.0; n];
    let mut v = b.to_vec();
    let mut z = prec(&v);
    let mut gamma_prev = 1.0;
    let mut gamma = dot(&z, &v).sqrt();
    if !gamma.is_finite() || gamma == 0.0 {
        return Err(LinAlgError::DimensionMismatch {
            context: "minres: preconditioned inner product is degenerate".into(),
        });
    }
    let norm_b_pre = gamma;
    let mut eta = gamma;
    let (mut s_prev, mut s) = (0.0f64, 0.0f64);
    let (mut c_prev, mut c) = (1.0f64, 1.0f64);
    let mut w_prev = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut threshold = tol * norm_b_pre;
    let mut best_res = f64::INFINITY;
    let mut stalled = 0usize;
    const STALL_LIMIT: usize = 50;

    for it in 1..=maxit {
        for zi in z.iter_mut() {
            *zi /= gamma;
        }
        let az = a.apply(&z);
        let delta = dot(&az, &z);
        let mut v_next = az;
        for i in 0..n {
            v_next[i] -= (delta / gamma) * v[i] + (gamma / gamma_prev) * v_prev[i];
        }
        let z_next = prec(&v_next);
        let gamma_next = dot(&z_next, &v_next).max(0.0).sqrt();
        let alpha0 = c * delta - c_prev * s * gamma;
        let alpha1 = (alpha0 * alpha0 + gamma_next * gamma_next).sqrt();
        let alpha2 = s * delta + c_prev * c * gamma;
        let alpha3 = s_prev * gamma;
        let c_next = alpha0 / alpha1;
        let s_next = gamma_next / alpha1;
        let mut w_next = vec![0.0; n];
        for i in 0..n {
            w_next[i] = (z[i] - alpha3 * w_prev[i] - alpha2 * w[i]) / alpha1;
        }
        for i in 0..n {
            x[i] += c_next * eta * w_next[i];
        }
        eta = -s_next * eta;

        v_prev = std::mem::replace(&mut v, v_next);
        z = z_next;
        gamma_prev = std::mem::replace(&mut gamma, gamma_next);
        s_prev = s;
        s = s_next;
        c_prev = c;
        c = c_next;
        w_prev = std::mem::replace(&mut w, w_next);

        let est = eta.abs();
        if est < best_res * (1.0 - 1e-8) {
            best_res = est;
            stalled = 0;
        } else {
            stalled += 1;
        }
        if est <= threshold {
            // Verify with the true residual before accepting.
            let mut r = a.apply(&x);
            for i in 0..n {
                r[i] = b[i] - r[i];
            }
            let true_res = norm2(&r) / norm_b;
            if true_res <= tol {
                return Ok(IterativeResult {
                    x,
                    iterations: it,
                    residual: true_res,
                });
            }
            threshold *= 0.1;
        }
        if stalled >= STALL_LIMIT && est > 10.0 * tol * norm_b_pre {
            return Err(LinAlgError::Stagnation {
                solver: "minres",
                stalled,
                residual: est / norm_b_pre,
            });
        }
        if gamma_next <= f64::EPSILON * norm_b_pre {
            // Krylov space exhausted; accept whatever we have if good enough.
            let mut r = a.apply(&x);
            for i in 0..n {
                r[i] = b[i] - r[i];
            }
            let true_res = norm2(&r) / norm_b;
            if true_res <= tol {
                return Ok(IterativeResult {
                    x,
                    iterations: it,
                    residual: true_res,
                });
            }
            return Err(LinAlgError::NonConvergence {
                solver: "minres",
                iterations: it,
                residual: true_res,
            });
        }
    }
    let mut r = a.apply(&x);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    Err(LinAlgError::NonConvergence {
        solver: "minres",
        iterations: maxit,
        residual: norm2(&r) / norm_b,
    })
}

/// Saddle system [[A, B^T], [B, 0]] with optional functional constraint rows
/// on either block, solved as one augmented symmetric system.
#[derive(Debug, Clone)]
pub struct SaddleProblem {
    /// SPD/SPSD block (after any Dirichlet elimination), n x n.
    pub a: CsrMatrix,
    /// Optional coupling block, m x n (rows = multiplier space).
    pub b: Option<CsrMatrix>,
    pub rhs_f: Vec<f64>,
    pub rhs_g: Vec<f64>,
    /// Dense constraint rows on the primal block (length n each).
    pub primal_constraints: Vec<Vec<f64>>,
    /// Dense constraint rows on the multiplier block (length m each).
    pub multiplier_constraints: Vec<Vec<f64>>,
    /// SPD diagonal used to precondition the multiplier block (typically the
    /// pressure mass-matrix diagonal). Ones if absent.
    pub multiplier_precond_diag: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct SaddleSolution {
    pub primal: Vec<f64>,
    pub multiplier: Vec<f64>,
    pub constraint_multipliers: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

impl SaddleProblem {
    pub fn n_primal(&self) -> usize {
        self.a.n_rows
    }

    pub fn n_multiplier(&self) -> usize {
        self.b.as_ref().map_or(0, |b| b.n_rows)
    }

    pub fn n_total(&self) -> usize {
        self.n_primal()
            + self.n_multiplier()
            + self.primal_constraints.len()
            + self.multiplier_constraints.len()
    }

    /// Explicit augmented matrix and right-hand side; also the dense-oracle
    /// entry point in tests.
    pub fn augmented(&self) -> (CsrMatrix, Vec<f64>) {
        let n = self.n_primal();
        let m = self.n_multiplier();
        let total = self.n_total();
        let mut triplets = Vec::new();
        for r in 0..n {
            let (cols, vals) = self.a.row(r);
            for (c, v) in cols.iter().zip(vals) {
                if *v != 0.0 {
                    triplets.push((r, *c, *v));
                }
            }
        }
        if let Some(b) = &self.b {
            for r in 0..m {
                let (cols, vals) = b.row(r);
                for (c, v) in cols.iter().zip(vals) {
                    if *v != 0.0 {
                        triplets.push((n + r, *c, *v));
                        triplets.push((*c, n + r, *v));
                    }
                }
            }
        }
        let mut row = n + m;
        for cr in &self.primal_constraints {
            for (j, v) in cr.iter().enumerate() {
                if *v != 0.0 {
                    triplets.push((row, j, *v));
                    triplets.push((j, row, *v));
                }
            }
            row += 1;
        }
        for cr in &self.multiplier_constraints {
            for (j, v) in cr.iter().enumerate() {
                if *v != 0.0 {
                    triplets.push((row, n + j, *v));
                    triplets.push((n + j, row, *v));
                }
            }
            row += 1;
        }
        let k = CsrMatrix::from_triplets(total, total, triplets);
        let mut rhs = vec![0.0; total];
        rhs[..n].copy_from_slice(&self.rhs_f);
        rhs[n..n + m].copy_from_slice(&self.rhs_g);
        (k, rhs)
    }

    fn precond_diag(&self) -> Vec<f64> {
        let m = self.n_multiplier();
        let mut d = Vec::with_capacity(self.n_total());
        let a_diag = self.a.diag();
        let a_max = a_diag.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
        for v in a_diag {
            d.push(if v.abs() > 1e-14 * a_max { v.abs() } else { a_max });
        }
        match &self.multiplier_precond_diag {
            Some(md) => d.extend(md.iter().map(|v| v.abs().max(1e-300))),
            None => d.extend(std::iter::repeat(1.0).take(m)),
        }
        d.extend(std::iter::repeat(1.0).take(
            self.primal_constraints.len() + self.multiplier_constraints.len(),
        ));
        d
    }

    pub fn solve(&self, tol: f64, maxit: usize) -> Result<SaddleSolution, LinAlgError> {
        let (k, rhs) = self.augmented();
        let d = self.precond_diag();
        let res = minres(&k, &rhs, tol, maxit, Some(&d))?;
        let n = self.n_primal();
        let m = self.n_multiplier();
        Ok(SaddleSolution {
            primal: res.x[..n].to_vec(),
            multiplier: res.x[n..n + m].to_vec(),
            constraint_multipliers: res.x[n + m..].to_vec(),
            iterations: res.iterations,
            residual: res.residual,
        })
    }
}

/// Dense LU solve, used for small reference systems and oracles.
pub fn dense_solve(a: &CsrMatrix, b: &[f64]) -> Option<Vec<f64>> {
    let d = a.to_dense();
    let rhs = nalgebra::DVector::from_column_slice(b);
    let lu = d.lu();
    lu.solve(&rhs).map(|x| x.as_slice().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_matrix(d: &[f64]) -> CsrMatrix {
        CsrMatrix::from_triplets(
            d.len(),
            d.len(),
            d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect(),
        )
    }

    #[test]
    fn triplets_merge_duplicates() {
        let a = CsrMatrix::from_triplets(
            2,
            2,
            vec![(0, 0, 1.0), (0, 0, 2.0), (1, 0, 1.0), (0, 1, 4.0)],
        );
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.get(0, 1), 4.0);
        assert_eq!(a.get(1, 0), 1.0);
        assert_eq!(a.get(1, 1), 0.0);
        assert_eq!(a.nnz(), 3);
    }

    #[test]
    fn cg_identity_one_iteration() {
        let a = diag_matrix(&[1.0, 1.0, 1.0]);
        let b = vec![3.0, -1.0, 2.0];
        let r = cg(&a, &b, 1e-12, 10, None).unwrap();
        assert_eq!(r.iterations, 1);
        for (x, e) in r.x.iter().zip(&b) {
            assert!((x - e).abs() < 1e-12);
        }
    }

    #[test]
    fn cg_diagonal_finite_termination() {
        let d = [1.0, 2.0, 3.0, 4.0, 5.0];
        let a = diag_matrix(&d);
        let b = vec![1.0; 5];
        let r = cg(&a, &b, 1e-12, 10, None).unwrap();
        assert!(r.iterations <= 5);
        for (i, x) in r.x.iter().enumerate() {
            assert!((x - 1.0 / d[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn cg_nonconvergence_reports_residual() {
        let a = diag_matrix(&[1.0, 1e8]);
        let b = vec![1.0, 1.0];
        match cg(&a, &b, 1e-16, 1, None) {
            Err(LinAlgError::NonConvergence { residual, .. }) => assert!(residual > 0.0),
            other => panic!("expected nonconvergence, got {other:?}"),
        }
    }

    #[test]
    fn minres_indefinite_diagonal() {
        let a = diag_matrix(&[1.0, -1.0]);
        let b = vec![1.0, 1.0];
        let r = minres(&a, &b, 1e-12, 50, None).unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-10);
        assert!((r.x[1] + 1.0).abs() < 1e-10);
    }

    #[test]
    fn minres_matches_dense_on_block_system() {
        // [[I, e], [e^T, 0]]
        let mut t = vec![(0usize, 0usize, 1.0), (1, 1, 1.0), (2, 2, 1.0)];
        for i in 0..3 {
            t.push((i, 3, 1.0));
            t.push((3, i, 1.0));
        }
        let a = CsrMatrix::from_triplets(4, 4, t);
        let b = vec![1.0, 2.0, 3.0, 0.5];
        let it = minres(&a, &b, 1e-12, 200, None).unwrap();
        let exact = dense_solve(&a, &b).unwrap();
        for (x, e) in it.x.iter().zip(&exact) {
            assert!((x - e).abs() < 1e-9);
        }
    }

    #[test]
    fn apply_dirichlet_all_and_none() {
        let a = CsrMatrix::from_triplets(
            2,
            2,
            vec![(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0)],
        );
        let b = vec![1.0, 1.0];
        let (a2, b2) = apply_dirichlet(&a, &b, &[(0, 3.0), (1, -2.0)]);
        assert_eq!(a2.to_dense(), nalgebra::DMatrix::identity(2, 2));
        assert_eq!(b2, vec![3.0, -2.0]);
        let (a3, b3) = apply_dirichlet(&a, &b, &[]);
        assert_eq!(a3, a);
        assert_eq!(b3, b);
    }

    #[test]
    fn apply_dirichlet_preserves_symmetry_and_solution() {
        // 1D Poisson stencil, constrain both ends.
        let n = 6;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, t);
        let b = vec![1.0; n];
        let (a2, b2) = apply_dirichlet(&a, &b, &[(0, 0.0), (n - 1, 0.0)]);
        assert!(a2.max_abs_asymmetry() < 1e-15);
        let x = cg(&a2, &b2, 1e-13, 100, None).unwrap().x;
        assert_eq!(x[0], 0.0);
        assert_eq!(x[n - 1], 0.0);
        // Compare with the reduced dense system.
        let exact = dense_solve(&a2, &b2).unwrap();
        for (xi, ei) in x.iter().zip(&exact) {
            assert!((xi - ei).abs() < 1e-9);
        }
    }

    #[test]
    fn saddle_with_single_constraint_row() {
        // A = I, C = (1,1), f = (1,0) -> primal (1/2, -1/2).
        let p = SaddleProblem {
            a: diag_matrix(&[1.0, 1.0]),
            b: None,
            rhs_f: vec![1.0, 0.0],
            rhs_g: vec![],
            primal_constraints: vec![vec![1.0, 1.0]],
            multiplier_constraints: vec![],
            multiplier_precond_diag: None,
        };
        let s = p.solve(1e-12, 100).unwrap();
        assert!((s.primal[0] - 0.5).abs() < 1e-10);
        assert!((s.primal[1] + 0.5).abs() < 1e-10);
    }

    #[test]
    fn matrix_market_round_trip() {
        let a = CsrMatrix::from_triplets(3, 2, vec![(0, 1, 1.5), (2, 0, -2.25), (1, 1, 1e-3)]);
        let mut buf = Vec::new();
        a.write_matrix_market(&mut buf).unwrap();
        let b = CsrMatrix::read_matrix_market(&mut std::io::BufReader::new(&buf[..])).unwrap();
        assert_eq!(a, b);
    }
}
