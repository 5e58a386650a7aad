//! Randomized property tests of the structural invariants the pipelines
//! rely on.

use std::sync::Arc;

use proptest::prelude::*;

use decfem::fespace::{build_space, CellGeometry, FEFunction, ValueShape};
use decfem::linalg::{apply_dirichlet, CsrMatrix};
use decfem::mesh::unit_square_mesh;
use decfem::verification::fit_rate;

proptest! {
    #[test]
    fn csr_sums_duplicate_triplets(
        entries in prop::collection::vec((0usize..5, 0usize..5, -10.0f64..10.0), 1..40),
        x in prop::collection::vec(-1.0f64..1.0, 5),
    ) {
        let a = CsrMatrix::from_triplets(5, 5, entries.clone());
        let mut dense = [[0.0f64; 5]; 5];
        for (r, c, v) in &entries {
            dense[*r][*c] += v;
        }
        let y = a.apply(&x);
        for r in 0..5 {
            let want: f64 = (0..5).map(|c| dense[r][c] * x[c]).sum();
            prop_assert!((y[r] - want).abs() <= 1e-12);
        }
    }

    #[test]
    fn dirichlet_elimination_preserves_symmetry(
        seed in 0u64..1000,
        fixed in prop::collection::btree_set(0usize..25, 0..10),
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        // Random symmetric sparse matrix plus a random load.
        let mut triplets = Vec::new();
        for i in 0..25 {
            for j in i..25 {
                if rng.gen_bool(0.15) {
                    let v = rng.gen_range(-1.0..1.0);
                    triplets.push((i, j, v));
                    if i != j {
                        triplets.push((j, i, v));
                    }
                }
            }
            triplets.push((i, i, 5.0));
        }
        let a = CsrMatrix::from_triplets(25, 25, triplets);
        let b: Vec<f64> = (0..25).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let constraints: Vec<(usize, f64)> = fixed.iter().map(|&d| (d, 0.0)).collect();
        let (ac, bc) = apply_dirichlet(&a, &b, &constraints);
        prop_assert!(ac.max_abs_asymmetry() <= 1e-14);
        for &(d, v) in &constraints {
            prop_assert_eq!(bc[d], v);
            let (cols, vals) = ac.row(d);
            for (&c, &x) in cols.iter().zip(vals) {
                prop_assert!((c == d && (x - 1.0).abs() <= 1e-14) || x == 0.0);
            }
        }
    }

    #[test]
    fn discrete_functions_are_continuous_across_edges(
        coeffs in prop::collection::vec(-1.0f64..1.0, 25),
        t in 0.05f64..0.95,
    ) {
        let mesh = Arc::new(unit_square_mesh(2).unwrap());
        let space = build_space(&mesh, 2, ValueShape::Scalar).unwrap();
        prop_assert_eq!(space.n_dofs(), 25);
        let u = FEFunction { space, coeffs };
        for ((a, b), cells) in mesh.edge_incidence() {
            if cells.len() != 2 {
                continue;
            }
            let pa = mesh.vertices[a];
            let pb = mesh.vertices[b];
            let p = [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])];
            let mut vals = Vec::new();
            for &cell in &cells {
                let geom = CellGeometry::new(&mesh, cell);
                vals.push(u.eval_bary(cell, geom.bary(p[0], p[1]))[0]);
            }
            prop_assert!((vals[0] - vals[1]).abs() < 1e-12, "jump {} at {:?}", vals[0] - vals[1], p);
        }
    }

    #[test]
    fn interpolation_is_a_projection(
        coeffs in prop::collection::vec(-1.0f64..1.0, 25),
    ) {
        let mesh = Arc::new(unit_square_mesh(2).unwrap());
        let space = build_space(&mesh, 2, ValueShape::Scalar).unwrap();
        let u = FEFunction { space: Arc::clone(&space), coeffs };
        let again = space.interpolate(|x, y| u.eval(x, y).unwrap()).unwrap();
        for (a, b) in u.coeffs.iter().zip(&again.coeffs) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn fit_rate_is_exact_on_power_laws(
        rate in 0.5f64..4.0,
        scale in 0.1f64..10.0,
    ) {
        let hs: Vec<f64> = [4usize, 8, 16, 32].iter().map(|&n| 1.0 / n as f64).collect();
        let es: Vec<f64> = hs.iter().map(|h| scale * h.powf(rate)).collect();
        prop_assert!((fit_rate(&hs, &es) - rate).abs() < 1e-9);
    }
}
