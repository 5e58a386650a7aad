//! Symmetric Gaussian quadrature on the reference triangle.
//!
//! All rules have strictly positive weights. Points are barycentric; weights
//! sum to 1/2, the area of the reference triangle, so a physical integral is
//! `sum_i w_i * f(x_i) * det(J)` with `det(J)` twice the cell area.

use std::sync::OnceLock;

use crate::error::AssemblyError;

pub const MAX_DEGREE: usize = 8;

#[derive(Debug, Clone)]
pub struct QuadRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Appends the three cyclic permutations of (a, b, b).
fn push_perm3(pts: &mut Vec<[f64; 3]>, ws: &mut Vec<f64>, a: f64, w: f64) {
    let b = 0.5 * (1.0 - a);
    pts.push([a, b, b]);
    pts.push([b, a, b]);
    pts.push([b, b, a]);
    ws.extend_from_slice(&[w, w, w]);
}

/// Appends all six permutations of (a, b, c).
fn push_perm6(pts: &mut Vec<[f64; 3]>, ws: &mut Vec<f64>, a: f64, b: f64, w: f64) {
    let c = 1.0 - a - b;
    for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
        pts.push(p);
        ws.push(w);
    }
}

fn build(degree: usize) -> QuadRule {
    let mut pts = Vec::new();
    let mut ws = Vec::new();
    match degree {
        1 => {
            pts.push([1.0 / 3.0; 3]);
            ws.push(1.0);
        }
        2 | 3 | 4 => {
            // Degree-4 rule also covers 2 and 3 (the classic degree-3 rule
            // has a negative centroid weight).
            push_perm3(&mut pts, &mut ws, 0.108_103_018_168_070, 0.223_381_589_678_011);
            push_perm3(&mut pts, &mut ws, 0.816_847_572_980_459, 0.109_951_743_655_322);
        }
        5 => {
            let s15 = 15.0_f64.sqrt();
            pts.push([1.0 / 3.0; 3]);
            ws.push(9.0 / 40.0);
            push_perm3(&mut pts, &mut ws, 1.0 - 2.0 * (6.0 + s15) / 21.0, (155.0 + s15) / 1200.0);
            push_perm3(&mut pts, &mut ws, 1.0 - 2.0 * (6.0 - s15) / 21.0, (155.0 - s15) / 1200.0);
        }
        6 => {
            push_perm3(&mut pts, &mut ws, 0.501_426_509_658_179, 0.116_786_275_726_379);
            push_perm3(&mut pts, &mut ws, 0.873_821_971_016_996, 0.050_844_906_370_207);
            push_perm6(
                &mut pts,
                &mut ws,
                0.636_502_499_121_399,
                0.310_352_451_033_784,
                0.082_851_075_618_374,
            );
        }
        7 | 8 => {
            pts.push([1.0 / 3.0; 3]);
            ws.push(0.144_315_607_677_787);
            push_perm3(&mut pts, &mut ws, 0.081_414_823_414_554, 0.095_091_634_267_285);
            push_perm3(&mut pts, &mut ws, 0.658_861_384_496_480, 0.103_217_370_534_718);
            push_perm3(&mut pts, &mut ws, 0.898_905_543_365_938, 0.032_458_497_623_198);
            push_perm6(
                &mut pts,
                &mut ws,
                0.008_394_777_409_958,
                0.263_112_829_634_638,
                0.027_230_314_174_435,
            );
        }
        _ => unreachable!("degree validated by triangle_rule"),
    }
    // Normalize so the weights sum to the reference area exactly.
    let sum: f64 = ws.iter().sum();
    let scale = 0.5 / sum;
    for w in &mut ws {
        *w *= scale;
    }
    QuadRule {
        points: pts,
        weights: ws,
    }
}

/// Rule exact for polynomials of the given total degree.
pub fn triangle_rule(degree: usize) -> Result<&'static QuadRule, AssemblyError> {
    static RULES: OnceLock<Vec<QuadRule>> = OnceLock::new();
    if degree == 0 || degree > MAX_DEGREE {
        return Err(AssemblyError::UnsupportedQuadratureDegree { degree });
    }
    let rules = RULES.get_or_init(|| (1..=MAX_DEGREE).map(build).collect());
    Ok(&rules[degree - 1])
}

/// Fixed high-order rule used for error norms and manufactured loads.
pub fn norm_rule() -> &'static QuadRule {
    triangle_rule(MAX_DEGREE).expect("max degree rule exists")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    /// Integral of x^p y^q over the reference triangle {x,y>=0, x+y<=1}.
    fn monomial_exact(p: usize, q: usize) -> f64 {
        factorial(p) * factorial(q) / factorial(p + q + 2)
    }

    fn integrate(rule: &QuadRule, f: impl Fn(f64, f64) -> f64) -> f64 {
        rule.points
            .iter()
            .zip(&rule.weights)
            .map(|(l, w)| w * f(l[1], l[2]))
            .sum()
    }

    #[test]
    fn weights_positive_and_sum_to_half() {
        for deg in 1..=MAX_DEGREE {
            let rule = triangle_rule(deg).unwrap();
            assert!(rule.weights.iter().all(|&w| w > 0.0), "degree {deg}");
            let sum: f64 = rule.weights.iter().sum();
            assert!((sum - 0.5).abs() < 1e-15, "degree {deg}: sum {sum}");
        }
    }

    #[test]
    fn points_inside_reference_triangle() {
        for deg in 1..=MAX_DEGREE {
            for l in &triangle_rule(deg).unwrap().points {
                assert!((l[0] + l[1] + l[2] - 1.0).abs() < 1e-14);
                assert!(l.iter().all(|&c| c > 0.0 && c < 1.0));
            }
        }
    }

    #[test]
    fn degree_2_rule_is_the_classic_midpoint_variant() {
        let rule = triangle_rule(2).unwrap();
        // Degrees 2..4 share the 6-point degree-4 rule.
        assert_eq!(rule.len(), 6);
        let v = integrate(rule, |x, y| x * x + y * y);
        assert!((v - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn rule_sizes() {
        let sizes: Vec<usize> = (1..=8)
            .map(|d| triangle_rule(d).unwrap().len())
            .collect();
        assert_eq!(sizes, vec![1, 6, 6, 6, 7, 12, 16, 16]);
    }

    #[test]
    fn monomial_exactness_to_declared_degree() {
        for deg in 1..=MAX_DEGREE {
            let rule = triangle_rule(deg).unwrap();
            for p in 0..=deg {
                for q in 0..=(deg - p) {
                    let got = integrate(rule, |x, y| x.powi(p as i32) * y.powi(q as i32));
                    let exact = monomial_exact(p, q);
                    assert!(
                        (got - exact).abs() < 5e-14,
                        "degree {deg}, x^{p} y^{q}: got {got}, exact {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn spot_values() {
        let r4 = triangle_rule(4).unwrap();
        assert!((integrate(r4, |x, _| x * x) - 1.0 / 12.0).abs() < 1e-15);
        assert!((integrate(r4, |x, y| x * y) - 1.0 / 24.0).abs() < 1e-15);
        let r8 = triangle_rule(8).unwrap();
        assert!((integrate(r8, |x, y| x * x * y * y) - 1.0 / 180.0).abs() < 1e-15);
    }

    #[test]
    fn unsupported_degrees_rejected() {
        assert!(triangle_rule(0).is_err());
        assert!(triangle_rule(9).is_err());
    }
}
