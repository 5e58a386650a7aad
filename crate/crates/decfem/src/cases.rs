//! Manufactured solutions with closed-form loads.
//!
//! Every load was derived symbolically from the stated exact solution via
//! the product structure of the fields (1D derivative tables below) and is
//! cross-checked against high-order finite differences in the tests.

use std::f64::consts::PI;

/// Derivatives 0..=4 of sin^2(pi t).
fn sin2(t: f64) -> [f64; 5] {
    let s = (PI * t).sin();
    let s2 = (2.0 * PI * t).sin();
    let c2 = (2.0 * PI * t).cos();
    [
        s * s,
        PI * s2,
        2.0 * PI * PI * c2,
        -4.0 * PI.powi(3) * s2,
        -8.0 * PI.powi(4) * c2,
    ]
}

/// Derivatives 0..=4 of sin^3(pi t) = (3 sin(pi t) - sin(3 pi t)) / 4.
fn sin3(t: f64) -> [f64; 5] {
    let (s1, c1) = (PI * t).sin_cos();
    let (s3, c3) = (3.0 * PI * t).sin_cos();
    [
        0.25 * (3.0 * s1 - s3),
        0.25 * PI * (3.0 * c1 - 3.0 * c3),
        0.25 * PI * PI * (-3.0 * s1 + 9.0 * s3),
        0.25 * PI.powi(3) * (-3.0 * c1 + 27.0 * c3),
        0.25 * PI.powi(4) * (3.0 * s1 - 81.0 * s3),
    ]
}

/// Derivatives 0..=6 of t^3 (1-t)^3 = t^3 - 3t^4 + 3t^5 - t^6.
fn bump6(t: f64) -> [f64; 7] {
    [
        t.powi(3) * (1.0 - t).powi(3),
        3.0 * t * t - 12.0 * t.powi(3) + 15.0 * t.powi(4) - 6.0 * t.powi(5),
        6.0 * t - 36.0 * t * t + 60.0 * t.powi(3) - 30.0 * t.powi(4),
        6.0 - 72.0 * t + 180.0 * t * t - 120.0 * t.powi(3),
        -72.0 + 360.0 * t - 360.0 * t * t,
        360.0 - 720.0 * t,
        -720.0,
    ]
}

/// Derivatives 0..=3 of t^2 (1-t)^2.
fn bump4(t: f64) -> [f64; 4] {
    [
        t * t * (1.0 - t) * (1.0 - t),
        2.0 * t - 6.0 * t * t + 4.0 * t.powi(3),
        2.0 - 12.0 * t + 12.0 * t * t,
        -12.0 + 24.0 * t,
    ]
}

/// -Delta u = f with u = sin(pi x) sin(pi y).
pub mod poisson {
    use super::PI;

    pub fn u(x: f64, y: f64) -> f64 {
        (PI * x).sin() * (PI * y).sin()
    }

    pub fn grad_u(x: f64, y: f64) -> [f64; 2] {
        [
            PI * (PI * x).cos() * (PI * y).sin(),
            PI * (PI * x).sin() * (PI * y).cos(),
        ]
    }

    pub fn f(x: f64, y: f64) -> f64 {
        2.0 * PI * PI * u(x, y)
    }
}

/// Stokes with divergence-free velocity curl(b(x) b(y)), b = t^2 (1-t)^2,
/// and pressure 1/4 - x^3 (mean zero on the unit square). The pressure
/// sign follows the solver's weak form, where the divergence coupling
/// (div psi, p) enters with a plus sign: the multiplier is the negative of
/// the classical pressure.
pub mod stokes {
    use super::bump4;

    pub fn velocity(x: f64, y: f64) -> [f64; 2] {
        let bx = bump4(x);
        let by = bump4(y);
        [bx[0] * by[1], -bx[1] * by[0]]
    }

    /// grad of each component: [[d1 v1, d2 v1], [d1 v2, d2 v2]].
    pub fn grad_velocity(x: f64, y: f64) -> [[f64; 2]; 2] {
        let bx = bump4(x);
        let by = bump4(y);
        [
            [bx[1] * by[1], bx[0] * by[2]],
            [-bx[2] * by[0], -bx[1] * by[1]],
        ]
    }

    pub fn pressure(x: f64, _y: f64) -> f64 {
        0.25 - x.powi(3)
    }

    /// f = -Delta(velocity) - grad(pressure).
    pub fn f(x: f64, y: f64) -> [f64; 2] {
        let bx = bump4(x);
        let by = bump4(y);
        let lap1 = bx[2] * by[1] + bx[0] * by[3];
        let lap2 = -(bx[3] * by[0] + bx[1] * by[2]);
        [-lap1 + 3.0 * x * x, -lap2]
    }
}

/// Clamped biharmonic Delta^2 u = f with u = sin^2(pi x) sin^2(pi y).
pub mod biharmonic {
    use super::sin2;

    pub fn u(x: f64, y: f64) -> f64 {
        sin2(x)[0] * sin2(y)[0]
    }

    pub fn grad_u(x: f64, y: f64) -> [f64; 2] {
        let sx = sin2(x);
        let sy = sin2(y);
        [sx[1] * sy[0], sx[0] * sy[1]]
    }

    pub fn laplacian(x: f64, y: f64) -> f64 {
        let sx = sin2(x);
        let sy = sin2(y);
        sx[2] * sy[0] + sx[0] * sy[2]
    }

    pub fn f(x: f64, y: f64) -> f64 {
        let sx = sin2(x);
        let sy = sin2(y);
        sx[4] * sy[0] + 2.0 * sx[2] * sy[2] + sx[0] * sy[4]
    }

    /// Exact Stokes-stage velocity: curl u = (d2 u, -d1 u).
    pub fn phi(x: f64, y: f64) -> [f64; 2] {
        let g = grad_u(x, y);
        [g[1], -g[0]]
    }

    pub fn grad_phi(x: f64, y: f64) -> [[f64; 2]; 2] {
        let sx = sin2(x);
        let sy = sin2(y);
        [
            [sx[1] * sy[1], sx[0] * sy[2]],
            [-sx[2] * sy[0], -sx[1] * sy[1]],
        ]
    }
}

/// Perturbed biharmonic eps^2 Delta^2 u - Delta u = f sharing the exact u
/// (and hence phi = curl u) of the biharmonic case; only the load depends
/// on eps.
pub mod brinkman {
    pub use super::biharmonic::{grad_phi, grad_u, phi, u};

    pub fn f(eps: f64, x: f64, y: f64) -> f64 {
        eps * eps * super::biharmonic::f(x, y) - super::biharmonic::laplacian(x, y)
    }
}

/// HHJ plate pipeline for Delta^2 s = -f with s = sin^3(pi x) sin^3(pi y);
/// the cube makes both s and Delta s vanish on the boundary, so the exact
/// auxiliary field w = -Delta s lies in the discrete w space.
pub mod hhj {
    use super::sin3;

    pub fn u(x: f64, y: f64) -> f64 {
        sin3(x)[0] * sin3(y)[0]
    }

    pub fn grad_u(x: f64, y: f64) -> [f64; 2] {
        let gx = sin3(x);
        let gy = sin3(y);
        [gx[1] * gy[0], gx[0] * gy[1]]
    }

    pub fn laplacian(x: f64, y: f64) -> f64 {
        let gx = sin3(x);
        let gy = sin3(y);
        gx[2] * gy[0] + gx[0] * gy[2]
    }

    pub fn w(x: f64, y: f64) -> f64 {
        -laplacian(x, y)
    }

    pub fn grad_w(x: f64, y: f64) -> [f64; 2] {
        let gx = sin3(x);
        let gy = sin3(y);
        [
            -(gx[3] * gy[0] + gx[1] * gy[2]),
            -(gx[2] * gy[1] + gx[0] * gy[3]),
        ]
    }

    /// Load: f = -Delta^2 u.
    pub fn f(x: f64, y: f64) -> f64 {
        let gx = sin3(x);
        let gy = sin3(y);
        -(gx[4] * gy[0] + 2.0 * gx[2] * gy[2] + gx[0] * gy[4])
    }

    /// Stored components of sym curl p = sigma - pi w with sigma = -hess u:
    /// (u_yy, -u_xy, u_xx).
    pub fn sym_curl_p(x: f64, y: f64) -> [f64; 3] {
        let gx = sin3(x);
        let gy = sin3(y);
        [gx[0] * gy[2], -gx[1] * gy[1], gx[2] * gy[0]]
    }

    /// Stored components of the moment tensor sigma = -hess u.
    pub fn sigma(x: f64, y: f64) -> [f64; 3] {
        let gx = sin3(x);
        let gy = sin3(y);
        [-gx[2] * gy[0], -gx[1] * gy[1], -gx[0] * gy[2]]
    }
}

/// Triharmonic -Delta^3 u = f with the H^3_0 polynomial
/// u = x^3 (1-x)^3 y^3 (1-y)^3.
pub mod triharmonic {
    use super::bump6;

    pub fn u(x: f64, y: f64) -> f64 {
        bump6(x)[0] * bump6(y)[0]
    }

    pub fn grad_u(x: f64, y: f64) -> [f64; 2] {
        let px = bump6(x);
        let py = bump6(y);
        [px[1] * py[0], px[0] * py[1]]
    }

    pub fn laplacian(x: f64, y: f64) -> f64 {
        let px = bump6(x);
        let py = bump6(y);
        px[2] * py[0] + px[0] * py[2]
    }

    pub fn bilaplacian(x: f64, y: f64) -> f64 {
        let px = bump6(x);
        let py = bump6(y);
        px[4] * py[0] + 2.0 * px[2] * py[2] + px[0] * py[4]
    }

    pub fn f(x: f64, y: f64) -> f64 {
        let px = bump6(x);
        let py = bump6(y);
        -(px[6] * py[0]
            + 3.0 * px[4] * py[2]
            + 3.0 * px[2] * py[4]
            + px[0] * py[6])
    }
}
