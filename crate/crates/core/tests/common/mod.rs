//! Separation-of-variables solution for a centered disk, used as an
//! independent reference for the boundary integral solver.

#![allow(dead_code)]

use std::f64::consts::PI;

use echoid::specfun::{bessel_j, hankel1};
use echoid::Complex64;

pub struct DiskOracle {
    pub a: f64,
    pub k: f64,
    pub k0: f64,
    pub mu_star: f64,
    pub mu0: f64,
}

fn dj(m: i32, x: f64) -> f64 {
    0.5 * (bessel_j(m - 1, x).unwrap() - bessel_j(m + 1, x).unwrap())
}

fn dh(m: i32, x: f64) -> Complex64 {
    0.5 * (hankel1(m - 1, x).unwrap() - hankel1(m + 1, x).unwrap())
}

impl DiskOracle {
    pub fn new(a: f64, eps_star: f64, mu_star: f64, eps0: f64, mu0: f64, omega: f64) -> Self {
        DiskOracle {
            a,
            k: omega * (eps_star * mu_star).sqrt(),
            k0: omega * (eps0 * mu0).sqrt(),
            mu_star,
            mu0,
        }
    }

    /// Interior coefficient `c` and scattered coefficient `b` for the
    /// incident wave `J_m(k0 r) e^{imθ}`.
    pub fn coefficients(&self, m: i32) -> (Complex64, Complex64) {
        let (ka, k0a) = (self.k * self.a, self.k0 * self.a);
        // c J_m(ka) − b H_m(k0a) = J_m(k0a)
        // c (k/μ*) J_m'(ka) − b (k0/μ0) H_m'(k0a) = (k0/μ0) J_m'(k0a)
        let a11 = Complex64::new(bessel_j(m, ka).unwrap(), 0.0);
        let a12 = -hankel1(m, k0a).unwrap();
        let a21 = Complex64::new(self.k / self.mu_star * dj(m, ka), 0.0);
        let a22 = -(self.k0 / self.mu0) * dh(m, k0a);
        let r1 = Complex64::new(bessel_j(m, k0a).unwrap(), 0.0);
        let r2 = Complex64::new(self.k0 / self.mu0 * dj(m, k0a), 0.0);
        let det = a11 * a22 - a12 * a21;
        let c = (r1 * a22 - a12 * r2) / det;
        let b = (a11 * r2 - a21 * r1) / det;
        (c, b)
    }

    /// Exterior density `ψ = β e^{imθ}`, returns `β`.
    pub fn psi_coefficient(&self, m: i32) -> Complex64 {
        let (_, b) = self.coefficients(m);
        Complex64::new(0.0, 2.0) * b / (PI * self.a * bessel_j(m, self.k0 * self.a).unwrap())
    }

    /// Interior density `φ = γ e^{imθ}`, returns `γ`.
    pub fn phi_coefficient(&self, m: i32) -> Complex64 {
        let (c, _) = self.coefficients(m);
        Complex64::new(0.0, 2.0) * c / (PI * self.a * hankel1(m, self.k * self.a).unwrap())
    }

    /// Diagonal scattering coefficient `W_mm = 4i b_m`.
    pub fn w_diagonal(&self, m: i32) -> Complex64 {
        Complex64::new(0.0, 4.0) * self.coefficients(m).1
    }

    /// Scattered field of the incident wave `u_m` at an exterior point.
    pub fn scattered(&self, m: i32, x: [f64; 2]) -> Complex64 {
        let r = x[0].hypot(x[1]);
        let theta = x[1].atan2(x[0]);
        self.coefficients(m).1 * hankel1(m, self.k0 * r).unwrap() * Complex64::from_polar(1.0, m as f64 * theta)
    }

    /// Scattered field of the plane wave with direction angle `theta_s`
    /// recorded at `x`, truncated at `|m| ≤ order`.
    pub fn plane_wave_scattered(&self, theta_s: f64, x: [f64; 2], order: i32) -> Complex64 {
        (-order..=order)
            .map(|m| Complex64::i().powi(m) * Complex64::from_polar(1.0, -(m as f64) * theta_s) * self.scattered(m, x))
            .sum()
    }
}
