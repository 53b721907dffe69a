//! Helmholtz transmission problem by boundary integral equations, and the
//! multistatic response of a circular acquisition system.
//!
//! The scattered field outside the inclusion is `S^{k0}[ψ]` and the total
//! field inside is `S^{k}[φ]`, where `(φ, ψ)` solve
//!
//! ```text
//! S^k φ − S^{k0} ψ                                  = U
//! (1/μ*)(−½ + K^{k*}) φ − (1/μ0)(½ + K^{k0*}) ψ    = (1/μ0) ∂νU
//! ```
//!
//! Both operators are discretized by the Kress product quadrature for the
//! logarithmic singularity on the equispaced parameter grid.

use std::f64::consts::{PI, TAU};

use faer::linalg::solvers::PartialPivLu;
use faer::prelude::*;
use faer::Mat;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Boundary;
use crate::matrix::{self, CMatrix};
use crate::specfun::{bessel01, Bessel01};

/// Condition-number estimate above which a solve is refused.
pub const MAX_CONDITION: f64 = 1e12;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Medium {
    pub eps_star: f64,
    pub mu_star: f64,
    pub eps0: f64,
    pub mu0: f64,
}

impl Default for Medium {
    fn default() -> Self {
        Medium {
            eps_star: 3.0,
            mu_star: 3.0,
            eps0: 1.0,
            mu0: 1.0,
        }
    }
}

impl Medium {
    pub fn new(eps_star: f64, mu_star: f64, eps0: f64, mu0: f64) -> Result<Self> {
        let m = Medium {
            eps_star,
            mu_star,
            eps0,
            mu0,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for v in [self.eps_star, self.mu_star, self.eps0, self.mu0] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "material parameters must be positive, got {self:?}"
                )));
            }
        }
        Ok(())
    }

    /// Wavenumber inside the inclusion.
    pub fn k(&self, omega: f64) -> f64 {
        omega * (self.eps_star * self.mu_star).sqrt()
    }

    /// Background wavenumber.
    pub fn k0(&self, omega: f64) -> f64 {
        omega * (self.eps0 * self.mu0).sqrt()
    }
}

/// Plane-wave sources and point receivers on a circle.
///
/// Source `s` has direction angle `2πs/Ns`, receiver `r` sits at angle
/// `2πr/Nr` on the circle of radius `radius` around `center`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionConfig {
    pub radius: f64,
    pub center: [f64; 2],
    pub n_sources: usize,
    pub n_receivers: usize,
    /// Angular aperture; `2π` is full view.
    pub aperture: f64,
    /// Number of source/receiver groups in limited view.
    pub n_groups: usize,
}

impl AcquisitionConfig {
    pub fn full_view(radius: f64, n_sources: usize, n_receivers: usize) -> Self {
        AcquisitionConfig {
            radius,
            center: [0.0, 0.0],
            n_sources,
            n_receivers,
            aperture: TAU,
            n_groups: 1,
        }
    }

    pub fn limited_view(radius: f64, n_sources: usize, n_receivers: usize, aperture: f64, n_groups: usize) -> Self {
        AcquisitionConfig {
            radius,
            center: [0.0, 0.0],
            n_sources,
            n_receivers,
            aperture,
            n_groups,
        }
    }

    pub fn with_center(mut self, center: [f64; 2]) -> Self {
        self.center = center;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) || self.n_sources == 0 || self.n_receivers == 0 {
            return Err(Error::InvalidInput(format!(
                "acquisition needs a positive radius and at least one source and receiver: {self:?}"
            )));
        }
        if !(self.aperture > 0.0 && self.aperture <= TAU + 1e-12) {
            return Err(Error::InvalidInput(format!(
                "aperture must lie in (0, 2π], got {}",
                self.aperture
            )));
        }
        if !self.is_full_view() && self.n_groups == 0 {
            return Err(Error::InvalidInput("limited view needs at least one group".into()));
        }
        Ok(())
    }

    pub fn is_full_view(&self) -> bool {
        self.aperture >= TAU - 1e-12
    }

    pub fn source_angle(&self, s: usize) -> f64 {
        TAU * s as f64 / self.n_sources as f64
    }

    pub fn receiver_angle(&self, r: usize) -> f64 {
        TAU * r as f64 / self.n_receivers as f64
    }

    pub fn source_direction(&self, s: usize) -> [f64; 2] {
        let (sn, cs) = self.source_angle(s).sin_cos();
        [cs, sn]
    }

    pub fn receiver_position(&self, r: usize) -> [f64; 2] {
        let (sn, cs) = self.receiver_angle(r).sin_cos();
        [self.center[0] + self.radius * cs, self.center[1] + self.radius * sn]
    }

    /// Whether the band (sliding groups) rule applies rather than disjoint blocks.
    pub fn uses_band(&self) -> bool {
        self.n_groups >= self.n_sources.min(self.n_receivers)
    }

    /// Row-major validity mask, `None` for full view.
    ///
    /// With at least as many groups as sources or receivers, each group slides
    /// around the circle and the union of measured pairs is the band
    /// `|θ_s − θ_r| ≤ α` (wrapped). With fewer groups, group `g` is centered at
    /// `2πg/G` and pairs are measured only when source and receiver both lie
    /// within `α/2` of the same center.
    pub fn mask(&self) -> Option<Vec<bool>> {
        if self.is_full_view() {
            return None;
        }
        let (ns, nr) = (self.n_sources, self.n_receivers);
        let mut mask = vec![false; ns * nr];
        let tol = 1e-12;
        if self.uses_band() {
            for s in 0..ns {
                for r in 0..nr {
                    let d = wrapped_distance(self.source_angle(s), self.receiver_angle(r));
                    mask[s * nr + r] = d <= self.aperture + tol;
                }
            }
        } else {
            let half = 0.5 * self.aperture;
            for g in 0..self.n_groups {
                let c = TAU * g as f64 / self.n_groups as f64;
                for s in 0..ns {
                    if wrapped_distance(self.source_angle(s), c) > half + tol {
                        continue;
                    }
                    for r in 0..nr {
                        if wrapped_distance(self.receiver_angle(r), c) <= half + tol {
                            mask[s * nr + r] = true;
                        }
                    }
                }
            }
        }
        Some(mask)
    }
}

/// Distance between two angles on the circle, in `[0, π]`.
pub fn wrapped_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Multistatic response matrix with acquisition metadata.
#[derive(Debug, Clone)]
pub struct MsrMatrix {
    /// `Ns × Nr`; unmeasured entries hold zero and are flagged in `mask`.
    pub values: CMatrix,
    /// Row-major validity, `None` when every entry is measured.
    pub mask: Option<Vec<bool>>,
    pub omega: f64,
    pub acquisition: AcquisitionConfig,
    pub noise_sigma: f64,
    pub seed: Option<u64>,
    /// Perimeter of the inclusion, for the SNR.
    pub perimeter: f64,
}

impl MsrMatrix {
    pub fn n_sources(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_receivers(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_valid(&self, s: usize, r: usize) -> bool {
        self.mask.as_ref().is_none_or(|m| m[s * self.n_receivers() + r])
    }

    pub fn valid_count(&self) -> usize {
        match &self.mask {
            None => self.n_sources() * self.n_receivers(),
            Some(m) => m.iter().filter(|&&v| v).count(),
        }
    }

    /// Frobenius norm over measured entries.
    pub fn frobenius(&self) -> f64 {
        let mut sum = 0.0;
        for s in 0..self.n_sources() {
            for r in 0..self.n_receivers() {
                if self.is_valid(s, r) {
                    sum += self.values[(s, r)].norm_sqr();
                }
            }
        }
        sum.sqrt()
    }

    /// `(|∂D|/√R)/σ_noise`; infinite for noiseless data.
    pub fn snr(&self) -> f64 {
        snr(self.perimeter, self.acquisition.radius, self.noise_sigma)
    }

    pub fn to_file(&self) -> MsrFile {
        MsrFile {
            omega: self.omega,
            radius: self.acquisition.radius,
            center: self.acquisition.center,
            n_sources: self.n_sources(),
            n_receivers: self.n_receivers(),
            aperture: self.acquisition.aperture,
            n_groups: self.acquisition.n_groups,
            mask: self.mask.clone(),
            values: matrix::to_pairs(&self.values),
            noise_sigma: self.noise_sigma,
            seed: self.seed,
            perimeter: self.perimeter,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_file())?)
    }

    pub fn from_json(text: &str) -> Result<MsrMatrix> {
        let file: MsrFile = serde_json::from_str(text)?;
        file.into_msr()
    }
}

/// On-disk MSR layout; `values` are row-major `[re, im]` pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MsrFile {
    pub omega: f64,
    pub radius: f64,
    pub center: [f64; 2],
    pub n_sources: usize,
    pub n_receivers: usize,
    pub aperture: f64,
    pub n_groups: usize,
    pub mask: Option<Vec<bool>>,
    pub values: Vec<[f64; 2]>,
    pub noise_sigma: f64,
    pub seed: Option<u64>,
    pub perimeter: f64,
}

impl MsrFile {
    pub fn into_msr(self) -> Result<MsrMatrix> {
        let values = matrix::from_pairs(self.n_sources, self.n_receivers, &self.values)?;
        if let Some(m) = &self.mask {
            if m.len() != self.n_sources * self.n_receivers {
                return Err(Error::DimensionMismatch("mask size".into()));
            }
        }
        let acquisition = AcquisitionConfig {
            radius: self.radius,
            center: self.center,
            n_sources: self.n_sources,
            n_receivers: self.n_receivers,
            aperture: self.aperture,
            n_groups: self.n_groups,
        };
        acquisition.validate()?;
        Ok(MsrMatrix {
            values,
            mask: self.mask,
            omega: self.omega,
            acquisition,
            noise_sigma: self.noise_sigma,
            seed: self.seed,
            perimeter: self.perimeter,
        })
    }
}

pub fn snr(perimeter: f64, radius: f64, noise_sigma: f64) -> f64 {
    if noise_sigma == 0.0 {
        f64::INFINITY
    } else {
        perimeter / radius.sqrt() / noise_sigma
    }
}

/// Weights `R_j` of the Kress product rule for `∫ ln(4 sin²((t−τ)/2)) f(τ) dτ`.
pub fn kress_log_weights(n_points: usize) -> Vec<f64> {
    let n = n_points / 2;
    let nf = n as f64;
    (0..n_points)
        .map(|d| {
            let t = PI * d as f64 / nf;
            let mut sum = 0.0;
            for m in 1..n {
                sum += (m as f64 * t).cos() / m as f64;
            }
            -2.0 * PI / nf * sum - PI / (nf * nf) * (nf * t).cos()
        })
        .collect()
}

/// Discretized `S^k` and `(K^k)^*` on one boundary.
pub struct LayerOperators {
    pub single: CMatrix,
    pub adjoint_double: CMatrix,
}

/// Assembles the single-layer and adjoint double-layer matrices for each
/// wavenumber in `ks`, sharing the geometric work.
pub fn assemble_layers(b: &Boundary, ks: &[f64]) -> Result<Vec<LayerOperators>> {
    let n_points = b.len();
    if n_points < 4 || n_points % 2 != 0 {
        return Err(Error::InvalidInput(format!(
            "the quadrature needs an even number of boundary points, got {n_points}"
        )));
    }
    let n = n_points / 2;
    let h = PI / n as f64;
    let rw = kress_log_weights(n_points);
    let logs: Vec<f64> = (0..n_points)
        .map(|d| {
            if d == 0 {
                0.0
            } else {
                (4.0 * (PI * d as f64 / n_points as f64).sin().powi(2)).ln()
            }
        })
        .collect();
    let speed = b.speed();
    let nk = ks.len();
    let rows: Vec<Vec<Complex64>> = (0..n_points)
        .into_par_iter()
        .map(|i| {
            // [S_k0 row, K_k0 row, S_k1 row, ...]
            let mut row = vec![Complex64::new(0.0, 0.0); 2 * nk * n_points];
            let xi = b.points[i];
            let nu = b.normals[i];
            for j in 0..n_points {
                let d = (i + n_points - j) % n_points;
                let sp = speed[j];
                if i == j {
                    for (q, &k) in ks.iter().enumerate() {
                        let m1 = sp / (4.0 * PI);
                        let m2 = sp * Complex64::new((EULER_GAMMA + (0.5 * k * sp).ln()) / TAU, -0.25);
                        row[2 * q * n_points + j] = rw[0] * m1 + h * m2;
                        row[(2 * q + 1) * n_points + j] = Complex64::new(h * b.curvature[i] * sp / (4.0 * PI), 0.0);
                    }
                    continue;
                }
                let dx = [xi[0] - b.points[j][0], xi[1] - b.points[j][1]];
                let r = dx[0].hypot(dx[1]);
                let dot = (dx[0] * nu[0] + dx[1] * nu[1]) / r;
                for (q, &k) in ks.iter().enumerate() {
                    let Bessel01 { j0, j1, y0, y1 } = bessel01(k * r);
                    let gamma = Complex64::new(0.25 * y0, -0.25 * j0);
                    let m1 = j0 / (4.0 * PI) * sp;
                    let m2 = gamma * sp - m1 * logs[d];
                    row[2 * q * n_points + j] = rw[d] * m1 + h * m2;
                    let l = Complex64::new(-0.25 * k * y1, 0.25 * k * j1) * (dot * sp);
                    let l1 = -k / (4.0 * PI) * j1 * dot * sp;
                    let l2 = l - l1 * logs[d];
                    row[(2 * q + 1) * n_points + j] = rw[d] * l1 + h * l2;
                }
            }
            row
        })
        .collect();
    Ok((0..nk)
        .map(|q| LayerOperators {
            single: Mat::from_fn(n_points, n_points, |i, j| rows[i][2 * q * n_points + j]),
            adjoint_double: Mat::from_fn(n_points, n_points, |i, j| rows[i][(2 * q + 1) * n_points + j]),
        })
        .collect())
}

/// Factorized transmission system for one boundary, medium and frequency.
pub struct TransmissionSolver {
    n_points: usize,
    omega: f64,
    mu0: f64,
    lu: PartialPivLu<Complex64>,
    condition: f64,
}

impl TransmissionSolver {
    pub fn new(b: &Boundary, medium: &Medium, omega: f64) -> Result<Self> {
        medium.validate()?;
        if !(omega > 0.0) {
            return Err(Error::NonPositiveArgument(omega));
        }
        let k = medium.k(omega);
        let k0 = medium.k0(omega);
        let layers = assemble_layers(b, &[k, k0])?;
        let (inner, outer) = (&layers[0], &layers[1]);
        let n = b.len();
        let (ms, m0) = (medium.mu_star, medium.mu0);
        let system = Mat::from_fn(2 * n, 2 * n, |i, j| {
            let (bi, bj) = (i / n, j / n);
            let (ii, jj) = (i % n, j % n);
            let delta = if ii == jj { 0.5 } else { 0.0 };
            match (bi, bj) {
                (0, 0) => inner.single[(ii, jj)],
                (0, 1) => -outer.single[(ii, jj)],
                (1, 0) => (inner.adjoint_double[(ii, jj)] - delta) / ms,
                _ => -(outer.adjoint_double[(ii, jj)] + delta) / m0,
            }
        });
        let norm1 = one_norm(&system);
        let lu = system.partial_piv_lu();
        let condition = norm1 * inverse_one_norm_estimate(&lu, 2 * n);
        if !(condition <= MAX_CONDITION) {
            return Err(Error::NearResonance { omega, cond: condition });
        }
        Ok(TransmissionSolver {
            n_points: n,
            omega,
            mu0: m0,
            lu,
            condition,
        })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// 1-norm condition number estimate of the system matrix.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// Solves for several right-hand sides at once. Column `c` of `traces`
    /// holds `U` and of `normal_derivatives` holds `∂νU` on the boundary.
    /// Returns `(φ, ψ)` as `N × c` matrices.
    pub fn solve_many(&self, traces: &CMatrix, normal_derivatives: &CMatrix) -> Result<(CMatrix, CMatrix)> {
        let n = self.n_points;
        let cols = traces.ncols();
        if traces.nrows() != n || normal_derivatives.nrows() != n || normal_derivatives.ncols() != cols {
            return Err(Error::DimensionMismatch(format!(
                "traces must be {n} x c with matching normal derivatives"
            )));
        }
        let rhs = Mat::from_fn(2 * n, cols, |i, j| {
            if i < n {
                traces[(i, j)]
            } else {
                normal_derivatives[(i - n, j)] / self.mu0
            }
        });
        let x = self.lu.solve(&rhs);
        let phi = Mat::from_fn(n, cols, |i, j| x[(i, j)]);
        let psi = Mat::from_fn(n, cols, |i, j| x[(n + i, j)]);
        Ok((phi, psi))
    }
}

fn one_norm(m: &CMatrix) -> f64 {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Hager's estimate of `‖A⁻¹‖₁` with Higham's alternating-sign safeguard.
fn inverse_one_norm_estimate(lu: &PartialPivLu<Complex64>, n: usize) -> f64 {
    let col_norm = |v: &CMatrix| (0..n).map(|i| v[(i, 0)].norm()).sum::<f64>();
    let mut x: CMatrix = Mat::from_fn(n, 1, |_, _| Complex64::new(1.0 / n as f64, 0.0));
    let mut estimate = 0.0;
    let mut last_index = usize::MAX;
    for _ in 0..5 {
        let y = lu.solve(&x);
        estimate = col_norm(&y);
        let sign = Mat::from_fn(n, 1, |i, _| {
            let v = y[(i, 0)];
            if v.norm() == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                v / v.norm()
            }
        });
        let z = lu.solve_adjoint(&sign);
        let (mut best, mut index) = (0.0, 0);
        let mut zx = 0.0;
        for i in 0..n {
            let a = z[(i, 0)].norm();
            if a > best {
                best = a;
                index = i;
            }
            zx += (z[(i, 0)].conj() * x[(i, 0)]).re;
        }
        if best <= zx || index == last_index {
            break;
        }
        last_index = index;
        x = Mat::from_fn(n, 1, |i, _| Complex64::new(if i == index { 1.0 } else { 0.0 }, 0.0));
    }
    let alt: CMatrix = Mat::from_fn(n, 1, |i, _| {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        Complex64::new(sign * (1.0 + i as f64 / (n.max(2) - 1) as f64), 0.0)
    });
    let alt_est = 2.0 * col_norm(&lu.solve(&alt)) / (3.0 * n as f64);
    estimate.max(alt_est)
}

/// Boundary densities for one incident field.
pub fn solve_densities(
    b: &Boundary,
    medium: &Medium,
    omega: f64,
    u_trace: &[Complex64],
    dnu_u: &[Complex64],
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let n = b.len();
    if u_trace.len() != n || dnu_u.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "incident traces must have {n} samples"
        )));
    }
    let solver = TransmissionSolver::new(b, medium, omega)?;
    let u = Mat::from_fn(n, 1, |i, _| u_trace[i]);
    let du = Mat::from_fn(n, 1, |i, _| dnu_u[i]);
    let (phi, psi) = solver.solve_many(&u, &du)?;
    Ok((
        (0..n).map(|i| phi[(i, 0)]).collect(),
        (0..n).map(|i| psi[(i, 0)]).collect(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldStatus {
    Accurate,
    /// The point is within one quadrature spacing of the boundary or inside
    /// it; the trapezoid rule is not reliable there.
    NearBoundary,
}

#[derive(Debug, Clone, Copy)]
pub struct ScatteredValue {
    pub value: Complex64,
    pub status: FieldStatus,
}

/// Fundamental solution `Γ_k(x) = −(i/4) H_0^{(1)}(k|x|)` at `r = |x| > 0`.
#[inline]
pub fn fundamental_solution(k: f64, r: f64) -> Complex64 {
    let b = bessel01(k * r);
    Complex64::new(0.25 * b.y0, -0.25 * b.j0)
}

/// `S^{k0}[ψ](x)` by the trapezoid rule.
pub fn evaluate_scattered(b: &Boundary, psi: &[Complex64], k0: f64, x: [f64; 2]) -> ScatteredValue {
    let near = b.distance_to_samples(x) < b.max_spacing() || b.contains(x);
    let mut value = Complex64::new(0.0, 0.0);
    for ((y, w), p) in b.points.iter().zip(&b.weights).zip(psi) {
        if p.norm() == 0.0 {
            continue;
        }
        let r = (x[0] - y[0]).hypot(x[1] - y[1]);
        value += fundamental_solution(k0, r) * (*p * *w);
    }
    ScatteredValue {
        value,
        status: if near {
            FieldStatus::NearBoundary
        } else {
            FieldStatus::Accurate
        },
    }
}

/// Matrix `G[p, j] = Γ_{k0}(x_p − y_j)·w_j` mapping densities to field values.
pub fn single_layer_evaluation(b: &Boundary, k0: f64, points: &[[f64; 2]]) -> CMatrix {
    let rows: Vec<Vec<Complex64>> = points
        .par_iter()
        .map(|x| {
            b.points
                .iter()
                .zip(&b.weights)
                .map(|(y, w)| fundamental_solution(k0, (x[0] - y[0]).hypot(x[1] - y[1])) * *w)
                .collect()
        })
        .collect();
    Mat::from_fn(points.len(), b.len(), |p, j| rows[p][j])
}

/// Traces of the plane waves `e^{i k0 ξ_s·x}` and their normal derivatives,
/// one column per source.
pub fn plane_wave_traces(b: &Boundary, acq: &AcquisitionConfig, k0: f64) -> (CMatrix, CMatrix) {
    let n = b.len();
    let ns = acq.n_sources;
    let dirs: Vec<[f64; 2]> = (0..ns).map(|s| acq.source_direction(s)).collect();
    let u = Mat::from_fn(n, ns, |i, s| {
        let x = b.points[i];
        Complex64::from_polar(1.0, k0 * (dirs[s][0] * x[0] + dirs[s][1] * x[1]))
    });
    let du = Mat::from_fn(n, ns, |i, s| {
        let nu = b.normals[i];
        Complex64::new(0.0, k0 * (dirs[s][0] * nu[0] + dirs[s][1] * nu[1])) * u[(i, s)]
    });
    (u, du)
}

/// Simulates `V_sr = u_s(x_r) − U_s(x_r)` for every source and receiver.
pub fn simulate_msr(b: &Boundary, medium: &Medium, acq: &AcquisitionConfig, omega: f64) -> Result<MsrMatrix> {
    acq.validate()?;
    let reach = b.circumradius(acq.center);
    if acq.radius <= reach {
        return Err(Error::InvalidInput(format!(
            "measurement radius {} does not enclose the inclusion (extent {reach})",
            acq.radius
        )));
    }
    let solver = TransmissionSolver::new(b, medium, omega)?;
    msr_with_solver(&solver, b, medium, acq)
}

/// Same as [`simulate_msr`] with an existing factorization.
pub fn msr_with_solver(
    solver: &TransmissionSolver,
    b: &Boundary,
    medium: &Medium,
    acq: &AcquisitionConfig,
) -> Result<MsrMatrix> {
    let omega = solver.omega();
    let k0 = medium.k0(omega);
    let (u, du) = plane_wave_traces(b, acq, k0);
    let (_, psi) = solver.solve_many(&u, &du)?;
    let receivers: Vec<[f64; 2]> = (0..acq.n_receivers).map(|r| acq.receiver_position(r)).collect();
    let g = single_layer_evaluation(b, k0, &receivers);
    // (G Ψ)ᵀ: rows are sources
    let field = &g * &psi;
    let mask = acq.mask();
    let nr = acq.n_receivers;
    let values = Mat::from_fn(acq.n_sources, nr, |s, r| match &mask {
        Some(m) if !m[s * nr + r] => Complex64::new(0.0, 0.0),
        _ => field[(r, s)],
    });
    Ok(MsrMatrix {
        values,
        mask,
        omega,
        acquisition: *acq,
        noise_sigma: 0.0,
        seed: None,
        perimeter: b.perimeter(),
    })
}

/// Adds white complex Gaussian noise of level `sigma0` relative to the RMS
/// of the measured entries. Real and imaginary parts have variance ½ each.
pub fn add_noise(v: &MsrMatrix, sigma0: f64, seed: u64) -> Result<MsrMatrix> {
    if !(sigma0 >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "noise level must be nonnegative, got {sigma0}"
        )));
    }
    let mut out = v.clone();
    out.seed = Some(seed);
    let count = v.valid_count();
    let sigma = if count == 0 {
        0.0
    } else {
        sigma0 * v.frobenius() / (count as f64).sqrt()
    };
    out.noise_sigma = sigma;
    if sigma == 0.0 {
        return Ok(out);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let scale = sigma * std::f64::consts::FRAC_1_SQRT_2;
    for s in 0..v.n_sources() {
        for r in 0..v.n_receivers() {
            if !v.is_valid(s, r) {
                continue;
            }
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            out.values[(s, r)] += Complex64::new(re, im) * scale;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_shape, ShapeName};

    #[test]
    fn kress_weights_integrate_log_kernel() {
        // ∫ ln(4 sin²(τ/2)) cos(τ) dτ over a period is −2π
        let n = 64;
        let w = kress_log_weights(n);
        let sum: f64 = (0..n).map(|j| w[j] * (TAU * j as f64 / n as f64).cos()).sum();
        assert!((sum + TAU).abs() < 1e-12, "{sum}");
        let total: f64 = w.iter().sum();
        assert!(total.abs() < 1e-12);
    }

    #[test]
    fn zero_data_gives_zero_densities() {
        let b = make_shape(ShapeName::Flower, 128).unwrap();
        let zero = vec![Complex64::new(0.0, 0.0); 128];
        let (phi, psi) = solve_densities(&b, &Medium::default(), TAU, &zero, &zero).unwrap();
        assert!(phi.iter().chain(&psi).all(|z| z.norm() == 0.0));
    }

    #[test]
    fn zero_density_gives_zero_field() {
        let b = make_shape(ShapeName::Disk, 64).unwrap();
        let psi = vec![Complex64::new(0.0, 0.0); 64];
        let v = evaluate_scattered(&b, &psi, TAU, [3.0, 0.0]);
        assert_eq!(v.value, Complex64::new(0.0, 0.0));
        assert_eq!(v.status, FieldStatus::Accurate);
    }

    #[test]
    fn points_on_the_boundary_are_flagged() {
        let b = make_shape(ShapeName::Disk, 64).unwrap();
        let psi = vec![Complex64::new(1.0, 0.0); 64];
        let v = evaluate_scattered(&b, &psi, TAU, [0.505, 0.0]);
        assert_eq!(v.status, FieldStatus::NearBoundary);
    }

    #[test]
    fn odd_point_counts_are_rejected() {
        let b = make_shape(ShapeName::Disk, 65).unwrap();
        assert!(TransmissionSolver::new(&b, &Medium::default(), 1.0).is_err());
    }

    #[test]
    fn full_view_has_no_mask() {
        assert!(AcquisitionConfig::full_view(3.0, 8, 8).mask().is_none());
    }

    #[test]
    fn band_mask_fraction_tracks_aperture() {
        let acq = AcquisitionConfig::limited_view(10.0, 128, 128, PI / 3.0, 128);
        let mask = acq.mask().unwrap();
        let frac = mask.iter().filter(|&&v| v).count() as f64 / mask.len() as f64;
        assert!((frac - 1.0 / 3.0).abs() < 0.02, "{frac}");
    }

    #[test]
    fn group_mask_is_block_diagonal() {
        let acq = AcquisitionConfig::limited_view(3.0, 90, 90, PI / 3.0, 5);
        let mask = acq.mask().unwrap();
        // a source in group 0 never talks to a receiver in group 1
        let r_far = 18; // angle 72°, the center of group 1
        assert!(!mask[r_far]);
        assert!(mask[0]);
        assert!(mask[18 * 90 + 18]);
    }

    #[test]
    fn zero_noise_is_identity() {
        let b = make_shape(ShapeName::Ellipse, 64).unwrap();
        let acq = AcquisitionConfig::full_view(3.0, 6, 6);
        let v = simulate_msr(&b, &Medium::default(), &acq, PI).unwrap();
        let w = add_noise(&v, 0.0, 7).unwrap();
        assert_eq!(matrix::max_abs_diff(&v.values, &w.values), 0.0);
        assert!(w.snr().is_infinite());
    }

    #[test]
    fn noise_is_seeded() {
        let b = make_shape(ShapeName::Ellipse, 64).unwrap();
        let acq = AcquisitionConfig::full_view(3.0, 6, 6);
        let v = simulate_msr(&b, &Medium::default(), &acq, PI).unwrap();
        let a = add_noise(&v, 0.3, 11).unwrap();
        let c = add_noise(&v, 0.3, 11).unwrap();
        let d = add_noise(&v, 0.3, 12).unwrap();
        assert_eq!(matrix::max_abs_diff(&a.values, &c.values), 0.0);
        assert!(matrix::max_abs_diff(&a.values, &d.values) > 0.0);
    }

    #[test]
    fn radius_must_enclose_inclusion() {
        let b = make_shape(ShapeName::Square, 64).unwrap();
        let acq = AcquisitionConfig::full_view(0.6, 4, 4);
        assert!(simulate_msr(&b, &Medium::default(), &acq, PI).is_err());
    }

    #[test]
    fn msr_json_round_trip() {
        let b = make_shape(ShapeName::Disk, 64).unwrap();
        let acq = AcquisitionConfig::limited_view(3.0, 10, 10, PI / 2.0, 10);
        let v = add_noise(&simulate_msr(&b, &Medium::default(), &acq, PI).unwrap(), 0.1, 3).unwrap();
        let back = MsrMatrix::from_json(&v.to_json().unwrap()).unwrap();
        assert_eq!(matrix::max_abs_diff(&v.values, &back.values), 0.0);
        assert_eq!(back.mask, v.mask);
        assert_eq!(back.seed, Some(3));
        assert_eq!(back.noise_sigma, v.noise_sigma);
    }
}
