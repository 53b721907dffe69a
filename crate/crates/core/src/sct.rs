//! Scattering coefficients `W_mn = ∫ conj(u_n) ψ_m dσ` and their behaviour
//! under translation, rotation and scaling of the inclusion.

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{Medium, TransmissionSolver};
use crate::geometry::{transform, Boundary, RigidTransform};
use crate::matrix::{self, CMatrix};
use crate::specfun::cylindrical_waves;

/// Default number of extra orders kept when translating coefficients.
pub const DEFAULT_MARGIN: usize = 10;

/// Relative magnitude below which entries are ignored by [`fit_decay_constant`].
pub const DECAY_FIT_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct ScatteringCoeffMatrix {
    /// `(2K+1) × (2K+1)`, entry `(m+K, n+K)` holds `W_mn`.
    pub values: CMatrix,
    pub order: usize,
    pub omega: f64,
    pub medium: Medium,
    pub shape: Option<String>,
}

impl ScatteringCoeffMatrix {
    pub fn new(values: CMatrix, omega: f64, medium: Medium) -> Result<Self> {
        let size = values.nrows();
        if size % 2 == 0 || values.ncols() != size {
            return Err(Error::DimensionMismatch(format!(
                "coefficients must be (2K+1)x(2K+1), got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        Ok(ScatteringCoeffMatrix {
            values,
            order: size / 2,
            omega,
            medium,
            shape: None,
        })
    }

    pub fn get(&self, m: i64, n: i64) -> Complex64 {
        let k = self.order as i64;
        self.values[((m + k) as usize, (n + k) as usize)]
    }

    /// The central `(2K'+1)²` block.
    pub fn truncate(&self, order: usize) -> ScatteringCoeffMatrix {
        assert!(order <= self.order);
        let off = self.order - order;
        let size = 2 * order + 1;
        ScatteringCoeffMatrix {
            values: Mat::from_fn(size, size, |i, j| self.values[(i + off, j + off)]),
            order,
            omega: self.omega,
            medium: self.medium,
            shape: self.shape.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let file = WFile {
            shape: self.shape.clone(),
            omega: self.omega,
            order: self.order,
            medium: self.medium,
            values: matrix::to_pairs(&self.values),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: WFile = serde_json::from_str(text)?;
        let size = 2 * file.order + 1;
        let mut w = ScatteringCoeffMatrix::new(matrix::from_pairs(size, size, &file.values)?, file.omega, file.medium)?;
        w.shape = file.shape;
        Ok(w)
    }
}

#[derive(Serialize, Deserialize)]
struct WFile {
    shape: Option<String>,
    omega: f64,
    order: usize,
    medium: Medium,
    values: Vec<[f64; 2]>,
}

/// Traces of `u_m`, `m = −K..K`, and their normal derivatives on the boundary.
pub fn cylindrical_wave_traces(b: &Boundary, k0: f64, order: usize) -> (CMatrix, CMatrix) {
    let n = b.len();
    let size = 2 * order + 1;
    let waves: Vec<Vec<Complex64>> = b.points.iter().map(|&x| cylindrical_waves(order + 1, k0, x)).collect();
    let u = Mat::from_fn(n, size, |j, c| waves[j][c + 1]);
    let du = Mat::from_fn(n, size, |j, c| {
        // ∂x u_m = k0/2 (u_{m−1} − u_{m+1}), ∂y u_m = i k0/2 (u_{m−1} + u_{m+1})
        let lo = waves[j][c];
        let hi = waves[j][c + 2];
        let nu = b.normals[j];
        0.5 * k0 * (lo - hi) * nu[0] + Complex64::new(0.0, 0.5 * k0) * (lo + hi) * nu[1]
    });
    (u, du)
}

/// Scattering coefficients up to order `K` with one factorization shared by
/// all `2K+1` sources.
pub fn compute_w(b: &Boundary, medium: &Medium, omega: f64, order: usize) -> Result<ScatteringCoeffMatrix> {
    let solver = TransmissionSolver::new(b, medium, omega)?;
    compute_w_with_solver(&solver, b, medium, order)
}

pub fn compute_w_with_solver(
    solver: &TransmissionSolver,
    b: &Boundary,
    medium: &Medium,
    order: usize,
) -> Result<ScatteringCoeffMatrix> {
    let omega = solver.omega();
    let k0 = medium.k0(omega);
    let (u, du) = cylindrical_wave_traces(b, k0, order);
    let (_, psi) = solver.solve_many(&u, &du)?;
    let weighted = Mat::from_fn(u.nrows(), u.ncols(), |j, n| u[(j, n)].conj() * b.weights[j]);
    let values = psi.transpose() * &weighted;
    let mut w = ScatteringCoeffMatrix::new(values, omega, *medium)?;
    w.shape = Some(b.name.clone());
    Ok(w)
}

/// Result of [`translate_w`].
#[derive(Debug, Clone)]
pub struct Translated {
    pub w: ScatteringCoeffMatrix,
    /// Whether the input order covered `K_out` plus the margin.
    pub margin_satisfied: bool,
    /// Rough size of the neglected terms: the largest input coefficient on
    /// the outermost retained ring times the squared ℓ¹ mass of the shift.
    pub truncation_estimate: f64,
}

/// `W_mn[D+z] = Σ_{a,b} u_a(z) conj(u_b(z)) W_{m−a,n−b}[D]`, truncated to
/// the orders available in `w`.
pub fn translate_w(w: &ScatteringCoeffMatrix, z: [f64; 2], k0: f64, order_out: usize, margin: usize) -> Translated {
    let kin = w.order as i64;
    let kout = order_out as i64;
    let reach = (kin + kout) as usize;
    let shifts = cylindrical_waves(reach, k0, z);
    let shift = |a: i64| shifts[(a + reach as i64) as usize];
    let size_out = 2 * order_out + 1;
    let size_in = 2 * w.order + 1;
    // T[m, p] = u_{m−p}(z)
    let t = Mat::from_fn(size_out, size_in, |i, p| shift((i as i64 - kout) - (p as i64 - kin)));
    let values = &t * &w.values * t.adjoint();
    let mut edge: f64 = 0.0;
    for i in 0..size_in {
        for j in [0, size_in - 1] {
            edge = edge.max(w.values[(i, j)].norm()).max(w.values[(j, i)].norm());
        }
    }
    let mass: f64 = shifts.iter().map(|u| u.norm()).sum();
    Translated {
        w: ScatteringCoeffMatrix {
            values,
            order: order_out,
            omega: w.omega,
            medium: w.medium,
            shape: w.shape.clone(),
        },
        margin_satisfied: w.order >= order_out + margin,
        truncation_estimate: edge * mass * mass,
    }
}

/// `W_mn[R_θ D] = e^{i(m−n)θ} W_mn[D]`.
pub fn rotate_w(w: &ScatteringCoeffMatrix, theta: f64) -> ScatteringCoeffMatrix {
    let k = w.order as i64;
    let size = 2 * w.order + 1;
    let values = Mat::from_fn(size, size, |i, j| {
        let d = (i as i64 - k) - (j as i64 - k);
        w.values[(i, j)] * Complex64::from_polar(1.0, d as f64 * theta)
    });
    ScatteringCoeffMatrix { values, ..w.clone() }
}

/// `max |W_mn[sD, ω] − W_mn[D, sω]|` over `|m|, |n| ≤ K`.
pub fn scale_law_check(b: &Boundary, medium: &Medium, omega: f64, s: f64, order: usize) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::NonPositiveArgument(s));
    }
    if s == 1.0 {
        return Ok(0.0);
    }
    let scaled = transform(b, &RigidTransform::scaling(s));
    let lhs = compute_w(&scaled, medium, omega, order)?;
    let rhs = compute_w(b, medium, s * omega, order)?;
    Ok(matrix::max_abs_diff(&lhs.values, &rhs.values))
}

/// Empirical `C` in `|W_mn| ≤ C^{|m|+|n|} / (|m|^{|m|} |n|^{|n|})`.
///
/// Entries below `DECAY_FIT_FLOOR` times the largest entry are skipped, so
/// rounding noise in the high orders does not inflate the estimate.
pub fn fit_decay_constant(w: &ScatteringCoeffMatrix) -> f64 {
    let k = w.order as i64;
    let largest = (0..w.values.nrows())
        .flat_map(|i| (0..w.values.ncols()).map(move |j| (i, j)))
        .map(|(i, j)| w.values[(i, j)].norm())
        .fold(0.0, f64::max);
    let floor = DECAY_FIT_FLOOR * largest;
    let mut best: f64 = 0.0;
    for m in -k..=k {
        for n in -k..=k {
            if m == 0 && n == 0 {
                continue;
            }
            let v = w.get(m, n).norm();
            if v <= floor {
                continue;
            }
            let (am, an) = (m.unsigned_abs() as f64, n.unsigned_abs() as f64);
            let log = v.ln() + am * am.max(1.0).ln() + an * an.max(1.0).ln();
            best = best.max((log / (am + an)).exp());
        }
    }
    best
}
