//! The acquisition operator `L(W) = A W Bᴴ` that maps scattering
//! coefficients to multistatic measurements, its inversion, and the
//! associated stability quantities.

use std::f64::consts::{E, FRAC_PI_2};

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{AcquisitionConfig, Medium, MsrMatrix};
use crate::matrix::{self, CMatrix};
use crate::sct::ScatteringCoeffMatrix;
use crate::specfun::{hankel1_sequence, parity, MAX_ORDER};

/// Relative singular-value cutoff of the least-squares solver.
pub const SVD_CUTOFF: f64 = 1e-10;

/// Largest relative deviation from `AᴴA = Ns·I`, `BᴴB = Nr·D` accepted by
/// the closed-form inverse.
pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct AcquisitionOperator {
    /// `Ns × (2K+1)`, `A_sm = e^{ik0ξ_s·z0} e^{im(π/2−θ_s)}`.
    pub a: CMatrix,
    /// `Nr × (2K+1)`, `B_rn = (i/4) conj(H_n(k0R)) e^{−inθ_r}`.
    pub b: CMatrix,
    /// `d_n = (i/4) H_n(k0R)`.
    pub d: Vec<Complex64>,
    /// `|d_n|²`.
    pub d_diag: Vec<f64>,
    pub order: usize,
    pub omega: f64,
    pub k0: f64,
    pub medium: Medium,
    pub acquisition: AcquisitionConfig,
    pub mask: Option<Vec<bool>>,
}

impl AcquisitionOperator {
    pub fn size(&self) -> usize {
        2 * self.order + 1
    }

    pub fn is_full_view(&self) -> bool {
        self.mask.is_none()
    }

    /// Largest relative deviation from `AᴴA = Ns·I` and `BᴴB = Nr·D`.
    pub fn orthogonality_deviation(&self) -> f64 {
        let ns = self.a.nrows() as f64;
        let nr = self.b.nrows() as f64;
        let aa = self.a.adjoint() * &self.a;
        let bb = self.b.adjoint() * &self.b;
        let mut dev: f64 = 0.0;
        let dmax = self.d_diag.iter().copied().fold(0.0, f64::max);
        for i in 0..self.size() {
            for j in 0..self.size() {
                let ea = if i == j { ns } else { 0.0 };
                dev = dev.max((aa[(i, j)] - ea).norm() / ns);
                let eb = if i == j { nr * self.d_diag[i] } else { 0.0 };
                // relative to the diagonal entries involved, so that tiny
                // low-order |d_n|² are not swamped by the large ones
                let scale = nr * (self.d_diag[i] * self.d_diag[j]).sqrt().max(1e-300 * dmax);
                dev = dev.max((bb[(i, j)] - eb).norm() / scale);
            }
        }
        dev
    }
}

pub fn build_operator(
    acq: &AcquisitionConfig,
    medium: &Medium,
    omega: f64,
    order: usize,
) -> Result<AcquisitionOperator> {
    acq.validate()?;
    if order > MAX_ORDER as usize {
        return Err(Error::OrderOutOfRange {
            order: order as i64,
            max: MAX_ORDER as i64,
        });
    }
    let k0 = medium.k0(omega);
    let k = order as i64;
    let size = 2 * order + 1;
    let h = hankel1_sequence(order, k0 * acq.radius)?;
    let hn = |n: i64| -> Complex64 {
        let v = h[n.unsigned_abs() as usize];
        if n < 0 {
            parity(n) * v
        } else {
            v
        }
    };
    let quarter_i = Complex64::new(0.0, 0.25);
    let d: Vec<Complex64> = (-k..=k).map(|n| quarter_i * hn(n)).collect();
    let d_diag = d.iter().map(|v| v.norm_sqr()).collect();
    let z0 = acq.center;
    let a = Mat::from_fn(acq.n_sources, size, |s, c| {
        let m = c as f64 - order as f64;
        let xi = acq.source_direction(s);
        let phase = k0 * (xi[0] * z0[0] + xi[1] * z0[1]) + m * (FRAC_PI_2 - acq.source_angle(s));
        Complex64::from_polar(1.0, phase)
    });
    let b = Mat::from_fn(acq.n_receivers, size, |r, c| {
        let n = c as f64 - order as f64;
        quarter_i * hn(c as i64 - k).conj() * Complex64::from_polar(1.0, -n * acq.receiver_angle(r))
    });
    Ok(AcquisitionOperator {
        a,
        b,
        d,
        d_diag,
        order,
        omega,
        k0,
        medium: *medium,
        acquisition: *acq,
        mask: acq.mask(),
    })
}

/// `L(X) = A X Bᴴ`.
pub fn apply_l(op: &AcquisitionOperator, x: &CMatrix) -> Result<CMatrix> {
    if x.nrows() != op.size() || x.ncols() != op.size() {
        return Err(Error::DimensionMismatch(format!(
            "operator of order {} expects a {}x{} matrix, got {}x{}",
            op.order,
            op.size(),
            op.size(),
            x.nrows(),
            x.ncols()
        )));
    }
    Ok(&op.a * x * op.b.adjoint())
}

fn check_msr(op: &AcquisitionOperator, v: &MsrMatrix) -> Result<()> {
    if v.n_sources() != op.a.nrows() || v.n_receivers() != op.b.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "measurements are {}x{}, operator expects {}x{}",
            v.n_sources(),
            v.n_receivers(),
            op.a.nrows(),
            op.b.nrows()
        )));
    }
    Ok(())
}

/// Closed-form inverse `(1/(Ns Nr)) Aᴴ V B D⁻¹` for full-view uniform data.
pub fn pinv_reconstruct(op: &AcquisitionOperator, v: &MsrMatrix) -> Result<ScatteringCoeffMatrix> {
    check_msr(op, v)?;
    if v.mask.is_some() || op.mask.is_some() {
        return Err(Error::NotOrthogonal {
            deviation: f64::INFINITY,
        });
    }
    let deviation = op.orthogonality_deviation();
    if !(deviation <= ORTHOGONALITY_TOLERANCE) {
        return Err(Error::NotOrthogonal { deviation });
    }
    let scale = 1.0 / (op.a.nrows() * op.b.nrows()) as f64;
    let mut x = op.a.adjoint() * &v.values * &op.b;
    for j in 0..op.size() {
        let f = scale / op.d_diag[j];
        for i in 0..op.size() {
            x[(i, j)] *= f;
        }
    }
    ScatteringCoeffMatrix::new(x, v.omega, op.medium)
}

#[derive(Debug, Clone)]
pub struct LsqReconstruction {
    pub w: ScatteringCoeffMatrix,
    /// Number of singular values kept by the cutoff.
    pub effective_rank: usize,
    /// `(2K+1)²`, the full rank.
    pub full_rank: usize,
    /// Frobenius norm of the residual over measured entries.
    pub residual: f64,
}

impl LsqReconstruction {
    pub fn is_rank_deficient(&self) -> bool {
        self.effective_rank < self.full_rank
    }
}

/// Minimum-norm least-squares solution of `L(W) ≈ V` over measured entries,
/// with relative singular-value cutoff [`SVD_CUTOFF`].
pub fn lsq_reconstruct(op: &AcquisitionOperator, v: &MsrMatrix) -> Result<LsqReconstruction> {
    check_msr(op, v)?;
    let mask = combined_mask(op, v);
    let size = op.size();
    let (x, rank) = match &mask {
        None => kronecker_lsq(op, &v.values)?,
        Some(m) => masked_lsq(op, &v.values, m)?,
    };
    let fitted = apply_l(op, &x)?;
    let mut residual = 0.0;
    for s in 0..v.n_sources() {
        for r in 0..v.n_receivers() {
            if mask.as_ref().is_none_or(|m| m[s * v.n_receivers() + r]) {
                residual += (fitted[(s, r)] - v.values[(s, r)]).norm_sqr();
            }
        }
    }
    Ok(LsqReconstruction {
        w: ScatteringCoeffMatrix::new(x, v.omega, op.medium)?,
        effective_rank: rank,
        full_rank: size * size,
        residual: residual.sqrt(),
    })
}

fn combined_mask(op: &AcquisitionOperator, v: &MsrMatrix) -> Option<Vec<bool>> {
    match (&op.mask, &v.mask) {
        (None, None) => None,
        (Some(a), None) => Some(a.clone()),
        (None, Some(b)) => Some(b.clone()),
        (Some(a), Some(b)) => Some(a.iter().zip(b).map(|(x, y)| *x && *y).collect()),
    }
}

struct Svd {
    u: CMatrix,
    s: Vec<f64>,
    v: CMatrix,
}

fn thin_svd(m: &CMatrix) -> Result<Svd> {
    let svd = m.thin_svd().map_err(|_| Error::SvdFailed)?;
    let s = svd.S().column_vector();
    Ok(Svd {
        u: svd.U().to_owned(),
        s: (0..s.nrows()).map(|i| s[i].re).collect(),
        v: svd.V().to_owned(),
    })
}

/// Solves `A X Bᴴ = V` through the separate SVDs of `A` and `B`.
fn kronecker_lsq(op: &AcquisitionOperator, v: &CMatrix) -> Result<(CMatrix, usize)> {
    let sa = thin_svd(&op.a)?;
    let sb = thin_svd(&op.b)?;
    let top = sa.s.iter().copied().fold(0.0, f64::max) * sb.s.iter().copied().fold(0.0, f64::max);
    let mut y = sa.u.adjoint() * v * &sb.u;
    let mut rank = 0;
    for j in 0..y.ncols() {
        for i in 0..y.nrows() {
            let sigma = sa.s[i] * sb.s[j];
            if sigma > SVD_CUTOFF * top {
                y[(i, j)] /= sigma;
                rank += 1;
            } else {
                y[(i, j)] = Complex64::new(0.0, 0.0);
            }
        }
    }
    Ok((&sa.v * y * sb.v.adjoint(), rank))
}

/// Matricized operator restricted to the measured rows; columns are ordered
/// `(m, n)` row-major.
pub fn matricize(op: &AcquisitionOperator, mask: Option<&[bool]>) -> CMatrix {
    let (ns, nr) = (op.a.nrows(), op.b.nrows());
    let size = op.size();
    let rows: Vec<(usize, usize)> = (0..ns)
        .flat_map(|s| (0..nr).map(move |r| (s, r)))
        .filter(|&(s, r)| mask.is_none_or(|m| m[s * nr + r]))
        .collect();
    Mat::from_fn(rows.len(), size * size, |row, col| {
        let (s, r) = rows[row];
        let (m, n) = (col / size, col % size);
        op.a[(s, m)] * op.b[(r, n)].conj()
    })
}

fn masked_lsq(op: &AcquisitionOperator, v: &CMatrix, mask: &[bool]) -> Result<(CMatrix, usize)> {
    let m = matricize(op, Some(mask));
    let nr = op.b.nrows();
    let rhs: Vec<Complex64> = (0..op.a.nrows())
        .flat_map(|s| (0..nr).map(move |r| (s, r)))
        .filter(|&(s, r)| mask[s * nr + r])
        .map(|(s, r)| v[(s, r)])
        .collect();
    let svd = thin_svd(&m)?;
    let top = svd.s.iter().copied().fold(0.0, f64::max);
    let size = op.size();
    let mut coeff = vec![Complex64::new(0.0, 0.0); svd.s.len()];
    let mut rank = 0;
    for (i, &sigma) in svd.s.iter().enumerate() {
        if sigma > SVD_CUTOFF * top {
            let proj: Complex64 = (0..rhs.len()).map(|row| svd.u[(row, i)].conj() * rhs[row]).sum();
            coeff[i] = proj / sigma;
            rank += 1;
        }
    }
    let x = Mat::from_fn(size, size, |mi, ni| {
        let col = mi * size + ni;
        (0..svd.s.len()).map(|i| svd.v[(col, i)] * coeff[i]).sum()
    });
    Ok((x, rank))
}

/// Analytic singular values `λ_mn = sqrt(Ns Nr)|d_n|` of a full-view
/// operator, labelled by `(m, n)`.
pub fn analytic_singular_values(op: &AcquisitionOperator) -> Result<Vec<(i64, i64, f64)>> {
    if !op.is_full_view() {
        return Err(Error::InvalidInput(
            "the closed-form spectrum needs a full-view acquisition".into(),
        ));
    }
    let root = ((op.a.nrows() * op.b.nrows()) as f64).sqrt();
    let k = op.order as i64;
    let mut out = Vec::with_capacity(op.size() * op.size());
    for m in -k..=k {
        for n in -k..=k {
            out.push((m, n, root * op.d_diag[(n + k) as usize].sqrt()));
        }
    }
    Ok(out)
}

/// Singular values of the matricized operator restricted to measured entries.
pub fn numeric_singular_values(op: &AcquisitionOperator) -> Result<Vec<f64>> {
    let m = matricize(op, op.mask.as_deref());
    let mut s = m.singular_values().map_err(|_| Error::SvdFailed)?;
    s.sort_by(|a, b| b.total_cmp(a));
    s.resize(op.size() * op.size(), 0.0);
    Ok(s)
}

/// Singular values in decreasing order: closed form for full view, numeric
/// otherwise.
pub fn singular_values(op: &AcquisitionOperator) -> Result<Vec<f64>> {
    if op.is_full_view() && op.orthogonality_deviation() <= ORTHOGONALITY_TOLERANCE {
        let mut s: Vec<f64> = analytic_singular_values(op)?.into_iter().map(|t| t.2).collect();
        s.sort_by(|a, b| b.total_cmp(a));
        Ok(s)
    } else {
        numeric_singular_values(op)
    }
}

/// `max λ / min λ`; infinite when the operator is rank deficient.
pub fn condition_number(op: &AcquisitionOperator) -> Result<f64> {
    let s = singular_values(op)?;
    let (max, min) = (s[0], s[s.len() - 1]);
    Ok(if min == 0.0 { f64::INFINITY } else { max / min })
}

/// `C_R = 2/(e k0 R)`.
pub fn c_r(k0: f64, radius: f64) -> f64 {
    2.0 / (E * k0 * radius)
}

/// `ρ^{−K}` with `ρ = 1/(C_W² C_R)`.
pub fn truncation_error_bound(c_w: f64, c_r: f64, order: usize) -> Result<f64> {
    let product = c_w * c_w * c_r;
    if !(product < 1.0) {
        return Err(Error::BoundNotApplicable(format!(
            "C_W²·C_R = {product:.3} is not below 1"
        )));
    }
    let threshold = c_w / (c_r * E);
    if !(order as f64 > threshold) {
        return Err(Error::BoundNotApplicable(format!(
            "order {order} does not exceed C_W/(C_R·e) = {threshold:.3}"
        )));
    }
    let rho = 1.0 / product;
    Ok(rho.powi(-(order as i32)))
}

/// Largest `K` with `K^{K+1/2} ≤ τ0·SNR`, capped at the Bessel order limit.
pub fn max_resolving_order(snr: f64, tau0: f64) -> Result<usize> {
    if !(snr > 1.0) || !(tau0 > 0.0) {
        return Err(Error::InvalidInput(format!(
            "need snr > 1 and tau0 > 0, got snr = {snr}, tau0 = {tau0}"
        )));
    }
    let budget = (tau0 * snr).ln();
    let mut k = 0usize;
    while k < MAX_ORDER as usize {
        let next = (k + 1) as f64;
        if (next + 0.5) * next.ln() > budget {
            break;
        }
        k += 1;
    }
    Ok(k)
}

/// `Σ_{m=k+1}^{k+terms} (c/m)^m`.
pub fn tail_sum(c: f64, k: usize, terms: usize) -> f64 {
    (k + 1..=k + terms)
        .map(|m| (m as f64) * (c / m as f64).ln())
        .map(f64::exp)
        .sum()
}

/// `(c/k)^k / (1 + ln(k/c))`, the bound on [`tail_sum`] for `k > c/e`.
pub fn tail_bound(c: f64, k: usize) -> f64 {
    let kf = k as f64;
    (c / kf).powf(kf) / (1.0 + (kf / c).ln())
}

/// One point of an order sweep.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OrderError {
    pub order: usize,
    pub relative_error: f64,
}

/// Largest swept order whose calibration error stays below `target`.
pub fn select_order(sweep: &[OrderError], target: f64) -> Option<usize> {
    sweep
        .iter()
        .filter(|e| e.relative_error <= target)
        .map(|e| e.order)
        .max()
}

/// `‖West − W‖_F / ‖W‖_F` over the common orders.
pub fn relative_error(estimate: &ScatteringCoeffMatrix, truth: &ScatteringCoeffMatrix) -> f64 {
    let order = estimate.order.min(truth.order);
    matrix::relative_frobenius_error(&estimate.truncate(order).values, &truth.truncate(order).values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    fn full(ns: usize, order: usize) -> AcquisitionOperator {
        build_operator(
            &AcquisitionConfig::full_view(3.0, ns, ns),
            &Medium::default(),
            TAU,
            order,
        )
        .unwrap()
    }

    #[test]
    fn centered_sources_have_unit_modulus() {
        let op = full(11, 4);
        for s in 0..11 {
            for m in 0..9 {
                assert!((op.a[(s, m)].norm() - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn orthogonality_with_enough_sources() {
        assert!(full(41, 20).orthogonality_deviation() < 1e-10);
        assert!(full(91, 20).orthogonality_deviation() < 1e-10);
    }

    #[test]
    fn zero_in_zero_out() {
        let op = full(9, 3);
        let v = apply_l(&op, &matrix::zeros(7, 7)).unwrap();
        assert_eq!(matrix::frobenius(&v), 0.0);
        assert!(apply_l(&op, &matrix::zeros(5, 7)).is_err());
    }

    #[test]
    fn basis_images_have_the_singular_norm() {
        let op = full(17, 4);
        for (mi, ni) in [(0, 0), (2, 7), (8, 3)] {
            let mut x = matrix::zeros(9, 9);
            x[(mi, ni)] = Complex64::new(1.0, 0.0);
            let v = apply_l(&op, &x).unwrap();
            let expected = 17.0 * op.d_diag[ni].sqrt();
            assert!((matrix::frobenius(&v) / expected - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn order_zero_spectrum() {
        let op = full(5, 0);
        let s = singular_values(&op).unwrap();
        assert_eq!(s.len(), 1);
        assert!((s[0] - 5.0 * op.d_diag[0].sqrt()).abs() < 1e-14);
    }

    #[test]
    fn resolving_order_examples() {
        assert_eq!(max_resolving_order(100.0, 1.0).unwrap(), 3);
        assert!(max_resolving_order(1.0, 1.0).is_err());
        let mut last = 0;
        for snr in [2.0, 10.0, 1e2, 1e4, 1e8, 1e16, 1e64, f64::INFINITY] {
            let k = max_resolving_order(snr, 1.0).unwrap();
            assert!(k >= last);
            last = k;
        }
        assert_eq!(last, MAX_ORDER as usize);
    }

    #[test]
    fn bound_preconditions() {
        assert!(truncation_error_bound(1.0, 0.5, 0).is_err());
        assert!(truncation_error_bound(2.0, 0.5, 10).is_err());
        let b = truncation_error_bound(1.0, 0.1, 10).unwrap();
        assert!((b - 0.1f64.powi(10)).abs() < 1e-20);
    }

    #[test]
    fn order_selection() {
        let sweep = [
            OrderError {
                order: 10,
                relative_error: 0.01,
            },
            OrderError {
                order: 20,
                relative_error: 0.05,
            },
            OrderError {
                order: 30,
                relative_error: 0.2,
            },
        ];
        assert_eq!(select_order(&sweep, 0.1), Some(20));
        assert_eq!(select_order(&sweep, 0.001), None);
    }

    #[test]
    fn c_r_formula() {
        assert!((c_r(TAU, 3.0) - 2.0 / (E * TAU * 3.0)).abs() < 1e-15);
        let _ = PI;
    }
}
