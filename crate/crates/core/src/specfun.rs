//! Integer-order Bessel and Hankel functions of real argument and the
//! cylindrical waves built from them.
//!
//! `J_n` comes from Miller's downward recurrence normalized with
//! `J_0 + 2 Σ J_{2k} = 1`. The same pass accumulates the Neumann sums that
//! give `Y_0` and `Y_1`; above [`ASYMPTOTIC_SWITCH`] the orders 0 and 1 use
//! the Hankel asymptotic expansion instead. Higher `Y_n` follow by upward
//! recurrence, which is stable in that direction.

use std::f64::consts::{FRAC_2_PI, FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest |order| accepted by the scalar entry points.
pub const MAX_ORDER: i32 = 200;

/// Argument above which `J_0, J_1, Y_0, Y_1` use the Hankel asymptotic series.
pub const ASYMPTOTIC_SWITCH: f64 = 25.0;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const RESCALE_ABOVE: f64 = 1e250;
const RESCALE_BY: f64 = 1e-250;

/// Index of a cylindrical wave `u_m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CylindricalWaveIndex(pub i32);

impl CylindricalWaveIndex {
    pub fn order(self) -> i32 {
        self.0
    }
}

#[inline]
pub(crate) fn parity(n: i64) -> f64 {
    if n.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

fn check_order(n: i32) -> Result<()> {
    if n.abs() > MAX_ORDER {
        return Err(Error::OrderOutOfRange {
            order: n as i64,
            max: MAX_ORDER as i64,
        });
    }
    Ok(())
}

struct Miller {
    j: Vec<f64>,
    /// Σ_{k≥1} (-1)^k J_{2k} / k
    even_sum: f64,
    /// Σ_{k≥1} (-1)^k (2k+1) / (k(k+1)) J_{2k+1}
    odd_sum: f64,
}

fn miller_start(nmax: usize, x: f64) -> usize {
    let top = (nmax as f64).max(x.ceil());
    let m = (top + (60.0 * top).sqrt() + 12.0) as usize;
    m + (m & 1)
}

/// Downward recurrence for `J_0..=J_nmax` at `x > 0`.
fn miller(nmax: usize, x: f64) -> Miller {
    let start = miller_start(nmax, x);
    let mut j = vec![0.0; nmax + 1];
    let mut f_next = 0.0;
    let mut f = 1.0;
    let mut norm = 0.0;
    let mut even_sum = 0.0;
    let mut odd_sum = 0.0;
    for k in (1..=start).rev() {
        if k <= nmax {
            j[k] = f;
        }
        let half = (k / 2) as f64;
        if k % 2 == 0 {
            norm += 2.0 * f;
            even_sum += parity((k / 2) as i64) * f / half;
        } else if k > 1 {
            odd_sum += parity((k / 2) as i64) * k as f64 / (half * (half + 1.0)) * f;
        }
        let f_prev = (2.0 * k as f64 / x) * f - f_next;
        f_next = f;
        f = f_prev;
        if f.abs() > RESCALE_ABOVE {
            f *= RESCALE_BY;
            f_next *= RESCALE_BY;
            norm *= RESCALE_BY;
            even_sum *= RESCALE_BY;
            odd_sum *= RESCALE_BY;
            for v in j.iter_mut() {
                *v *= RESCALE_BY;
            }
        }
    }
    j[0] = f;
    norm += f;
    for v in j.iter_mut() {
        *v /= norm;
    }
    Miller {
        j,
        even_sum: even_sum / norm,
        odd_sum: odd_sum / norm,
    }
}

/// Hankel's asymptotic expansion of `H^{(1)}_nu(x)` for large `x`.
fn hankel_asymptotic(nu: f64, x: f64) -> Complex64 {
    let mu = 4.0 * nu * nu;
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    for k in 1..80 {
        let odd = (2 * k - 1) as f64;
        let next = term * Complex64::i() * ((mu - odd * odd) / (k as f64 * 8.0 * x));
        if next.norm() >= term.norm() {
            break;
        }
        sum += next;
        term = next;
        if term.norm() < 1e-17 * sum.norm() {
            break;
        }
    }
    let phase = x - nu * FRAC_PI_2 - FRAC_PI_4;
    (2.0 / (PI * x)).sqrt() * Complex64::from_polar(1.0, phase) * sum
}

/// `J_0, J_1, Y_0, Y_1` at one positive argument.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Bessel01 {
    pub j0: f64,
    pub j1: f64,
    pub y0: f64,
    pub y1: f64,
}

pub(crate) fn bessel01(x: f64) -> Bessel01 {
    debug_assert!(x > 0.0);
    if x >= ASYMPTOTIC_SWITCH {
        let h0 = hankel_asymptotic(0.0, x);
        let h1 = hankel_asymptotic(1.0, x);
        return Bessel01 {
            j0: h0.re,
            j1: h1.re,
            y0: h0.im,
            y1: h1.im,
        };
    }
    let m = miller(1, x);
    let (j0, j1) = (m.j[0], m.j[1]);
    let log_term = (0.5 * x).ln() + EULER_GAMMA;
    Bessel01 {
        j0,
        j1,
        y0: FRAC_2_PI * (log_term * j0 - 2.0 * m.even_sum),
        y1: FRAC_2_PI * ((log_term - 1.0) * j1 - j0 / x - m.odd_sum),
    }
}

/// `J_0(x), ..., J_nmax(x)` for `x ≥ 0`. No order limit is enforced here.
pub fn bessel_j_sequence(nmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; nmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let mut j = miller(nmax.max(1), x).j;
    if x >= ASYMPTOTIC_SWITCH {
        // the asymptotic values are slightly sharper than the sum rule here
        let b = bessel01(x);
        j[0] = b.j0;
        j[1] = b.j1;
    }
    out.copy_from_slice(&j[..=nmax]);
    out
}

/// `Y_0(x), ..., Y_nmax(x)` for `x > 0`.
pub fn bessel_y_sequence(nmax: usize, x: f64) -> Result<Vec<f64>> {
    if !(x > 0.0) {
        return Err(Error::NonPositiveArgument(x));
    }
    let b = bessel01(x);
    let mut y = Vec::with_capacity(nmax + 1);
    y.push(b.y0);
    if nmax >= 1 {
        y.push(b.y1);
    }
    for n in 1..nmax {
        let next = if y[n].is_infinite() {
            y[n]
        } else {
            (2.0 * n as f64 / x) * y[n] - y[n - 1]
        };
        y.push(next);
    }
    Ok(y)
}

/// `H^{(1)}_0(x), ..., H^{(1)}_nmax(x)` for `x > 0`.
pub fn hankel1_sequence(nmax: usize, x: f64) -> Result<Vec<Complex64>> {
    let y = bessel_y_sequence(nmax, x)?;
    let j = bessel_j_sequence(nmax, x);
    Ok(j.into_iter().zip(y).map(|(re, im)| Complex64::new(re, im)).collect())
}

/// Bessel function of the first kind `J_n(x)`, `x ≥ 0`.
pub fn bessel_j(n: i32, x: f64) -> Result<f64> {
    check_order(n)?;
    if !(x >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "bessel_j needs a nonnegative argument, got {x}"
        )));
    }
    let order = n.unsigned_abs() as usize;
    let value = bessel_j_sequence(order, x)[order];
    Ok(if n < 0 { parity(n as i64) * value } else { value })
}

/// Bessel function of the second kind `Y_n(x)`, `x > 0`.
pub fn bessel_y(n: i32, x: f64) -> Result<f64> {
    check_order(n)?;
    let order = n.unsigned_abs() as usize;
    let value = bessel_y_sequence(order, x)?[order];
    Ok(if n < 0 { parity(n as i64) * value } else { value })
}

/// Hankel function of the first kind `H^{(1)}_n(x) = J_n(x) + i Y_n(x)`.
pub fn hankel1(n: i32, x: f64) -> Result<Complex64> {
    check_order(n)?;
    let order = n.unsigned_abs() as usize;
    let value = hankel1_sequence(order, x)?[order];
    Ok(if n < 0 { parity(n as i64) * value } else { value })
}

/// Polar angle of a point, with the origin mapped to 0.
#[inline]
pub fn polar_angle(x: [f64; 2]) -> f64 {
    if x[0] == 0.0 && x[1] == 0.0 {
        0.0
    } else {
        x[1].atan2(x[0])
    }
}

/// Cylindrical wave `u_m(x) = J_m(k0 |x|) e^{i m θ_x}`.
pub fn cylindrical_wave(m: i32, k0: f64, x: [f64; 2]) -> Complex64 {
    let r = x[0].hypot(x[1]);
    let order = m.unsigned_abs() as usize;
    let j = bessel_j_sequence(order, k0 * r)[order];
    let j = if m < 0 { parity(m as i64) * j } else { j };
    Complex64::from_polar(j, m as f64 * polar_angle(x))
}

/// All cylindrical waves `u_{-kmax}(x), ..., u_{kmax}(x)`, indexed by `m + kmax`.
pub fn cylindrical_waves(kmax: usize, k0: f64, x: [f64; 2]) -> Vec<Complex64> {
    let r = x[0].hypot(x[1]);
    let theta = polar_angle(x);
    let j = bessel_j_sequence(kmax, k0 * r);
    let mut out = vec![Complex64::new(0.0, 0.0); 2 * kmax + 1];
    for (n, &jn) in j.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, n as f64 * theta);
        out[kmax + n] = jn * phase;
        out[kmax - n] = parity(n as i64) * jn * phase.conj();
    }
    out
}
