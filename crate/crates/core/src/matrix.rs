//! Small helpers around dense complex matrices.

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = Mat<Complex64>;

pub fn zeros(rows: usize, cols: usize) -> CMatrix {
    Mat::zeros(rows, cols)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    let mut sum = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            sum += m[(i, j)].norm_sqr();
        }
    }
    sum.sqrt()
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut worst: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            worst = worst.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    worst
}

pub fn relative_frobenius_error(estimate: &CMatrix, truth: &CMatrix) -> f64 {
    let mut num = 0.0;
    for j in 0..truth.ncols() {
        for i in 0..truth.nrows() {
            num += (estimate[(i, j)] - truth[(i, j)]).norm_sqr();
        }
    }
    num.sqrt() / frobenius(truth)
}

pub fn to_row_major(m: &CMatrix) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

pub fn from_row_major(rows: usize, cols: usize, data: &[Complex64]) -> Result<CMatrix> {
    if data.len() != rows * cols {
        return Err(Error::DimensionMismatch(format!(
            "{} values for a {rows}x{cols} matrix",
            data.len()
        )));
    }
    Ok(Mat::from_fn(rows, cols, |i, j| data[i * cols + j]))
}

/// Row-major `[re, im]` pairs, the on-disk layout for complex matrices.
pub fn to_pairs(m: &CMatrix) -> Vec<[f64; 2]> {
    to_row_major(m).into_iter().map(|z| [z.re, z.im]).collect()
}

pub fn from_pairs(rows: usize, cols: usize, pairs: &[[f64; 2]]) -> Result<CMatrix> {
    let data: Vec<Complex64> = pairs.iter().map(|p| Complex64::new(p[0], p[1])).collect();
    from_row_major(rows, cols, &data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_round_trip() {
        let m = Mat::from_fn(3, 4, |i, j| Complex64::new(i as f64, j as f64));
        let back = from_row_major(3, 4, &to_row_major(&m)).unwrap();
        assert_eq!(max_abs_diff(&m, &back), 0.0);
        assert!(from_row_major(2, 2, &to_row_major(&m)).is_err());
    }

    #[test]
    fn frobenius_of_ones() {
        let m = Mat::from_fn(4, 9, |_, _| Complex64::new(0.0, 1.0));
        assert!((frobenius(&m) - 6.0).abs() < 1e-14);
    }
}
