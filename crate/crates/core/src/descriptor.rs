//! Far-field patterns and the translation/rotation invariant shape descriptor
//! `S(v; ω) = ∫∫ |A(ξ; ω)| |A(ξ − v; ω)| dξ`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fs;
use std::path::{Path, PathBuf};

use faer::Mat;
use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{wrapped_distance, MsrMatrix};
use crate::matrix::CMatrix;
use crate::sct::ScatteringCoeffMatrix;

/// Default far-field and lag grid size.
pub const DEFAULT_GRID: usize = 512;

/// Below this measurement radius the far-field approximation of the MSR data
/// is flagged as inaccurate.
pub const FAR_FIELD_RADIUS: f64 = 10.0;

/// Far-field pattern on the uniform grid `ξ1_i = 2πi/n1`, `ξ2_j = 2πj/n2`.
/// Rows follow the incident direction, columns the observation direction.
#[derive(Debug, Clone)]
pub struct FarFieldPattern {
    pub values: CMatrix,
    pub omega: f64,
    /// Row-major validity grid, `None` when every node is valid.
    pub mask: Option<Vec<bool>>,
    /// Only `|values|` carries information.
    pub magnitude_only: bool,
}

impl FarFieldPattern {
    pub fn shape(&self) -> (usize, usize) {
        (self.values.nrows(), self.values.ncols())
    }

    pub fn is_valid(&self, i: usize, j: usize) -> bool {
        self.mask.as_ref().is_none_or(|m| m[i * self.values.ncols() + j])
    }

    pub fn valid_fraction(&self) -> f64 {
        match &self.mask {
            None => 1.0,
            Some(m) => m.iter().filter(|&&v| v).count() as f64 / m.len() as f64,
        }
    }

    /// Row-major magnitudes with invalid nodes set to zero.
    pub fn magnitudes(&self) -> Vec<f64> {
        let (n1, n2) = self.shape();
        let mut out = Vec::with_capacity(n1 * n2);
        for i in 0..n1 {
            for j in 0..n2 {
                out.push(if self.is_valid(i, j) {
                    self.values[(i, j)].norm()
                } else {
                    0.0
                });
            }
        }
        out
    }
}

pub fn grid_angle(i: usize, n: usize) -> f64 {
    TAU * i as f64 / n as f64
}

/// `A(ξ) = Σ_{m,n} W_mn e^{im(π/2−ξ1)} e^{−in(π/2−ξ2)}` on an `nv × nv` grid.
pub fn farfield_from_w(w: &ScatteringCoeffMatrix, nv: usize) -> FarFieldPattern {
    let k = w.order as f64;
    let size = 2 * w.order + 1;
    let e1 = Mat::from_fn(nv, size, |i, c| {
        Complex64::from_polar(1.0, (c as f64 - k) * (FRAC_PI_2 - grid_angle(i, nv)))
    });
    let e2t = Mat::from_fn(size, nv, |c, j| {
        Complex64::from_polar(1.0, -(c as f64 - k) * (FRAC_PI_2 - grid_angle(j, nv)))
    });
    FarFieldPattern {
        values: e1 * &w.values * e2t,
        omega: w.omega,
        mask: None,
        magnitude_only: false,
    }
}

/// `|A(θ_s, θ_r)| ≈ sqrt(8π k0 R) |V_sr|`, valid for large `k0 R`.
pub fn farfield_from_msr(v: &MsrMatrix, k0: f64) -> FarFieldPattern {
    let radius = v.acquisition.radius;
    if radius < FAR_FIELD_RADIUS {
        log::warn!("far field from measurements at R = {radius} < {FAR_FIELD_RADIUS} is inaccurate");
    }
    let scale = (8.0 * PI * k0 * radius).sqrt();
    let values = Mat::from_fn(v.n_sources(), v.n_receivers(), |s, r| {
        Complex64::new(scale * v.values[(s, r)].norm(), 0.0)
    });
    FarFieldPattern {
        values,
        omega: v.omega,
        mask: v.mask.clone(),
        magnitude_only: true,
    }
}

/// Restricts a pattern to the band `|ξ1 − ξ2| ≤ α` (wrapped). Idempotent.
pub fn apply_band(a: &FarFieldPattern, alpha: f64) -> Result<FarFieldPattern> {
    if !(alpha > 0.0 && alpha <= TAU + 1e-12) {
        return Err(Error::InvalidInput(format!(
            "band aperture must lie in (0, 2π], got {alpha}"
        )));
    }
    if alpha >= PI {
        return Ok(a.clone());
    }
    let (n1, n2) = a.shape();
    let mut mask = a.mask.clone().unwrap_or_else(|| vec![true; n1 * n2]);
    for i in 0..n1 {
        for j in 0..n2 {
            if wrapped_distance(grid_angle(i, n1), grid_angle(j, n2)) > alpha + 1e-12 {
                mask[i * n2 + j] = false;
            }
        }
    }
    Ok(FarFieldPattern {
        mask: Some(mask),
        ..a.clone()
    })
}

/// Relative difference `‖|a| − |b|‖ / ‖|b|‖` over nodes valid in both.
pub fn magnitude_difference(a: &FarFieldPattern, b: &FarFieldPattern) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!(
            "patterns of shape {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let (n1, n2) = a.shape();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n1 {
        for j in 0..n2 {
            if a.is_valid(i, j) && b.is_valid(i, j) {
                let (x, y) = (a.values[(i, j)].norm(), b.values[(i, j)].norm());
                num += (x - y) * (x - y);
                den += y * y;
            }
        }
    }
    Ok((num / den).sqrt())
}

/// Descriptor at one frequency on the lag grid `v_ij = (2πi/n1, 2πj/n2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorSlice {
    pub omega: f64,
    pub n1: usize,
    pub n2: usize,
    /// Row-major; invalid lags hold zero.
    pub values: Vec<f64>,
    /// Row-major lag validity, `None` when every lag is valid.
    pub valid: Option<Vec<bool>>,
}

impl DescriptorSlice {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n2 + j]
    }

    pub fn is_valid(&self, idx: usize) -> bool {
        self.valid.as_ref().is_none_or(|v| v[idx])
    }

    /// `Σ_ij (self − other)` over lags valid in both, with the number of lags
    /// compared.
    pub fn lag_sum_difference(&self, other: &DescriptorSlice) -> (f64, usize) {
        let mut sum = 0.0;
        let mut count = 0;
        for idx in 0..self.values.len() {
            if self.is_valid(idx) && other.is_valid(idx) {
                sum += self.values[idx] - other.values[idx];
                count += 1;
            }
        }
        (sum, count)
    }
}

fn fft2(data: &mut [Complex64], n1: usize, n2: usize, direction: FftDirection, planner: &mut FftPlanner<f64>) {
    planner.plan_fft(n2, direction).process(data);
    let mut t = vec![Complex64::new(0.0, 0.0); n1 * n2];
    for i in 0..n1 {
        for j in 0..n2 {
            t[j * n1 + i] = data[i * n2 + j];
        }
    }
    planner.plan_fft(n1, direction).process(&mut t);
    for i in 0..n1 {
        for j in 0..n2 {
            data[i * n2 + j] = t[j * n1 + i];
        }
    }
}

/// `r(v) = Σ_ξ f(ξ) f(ξ − v)` on the periodic grid.
fn autocorrelation(f: &[f64], n1: usize, n2: usize, planner: &mut FftPlanner<f64>) -> Vec<f64> {
    let mut data: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft2(&mut data, n1, n2, FftDirection::Forward, planner);
    for z in data.iter_mut() {
        *z = Complex64::new(z.norm_sqr(), 0.0);
    }
    fft2(&mut data, n1, n2, FftDirection::Inverse, planner);
    let norm = (n1 * n2) as f64;
    data.iter().map(|z| z.re / norm).collect()
}

/// Trapezoid-rule descriptor. For masked patterns both factors must be valid
/// and the sum is normalized by the overlap measure, so that a constant
/// pattern gives `(2π)²` at every lag with non-empty overlap.
pub fn shape_descriptor(a: &FarFieldPattern) -> DescriptorSlice {
    let (n1, n2) = a.shape();
    let mut planner = FftPlanner::new();
    let mags = a.magnitudes();
    let num = autocorrelation(&mags, n1, n2, &mut planner);
    let area = TAU * TAU;
    match &a.mask {
        None => {
            let h = area / (n1 * n2) as f64;
            DescriptorSlice {
                omega: a.omega,
                n1,
                n2,
                values: num.iter().map(|x| (x * h).max(0.0)).collect(),
                valid: None,
            }
        }
        Some(mask) => {
            let indicator: Vec<f64> = mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
            let counts = autocorrelation(&indicator, n1, n2, &mut planner);
            let mut values = vec![0.0; n1 * n2];
            let mut valid = vec![false; n1 * n2];
            for idx in 0..n1 * n2 {
                let c = counts[idx].round();
                if c >= 1.0 {
                    values[idx] = (area * num[idx] / c).max(0.0);
                    valid[idx] = true;
                }
            }
            DescriptorSlice {
                omega: a.omega,
                n1,
                n2,
                values,
                valid: Some(valid),
            }
        }
    }
}

/// Descriptor of the (band-restricted) far field synthesized from `w`.
pub fn descriptor_from_coefficients(w: &ScatteringCoeffMatrix, nv: usize, band_alpha: f64) -> Result<DescriptorSlice> {
    Ok(shape_descriptor(&apply_band(&farfield_from_w(w, nv), band_alpha)?))
}

/// Descriptor of the magnitude-only far field read off the measurements.
pub fn descriptor_from_measurements(v: &MsrMatrix, k0: f64, band_alpha: f64) -> Result<DescriptorSlice> {
    Ok(shape_descriptor(&apply_band(&farfield_from_msr(v, k0), band_alpha)?))
}

/// Where the far field behind a descriptor came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DescriptorSource {
    /// Fourier synthesis of (computed or reconstructed) coefficients.
    Coefficients,
    /// Magnitudes of the measurements themselves.
    Measurements,
}

/// Descriptor slices over a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorTensor {
    pub shape: Option<String>,
    pub n1: usize,
    pub n2: usize,
    /// Band aperture; `2π` for the full pattern.
    pub band_alpha: f64,
    pub source: DescriptorSource,
    pub slices: Vec<DescriptorSlice>,
}

#[derive(Serialize, Deserialize)]
struct TensorHeader {
    shape: Option<String>,
    n1: usize,
    n2: usize,
    band_alpha: f64,
    source: DescriptorSource,
    omegas: Vec<f64>,
    masked: bool,
    /// Little-endian `f64` values, slice after slice, row-major; followed by
    /// one byte per lag and slice when `masked`.
    data_file: String,
}

impl DescriptorTensor {
    pub fn new(
        shape: Option<String>,
        band_alpha: f64,
        source: DescriptorSource,
        slices: Vec<DescriptorSlice>,
    ) -> Result<Self> {
        let (n1, n2) = slices
            .first()
            .map(|s| (s.n1, s.n2))
            .ok_or_else(|| Error::InvalidInput("descriptor tensor needs at least one slice".into()))?;
        if slices.iter().any(|s| (s.n1, s.n2) != (n1, n2)) {
            return Err(Error::DimensionMismatch(
                "descriptor slices on different lag grids".into(),
            ));
        }
        Ok(DescriptorTensor {
            shape,
            n1,
            n2,
            band_alpha,
            source,
            slices,
        })
    }

    pub fn omegas(&self) -> Vec<f64> {
        self.slices.iter().map(|s| s.omega).collect()
    }

    pub fn is_full(&self) -> bool {
        self.band_alpha >= PI
    }

    /// Writes `<stem>.json` and `<stem>.bin`.
    pub fn save(&self, stem: &Path) -> Result<()> {
        let json_path = stem.with_extension("json");
        let bin_path = stem.with_extension("bin");
        let masked = self.slices.iter().any(|s| s.valid.is_some());
        let header = TensorHeader {
            shape: self.shape.clone(),
            n1: self.n1,
            n2: self.n2,
            band_alpha: self.band_alpha,
            source: self.source,
            omegas: self.omegas(),
            masked,
            data_file: bin_path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
        };
        let lags = self.n1 * self.n2;
        let mut bytes = Vec::with_capacity(self.slices.len() * lags * 9);
        for s in &self.slices {
            for v in &s.values {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        if masked {
            for s in &self.slices {
                bytes.extend((0..lags).map(|idx| s.is_valid(idx) as u8));
            }
        }
        fs::write(&bin_path, bytes)?;
        fs::write(&json_path, serde_json::to_string_pretty(&header)?)?;
        Ok(())
    }

    pub fn load(stem: &Path) -> Result<Self> {
        let json_path = stem.with_extension("json");
        let header: TensorHeader = serde_json::from_str(&fs::read_to_string(&json_path)?)?;
        let bin_path = json_path
            .parent()
            .map(|p| p.join(&header.data_file))
            .unwrap_or_else(|| PathBuf::from(&header.data_file));
        let bytes = fs::read(bin_path)?;
        let lags = header.n1 * header.n2;
        let count = header.omegas.len();
        let expected = count * lags * 8 + if header.masked { count * lags } else { 0 };
        if bytes.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "descriptor data holds {} bytes, header implies {expected}",
                bytes.len()
            )));
        }
        let mask_start = count * lags * 8;
        let slices = header
            .omegas
            .iter()
            .enumerate()
            .map(|(k, &omega)| {
                let values = bytes[k * lags * 8..(k + 1) * lags * 8]
                    .chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                    .collect();
                let valid = header.masked.then(|| {
                    bytes[mask_start + k * lags..mask_start + (k + 1) * lags]
                        .iter()
                        .map(|&b| b != 0)
                        .collect()
                });
                DescriptorSlice {
                    omega,
                    n1: header.n1,
                    n2: header.n2,
                    values,
                    valid,
                }
            })
            .collect();
        DescriptorTensor::new(header.shape, header.band_alpha, header.source, slices)
    }
}
