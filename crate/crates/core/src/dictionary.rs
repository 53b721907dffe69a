//! Frequency-dependent dictionary of shape descriptors, scale estimation by
//! table lookup and identification of an unknown target.

use std::f64::consts::{PI, TAU};
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::descriptor::{descriptor_from_coefficients, DescriptorSlice, DescriptorSource, DescriptorTensor};
use crate::error::{Error, Result};
use crate::forward::Medium;
use crate::geometry::Boundary;
use crate::sct::compute_w;

/// `intervals + 1` uniform samples of `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub min: f64,
    pub max: f64,
    pub intervals: usize,
}

impl FrequencyGrid {
    pub fn new(min: f64, max: f64, intervals: usize) -> Result<Self> {
        if !(min > 0.0 && max > min) || intervals == 0 {
            return Err(Error::InvalidInput(format!(
                "frequency grid needs 0 < min < max and at least one interval, got [{min}, {max}] / {intervals}"
            )));
        }
        Ok(FrequencyGrid { min, max, intervals })
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / self.intervals as f64
    }

    pub fn sample(&self, l: usize) -> f64 {
        if l == self.intervals {
            self.max
        } else {
            self.min + l as f64 * self.step()
        }
    }

    pub fn samples(&self) -> Vec<f64> {
        (0..=self.intervals).map(|l| self.sample(l)).collect()
    }

    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The `l ≥ 1` with `ω_{l−1} < x ≤ ω_l`, or `l = 1` at `x = ω_0`. Values
    /// within rounding of a node are snapped onto it.
    pub fn bracket(&self, x: f64) -> Option<usize> {
        let p = (x - self.min) / self.step();
        let snap = 1e-9;
        if !(p >= -snap && p <= self.intervals as f64 + snap) {
            return None;
        }
        let nearest = p.round();
        let l = if (p - nearest).abs() <= snap {
            nearest as usize
        } else {
            p.ceil() as usize
        };
        Some(l.clamp(1, self.intervals))
    }
}

/// Scale samples `s_t = min + t (max − min)/steps`, `t = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleRange {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl ScaleRange {
    pub fn new(min: f64, max: f64, steps: usize) -> Result<Self> {
        if !(min > 0.0 && max > min) || steps == 0 {
            return Err(Error::InvalidInput(format!(
                "scale range needs 0 < min < max and at least one step, got [{min}, {max}] / {steps}"
            )));
        }
        Ok(ScaleRange { min, max, steps })
    }

    pub fn sample(&self, t: usize) -> f64 {
        self.min + t as f64 * (self.max - self.min) / self.steps as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DictionaryConfig {
    pub medium: Medium,
    /// Dictionary frequencies `ω̃`, `Nwdic` intervals.
    pub frequencies: FrequencyGrid,
    /// Target frequencies `ω`, `Nw` intervals.
    pub data_frequencies: FrequencyGrid,
    pub scales: ScaleRange,
    /// Far-field and lag grid size `Nv`.
    pub grid: usize,
    /// Truncation order of the coefficients behind each far field.
    pub order: usize,
    /// Band aperture of the descriptors; `2π` for full patterns.
    pub band_alpha: f64,
}

impl DictionaryConfig {
    /// `[π, 2π]` data, `[0.5, 2]` scales, `[0.5π, 4π]` dictionary, with the
    /// given numbers of intervals.
    pub fn standard(nv: usize, n_dictionary: usize, n_data: usize, n_scales: usize) -> Self {
        DictionaryConfig {
            medium: Medium::default(),
            frequencies: FrequencyGrid {
                min: 0.5 * PI,
                max: 4.0 * PI,
                intervals: n_dictionary,
            },
            data_frequencies: FrequencyGrid {
                min: PI,
                max: TAU,
                intervals: n_data,
            },
            scales: ScaleRange {
                min: 0.5,
                max: 2.0,
                steps: n_scales,
            },
            grid: nv,
            order: 30,
            band_alpha: TAU,
        }
    }

    /// `Nv = 512`, `Nwdic = 219`, `Nw = 109`, `Nδ = 751`.
    pub fn full_scale() -> Self {
        Self::standard(512, 219, 109, 751)
    }

    /// `Nv = 128`, `Nwdic = 55`, `Nw = 27`, `Nδ = 188`.
    pub fn desk_scale() -> Self {
        Self::standard(128, 55, 27, 188)
    }

    pub fn with_band(mut self, alpha: f64) -> Self {
        self.band_alpha = alpha;
        self
    }

    /// The dictionary range must cover every scaled data frequency:
    /// `ω̃min = ωmin·smin` and `ω̃max = ωmax·smax`.
    pub fn validate(&self) -> Result<()> {
        self.medium.validate()?;
        FrequencyGrid::new(self.frequencies.min, self.frequencies.max, self.frequencies.intervals)?;
        FrequencyGrid::new(
            self.data_frequencies.min,
            self.data_frequencies.max,
            self.data_frequencies.intervals,
        )?;
        ScaleRange::new(self.scales.min, self.scales.max, self.scales.steps)?;
        let lo = self.data_frequencies.min * self.scales.min;
        let hi = self.data_frequencies.max * self.scales.max;
        let tol = 1e-9 * hi;
        if (self.frequencies.min - lo).abs() > tol || (self.frequencies.max - hi).abs() > tol {
            return Err(Error::InvalidInput(format!(
                "dictionary range [{}, {}] must equal the scaled data range [{lo}, {hi}]",
                self.frequencies.min, self.frequencies.max
            )));
        }
        if self.grid == 0 {
            return Err(Error::InvalidInput("descriptor grid must be positive".into()));
        }
        if !(self.band_alpha > 0.0 && self.band_alpha <= TAU + 1e-12) {
            return Err(Error::InvalidInput(format!(
                "band aperture {} outside (0, 2π]",
                self.band_alpha
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DictionaryEntry {
    pub name: String,
    pub tensor: DescriptorTensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    pub config: DictionaryConfig,
    pub entries: Vec<DictionaryEntry>,
}

/// Descriptor tensors of every shape over the dictionary frequencies; each
/// `(shape, ω̃)` pair is independent and computed in parallel.
pub fn build_dictionary(shapes: &[Boundary], config: &DictionaryConfig) -> Result<Dictionary> {
    config.validate()?;
    let omegas = config.frequencies.samples();
    let jobs: Vec<(usize, f64)> = (0..shapes.len())
        .flat_map(|i| omegas.iter().map(move |&w| (i, w)))
        .collect();
    let slices: Vec<DescriptorSlice> = jobs
        .par_iter()
        .map(|&(i, omega)| {
            let w = compute_w(&shapes[i], &config.medium, omega, config.order)?;
            descriptor_from_coefficients(&w, config.grid, config.band_alpha)
        })
        .collect::<Result<_>>()?;
    let mut slices = slices.into_iter();
    let entries = shapes
        .iter()
        .map(|b| {
            let own: Vec<DescriptorSlice> = slices.by_ref().take(omegas.len()).collect();
            Ok(DictionaryEntry {
                name: b.name.clone(),
                tensor: DescriptorTensor::new(
                    Some(b.name.clone()),
                    config.band_alpha,
                    DescriptorSource::Coefficients,
                    own,
                )?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Dictionary {
        config: *config,
        entries,
    })
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    config: DictionaryConfig,
    entries: Vec<String>,
}

impl Dictionary {
    pub fn names(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.name.clone()).collect()
    }

    /// Writes `manifest.json` and one descriptor tensor per entry into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for e in &self.entries {
            e.tensor.save(&dir.join(&e.name))?;
        }
        let manifest = Manifest {
            config: self.config,
            entries: self.names(),
        };
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let manifest: Manifest = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
        let entries = manifest
            .entries
            .iter()
            .map(|name| {
                Ok(DictionaryEntry {
                    name: name.clone(),
                    tensor: DescriptorTensor::load(&dir.join(name))?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Dictionary {
            config: manifest.config,
            entries,
        })
    }
}

/// Lag sums `Σ_ij (S^D_ijk − S^B_ijl)`, computed once per `(k, l)` pair.
struct PairSums<'a> {
    target: &'a DescriptorTensor,
    entry: &'a DescriptorTensor,
    cache: Vec<Option<Option<f64>>>,
    /// With identical validity on both sides the lag sum splits into totals.
    totals: Option<(Vec<f64>, Vec<f64>)>,
}

impl<'a> PairSums<'a> {
    fn new(target: &'a DescriptorTensor, entry: &'a DescriptorTensor) -> Self {
        let reference = &target.slices[0].valid;
        let shared =
            target.slices.iter().all(|s| &s.valid == reference) && entry.slices.iter().all(|s| &s.valid == reference);
        let totals = shared.then(|| {
            let total = |s: &DescriptorSlice| {
                (0..s.values.len())
                    .filter(|&i| s.is_valid(i))
                    .map(|i| s.values[i])
                    .sum()
            };
            (
                target.slices.iter().map(total).collect(),
                entry.slices.iter().map(total).collect(),
            )
        });
        PairSums {
            target,
            entry,
            cache: vec![None; target.slices.len() * entry.slices.len()],
            totals,
        }
    }

    fn get(&mut self, k: usize, l: usize) -> Option<f64> {
        if let Some((td, tb)) = &self.totals {
            let any_valid = self.target.slices[k]
                .valid
                .as_ref()
                .is_none_or(|v| v.iter().any(|&x| x));
            return any_valid.then(|| td[k] - tb[l]);
        }
        let idx = k * self.entry.slices.len() + l;
        if let Some(v) = self.cache[idx] {
            return v;
        }
        let (sum, count) = self.target.slices[k].lag_sum_difference(&self.entry.slices[l]);
        let v = (count > 0).then_some(sum);
        self.cache[idx] = Some(v);
        v
    }
}

fn check_compatible(target: &DescriptorTensor, entry: &DescriptorTensor, config: &DictionaryConfig) -> Result<()> {
    if (target.band_alpha - entry.band_alpha).abs() > 1e-9 {
        return Err(Error::BandMismatch {
            target: target.band_alpha,
            dictionary: entry.band_alpha,
        });
    }
    if (target.n1, target.n2) != (entry.n1, entry.n2) {
        return Err(Error::DimensionMismatch(format!(
            "target lag grid {}x{}, dictionary {}x{}",
            target.n1, target.n2, entry.n1, entry.n2
        )));
    }
    if entry.slices.len() != config.frequencies.len() {
        return Err(Error::DimensionMismatch(format!(
            "dictionary entry has {} frequencies, configuration {}",
            entry.slices.len(),
            config.frequencies.len()
        )));
    }
    Ok(())
}

fn cost_with(pairs: &mut PairSums, s: f64, config: &DictionaryConfig) -> Option<f64> {
    let mut total = 0.0;
    let mut any = false;
    for k in 0..pairs.target.slices.len() {
        if let Some(l) = config.frequencies.bracket(s * pairs.target.slices[k].omega) {
            if let Some(d) = pairs.get(k, l) {
                total += d * d;
                any = true;
            }
        }
    }
    any.then_some(total)
}

/// `J(t) = Σ_k Σ_{l ∈ I_k(s_t)} (Σ_ij (S^D_ijk − S^B_ijl))²`; `None` when no
/// frequency of the target falls inside the dictionary range.
pub fn scale_cost(
    t: usize,
    target: &DescriptorTensor,
    entry: &DescriptorTensor,
    config: &DictionaryConfig,
) -> Result<Option<f64>> {
    check_compatible(target, entry, config)?;
    let mut pairs = PairSums::new(target, entry);
    Ok(cost_with(&mut pairs, config.scales.sample(t), config))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Match {
    /// `ε = min_t J(t)`.
    pub error: f64,
    pub scale: f64,
    pub scale_index: usize,
}

/// Minimizes the scale cost over all scale samples, ties to the smallest
/// index; `None` when the entry is not comparable at any scale.
pub fn match_error(
    target: &DescriptorTensor,
    entry: &DescriptorTensor,
    config: &DictionaryConfig,
) -> Result<Option<Match>> {
    check_compatible(target, entry, config)?;
    let mut pairs = PairSums::new(target, entry);
    let mut best: Option<Match> = None;
    for t in 0..=config.scales.steps {
        let s = config.scales.sample(t);
        if let Some(j) = cost_with(&mut pairs, s, config) {
            if best.is_none_or(|b| j < b.error) {
                best = Some(Match {
                    error: j,
                    scale: s,
                    scale_index: t,
                });
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IdentificationMetadata {
    pub noise_level: Option<f64>,
    pub band_alpha: f64,
    pub order: Option<usize>,
    pub source: Option<DescriptorSource>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentificationResult {
    pub names: Vec<String>,
    /// `ε` per entry, `None` for incomparable entries.
    pub errors: Vec<Option<f64>>,
    /// `ε` divided by the largest `ε` of this target.
    pub normalized_errors: Vec<Option<f64>>,
    pub scales: Vec<Option<f64>>,
    pub best_index: usize,
    pub best_name: String,
    pub metadata: IdentificationMetadata,
}

impl IdentificationResult {
    pub fn best_scale(&self) -> Option<f64> {
        self.scales[self.best_index]
    }
}

/// Scores every entry; entries are independent and matched in parallel.
pub fn identify(target: &DescriptorTensor, dict: &Dictionary) -> Result<IdentificationResult> {
    let matches: Vec<Option<Match>> = dict
        .entries
        .par_iter()
        .map(|e| match_error(target, &e.tensor, &dict.config))
        .collect::<Result<_>>()?;
    let mut best: Option<(usize, f64)> = None;
    for (i, m) in matches.iter().enumerate() {
        if let Some(m) = m {
            if best.is_none_or(|(_, e)| m.error < e) {
                best = Some((i, m.error));
            }
        }
    }
    let (best_index, _) = best.ok_or(Error::NoComparableEntry)?;
    let largest = matches.iter().flatten().map(|m| m.error).fold(0.0, f64::max);
    let errors: Vec<Option<f64>> = matches.iter().map(|m| m.map(|m| m.error)).collect();
    Ok(IdentificationResult {
        names: dict.names(),
        normalized_errors: errors
            .iter()
            .map(|e| e.map(|e| if largest > 0.0 { e / largest } else { 0.0 }))
            .collect(),
        errors,
        scales: matches.iter().map(|m| m.map(|m| m.scale)).collect(),
        best_index,
        best_name: dict.entries[best_index].name.clone(),
        metadata: IdentificationMetadata {
            band_alpha: target.band_alpha,
            source: Some(target.source),
            ..Default::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bracket_picks_the_enclosing_interval() {
        let g = FrequencyGrid::new(1.0, 2.0, 4).unwrap();
        assert_eq!(g.bracket(1.1), Some(1));
        assert_eq!(g.bracket(1.25), Some(1));
        assert_eq!(g.bracket(1.25 + 1e-14), Some(1));
        assert_eq!(g.bracket(1.26), Some(2));
        assert_eq!(g.bracket(1.0), Some(1));
        assert_eq!(g.bracket(2.0), Some(4));
        assert_eq!(g.bracket(0.99), None);
        assert_eq!(g.bracket(2.01), None);
    }

    #[test]
    fn scale_samples_cover_the_range() {
        let s = ScaleRange::new(0.5, 2.0, 750).unwrap();
        assert_eq!(s.sample(0), 0.5);
        assert!((s.sample(750) - 2.0).abs() < 1e-15);
        assert!((s.sample(500) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn standard_configurations_are_consistent() {
        DictionaryConfig::full_scale().validate().unwrap();
        DictionaryConfig::desk_scale().validate().unwrap();
        let mut bad = DictionaryConfig::desk_scale();
        bad.frequencies.max = 3.0 * PI;
        assert!(bad.validate().is_err());
    }
}
