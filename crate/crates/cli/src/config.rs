//! JSON experiment configuration.

use std::f64::consts::{PI, TAU};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use echoid::dictionary::{DictionaryConfig, FrequencyGrid, ScaleRange};
use echoid::forward::{AcquisitionConfig, Medium};
use echoid::geometry::{make_shape, transform, Boundary, RigidTransform, ShapeName};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Placement of the target relative to its reference shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransformSpec {
    pub z: [f64; 2],
    pub scale: f64,
    pub theta: f64,
}

impl Default for TransformSpec {
    fn default() -> Self {
        TransformSpec {
            z: [0.0, 0.0],
            scale: 1.0,
            theta: 0.0,
        }
    }
}

impl TransformSpec {
    pub fn rigid(&self) -> Result<RigidTransform> {
        Ok(RigidTransform::new(self.z, self.scale, self.theta)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "view", rename_all = "lowercase", deny_unknown_fields)]
pub enum AcquisitionSpec {
    Full {
        radius: f64,
        n_sources: usize,
        n_receivers: usize,
    },
    Limited {
        radius: f64,
        n_sources: usize,
        n_receivers: usize,
        aperture: f64,
        n_groups: usize,
    },
}

impl AcquisitionSpec {
    pub fn config(&self) -> AcquisitionConfig {
        match *self {
            AcquisitionSpec::Full {
                radius,
                n_sources,
                n_receivers,
            } => AcquisitionConfig::full_view(radius, n_sources, n_receivers),
            AcquisitionSpec::Limited {
                radius,
                n_sources,
                n_receivers,
                aperture,
                n_groups,
            } => AcquisitionConfig::limited_view(radius, n_sources, n_receivers, aperture, n_groups),
        }
    }

    pub fn is_full(&self) -> bool {
        matches!(self, AcquisitionSpec::Full { .. })
    }

    /// Band aperture of the descriptors that match this acquisition.
    pub fn band(&self) -> f64 {
        match *self {
            AcquisitionSpec::Full { .. } => TAU,
            AcquisitionSpec::Limited { aperture, .. } => aperture,
        }
    }
}

/// Noise and order sweep behind the reconstruction error table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    pub omega: f64,
    pub noise_levels: Vec<f64>,
    pub orders: Vec<usize>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            omega: TAU,
            noise_levels: vec![0.2, 0.4, 0.6, 0.8, 1.0],
            orders: (0..=40).step_by(5).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DictionarySpec {
    /// Directory holding a built dictionary; `<output>/dictionary` if unset.
    pub path: Option<PathBuf>,
    pub shapes: Vec<String>,
    /// Far-field and lag grid size `Nv`.
    pub grid: usize,
    /// Number of dictionary frequency intervals.
    pub intervals: usize,
    pub scale_min: f64,
    pub scale_max: f64,
    pub scale_steps: usize,
    pub order: usize,
}

impl Default for DictionarySpec {
    fn default() -> Self {
        DictionarySpec {
            path: None,
            shapes: ShapeName::ALL.iter().map(|s| s.as_str().to_string()).collect(),
            grid: 128,
            intervals: 55,
            scale_min: 0.5,
            scale_max: 2.0,
            scale_steps: 188,
            order: 30,
        }
    }
}

/// Orders and acquisitions of the singular value spectra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSpec {
    pub omega: f64,
    pub full: AcquisitionSpec,
    pub full_orders: Vec<usize>,
    pub limited: AcquisitionSpec,
    pub limited_orders: Vec<usize>,
}

impl Default for SpectrumSpec {
    fn default() -> Self {
        SpectrumSpec {
            omega: TAU,
            full: AcquisitionSpec::Full {
                radius: 3.0,
                n_sources: 91,
                n_receivers: 91,
            },
            full_orders: vec![40, 30, 20],
            limited: AcquisitionSpec::Limited {
                radius: 10.0,
                n_sources: 128,
                n_receivers: 128,
                aperture: PI / 3.0,
                n_groups: 128,
            },
            limited_orders: vec![15, 10, 5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Target shape for `simulate` and `reconstruct`.
    pub shape: String,
    /// Targets for `identify`; `[shape]` when empty.
    pub targets: Vec<String>,
    pub boundary_points: usize,
    pub transform: TransformSpec,
    pub medium: Medium,
    pub acquisition: AcquisitionSpec,
    /// Data frequencies `ω_k`.
    pub frequencies: FrequencyGrid,
    /// Relative noise level `σ0`.
    pub noise: f64,
    pub seed: u64,
    /// Reconstruction order `K`.
    pub order: usize,
    pub sweep: SweepSpec,
    pub dictionary: DictionarySpec,
    pub spectrum: SpectrumSpec,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            shape: "flower".into(),
            targets: Vec::new(),
            boundary_points: 256,
            transform: TransformSpec::default(),
            medium: Medium::default(),
            acquisition: AcquisitionSpec::Full {
                radius: 3.0,
                n_sources: 91,
                n_receivers: 91,
            },
            frequencies: FrequencyGrid {
                min: PI,
                max: TAU,
                intervals: 27,
            },
            noise: 0.2,
            seed: 0,
            order: 30,
            sweep: SweepSpec::default(),
            dictionary: DictionarySpec::default(),
            spectrum: SpectrumSpec::default(),
            output: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let config: ExperimentConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.medium.validate()?;
        self.acquisition.config().validate()?;
        FrequencyGrid::new(self.frequencies.min, self.frequencies.max, self.frequencies.intervals)?;
        self.transform.rigid()?;
        for name in self.target_names().iter().chain(&self.dictionary.shapes) {
            name.parse::<ShapeName>()?;
        }
        if !(self.noise >= 0.0) || self.sweep.noise_levels.iter().any(|s| !(*s >= 0.0)) {
            bail!("noise levels must be nonnegative");
        }
        self.dictionary_config()?.validate()?;
        if let AcquisitionSpec::Limited {
            n_sources, n_receivers, ..
        } = self.acquisition
        {
            if n_sources != self.dictionary.grid || n_receivers != self.dictionary.grid {
                bail!(
                    "limited-view descriptors are sampled on the array, so Ns = Nr = {} must equal the dictionary grid {}",
                    n_sources.max(n_receivers),
                    self.dictionary.grid
                );
            }
        }
        Ok(())
    }

    pub fn target_names(&self) -> Vec<String> {
        if self.targets.is_empty() {
            vec![self.shape.clone()]
        } else {
            self.targets.clone()
        }
    }

    /// Reference shape before placement.
    pub fn reference_shape(&self, name: &str) -> Result<Boundary> {
        Ok(make_shape(name.parse()?, self.boundary_points)?)
    }

    /// Shape after placement.
    pub fn target_shape(&self, name: &str) -> Result<Boundary> {
        Ok(transform(&self.reference_shape(name)?, &self.transform.rigid()?))
    }

    pub fn dictionary_config(&self) -> Result<DictionaryConfig> {
        let d = &self.dictionary;
        let data = self.frequencies;
        Ok(DictionaryConfig {
            medium: self.medium,
            frequencies: FrequencyGrid::new(data.min * d.scale_min, data.max * d.scale_max, d.intervals)?,
            data_frequencies: data,
            scales: ScaleRange::new(d.scale_min, d.scale_max, d.scale_steps)?,
            grid: d.grid,
            order: d.order,
            band_alpha: self.acquisition.band(),
        })
    }

    pub fn dictionary_dir(&self) -> PathBuf {
        self.dictionary
            .path
            .clone()
            .unwrap_or_else(|| self.output.join("dictionary"))
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        format!("{:x}", Sha256::digest(canonical.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn partial_documents_fill_in_defaults() {
        let c: ExperimentConfig = serde_json::from_str(r#"{"shape": "square", "noise": 0.4}"#).unwrap();
        assert_eq!(c.shape, "square");
        assert_eq!(c.order, 30);
        assert_eq!(c.target_names(), vec!["square".to_string()]);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"shapes": "square"}"#).is_err());
    }

    #[test]
    fn limited_view_must_sample_the_grid() {
        let mut c = ExperimentConfig::default();
        c.acquisition = AcquisitionSpec::Limited {
            radius: 10.0,
            n_sources: 64,
            n_receivers: 64,
            aperture: PI / 3.0,
            n_groups: 64,
        };
        assert!(c.validate().is_err());
        c.dictionary.grid = 64;
        c.validate().unwrap();
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }
}
