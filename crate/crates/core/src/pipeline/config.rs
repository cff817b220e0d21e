use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::synthetic::SyntheticDatasetSpec;
use super::{PipelineError, Result};
use crate::models::{ModelFamily, ParamGrid};
use crate::signal::SyntheticPeakSpec;
use crate::tabular::FEATURES;

fn default_name() -> String {
    "dataset".into()
}

fn yes() -> bool {
    true
}

fn default_features() -> Vec<String> {
    FEATURES.iter().map(|s| s.to_string()).collect()
}

/// Full run configuration, read from TOML. Unknown keys are rejected at
/// every level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Master seed; every stochastic stage derives its own seed from it.
    pub seed: Option<u64>,
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub data: DataConfig,
    #[serde(default)]
    pub features: FeatureConfig,
    #[serde(default)]
    pub scaling: ScalingConfig,
    #[serde(default)]
    pub pca: PcaConfig,
    #[serde(default)]
    pub clustering: ClusteringConfig,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub synth: SynthConfig,
}

/// Exactly one of `path` or `synthetic`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub synthetic: Option<SyntheticDatasetSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureConfig {
    #[serde(default = "default_features")]
    pub clustering: Vec<String>,
    #[serde(default = "default_features")]
    pub regression: Vec<String>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            clustering: default_features(),
            regression: default_features(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    #[serde(default = "yes")]
    pub standardize: bool,
    #[serde(default = "yes")]
    pub normalize: bool,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            standardize: true,
            normalize: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Auto {
    Auto,
}

/// A fixed component count, or `"auto"` to keep the fewest components whose
/// cumulative explained variance exceeds `variance_threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Components {
    Fixed(usize),
    Auto(Auto),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PcaConfig {
    #[serde(default = "PcaConfig::default_components")]
    pub components: Components,
    #[serde(default = "PcaConfig::default_threshold")]
    pub variance_threshold: f64,
}

impl PcaConfig {
    fn default_components() -> Components {
        Components::Fixed(2)
    }

    fn default_threshold() -> f64 {
        0.8
    }
}

impl Default for PcaConfig {
    fn default() -> Self {
        Self {
            components: Self::default_components(),
            variance_threshold: Self::default_threshold(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusterSpace {
    /// PCA projection of the scaled features.
    Pca,
    /// Scaled features without projection.
    Scaled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusteringConfig {
    #[serde(default = "ClusteringConfig::default_space")]
    pub space: ClusterSpace,
    #[serde(default = "ClusteringConfig::default_k_min")]
    pub k_min: usize,
    #[serde(default = "ClusteringConfig::default_k_max")]
    pub k_max: usize,
    /// Skips automatic selection when set.
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default = "ClusteringConfig::default_n_init")]
    pub n_init: usize,
    #[serde(default = "ClusteringConfig::default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "ClusteringConfig::default_tol")]
    pub tol: f64,
}

impl ClusteringConfig {
    fn default_space() -> ClusterSpace {
        ClusterSpace::Pca
    }
    fn default_k_min() -> usize {
        1
    }
    fn default_k_max() -> usize {
        10
    }
    fn default_n_init() -> usize {
        10
    }
    fn default_max_iter() -> usize {
        300
    }
    fn default_tol() -> f64 {
        1e-6
    }
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        Self {
            space: Self::default_space(),
            k_min: Self::default_k_min(),
            k_max: Self::default_k_max(),
            k: None,
            n_init: Self::default_n_init(),
            max_iter: Self::default_max_iter(),
            tol: Self::default_tol(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    #[serde(default = "SplitConfig::default_fraction")]
    pub test_fraction: f64,
}

impl SplitConfig {
    fn default_fraction() -> f64 {
        0.2
    }
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            test_fraction: Self::default_fraction(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "ModelConfig::default_family")]
    pub family: ModelFamily,
    #[serde(default = "ModelConfig::default_folds")]
    pub folds: usize,
    /// Tune once on all training rows and reuse the parameters in every
    /// cluster, instead of tuning per cluster.
    #[serde(default)]
    pub share_tuning: bool,
    #[serde(default = "ModelConfig::default_kernel")]
    pub kernel: String,
    #[serde(default = "ParamGrid::gradient_boost_default")]
    pub gradient_boost: ParamGrid,
    #[serde(default = "ParamGrid::svr_default")]
    pub svr: ParamGrid,
}

impl ModelConfig {
    fn default_family() -> ModelFamily {
        ModelFamily::GradientBoost
    }
    fn default_folds() -> usize {
        5
    }
    fn default_kernel() -> String {
        "rbf".into()
    }

    pub fn grid(&self) -> &ParamGrid {
        match self.family {
            ModelFamily::GradientBoost => &self.gradient_boost,
            ModelFamily::Svr => &self.svr,
        }
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            family: Self::default_family(),
            folds: Self::default_folds(),
            share_tuning: false,
            kernel: Self::default_kernel(),
            gradient_boost: ParamGrid::gradient_boost_default(),
            svr: ParamGrid::svr_default(),
        }
    }
}

/// Chromatograms produced by the `synth` command.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    #[serde(default)]
    pub chromatograms: Vec<ChromatogramSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChromatogramSpec {
    pub id: String,
    /// Seconds.
    pub duration: f64,
    /// Samples per second.
    pub sample_rate: f64,
    pub peaks: Vec<SyntheticPeakSpec>,
}

impl PipelineConfig {
    /// Minimal configuration running the bundled synthetic dataset.
    pub fn synthetic(seed: u64) -> Self {
        Self {
            seed: Some(seed),
            name: "synthetic".into(),
            output_dir: None,
            data: DataConfig {
                path: None,
                synthetic: Some(SyntheticDatasetSpec::default()),
            },
            features: FeatureConfig::default(),
            scaling: ScalingConfig::default(),
            pca: PcaConfig::default(),
            clustering: ClusteringConfig::default(),
            split: SplitConfig::default(),
            model: ModelConfig::default(),
            synth: SynthConfig::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    /// Reads a config file. A relative `data.path` is resolved against the
    /// directory of the config file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let (Some(p), Some(dir)) = (cfg.data.path.as_mut(), path.parent()) {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| PipelineError::Config(e.to_string()))
    }

    /// Hex SHA-256 of the canonical JSON encoding. The output directory does
    /// not affect results and is left out.
    pub fn hash(&self) -> String {
        let cfg = Self {
            output_dir: None,
            ..self.clone()
        };
        let json = serde_json::to_vec(&cfg).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn master_seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| PipelineError::Config("a master `seed` is required".into()))
    }

    /// Checks everything that can be checked before any data is read.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(PipelineError::Config(msg));
        self.master_seed()?;
        match (&self.data.path, &self.data.synthetic) {
            (Some(p), None) => {
                if !p.exists() {
                    return bad(format!("data path {} does not exist", p.display()));
                }
            }
            (None, Some(s)) => s.validate()?,
            _ => return bad("set exactly one of `data.path` and `data.synthetic`".into()),
        }
        for (set, list) in [
            ("clustering", &self.features.clustering),
            ("regression", &self.features.regression),
        ] {
            if list.is_empty() {
                return bad(format!("`features.{set}` is empty"));
            }
            if let Some(f) = list.iter().find(|f| !FEATURES.contains(&f.as_str())) {
                return bad(format!("`features.{set}` names unknown feature `{f}`"));
            }
        }
        let f = self.split.test_fraction;
        if !(f > 0.0 && f < 1.0) {
            return bad(format!("split.test_fraction must lie in (0, 1), got {f}"));
        }
        if let Components::Fixed(0) = self.pca.components {
            return bad("pca.components must be at least 1".into());
        }
        let t = self.pca.variance_threshold;
        if !(t > 0.0 && t <= 1.0) {
            return bad(format!("pca.variance_threshold must lie in (0, 1], got {t}"));
        }
        let c = &self.clustering;
        if c.k_min == 0 || c.k_min > c.k_max {
            return bad(format!("invalid k range {}..={}", c.k_min, c.k_max));
        }
        if c.k == Some(0) || c.n_init == 0 || c.max_iter == 0 || !(c.tol >= 0.0) {
            return bad("clustering.k, n_init and max_iter must be positive, tol >= 0".into());
        }
        if self.model.folds < 2 {
            return bad(format!("model.folds must be >= 2, got {}", self.model.folds));
        }
        if self.model.kernel != "rbf" {
            return bad(format!("only the rbf kernel is supported, got `{}`", self.model.kernel));
        }
        self.model
            .gradient_boost
            .check_family(ModelFamily::GradientBoost)
            .and_then(|_| self.model.svr.check_family(ModelFamily::Svr))
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_gets_defaults() {
        let cfg = PipelineConfig::from_toml_str("seed = 7\n[data.synthetic]\n").unwrap();
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.pca.components, Components::Fixed(2));
        assert_eq!(cfg.clustering.k_max, 10);
        assert_eq!(cfg.model.folds, 5);
        assert_eq!(cfg.model.svr.len(), 1500);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(PipelineConfig::from_toml_str("seed = 1\nbogus = 2\n[data.synthetic]\n").is_err());
        assert!(PipelineConfig::from_toml_str("seed = 1\n[data.synthetic]\n[pca]\ncomponent = 2\n").is_err());
    }

    #[test]
    fn auto_components_and_grids_parse() {
        let text = r#"
seed = 3
[data.synthetic]
[pca]
components = "auto"
variance_threshold = 0.9
[model]
family = "svr"
[model.svr]
C = { linspace = [1.0, 10.0, 4] }
gamma = [0.1]
"#;
        let cfg = PipelineConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.pca.components, Components::Auto(Auto::Auto));
        assert_eq!(cfg.model.grid().len(), 4);
        cfg.validate().unwrap();
    }

    #[test]
    fn validation_catches_bad_values() {
        let mut cfg = PipelineConfig::synthetic(1);
        cfg.seed = None;
        assert!(cfg.validate().is_err());
        let mut cfg = PipelineConfig::synthetic(1);
        cfg.split.test_fraction = 1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = PipelineConfig::synthetic(1);
        cfg.data.path = Some("/definitely/not/here.csv".into());
        cfg.data.synthetic = None;
        assert!(cfg.validate().is_err());
        let mut cfg = PipelineConfig::synthetic(1);
        cfg.features.clustering = vec!["colour".into()];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn toml_round_trip_and_stable_hash() {
        let cfg = PipelineConfig::synthetic(11);
        let back = PipelineConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        assert_ne!(PipelineConfig::synthetic(12).hash(), cfg.hash());
    }
}
