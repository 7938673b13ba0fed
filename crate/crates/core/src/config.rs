//! The run configuration: every tunable constant, loaded from TOML.
//!
//! Missing keys take their defaults; unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::BaselineConfig;
use crate::dream::DreamConfig;
use crate::error::{Error, Result};
use crate::harness::{ExperimentPlan, Method, MethodSettings, ProbeConfig};
use crate::zoo::{DomainSpec, DomainStyle, SplitSizes, TrainSettings};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainEntry {
    pub name: String,
    pub style: DomainStyle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub domains: Vec<DomainEntry>,
    pub classes: usize,
    /// Image side length in pixels.
    pub side: usize,
    pub samples_per_class: usize,
    pub val_fraction: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        let entry = |name: &str, style| DomainEntry {
            name: name.into(),
            style,
        };
        Self {
            domains: vec![
                entry("clean", DomainStyle::Clean),
                entry("noisy", DomainStyle::Noisy),
                entry("dilated", DomainStyle::Dilated),
            ],
            classes: 5,
            side: 12,
            samples_per_class: 120,
            val_fraction: 0.2,
        }
    }
}

impl DataConfig {
    pub fn specs(&self) -> Vec<DomainSpec> {
        self.domains
            .iter()
            .enumerate()
            .map(|(id, d)| DomainSpec {
                id,
                name: d.name.clone(),
                style: d.style,
                classes: self.classes,
                side: self.side,
                samples_per_class: self.samples_per_class,
                val_fraction: self.val_fraction,
            })
            .collect()
    }

    pub fn names(&self) -> Vec<String> {
        self.domains.iter().map(|d| d.name.clone()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZooConfig {
    pub models_per_domain: usize,
    /// Train : val : test proportions of each domain's models.
    pub split_ratio: [usize; 3],
    /// Explicit per-domain split sizes for the disjoint-combination mode.
    pub disjoint_sizes: [usize; 3],
    pub train: TrainSettings,
}

impl Default for ZooConfig {
    fn default() -> Self {
        Self {
            models_per_domain: 140,
            split_ratio: [3, 1, 1],
            disjoint_sizes: [84, 28, 28],
            train: TrainSettings::default(),
        }
    }
}

impl ZooConfig {
    /// Split sizes for domains with at least `usable` finite models each.
    pub fn split_sizes(&self, usable: usize) -> Result<SplitSizes> {
        SplitSizes::from_ratio(usable.min(self.models_per_domain), self.split_ratio)
    }

    pub fn disjoint_split_sizes(&self) -> SplitSizes {
        let [train, val, test] = self.disjoint_sizes;
        SplitSizes { train, val, test }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FingerprintConfig {
    /// Query count N.
    pub queries: usize,
}

impl Default for FingerprintConfig {
    fn default() -> Self {
        Self { queries: 20 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessConfig {
    pub trials: usize,
    pub methods: Vec<Method>,
    /// Training-time classes of the class-subset scenario.
    pub class_subset: Vec<usize>,
    pub lambda_sweep: Vec<f64>,
    pub query_sweep: Vec<usize>,
    pub zoo_size_sweep: Vec<usize>,
    pub probe: ProbeConfig,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            trials: 5,
            methods: vec![Method::Random, Method::Svm, Method::Kennen, Method::Mmd, Method::Dream],
            class_subset: vec![0, 1, 2],
            lambda_sweep: vec![0.001, 0.01, 0.1, 1.0, 10.0],
            query_sweep: vec![10, 20, 50],
            zoo_size_sweep: vec![21, 42, 84],
            probe: ProbeConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub data: DataConfig,
    pub zoo: ZooConfig,
    pub fingerprint: FingerprintConfig,
    pub dream: DreamConfig,
    pub baselines: BaselineConfig,
    pub harness: HarnessConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 2024,
            data: DataConfig::default(),
            zoo: ZooConfig::default(),
            fingerprint: FingerprintConfig::default(),
            dream: DreamConfig::default(),
            baselines: BaselineConfig::default(),
            harness: HarnessConfig::default(),
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.data.domains.len() < 2 {
            return Err(Error::Config("at least two domains are required".into()));
        }
        if self.data.classes < 2 || self.data.side == 0 || self.data.samples_per_class == 0 {
            return Err(Error::Config("need >= 2 classes, a positive side and samples".into()));
        }
        if !(0.0..1.0).contains(&self.data.val_fraction) {
            return Err(Error::Config("val_fraction must be in [0, 1)".into()));
        }
        if self.harness.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.fingerprint.queries == 0 {
            return Err(Error::Config("query count must be positive".into()));
        }
        if self.harness.class_subset.iter().any(|&c| c >= self.data.classes) {
            return Err(Error::Config("class_subset names a class that does not exist".into()));
        }
        self.dream.validate()?;
        self.baselines.validate()?;
        self.harness.probe.validate()?;
        self.zoo.split_sizes(self.zoo.models_per_domain)?;
        Ok(())
    }

    pub fn settings(&self) -> MethodSettings {
        MethodSettings {
            dream: self.dream.clone(),
            baselines: self.baselines.clone(),
        }
    }

    /// The standard rotation over every configured domain.
    pub fn plan(&self) -> ExperimentPlan {
        ExperimentPlan::rotation(
            self.data.domains.len(),
            self.harness.methods.clone(),
            self.harness.trials,
            self.fingerprint.queries,
            self.seed,
        )
    }
}
