//! TOML run configuration. Every field is optional; command-line flags win.

use std::path::Path;

use boxopt::model::{Dim3, GridSpec};
use serde::{Deserialize, Deserializer};

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub grid: GridSection,
    pub crease: CreaseSection,
    pub units: UnitsSection,
    pub fit: FitSection,
    pub optimize: OptimizeSection,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    #[serde(deserialize_with = "dims")]
    pub min: Option<Dim3>,
    #[serde(deserialize_with = "dims")]
    pub max: Option<Dim3>,
    pub step: Option<u32>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct CreaseSection {
    pub min_height: Option<u32>,
    pub step: Option<u32>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct UnitsSection {
    pub count: Option<usize>,
    pub mean_items: Option<f64>,
    pub max_items: Option<usize>,
    pub min_edge: Option<u32>,
    pub max_edge: Option<u32>,
    #[serde(deserialize_with = "dims")]
    pub largest_box: Option<Dim3>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    pub mode: Option<String>,
    pub leaf_threshold: Option<u64>,
    pub node_budget: Option<u64>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeSection {
    pub mode: Option<String>,
    pub cartons: Option<usize>,
    pub fixed_boxes: Option<Vec<usize>>,
    pub backend: Option<String>,
    pub solver: Option<Vec<String>>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub time_limit: Option<f64>,
    pub direct_cap: Option<u64>,
    pub enumeration_cap: Option<u64>,
}

/// Dimensions written as `"LxWxH"`.
fn dims<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Dim3>, D::Error> {
    let text: Option<String> = Option::deserialize(d)?;
    text.map(|t| t.parse().map_err(serde::de::Error::custom)).transpose()
}

impl Config {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| anyhow::anyhow!("config {}: {e}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    /// The grid from flags, falling back to the config.
    pub fn grid(&self, min: Option<Dim3>, max: Option<Dim3>, step: Option<u32>) -> Option<boxopt::Result<GridSpec>> {
        let min = min.or(self.grid.min)?;
        let max = max.or(self.grid.max)?;
        let step = step.or(self.grid.step)?;
        Some(GridSpec::new(min, max, step))
    }
}
