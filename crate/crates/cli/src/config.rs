//! Run configuration: one JSON document describing the scenario and the
//! settings of every subcommand.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sparsearray::design::DesignConfig;
use sparsearray::oracle::OracleConfig;
use sparsearray::scene::{GridGeometry, Scenario, SourceSpec};

use crate::CliError;

fn half() -> f64 {
    0.5
}

/// Candidate grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GeometryConfig {
    Linear {
        n: usize,
        #[serde(default = "half")]
        spacing: f64,
    },
    Planar {
        nx: usize,
        ny: usize,
        #[serde(default = "half")]
        spacing: f64,
    },
}

impl GeometryConfig {
    pub fn build(&self) -> sparsearray::Result<GridGeometry> {
        match *self {
            GeometryConfig::Linear { n, spacing } => GridGeometry::linear(n, spacing),
            GeometryConfig::Planar { nx, ny, spacing } => GridGeometry::planar(nx, ny, spacing),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub geometry: GeometryConfig,
    pub sources: Vec<SourceSpec>,
}

impl ScenarioConfig {
    pub fn build(&self) -> sparsearray::Result<Scenario> {
        Scenario::new(self.geometry.build()?, self.sources.clone())
    }
}

/// Enumeration settings plus an optional fixed prefix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleBlock {
    pub budget: u128,
    pub k: usize,
    pub full_ranking: bool,
    pub fast_path: bool,
    /// Sensors every enumerated support must contain.
    pub prefix: Vec<usize>,
}

impl Default for OracleBlock {
    fn default() -> Self {
        let d = OracleConfig::default();
        Self {
            budget: d.budget,
            k: d.k,
            full_ranking: d.full_ranking,
            fast_path: d.fast_path,
            prefix: Vec::new(),
        }
    }
}

impl OracleBlock {
    pub fn oracle_config(&self) -> OracleConfig {
        OracleConfig {
            budget: self.budget,
            k: self.k,
            full_ranking: self.full_ranking,
            fast_path: self.fast_path,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeampatternConfig {
    /// Active sensors; empty means the whole grid.
    pub support: Vec<usize>,
    /// Weights aligned with `support` as `[re, im]` pairs; when absent the
    /// max-SINR weights of the scenario are used.
    pub weights: Option<Vec<[f64; 2]>>,
    pub start_deg: f64,
    pub stop_deg: f64,
    pub step_deg: f64,
    /// Azimuth of the cut for planar arrays.
    pub phi: Option<f64>,
}

impl Default for BeampatternConfig {
    fn default() -> Self {
        Self {
            support: Vec::new(),
            weights: None,
            start_deg: 0.0,
            stop_deg: 180.0,
            step_deg: 0.5,
            phi: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoarrayConfig {
    /// Sensors whose difference co-array is reported; empty means the whole grid.
    pub support: Vec<usize>,
}

/// Random interference environments for the Monte Carlo harness. Desired
/// sources are taken from the scenario; interferers are redrawn per trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub trials: usize,
    pub interferers_min: usize,
    pub interferers_max: usize,
    pub doa_min_deg: f64,
    pub doa_max_deg: f64,
    /// Azimuth range for planar grids.
    pub phi_min_deg: f64,
    pub phi_max_deg: f64,
    pub inr_min_db: f64,
    pub inr_max_db: f64,
    /// Master seed; trial `i` uses `seed + i`.
    pub seed: Option<u64>,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            trials: 200,
            interferers_min: 8,
            interferers_max: 8,
            doa_min_deg: 20.0,
            doa_max_deg: 160.0,
            phi_min_deg: 0.0,
            phi_max_deg: 180.0,
            inr_min_db: 10.0,
            inr_max_db: 15.0,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub design: DesignConfig,
    #[serde(default)]
    pub oracle: OracleBlock,
    #[serde(default)]
    pub beampattern: BeampatternConfig,
    #[serde(default)]
    pub coarray: CoarrayConfig,
    #[serde(default)]
    pub montecarlo: MonteCarloConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    /// Parses JSON, reporting the offending field path and position.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            CliError::Config(format!(
                "at `{path}` (line {}, column {}): {inner}",
                inner.line(),
                inner.column()
            ))
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Applies command-line overrides; `seed` replaces both the design and
    /// the Monte Carlo seeds.
    pub fn apply_overrides(&mut self, out: Option<PathBuf>, seed: Option<u64>) {
        if let Some(dir) = out {
            self.output.dir = dir;
        }
        if let Some(seed) = seed {
            self.design.seed = seed;
            self.montecarlo.seed = Some(seed);
        }
    }

    /// Compact JSON of the resolved configuration for provenance headers.
    pub fn provenance(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "scenario": {
            "geometry": {"kind": "linear", "n": 8},
            "sources": [{"theta": 90, "power_db": 10, "role": "desired"}]
        }
    }"#;

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.scenario.geometry, GeometryConfig::Linear { n: 8, spacing: 0.5 });
        assert_eq!(c.design, DesignConfig::default());
        assert_eq!(c.montecarlo.seed, None);
        assert_eq!(c.output.dir, PathBuf::from("out"));
        assert_eq!(c.scenario.build().unwrap().geometry().len(), 8);
    }

    #[test]
    fn errors_name_the_field() {
        let text = MINIMAL.replace(r#""n": 8"#, r#""n": "eight""#);
        let CliError::Config(msg) = RunConfig::from_json(&text).unwrap_err() else {
            panic!("expected a config error");
        };
        assert!(msg.contains("scenario.geometry"), "{msg}");
        assert!(msg.contains("line 3"), "{msg}");

        let text = MINIMAL.replace(r#""scenario""#, r#""design": {"mu_lowr": 1}, "scenario""#);
        let CliError::Config(msg) = RunConfig::from_json(&text).unwrap_err() else {
            panic!("expected a config error");
        };
        assert!(msg.contains("design") && msg.contains("mu_lowr"), "{msg}");
    }

    #[test]
    fn overrides_and_round_trip() {
        let mut c = RunConfig::from_json(MINIMAL).unwrap();
        c.apply_overrides(Some(PathBuf::from("elsewhere")), Some(7));
        assert_eq!(c.design.seed, 7);
        assert_eq!(c.montecarlo.seed, Some(7));
        let back = RunConfig::from_json(&c.provenance()).unwrap();
        assert_eq!(back, c);
    }
}
