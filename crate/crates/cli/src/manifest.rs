//! Run manifest: scene, controller, simulation and output settings.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use svcnav::scenes::Scene;
use svcnav::sensors::DEFAULT_BEAMS;
use svcnav::sim::InitialState;
use svcnav::{ControllerConfig, ControllerKind, Environment, SimConfig};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format_version: u32,
    pub scene: SceneSource,
    pub controller: ControllerConfig,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldSpec>,
    #[serde(default)]
    pub outputs: Outputs,
}

/// Either a builtin scene (`{"name": ...}`) or an environment file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SceneSource {
    Builtin(Scene),
    File { file: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub kind: ControllerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialState<f64>>,
    #[serde(default = "defaults::dt")]
    pub dt: f64,
    #[serde(default = "defaults::max_time")]
    pub max_time: f64,
    #[serde(default = "defaults::goal_tolerance")]
    pub goal_tolerance: f64,
    #[serde(default = "defaults::beams")]
    pub lidar_beams: usize,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            kind: ControllerKind::SmoothExact,
            initial: None,
            dt: defaults::dt(),
            max_time: defaults::max_time(),
            goal_tolerance: defaults::goal_tolerance(),
            lidar_beams: defaults::beams(),
        }
    }
}

mod defaults {
    pub fn dt() -> f64 {
        1e-3
    }
    pub fn max_time() -> f64 {
        200.0
    }
    pub fn goal_tolerance() -> f64 {
        0.05
    }
    pub fn beams() -> usize {
        super::DEFAULT_BEAMS
    }
    pub fn directory() -> std::path::PathBuf {
        "out".into()
    }
    pub fn formats() -> Vec<super::Format> {
        vec![super::Format::Csv, super::Format::Svg, super::Format::Json]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub min: [f64; 2],
    pub max: [f64; 2],
    pub resolution: [usize; 2],
    /// Defaults to the simulation controller kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<ControllerKind>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Svg,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    /// Relative paths are resolved against the manifest's directory.
    #[serde(default = "defaults::directory")]
    pub directory: PathBuf,
    #[serde(default = "defaults::formats")]
    pub formats: Vec<Format>,
}

impl Default for Outputs {
    fn default() -> Self {
        Self {
            directory: defaults::directory(),
            formats: defaults::formats(),
        }
    }
}

impl Outputs {
    pub fn wants(&self, format: Format) -> bool {
        self.formats.contains(&format)
    }
}

/// A parsed manifest together with the directory relative paths refer to.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub manifest: Manifest,
    pub base: PathBuf,
}

impl Manifest {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let manifest: Manifest = serde_json::from_str(text).context("malformed manifest")?;
        if manifest.format_version != FORMAT_VERSION {
            bail!(
                "unsupported manifest format_version {} (expected {FORMAT_VERSION})",
                manifest.format_version
            );
        }
        Ok(manifest)
    }

    pub fn load(path: &Path) -> anyhow::Result<Loaded> {
        let text =
            fs::read_to_string(path).with_context(|| format!("cannot read manifest {}", path.display()))?;
        let manifest = Self::parse(&text).with_context(|| format!("in {}", path.display()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Loaded { manifest, base })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn sim_config(&self) -> SimConfig {
        let initial = self
            .sim
            .initial
            .clone()
            .unwrap_or_else(|| InitialState::Point(self.controller.goal.clone()));
        let mut cfg = SimConfig::new(self.controller.clone(), self.sim.kind, initial);
        cfg.dt = self.sim.dt;
        cfg.max_time = self.sim.max_time;
        cfg.goal_tolerance = self.sim.goal_tolerance;
        cfg.lidar_beams = self.sim.lidar_beams;
        cfg
    }
}

impl Loaded {
    pub fn environment(&self) -> anyhow::Result<Environment> {
        match &self.manifest.scene {
            SceneSource::Builtin(scene) => Ok(scene.build()?),
            SceneSource::File { file } => load_environment(&self.base.join(file)),
        }
    }

    pub fn output_dir(&self) -> anyhow::Result<PathBuf> {
        let dir = self.base.join(&self.manifest.outputs.directory);
        fs::create_dir_all(&dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(dir)
    }
}

pub fn load_environment(path: &Path) -> anyhow::Result<Environment> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read environment {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("malformed environment {}", path.display()))
}
