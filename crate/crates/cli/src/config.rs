//! Experiment configuration: TOML file, then command-line overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use swarm_core::dynamics::LearnerConfig;
use swarm_core::policy::NavigatorConfig;
use swarm_core::{ChannelConfig, PathShape, PlantConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ObserveMode {
    /// Plant centroid, read directly.
    #[default]
    Direct,
    /// Rendered frames through the detection and tracking pipeline.
    Vision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VisionSettings {
    pub contaminants: usize,
    pub bubbles: usize,
    /// Sensor noise, 16-bit units.
    pub noise_sigma: f64,
    /// Frames in the synthetic sequence of the `vision` command.
    pub frames: usize,
}

impl Default for VisionSettings {
    fn default() -> Self {
        Self { contaminants: 6, bubbles: 4, noise_sigma: 1500.0, frames: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Seeds the sweep, the episode noise and the synthetic scenes.
    pub seed: u32,
    pub out: PathBuf,
    pub observe: ObserveMode,
    /// `circle`, `letters:TEXT` or `polyline:x,y;x,y;...`.
    pub path: String,
    /// Laps of the circle path.
    pub laps: usize,
    /// Goal threshold on squared distance, cells².
    pub delta: f64,
    /// Run episodes on the disturbed plant.
    pub disturb: bool,
    pub start_x: f64,
    pub start_y: f64,
    pub start_diameter_um: f64,
    pub plant: PlantConfig,
    pub learner: LearnerConfig,
    pub channel: ChannelConfig,
    pub nav: NavigatorConfig,
    pub vision: VisionSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            out: PathBuf::from("out"),
            observe: ObserveMode::Direct,
            path: "circle".into(),
            laps: 3,
            delta: swarm_core::path::DEFAULT_DELTA,
            disturb: false,
            start_x: 150.0,
            start_y: 150.0,
            start_diameter_um: 100.0,
            plant: PlantConfig::default(),
            learner: LearnerConfig::default(),
            channel: ChannelConfig::default(),
            nav: NavigatorConfig::default(),
            vision: VisionSettings::default(),
        }
    }
}

/// Values given on the command line; each one present replaces the file value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u32>,
    pub out: Option<PathBuf>,
    pub observe: Option<ObserveMode>,
    pub path: Option<String>,
    pub laps: Option<usize>,
    pub delta: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub disturb: bool,
    pub budget: Option<usize>,
    pub frames: Option<usize>,
}

impl ExperimentConfig {
    /// Defaults, replaced by `file` when given, then by `overrides`.
    pub fn resolve(file: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let mut cfg = match file {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        cfg.apply(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = &o.out {
            self.out = v.clone();
        }
        if let Some(v) = o.observe {
            self.observe = v;
        }
        if let Some(v) = &o.path {
            self.path = v.clone();
        }
        if let Some(v) = o.laps {
            self.laps = v;
        }
        if let Some(v) = o.delta {
            self.delta = v;
        }
        if let Some(v) = o.alpha {
            self.learner.alpha = v;
        }
        if let Some(v) = o.beta {
            self.learner.beta = v;
        }
        if o.disturb {
            self.disturb = true;
        }
        if let Some(v) = o.budget {
            self.nav.budget = v;
        }
        if let Some(v) = o.frames {
            self.vision.frames = v;
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.plant.validate()?;
        self.learner.validate()?;
        self.channel.validate()?;
        self.nav.validate()?;
        self.path_shape()?;
        if self.laps == 0 {
            bail!("laps must be at least 1");
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            bail!("delta must be positive, got {}", self.delta);
        }
        let (lo, hi) = swarm_vision::SWARM_DIAMETER_UM;
        if !(lo..=hi).contains(&self.start_diameter_um) {
            bail!("start_diameter_um must lie in [{lo}, {hi}]");
        }
        if !self.channel.contains(swarm_core::GridPosition::new(self.start_x, self.start_y)) {
            bail!("start position ({}, {}) lies outside the channel", self.start_x, self.start_y);
        }
        Ok(())
    }

    /// The path shape with `laps` applied to circles.
    pub fn path_shape(&self) -> Result<PathShape> {
        let mut shape: PathShape = self.path.parse()?;
        if let PathShape::Circle { laps, .. } = &mut shape {
            *laps = self.laps;
        }
        Ok(shape)
    }

    /// The plant episodes run on: the configured one, or its disturbed variant.
    pub fn run_plant_config(&self) -> PlantConfig {
        if self.disturb {
            swarm_core::inject_disturbance(&self.plant)
        } else {
            self.plant.clone()
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }
}
