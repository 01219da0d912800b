//! JSON run configuration.
//!
//! Every field has a default, so `{}` is a valid config. Precedence is
//! command-line flag, then config file, then the defaults below. Values are
//! plain numbers with the unit in the field name.

use std::fs;
use std::path::Path;

use atma_core::guidance::{ModelParams, SpeedGrid};
use atma_core::sim::SimConfig;
use atma_core::{Deceleration, Distance, Duration, RoadGeometry, Speed, VehicleSpec};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub alpha_lt_fps2: f64,
    pub alpha_gv_comfort_fps2: f64,
    pub alpha_gv_emergency_fps2: f64,
    pub reaction_time_s: f64,
    pub epsilon_ft: f64,
    pub gap_command_ft: f64,
    pub truck_length_ft: f64,
    pub lane_width_ft: f64,
    pub lanes_crossed: u32,
    pub median_offset_ft: f64,
    pub ffs_mph: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let p = ModelParams::default();
        ModelConfig {
            alpha_lt_fps2: p.alpha_lt.fps2(),
            alpha_gv_comfort_fps2: p.alpha_gv_comfort.fps2(),
            alpha_gv_emergency_fps2: p.alpha_gv_emergency.fps2(),
            reaction_time_s: p.t_rps.secs(),
            epsilon_ft: p.epsilon.feet(),
            gap_command_ft: p.gap_command.feet(),
            truck_length_ft: p.truck.length.feet(),
            lane_width_ft: p.geometry.lane_width.feet(),
            lanes_crossed: p.geometry.lanes_crossed,
            median_offset_ft: p.geometry.median_offset.feet(),
            ffs_mph: 70.0,
        }
    }
}

impl ModelConfig {
    pub fn to_params(&self) -> Result<ModelParams> {
        let alpha_lt = Deceleration::from_fps2(self.alpha_lt_fps2)?;
        let t_rps = Duration::from_secs(self.reaction_time_s)?;
        let params = ModelParams {
            alpha_lt,
            alpha_gv_comfort: Deceleration::from_fps2(self.alpha_gv_comfort_fps2)?,
            alpha_gv_emergency: Deceleration::from_fps2(self.alpha_gv_emergency_fps2)?,
            t_rps,
            epsilon: Distance::from_feet(self.epsilon_ft)?,
            gap_command: Distance::from_feet(self.gap_command_ft)?,
            truck: VehicleSpec {
                length: Distance::from_feet(self.truck_length_ft)?,
                max_decel: alpha_lt,
                reaction_time: t_rps,
            },
            geometry: RoadGeometry {
                lane_width: Distance::from_feet(self.lane_width_ft)?,
                lanes_crossed: self.lanes_crossed,
                median_offset: Distance::from_feet(self.median_offset_ft)?,
            },
            ffs: Speed::from_mph(self.ffs_mph)?,
        };
        params.validate()?;
        Ok(params)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSettings {
    pub dt_s: f64,
    pub horizon_s: f64,
    pub tolerance_s: f64,
    pub gv_length_ft: f64,
}

impl Default for SimSettings {
    fn default() -> Self {
        let c = SimConfig::default();
        SimSettings {
            dt_s: c.dt.secs(),
            horizon_s: c.horizon.secs(),
            tolerance_s: c.tolerance,
            gv_length_ft: c.gv_length.feet(),
        }
    }
}

impl SimSettings {
    pub fn to_config(&self) -> Result<SimConfig> {
        let cfg = SimConfig {
            dt: Duration::from_secs(self.dt_s)?,
            horizon: Duration::from_secs(self.horizon_s)?,
            tolerance: self.tolerance_s,
            gv_length: Distance::from_feet(self.gv_length_ft)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub sim: SimSettings,
    /// `start:stop:step` in mph.
    pub grid: String,
    pub saf_step_mph: f64,
    /// Command gaps swept by threshold verification.
    pub verify_gaps_ft: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelConfig::default(),
            sim: SimSettings::default(),
            grid: "5:15:1".to_string(),
            saf_step_mph: 1.0,
            verify_gaps_ft: vec![100.0, 200.0],
        }
    }
}

/// Flag values that override the config file when present.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// LT-FT command gap (ft)
    #[arg(long = "gap")]
    pub gap_command_ft: Option<f64>,
    /// Free-flow speed of general traffic (mph)
    #[arg(long = "ffs")]
    pub ffs_mph: Option<f64>,
    /// Maximum ATMA deceleration (ft/s²)
    #[arg(long = "alpha-lt")]
    pub alpha_lt_fps2: Option<f64>,
    /// FT follow-distance error allowance (ft)
    #[arg(long = "epsilon")]
    pub epsilon_ft: Option<f64>,
    /// Brake reaction time (s)
    #[arg(long = "reaction-time")]
    pub reaction_time_s: Option<f64>,
    /// Speed grid start:stop:step (mph)
    #[arg(long)]
    pub grid: Option<String>,
    /// Simulation step (s)
    #[arg(long = "dt")]
    pub dt_s: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn from_json(text: &str, source: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| AppError::format(source, e.to_string()))
    }

    pub fn resolve(path: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        cfg.apply(overrides);
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        let m = &mut self.model;
        if let Some(v) = o.gap_command_ft {
            m.gap_command_ft = v;
        }
        if let Some(v) = o.ffs_mph {
            m.ffs_mph = v;
        }
        if let Some(v) = o.alpha_lt_fps2 {
            m.alpha_lt_fps2 = v;
        }
        if let Some(v) = o.epsilon_ft {
            m.epsilon_ft = v;
        }
        if let Some(v) = o.reaction_time_s {
            m.reaction_time_s = v;
        }
        if let Some(g) = &o.grid {
            self.grid = g.clone();
        }
        if let Some(v) = o.dt_s {
            self.sim.dt_s = v;
        }
    }

    pub fn params(&self) -> Result<ModelParams> {
        self.model.to_params()
    }

    pub fn sim_config(&self) -> Result<SimConfig> {
        self.sim.to_config()
    }

    pub fn speed_grid(&self) -> Result<SpeedGrid> {
        Ok(self.grid.parse()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_json_gives_defaults() {
        let cfg = RunConfig::from_json("{}", "c").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.params().unwrap(), ModelParams::default());
        assert_eq!(cfg.sim_config().unwrap(), SimConfig::default());
        assert_eq!(cfg.speed_grid().unwrap(), SpeedGrid::default());
    }

    #[test]
    fn flags_beat_file() {
        let mut cfg = RunConfig::from_json(r#"{"model": {"gap_command_ft": 150}}"#, "c").unwrap();
        assert_eq!(cfg.model.gap_command_ft, 150.0);
        cfg.apply(&Overrides {
            gap_command_ft: Some(200.0),
            ..Overrides::default()
        });
        assert_eq!(cfg.params().unwrap().gap_command.feet(), 200.0);
    }

    #[test]
    fn rejects_unknown_and_out_of_range() {
        assert!(RunConfig::from_json(r#"{"model": {"gap": 1}}"#, "c").is_err());
        let cfg = RunConfig::from_json(r#"{"model": {"gap_command_ft": 10}}"#, "c").unwrap();
        assert!(cfg.params().is_err());
        let cfg = RunConfig::from_json(r#"{"sim": {"dt_s": 0}}"#, "c").unwrap();
        assert!(cfg.sim_config().is_err());
    }
}
