//! Simulation scenarios read from JSON, and trajectory CSV export.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use atma_core::guidance::ModelParams;
use atma_core::sim::{
    simulate_emergency_stop, simulate_intersection, simulate_lane_change, simulate_newell_follower,
    IntersectionOutcome, Movement, SafetyOutcome, SimConfig, StopOutcome, Trajectory,
};
use atma_core::{Deceleration, Distance, Duration, Speed};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Scenario {
    EmergencyStop {
        speed_mph: f64,
        decel_fps2: f64,
    },
    LaneChange {
        speed_mph: f64,
        headway_gap_s: f64,
    },
    Intersection {
        speed_mph: f64,
        available_time_s: f64,
        movement: Movement,
    },
    /// Leader path as `[time_s, position_ft]` knots.
    Newell {
        leader: Vec<(f64, f64)>,
        tau_s: f64,
        d_ft: f64,
        #[serde(default)]
        lane: i32,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct StopResult {
    #[serde(flatten)]
    pub outcome: StopOutcome,
    pub analytic_stop_time: f64,
    pub analytic_stop_distance: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SimResult {
    EmergencyStop(StopResult),
    LaneChange {
        safe: bool,
        #[serde(flatten)]
        outcome: SafetyOutcome,
    },
    Intersection(IntersectionOutcome),
    Newell {
        leader: Trajectory,
        follower: Trajectory,
    },
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn from_json(text: &str, source: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| AppError::format(source, e.to_string()))
    }

    pub fn run(&self, p: &ModelParams, cfg: &SimConfig) -> Result<SimResult> {
        Ok(match self {
            Scenario::EmergencyStop {
                speed_mph,
                decel_fps2,
            } => {
                let v = Speed::from_mph(*speed_mph)?;
                let a = Deceleration::from_fps2(*decel_fps2)?;
                let outcome = simulate_emergency_stop(v, a, cfg)?;
                SimResult::EmergencyStop(StopResult {
                    outcome,
                    analytic_stop_time: v.fps() / a.fps2(),
                    analytic_stop_distance: v.fps() * v.fps() / (2.0 * a.fps2()),
                })
            }
            Scenario::LaneChange {
                speed_mph,
                headway_gap_s,
            } => {
                let outcome = simulate_lane_change(
                    Duration::from_secs(*headway_gap_s)?,
                    Speed::from_mph(*speed_mph)?,
                    p,
                    cfg,
                )?;
                SimResult::LaneChange {
                    safe: outcome.is_safe(),
                    outcome,
                }
            }
            Scenario::Intersection {
                speed_mph,
                available_time_s,
                movement,
            } => SimResult::Intersection(simulate_intersection(
                Duration::from_secs(*available_time_s)?,
                *movement,
                Speed::from_mph(*speed_mph)?,
                p,
                cfg,
            )?),
            Scenario::Newell {
                leader,
                tau_s,
                d_ft,
                lane,
            } => {
                let leader = Trajectory::from_knots(leader, *lane)?;
                let follower = simulate_newell_follower(
                    &leader,
                    Duration::from_secs(*tau_s)?,
                    Distance::from_feet(*d_ft)?,
                );
                SimResult::Newell { leader, follower }
            }
        })
    }
}

/// `vehicle,time_s,position_ft,speed_fps,lane` rows.
pub fn write_trajectories<W: Write>(out: W, named: &[(&str, &Trajectory)]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["vehicle", "time_s", "position_ft", "speed_fps", "lane"])?;
    for (name, traj) in named {
        for s in traj.samples() {
            w.write_record([
                name.to_string(),
                s.time.to_string(),
                s.position.to_string(),
                s.speed.fps().to_string(),
                s.lane.to_string(),
            ])?;
        }
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_each_kind() {
        let s = Scenario::from_json(
            r#"{"kind":"emergency_stop","speed_mph":10,"decel_fps2":9.4}"#,
            "s",
        )
        .unwrap();
        let SimResult::EmergencyStop(r) = s
            .run(&ModelParams::default(), &SimConfig::default())
            .unwrap()
        else {
            panic!("wrong result kind");
        };
        assert!((r.outcome.stop_time.secs() - 1.56).abs() < 0.1);

        let s = Scenario::from_json(
            r#"{"kind":"intersection","speed_mph":10,"available_time_s":0,"movement":"left"}"#,
            "s",
        )
        .unwrap();
        let SimResult::Intersection(o) = s
            .run(&ModelParams::default(), &SimConfig::default())
            .unwrap()
        else {
            panic!("wrong result kind");
        };
        assert!(!o.pass);

        let s = Scenario::from_json(
            r#"{"kind":"newell","leader":[[0,0],[10,150]],"tau_s":1,"d_ft":5}"#,
            "s",
        )
        .unwrap();
        let SimResult::Newell { follower, .. } = s
            .run(&ModelParams::default(), &SimConfig::default())
            .unwrap()
        else {
            panic!("wrong result kind");
        };
        let mut out = Vec::new();
        write_trajectories(&mut out, &[("follower", &follower)]).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap().lines().nth(1),
            Some("follower,1,-5,15,0")
        );
    }

    #[test]
    fn rejects_malformed() {
        assert!(Scenario::from_json(r#"{"kind":"teleport"}"#, "s").is_err());
        assert!(Scenario::from_json(r#"{"kind":"lane_change","speed_mph":10}"#, "s").is_err());
    }
}
