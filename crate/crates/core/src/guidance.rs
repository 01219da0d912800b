//! Closed-form operating thresholds for a two-truck ATMA system.
//!
//! * car following: `s_lt = v²/2α + v·t_rps` and `s_ft = v²/2α + ε`
//! * lane changing: `t_c = (t_rps + v/α_lt) + L_gap/v + (t_rps + v_ffs/α_gv)`
//! * intersections: `(L + L_gap + 2·L_truck) / v` for a straight crossing
//!   (`L` = intersection length) or a left turn (`L` = arc length)
//!
//! The speed sensitivity of each threshold is reported as a forward-difference
//! elasticity with a 1 mph step, normalised at the lower speed.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::str::FromStr;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{
    intersection_length, left_turn_path_length, Deceleration, Distance, Duration, RoadGeometry,
    Speed, VehicleSpec,
};

/// Allowed range of the operator-set LT–FT command gap, in feet.
pub const GAP_COMMAND_RANGE: (f64, f64) = (25.0, 1500.0);

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ModelParams {
    /// Maximum ATMA deceleration from the emergency-stop calibration.
    pub alpha_lt: Deceleration,
    /// Comfortable general-vehicle deceleration. Not used by the default
    /// models; kept so callers can substitute it for `alpha_gv_emergency`.
    pub alpha_gv_comfort: Deceleration,
    pub alpha_gv_emergency: Deceleration,
    /// Brake reaction time, shared by truck and general-vehicle drivers.
    pub t_rps: Duration,
    /// 95th-percentile follow-distance error of the FT.
    pub epsilon: Distance,
    pub gap_command: Distance,
    pub truck: VehicleSpec,
    pub geometry: RoadGeometry,
    /// Free-flow speed of general traffic in the target lane.
    pub ffs: Speed,
}

impl Default for ModelParams {
    fn default() -> Self {
        let alpha_lt = Deceleration::fps2_const(12.4);
        ModelParams {
            alpha_lt,
            alpha_gv_comfort: Deceleration::fps2_const(11.2),
            alpha_gv_emergency: Deceleration::fps2_const(14.8),
            t_rps: Duration::secs_const(2.5),
            epsilon: Distance::feet_const(6.0),
            gap_command: Distance::feet_const(100.0),
            truck: VehicleSpec::truck(alpha_lt),
            geometry: RoadGeometry::default(),
            ffs: Speed::from_mph_const(70.0),
        }
    }
}

impl ModelParams {
    /// Checks the operating envelope. The threshold functions themselves
    /// accept degenerate values (zero gap, zero lengths).
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = GAP_COMMAND_RANGE;
        let gap = self.gap_command.feet();
        if !(lo..=hi).contains(&gap) {
            return Err(Error::out_of_range(
                "command gap (ft)",
                "within [25, 1500]",
                gap,
            ));
        }
        for (name, a) in [
            ("alpha_lt (ft/s²)", self.alpha_lt),
            ("alpha_gv_comfort (ft/s²)", self.alpha_gv_comfort),
            ("alpha_gv_emergency (ft/s²)", self.alpha_gv_emergency),
        ] {
            if !(a.fps2() > 0.0) {
                return Err(Error::out_of_range(name, "> 0", a.fps2()));
            }
        }
        self.truck.validate()?;
        self.geometry.validate()
    }

    /// Total length the two-truck system occupies: both trucks plus the gap.
    pub fn system_length(&self) -> Distance {
        self.gap_command + self.truck.length * 2.0
    }
}

/// Newell spacing law: standstill distance plus distance covered during the
/// temporal delay.
pub fn newell_spacing(v: Speed, tau: Duration, d: Distance) -> Distance {
    d + v.over(tau)
}

/// Braking distance from `v` at constant deceleration.
pub fn spatial_delay(v: Speed, alpha: Deceleration) -> Distance {
    Distance::feet_const(v.fps() * v.fps() / (2.0 * alpha.fps2()))
}

/// Minimum following distance between the LT and the general vehicle ahead.
pub fn min_follow_distance_lt(v: Speed, p: &ModelParams) -> Distance {
    spatial_delay(v, p.alpha_lt) + v.over(p.t_rps)
}

/// Minimum following distance between the FT and the LT. The FT has no
/// reaction delay; the gap-keeping error takes its place.
pub fn min_follow_distance_ft(v: Speed, p: &ModelParams) -> Distance {
    spatial_delay(v, p.alpha_lt) + p.epsilon
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct LaneChangeComponents {
    /// LT headway to the lead vehicle in the target lane.
    pub lt_headway: Duration,
    /// Time for the FT to reach the LT's lane-change point.
    pub ft_transit: Duration,
    /// Headway the lag vehicle needs behind the FT.
    pub lag_headway: Duration,
}

impl LaneChangeComponents {
    pub fn total(&self) -> Duration {
        self.lt_headway + self.ft_transit + self.lag_headway
    }
}

pub fn lane_change_components(v_lt: Speed, p: &ModelParams) -> Result<LaneChangeComponents> {
    let ft_transit = p
        .gap_command
        .time_at(v_lt)
        .map_err(|_| Error::ZeroSpeed("FT lane-change transit time"))?;
    Ok(LaneChangeComponents {
        lt_headway: p.t_rps + p.alpha_lt.time_to_stop(v_lt),
        ft_transit,
        lag_headway: p.t_rps + p.alpha_gv_emergency.time_to_stop(p.ffs),
    })
}

/// Minimum target-lane time headway that lets both trucks change lanes.
pub fn critical_gap(v_lt: Speed, p: &ModelParams) -> Result<Duration> {
    lane_change_components(v_lt, p).map(|c| c.total())
}

pub fn intersection_clearance_straight(v_lt: Speed, p: &ModelParams) -> Result<Duration> {
    (intersection_length(&p.geometry) + p.system_length())
        .time_at(v_lt)
        .map_err(|_| Error::ZeroSpeed("straight intersection clearance"))
}

pub fn intersection_clearance_turn(v_lt: Speed, p: &ModelParams) -> Result<Duration> {
    (left_turn_path_length(&p.geometry) + p.system_length())
        .time_at(v_lt)
        .map_err(|_| Error::ZeroSpeed("left-turn intersection clearance"))
}

/// Forward-difference speed elasticity `[(f(v+dv) − f(v)) / f(v)] / (dv / v)`
/// with speeds in mph.
pub fn saf<F>(model: F, v_mph: f64, dv_mph: f64) -> Result<f64>
where
    F: Fn(Speed) -> Result<f64>,
{
    if !(v_mph > 0.0) || !v_mph.is_finite() {
        return Err(Error::out_of_range("SAF speed (mph)", "> 0", v_mph));
    }
    if !(dv_mph > 0.0) || !dv_mph.is_finite() {
        return Err(Error::out_of_range("SAF speed step (mph)", "> 0", dv_mph));
    }
    let base = model(Speed::from_mph(v_mph)?)?;
    if base == 0.0 {
        return Err(Error::ZeroReference { speed_mph: v_mph });
    }
    let next = model(Speed::from_mph(v_mph + dv_mph)?)?;
    Ok(((next - base) / base) / (dv_mph / v_mph))
}

/// The five guidance thresholds, evaluated in canonical units (ft or s).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(Serialize, Deserialize),
    serde(rename_all = "snake_case")
)]
pub enum Threshold {
    FollowLt,
    FollowFt,
    CriticalGap,
    ClearanceStraight,
    ClearanceTurn,
}

impl Threshold {
    pub const ALL: [Threshold; 5] = [
        Threshold::FollowLt,
        Threshold::FollowFt,
        Threshold::CriticalGap,
        Threshold::ClearanceStraight,
        Threshold::ClearanceTurn,
    ];

    pub fn evaluate(self, v: Speed, p: &ModelParams) -> Result<f64> {
        Ok(match self {
            Threshold::FollowLt => min_follow_distance_lt(v, p).feet(),
            Threshold::FollowFt => min_follow_distance_ft(v, p).feet(),
            Threshold::CriticalGap => critical_gap(v, p)?.secs(),
            Threshold::ClearanceStraight => intersection_clearance_straight(v, p)?.secs(),
            Threshold::ClearanceTurn => intersection_clearance_turn(v, p)?.secs(),
        })
    }

    pub fn saf(self, v_mph: f64, dv_mph: f64, p: &ModelParams) -> Result<f64> {
        saf(|v| self.evaluate(v, p), v_mph, dv_mph)
    }

    pub fn name(self) -> &'static str {
        match self {
            Threshold::FollowLt => "s_lt",
            Threshold::FollowFt => "s_ft",
            Threshold::CriticalGap => "t_c",
            Threshold::ClearanceStraight => "t_straight",
            Threshold::ClearanceTurn => "t_turn",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Threshold::FollowLt | Threshold::FollowFt => "ft",
            _ => "s",
        }
    }
}

/// Evenly spaced speeds in mph, `start..=stop` by `step`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SpeedGrid {
    pub start_mph: f64,
    pub stop_mph: f64,
    pub step_mph: f64,
}

impl Default for SpeedGrid {
    fn default() -> Self {
        SpeedGrid {
            start_mph: 5.0,
            stop_mph: 15.0,
            step_mph: 1.0,
        }
    }
}

impl SpeedGrid {
    pub fn new(start_mph: f64, stop_mph: f64, step_mph: f64) -> Result<Self> {
        let g = SpeedGrid {
            start_mph,
            stop_mph,
            step_mph,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start_mph > 0.0 && self.start_mph.is_finite()) {
            return Err(Error::out_of_range(
                "grid start (mph)",
                "> 0",
                self.start_mph,
            ));
        }
        if !(self.stop_mph >= self.start_mph && self.stop_mph.is_finite()) {
            return Err(Error::out_of_range(
                "grid stop (mph)",
                ">= start",
                self.stop_mph,
            ));
        }
        if !(self.step_mph > 0.0 && self.step_mph.is_finite()) {
            return Err(Error::out_of_range("grid step (mph)", "> 0", self.step_mph));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let n = libm::floor((self.stop_mph - self.start_mph) / self.step_mph + 1e-9) as usize;
        (0..=n)
            .map(|i| self.start_mph + i as f64 * self.step_mph)
            .collect()
    }
}

impl FromStr for SpeedGrid {
    type Err = Error;

    /// `start:stop:step`, or `start:stop` with a 1 mph step.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let num = |t: &str| {
            t.parse::<f64>().map_err(|_| Error::Field {
                column: "grid",
                reason: alloc::format!("cannot parse {t:?} in {s:?}"),
            })
        };
        match parts.as_slice() {
            [a, b] => SpeedGrid::new(num(a)?, num(b)?, 1.0),
            [a, b, c] => SpeedGrid::new(num(a)?, num(b)?, num(c)?),
            _ => Err(Error::Field {
                column: "grid",
                reason: alloc::format!("expected start:stop[:step], got {s:?}"),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ThresholdValues {
    pub s_lt: f64,
    pub s_ft: f64,
    pub t_c: f64,
    pub t_straight: f64,
    pub t_turn: f64,
}

impl ThresholdValues {
    pub fn get(&self, t: Threshold) -> f64 {
        match t {
            Threshold::FollowLt => self.s_lt,
            Threshold::FollowFt => self.s_ft,
            Threshold::CriticalGap => self.t_c,
            Threshold::ClearanceStraight => self.t_straight,
            Threshold::ClearanceTurn => self.t_turn,
        }
    }

    fn try_from_fn(mut f: impl FnMut(Threshold) -> Result<f64>) -> Result<Self> {
        Ok(ThresholdValues {
            s_lt: f(Threshold::FollowLt)?,
            s_ft: f(Threshold::FollowFt)?,
            t_c: f(Threshold::CriticalGap)?,
            t_straight: f(Threshold::ClearanceStraight)?,
            t_turn: f(Threshold::ClearanceTurn)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ThresholdRow {
    pub speed_mph: f64,
    /// Distances in ft, times in s.
    pub values: ThresholdValues,
    /// Elasticity from this speed to `speed + saf_step_mph`.
    pub saf: ThresholdValues,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct GuidanceThresholds {
    pub grid: SpeedGrid,
    pub saf_step_mph: f64,
    pub rows: Vec<ThresholdRow>,
}

impl GuidanceThresholds {
    pub fn column(&self, t: Threshold) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.rows
            .iter()
            .map(move |r| (r.speed_mph, r.values.get(t)))
    }

    pub fn saf_column(&self, t: Threshold) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.rows.iter().map(move |r| (r.speed_mph, r.saf.get(t)))
    }

    /// Smallest and largest value of a threshold over the grid.
    pub fn range(&self, t: Threshold) -> (f64, f64) {
        min_max(self.column(t).map(|(_, v)| v))
    }
}

pub(crate) fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

pub fn threshold_table(grid: &SpeedGrid, p: &ModelParams) -> Result<GuidanceThresholds> {
    threshold_table_with_step(grid, 1.0, p)
}

pub fn threshold_table_with_step(
    grid: &SpeedGrid,
    saf_step_mph: f64,
    p: &ModelParams,
) -> Result<GuidanceThresholds> {
    grid.validate()?;
    let rows = grid
        .points()
        .into_iter()
        .map(|mph| {
            let at = |e: Error| Error::AtGridPoint {
                speed_mph: mph,
                source: Box::new(e),
            };
            let v = Speed::from_mph(mph).map_err(at)?;
            let values = ThresholdValues::try_from_fn(|t| t.evaluate(v, p)).map_err(at)?;
            let saf = ThresholdValues::try_from_fn(|t| t.saf(mph, saf_step_mph, p)).map_err(at)?;
            Ok(ThresholdRow {
                speed_mph: mph,
                values,
                saf,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GuidanceThresholds {
        grid: *grid,
        saf_step_mph,
        rows,
    })
}
