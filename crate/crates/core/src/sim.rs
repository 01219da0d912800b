//! Time-stepping kinematic simulator.
//!
//! This is the oracle for the closed-form thresholds in [`crate::guidance`]:
//! nothing here calls those formulas. Stopping and transit times come from
//! explicit first-order integration with step `dt`. A final partial step
//! lands exactly on the event (standstill, crossing a line), so durations
//! have no `dt` quantisation. Travelled distances keep the first-order Euler
//! error.
//!
//! Positions are signed feet along a 1-D path; the follower trails its leader.

use alloc::string::String;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::guidance::{ModelParams, SpeedGrid, Threshold};
use crate::units::{
    intersection_length, left_turn_path_length, Deceleration, Distance, Duration, Speed,
};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SimConfig {
    pub dt: Duration,
    pub horizon: Duration,
    /// Slack (s) below which a boundary case still counts as satisfied.
    pub tolerance: f64,
    /// General-vehicle length; only affects reported spacings.
    pub gv_length: Distance,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: Duration::secs_const(0.1),
            horizon: Duration::secs_const(3600.0),
            tolerance: 1e-9,
            gv_length: Distance::feet_const(15.0),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.secs() > 0.0) {
            return Err(Error::out_of_range("dt (s)", "> 0", self.dt.secs()));
        }
        if !(self.horizon.secs() >= self.dt.secs()) {
            return Err(Error::out_of_range(
                "horizon (s)",
                ">= dt",
                self.horizon.secs(),
            ));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::out_of_range("tolerance (s)", ">= 0", self.tolerance));
        }
        Ok(())
    }

    fn max_steps(&self) -> usize {
        libm::ceil(self.horizon.secs() / self.dt.secs()) as usize + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct TrajectorySample {
    pub time: f64,
    pub position: f64,
    pub speed: Speed,
    pub lane: i32,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Trajectory {
    samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn new(samples: Vec<TrajectorySample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Trajectory("no samples"));
        }
        for w in samples.windows(2) {
            if !(w[1].time > w[0].time) {
                return Err(Error::Trajectory(
                    "sample times must be strictly increasing",
                ));
            }
            if w[1].position < w[0].position {
                return Err(Error::Trajectory("position must be non-decreasing"));
            }
        }
        if samples
            .iter()
            .any(|s| !s.time.is_finite() || !s.position.is_finite())
        {
            return Err(Error::Trajectory("non-finite sample"));
        }
        Ok(Trajectory { samples })
    }

    /// Piecewise-linear path through `(time, position)` knots. Each sample's
    /// speed is the slope of the segment that starts there (the last sample
    /// repeats the final slope).
    pub fn from_knots(knots: &[(f64, f64)], lane: i32) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::Trajectory("need at least two knots"));
        }
        let slopes: Vec<f64> = knots
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect();
        let samples = knots
            .iter()
            .enumerate()
            .map(|(i, &(time, position))| {
                let slope = slopes[i.min(slopes.len() - 1)];
                Ok(TrajectorySample {
                    time,
                    position,
                    speed: Speed::from_fps(slope)
                        .map_err(|_| Error::Trajectory("negative or invalid speed"))?,
                    lane,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Trajectory::new(samples)
    }

    pub fn samples(&self) -> &[TrajectorySample] {
        &self.samples
    }

    pub fn start_time(&self) -> f64 {
        self.samples[0].time
    }

    pub fn end_time(&self) -> f64 {
        self.samples[self.samples.len() - 1].time
    }

    /// Index of the segment `[i, i+1]` containing `t`.
    fn segment(&self, t: f64) -> Option<usize> {
        if t < self.start_time() || t > self.end_time() {
            return None;
        }
        if self.samples.len() == 1 {
            return Some(0);
        }
        let i = self.samples.partition_point(|s| s.time <= t);
        Some(i.saturating_sub(1).min(self.samples.len() - 2))
    }

    /// Linearly interpolated position at `t`; `None` outside the sampled span.
    pub fn position_at(&self, t: f64) -> Option<f64> {
        let i = self.segment(t)?;
        if self.samples.len() == 1 {
            return Some(self.samples[0].position);
        }
        let (a, b) = (&self.samples[i], &self.samples[i + 1]);
        let f = (t - a.time) / (b.time - a.time);
        Some(a.position + f * (b.position - a.position))
    }

    /// Slope of the segment containing `t`.
    pub fn segment_speed_at(&self, t: f64) -> Option<f64> {
        let i = self.segment(t)?;
        if self.samples.len() == 1 {
            return Some(self.samples[0].speed.fps());
        }
        let (a, b) = (&self.samples[i], &self.samples[i + 1]);
        Some((b.position - a.position) / (b.time - a.time))
    }
}

/// Newell follower: the leader's trajectory shifted `tau` later in time and
/// `d` back in space. Lane changes are shifted the same way.
pub fn simulate_newell_follower(leader: &Trajectory, tau: Duration, d: Distance) -> Trajectory {
    Trajectory {
        samples: leader
            .samples
            .iter()
            .map(|s| TrajectorySample {
                time: s.time + tau.secs(),
                position: s.position - d.feet(),
                speed: s.speed,
                lane: s.lane,
            })
            .collect(),
    }
}

/// Result of integrating a stop.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct StopOutcome {
    pub stop_time: Duration,
    pub stop_distance: Distance,
    pub steps: usize,
}

/// Holds `v0` for `reaction`, then brakes at `alpha` to a standstill.
fn integrate_stop(v0: f64, reaction: f64, alpha: f64, cfg: &SimConfig) -> Result<StopOutcome> {
    let dt = cfg.dt.secs();
    let (mut t, mut x, mut v) = (0.0f64, 0.0f64, v0);
    let mut steps = 0usize;

    let mut remaining = reaction;
    while remaining > 0.0 {
        let h = remaining.min(dt);
        x += v * h;
        t += h;
        remaining -= h;
        steps += 1;
        if steps > cfg.max_steps() {
            return Err(Error::Trajectory("stop not reached within horizon"));
        }
    }
    while v > 0.0 {
        let h = if v - alpha * dt > 0.0 { dt } else { v / alpha };
        x += v * h;
        v = if h < dt { 0.0 } else { v - alpha * h };
        t += h;
        steps += 1;
        if steps > cfg.max_steps() {
            return Err(Error::Trajectory("stop not reached within horizon"));
        }
    }
    Ok(StopOutcome {
        stop_time: Duration::from_secs(t)?,
        stop_distance: Distance::from_feet(x)?,
        steps,
    })
}

/// Constant-deceleration emergency stop from `v0`, explicit Euler.
pub fn simulate_emergency_stop(
    v0: Speed,
    alpha: Deceleration,
    cfg: &SimConfig,
) -> Result<StopOutcome> {
    cfg.validate()?;
    integrate_stop(v0.fps(), 0.0, alpha.fps2(), cfg)
}

/// Steps a constant-speed vehicle from `start` until it reaches `target`.
/// Returns the interpolated crossing time, or `None` past the horizon.
fn time_to_reach(start: f64, speed: f64, target: f64, cfg: &SimConfig) -> Option<f64> {
    if start >= target {
        return Some(0.0);
    }
    if speed <= 0.0 {
        return None;
    }
    let dt = cfg.dt.secs();
    let mut x = start;
    for k in 0..cfg.max_steps() {
        let next = x + speed * dt;
        if next >= target {
            return Some(k as f64 * dt + (target - x) / speed);
        }
        x = next;
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(
    feature = "serde",
    derive(Serialize, Deserialize),
    serde(rename_all = "snake_case")
)]
pub enum Actor {
    LeadVehicle,
    LeadTruck,
    FollowTruck,
    LagVehicle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(
    feature = "serde",
    derive(Serialize, Deserialize),
    serde(rename_all = "snake_case")
)]
pub enum EventKind {
    /// Vehicle passes the lane-change point in the target lane.
    PassMergePoint,
    LaneChange,
    BrakeStart,
    Stopped,
    EnterIntersection,
    ClearIntersection,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SimEvent {
    pub time: f64,
    pub actor: Actor,
    pub kind: EventKind,
    pub position: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ConditionCheck {
    pub name: String,
    /// Seconds of headroom; negative when violated.
    pub slack: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SafetyOutcome {
    pub collision: bool,
    /// Smallest time headway between consecutive vehicles at the merge point (s).
    pub min_headway_time: f64,
    /// Smallest slack expressed as distance at the relevant vehicle's speed (ft).
    pub min_spacing: f64,
    pub checks: Vec<ConditionCheck>,
    pub events: Vec<SimEvent>,
}

impl SafetyOutcome {
    pub fn is_safe(&self) -> bool {
        !self.collision && self.checks.iter().all(|c| c.satisfied)
    }
}

/// Lane change of both trucks into a target-lane gap of `headway_gap`
/// seconds between a lead and a lag general vehicle travelling at FFS.
///
/// The merge point is the origin. The LT changes lanes there at `t = 0`,
/// placed behind the lead vehicle by exactly the time it needs to stop
/// (reaction then braking at `alpha_lt`, integrated). The FT starts
/// `gap_command` behind and changes lanes when it reaches the merge point.
/// The lag vehicle arrives `headway_gap` after the lead vehicle; once the FT
/// is in the lane it reacts and brakes at `alpha_gv_emergency`.
///
/// Checks: (a) LT headway to the lead vehicle covers its stop, (b) the lag
/// vehicle cannot reach the merge point before the FT has changed lanes,
/// (c) the lag vehicle can stop within its headway behind the FT.
pub fn simulate_lane_change(
    headway_gap: Duration,
    v_lt: Speed,
    p: &ModelParams,
    cfg: &SimConfig,
) -> Result<SafetyOutcome> {
    cfg.validate()?;
    if !(v_lt.fps() > 0.0) {
        return Err(Error::ZeroSpeed("lane-change simulation"));
    }
    let ffs = p.ffs.fps();
    let v = v_lt.fps();
    let mut events = Vec::new();

    let lt_stop = integrate_stop(v, p.t_rps.secs(), p.alpha_lt.fps2(), cfg)?;
    let lead_headway = lt_stop.stop_time.secs();
    events.push(SimEvent {
        time: -lead_headway,
        actor: Actor::LeadVehicle,
        kind: EventKind::PassMergePoint,
        position: 0.0,
    });
    events.push(SimEvent {
        time: 0.0,
        actor: Actor::LeadTruck,
        kind: EventKind::LaneChange,
        position: 0.0,
    });

    let ft_merge = time_to_reach(-p.gap_command.feet(), v, 0.0, cfg).ok_or(Error::Trajectory(
        "FT does not reach the merge point within horizon",
    ))?;
    events.push(SimEvent {
        time: ft_merge,
        actor: Actor::FollowTruck,
        kind: EventKind::LaneChange,
        position: 0.0,
    });

    // Lag vehicle sits (headway_gap - lead_headway) seconds upstream at t = 0.
    let lag_offset = headway_gap.secs() - lead_headway;
    let lag_arrival = if lag_offset <= 0.0 {
        Some(lag_offset)
    } else {
        time_to_reach(-ffs * lag_offset, ffs, 0.0, cfg)
    };
    let lag_headway = lag_arrival.map_or(f64::INFINITY, |t| t - ft_merge);
    if let Some(t) = lag_arrival {
        events.push(SimEvent {
            time: t,
            actor: Actor::LagVehicle,
            kind: EventKind::PassMergePoint,
            position: 0.0,
        });
    }

    let lag_stop = integrate_stop(ffs, p.t_rps.secs(), p.alpha_gv_emergency.fps2(), cfg)?;
    let lag_brake_time = ft_merge + p.t_rps.secs();
    if lag_headway.is_finite() {
        events.push(SimEvent {
            time: lag_brake_time,
            actor: Actor::LagVehicle,
            kind: EventKind::BrakeStart,
            position: -ffs * (lag_offset - lag_brake_time),
        });
        events.push(SimEvent {
            time: ft_merge + lag_stop.stop_time.secs(),
            actor: Actor::LagVehicle,
            kind: EventKind::Stopped,
            position: -ffs * (lag_offset - ft_merge) + lag_stop.stop_distance.feet(),
        });
    }

    let tol = cfg.tolerance;
    let slack_a = lead_headway - lt_stop.stop_time.secs();
    let slack_b = lag_headway;
    let slack_c = lag_headway - lag_stop.stop_time.secs();
    let checks = alloc::vec![
        ConditionCheck {
            name: "lt_headway_to_lead".into(),
            slack: slack_a,
            satisfied: slack_a >= -tol,
        },
        ConditionCheck {
            name: "no_cut_in_before_ft_change".into(),
            slack: slack_b,
            satisfied: slack_b >= -tol,
        },
        ConditionCheck {
            name: "lag_vehicle_stops".into(),
            slack: slack_c,
            satisfied: slack_c >= -tol,
        },
    ];
    let min_spacing = (slack_a * v).min(slack_b * ffs).min(slack_c * ffs);
    Ok(SafetyOutcome {
        collision: slack_c < -tol,
        min_headway_time: lead_headway.min(ft_merge).min(lag_headway),
        min_spacing: if min_spacing.is_nan() {
            f64::INFINITY
        } else {
            min_spacing
        },
        checks,
        events,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(
    feature = "serde",
    derive(Serialize, Deserialize),
    serde(rename_all = "snake_case")
)]
pub enum Movement {
    Straight,
    Left,
}

impl Movement {
    pub fn path_length(self, p: &ModelParams) -> Distance {
        match self {
            Movement::Straight => intersection_length(&p.geometry),
            Movement::Left => left_turn_path_length(&p.geometry),
        }
    }

    pub fn threshold(self) -> Threshold {
        match self {
            Movement::Straight => Threshold::ClearanceStraight,
            Movement::Left => Threshold::ClearanceTurn,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct IntersectionOutcome {
    pub pass: bool,
    /// Time for the FT's rear to clear the far side; `None` past the horizon.
    pub required_time: Option<f64>,
    /// `available - required` (s); negative on failure.
    pub margin: f64,
    pub events: Vec<SimEvent>,
}

/// LT front leaves the stop bar at `t = 0` at constant `v_lt`. The system
/// clears once the FT's rear, `gap_command + 2·length` behind the LT front,
/// passes the far side of the movement path.
pub fn simulate_intersection(
    available_time: Duration,
    movement: Movement,
    v_lt: Speed,
    p: &ModelParams,
    cfg: &SimConfig,
) -> Result<IntersectionOutcome> {
    cfg.validate()?;
    if !(v_lt.fps() > 0.0) {
        return Err(Error::ZeroSpeed("intersection simulation"));
    }
    let v = v_lt.fps();
    let path = movement.path_length(p).feet();
    let tail = p.system_length().feet();
    let mut events = alloc::vec![SimEvent {
        time: 0.0,
        actor: Actor::LeadTruck,
        kind: EventKind::EnterIntersection,
        position: 0.0,
    }];

    let required = time_to_reach(-tail, v, path, cfg);
    if let Some(t) = required {
        events.push(SimEvent {
            time: t,
            actor: Actor::FollowTruck,
            kind: EventKind::ClearIntersection,
            position: path,
        });
    }
    let available = available_time.secs();
    let margin = required.map_or(f64::NEG_INFINITY, |t| available - t);
    Ok(IntersectionOutcome {
        pass: margin >= -cfg.tolerance,
        required_time: required,
        margin,
        events,
    })
}

/// Smallest value in `(0, hi]` for which `safe` holds, assuming monotonicity.
fn bisect_boundary(mut safe: impl FnMut(f64) -> Result<bool>, resolution: f64) -> Result<f64> {
    let mut hi = 1.0;
    while !safe(hi)? {
        hi *= 2.0;
        if hi > 1e7 {
            return Err(Error::Trajectory("no safe value found during bisection"));
        }
    }
    let mut lo = 0.0;
    while hi - lo > resolution {
        let mid = 0.5 * (lo + hi);
        if safe(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

const BISECTION_RESOLUTION: f64 = 1e-6;

/// Smallest target-lane headway for which the lane-change scene is safe.
pub fn simulated_critical_gap(v_lt: Speed, p: &ModelParams, cfg: &SimConfig) -> Result<Duration> {
    let h = bisect_boundary(
        |h| Ok(simulate_lane_change(Duration::from_secs(h)?, v_lt, p, cfg)?.is_safe()),
        BISECTION_RESOLUTION,
    )?;
    Duration::from_secs(h)
}

/// Smallest available time for which the intersection movement passes.
pub fn simulated_clearance_time(
    movement: Movement,
    v_lt: Speed,
    p: &ModelParams,
    cfg: &SimConfig,
) -> Result<Duration> {
    let t = bisect_boundary(
        |t| Ok(simulate_intersection(Duration::from_secs(t)?, movement, v_lt, p, cfg)?.pass),
        BISECTION_RESOLUTION,
    )?;
    Duration::from_secs(t)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct BoundaryCheck {
    pub threshold: Threshold,
    pub speed_mph: f64,
    pub gap_command_ft: f64,
    pub closed_form: f64,
    pub simulated: f64,
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct VerificationReport {
    pub dt: f64,
    pub checks: Vec<BoundaryCheck>,
    pub max_abs_difference: f64,
    pub pass: bool,
}

/// Compares the closed-form lane-change and clearance thresholds with the
/// simulated safe/unsafe boundary at every grid speed and command gap.
/// Passes when every difference is within one `dt`.
pub fn verify_thresholds(
    grid: &SpeedGrid,
    gaps_ft: &[f64],
    p: &ModelParams,
    cfg: &SimConfig,
) -> Result<VerificationReport> {
    cfg.validate()?;
    grid.validate()?;
    let mut checks = Vec::new();
    for &gap in gaps_ft {
        let params = ModelParams {
            gap_command: Distance::from_feet(gap)?,
            ..*p
        };
        for mph in grid.points() {
            let v = Speed::from_mph(mph)?;
            let mut push = |threshold: Threshold, simulated: f64| -> Result<()> {
                let closed_form = threshold.evaluate(v, &params)?;
                checks.push(BoundaryCheck {
                    threshold,
                    speed_mph: mph,
                    gap_command_ft: gap,
                    closed_form,
                    simulated,
                    difference: simulated - closed_form,
                });
                Ok(())
            };
            push(
                Threshold::CriticalGap,
                simulated_critical_gap(v, &params, cfg)?.secs(),
            )?;
            for m in [Movement::Straight, Movement::Left] {
                push(
                    m.threshold(),
                    simulated_clearance_time(m, v, &params, cfg)?.secs(),
                )?;
            }
        }
    }
    let max_abs_difference = checks
        .iter()
        .map(|c| libm::fabs(c.difference))
        .fold(0.0, f64::max);
    Ok(VerificationReport {
        dt: cfg.dt.secs(),
        pass: max_abs_difference <= cfg.dt.secs(),
        max_abs_difference,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::guidance::{critical_gap, intersection_clearance_straight, newell_spacing};
    use proptest::prelude::*;

    fn mph(v: f64) -> Speed {
        Speed::from_mph(v).unwrap()
    }

    fn secs(s: f64) -> Duration {
        Duration::from_secs(s).unwrap()
    }

    fn ft(x: f64) -> Distance {
        Distance::from_feet(x).unwrap()
    }

    #[test]
    fn identity_translation() {
        let leader = Trajectory::from_knots(&[(0.0, 0.0), (5.0, 50.0), (9.0, 130.0)], 1).unwrap();
        let f = simulate_newell_follower(&leader, Duration::ZERO, Distance::ZERO);
        assert_eq!(f, leader);
    }

    #[test]
    fn constant_speed_spacing() {
        let v = 14.667;
        let leader = Trajectory::from_knots(&[(0.0, 0.0), (60.0, 60.0 * v)], 0).unwrap();
        let f = simulate_newell_follower(&leader, secs(2.5), ft(8.674));
        let t = 30.0;
        let spacing = leader.position_at(t).unwrap() - f.position_at(t).unwrap();
        let want = newell_spacing(Speed::from_fps(v).unwrap(), secs(2.5), ft(8.674)).feet();
        assert!((spacing - want).abs() < 1e-9);
        assert!((spacing - 45.34).abs() < 0.01);
    }

    #[test]
    fn speed_change_shifted_by_tau() {
        // v1 = 20 ft/s until t = 10, then v2 = 10 ft/s.
        let leader =
            Trajectory::from_knots(&[(0.0, 0.0), (10.0, 200.0), (20.0, 300.0)], 0).unwrap();
        let f = simulate_newell_follower(&leader, secs(1.5), ft(12.0));
        assert_eq!(f.samples()[1].time, 11.5);
        assert_eq!(f.segment_speed_at(11.4), Some(20.0));
        assert_eq!(f.segment_speed_at(11.6), Some(10.0));
    }

    #[test]
    fn trajectory_validation() {
        assert!(Trajectory::from_knots(&[(0.0, 0.0)], 0).is_err());
        assert!(Trajectory::from_knots(&[(0.0, 10.0), (1.0, 5.0)], 0).is_err());
        assert!(Trajectory::from_knots(&[(1.0, 0.0), (1.0, 5.0)], 0).is_err());
        let t = Trajectory::from_knots(&[(0.0, 0.0), (2.0, 10.0)], 0).unwrap();
        assert_eq!(t.position_at(1.0), Some(5.0));
        assert_eq!(t.position_at(2.5), None);
    }

    #[test]
    fn emergency_stop_examples() {
        let cfg = SimConfig::default();
        let a = Deceleration::from_fps2(9.40).unwrap();
        let s = simulate_emergency_stop(mph(10.0), a, &cfg).unwrap();
        assert!((s.stop_time.secs() - 1.56).abs() < 0.01);
        let zero = simulate_emergency_stop(Speed::ZERO, a, &cfg).unwrap();
        assert_eq!(
            (zero.stop_time.secs(), zero.stop_distance.feet()),
            (0.0, 0.0)
        );

        let a = Deceleration::from_fps2(12.36).unwrap();
        let s = simulate_emergency_stop(mph(15.0), a, &cfg).unwrap();
        let analytic: f64 = 22.0 * 22.0 / (2.0 * 12.36);
        assert!((analytic - 19.58).abs() < 0.01);
        assert!((s.stop_distance.feet() - analytic).abs() <= 0.1 * 22.0);
    }

    #[test]
    fn euler_first_order() {
        // 1.6 s stop, a multiple of every dt used below.
        let v0 = 44.0 / 3.0;
        let a = Deceleration::from_fps2(v0 / 1.6).unwrap();
        let analytic = v0 * 1.6 / 2.0;
        let err = |dt: f64| {
            let cfg = SimConfig {
                dt: secs(dt),
                ..SimConfig::default()
            };
            simulate_emergency_stop(Speed::from_fps(v0).unwrap(), a, &cfg)
                .unwrap()
                .stop_distance
                .feet()
                - analytic
        };
        let (e1, e2, e3) = (err(0.1), err(0.05), err(0.025));
        assert!(e1 > 0.0);
        assert!((e1 / e2 - 2.0).abs() < 1e-6, "{e1} {e2}");
        assert!((e2 / e3 - 2.0).abs() < 1e-6, "{e2} {e3}");
    }

    #[test]
    fn lane_change_boundary() {
        let p = ModelParams::default();
        let cfg = SimConfig::default();
        let v = mph(10.0);
        let tc = critical_gap(v, &p).unwrap().secs();

        let at = simulate_lane_change(secs(tc), v, &p, &cfg).unwrap();
        assert!(at.is_safe(), "{at:?}");
        assert!(!at.collision);
        assert!(at
            .checks
            .iter()
            .all(|c| c.slack.abs() < cfg.dt.secs() || c.name == "no_cut_in_before_ft_change"));

        let wide = simulate_lane_change(secs(tc + 10.0), v, &p, &cfg).unwrap();
        assert!(wide.is_safe());
        assert!(wide.checks[2].slack > 9.9);

        let tight = simulate_lane_change(secs(tc - 1.0), v, &p, &cfg).unwrap();
        assert!(!tight.is_safe());
        assert!(tight.collision);
        assert!(tight.min_spacing <= 0.0);
    }

    #[test]
    fn intersection_examples() {
        let p = ModelParams::default();
        let cfg = SimConfig::default();
        let v = mph(10.0);
        let need = intersection_clearance_straight(v, &p).unwrap().secs();
        let at = simulate_intersection(secs(need), Movement::Straight, v, &p, &cfg).unwrap();
        assert!(at.pass);
        assert!(at.margin > -1e-9 && at.margin < cfg.dt.secs());

        let none = simulate_intersection(Duration::ZERO, Movement::Left, v, &p, &cfg).unwrap();
        assert!(!none.pass);

        let short = simulate_intersection(secs(14.0), Movement::Straight, v, &p, &cfg).unwrap();
        assert!(!short.pass);
        assert!((short.required_time.unwrap() - 15.545).abs() < 1e-3);
    }

    #[test]
    fn bisection_matches_closed_form() {
        let p = ModelParams::default();
        let cfg = SimConfig::default();
        let report = verify_thresholds(
            &SpeedGrid::new(5.0, 15.0, 5.0).unwrap(),
            &[100.0, 200.0],
            &p,
            &cfg,
        )
        .unwrap();
        assert_eq!(report.checks.len(), 3 * 3 * 2);
        assert!(report.pass, "{}", report.max_abs_difference);
    }

    #[test]
    fn deterministic_events() {
        let p = ModelParams::default();
        let cfg = SimConfig::default();
        let a = simulate_lane_change(secs(21.3), mph(7.0), &p, &cfg).unwrap();
        let b = simulate_lane_change(secs(21.3), mph(7.0), &p, &cfg).unwrap();
        let bits = |o: &SafetyOutcome| {
            o.events
                .iter()
                .map(|e| (e.time.to_bits(), e.position.to_bits()))
                .collect::<Vec<_>>()
        };
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn zero_speed_rejected() {
        let p = ModelParams::default();
        let cfg = SimConfig::default();
        assert!(simulate_lane_change(secs(20.0), Speed::ZERO, &p, &cfg).is_err());
        assert!(simulate_intersection(secs(20.0), Movement::Left, Speed::ZERO, &p, &cfg).is_err());
    }

    proptest! {
        #[test]
        fn stop_within_dt_v0(v in 0.0f64..40.0, a in 1.0f64..20.0, dt in 0.01f64..0.5) {
            let cfg = SimConfig { dt: secs(dt), ..SimConfig::default() };
            let s = simulate_emergency_stop(Speed::from_fps(v).unwrap(), Deceleration::from_fps2(a).unwrap(), &cfg).unwrap();
            prop_assert!((s.stop_time.secs() - v / a).abs() <= 1e-9 * (1.0 + v / a));
            prop_assert!((s.stop_distance.feet() - v * v / (2.0 * a)).abs() <= dt * v + 1e-9);
        }
    }
}
