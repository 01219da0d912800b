//! Unit-safe scalar quantities and the vehicle/road parameters built on them.
//!
//! Canonical units are feet, seconds, ft/s and ft/s². Each newtype stores the
//! canonical value; miles per hour is accepted and produced only through the
//! explicit `*_mph` methods.

use core::f64::consts::PI;
use core::fmt;
use core::ops::{Add, Mul, Sub};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Feet per second in one mile per hour (5280 ft / 3600 s).
pub const FPS_PER_MPH: f64 = 5280.0 / 3600.0;

pub fn mph_to_fps(mph: f64) -> Result<f64> {
    if !mph.is_finite() || mph < 0.0 {
        return Err(Error::out_of_range("speed (mph)", "finite and >= 0", mph));
    }
    Ok(mph * FPS_PER_MPH)
}

pub fn fps_to_mph(fps: f64) -> f64 {
    fps / FPS_PER_MPH
}

fn check_non_negative(quantity: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::out_of_range(quantity, "finite and >= 0", value))
    }
}

fn check_positive(quantity: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::out_of_range(quantity, "finite and > 0", value))
    }
}

macro_rules! quantity {
    ($(#[$meta:meta])* $name:ident, $unit:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
        #[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(transparent))]
        pub struct $name(f64);

        impl $name {
            pub const ZERO: $name = $name(0.0);

            pub fn get(self) -> f64 {
                self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                if let Some(precision) = f.precision() {
                    write!(f, "{:.*} {}", precision, self.0, $unit)
                } else {
                    write!(f, "{} {}", self.0, $unit)
                }
            }
        }
    };
}

quantity!(
    /// Non-negative speed in ft/s.
    Speed,
    "ft/s"
);
quantity!(
    /// Non-negative length or gap in feet.
    Distance,
    "ft"
);
quantity!(
    /// Signed length in feet. Only used for gap errors and cross-track errors.
    SignedDistance,
    "ft"
);
quantity!(
    /// Non-negative time span in seconds.
    Duration,
    "s"
);
quantity!(
    /// Strictly positive deceleration magnitude in ft/s².
    Deceleration,
    "ft/s²"
);

impl Speed {
    pub fn from_fps(fps: f64) -> Result<Self> {
        check_non_negative("speed (ft/s)", fps).map(Speed)
    }

    pub fn from_mph(mph: f64) -> Result<Self> {
        mph_to_fps(mph).map(Speed)
    }

    pub(crate) const fn from_mph_const(mph: f64) -> Self {
        Speed(mph * FPS_PER_MPH)
    }

    pub fn fps(self) -> f64 {
        self.0
    }

    pub fn mph(self) -> f64 {
        fps_to_mph(self.0)
    }

    /// Distance covered in `t` at this speed.
    pub fn over(self, t: Duration) -> Distance {
        Distance(self.0 * t.0)
    }
}

impl Distance {
    pub fn from_feet(ft: f64) -> Result<Self> {
        check_non_negative("distance (ft)", ft).map(Distance)
    }

    pub(crate) const fn feet_const(ft: f64) -> Self {
        Distance(ft)
    }

    pub fn feet(self) -> f64 {
        self.0
    }

    /// Time needed to cover this distance at `v`.
    pub fn time_at(self, v: Speed) -> Result<Duration> {
        if v.0 <= 0.0 {
            return Err(Error::ZeroSpeed("travel time"));
        }
        Ok(Duration(self.0 / v.0))
    }
}

impl SignedDistance {
    pub fn from_feet(ft: f64) -> Result<Self> {
        if ft.is_finite() {
            Ok(SignedDistance(ft))
        } else {
            Err(Error::out_of_range("signed distance (ft)", "finite", ft))
        }
    }

    pub fn feet(self) -> f64 {
        self.0
    }

    pub fn abs(self) -> Distance {
        Distance(libm::fabs(self.0))
    }
}

impl Duration {
    pub fn from_secs(s: f64) -> Result<Self> {
        check_non_negative("duration (s)", s).map(Duration)
    }

    pub(crate) const fn secs_const(s: f64) -> Self {
        Duration(s)
    }

    pub fn secs(self) -> f64 {
        self.0
    }
}

impl Deceleration {
    pub fn from_fps2(a: f64) -> Result<Self> {
        check_positive("deceleration (ft/s²)", a).map(Deceleration)
    }

    pub(crate) const fn fps2_const(a: f64) -> Self {
        Deceleration(a)
    }

    pub fn fps2(self) -> f64 {
        self.0
    }

    /// Time to brake from `v` to a standstill.
    pub fn time_to_stop(self, v: Speed) -> Duration {
        Duration(v.0 / self.0)
    }
}

impl Add for Distance {
    type Output = Distance;
    fn add(self, rhs: Distance) -> Distance {
        Distance(self.0 + rhs.0)
    }
}

impl Add for Duration {
    type Output = Duration;
    fn add(self, rhs: Duration) -> Duration {
        Duration(self.0 + rhs.0)
    }
}

impl Sub for Distance {
    type Output = SignedDistance;
    fn sub(self, rhs: Distance) -> SignedDistance {
        SignedDistance(self.0 - rhs.0)
    }
}

impl Mul<f64> for Distance {
    type Output = Distance;
    fn mul(self, k: f64) -> Distance {
        debug_assert!(k >= 0.0);
        Distance(self.0 * k)
    }
}

/// Truck parameters. The default length of 40 ft applies to both LT and FT.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct VehicleSpec {
    pub length: Distance,
    pub max_decel: Deceleration,
    pub reaction_time: Duration,
}

impl VehicleSpec {
    pub const DEFAULT_LENGTH: Distance = Distance::feet_const(40.0);
    pub const DEFAULT_REACTION_TIME: Duration = Duration::secs_const(2.5);

    pub fn truck(max_decel: Deceleration) -> Self {
        VehicleSpec {
            length: Self::DEFAULT_LENGTH,
            max_decel,
            reaction_time: Self::DEFAULT_REACTION_TIME,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("vehicle length (ft)", self.length.0)?;
        check_positive("max deceleration (ft/s²)", self.max_decel.0)?;
        check_non_negative("reaction time (s)", self.reaction_time.0)?;
        Ok(())
    }
}

/// Intersection layout: `lanes_crossed` lanes of `lane_width` each, and a
/// left-turn arc whose radius is two lane widths plus `median_offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct RoadGeometry {
    pub lane_width: Distance,
    pub lanes_crossed: u32,
    pub median_offset: Distance,
}

impl Default for RoadGeometry {
    fn default() -> Self {
        RoadGeometry {
            lane_width: Distance(12.0),
            lanes_crossed: 4,
            median_offset: Distance(6.0),
        }
    }
}

impl RoadGeometry {
    pub fn validate(&self) -> Result<()> {
        check_positive("lane width (ft)", self.lane_width.0)?;
        if self.lanes_crossed < 1 {
            return Err(Error::out_of_range(
                "lanes crossed",
                ">= 1",
                f64::from(self.lanes_crossed),
            ));
        }
        check_non_negative("median offset (ft)", self.median_offset.0)?;
        Ok(())
    }

    /// Radius of the left-turn arc.
    pub fn turn_radius(&self) -> Distance {
        Distance(2.0 * self.lane_width.0 + self.median_offset.0)
    }
}

/// Length of a straight crossing: lanes crossed times lane width.
pub fn intersection_length(geom: &RoadGeometry) -> Distance {
    Distance(f64::from(geom.lanes_crossed) * geom.lane_width.0)
}

/// Quarter-circle arc traversed by a left turn.
pub fn left_turn_path_length(geom: &RoadGeometry) -> Distance {
    Distance(PI * geom.turn_radius().0 / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn mph_conversion() {
        assert_eq!(mph_to_fps(0.0).unwrap(), 0.0);
        assert!(close(mph_to_fps(10.0).unwrap(), 14.6667, 5e-5));
        assert_eq!(mph_to_fps(15.0).unwrap(), 22.0);
        assert!(mph_to_fps(-1.0).is_err());
        assert!(mph_to_fps(f64::NAN).is_err());
    }

    #[test]
    fn intersection_lengths() {
        let g = RoadGeometry::default();
        assert_eq!(intersection_length(&g).feet(), 48.0);
        let one = RoadGeometry {
            lanes_crossed: 1,
            ..g
        };
        assert_eq!(intersection_length(&one).feet(), 12.0);
        let narrow = RoadGeometry {
            lane_width: Distance(10.0),
            ..g
        };
        assert_eq!(intersection_length(&narrow).feet(), 40.0);
    }

    #[test]
    fn left_turn_arc() {
        let g = RoadGeometry::default();
        let arc = left_turn_path_length(&g).feet();
        assert!(close(arc, 47.124, 5e-4));
        assert_eq!((arc * 10.0).round() / 10.0, 47.1);

        let no_offset = RoadGeometry {
            median_offset: Distance::ZERO,
            ..g
        };
        assert!(close(
            left_turn_path_length(&no_offset).feet(),
            37.699,
            5e-4
        ));

        let degenerate = RoadGeometry {
            lane_width: Distance::ZERO,
            median_offset: Distance::ZERO,
            ..g
        };
        assert_eq!(left_turn_path_length(&degenerate).feet(), 0.0);
    }

    #[test]
    fn geometry_validation() {
        assert!(RoadGeometry::default().validate().is_ok());
        let zero_lanes = RoadGeometry {
            lanes_crossed: 0,
            ..RoadGeometry::default()
        };
        assert!(zero_lanes.validate().is_err());
        let v = VehicleSpec::truck(Deceleration::from_fps2(12.4).unwrap());
        assert_eq!(v.length.feet(), 40.0);
        assert_eq!(v.reaction_time.secs(), 2.5);
        assert!(v.validate().is_ok());
    }

    #[test]
    fn constructors_reject_bad_values() {
        assert!(Distance::from_feet(-0.1).is_err());
        assert!(Duration::from_secs(-1.0).is_err());
        assert!(Deceleration::from_fps2(0.0).is_err());
        assert!(Speed::from_fps(f64::INFINITY).is_err());
        assert!(SignedDistance::from_feet(-3.0).is_ok());
    }

    proptest! {
        #[test]
        fn mph_round_trip(mph in 0.0f64..200.0) {
            let back = Speed::from_mph(mph).unwrap().mph();
            prop_assert!((back - mph).abs() <= 1e-12 * mph.max(1.0));
        }

        #[test]
        fn turn_arc_increasing(w in 1.0f64..20.0, off in 0.0f64..20.0, dw in 0.01f64..5.0, doff in 0.01f64..5.0) {
            let g = RoadGeometry { lane_width: Distance(w), lanes_crossed: 4, median_offset: Distance(off) };
            let base = left_turn_path_length(&g).feet();
            let wider = RoadGeometry { lane_width: Distance(w + dw), ..g };
            let offset = RoadGeometry { median_offset: Distance(off + doff), ..g };
            prop_assert!(left_turn_path_length(&wider).feet() > base);
            prop_assert!(left_turn_path_length(&offset).feet() > base);
        }
    }
}
