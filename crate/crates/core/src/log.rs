//! Telemetry record types for the leader (LT) and follower (FT) trucks.
//!
//! Rows are converted from already-split text fields; reading files, header
//! validation and warning collection are handled by the `atma` crate. The
//! functions here are the analysis side: gap-error extraction and session
//! summaries.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::calibration::population_sd;
use crate::error::{Error, Result};
use crate::units::{Distance, SignedDistance};

pub const LEADER_COLUMNS: [&str; 9] = [
    "TIMESTAMP",
    "VEH",
    "CRUMB",
    "STAMP",
    "LAT",
    "LON",
    "ALT",
    "HEADING",
    "VELOCITY",
];

pub const FOLLOWER_COLUMNS: [&str; 19] = [
    "TIMESTAMP",
    "VEH",
    "CRUMB",
    "STAMP",
    "LAT",
    "LON",
    "ALT",
    "HEADING",
    "HDG (Desired)",
    "VELOCITY",
    "VEL (Desired)",
    "GAP",
    "GAP (Desired)",
    "#SATS",
    "VALID",
    "CTE",
    "ACCEL",
    "STEER",
    "STATE",
];

/// FT operating state as logged in the STATE column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(
    feature = "serde",
    derive(Serialize, Deserialize),
    serde(rename_all = "UPPERCASE")
)]
pub enum OperatingMode {
    Idle,
    Rollout,
    Run,
}

impl OperatingMode {
    pub const ALL: [OperatingMode; 3] = [
        OperatingMode::Idle,
        OperatingMode::Rollout,
        OperatingMode::Run,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OperatingMode::Idle => "IDLE",
            OperatingMode::Rollout => "ROLLOUT",
            OperatingMode::Run => "RUN",
        }
    }
}

impl FromStr for OperatingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "IDLE" => Ok(OperatingMode::Idle),
            "ROLLOUT" => Ok(OperatingMode::Rollout),
            "RUN" => Ok(OperatingMode::Run),
            other => Err(Error::Field {
                column: "STATE",
                reason: format!("unknown operating mode {other:?}"),
            }),
        }
    }
}

impl fmt::Display for OperatingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which operating modes feed an analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ModeFilter {
    pub idle: bool,
    pub rollout: bool,
    pub run: bool,
}

impl ModeFilter {
    pub const ALL: ModeFilter = ModeFilter {
        idle: true,
        rollout: true,
        run: true,
    };
    pub const RUN_ONLY: ModeFilter = ModeFilter {
        idle: false,
        rollout: false,
        run: true,
    };

    pub fn accepts(self, mode: OperatingMode) -> bool {
        match mode {
            OperatingMode::Idle => self.idle,
            OperatingMode::Rollout => self.rollout,
            OperatingMode::Run => self.run,
        }
    }
}

/// Calibration only looks at autonomous driving unless told otherwise.
impl Default for ModeFilter {
    fn default() -> Self {
        ModeFilter::RUN_ONLY
    }
}

impl FromStr for ModeFilter {
    type Err = Error;

    /// `all`, or a comma-separated list of mode names (case-insensitive).
    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("all") {
            return Ok(ModeFilter::ALL);
        }
        let mut filter = ModeFilter {
            idle: false,
            rollout: false,
            run: false,
        };
        for token in s.split(',') {
            let upper = token.trim().to_ascii_uppercase();
            match upper.parse::<OperatingMode>()? {
                OperatingMode::Idle => filter.idle = true,
                OperatingMode::Rollout => filter.rollout = true,
                OperatingMode::Run => filter.run = true,
            }
        }
        Ok(filter)
    }
}

/// Wall-clock time of day, kept in milliseconds since midnight.
///
/// Logs print tenths of a second and repeat values, so the GPS stamp column is
/// the time axis used for analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimeOfDay(u32);

#[cfg(feature = "serde")]
impl Serialize for TimeOfDay {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[cfg(feature = "serde")]
impl<'de> Deserialize<'de> for TimeOfDay {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let s = <alloc::string::String as Deserialize>::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl TimeOfDay {
    pub fn from_millis(ms: u32) -> Self {
        TimeOfDay(ms)
    }

    pub fn millis(self) -> u32 {
        self.0
    }
}

impl FromStr for TimeOfDay {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: &str| Error::Field {
            column: "TIMESTAMP",
            reason: format!("{reason}: {s:?}"),
        };
        let mut parts = s.trim().split(':');
        let (Some(h), Some(m), Some(sec), None) =
            (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(bad("expected hh:mm:ss.f"));
        };
        let h: u32 = h.parse().map_err(|_| bad("bad hour"))?;
        let m: u32 = m.parse().map_err(|_| bad("bad minute"))?;
        let (whole, frac) = sec.split_once('.').unwrap_or((sec, ""));
        let whole: u32 = whole.parse().map_err(|_| bad("bad second"))?;
        if h > 23 || m > 59 || whole > 60 {
            return Err(bad("time out of range"));
        }
        let mut ms = 0u32;
        let mut scale = 100u32;
        for c in frac.chars() {
            let d = c.to_digit(10).ok_or_else(|| bad("bad fractional second"))?;
            ms += d * scale;
            scale /= 10;
        }
        Ok(TimeOfDay(((h * 60 + m) * 60 + whole) * 1000 + ms))
    }
}

impl fmt::Display for TimeOfDay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let total = self.0;
        let (h, rem) = (total / 3_600_000, total % 3_600_000);
        let (m, rem) = (rem / 60_000, rem % 60_000);
        let (s, ms) = (rem / 1000, rem % 1000);
        if ms % 100 == 0 {
            write!(f, "{h:02}:{m:02}:{s:02}.{}", ms / 100)
        } else {
            write!(f, "{h:02}:{m:02}:{s:02}.{ms:03}")
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct LeaderRecord {
    pub timestamp: TimeOfDay,
    pub veh_tag: String,
    pub crumb_id: u64,
    /// GPS time stamp in milliseconds.
    pub gps_stamp: u64,
    pub lat: f64,
    pub lon: f64,
    pub alt: f64,
    pub heading: f64,
    /// As logged. Units are not reliable in the field files.
    pub velocity: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FollowerRecord {
    pub timestamp: TimeOfDay,
    pub veh_tag: String,
    pub crumb_id: u64,
    pub gps_stamp: u64,
    pub lat: f64,
    pub lon: f64,
    pub alt: f64,
    pub heading: f64,
    pub heading_desired: f64,
    pub velocity: f64,
    pub velocity_desired: f64,
    pub gap: Distance,
    pub gap_desired: Distance,
    pub num_sats: u32,
    pub gps_valid: bool,
    /// Cross-track error: lateral deviation from the leader's path.
    pub cte: SignedDistance,
    pub accel_cmd: f64,
    pub steer_cmd: f64,
    pub state: OperatingMode,
}

fn field<T: FromStr>(column: &'static str, raw: &str) -> Result<T> {
    raw.trim().parse().map_err(|_| Error::Field {
        column,
        reason: format!("cannot parse {:?}", raw.trim()),
    })
}

fn finite(column: &'static str, raw: &str) -> Result<f64> {
    let v: f64 = field(column, raw)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Field {
            column,
            reason: format!("non-finite value {v}"),
        })
    }
}

fn heading(column: &'static str, raw: &str) -> Result<f64> {
    let v = finite(column, raw)?;
    if (0.0..360.0).contains(&v) {
        Ok(v)
    } else {
        Err(Error::Field {
            column,
            reason: format!("heading {v} outside [0, 360)"),
        })
    }
}

fn gap(column: &'static str, raw: &str) -> Result<Distance> {
    Distance::from_feet(finite(column, raw)?).map_err(|_| Error::Field {
        column,
        reason: format!("negative gap {:?}", raw.trim()),
    })
}

fn flag(column: &'static str, raw: &str) -> Result<bool> {
    match raw.trim() {
        "1" => Ok(true),
        "0" => Ok(false),
        other => Err(Error::Field {
            column,
            reason: format!("expected 0 or 1, got {other:?}"),
        }),
    }
}

fn check_count(fields: &[&str], expected: usize) -> Result<()> {
    if fields.len() == expected {
        Ok(())
    } else {
        Err(Error::FieldCount {
            expected,
            found: fields.len(),
        })
    }
}

impl LeaderRecord {
    pub fn from_fields(fields: &[&str]) -> Result<Self> {
        check_count(fields, LEADER_COLUMNS.len())?;
        Ok(LeaderRecord {
            timestamp: field("TIMESTAMP", fields[0])?,
            veh_tag: fields[1].trim().to_string(),
            crumb_id: field("CRUMB", fields[2])?,
            gps_stamp: field("STAMP", fields[3])?,
            lat: finite("LAT", fields[4])?,
            lon: finite("LON", fields[5])?,
            alt: finite("ALT", fields[6])?,
            heading: heading("HEADING", fields[7])?,
            velocity: finite("VELOCITY", fields[8])?,
        })
    }

    pub fn to_fields(&self) -> Vec<String> {
        alloc::vec![
            self.timestamp.to_string(),
            self.veh_tag.clone(),
            self.crumb_id.to_string(),
            self.gps_stamp.to_string(),
            self.lat.to_string(),
            self.lon.to_string(),
            self.alt.to_string(),
            self.heading.to_string(),
            self.velocity.to_string(),
        ]
    }
}

impl FollowerRecord {
    pub fn from_fields(fields: &[&str]) -> Result<Self> {
        check_count(fields, FOLLOWER_COLUMNS.len())?;
        let num_sats: u32 = field("#SATS", fields[13])?;
        Ok(FollowerRecord {
            timestamp: field("TIMESTAMP", fields[0])?,
            veh_tag: fields[1].trim().to_string(),
            crumb_id: field("CRUMB", fields[2])?,
            gps_stamp: field("STAMP", fields[3])?,
            lat: finite("LAT", fields[4])?,
            lon: finite("LON", fields[5])?,
            alt: finite("ALT", fields[6])?,
            heading: heading("HEADING", fields[7])?,
            heading_desired: heading("HDG (Desired)", fields[8])?,
            velocity: finite("VELOCITY", fields[9])?,
            velocity_desired: finite("VEL (Desired)", fields[10])?,
            gap: gap("GAP", fields[11])?,
            gap_desired: gap("GAP (Desired)", fields[12])?,
            num_sats,
            gps_valid: flag("VALID", fields[14])?,
            cte: SignedDistance::from_feet(finite("CTE", fields[15])?)?,
            accel_cmd: finite("ACCEL", fields[16])?,
            steer_cmd: finite("STEER", fields[17])?,
            state: fields[18].parse()?,
        })
    }

    pub fn to_fields(&self) -> Vec<String> {
        alloc::vec![
            self.timestamp.to_string(),
            self.veh_tag.clone(),
            self.crumb_id.to_string(),
            self.gps_stamp.to_string(),
            self.lat.to_string(),
            self.lon.to_string(),
            self.alt.to_string(),
            self.heading.to_string(),
            self.heading_desired.to_string(),
            self.velocity.to_string(),
            self.velocity_desired.to_string(),
            self.gap.feet().to_string(),
            self.gap_desired.feet().to_string(),
            self.num_sats.to_string(),
            if self.gps_valid { "1" } else { "0" }.to_string(),
            self.cte.feet().to_string(),
            self.accel_cmd.to_string(),
            self.steer_cmd.to_string(),
            self.state.to_string(),
        ]
    }

    /// Desired minus actual gap. Positive means the FT is closer than commanded.
    pub fn gap_error(&self) -> SignedDistance {
        self.gap_desired - self.gap
    }
}

/// Positional problem found while reading a log. `row` counts data rows from 1.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ParseWarning {
    pub source: String,
    pub row: usize,
    pub message: String,
}

impl fmt::Display for ParseWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: row {}: {}", self.source, self.row, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct LogSession {
    pub leader: Vec<LeaderRecord>,
    pub follower: Vec<FollowerRecord>,
    pub sources: Vec<String>,
    pub warnings: Vec<ParseWarning>,
}

impl LogSession {
    /// Appends records and flags any GPS stamp that steps backwards.
    pub fn extend_leader(&mut self, source: &str, records: Vec<LeaderRecord>) {
        let stamps: Vec<u64> = records.iter().map(|r| r.gps_stamp).collect();
        self.flag_order(source, &stamps);
        self.sources.push(source.to_string());
        self.leader.extend(records);
    }

    pub fn extend_follower(&mut self, source: &str, records: Vec<FollowerRecord>) {
        let stamps: Vec<u64> = records.iter().map(|r| r.gps_stamp).collect();
        self.flag_order(source, &stamps);
        self.sources.push(source.to_string());
        self.follower.extend(records);
    }

    fn flag_order(&mut self, source: &str, stamps: &[u64]) {
        for (i, pair) in stamps.windows(2).enumerate() {
            if pair[1] < pair[0] {
                self.warnings.push(ParseWarning {
                    source: source.to_string(),
                    row: i + 2,
                    message: format!("GPS stamp decreases from {} to {}", pair[0], pair[1]),
                });
            }
        }
    }
}

/// `gap_desired - gap` for every record whose state passes `modes`.
pub fn gap_error_series(records: &[FollowerRecord], modes: ModeFilter) -> Vec<SignedDistance> {
    records
        .iter()
        .filter(|r| modes.accepts(r.state))
        .map(FollowerRecord::gap_error)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ModeCounts {
    pub idle: usize,
    pub rollout: usize,
    pub run: usize,
}

/// First and last GPS stamp of a record sequence, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct TimeSpan {
    pub first_ms: u64,
    pub last_ms: u64,
    pub seconds: f64,
}

impl TimeSpan {
    fn of(stamps: impl Iterator<Item = u64> + Clone) -> Option<TimeSpan> {
        let first = stamps.clone().min()?;
        let last = stamps.max()?;
        Some(TimeSpan {
            first_ms: first,
            last_ms: last,
            seconds: (last - first) as f64 / 1000.0,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SessionSummary {
    pub leader_records: usize,
    pub follower_records: usize,
    pub mode_counts: ModeCounts,
    pub leader_span: Option<TimeSpan>,
    pub follower_span: Option<TimeSpan>,
    pub max_abs_cte_ft: Option<f64>,
    pub gap_error_mean_ft: Option<f64>,
    /// Population SD (divisor n).
    pub gap_error_sd_ft: Option<f64>,
    pub warnings: usize,
}

pub fn session_summary(session: &LogSession) -> SessionSummary {
    let mut mode_counts = ModeCounts::default();
    for r in &session.follower {
        match r.state {
            OperatingMode::Idle => mode_counts.idle += 1,
            OperatingMode::Rollout => mode_counts.rollout += 1,
            OperatingMode::Run => mode_counts.run += 1,
        }
    }
    let max_abs_cte_ft = session
        .follower
        .iter()
        .map(|r| r.cte.abs().feet())
        .fold(None, |acc: Option<f64>, x| {
            Some(acc.map_or(x, |a| a.max(x)))
        });

    let errors: Vec<f64> = gap_error_series(&session.follower, ModeFilter::ALL)
        .into_iter()
        .map(SignedDistance::feet)
        .collect();
    let gap_error_mean_ft = if errors.is_empty() {
        None
    } else {
        Some(errors.iter().sum::<f64>() / errors.len() as f64)
    };

    SessionSummary {
        leader_records: session.leader.len(),
        follower_records: session.follower.len(),
        mode_counts,
        leader_span: TimeSpan::of(session.leader.iter().map(|r| r.gps_stamp)),
        follower_span: TimeSpan::of(session.follower.iter().map(|r| r.gps_stamp)),
        max_abs_cte_ft,
        gap_error_mean_ft,
        gap_error_sd_ft: population_sd(&errors).ok(),
        warnings: session.warnings.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    const LEADER_ROW: &str = "12:32:35.8,LDR,6630,18323570,38.69311,-93.261,-0.024,280.004,281";
    const FOLLOWER_ROW: &str =
        "12:29:08.9,FLW,0,18290890,38.69359,-93.2615,233.84,103.473,105.085,0.01,3.97,28.48,30.5,19,1,0,-100,0,IDLE";

    fn split(row: &str) -> Vec<&str> {
        row.split(',').collect()
    }

    fn follower_with(gap: f64, desired: f64, cte: f64, state: OperatingMode) -> FollowerRecord {
        let mut r = FollowerRecord::from_fields(&split(FOLLOWER_ROW)).unwrap();
        r.gap = Distance::from_feet(gap).unwrap();
        r.gap_desired = Distance::from_feet(desired).unwrap();
        r.cte = SignedDistance::from_feet(cte).unwrap();
        r.state = state;
        r
    }

    #[test]
    fn leader_row() {
        let r = LeaderRecord::from_fields(&split(LEADER_ROW)).unwrap();
        assert_eq!(r.crumb_id, 6630);
        assert_eq!(r.heading, 280.004);
        assert_eq!(r.gps_stamp, 18323570);
        assert_eq!(r.veh_tag, "LDR");
        assert_eq!(r.timestamp.to_string(), "12:32:35.8");
        assert_eq!(r.to_fields().join(","), LEADER_ROW);
    }

    #[test]
    fn follower_row() {
        let r = FollowerRecord::from_fields(&split(FOLLOWER_ROW)).unwrap();
        assert_eq!(r.gap.feet(), 28.48);
        assert_eq!(r.gap_desired.feet(), 30.5);
        assert_eq!(r.cte.feet(), 0.0);
        assert_eq!(r.state, OperatingMode::Idle);
        assert!(r.gps_valid);
        assert_eq!(r.num_sats, 19);
        assert_eq!(r.to_fields().join(","), FOLLOWER_ROW);
    }

    #[test]
    fn field_errors() {
        let mut f = split(FOLLOWER_ROW);
        f[18] = "PAUSED";
        assert!(FollowerRecord::from_fields(&f).is_err());
        f[18] = "RUN";
        assert_eq!(
            FollowerRecord::from_fields(&f).unwrap().state,
            OperatingMode::Run
        );
        f[14] = "0";
        assert!(!FollowerRecord::from_fields(&f).unwrap().gps_valid);
        f[14] = "2";
        assert!(FollowerRecord::from_fields(&f).is_err());
        assert_eq!(
            LeaderRecord::from_fields(&f[..8]),
            Err(Error::FieldCount {
                expected: 9,
                found: 8
            })
        );
        let mut l = split(LEADER_ROW);
        l[7] = "360";
        assert!(LeaderRecord::from_fields(&l).is_err());
    }

    #[test]
    fn timestamps() {
        let t: TimeOfDay = "12:29:08.9".parse().unwrap();
        assert_eq!(t.millis(), ((12 * 60 + 29) * 60 + 8) * 1000 + 900);
        assert_eq!(t.to_string(), "12:29:08.9");
        let whole: TimeOfDay = "00:00:01".parse().unwrap();
        assert_eq!(whole.millis(), 1000);
        assert!("25:00:00.0".parse::<TimeOfDay>().is_err());
        assert!("12:00".parse::<TimeOfDay>().is_err());
    }

    #[test]
    fn gap_errors() {
        let r = FollowerRecord::from_fields(&split(FOLLOWER_ROW)).unwrap();
        let e = gap_error_series(core::slice::from_ref(&r), ModeFilter::ALL);
        assert_eq!(e.len(), 1);
        assert!((e[0].feet() - 2.02).abs() < 1e-12);

        let equal = follower_with(50.0, 50.0, 0.0, OperatingMode::Run);
        assert_eq!(equal.gap_error().feet(), 0.0);
        let wide = follower_with(103.0, 100.0, 0.0, OperatingMode::Run);
        assert_eq!(wide.gap_error().feet(), -3.0);

        // default filter drops the IDLE row
        assert!(gap_error_series(&[r], ModeFilter::default()).is_empty());
    }

    #[test]
    fn mode_filter_parsing() {
        assert_eq!("all".parse::<ModeFilter>().unwrap(), ModeFilter::ALL);
        assert_eq!("run".parse::<ModeFilter>().unwrap(), ModeFilter::RUN_ONLY);
        let f: ModeFilter = "RUN, rollout".parse().unwrap();
        assert!(f.run && f.rollout && !f.idle);
        assert!("walk".parse::<ModeFilter>().is_err());
    }

    #[test]
    fn summary_counts_and_cte() {
        let ctes = [-0.3, -0.1, 0.0, 0.1, 0.2, 0.25, 0.3, 0.4, 0.45, 0.5];
        let follower: Vec<FollowerRecord> = ctes
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let mode = if i < 3 {
                    OperatingMode::Rollout
                } else {
                    OperatingMode::Idle
                };
                follower_with(30.0, 30.5, c, mode)
            })
            .collect();
        let session = LogSession {
            follower,
            ..LogSession::default()
        };
        let s = session_summary(&session);
        assert_eq!(s.mode_counts.run, 0);
        assert_eq!(s.mode_counts.rollout, 3);
        assert_eq!(s.max_abs_cte_ft, Some(0.5));
        assert!((s.gap_error_mean_ft.unwrap() - 0.5).abs() < 1e-12);
        assert!(s.gap_error_sd_ft.unwrap().abs() < 1e-12);
    }

    #[test]
    fn out_of_order_stamps_warn() {
        let mut a = LeaderRecord::from_fields(&split(LEADER_ROW)).unwrap();
        let b = a.clone();
        a.gps_stamp += 100;
        let mut session = LogSession::default();
        session.extend_leader("lt.csv", vec![a, b]);
        assert_eq!(session.warnings.len(), 1);
        assert_eq!(session.warnings[0].row, 2);
        assert_eq!(session.leader.len(), 2);
    }
}
