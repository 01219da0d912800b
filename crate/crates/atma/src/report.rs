//! Renderers for guidance tables: JSON, CSV, aligned text and plot files.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use atma_core::guidance::{
    GuidanceThresholds, ModelParams, Threshold, ThresholdRow, ThresholdValues,
};
use atma_core::{Distance, Speed};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{AppError, Result};

/// Threshold values rounded the way they are usually quoted: whole feet and
/// seconds, SAF to two decimals.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Rounded {
    pub s_lt_ft: f64,
    pub s_ft_ft: f64,
    pub t_c_s: f64,
    pub t_straight_s: f64,
    pub t_turn_s: f64,
    pub saf: ThresholdValues,
}

fn round_to(x: f64, places: i32) -> f64 {
    let k = 10f64.powi(places);
    (x * k).round() / k
}

impl Rounded {
    pub fn of(row: &ThresholdRow) -> Self {
        let v = &row.values;
        let s = &row.saf;
        Rounded {
            s_lt_ft: v.s_lt.round(),
            s_ft_ft: v.s_ft.round(),
            t_c_s: v.t_c.round(),
            t_straight_s: v.t_straight.round(),
            t_turn_s: v.t_turn.round(),
            saf: ThresholdValues {
                s_lt: round_to(s.s_lt, 2),
                s_ft: round_to(s.s_ft, 2),
                t_c: round_to(s.t_c, 2),
                t_straight: round_to(s.t_straight, 2),
                t_turn: round_to(s.t_turn, 2),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RowOut {
    pub speed_mph: f64,
    pub s_lt_ft: f64,
    pub s_ft_ft: f64,
    pub t_c_s: f64,
    pub t_straight_s: f64,
    pub t_turn_s: f64,
    pub saf: ThresholdValues,
    pub paper_rounded: Rounded,
}

impl From<&ThresholdRow> for RowOut {
    fn from(r: &ThresholdRow) -> Self {
        RowOut {
            speed_mph: r.speed_mph,
            s_lt_ft: r.values.s_lt,
            s_ft_ft: r.values.s_ft,
            t_c_s: r.values.t_c,
            t_straight_s: r.values.t_straight,
            t_turn_s: r.values.t_turn,
            saf: r.saf,
            paper_rounded: Rounded::of(r),
        }
    }
}

/// A known mismatch between a formula value and a commonly quoted figure.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Note {
    pub id: &'static str,
    pub message: String,
}

pub const NOTE_FT_UPPER: &str = "s_ft_upper_endpoint";
pub const NOTE_CLEARANCE_200: &str = "clearance_200ft_at_10mph";
pub const NOTE_FT_SAF_LOW: &str = "s_ft_saf_low_endpoint";

/// Documented deviations, evaluated under the given parameters.
pub fn deviation_notes(p: &ModelParams) -> Result<Vec<Note>> {
    let mph = |v: f64| Speed::from_mph(v);
    let s_ft_15 = Threshold::FollowFt.evaluate(mph(15.0)?, p)?;
    let p200 = ModelParams {
        gap_command: Distance::from_feet(200.0)?,
        ..*p
    };
    let straight = Threshold::ClearanceStraight.evaluate(mph(10.0)?, &p200)?;
    let turn = Threshold::ClearanceTurn.evaluate(mph(10.0)?, &p200)?;
    let saf_ft_5 = Threshold::FollowFt.saf(5.0, 1.0, p)?;
    Ok(vec![
        Note {
            id: NOTE_FT_UPPER,
            message: format!(
                "FT minimum follow distance at 15 mph evaluates to {s_ft_15:.1} ft; the quoted upper endpoint of 30 ft is not reproduced by v²/2α + ε"
            ),
        },
        Note {
            id: NOTE_CLEARANCE_200,
            message: format!(
                "with a 200 ft gap at 10 mph the clearance formulas give {straight:.1} s (straight) and {turn:.1} s (left turn); the quoted 25 s is not reproduced"
            ),
        },
        Note {
            id: NOTE_FT_SAF_LOW,
            message: format!(
                "FT follow-distance SAF at 5 mph with a 1 mph forward difference is {saf_ft_5:.2}; the quoted low endpoint 0.67 is not reproduced"
            ),
        },
    ])
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdReport<'a> {
    pub config: &'a RunConfig,
    pub saf_step_mph: f64,
    pub rows: Vec<RowOut>,
    pub notes: Vec<Note>,
}

impl<'a> ThresholdReport<'a> {
    pub fn new(config: &'a RunConfig, table: &GuidanceThresholds, p: &ModelParams) -> Result<Self> {
        Ok(ThresholdReport {
            config,
            saf_step_mph: table.saf_step_mph,
            rows: table.rows.iter().map(RowOut::from).collect(),
            notes: deviation_notes(p)?,
        })
    }
}

pub const CSV_HEADER: [&str; 11] = [
    "speed_mph",
    "s_lt_ft",
    "s_ft_ft",
    "t_c_s",
    "t_straight_s",
    "t_turn_s",
    "saf_s_lt",
    "saf_s_ft",
    "saf_t_c",
    "saf_t_straight",
    "saf_t_turn",
];

pub fn write_csv<W: Write>(out: W, table: &GuidanceThresholds) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in &table.rows {
        let mut fields = vec![r.speed_mph.to_string()];
        fields.extend(Threshold::ALL.iter().map(|&t| r.values.get(t).to_string()));
        fields.extend(Threshold::ALL.iter().map(|&t| r.saf.get(t).to_string()));
        w.write_record(&fields)?;
    }
    w.flush()
}

pub fn render_table(table: &GuidanceThresholds) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>6}  {:>8}  {:>8}  {:>7}  {:>10}  {:>7}  {:>7}  {:>7}  {:>7}  {:>7}  {:>7}",
        "mph",
        "s_lt ft",
        "s_ft ft",
        "t_c s",
        "t_straight",
        "t_turn",
        "saf_lt",
        "saf_ft",
        "saf_tc",
        "saf_str",
        "saf_trn"
    );
    for r in &table.rows {
        let v = &r.values;
        let f = &r.saf;
        let _ = writeln!(
            s,
            "{:>6.1}  {:>8.2}  {:>8.2}  {:>7.2}  {:>10.2}  {:>7.2}  {:>7.3}  {:>7.3}  {:>7.3}  {:>7.3}  {:>7.3}",
            r.speed_mph, v.s_lt, v.s_ft, v.t_c, v.t_straight, v.t_turn, f.s_lt, f.s_ft, f.t_c, f.t_straight, f.t_turn
        );
    }
    s
}

/// One two-column `speed_mph value` file per threshold and per SAF curve.
pub fn write_plot_files(dir: &Path, table: &GuidanceThresholds) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    let mut written = Vec::new();
    for t in Threshold::ALL {
        for (name, points) in [
            (
                format!("{}.txt", t.name()),
                table.column(t).collect::<Vec<_>>(),
            ),
            (
                format!("saf_{}.txt", t.name()),
                table.saf_column(t).collect::<Vec<_>>(),
            ),
        ] {
            let path = dir.join(name);
            let mut body = String::new();
            for (x, y) in points {
                let _ = writeln!(body, "{x} {y}");
            }
            fs::write(&path, body).map_err(|e| AppError::io(&path, e))?;
            written.push(path);
        }
    }
    Ok(written)
}
