//! Reader for the LT/FT telemetry CSV logs.
//!
//! The first row must be the documented header (matched after trimming,
//! case-folding and dropping internal whitespace). Bad data rows are skipped
//! and reported as warnings; only a missing or mismatched header is fatal.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;

use atma_core::log::{
    FollowerRecord, LeaderRecord, LogSession, ParseWarning, FOLLOWER_COLUMNS, LEADER_COLUMNS,
};

use crate::error::{AppError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Vehicle {
    Leader,
    Follower,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedLog<T> {
    pub records: Vec<T>,
    pub warnings: Vec<ParseWarning>,
}

fn normalize(name: &str) -> String {
    name.chars()
        .filter(|c| !c.is_whitespace())
        .flat_map(char::to_uppercase)
        .collect()
}

fn header_matches(
    found: &csv::StringRecord,
    expected: &[&str],
    vehicle: Vehicle,
) -> std::result::Result<(), String> {
    if found.len() != expected.len() {
        return Err(format!(
            "header has {} columns, expected {} ({})",
            found.len(),
            expected.len(),
            expected.join(",")
        ));
    }
    for (i, (got, want)) in found.iter().zip(expected).enumerate() {
        let got = normalize(got);
        // The LT tag column is printed as either VEH or LCB.
        let ok = got == normalize(want) || (vehicle == Vehicle::Leader && i == 1 && got == "LCB");
        if !ok {
            return Err(format!(
                "column {}: expected {want:?}, found {got:?}",
                i + 1
            ));
        }
    }
    Ok(())
}

fn parse_rows<T, R: Read>(
    reader: R,
    source: &str,
    vehicle: Vehicle,
    expected: &[&str],
    convert: impl Fn(&[&str]) -> atma_core::Result<T>,
) -> Result<ParsedLog<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows = rdr.records();

    let header = match rows.next() {
        None => return Err(AppError::format(source, "empty file: missing header")),
        Some(Err(e)) => return Err(AppError::format(source, format!("unreadable header: {e}"))),
        Some(Ok(h)) => h,
    };
    header_matches(&header, expected, vehicle).map_err(|m| AppError::format(source, m))?;

    let mut records = Vec::new();
    let mut warnings = Vec::new();
    for (i, row) in rows.enumerate() {
        let row_no = i + 1;
        let warn = |message: String| ParseWarning {
            source: source.to_string(),
            row: row_no,
            message,
        };
        match row {
            Ok(rec) => {
                let fields: Vec<&str> = rec.iter().collect();
                match convert(&fields) {
                    Ok(r) => records.push(r),
                    Err(e) => warnings.push(warn(e.to_string())),
                }
            }
            Err(e) => warnings.push(warn(e.to_string())),
        }
    }
    Ok(ParsedLog { records, warnings })
}

pub fn parse_leader_log<R: Read>(reader: R, source: &str) -> Result<ParsedLog<LeaderRecord>> {
    parse_rows(
        reader,
        source,
        Vehicle::Leader,
        &LEADER_COLUMNS,
        LeaderRecord::from_fields,
    )
}

pub fn parse_follower_log<R: Read>(reader: R, source: &str) -> Result<ParsedLog<FollowerRecord>> {
    parse_rows(
        reader,
        source,
        Vehicle::Follower,
        &FOLLOWER_COLUMNS,
        FollowerRecord::from_fields,
    )
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| AppError::io(path, e))
}

/// Reads one or more files of the same vehicle into a session.
pub fn load_session(paths: &[impl AsRef<Path>], vehicle: Vehicle) -> Result<LogSession> {
    let mut session = LogSession::default();
    for path in paths {
        let path = path.as_ref();
        let name = path.display().to_string();
        let file = open(path)?;
        match vehicle {
            Vehicle::Leader => {
                let parsed = parse_leader_log(file, &name)?;
                session.warnings.extend(parsed.warnings);
                session.extend_leader(&name, parsed.records);
            }
            Vehicle::Follower => {
                let parsed = parse_follower_log(file, &name)?;
                session.warnings.extend(parsed.warnings);
                session.extend_follower(&name, parsed.records);
            }
        }
    }
    Ok(session)
}

/// Writes records back out in the logged column order.
pub fn write_follower_csv<W: Write>(out: W, records: &[FollowerRecord]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FOLLOWER_COLUMNS)?;
    for r in records {
        w.write_record(r.to_fields())?;
    }
    w.flush()
}

pub fn write_leader_csv<W: Write>(out: W, records: &[LeaderRecord]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(LEADER_COLUMNS)?;
    for r in records {
        w.write_record(r.to_fields())?;
    }
    w.flush()
}
