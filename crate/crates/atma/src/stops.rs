//! Calibration inputs: emergency-stop runs and gap-error series.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use atma_core::calibration::StopTestRun;
use atma_core::log::{gap_error_series, ModeFilter, FOLLOWER_COLUMNS};
use atma_core::{Distance, Duration, SignedDistance, Speed};
use serde::Deserialize;

use crate::error::{AppError, Result};
use crate::logfile::parse_follower_log;

pub const STOP_COLUMNS: [&str; 6] = [
    "button",
    "set_gap",
    "speed_mph",
    "run",
    "stop_time_s",
    "stop_dist_ft",
];

#[derive(Debug, Deserialize)]
struct StopRow {
    button: String,
    set_gap: String,
    speed_mph: f64,
    run: u32,
    stop_time_s: f64,
    stop_dist_ft: f64,
}

pub fn read_stop_runs<R: Read>(reader: R, source: &str) -> Result<Vec<StopTestRun>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| AppError::format(source, e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != STOP_COLUMNS {
        return Err(AppError::format(
            source,
            format!("expected header {}", STOP_COLUMNS.join(",")),
        ));
    }
    let mut runs = Vec::new();
    for (i, row) in rdr.deserialize::<StopRow>().enumerate() {
        let row = row.map_err(|e| AppError::format(source, format!("row {}: {e}", i + 1)))?;
        let bad = |e: atma_core::Error| AppError::format(source, format!("row {}: {e}", i + 1));
        runs.push(StopTestRun {
            button: row.button,
            set_gap: row.set_gap,
            set_speed: Speed::from_mph(row.speed_mph).map_err(bad)?,
            run: row.run,
            stop_time: Duration::from_secs(row.stop_time_s).map_err(bad)?,
            stop_distance: Distance::from_feet(row.stop_dist_ft).map_err(bad)?,
        });
    }
    if runs.is_empty() {
        return Err(AppError::format(source, "no stop-test runs"));
    }
    Ok(runs)
}

pub fn load_stop_runs(path: &Path) -> Result<Vec<StopTestRun>> {
    let file = File::open(path).map_err(|e| AppError::io(path, e))?;
    read_stop_runs(file, &path.display().to_string())
}

/// Gap errors come either from a single-column CSV headed `gap_error_ft`
/// or from a follower log, in which case `modes` selects the rows.
pub fn read_gap_errors<R: Read>(
    mut reader: R,
    source: &str,
    modes: ModeFilter,
) -> Result<Vec<SignedDistance>> {
    let mut text = String::new();
    reader
        .read_to_string(&mut text)
        .map_err(|e| AppError::format(source, e.to_string()))?;
    let first = text.lines().next().unwrap_or("").trim();
    if first.split(',').count() == FOLLOWER_COLUMNS.len() {
        let parsed = parse_follower_log(text.as_bytes(), source)?;
        for w in &parsed.warnings {
            eprintln!("warning: {w}");
        }
        return Ok(gap_error_series(&parsed.records, modes));
    }
    if !first.eq_ignore_ascii_case("gap_error_ft") {
        return Err(AppError::format(
            source,
            "expected a gap_error_ft column or a follower log header",
        ));
    }
    text.lines()
        .enumerate()
        .skip(1)
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<f64>()
                .ok()
                .and_then(|v| SignedDistance::from_feet(v).ok())
                .ok_or_else(|| AppError::format(source, format!("row {i}: cannot parse {l:?}")))
        })
        .collect()
}

pub fn load_gap_errors(path: &Path, modes: ModeFilter) -> Result<Vec<SignedDistance>> {
    let file = File::open(path).map_err(|e| AppError::io(path, e))?;
    read_gap_errors(file, &path.display().to_string(), modes)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE: &str = "button,set_gap,speed_mph,run,stop_time_s,stop_dist_ft
LT Internal,>=100',10,1,1.56,11.5
LT Internal,>=100',10,2,1.56,15.75
";

    #[test]
    fn reads_runs() {
        let runs = read_stop_runs(TABLE.as_bytes(), "t").unwrap();
        assert_eq!(runs.len(), 2);
        assert_eq!(runs[1].stop_distance.feet(), 15.75);
        assert_eq!(
            runs[0].set_speed.fps(),
            Speed::from_mph(10.0).unwrap().fps()
        );
    }

    #[test]
    fn rejects_empty_and_bad() {
        let header_only = STOP_COLUMNS.join(",");
        assert!(read_stop_runs(header_only.as_bytes(), "t").is_err());
        assert!(read_stop_runs(&b""[..], "t").is_err());
        let negative = TABLE.replace("1.56,11.5", "-1.56,11.5");
        assert!(read_stop_runs(negative.as_bytes(), "t").is_err());
    }

    #[test]
    fn gap_error_column() {
        let e =
            read_gap_errors("gap_error_ft\n1.5\n-2\n\n".as_bytes(), "g", ModeFilter::ALL).unwrap();
        assert_eq!(
            e.iter().map(|x| x.feet()).collect::<Vec<_>>(),
            vec![1.5, -2.0]
        );
        assert!(read_gap_errors("x\n1\n".as_bytes(), "g", ModeFilter::ALL).is_err());
    }
}
