//! Vehicle capability estimates from field tests.
//!
//! Deceleration comes from emergency-stop runs under a constant-deceleration
//! assumption (`a = v / t`, using stop time because it is measured more
//! reliably than stop distance). Follow-distance error comes from the upper
//! tail of the positive gap errors.

use alloc::string::String;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{Deceleration, Distance, Duration, SignedDistance, Speed};

/// Standard deviation with divisor `n`.
pub fn population_sd(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty("standard deviation needs at least one sample"));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    Ok(libm::sqrt(var))
}

fn mean(samples: &[f64]) -> f64 {
    samples.iter().sum::<f64>() / samples.len() as f64
}

/// One emergency-stop run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct StopTestRun {
    pub button: String,
    pub set_gap: String,
    pub set_speed: Speed,
    pub run: u32,
    pub stop_time: Duration,
    pub stop_distance: Distance,
}

impl StopTestRun {
    pub fn label(&self) -> String {
        alloc::format!(
            "{} {:.0} mph run {}",
            self.button,
            self.set_speed.mph(),
            self.run
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct RunDecel {
    pub run: u32,
    pub decel: Deceleration,
    /// `v² / 2d` from the measured stop distance. Diagnostic only.
    pub decel_from_distance: Option<f64>,
}

/// Statistics for all runs sharing a set speed.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SpeedGroup {
    pub set_speed_mph: f64,
    pub runs: Vec<RunDecel>,
    pub avg_decel: Deceleration,
    pub max_decel: Deceleration,
    pub sd_stop_time: f64,
    pub sd_stop_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct DecelCalibration {
    /// Groups in ascending set-speed order; runs within a group by run index.
    pub groups: Vec<SpeedGroup>,
    pub avg_decel: Deceleration,
    /// Largest per-run deceleration. This is the recommended `alpha_lt`.
    pub max_decel: Deceleration,
}

impl DecelCalibration {
    pub fn per_run_decel(&self) -> impl Iterator<Item = Deceleration> + '_ {
        self.groups
            .iter()
            .flat_map(|g| g.runs.iter().map(|r| r.decel))
    }
}

fn max_of(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(f64::NEG_INFINITY, f64::max)
}

pub fn calibrate_deceleration(runs: &[StopTestRun]) -> Result<DecelCalibration> {
    if runs.is_empty() {
        return Err(Error::Empty("no stop-test runs"));
    }
    for r in runs {
        if !(r.stop_time.secs() > 0.0) {
            return Err(Error::InvalidRun {
                label: r.label(),
                stop_time: r.stop_time.secs(),
            });
        }
    }

    let mut sorted: Vec<&StopTestRun> = runs.iter().collect();
    sorted.sort_by(|a, b| {
        a.set_speed
            .fps()
            .total_cmp(&b.set_speed.fps())
            .then(a.run.cmp(&b.run))
    });

    let mut groups: Vec<SpeedGroup> = Vec::new();
    let mut start = 0;
    while start < sorted.len() {
        let speed = sorted[start].set_speed;
        let end = start
            + sorted[start..]
                .iter()
                .take_while(|r| r.set_speed == speed)
                .count();
        groups.push(group_stats(&sorted[start..end])?);
        start = end;
    }

    let all: Vec<f64> = groups
        .iter()
        .flat_map(|g| g.runs.iter().map(|r| r.decel.fps2()))
        .collect();
    Ok(DecelCalibration {
        avg_decel: Deceleration::from_fps2(mean(&all))?,
        max_decel: Deceleration::from_fps2(max_of(all.iter().copied()))?,
        groups,
    })
}

fn group_stats(runs: &[&StopTestRun]) -> Result<SpeedGroup> {
    let v = runs[0].set_speed.fps();
    let decels = runs
        .iter()
        .map(|r| {
            Ok(RunDecel {
                run: r.run,
                decel: Deceleration::from_fps2(v / r.stop_time.secs()).map_err(|_| {
                    Error::InvalidRun {
                        label: r.label(),
                        stop_time: r.stop_time.secs(),
                    }
                })?,
                decel_from_distance: (r.stop_distance.feet() > 0.0)
                    .then(|| v * v / (2.0 * r.stop_distance.feet())),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = decels.iter().map(|r| r.decel.fps2()).collect();
    let times: Vec<f64> = runs.iter().map(|r| r.stop_time.secs()).collect();
    let dists: Vec<f64> = runs.iter().map(|r| r.stop_distance.feet()).collect();
    Ok(SpeedGroup {
        set_speed_mph: runs[0].set_speed.mph(),
        avg_decel: Deceleration::from_fps2(mean(&values))?,
        max_decel: Deceleration::from_fps2(max_of(values.iter().copied()))?,
        sd_stop_time: population_sd(&times)?,
        sd_stop_distance: population_sd(&dists)?,
        runs: decels,
    })
}

/// Nearest-rank percentile: the `ceil(p * n)`-th smallest sample (1-based).
/// `p` is a fraction in (0, 1].
pub fn nearest_rank(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() || !(p > 0.0 && p <= 1.0) {
        return None;
    }
    // Guard against 0.95 * 100 = 95.00000000000001 style rounding.
    let rank = libm::ceil(p * sorted.len() as f64 - 1e-9) as usize;
    Some(sorted[rank.clamp(1, sorted.len()) - 1])
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct HistogramBin {
    pub lower_ft: f64,
    pub upper_ft: f64,
    pub count: usize,
}

/// Equal-width bins aligned on multiples of `width`, covering every sample.
pub fn histogram(samples: &[f64], width: f64) -> Result<Vec<HistogramBin>> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::out_of_range(
            "histogram bin width (ft)",
            "finite and > 0",
            width,
        ));
    }
    if samples.is_empty() {
        return Ok(Vec::new());
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = max_of(samples.iter().copied());
    let first = libm::floor(lo / width) as i64;
    let last = libm::floor(hi / width) as i64;
    let mut bins: Vec<HistogramBin> = (first..=last)
        .map(|k| HistogramBin {
            lower_ft: k as f64 * width,
            upper_ft: (k + 1) as f64 * width,
            count: 0,
        })
        .collect();
    for &x in samples {
        let k = libm::floor(x / width) as i64 - first;
        bins[k as usize].count += 1;
    }
    Ok(bins)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct GapErrorCalibration {
    pub epsilon: Distance,
    pub percentile: f64,
    /// Number of positive errors the percentile was taken over.
    pub sample_count: usize,
    pub total_count: usize,
    pub histogram: Vec<HistogramBin>,
    pub warning: Option<String>,
}

pub const DEFAULT_PERCENTILE: f64 = 0.95;

/// Follow-distance error allowance from a gap-error series (desired − actual).
/// Only positive errors, where the FT is closer than commanded, count.
pub fn calibrate_gap_error(
    errors: &[SignedDistance],
    bin_width: f64,
) -> Result<GapErrorCalibration> {
    calibrate_gap_error_at(errors, DEFAULT_PERCENTILE, bin_width)
}

pub fn calibrate_gap_error_at(
    errors: &[SignedDistance],
    percentile: f64,
    bin_width: f64,
) -> Result<GapErrorCalibration> {
    if errors.is_empty() {
        return Err(Error::Empty("gap-error series is empty"));
    }
    if !(percentile > 0.0 && percentile <= 1.0) {
        return Err(Error::out_of_range("percentile", "in (0, 1]", percentile));
    }
    let mut positive: Vec<f64> = errors
        .iter()
        .map(|e| e.feet())
        .filter(|&e| e > 0.0)
        .collect();
    positive.sort_by(f64::total_cmp);
    let all: Vec<f64> = errors.iter().map(|e| e.feet()).collect();
    let histogram = histogram(&all, bin_width)?;

    let (epsilon, warning) = match nearest_rank(&positive, percentile) {
        Some(e) => (Distance::from_feet(e)?, None),
        None => (
            Distance::ZERO,
            Some(String::from("no positive gap errors; epsilon set to 0")),
        ),
    };
    Ok(GapErrorCalibration {
        epsilon,
        percentile,
        sample_count: positive.len(),
        total_count: errors.len(),
        histogram,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;
    use std::string::ToString;

    fn run(speed_mph: f64, run: u32, t: f64, d: f64) -> StopTestRun {
        StopTestRun {
            button: "LT Internal".to_string(),
            set_gap: ">=100'".to_string(),
            set_speed: Speed::from_mph(speed_mph).unwrap(),
            run,
            stop_time: Duration::from_secs(t).unwrap(),
            stop_distance: Distance::from_feet(d).unwrap(),
        }
    }

    fn table_runs() -> Vec<StopTestRun> {
        vec![
            run(10.0, 1, 1.56, 11.5),
            run(10.0, 2, 1.56, 15.75),
            run(10.0, 3, 1.75, 20.5),
            run(15.0, 1, 1.91, 31.08),
            run(15.0, 2, 2.13, 37.0),
            run(15.0, 3, 1.78, 26.58),
        ]
    }

    /// Brute-force two-pass SD kept separate from the implementation.
    fn two_pass_sd(xs: &[f64]) -> f64 {
        let mut total = 0.0;
        for x in xs {
            total += x;
        }
        let m = total / xs.len() as f64;
        let mut ss = 0.0;
        for x in xs {
            ss += (x - m).powi(2);
        }
        (ss / xs.len() as f64).sqrt()
    }

    #[test]
    fn sd_matches_stop_table() {
        assert!((population_sd(&[11.5, 15.75, 20.5]).unwrap() - 3.676).abs() < 5e-4);
        assert!((population_sd(&[31.08, 37.0, 26.58]).unwrap() - 4.27).abs() < 5e-3);
        assert_eq!(population_sd(&[2.5, 2.5, 2.5]).unwrap(), 0.0);
        assert!(population_sd(&[]).is_err());
    }

    #[test]
    fn decel_groups() {
        let cal = calibrate_deceleration(&table_runs()).unwrap();
        assert_eq!(cal.groups.len(), 2);
        let g10 = &cal.groups[0];
        let d: Vec<f64> = g10.runs.iter().map(|r| r.decel.fps2()).collect();
        assert!(
            (d[0] - 9.40).abs() < 5e-3 && (d[1] - 9.40).abs() < 5e-3 && (d[2] - 8.38).abs() < 5e-3
        );
        assert!((g10.avg_decel.fps2() - 9.06).abs() < 5e-3);
        assert!((g10.max_decel.fps2() - 9.40).abs() < 5e-3);
        assert!((g10.sd_stop_time - 0.09).abs() < 5e-3);

        let g15 = &cal.groups[1];
        assert!((g15.max_decel.fps2() - 12.36).abs() < 5e-3);
        assert!((g15.avg_decel.fps2() - 11.40).abs() < 5e-3);
        assert!((g15.sd_stop_time - 0.14).abs() < 5e-3);
        assert_eq!(cal.max_decel, g15.max_decel);
    }

    #[test]
    fn single_run_exact() {
        // 10 mph over 22/15 s is exactly 10 ft/s².
        let cal = calibrate_deceleration(&[run(10.0, 1, 22.0 / 15.0, 10.0)]).unwrap();
        assert!((cal.max_decel.fps2() - 10.0).abs() < 1e-12);
        assert_eq!(cal.groups[0].sd_stop_time, 0.0);
        let approx = calibrate_deceleration(&[run(10.0, 1, 1.4667, 10.0)]).unwrap();
        assert!((approx.max_decel.fps2() - 10.0).abs() < 1e-3);
    }

    #[test]
    fn zero_stop_time_rejected() {
        let mut runs = table_runs();
        runs[4].stop_time = Duration::ZERO;
        match calibrate_deceleration(&runs) {
            Err(Error::InvalidRun { label, .. }) => assert!(label.contains("run 2"), "{label}"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(calibrate_deceleration(&[]).is_err());
    }

    #[test]
    fn epsilon_nearest_rank() {
        let errors: Vec<SignedDistance> = (1..=100)
            .map(|i| SignedDistance::from_feet(i as f64 / 10.0).unwrap())
            .collect();
        let cal = calibrate_gap_error(&errors, 1.0).unwrap();
        assert!((cal.epsilon.feet() - 9.5).abs() < 1e-12);
        assert_eq!(cal.sample_count, 100);
        assert!(cal.warning.is_none());
        assert_eq!(cal.histogram.iter().map(|b| b.count).sum::<usize>(), 100);
    }

    #[test]
    fn epsilon_all_negative() {
        let errors: Vec<SignedDistance> = [-1.0, -2.5, -0.1]
            .iter()
            .map(|&e| SignedDistance::from_feet(e).unwrap())
            .collect();
        let cal = calibrate_gap_error(&errors, 1.0).unwrap();
        assert_eq!(cal.epsilon.feet(), 0.0);
        assert!(cal.warning.is_some());
        assert!(calibrate_gap_error(&[], 1.0).is_err());
    }

    #[test]
    fn histogram_bins() {
        let bins = histogram(&[-0.5, 0.0, 0.2, 1.0, 2.9], 1.0).unwrap();
        let counts: Vec<usize> = bins.iter().map(|b| b.count).collect();
        assert_eq!(counts, vec![1, 2, 1, 1]);
        assert_eq!(bins[0].lower_ft, -1.0);
        assert!(histogram(&[1.0], 0.0).is_err());
    }

    proptest! {
        #[test]
        fn doubling_times_halves_decel(times in proptest::collection::vec(0.5f64..5.0, 1..6)) {
            let runs: Vec<StopTestRun> = times.iter().enumerate().map(|(i, &t)| run(10.0, i as u32, t, 10.0)).collect();
            let doubled: Vec<StopTestRun> = times.iter().enumerate().map(|(i, &t)| run(10.0, i as u32, 2.0 * t, 10.0)).collect();
            let a = calibrate_deceleration(&runs).unwrap();
            let b = calibrate_deceleration(&doubled).unwrap();
            for (x, y) in a.per_run_decel().zip(b.per_run_decel()) {
                prop_assert_eq!(x.fps2(), 2.0 * y.fps2());
            }
        }

        #[test]
        fn max_is_permutation_stable(times in proptest::collection::vec(0.5f64..5.0, 1..8), rot in 0usize..8) {
            let mut runs: Vec<StopTestRun> = times.iter().enumerate().map(|(i, &t)| run(15.0, i as u32, t, 20.0)).collect();
            let a = calibrate_deceleration(&runs).unwrap();
            let k = rot % runs.len();
            runs.rotate_left(k);
            let b = calibrate_deceleration(&runs).unwrap();
            prop_assert_eq!(a.max_decel, b.max_decel);
            let brute = a.per_run_decel().map(|d| d.fps2()).fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(a.max_decel.fps2(), brute);
        }

        #[test]
        fn epsilon_monotone(xs in proptest::collection::vec(-10.0f64..10.0, 1..200), extra in 0.0f64..5.0) {
            let series: Vec<SignedDistance> = xs.iter().map(|&x| SignedDistance::from_feet(x).unwrap()).collect();
            let before = calibrate_gap_error(&series, 1.0).unwrap().epsilon.feet();
            let mut grown = series.clone();
            grown.push(SignedDistance::from_feet(before + extra + 1e-6).unwrap());
            let after = calibrate_gap_error(&grown, 1.0).unwrap().epsilon.feet();
            prop_assert!(after >= before);
        }

        #[test]
        fn epsilon_is_a_sample(xs in proptest::collection::vec(0.01f64..10.0, 1..200)) {
            let series: Vec<SignedDistance> = xs.iter().map(|&x| SignedDistance::from_feet(x).unwrap()).collect();
            let eps = calibrate_gap_error(&series, 1.0).unwrap().epsilon.feet();
            prop_assert!(xs.contains(&eps));
        }

        #[test]
        fn sd_matches_two_pass(a in -100.0f64..100.0, b in -100.0f64..100.0, c in -100.0f64..100.0) {
            let xs = [a, b, c];
            let got = population_sd(&xs).unwrap();
            let want = two_pass_sd(&xs);
            prop_assert!((got - want).abs() <= 1e-12 * want.max(1e-300) || (got - want).abs() < 1e-12);
        }
    }
}
