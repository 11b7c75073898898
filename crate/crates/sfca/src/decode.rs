//! Convert per-segment classification scores back into continuous start
//! and stop times: rotate, smooth, difference, wavelet de-noise, and
//! spline-interpolate the two transition phases to locate their extrema.

use crate::error::{Result, SfcaError};
use crate::grid::{SegmentGrid, MINUTES_PER_DAY};
use crate::smooth::garcia_smooth;
use crate::spline::CubicSpline;
use crate::trajectory::Activity;
use crate::wavelet::{denoise_level1, Symlet};

/// Smoothing penalty for the shifted score trace.
pub const SCORE_SMOOTH_PENALTY: f64 = 0.06;
const FLAT_TOL: f64 = 1e-6;
const MIN_USABLE_SCORES: usize = 90;

/// Per-segment scores for one city-year on the unshifted 1..S axis, with
/// missing markers at the dropped differenced segments.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTrace {
    pub city_id: String,
    pub year: i32,
    pub activity: Activity,
    pub scores: Vec<Option<f64>>,
}

/// Decoded continuous event times in minutes after midnight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodedTimes {
    pub start_min: f64,
    pub stop_min: f64,
    pub duration_min: f64,
}

/// Stage-by-stage intermediates, for audit dumps.
#[derive(Debug, Clone)]
pub struct DecodeAudit {
    /// Rotated raw scores (shifted axis) with their unwrapped minute axis.
    pub shifted_minutes: Vec<f64>,
    pub shifted_scores: Vec<Option<f64>>,
    pub smoothed: Vec<f64>,
    /// Boundary minutes (unwrapped) of the first differences.
    pub diff_minutes: Vec<f64>,
    pub diffs: Vec<f64>,
    pub denoised: Vec<f64>,
    /// (unwrapped minute, value) of the located rise and fall extrema.
    pub rise: (f64, f64),
    pub fall: (f64, f64),
}

/// Activity duration: over-midnight modular difference for sleep, plain
/// difference for work.
pub fn duration(start_min: f64, stop_min: f64, activity: Activity) -> f64 {
    match activity {
        Activity::Sleep => (stop_min - start_min).rem_euclid(MINUTES_PER_DAY),
        Activity::Work => stop_min - start_min,
    }
}

/// Rotation origin for the shifted day axis: sleep decodes with the day
/// starting at the grid's configured offset (4 pm by default); work starts
/// at 3 am so its window sits in the interior of the axis.
fn rotation_offset(grid: &SegmentGrid, activity: Activity) -> usize {
    match activity {
        Activity::Sleep => grid.day_start_offset,
        Activity::Work => (180.0 / grid.segment_minutes) as usize + 1,
    }
}

/// Clock minute separating the two transition phases: 3 am for sleep,
/// noon for work.
fn split_minute(activity: Activity) -> f64 {
    match activity {
        Activity::Sleep => 180.0,
        Activity::Work => 720.0,
    }
}

/// Locate the extremum of the section's spline at 1-minute resolution.
/// Ties break toward the section's centre.
fn spline_extremum(
    times: &[f64],
    values: &[f64],
    maximum: bool,
) -> Result<(f64, f64)> {
    let spline = CubicSpline::fit(times, values)?;
    let lo = times[0].ceil() as i64;
    let hi = times[times.len() - 1].floor() as i64;
    let centre = 0.5 * (times[0] + times[times.len() - 1]);
    let mut best_t = lo as f64;
    let mut best_v = spline.eval(best_t);
    for t in lo..=hi {
        let tf = t as f64;
        let v = spline.eval(tf);
        let improves = if maximum { v > best_v } else { v < best_v };
        let ties = (v - best_v).abs() < 1e-12
            && (tf - centre).abs() < (best_t - centre).abs();
        if improves || ties {
            best_t = tf;
            best_v = v;
        }
    }
    Ok((best_t, best_v))
}

/// Translation-invariant level-1 wavelet approximation: the decimated
/// transform is not shift-invariant, so denoising at a single alignment
/// skews a symmetric transition bump sideways. Averaging the denoise
/// over every circular shift of the (rotated, hence circular) day axis
/// removes the alignment dependence and its timing jitter.
fn denoise_shift_averaged(series: &[f64]) -> Result<Vec<f64>> {
    let n = series.len();
    let mut acc = vec![0.0; n];
    let mut rotated = vec![0.0; n];
    for shift in 0..n {
        for i in 0..n {
            rotated[i] = series[(i + shift) % n];
        }
        let dn = denoise_level1(&rotated, Symlet::Sym8)?;
        for i in 0..n {
            acc[(i + shift) % n] += dn[i];
        }
    }
    for v in &mut acc {
        *v /= n as f64;
    }
    Ok(acc)
}

/// Full decode chain with intermediates.
pub fn decode_with_audit(
    trace: &ScoreTrace,
    grid: &SegmentGrid,
) -> Result<(DecodedTimes, DecodeAudit)> {
    let s_count = grid.segments_per_day;
    if trace.scores.len() != s_count {
        return Err(SfcaError::DimensionMismatch(format!(
            "{} scores vs {} segments",
            trace.scores.len(),
            s_count
        )));
    }
    let usable = trace.scores.iter().filter(|v| v.is_some()).count();
    if usable < MIN_USABLE_SCORES {
        return Err(SfcaError::TooFewScores {
            need: MIN_USABLE_SCORES,
            got: usable,
        });
    }

    // Rescale present scores to [0,1] so the smoothing penalty's effect is
    // scale-stable.
    let present: Vec<f64> = trace.scores.iter().filter_map(|v| *v).collect();
    let min = present.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = present.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max - min < FLAT_TOL {
        return Err(SfcaError::NoTransitionFound);
    }
    let rescaled: Vec<Option<f64>> = trace
        .scores
        .iter()
        .map(|v| v.map(|x| (x - min) / (max - min)))
        .collect();

    // Rotate to the shifted day axis.
    let offset = rotation_offset(grid, trace.activity);
    let shifted_scores: Vec<Option<f64>> = (0..s_count)
        .map(|p| rescaled[(offset - 1 + p) % s_count])
        .collect();
    let t0 = grid.midpoint(offset);
    let shifted_minutes: Vec<f64> = (0..s_count)
        .map(|p| t0 + p as f64 * grid.segment_minutes)
        .collect();

    let smoothed = garcia_smooth(&shifted_scores, SCORE_SMOOTH_PENALTY, false)?;

    // First difference; each entry sits on the boundary between segments.
    let diff_minutes: Vec<f64> = (1..s_count)
        .map(|p| shifted_minutes[p] - 0.5 * grid.segment_minutes)
        .collect();
    let diffs: Vec<f64> = (1..s_count).map(|p| smoothed[p] - smoothed[p - 1]).collect();

    let denoised = denoise_shift_averaged(&diffs)?;

    // Split the shifted axis at the phase boundary (clock time).
    let split = split_minute(trace.activity);
    let split_u = if split >= t0 { split } else { split + MINUTES_PER_DAY };
    let mut a_times = Vec::new();
    let mut a_vals = Vec::new();
    let mut b_times = Vec::new();
    let mut b_vals = Vec::new();
    for (t, v) in diff_minutes.iter().zip(&denoised) {
        if *t < split_u {
            a_times.push(*t);
            a_vals.push(*v);
        } else {
            b_times.push(*t);
            b_vals.push(*v);
        }
    }
    if a_times.len() < 4 || b_times.len() < 4 {
        return Err(SfcaError::NoTransitionFound);
    }

    // Section A holds the rising edge (into the activity), section B the
    // falling edge (out of it).
    let rise = spline_extremum(&a_times, &a_vals, true)?;
    let fall = spline_extremum(&b_times, &b_vals, false)?;
    if rise.1 <= FLAT_TOL || fall.1 >= -FLAT_TOL {
        return Err(SfcaError::NoTransitionFound);
    }

    let (start_u, stop_u) = (rise.0, fall.0);
    let start_min = start_u.rem_euclid(MINUTES_PER_DAY);
    let stop_min = stop_u.rem_euclid(MINUTES_PER_DAY);
    let times = DecodedTimes {
        start_min,
        stop_min,
        duration_min: duration(start_min, stop_min, trace.activity),
    };
    let audit = DecodeAudit {
        shifted_minutes,
        shifted_scores,
        smoothed,
        diff_minutes,
        diffs,
        denoised,
        rise,
        fall,
    };
    Ok((times, audit))
}

/// Decode continuous start/stop times from a score trace.
pub fn decode_times(trace: &ScoreTrace, grid: &SegmentGrid) -> Result<DecodedTimes> {
    decode_with_audit(trace, grid).map(|(t, _)| t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::threshold_full;
    use crate::trajectory::ActivityOutcome;

    fn grid() -> SegmentGrid {
        SegmentGrid::default()
    }

    /// Ideal 0/1 score trace from thresholded labels, with the two
    /// differenced segments missing.
    fn ideal_trace(activity: Activity, start: f64, stop: f64) -> ScoreTrace {
        let outcome = ActivityOutcome {
            activity,
            start_min: start,
            stop_min: stop,
            respondents: 1,
            population: 1,
        };
        let labels = threshold_full(&outcome, &grid()).unwrap();
        let scores: Vec<Option<f64>> = labels
            .iter()
            .enumerate()
            .map(|(i, &b)| {
                if i < 2 {
                    None
                } else {
                    Some(if b { 1.0 } else { 0.0 })
                }
            })
            .collect();
        ScoreTrace {
            city_id: "t".into(),
            year: 2010,
            activity,
            scores,
        }
    }

    #[test]
    fn ideal_sleep_step_decodes_to_boundaries() {
        let trace = ideal_trace(Activity::Sleep, 1335.0, 407.0);
        let decoded = decode_times(&trace, &grid()).unwrap();
        // Label boundaries fall at 22:15 (1335) and between segments 27/28
        // (405); one segment width of slack.
        assert!((decoded.start_min - 1335.0).abs() <= 7.5, "{decoded:?}");
        assert!((decoded.stop_min - 405.0).abs() <= 7.5, "{decoded:?}");
        assert!(decoded.duration_min > 0.0 && decoded.duration_min < 1440.0);
    }

    #[test]
    fn ideal_work_step_decodes_to_boundaries() {
        let trace = ideal_trace(Activity::Work, 540.0, 1020.0);
        let decoded = decode_times(&trace, &grid()).unwrap();
        assert!((decoded.start_min - 540.0).abs() <= 7.5, "{decoded:?}");
        assert!((decoded.stop_min - 1020.0).abs() <= 7.5, "{decoded:?}");
        assert!((decoded.duration_min - 480.0).abs() <= 15.0);
    }

    #[test]
    fn uniform_scores_raise_no_transition() {
        let trace = ScoreTrace {
            city_id: "t".into(),
            year: 2010,
            activity: Activity::Sleep,
            scores: vec![Some(0.5); 96],
        };
        assert!(matches!(
            decode_times(&trace, &grid()),
            Err(SfcaError::NoTransitionFound)
        ));
    }

    #[test]
    fn too_few_scores_rejected() {
        let mut scores = vec![Some(0.5); 96];
        for s in scores.iter_mut().take(10) {
            *s = None;
        }
        let trace = ScoreTrace {
            city_id: "t".into(),
            year: 2010,
            activity: Activity::Sleep,
            scores,
        };
        assert!(matches!(
            decode_times(&trace, &grid()),
            Err(SfcaError::TooFewScores { .. })
        ));
    }

    #[test]
    fn rotation_equivariance() {
        // Shifting the underlying windows by k segments moves decoded
        // times by 15k minutes.
        let base = decode_times(&ideal_trace(Activity::Sleep, 1335.0, 407.0), &grid()).unwrap();
        for k in [-2i64, 1, 3] {
            let dt = 15.0 * k as f64;
            let shifted = decode_times(
                &ideal_trace(Activity::Sleep, 1335.0 + dt, 407.0 + dt),
                &grid(),
            )
            .unwrap();
            let wrap = |d: f64| {
                let r = d.rem_euclid(1440.0);
                r.min(1440.0 - r)
            };
            assert!(wrap(shifted.start_min - base.start_min - dt) <= 2.0, "k={k}");
            assert!(wrap(shifted.stop_min - base.stop_min - dt) <= 2.0, "k={k}");
        }
    }

    #[test]
    fn decoded_times_inside_support_window() {
        for (start, stop) in [(1290.0, 360.0), (1380.0, 450.0), (1335.0, 407.0)] {
            let decoded =
                decode_times(&ideal_trace(Activity::Sleep, start, stop), &grid()).unwrap();
            let near = |a: f64, b: f64| {
                let d = (a - b).rem_euclid(1440.0);
                d.min(1440.0 - d) <= 15.0
            };
            assert!(near(decoded.start_min, start), "{start} -> {decoded:?}");
            assert!(near(decoded.stop_min, stop), "{stop} -> {decoded:?}");
        }
    }

    #[test]
    fn duration_rules() {
        assert_eq!(duration(1335.0, 407.0, Activity::Sleep), 512.0);
        assert_eq!(duration(540.0, 1020.0, Activity::Work), 480.0);
    }

    #[test]
    fn denoising_keeps_two_extremum_sign_pattern() {
        // On the ideal step family the de-noised difference still has its
        // positive extremum at the rise and negative at the fall.
        for (start, stop) in [(1335.0, 407.0), (1290.0, 420.0)] {
            let trace = ideal_trace(Activity::Sleep, start, stop);
            let (_, audit) = decode_with_audit(&trace, &grid()).unwrap();
            assert!(audit.rise.1 > 0.0);
            assert!(audit.fall.1 < 0.0);
        }
    }
}