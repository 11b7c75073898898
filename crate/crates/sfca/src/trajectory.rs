//! Raw activity ingestion: segment aggregation, normalization, synthetic
//! week construction, and hourly down-scaling.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SfcaError};
use crate::grid::{Dow, SegmentGrid, ALL_DOWS};
use crate::smooth::{garcia_smooth, garcia_smooth_periodic};
use crate::spline::CubicSpline;

/// Default smoother penalty for synthetic-week construction.
pub const WEEK_SMOOTH_PENALTY: f64 = 500.0;
/// Default light smoothing before hourly-to-segment down-scaling.
pub const DOWNSCALE_SMOOTH_PENALTY: f64 = 1.0;

/// Per-segment online/offline counts for one city.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanAggregate {
    pub city_id: String,
    pub segment: usize,
    pub count_online: u64,
    pub count_offline: u64,
}

/// One day's trace on the segment grid. `None` marks a missing segment.
#[derive(Debug, Clone, PartialEq)]
pub struct DailyTrace {
    pub city_id: String,
    pub dow: Dow,
    pub values: Vec<Option<f64>>,
}

impl DailyTrace {
    pub fn new(city_id: impl Into<String>, dow: Dow, values: Vec<Option<f64>>) -> Self {
        DailyTrace {
            city_id: city_id.into(),
            dow,
            values,
        }
    }

    pub fn complete(city_id: impl Into<String>, dow: Dow, values: Vec<f64>) -> Self {
        DailyTrace {
            city_id: city_id.into(),
            dow,
            values: values.into_iter().map(Some).collect(),
        }
    }
}

/// A representative, smoothed Mon..Sun week for one city-year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticWeek {
    pub city_id: String,
    pub year: i32,
    /// One complete trace per day of week, Mon first.
    pub traces: [Vec<f64>; 7],
}

impl SyntheticWeek {
    pub fn trace(&self, dow: Dow) -> &[f64] {
        &self.traces[dow as usize]
    }

    /// The 7 traces concatenated Mon..Sun (the wide 1x672 record on the
    /// default grid).
    pub fn concat(&self) -> Vec<f64> {
        self.traces.iter().flatten().copied().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activity {
    Sleep,
    Work,
}

impl Activity {
    pub fn name(self) -> &'static str {
        match self {
            Activity::Sleep => "sleep",
            Activity::Work => "work",
        }
    }

    pub fn parse(s: &str) -> Option<Activity> {
        match s {
            "sleep" => Some(Activity::Sleep),
            "work" => Some(Activity::Work),
            _ => None,
        }
    }
}

/// Ground-truth average start/stop times for one activity in one city-year.
/// For work the start precedes the stop within the day; sleep spans
/// midnight so its evening start follows the morning stop on the clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityOutcome {
    pub activity: Activity,
    pub start_min: f64,
    pub stop_min: f64,
    pub respondents: u64,
    pub population: u64,
}

impl ActivityOutcome {
    pub fn validate(&self) -> Result<()> {
        let ok_range = (0.0..1440.0).contains(&self.start_min)
            && (0.0..1440.0).contains(&self.stop_min);
        let ok_order = match self.activity {
            Activity::Work => self.start_min < self.stop_min,
            Activity::Sleep => self.stop_min < self.start_min,
        };
        if !ok_range || !ok_order || self.respondents == 0 || self.population == 0 {
            return Err(SfcaError::InvalidGenParams(format!(
                "invalid outcome for activity {}: start {} stop {}",
                self.activity.name(),
                self.start_min,
                self.stop_min
            )));
        }
        Ok(())
    }
}

/// One observation unit: a city-year with its synthetic week, static
/// features, and any known outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CityYearRecord {
    pub city_id: String,
    pub year: i32,
    pub week: SyntheticWeek,
    /// Named static features (latitude, wavelet coefficients).
    pub static_features: Vec<(String, f64)>,
    pub outcomes: Vec<ActivityOutcome>,
}

impl CityYearRecord {
    pub fn outcome(&self, activity: Activity) -> Option<&ActivityOutcome> {
        self.outcomes.iter().find(|o| o.activity == activity)
    }

    pub fn population(&self) -> Option<u64> {
        self.outcomes.first().map(|o| o.population)
    }
}

/// A single online/offline observation within one calendar day.
#[derive(Debug, Clone)]
pub struct ScanRecord {
    pub city_id: String,
    pub minute_of_day: f64,
    pub online: bool,
}

/// Aggregate raw scan records into per-city daily online-fraction traces.
/// Segments with no records are marked missing.
pub fn aggregate_online_fraction(
    records: impl IntoIterator<Item = ScanRecord>,
    grid: &SegmentGrid,
    dow: Dow,
) -> Vec<DailyTrace> {
    let mut counts: BTreeMap<String, Vec<(u64, u64)>> = BTreeMap::new();
    for r in records {
        let seg = grid.segment_of(r.minute_of_day);
        let entry = counts
            .entry(r.city_id)
            .or_insert_with(|| vec![(0, 0); grid.segments_per_day]);
        if r.online {
            entry[seg - 1].0 += 1;
        } else {
            entry[seg - 1].1 += 1;
        }
    }
    counts
        .into_iter()
        .map(|(city_id, per_seg)| {
            let values = per_seg
                .iter()
                .map(|&(on, off)| {
                    if on + off == 0 {
                        None
                    } else {
                        Some(on as f64 / (on + off) as f64)
                    }
                })
                .collect();
            DailyTrace {
                city_id,
                dow,
                values,
            }
        })
        .collect()
}

/// Affine-map non-missing values to [0,1] (min -> 0, max -> 1). Constant
/// traces map to all 0.5.
pub fn normalize_unit_interval(trace: &DailyTrace) -> Result<DailyTrace> {
    let observed: Vec<f64> = trace.values.iter().filter_map(|v| *v).collect();
    if observed.is_empty() {
        return Err(SfcaError::EmptyTrace);
    }
    let min = observed.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = observed.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    let values = trace
        .values
        .iter()
        .map(|v| {
            v.map(|x| {
                if span <= f64::EPSILON * min.abs().max(1.0) {
                    0.5
                } else {
                    (x - min) / span
                }
            })
        })
        .collect();
    Ok(DailyTrace {
        city_id: trace.city_id.clone(),
        dow: trace.dow,
        values,
    })
}

/// Segment-wise mean over traces sharing a dow, skipping missing segments.
fn dow_mean(traces: &[&DailyTrace], segments: usize) -> Vec<Option<f64>> {
    let mut out = Vec::with_capacity(segments);
    for s in 0..segments {
        let vals: Vec<f64> = traces.iter().filter_map(|t| t.values[s]).collect();
        if vals.is_empty() {
            out.push(None);
        } else {
            out.push(Some(vals.iter().sum::<f64>() / vals.len() as f64));
        }
    }
    out
}

/// Collect all days per day-of-week, average them at each segment, and
/// robust-smooth each averaged day.
pub fn build_synthetic_week(
    city_id: &str,
    year: i32,
    days: &[DailyTrace],
    grid: &SegmentGrid,
    penalty: f64,
) -> Result<SyntheticWeek> {
    let mut traces: Vec<Vec<f64>> = Vec::with_capacity(7);
    for dow in ALL_DOWS {
        let matching: Vec<&DailyTrace> = days.iter().filter(|t| t.dow == dow).collect();
        if matching.is_empty() {
            return Err(SfcaError::MissingDow(dow.name().to_string()));
        }
        let mean = dow_mean(&matching, grid.segments_per_day);
        // Daily traces wrap at midnight, so smooth each day with a
        // circular boundary: a reflective one flattens activity
        // transitions that fall near the ends of the day (e.g. late
        // sleep onsets).
        let smoothed = garcia_smooth_periodic(&mean, penalty, true)?;
        traces.push(smoothed);
    }
    Ok(SyntheticWeek {
        city_id: city_id.to_string(),
        year,
        traces: traces.try_into().expect("7 dow traces"),
    })
}

/// Down-scale 24 hourly samples to the segment grid: light smooth, then
/// cubic-spline interpolation with hourly samples anchored at their
/// interval midpoints. Outside the outer hour midpoints the spline
/// extrapolates linearly with the boundary slope.
pub fn downscale_hourly(
    series_24: &[f64],
    grid: &SegmentGrid,
    smooth_penalty: f64,
) -> Result<Vec<f64>> {
    if series_24.len() != 24 {
        return Err(SfcaError::DimensionMismatch(format!(
            "expected 24 hourly values, got {}",
            series_24.len()
        )));
    }
    for (i, &v) in series_24.iter().enumerate() {
        if !v.is_finite() {
            return Err(SfcaError::NonFinite(i));
        }
    }
    let smoothed = if smooth_penalty > 0.0 {
        garcia_smooth(
            &series_24.iter().map(|&v| Some(v)).collect::<Vec<_>>(),
            smooth_penalty,
            false,
        )?
    } else {
        series_24.to_vec()
    };
    let knots: Vec<f64> = (0..24).map(|h| 60.0 * h as f64 + 30.0).collect();
    let spline = CubicSpline::fit(&knots, &smoothed)?;
    Ok((1..=grid.segments_per_day)
        .map(|s| spline.eval(grid.midpoint(s)))
        .collect())
}

/// Average demand traces per day of week, then normalize the averaged
/// trace to [0,1]. Mirrors [`build_synthetic_week`] but with normalization
/// after averaging and no heavy smoothing.
pub fn register_dow_average(
    city_id: &str,
    year: i32,
    days: &[DailyTrace],
    grid: &SegmentGrid,
) -> Result<SyntheticWeek> {
    let mut traces: Vec<Vec<f64>> = Vec::with_capacity(7);
    for dow in ALL_DOWS {
        let matching: Vec<&DailyTrace> = days.iter().filter(|t| t.dow == dow).collect();
        if matching.is_empty() {
            return Err(SfcaError::MissingDow(dow.name().to_string()));
        }
        let mean = dow_mean(&matching, grid.segments_per_day);
        let normalized = normalize_unit_interval(&DailyTrace {
            city_id: city_id.to_string(),
            dow,
            values: mean,
        })?;
        // Remaining gaps (segments missing in every day) are filled by a
        // light smooth pass.
        let filled = garcia_smooth(&normalized.values, 0.0, false)?;
        traces.push(filled);
    }
    Ok(SyntheticWeek {
        city_id: city_id.to_string(),
        year,
        traces: traces.try_into().expect("7 dow traces"),
    })
}
