//! The stack (wide-to-tall) transform and outcome thresholding.

use crate::error::{Result, SfcaError};
use crate::features::{FeatureSchema, FeatureTable};
use crate::grid::SegmentGrid;
use crate::trajectory::{Activity, ActivityOutcome, CityYearRecord};

/// Provenance of one stacked row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowKey {
    pub city_id: String,
    pub year: i32,
    pub segment: usize,
}

/// The tall design matrix: one row per (record, usable segment), one column
/// per per-segment feature plus broadcast statics.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedDesign {
    pub rows: Vec<RowKey>,
    pub matrix: Vec<Vec<f64>>,
    pub column_names: Vec<String>,
}

impl StackedDesign {
    pub fn n_rows(&self) -> usize {
        self.matrix.len()
    }

    pub fn n_cols(&self) -> usize {
        self.column_names.len()
    }
}

/// Boolean outcome labels aligned 1:1 with [`StackedDesign`] rows.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelVector {
    pub activity: Activity,
    pub labels: Vec<bool>,
}

/// Result of the inclusion-criterion check (outcomes live in the grid's
/// time domain).
#[derive(Debug, Clone, PartialEq)]
pub enum Inclusion {
    Ok,
    Violation { city_id: String, value: f64 },
}

/// Verify every outcome time lies inside the [0,1440) minute domain the
/// grid covers.
pub fn check_inclusion<'a>(
    outcomes: impl IntoIterator<Item = (&'a str, &'a ActivityOutcome)>,
    _grid: &SegmentGrid,
) -> Inclusion {
    for (city_id, o) in outcomes {
        for v in [o.start_min, o.stop_min] {
            if !(0.0..1440.0).contains(&v) {
                return Inclusion::Violation {
                    city_id: city_id.to_string(),
                    value: v,
                };
            }
        }
    }
    Inclusion::Ok
}

/// Stack plain wide records: each record holds M series of length S; each
/// series' 1xS row becomes an Sx1 column. Output is NSxM, grouped by record
/// then ascending segment.
pub fn stack_wide(records: &[Vec<Vec<f64>>]) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    let mut dims: Option<(usize, usize)> = None;
    for (i, record) in records.iter().enumerate() {
        let m = record.len();
        let s = record.first().map(|r| r.len()).unwrap_or(0);
        if record.iter().any(|r| r.len() != s) {
            return Err(SfcaError::SchemaMismatch(format!(
                "ragged series lengths in record {i}"
            )));
        }
        match dims {
            None => dims = Some((m, s)),
            Some(d) if d != (m, s) => {
                return Err(SfcaError::SchemaMismatch(format!(
                    "record {i} has shape {m}x{s}, expected {}x{}",
                    d.0, d.1
                )))
            }
            _ => {}
        }
        for seg in 0..s {
            out.push(record.iter().map(|series| series[seg]).collect());
        }
    }
    Ok(out)
}

/// Inverse of [`stack_wide`] given the per-record segment count.
pub fn unstack_wide(tall: &[Vec<f64>], segments: usize) -> Result<Vec<Vec<Vec<f64>>>> {
    if segments == 0 || tall.len() % segments != 0 {
        return Err(SfcaError::DimensionMismatch(format!(
            "{} rows not divisible by {} segments",
            tall.len(),
            segments
        )));
    }
    let m = tall.first().map(|r| r.len()).unwrap_or(0);
    Ok(tall
        .chunks(segments)
        .map(|chunk| {
            (0..m)
                .map(|dim| chunk.iter().map(|row| row[dim]).collect())
                .collect()
        })
        .collect())
}

/// Stack feature tables into the tall design, broadcasting each record's
/// static features onto all its rows.
pub fn stack(tables: &[FeatureTable], schema: &FeatureSchema) -> Result<StackedDesign> {
    let mut rows = Vec::new();
    let mut matrix = Vec::new();
    for table in tables {
        if table
            .block
            .first()
            .map(|r| r.len() != schema.per_segment_width())
            .unwrap_or(false)
            || table.statics.len() != schema.static_width()
        {
            return Err(SfcaError::SchemaMismatch(format!(
                "feature table for {} year {} does not match schema",
                table.city_id, table.year
            )));
        }
        for (i, block_row) in table.block.iter().enumerate() {
            let mut row = block_row.clone();
            row.extend_from_slice(&table.statics);
            matrix.push(row);
            rows.push(RowKey {
                city_id: table.city_id.clone(),
                year: table.year,
                segment: table.first_segment + i,
            });
        }
    }
    Ok(StackedDesign {
        rows,
        matrix,
        column_names: schema.column_names(),
    })
}

/// Scalar thresholding rule: label 1 where the segment's representative
/// time is at most `y`.
pub fn threshold_scalar(y: f64, segment_times: &[f64]) -> Vec<bool> {
    segment_times.iter().map(|&t| t <= y).collect()
}

/// Threshold an activity outcome over the full (unshifted, undropped)
/// segment axis. Sleep: 1 where `t_s <= stop` or `t_s >= start` (the
/// over-midnight rule); work: 1 where `start <= t_s <= stop`.
pub fn threshold_full(outcome: &ActivityOutcome, grid: &SegmentGrid) -> Result<Vec<bool>> {
    if outcome.start_min == outcome.stop_min {
        return Err(SfcaError::ZeroWidthActivity {
            city_id: String::new(),
            year: 0,
        });
    }
    Ok((1..=grid.segments_per_day)
        .map(|s| {
            let t = grid.midpoint(s);
            match outcome.activity {
                Activity::Sleep => t <= outcome.stop_min || t >= outcome.start_min,
                Activity::Work => outcome.start_min <= t && t <= outcome.stop_min,
            }
        })
        .collect())
}

/// Threshold labels aligned to a feature table's rows (dropped differenced
/// segments omitted).
pub fn threshold_labels(
    outcome: &ActivityOutcome,
    grid: &SegmentGrid,
    first_segment: usize,
) -> Result<Vec<bool>> {
    let full = threshold_full(outcome, grid)?;
    Ok(full[first_segment - 1..].to_vec())
}

/// Label vector for a set of records, aligned to a stacked design built
/// from the same records in the same order. Records missing the activity
/// outcome are rejected.
pub fn labels_for_records(
    records: &[&CityYearRecord],
    activity: Activity,
    grid: &SegmentGrid,
    first_segment: usize,
) -> Result<LabelVector> {
    let mut labels = Vec::new();
    for r in records {
        let outcome = r.outcome(activity).ok_or_else(|| {
            SfcaError::SchemaMismatch(format!(
                "record {} year {} has no {} outcome",
                r.city_id,
                r.year,
                activity.name()
            ))
        })?;
        let slice =
            threshold_labels(outcome, grid, first_segment).map_err(|e| match e {
                SfcaError::ZeroWidthActivity { .. } => SfcaError::ZeroWidthActivity {
                    city_id: r.city_id.clone(),
                    year: r.year,
                },
                other => other,
            })?;
        labels.extend(slice);
    }
    Ok(LabelVector { activity, labels })
}

/// Class-1 fraction for one record's labels, with a balance warning when
/// the fraction leaves [0.1, 0.9].
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceEntry {
    pub city_id: String,
    pub year: i32,
    pub fraction: f64,
    pub warning: bool,
}

pub fn balance_report(
    per_record: impl IntoIterator<Item = (String, i32, Vec<bool>)>,
) -> Vec<BalanceEntry> {
    per_record
        .into_iter()
        .map(|(city_id, year, labels)| {
            let n = labels.len().max(1);
            let ones = labels.iter().filter(|&&b| b).count();
            let fraction = ones as f64 / n as f64;
            BalanceEntry {
                city_id,
                year,
                fraction,
                warning: !(0.1..=0.9).contains(&fraction),
            }
        })
        .collect()
}
