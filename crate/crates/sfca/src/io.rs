//! CSV and JSON readers/writers for every file format the pipeline
//! touches. Each writer's output is re-ingestable by the matching reader.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::decode::DecodeAudit;
use crate::error::{Result, SfcaError};
use crate::eval::EvaluationReport;
use crate::features::{FeatureSchema, FeatureTable};
use crate::grid::{Dow, SegmentGrid};
use crate::trajectory::{Activity, ActivityOutcome, CityYearRecord, DailyTrace};
use crate::transform::{LabelVector, StackedDesign};

/// One row of the long-form traces CSV
/// (`city_id,year,date,dow,segment,value`).
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub city_id: String,
    pub year: i32,
    pub date: String,
    pub dow: Dow,
    pub segment: usize,
    pub value: Option<f64>,
}

/// One row of the hourly demand CSV
/// (`city_id,year,date,hour,megawatts`).
#[derive(Debug, Clone, PartialEq)]
pub struct HourlyRow {
    pub city_id: String,
    pub year: i32,
    pub date: String,
    pub hour: u8,
    pub megawatts: f64,
}

fn csv_err(line: usize, message: impl Into<String>) -> SfcaError {
    SfcaError::CsvFormat {
        line,
        message: message.into(),
    }
}

pub fn write_traces_csv(path: impl AsRef<Path>, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["city_id", "year", "date", "dow", "segment", "value"])?;
    for r in rows {
        w.write_record([
            r.city_id.as_str(),
            &r.year.to_string(),
            r.date.as_str(),
            &r.dow.index().to_string(),
            &r.segment.to_string(),
            &r.value.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_traces_csv(path: impl AsRef<Path>) -> Result<Vec<TraceRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record?;
        if record.len() != 6 {
            return Err(csv_err(line, format!("expected 6 fields, got {}", record.len())));
        }
        let dow_idx: u8 = record[3]
            .parse()
            .map_err(|_| csv_err(line, "dow must be 1..7"))?;
        let dow = Dow::from_index(dow_idx).ok_or_else(|| csv_err(line, "dow must be 1..7"))?;
        let value = if record[5].is_empty() {
            None
        } else {
            Some(
                record[5]
                    .parse()
                    .map_err(|_| csv_err(line, "value must be a real or empty"))?,
            )
        };
        out.push(TraceRow {
            city_id: record[0].to_string(),
            year: record[1]
                .parse()
                .map_err(|_| csv_err(line, "year must be an integer"))?,
            date: record[2].to_string(),
            dow,
            segment: record[4]
                .parse()
                .map_err(|_| csv_err(line, "segment must be a positive integer"))?,
            value,
        });
    }
    Ok(out)
}

/// Group trace rows into per-(city, year) lists of daily traces, one per
/// distinct date. Segments absent from a date are marked missing.
pub fn traces_to_days(
    rows: &[TraceRow],
    grid: &SegmentGrid,
) -> Result<BTreeMap<(String, i32), Vec<DailyTrace>>> {
    let mut by_day: BTreeMap<(String, i32, String), (Dow, Vec<Option<f64>>)> =
        BTreeMap::new();
    for r in rows {
        if r.segment < 1 || r.segment > grid.segments_per_day {
            return Err(SfcaError::DimensionMismatch(format!(
                "segment {} outside 1..{}",
                r.segment, grid.segments_per_day
            )));
        }
        let entry = by_day
            .entry((r.city_id.clone(), r.year, r.date.clone()))
            .or_insert_with(|| (r.dow, vec![None; grid.segments_per_day]));
        entry.1[r.segment - 1] = r.value;
    }
    let mut out: BTreeMap<(String, i32), Vec<DailyTrace>> = BTreeMap::new();
    for ((city, year, _date), (dow, values)) in by_day {
        out.entry((city.clone(), year))
            .or_default()
            .push(DailyTrace::new(city, dow, values));
    }
    Ok(out)
}

pub fn write_hourly_csv(path: impl AsRef<Path>, rows: &[HourlyRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["city_id", "year", "date", "hour", "megawatts"])?;
    for r in rows {
        w.write_record([
            r.city_id.as_str(),
            &r.year.to_string(),
            r.date.as_str(),
            &r.hour.to_string(),
            &r.megawatts.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_hourly_csv(path: impl AsRef<Path>) -> Result<Vec<HourlyRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record?;
        if record.len() != 5 {
            return Err(csv_err(line, format!("expected 5 fields, got {}", record.len())));
        }
        let hour: u8 = record[3]
            .parse()
            .map_err(|_| csv_err(line, "hour must be 0..23"))?;
        if hour > 23 {
            return Err(csv_err(line, "hour must be 0..23"));
        }
        out.push(HourlyRow {
            city_id: record[0].to_string(),
            year: record[1]
                .parse()
                .map_err(|_| csv_err(line, "year must be an integer"))?,
            date: record[2].to_string(),
            hour,
            megawatts: record[4]
                .parse()
                .map_err(|_| csv_err(line, "megawatts must be a real"))?,
        });
    }
    Ok(out)
}

/// Day of week from an ISO week date (`YYYY-Www-D`), the date format the
/// generator emits. Hourly files carry no dow column, so it must be
/// recoverable from the date.
pub fn dow_of_iso_week_date(date: &str) -> Result<Dow> {
    let digit = date
        .rsplit_once('-')
        .and_then(|(_, d)| d.parse::<u8>().ok())
        .and_then(Dow::from_index);
    digit.ok_or_else(|| {
        SfcaError::CsvFormat {
            line: 0,
            message: format!("date {} is not an ISO week date (YYYY-Www-D)", date),
        }
    })
}

/// Group hourly rows into per-(city, year) lists of (dow, 24 values).
pub fn hourly_to_days(
    rows: &[HourlyRow],
) -> Result<BTreeMap<(String, i32), Vec<(Dow, Vec<f64>)>>> {
    let mut by_day: BTreeMap<(String, i32, String), Vec<Option<f64>>> = BTreeMap::new();
    for r in rows {
        by_day
            .entry((r.city_id.clone(), r.year, r.date.clone()))
            .or_insert_with(|| vec![None; 24])[r.hour as usize] = Some(r.megawatts);
    }
    let mut out: BTreeMap<(String, i32), Vec<(Dow, Vec<f64>)>> = BTreeMap::new();
    for ((city, year, date), values) in by_day {
        let dow = dow_of_iso_week_date(&date)?;
        let full: Option<Vec<f64>> = values.into_iter().collect();
        let full = full.ok_or_else(|| SfcaError::CsvFormat {
            line: 0,
            message: format!("date {} for {} is missing hours", date, city),
        })?;
        out.entry((city, year)).or_default().push((dow, full));
    }
    Ok(out)
}

pub fn write_outcomes_csv(
    path: impl AsRef<Path>,
    rows: &[(String, i32, ActivityOutcome)],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "city_id",
        "year",
        "activity",
        "start_min",
        "stop_min",
        "respondents",
        "population",
    ])?;
    for (city, year, o) in rows {
        w.write_record([
            city.as_str(),
            &year.to_string(),
            o.activity.name(),
            &o.start_min.to_string(),
            &o.stop_min.to_string(),
            &o.respondents.to_string(),
            &o.population.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_outcomes_csv(
    path: impl AsRef<Path>,
) -> Result<Vec<(String, i32, ActivityOutcome)>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record?;
        if record.len() != 7 {
            return Err(csv_err(line, format!("expected 7 fields, got {}", record.len())));
        }
        let activity = Activity::parse(&record[2])
            .ok_or_else(|| csv_err(line, "activity must be sleep or work"))?;
        let parse_f = |idx: usize, what: &str| -> Result<f64> {
            record[idx]
                .parse()
                .map_err(|_| csv_err(line, format!("{} must be a real", what)))
        };
        let parse_u = |idx: usize, what: &str| -> Result<u64> {
            record[idx]
                .parse()
                .map_err(|_| csv_err(line, format!("{} must be an integer", what)))
        };
        let outcome = ActivityOutcome {
            activity,
            start_min: parse_f(3, "start_min")?,
            stop_min: parse_f(4, "stop_min")?,
            respondents: parse_u(5, "respondents")?,
            population: parse_u(6, "population")?,
        };
        outcome.validate()?;
        out.push((
            record[0].to_string(),
            record[1]
                .parse()
                .map_err(|_| csv_err(line, "year must be an integer"))?,
            outcome,
        ));
    }
    Ok(out)
}

pub fn write_static_csv(path: impl AsRef<Path>, rows: &[(String, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["city_id", "latitude"])?;
    for (city, lat) in rows {
        w.write_record([city.as_str(), &lat.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_static_csv(path: impl AsRef<Path>) -> Result<Vec<(String, f64)>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record?;
        if record.len() != 2 {
            return Err(csv_err(line, format!("expected 2 fields, got {}", record.len())));
        }
        out.push((
            record[0].to_string(),
            record[1]
                .parse()
                .map_err(|_| csv_err(line, "latitude must be a real"))?,
        ));
    }
    Ok(out)
}

/// Preprocessed city-year records as JSON (the handoff between
/// `preprocess` and the downstream subcommands).
pub fn write_records_json(
    path: impl AsRef<Path>,
    records: &[CityYearRecord],
) -> Result<()> {
    let file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(file, records)?;
    Ok(())
}

pub fn read_records_json(path: impl AsRef<Path>) -> Result<Vec<CityYearRecord>> {
    let file = std::fs::File::open(path)?;
    Ok(serde_json::from_reader(file)?)
}

/// Feature tables as CSV (`city_id,year,segment,<feature...>`).
pub fn write_features_csv(
    path: impl AsRef<Path>,
    tables: &[FeatureTable],
    schema: &FeatureSchema,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec![
        "city_id".to_string(),
        "year".to_string(),
        "segment".to_string(),
    ];
    header.extend(schema.column_names());
    w.write_record(&header)?;
    for table in tables {
        for (i, row) in table.block.iter().enumerate() {
            let mut record = vec![
                table.city_id.clone(),
                table.year.to_string(),
                (table.first_segment + i).to_string(),
            ];
            record.extend(row.iter().map(|v| v.to_string()));
            record.extend(table.statics.iter().map(|v| v.to_string()));
            w.write_record(&record)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Stacked design plus labels as CSV
/// (`city_id,year,segment,label,<feature...>`).
pub fn write_design_csv(
    path: impl AsRef<Path>,
    design: &StackedDesign,
    labels: &LabelVector,
) -> Result<()> {
    if design.rows.len() != labels.labels.len() {
        return Err(SfcaError::DimensionMismatch(format!(
            "{} design rows vs {} labels",
            design.rows.len(),
            labels.labels.len()
        )));
    }
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec![
        "city_id".to_string(),
        "year".to_string(),
        "segment".to_string(),
        "label".to_string(),
    ];
    header.extend(design.column_names.clone());
    w.write_record(&header)?;
    for ((key, row), &label) in design
        .rows
        .iter()
        .zip(&design.matrix)
        .zip(&labels.labels)
    {
        let mut record = vec![
            key.city_id.clone(),
            key.year.to_string(),
            key.segment.to_string(),
            (label as u8).to_string(),
        ];
        record.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{:.6}", x)).unwrap_or_default()
}

/// Machine report CSV (`method,type,problem,filter,n,rmse_min,gm_min`).
/// Filter cells carry the threshold and RMSE; each (method, problem) adds
/// a final `gm` row carrying the geometric mean.
pub fn write_report_csv(path: impl AsRef<Path>, report: &EvaluationReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["method", "type", "problem", "filter", "n", "rmse_min", "gm_min"])?;
    for cell in &report.cells {
        w.write_record([
            cell.method.as_str(),
            cell.method_type.as_str(),
            cell.problem.as_str(),
            &cell.threshold.to_string(),
            &cell.n.to_string(),
            &fmt_opt(cell.rmse_min),
            "",
        ])?;
    }
    for gm in &report.gms {
        w.write_record([
            gm.method.as_str(),
            gm.method_type.as_str(),
            gm.problem.as_str(),
            "gm",
            "",
            "",
            &fmt_opt(gm.gm_min),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Rows of a report CSV, as (method, type, problem, filter, n, rmse, gm).
pub type ReportCsvRow = (
    String,
    String,
    String,
    String,
    Option<usize>,
    Option<f64>,
    Option<f64>,
);

pub fn read_report_csv(path: impl AsRef<Path>) -> Result<Vec<ReportCsvRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record?;
        if record.len() != 7 {
            return Err(csv_err(line, format!("expected 7 fields, got {}", record.len())));
        }
        let opt_n = if record[4].is_empty() {
            None
        } else {
            Some(
                record[4]
                    .parse()
                    .map_err(|_| csv_err(line, "n must be an integer"))?,
            )
        };
        let opt_f = |idx: usize| -> Result<Option<f64>> {
            if record[idx].is_empty() {
                Ok(None)
            } else {
                Ok(Some(record[idx].parse().map_err(|_| {
                    csv_err(line, "expected a real number")
                })?))
            }
        };
        out.push((
            record[0].to_string(),
            record[1].to_string(),
            record[2].to_string(),
            record[3].to_string(),
            opt_n,
            opt_f(5)?,
            opt_f(6)?,
        ));
    }
    Ok(out)
}

/// Decode audit dump: the five pipeline stages (raw scores, smoothed,
/// differences, de-noised differences, spline extrema) as one CSV.
pub fn write_audit_csv(path: impl AsRef<Path>, audit: &DecodeAudit) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    writeln!(file, "stage,minute,value")?;
    for (t, v) in audit.shifted_minutes.iter().zip(&audit.shifted_scores) {
        writeln!(
            file,
            "raw_scores,{},{}",
            t,
            v.map(|x| x.to_string()).unwrap_or_default()
        )?;
    }
    for (t, v) in audit.shifted_minutes.iter().zip(&audit.smoothed) {
        writeln!(file, "smoothed,{},{}", t, v)?;
    }
    for (t, v) in audit.diff_minutes.iter().zip(&audit.diffs) {
        writeln!(file, "differences,{},{}", t, v)?;
    }
    for (t, v) in audit.diff_minutes.iter().zip(&audit.denoised) {
        writeln!(file, "denoised,{},{}", t, v)?;
    }
    writeln!(file, "extrema,{},{}", audit.rise.0, audit.rise.1)?;
    writeln!(file, "extrema,{},{}", audit.fall.0, audit.fall.1)?;
    Ok(())
}
