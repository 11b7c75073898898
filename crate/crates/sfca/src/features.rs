//! Derivative predictor features: first/second differences, peak and
//! trough dummies, wavelet compression statics, and scalar statics.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SfcaError};
use crate::grid::{Dow, SegmentGrid, ALL_DOWS};
use crate::trajectory::CityYearRecord;
use crate::wavelet::{wavelet_approx, Symlet};

/// Data source driving the feature layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Internet,
    Electricity,
}

impl Source {
    pub fn name(self) -> &'static str {
        match self {
            Source::Internet => "internet",
            Source::Electricity => "electricity",
        }
    }

    pub fn parse(s: &str) -> Option<Source> {
        match s {
            "internet" => Some(Source::Internet),
            "electricity" => Some(Source::Electricity),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Level,
    Diff1,
    Diff2,
    PeakDummy,
    TroughDummy,
    WaveletStatic,
    ScalarStatic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub name: String,
    pub kind: FeatureKind,
    pub dow: Option<Dow>,
}

/// Ordered feature layout shared by every record in a design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub source: Source,
    pub include_latitude: bool,
    pub per_segment: Vec<FeatureDescriptor>,
    pub statics: Vec<FeatureDescriptor>,
}

impl FeatureSchema {
    pub fn new(source: Source, include_latitude: bool) -> Self {
        let mut per_segment = Vec::new();
        for kind in [
            FeatureKind::Level,
            FeatureKind::Diff1,
            FeatureKind::Diff2,
            FeatureKind::PeakDummy,
            FeatureKind::TroughDummy,
        ] {
            for dow in ALL_DOWS {
                let tag = match kind {
                    FeatureKind::Level => "level",
                    FeatureKind::Diff1 => "diff1",
                    FeatureKind::Diff2 => "diff2",
                    FeatureKind::PeakDummy => "peak",
                    FeatureKind::TroughDummy => "trough",
                    _ => unreachable!(),
                };
                per_segment.push(FeatureDescriptor {
                    name: format!("{tag}_{}", dow.name()),
                    kind,
                    dow: Some(dow),
                });
            }
        }
        let mut statics = Vec::new();
        match source {
            Source::Internet => {
                // Weekly 672-length compression (sym3, level 7): 10 coefficients.
                for i in 1..=10 {
                    statics.push(FeatureDescriptor {
                        name: format!("wav_week_{i}"),
                        kind: FeatureKind::WaveletStatic,
                        dow: None,
                    });
                }
            }
            Source::Electricity => {
                // Per-dow compression (sym3, level 6): 6 coefficients each.
                for dow in ALL_DOWS {
                    for i in 1..=6 {
                        statics.push(FeatureDescriptor {
                            name: format!("wav_{}_{i}", dow.name()),
                            kind: FeatureKind::WaveletStatic,
                            dow: Some(dow),
                        });
                    }
                }
            }
        }
        if include_latitude {
            statics.push(FeatureDescriptor {
                name: "abs_latitude".to_string(),
                kind: FeatureKind::ScalarStatic,
                dow: None,
            });
        }
        FeatureSchema {
            source,
            include_latitude,
            per_segment,
            statics,
        }
    }

    pub fn per_segment_width(&self) -> usize {
        self.per_segment.len()
    }

    pub fn static_width(&self) -> usize {
        self.statics.len()
    }

    pub fn total_width(&self) -> usize {
        self.per_segment.len() + self.statics.len()
    }

    pub fn column_names(&self) -> Vec<String> {
        self.per_segment
            .iter()
            .chain(self.statics.iter())
            .map(|d| d.name.clone())
            .collect()
    }
}

/// Per-segment feature block plus the static vector for one city-year.
/// Rows cover segments `3..=S` (the first two are lost to differencing).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub city_id: String,
    pub year: i32,
    /// First usable segment index (always 3 on the default layout).
    pub first_segment: usize,
    /// Row-major block of shape (usable_segments x per_segment_width).
    pub block: Vec<Vec<f64>>,
    pub statics: Vec<f64>,
}

/// `d[s] = v[s] - v[s-1]`; the first entry is dropped (None).
pub fn first_difference(values: &[f64]) -> Result<Vec<Option<f64>>> {
    if values.len() < 2 {
        return Err(SfcaError::SeriesTooShort {
            need: 2,
            got: values.len(),
        });
    }
    let mut out = vec![None; values.len()];
    for s in 1..values.len() {
        out[s] = Some(values[s] - values[s - 1]);
    }
    Ok(out)
}

/// Difference of the first difference; drops the first two entries.
pub fn second_difference(values: &[f64]) -> Result<Vec<Option<f64>>> {
    if values.len() < 3 {
        return Err(SfcaError::SeriesTooShort {
            need: 3,
            got: values.len(),
        });
    }
    let mut out = vec![None; values.len()];
    for s in 2..values.len() {
        out[s] = Some(values[s] - 2.0 * values[s - 1] + values[s - 2]);
    }
    Ok(out)
}

/// Indicator vectors marking the argmax and argmin segments of a day.
/// Ties break toward the earliest segment.
pub fn peak_trough_dummies(values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut peak_idx = 0;
    let mut trough_idx = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[peak_idx] {
            peak_idx = i;
        }
        if v < values[trough_idx] {
            trough_idx = i;
        }
    }
    let mut peak = vec![0.0; values.len()];
    let mut trough = vec![0.0; values.len()];
    peak[peak_idx] = 1.0;
    trough[trough_idx] = 1.0;
    (peak, trough)
}

/// Multi-level symlet compression of a series; see [`wavelet_approx`].
pub fn wavelet_compress(series: &[f64], wavelet: Symlet, level: usize) -> Result<Vec<f64>> {
    wavelet_approx(series, wavelet, level)
}

/// Build the full feature table for one record under a schema.
pub fn assemble_features(
    record: &CityYearRecord,
    schema: &FeatureSchema,
    grid: &SegmentGrid,
) -> Result<FeatureTable> {
    let s_count = grid.segments_per_day;
    for dow in ALL_DOWS {
        if record.week.trace(dow).len() != s_count {
            return Err(SfcaError::SchemaMismatch(format!(
                "trace length for {} is {}, grid expects {}",
                dow.name(),
                record.week.trace(dow).len(),
                s_count
            )));
        }
    }

    // Per-dow derived series.
    let mut per_dow: Vec<(Vec<Option<f64>>, Vec<Option<f64>>, Vec<f64>, Vec<f64>)> =
        Vec::with_capacity(7);
    for dow in ALL_DOWS {
        let v = record.week.trace(dow);
        let d1 = first_difference(v)?;
        let d2 = second_difference(v)?;
        let (peak, trough) = peak_trough_dummies(v);
        per_dow.push((d1, d2, peak, trough));
    }

    let first_segment = 3;
    let usable = grid.usable_segments();
    let mut block = Vec::with_capacity(usable);
    for s in (first_segment - 1)..s_count {
        let mut row = Vec::with_capacity(schema.per_segment_width());
        for desc in &schema.per_segment {
            let dow = desc.dow.expect("per-segment features carry a dow");
            let v = record.week.trace(dow);
            let (d1, d2, peak, trough) = &per_dow[dow as usize];
            let x = match desc.kind {
                FeatureKind::Level => v[s],
                FeatureKind::Diff1 => d1[s].expect("s >= 2"),
                FeatureKind::Diff2 => d2[s].expect("s >= 3"),
                FeatureKind::PeakDummy => peak[s],
                FeatureKind::TroughDummy => trough[s],
                _ => unreachable!(),
            };
            row.push(x);
        }
        block.push(row);
    }

    let mut statics = Vec::with_capacity(schema.static_width());
    match schema.source {
        Source::Internet => {
            let coeffs = wavelet_compress(&record.week.concat(), Symlet::Sym3, 7)?;
            if coeffs.len() != 10 {
                return Err(SfcaError::SchemaMismatch(format!(
                    "weekly compression produced {} coefficients, expected 10",
                    coeffs.len()
                )));
            }
            statics.extend(coeffs);
        }
        Source::Electricity => {
            for dow in ALL_DOWS {
                let coeffs = wavelet_compress(record.week.trace(dow), Symlet::Sym3, 6)?;
                if coeffs.len() != 6 {
                    return Err(SfcaError::SchemaMismatch(format!(
                        "daily compression produced {} coefficients, expected 6",
                        coeffs.len()
                    )));
                }
                statics.extend(coeffs);
            }
        }
    }
    if schema.include_latitude {
        let lat = record
            .static_features
            .iter()
            .find(|(n, _)| n == "latitude")
            .map(|(_, v)| v.abs())
            .ok_or_else(|| {
                SfcaError::SchemaMismatch(format!(
                    "record {} has no latitude static feature",
                    record.city_id
                ))
            })?;
        statics.push(lat);
    }

    for (i, row) in block.iter().enumerate() {
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(SfcaError::SchemaMismatch(format!(
                "non-finite feature at row {i} col {j}"
            )));
        }
    }

    Ok(FeatureTable {
        city_id: record.city_id.clone(),
        year: record.year,
        first_segment,
        block,
        statics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::SyntheticWeek;

    fn record_with_traces(traces: [Vec<f64>; 7]) -> CityYearRecord {
        CityYearRecord {
            city_id: "a".into(),
            year: 2010,
            week: SyntheticWeek {
                city_id: "a".into(),
                year: 2010,
                traces,
            },
            static_features: vec![("latitude".into(), -33.9)],
            outcomes: vec![],
        }
    }

    #[test]
    fn first_difference_example() {
        let d = first_difference(&[1.0, 3.0, 6.0]).unwrap();
        assert_eq!(d, vec![None, Some(2.0), Some(3.0)]);
    }

    #[test]
    fn difference_of_constant_is_zero() {
        let d = first_difference(&[4.0; 5]).unwrap();
        assert!(d[1..].iter().all(|v| v.unwrap() == 0.0));
    }

    #[test]
    fn second_difference_example() {
        let d = second_difference(&[1.0, 3.0, 6.0, 10.0]).unwrap();
        assert_eq!(d, vec![None, None, Some(1.0), Some(1.0)]);
    }

    #[test]
    fn difference_too_short() {
        assert!(first_difference(&[1.0]).is_err());
        assert!(second_difference(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn cumsum_reconstructs_input() {
        let v: Vec<f64> = (0..30).map(|i| ((i * 13 + 5) % 7) as f64).collect();
        let d = first_difference(&v).unwrap();
        let mut rebuilt = vec![v[0]];
        for x in d[1..].iter() {
            rebuilt.push(rebuilt.last().unwrap() + x.unwrap());
        }
        for (a, b) in v.iter().zip(&rebuilt) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn dummies_unique_max() {
        let mut v = vec![0.0; 96];
        v[39] = 2.0;
        v[10] = -1.0;
        let (peak, trough) = peak_trough_dummies(&v);
        assert_eq!(peak.iter().position(|&x| x == 1.0), Some(39));
        assert_eq!(trough.iter().position(|&x| x == 1.0), Some(10));
        assert_eq!(peak.iter().sum::<f64>(), 1.0);
        assert_eq!(trough.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn dummies_tie_rule() {
        let (peak, trough) = peak_trough_dummies(&[1.0; 8]);
        assert_eq!(peak.iter().position(|&x| x == 1.0), Some(0));
        assert_eq!(trough.iter().position(|&x| x == 1.0), Some(0));
    }

    #[test]
    fn internet_schema_widths() {
        let schema = FeatureSchema::new(Source::Internet, true);
        assert_eq!(schema.per_segment_width(), 35);
        assert_eq!(schema.static_width(), 11);
        let names = schema.column_names();
        let mut unique = names.clone();
        unique.sort();
        unique.dedup();
        assert_eq!(unique.len(), names.len());
    }

    #[test]
    fn electricity_schema_widths() {
        let schema = FeatureSchema::new(Source::Electricity, false);
        assert_eq!(schema.per_segment_width(), 35);
        assert_eq!(schema.static_width(), 42);
        let with_lat = FeatureSchema::new(Source::Electricity, true);
        assert_eq!(with_lat.static_width(), 43);
    }

    #[test]
    fn assemble_internet_dimensions() {
        let grid = SegmentGrid::default();
        let traces: [Vec<f64>; 7] = std::array::from_fn(|d| {
            (0..96)
                .map(|s| 0.5 + 0.4 * ((s + d * 3) as f64 * 0.07).sin())
                .collect()
        });
        let record = record_with_traces(traces);
        let schema = FeatureSchema::new(Source::Internet, true);
        let table = assemble_features(&record, &schema, &grid).unwrap();
        assert_eq!(table.block.len(), 94);
        assert_eq!(table.block[0].len(), 35);
        assert_eq!(table.statics.len(), 11);
        // Latitude enters as absolute value.
        assert_eq!(table.statics[10], 33.9);
    }

    #[test]
    fn assemble_electricity_dimensions() {
        let grid = SegmentGrid::default();
        let traces: [Vec<f64>; 7] =
            std::array::from_fn(|d| (0..96).map(|s| ((s * (d + 1)) % 9) as f64 * 0.1).collect());
        let record = record_with_traces(traces);
        let schema = FeatureSchema::new(Source::Electricity, false);
        let table = assemble_features(&record, &schema, &grid).unwrap();
        assert_eq!(table.block.len(), 94);
        assert_eq!(table.block[0].len(), 35);
        assert_eq!(table.statics.len(), 42);
    }

    #[test]
    fn zero_signal_week() {
        let grid = SegmentGrid::default();
        let record = record_with_traces(std::array::from_fn(|_| vec![0.0; 96]));
        let schema = FeatureSchema::new(Source::Internet, false);
        let table = assemble_features(&record, &schema, &grid).unwrap();
        for (j, desc) in schema.per_segment.iter().enumerate() {
            for (i, row) in table.block.iter().enumerate() {
                match desc.kind {
                    FeatureKind::PeakDummy | FeatureKind::TroughDummy => {
                        // Tie rule puts the single 1 at segment 1, which is dropped.
                        assert_eq!(row[j], 0.0, "row {i} col {j}");
                    }
                    _ => assert_eq!(row[j], 0.0, "row {i} col {j}"),
                }
            }
        }
        assert!(table.statics.iter().all(|&v| v.abs() < 1e-12));
    }
}
