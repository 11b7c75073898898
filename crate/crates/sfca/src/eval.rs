//! Benchmark harness: leave-one-out cross-validation across cities,
//! population filters, per-problem RMSE, and geometric-mean aggregation
//! into a method-comparison report.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::decode::{decode_times, duration, DecodedTimes, ScoreTrace};
use crate::error::{Result, SfcaError};
use crate::features::{assemble_features, FeatureSchema, FeatureTable, Source};
use crate::grid::SegmentGrid;
use crate::learners::{fit, predict, ModelSpec};
use crate::trajectory::{Activity, ActivityOutcome, CityYearRecord};
use crate::transform::{labels_for_records, stack};

/// Population thresholds of the comparison tables (strictly greater than).
pub const FILTER_THRESHOLDS: [u64; 5] =
    [250_000, 500_000, 1_000_000, 2_500_000, 5_000_000];

/// Minimum number of distinct cities for LOOCV.
pub const MIN_CITIES: usize = 3;

/// Which scalar of the activity window a problem predicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Target {
    Start,
    Stop,
    Duration,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::Start => "start",
            Target::Stop => "stop",
            Target::Duration => "duration",
        }
    }

    pub const ALL: [Target; 3] = [Target::Start, Target::Stop, Target::Duration];
}

/// One of the 12 prediction problems: source x activity x target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProblemSpec {
    pub source: Source,
    pub activity: Activity,
    pub target: Target,
}

impl ProblemSpec {
    pub fn all() -> Vec<ProblemSpec> {
        let mut out = Vec::with_capacity(12);
        for source in [Source::Internet, Source::Electricity] {
            for activity in [Activity::Sleep, Activity::Work] {
                for target in Target::ALL {
                    out.push(ProblemSpec {
                        source,
                        activity,
                        target,
                    });
                }
            }
        }
        out
    }

    pub fn label(&self) -> String {
        format!(
            "{}:{}:{}",
            self.source.name(),
            self.activity.name(),
            self.target.name()
        )
    }

    /// Sleep onset wraps midnight, so its errors live on the circle.
    pub fn circular(&self) -> bool {
        self.activity == Activity::Sleep && self.target == Target::Start
    }
}

/// A source's records with their feature tables and wide regression rows
/// computed once.
#[derive(Debug, Clone)]
pub struct PreparedDataset {
    pub source: Source,
    pub grid: SegmentGrid,
    pub schema: FeatureSchema,
    pub records: Vec<CityYearRecord>,
    pub tables: Vec<FeatureTable>,
    /// 672 weekly levels followed by the schema's static features.
    pub wide_rows: Vec<Vec<f64>>,
    pub wide_names: Vec<String>,
}

impl PreparedDataset {
    pub fn new(
        source: Source,
        records: Vec<CityYearRecord>,
        grid: SegmentGrid,
        include_latitude: bool,
    ) -> Result<Self> {
        let schema = FeatureSchema::new(source, include_latitude);
        let mut tables = Vec::with_capacity(records.len());
        let mut wide_rows = Vec::with_capacity(records.len());
        for record in &records {
            let table = assemble_features(record, &schema, &grid)?;
            let mut wide = record.week.concat();
            wide.extend_from_slice(&table.statics);
            tables.push(table);
            wide_rows.push(wide);
        }
        let mut wide_names: Vec<String> = (1..=7 * grid.segments_per_day)
            .map(|i| format!("seg_{:03}", i))
            .collect();
        wide_names.extend(
            schema
                .column_names()
                .into_iter()
                .skip(schema.per_segment_width()),
        );
        Ok(PreparedDataset {
            source,
            grid,
            schema,
            records,
            tables,
            wide_rows,
            wide_names,
        })
    }

    /// Distinct city ids in sorted order.
    pub fn cities(&self, subset: &[usize]) -> Vec<String> {
        let mut ids: Vec<String> = subset
            .iter()
            .map(|&i| self.records[i].city_id.clone())
            .collect();
        ids.sort();
        ids.dedup();
        ids
    }
}

/// Indices of records whose population is strictly above the threshold.
pub fn population_filter(records: &[CityYearRecord], threshold: u64) -> Result<Vec<usize>> {
    let subset: Vec<usize> = records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.population().map(|p| p > threshold).unwrap_or(false))
        .map(|(i, _)| i)
        .collect();
    if subset.is_empty() {
        return Err(SfcaError::EmptyFilter { threshold });
    }
    Ok(subset)
}

/// Signed error respecting the target's geometry.
pub fn time_difference(predicted: f64, observed: f64, circular: bool) -> f64 {
    if circular {
        let d = (predicted - observed).rem_euclid(1440.0);
        d.min(1440.0 - d)
    } else {
        predicted - observed
    }
}

/// Root mean square error in minutes; `circular` wraps differences on the
/// 1440-minute circle.
pub fn rmse(predicted: &[f64], observed: &[f64], circular: bool) -> Result<f64> {
    if predicted.len() != observed.len() || predicted.is_empty() {
        return Err(SfcaError::DimensionMismatch(format!(
            "rmse over {} predictions vs {} observations",
            predicted.len(),
            observed.len()
        )));
    }
    let sum_sq: f64 = predicted
        .iter()
        .zip(observed)
        .map(|(&p, &o)| {
            let d = time_difference(p, o, circular);
            d * d
        })
        .sum();
    Ok((sum_sq / predicted.len() as f64).sqrt())
}

/// exp(mean(log v)); every input must be positive.
pub fn geometric_mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(SfcaError::NonPositiveGeometricMean(f64::NAN));
    }
    if let Some(&bad) = values.iter().find(|&&v| v <= 0.0 || !v.is_finite()) {
        return Err(SfcaError::NonPositiveGeometricMean(bad));
    }
    let mean_log = values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64;
    Ok(mean_log.exp())
}

fn fnv1a(s: &str) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Per-fold model seed, stable in the master seed and held-out city only.
pub fn fold_seed(master: u64, city_id: &str) -> u64 {
    let mut z = master ^ fnv1a(city_id);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Scalar ground truth of a problem target for one outcome.
pub fn target_value(outcome: &ActivityOutcome, target: Target) -> f64 {
    match target {
        Target::Start => outcome.start_min,
        Target::Stop => outcome.stop_min,
        Target::Duration => {
            duration(outcome.start_min, outcome.stop_min, outcome.activity)
        }
    }
}

/// Scalar read-out of a decoded window for one target.
pub fn decoded_value(decoded: &DecodedTimes, target: Target) -> f64 {
    match target {
        Target::Start => decoded.start_min,
        Target::Stop => decoded.stop_min,
        Target::Duration => decoded.duration_min,
    }
}

/// One held-out city-year on the classification/decode path.
#[derive(Debug, Clone)]
pub struct DecodeFold {
    pub city_id: String,
    pub year: i32,
    pub truth: ActivityOutcome,
    pub decoded: Option<DecodedTimes>,
    /// Decode failure message, when `decoded` is absent.
    pub note: Option<String>,
    /// Training rows sharing the held-out city id (must be 0).
    pub train_leaks: usize,
}

/// One held-out city-year on the direct regression path.
#[derive(Debug, Clone)]
pub struct ScalarFold {
    pub city_id: String,
    pub year: i32,
    pub truth: f64,
    pub predicted: f64,
    pub train_leaks: usize,
}

fn check_min_cities(n: usize) -> Result<()> {
    if n < MIN_CITIES {
        return Err(SfcaError::TooFewCities {
            need: MIN_CITIES,
            got: n,
        });
    }
    Ok(())
}

/// LOOCV on the SFCA path: stack, threshold, fit a classifier, score the
/// held-out city's segments, decode. All city-years of the held-out city
/// leave the training set together.
pub fn loocv_decode(
    prepared: &PreparedDataset,
    spec: &ModelSpec,
    activity: Activity,
    subset: &[usize],
    master_seed: u64,
) -> Result<Vec<DecodeFold>> {
    let cities = prepared.cities(subset);
    check_min_cities(cities.len())?;

    let folds: Vec<Result<Vec<DecodeFold>>> = cities
        .par_iter()
        .map(|held| -> Result<Vec<DecodeFold>> {
            let train_idx: Vec<usize> = subset
                .iter()
                .copied()
                .filter(|&i| prepared.records[i].city_id != *held)
                .collect();
            let test_idx: Vec<usize> = subset
                .iter()
                .copied()
                .filter(|&i| prepared.records[i].city_id == *held)
                .collect();
            let train_tables: Vec<FeatureTable> = train_idx
                .iter()
                .map(|&i| prepared.tables[i].clone())
                .collect();
            let design = stack(&train_tables, &prepared.schema)?;
            let train_leaks = design
                .rows
                .iter()
                .filter(|k| k.city_id == *held)
                .count();
            let train_records: Vec<&CityYearRecord> =
                train_idx.iter().map(|&i| &prepared.records[i]).collect();
            let labels = labels_for_records(
                &train_records,
                activity,
                &prepared.grid,
                prepared.tables[train_idx[0]].first_segment,
            )?;
            let y: Vec<f64> = labels
                .labels
                .iter()
                .map(|&b| if b { 1.0 } else { 0.0 })
                .collect();
            let mut fold_spec = spec.clone();
            fold_spec.seed = fold_seed(master_seed, held);
            let model = fit(
                &fold_spec,
                &design.matrix,
                &y,
                None,
                &design.column_names,
            )?;

            let mut out = Vec::with_capacity(test_idx.len());
            for &i in &test_idx {
                let table = &prepared.tables[i];
                let record = &prepared.records[i];
                let truth = record.outcome(activity).ok_or_else(|| {
                    SfcaError::SchemaMismatch(format!(
                        "record {} year {} has no {} outcome",
                        record.city_id,
                        record.year,
                        activity.name()
                    ))
                })?;
                let mut rows = Vec::with_capacity(table.block.len());
                for block_row in &table.block {
                    let mut row = block_row.clone();
                    row.extend_from_slice(&table.statics);
                    rows.push(row);
                }
                let scores = predict(&model, &rows)?;
                let mut padded = vec![None; table.first_segment - 1];
                padded.extend(scores.into_iter().map(Some));
                let trace = ScoreTrace {
                    city_id: record.city_id.clone(),
                    year: record.year,
                    activity,
                    scores: padded,
                };
                let (decoded, note) = match decode_times(&trace, &prepared.grid) {
                    Ok(d) => (Some(d), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                out.push(DecodeFold {
                    city_id: record.city_id.clone(),
                    year: record.year,
                    truth: truth.clone(),
                    decoded,
                    note,
                    train_leaks,
                });
            }
            Ok(out)
        })
        .collect();

    let mut all = Vec::new();
    for f in folds {
        all.extend(f?);
    }
    Ok(all)
}

/// LOOCV on the baseline path: fit the method directly on wide rows with
/// the scalar minute target.
pub fn loocv_regression(
    prepared: &PreparedDataset,
    spec: &ModelSpec,
    problem: &ProblemSpec,
    subset: &[usize],
    master_seed: u64,
) -> Result<Vec<ScalarFold>> {
    let cities = prepared.cities(subset);
    check_min_cities(cities.len())?;

    let folds: Vec<Result<Vec<ScalarFold>>> = cities
        .par_iter()
        .map(|held| -> Result<Vec<ScalarFold>> {
            let train_idx: Vec<usize> = subset
                .iter()
                .copied()
                .filter(|&i| prepared.records[i].city_id != *held)
                .collect();
            let test_idx: Vec<usize> = subset
                .iter()
                .copied()
                .filter(|&i| prepared.records[i].city_id == *held)
                .collect();
            let mut x = Vec::with_capacity(train_idx.len());
            let mut y = Vec::with_capacity(train_idx.len());
            let mut train_leaks = 0;
            for &i in &train_idx {
                let record = &prepared.records[i];
                if record.city_id == *held {
                    train_leaks += 1;
                }
                let outcome = record.outcome(problem.activity).ok_or_else(|| {
                    SfcaError::SchemaMismatch(format!(
                        "record {} year {} has no {} outcome",
                        record.city_id,
                        record.year,
                        problem.activity.name()
                    ))
                })?;
                x.push(prepared.wide_rows[i].clone());
                y.push(target_value(outcome, problem.target));
            }
            let mut fold_spec = spec.clone();
            fold_spec.seed = fold_seed(master_seed, held);
            let model = fit(&fold_spec, &x, &y, None, &prepared.wide_names)?;

            let mut out = Vec::with_capacity(test_idx.len());
            for &i in &test_idx {
                let record = &prepared.records[i];
                let outcome = record.outcome(problem.activity).ok_or_else(|| {
                    SfcaError::SchemaMismatch(format!(
                        "record {} year {} has no {} outcome",
                        record.city_id,
                        record.year,
                        problem.activity.name()
                    ))
                })?;
                let predicted = predict(&model, &[prepared.wide_rows[i].clone()])?[0];
                out.push(ScalarFold {
                    city_id: record.city_id.clone(),
                    year: record.year,
                    truth: target_value(outcome, problem.target),
                    predicted,
                    train_leaks,
                });
            }
            Ok(out)
        })
        .collect();

    let mut all = Vec::new();
    for f in folds {
        all.extend(f?);
    }
    Ok(all)
}

/// One (method, problem, filter) cell of the comparison matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportCell {
    pub method: String,
    /// "sfca" or "regression".
    pub method_type: String,
    pub problem: String,
    pub threshold: u64,
    /// City-years contributing to the RMSE.
    pub n: usize,
    /// City-years excluded by decode failures.
    pub excluded: usize,
    pub rmse_min: Option<f64>,
    pub error: Option<String>,
}

/// GM over the five filter RMSEs of one (method, problem).
#[derive(Debug, Clone, PartialEq)]
pub struct GmEntry {
    pub method: String,
    pub method_type: String,
    pub problem: String,
    pub gm_min: Option<f64>,
}

/// Full comparison matrix plus table annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub cells: Vec<ReportCell>,
    pub gms: Vec<GmEntry>,
    /// Per problem: regression method with the lowest GM.
    pub best_regression: BTreeMap<String, String>,
    /// Per problem: method with the lowest GM overall.
    pub best_overall: BTreeMap<String, String>,
    /// Per problem: SFCA methods whose GM beats the best regression GM.
    pub sfca_beating_regression: BTreeMap<String, Vec<String>>,
    /// Total training-row leaks observed across every fold (must be 0).
    pub total_leaks: usize,
}

impl EvaluationReport {
    pub fn cell(&self, method: &str, problem: &str, threshold: u64) -> Option<&ReportCell> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.problem == problem && c.threshold == threshold)
    }

    pub fn gm(&self, method: &str, problem: &str) -> Option<f64> {
        self.gms
            .iter()
            .find(|g| g.method == method && g.problem == problem)
            .and_then(|g| g.gm_min)
    }
}

fn method_type(spec: &ModelSpec) -> &'static str {
    if spec.family.is_classifier() {
        "sfca"
    } else {
        "regression"
    }
}

/// Evaluate every method on every problem at every population filter.
/// Individual cell failures are recorded in-report; the run continues.
pub fn benchmark_matrix(
    datasets: &[PreparedDataset],
    methods: &[ModelSpec],
    thresholds: &[u64],
    master_seed: u64,
) -> Result<EvaluationReport> {
    let mut cells: Vec<ReportCell> = Vec::new();
    let mut total_leaks = 0usize;

    for spec in methods {
        let label = spec.family.label().to_string();
        let mtype = method_type(spec).to_string();
        for dataset in datasets {
            for activity in [Activity::Sleep, Activity::Work] {
                for &threshold in thresholds {
                    let subset = match population_filter(&dataset.records, threshold) {
                        Ok(s) => s,
                        Err(e) => {
                            for target in Target::ALL {
                                let problem = ProblemSpec {
                                    source: dataset.source,
                                    activity,
                                    target,
                                };
                                cells.push(ReportCell {
                                    method: label.clone(),
                                    method_type: mtype.clone(),
                                    problem: problem.label(),
                                    threshold,
                                    n: 0,
                                    excluded: 0,
                                    rmse_min: None,
                                    error: Some(e.to_string()),
                                });
                            }
                            continue;
                        }
                    };
                    if spec.family.is_classifier() {
                        match loocv_decode(dataset, spec, activity, &subset, master_seed) {
                            Ok(folds) => {
                                total_leaks +=
                                    folds.iter().map(|f| f.train_leaks).sum::<usize>();
                                for target in Target::ALL {
                                    let problem = ProblemSpec {
                                        source: dataset.source,
                                        activity,
                                        target,
                                    };
                                    let mut pred = Vec::new();
                                    let mut obs = Vec::new();
                                    let mut excluded = 0;
                                    for f in &folds {
                                        match &f.decoded {
                                            Some(d) => {
                                                pred.push(decoded_value(d, target));
                                                obs.push(target_value(&f.truth, target));
                                            }
                                            None => excluded += 1,
                                        }
                                    }
                                    let (rmse_min, error) =
                                        match rmse(&pred, &obs, problem.circular()) {
                                            Ok(v) => (Some(v), None),
                                            Err(e) => (None, Some(e.to_string())),
                                        };
                                    cells.push(ReportCell {
                                        method: label.clone(),
                                        method_type: mtype.clone(),
                                        problem: problem.label(),
                                        threshold,
                                        n: pred.len(),
                                        excluded,
                                        rmse_min,
                                        error,
                                    });
                                }
                            }
                            Err(e) => {
                                for target in Target::ALL {
                                    let problem = ProblemSpec {
                                        source: dataset.source,
                                        activity,
                                        target,
                                    };
                                    cells.push(ReportCell {
                                        method: label.clone(),
                                        method_type: mtype.clone(),
                                        problem: problem.label(),
                                        threshold,
                                        n: 0,
                                        excluded: 0,
                                        rmse_min: None,
                                        error: Some(e.to_string()),
                                    });
                                }
                            }
                        }
                    } else {
                        for target in Target::ALL {
                            let problem = ProblemSpec {
                                source: dataset.source,
                                activity,
                                target,
                            };
                            let cell = match loocv_regression(
                                dataset,
                                spec,
                                &problem,
                                &subset,
                                master_seed,
                            ) {
                                Ok(folds) => {
                                    total_leaks +=
                                        folds.iter().map(|f| f.train_leaks).sum::<usize>();
                                    let pred: Vec<f64> =
                                        folds.iter().map(|f| f.predicted).collect();
                                    let obs: Vec<f64> =
                                        folds.iter().map(|f| f.truth).collect();
                                    let (rmse_min, error) =
                                        match rmse(&pred, &obs, problem.circular()) {
                                            Ok(v) => (Some(v), None),
                                            Err(e) => (None, Some(e.to_string())),
                                        };
                                    ReportCell {
                                        method: label.clone(),
                                        method_type: mtype.clone(),
                                        problem: problem.label(),
                                        threshold,
                                        n: pred.len(),
                                        excluded: 0,
                                        rmse_min,
                                        error,
                                    }
                                }
                                Err(e) => ReportCell {
                                    method: label.clone(),
                                    method_type: mtype.clone(),
                                    problem: problem.label(),
                                    threshold,
                                    n: 0,
                                    excluded: 0,
                                    rmse_min: None,
                                    error: Some(e.to_string()),
                                },
                            };
                            cells.push(cell);
                        }
                    }
                }
            }
        }
    }

    cells.sort_by(|a, b| {
        (&a.method, &a.problem, a.threshold).cmp(&(&b.method, &b.problem, b.threshold))
    });

    // GM per (method, problem), defined only when all 5 filter cells
    // produced an RMSE.
    let mut gms: Vec<GmEntry> = Vec::new();
    let mut seen: Vec<(String, String, String)> = cells
        .iter()
        .map(|c| (c.method.clone(), c.method_type.clone(), c.problem.clone()))
        .collect();
    seen.dedup();
    for (method, mtype, problem) in seen {
        let values: Vec<f64> = cells
            .iter()
            .filter(|c| c.method == method && c.problem == problem)
            .filter_map(|c| c.rmse_min)
            .collect();
        let gm_min = if values.len() == thresholds.len() {
            geometric_mean(&values).ok()
        } else {
            None
        };
        gms.push(GmEntry {
            method,
            method_type: mtype,
            problem,
            gm_min,
        });
    }

    let mut best_regression = BTreeMap::new();
    let mut best_overall = BTreeMap::new();
    let mut sfca_beating_regression = BTreeMap::new();
    let problems: Vec<String> = {
        let mut p: Vec<String> = gms.iter().map(|g| g.problem.clone()).collect();
        p.sort();
        p.dedup();
        p
    };
    for problem in problems {
        let of_problem: Vec<&GmEntry> =
            gms.iter().filter(|g| g.problem == problem).collect();
        let best_by = |pred: &dyn Fn(&GmEntry) -> bool| -> Option<&GmEntry> {
            of_problem
                .iter()
                .filter(|g| pred(g) && g.gm_min.is_some())
                .min_by(|a, b| a.gm_min.partial_cmp(&b.gm_min).unwrap())
                .copied()
        };
        if let Some(best) = best_by(&|g: &GmEntry| g.method_type == "regression") {
            best_regression.insert(problem.clone(), best.method.clone());
            let bar = best.gm_min.unwrap();
            let beating: Vec<String> = of_problem
                .iter()
                .filter(|g| {
                    g.method_type == "sfca" && g.gm_min.map(|v| v < bar).unwrap_or(false)
                })
                .map(|g| g.method.clone())
                .collect();
            sfca_beating_regression.insert(problem.clone(), beating);
        }
        if let Some(best) = best_by(&|_| true) {
            best_overall.insert(problem.clone(), best.method.clone());
        }
    }

    Ok(EvaluationReport {
        cells,
        gms,
        best_regression,
        best_overall,
        sfca_beating_regression,
        total_leaks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::Family;
    use crate::synth::{generate_city, CityGenParams, DEFAULT_STEEPNESS};
    use crate::trajectory::SyntheticWeek;

    fn grid() -> SegmentGrid {
        SegmentGrid::default()
    }

    fn params(city: &str, population: u64, seed: u64) -> CityGenParams {
        CityGenParams {
            city_id: city.into(),
            year: 2010,
            population,
            latitude: 40.0,
            sleep_start_min: 1335.0,
            sleep_stop_min: 407.0,
            work_start_min: 540.0,
            work_stop_min: 1020.0,
            floor: 0.05,
            weekend_shift_min: 45.0,
            base_mw: population as f64 / 1000.0,
            steepness: DEFAULT_STEEPNESS,
            noise_sigma: 0.0,
            burst_rate: 0.0,
            seed,
        }
    }

    /// Record built straight from the noise-free oracle curves.
    fn oracle_record(p: &CityGenParams) -> CityYearRecord {
        let city = generate_city(p, &grid(), 7).unwrap();
        CityYearRecord {
            city_id: p.city_id.clone(),
            year: p.year,
            week: SyntheticWeek {
                city_id: p.city_id.clone(),
                year: p.year,
                traces: city.oracle_curves.clone(),
            },
            static_features: vec![("latitude".to_string(), p.latitude)],
            outcomes: city.outcomes.clone(),
        }
    }

    fn small_dataset(n: usize) -> PreparedDataset {
        let records: Vec<CityYearRecord> = (0..n)
            .map(|i| {
                oracle_record(&params(
                    &format!("c{i}"),
                    200_000 + 300_000 * i as u64,
                    i as u64,
                ))
            })
            .collect();
        PreparedDataset::new(Source::Internet, records, grid(), true).unwrap()
    }

    #[test]
    fn problem_enumeration_is_twelve() {
        let all = ProblemSpec::all();
        assert_eq!(all.len(), 12);
        let labels: std::collections::BTreeSet<String> =
            all.iter().map(|p| p.label()).collect();
        assert_eq!(labels.len(), 12);
        assert!(labels.contains("internet:sleep:start"));
        assert!(labels.contains("electricity:work:duration"));
    }

    #[test]
    fn population_filter_is_strict() {
        let ds = small_dataset(4); // populations 200k, 500k, 800k, 1.1M
        let subset = population_filter(&ds.records, 500_000).unwrap();
        assert_eq!(subset, vec![2, 3]);
        assert!(matches!(
            population_filter(&ds.records, 5_000_000),
            Err(SfcaError::EmptyFilter {
                threshold: 5_000_000
            })
        ));
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0], false).unwrap(), 0.0);
        let v = rmse(&[3.0, 4.0], &[0.0, 0.0], false).unwrap();
        assert!((v - (25.0f64 / 2.0).sqrt()).abs() < 1e-12);
        // 23:58 predicted vs 00:02 observed wraps to 4 minutes.
        let c = rmse(&[1438.0], &[2.0], true).unwrap();
        assert!((c - 4.0).abs() < 1e-12);
        assert!(rmse(&[1.0], &[1.0, 2.0], false).is_err());
        assert!(rmse(&[], &[], false).is_err());
    }

    #[test]
    fn circular_rule_matches_plain_for_small_errors() {
        let pred = [100.0, 350.0, 720.0];
        let obs = [90.0, 400.0, 600.0];
        let plain = rmse(&pred, &obs, false).unwrap();
        let circ = rmse(&pred, &obs, true).unwrap();
        assert!((plain - circ).abs() < 1e-12);
    }

    #[test]
    fn geometric_mean_examples() {
        assert!((geometric_mean(&[4.0, 16.0]).unwrap() - 8.0).abs() < 1e-12);
        assert!((geometric_mean(&[7.5]).unwrap() - 7.5).abs() < 1e-12);
        let vs = [9.64, 12.2, 8.01, 15.5, 10.9];
        let brute = vs.iter().product::<f64>().powf(1.0 / 5.0);
        assert!((geometric_mean(&vs).unwrap() - brute).abs() < 1e-12);
        // Scale equivariance.
        let scaled: Vec<f64> = vs.iter().map(|v| v * 3.0).collect();
        assert!(
            (geometric_mean(&scaled).unwrap() - 3.0 * geometric_mean(&vs).unwrap()).abs()
                < 1e-12
        );
        assert!(matches!(
            geometric_mean(&[1.0, 0.0]),
            Err(SfcaError::NonPositiveGeometricMean(_))
        ));
    }

    #[test]
    fn too_few_cities_rejected() {
        let ds = small_dataset(2);
        let subset: Vec<usize> = (0..2).collect();
        let spec = ModelSpec::new(Family::Ols);
        let problem = ProblemSpec {
            source: Source::Internet,
            activity: Activity::Sleep,
            target: Target::Start,
        };
        assert!(matches!(
            loocv_regression(&ds, &spec, &problem, &subset, 1),
            Err(SfcaError::TooFewCities { .. })
        ));
    }

    #[test]
    fn identical_cities_give_identical_fold_predictions() {
        // Same curves and outcome everywhere: every fold trains on the
        // same data, so a deterministic method predicts the same value.
        let records: Vec<CityYearRecord> = (0..3)
            .map(|i| {
                let mut r = oracle_record(&params("base", 400_000, 0));
                r.city_id = format!("c{i}");
                r.week.city_id = r.city_id.clone();
                r
            })
            .collect();
        let ds = PreparedDataset::new(Source::Internet, records, grid(), true).unwrap();
        let subset: Vec<usize> = (0..3).collect();
        let spec = ModelSpec::new(Family::Ols);
        let problem = ProblemSpec {
            source: Source::Internet,
            activity: Activity::Work,
            target: Target::Duration,
        };
        let folds = loocv_regression(&ds, &spec, &problem, &subset, 3).unwrap();
        assert_eq!(folds.len(), 3);
        // Constant outcome: OLS recovers the constant exactly, RMSE 0.
        for f in &folds {
            assert!((f.predicted - f.truth).abs() < 1e-6, "{f:?}");
            assert_eq!(f.train_leaks, 0);
        }
        let pred: Vec<f64> = folds.iter().map(|f| f.predicted).collect();
        let obs: Vec<f64> = folds.iter().map(|f| f.truth).collect();
        assert!(rmse(&pred, &obs, false).unwrap() < 1e-6);
    }

    #[test]
    fn decode_path_recovers_noiseless_windows_without_leaks() {
        let ds = small_dataset(4);
        let subset: Vec<usize> = (0..4).collect();
        let spec = ModelSpec::new(Family::LogrRidge);
        let folds = loocv_decode(&ds, &spec, Activity::Sleep, &subset, 11).unwrap();
        assert_eq!(folds.len(), 4);
        for f in &folds {
            assert_eq!(f.train_leaks, 0);
            let d = f.decoded.as_ref().expect("decode succeeds");
            assert!(
                time_difference(d.start_min, f.truth.start_min, true).abs() <= 15.0,
                "{f:?}"
            );
            assert!((d.stop_min - f.truth.stop_min).abs() <= 15.0, "{f:?}");
        }
    }

    #[test]
    fn fold_seed_depends_on_city_and_master() {
        assert_ne!(fold_seed(1, "a"), fold_seed(1, "b"));
        assert_ne!(fold_seed(1, "a"), fold_seed(2, "a"));
        assert_eq!(fold_seed(1, "a"), fold_seed(1, "a"));
    }

    #[test]
    fn single_method_single_problem_report_shape() {
        let records: Vec<CityYearRecord> = (0..6)
            .map(|i| {
                oracle_record(&params(
                    &format!("c{i}"),
                    300_000 + 1_100_000 * i as u64,
                    i as u64,
                ))
            })
            .collect();
        let ds = PreparedDataset::new(Source::Internet, records, grid(), true).unwrap();
        let spec = ModelSpec::new(Family::Ols);
        let report = benchmark_matrix(&[ds], &[spec], &FILTER_THRESHOLDS, 5).unwrap();
        // 1 method x 6 problems (one source) x 5 filters.
        assert_eq!(report.cells.len(), 30);
        assert_eq!(report.gms.len(), 6);
        assert_eq!(report.total_leaks, 0);
        // Counts weakly decrease as the threshold rises.
        for problem in report.gms.iter().map(|g| &g.problem) {
            let ns: Vec<usize> = FILTER_THRESHOLDS
                .iter()
                .map(|&t| report.cell("ols", problem, t).unwrap().n)
                .collect();
            for w in ns.windows(2) {
                assert!(w[1] <= w[0], "counts increased: {ns:?}");
            }
        }
    }
}
