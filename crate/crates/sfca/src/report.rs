//! Report rendering: the aligned-text comparison table, scatter data of
//! predicted vs observed times, and a dependency-free SVG chart with 95%
//! confidence bars.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Result, SfcaError};
use crate::eval::{
    decoded_value, rmse, target_value, DecodeFold, EvaluationReport, ProblemSpec,
};

/// One predicted-vs-observed point for the scatter outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterPoint {
    pub problem: String,
    pub city_id: String,
    pub year: i32,
    pub observed_min: f64,
    pub predicted_min: f64,
}

/// Flatten decode folds into scatter points for one problem target.
pub fn scatter_from_folds(
    folds: &[DecodeFold],
    problem: &ProblemSpec,
) -> Vec<ScatterPoint> {
    folds
        .iter()
        .filter_map(|f| {
            f.decoded.as_ref().map(|d| ScatterPoint {
                problem: problem.label(),
                city_id: f.city_id.clone(),
                year: f.year,
                observed_min: target_value(&f.truth, problem.target),
                predicted_min: decoded_value(d, problem.target),
            })
        })
        .collect()
}

pub fn write_scatter_csv(path: impl AsRef<Path>, points: &[ScatterPoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["problem", "city_id", "year", "observed_min", "predicted_min"])?;
    for p in points {
        w.write_record([
            p.problem.as_str(),
            p.city_id.as_str(),
            &p.year.to_string(),
            &format!("{:.4}", p.observed_min),
            &format!("{:.4}", p.predicted_min),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_scatter_csv(path: impl AsRef<Path>) -> Result<Vec<ScatterPoint>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record?;
        if record.len() != 5 {
            return Err(SfcaError::CsvFormat {
                line,
                message: format!("expected 5 fields, got {}", record.len()),
            });
        }
        let parse = |idx: usize| -> Result<f64> {
            record[idx].parse().map_err(|_| SfcaError::CsvFormat {
                line,
                message: "expected a real number".into(),
            })
        };
        out.push(ScatterPoint {
            problem: record[0].to_string(),
            city_id: record[1].to_string(),
            year: record[2].parse().map_err(|_| SfcaError::CsvFormat {
                line,
                message: "year must be an integer".into(),
            })?,
            observed_min: parse(3)?,
            predicted_min: parse(4)?,
        });
    }
    Ok(out)
}

/// Rebuild a report from machine-CSV rows (the inverse of the report
/// writer, with the best-method annotations recomputed).
pub fn report_from_csv_rows(rows: &[crate::io::ReportCsvRow]) -> Result<EvaluationReport> {
    use crate::eval::{GmEntry, ReportCell};
    use std::collections::BTreeMap;

    let mut cells = Vec::new();
    let mut gms = Vec::new();
    for (method, mtype, problem, filter, n, rmse_min, gm_min) in rows {
        if filter == "gm" {
            gms.push(GmEntry {
                method: method.clone(),
                method_type: mtype.clone(),
                problem: problem.clone(),
                gm_min: *gm_min,
            });
        } else {
            let threshold: u64 = filter.parse().map_err(|_| SfcaError::CsvFormat {
                line: 0,
                message: format!("filter {} is neither a threshold nor gm", filter),
            })?;
            cells.push(ReportCell {
                method: method.clone(),
                method_type: mtype.clone(),
                problem: problem.clone(),
                threshold,
                n: n.unwrap_or(0),
                excluded: 0,
                rmse_min: *rmse_min,
                error: None,
            });
        }
    }

    let mut best_regression = BTreeMap::new();
    let mut best_overall = BTreeMap::new();
    let mut sfca_beating_regression = BTreeMap::new();
    let mut problems: Vec<String> = gms.iter().map(|g| g.problem.clone()).collect();
    problems.sort();
    problems.dedup();
    for problem in problems {
        let of_problem: Vec<&GmEntry> =
            gms.iter().filter(|g| g.problem == problem).collect();
        let best_of = |only_regression: bool| -> Option<&GmEntry> {
            of_problem
                .iter()
                .filter(|g| {
                    g.gm_min.is_some()
                        && (!only_regression || g.method_type == "regression")
                })
                .min_by(|a, b| a.gm_min.partial_cmp(&b.gm_min).unwrap())
                .copied()
        };
        if let Some(best) = best_of(true) {
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
        if let Some(best) = best_of(false) {
            best_overall.insert(problem.clone(), best.method.clone());
        }
    }

    Ok(EvaluationReport {
        cells,
        gms,
        best_regression,
        best_overall,
        sfca_beating_regression,
        total_leaks: 0,
    })
}

fn hhmm(minute: f64) -> String {
    let m = minute.rem_euclid(1440.0).round() as i64 % 1440;
    format!("{:02}:{:02}", m / 60, m % 60)
}

/// Human-readable aligned comparison table. Markers on GM entries:
/// `*` best overall, `^` best regression method, `+` transformed methods
/// beating the best regression method.
pub fn format_table(report: &EvaluationReport) -> String {
    let mut out = String::new();
    let mut problems: Vec<String> = report.gms.iter().map(|g| g.problem.clone()).collect();
    problems.sort();
    problems.dedup();
    let mut methods: Vec<String> = report.cells.iter().map(|c| c.method.clone()).collect();
    methods.sort();
    methods.dedup();

    let col = 14usize;
    for problem in &problems {
        let _ = writeln!(out, "Problem: {} (RMSE, minutes)", problem);
        let mut header = format!("{:<12}", "filter");
        for m in &methods {
            header.push_str(&format!("{:>col$}", m));
        }
        let _ = writeln!(out, "{}", header);

        let mut thresholds: Vec<u64> = report
            .cells
            .iter()
            .filter(|c| &c.problem == problem)
            .map(|c| c.threshold)
            .collect();
        thresholds.sort_unstable();
        thresholds.dedup();
        for t in thresholds {
            let mut row = format!("{:<12}", format!(">{}", t));
            for m in &methods {
                let cell = report.cell(m, problem, t);
                let text = match cell {
                    Some(c) => match c.rmse_min {
                        Some(v) if c.excluded > 0 => {
                            format!("{:.2} ({},-{})", v, c.n, c.excluded)
                        }
                        Some(v) => format!("{:.2} ({})", v, c.n),
                        None => "-".to_string(),
                    },
                    None => "-".to_string(),
                };
                row.push_str(&format!("{:>col$}", text));
            }
            let _ = writeln!(out, "{}", row);
        }

        let mut row = format!("{:<12}", "GM");
        for m in &methods {
            let gm = report.gm(m, problem);
            let mut text = match gm {
                Some(v) => format!("{:.2}", v),
                None => "-".to_string(),
            };
            if report.best_overall.get(problem) == Some(m) {
                text.push('*');
            }
            if report.best_regression.get(problem) == Some(m) {
                text.push('^');
            }
            if report
                .sfca_beating_regression
                .get(problem)
                .map(|v| v.contains(m))
                .unwrap_or(false)
            {
                text.push('+');
            }
            row.push_str(&format!("{:>col$}", text));
        }
        let _ = writeln!(out, "{}\n", row);
    }

    let failures: Vec<_> = report
        .cells
        .iter()
        .filter(|c| c.error.is_some())
        .collect();
    if !failures.is_empty() {
        let _ = writeln!(out, "Cell failures:");
        for c in &failures {
            let _ = writeln!(
                out,
                "  {} / {} / >{}: {}",
                c.method,
                c.problem,
                c.threshold,
                c.error.as_deref().unwrap_or("")
            );
        }
        let _ = writeln!(out);
    }
    let _ = writeln!(
        out,
        "Markers: * best overall GM, ^ best regression GM, + transformed method beating it."
    );
    let _ = writeln!(
        out,
        "Cells show RMSE (city-years); -k marks decode failures excluded from the cell."
    );
    out
}

/// Predicted-vs-observed SVG: identity line, one dot per city-year, grey
/// vertical bars spanning the 95% interval implied by the fold residuals.
pub fn render_scatter_svg(points: &[ScatterPoint], title: &str) -> String {
    let size = 640.0;
    let margin = 70.0;
    let plot = size - 2.0 * margin;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{0}\" viewBox=\"0 0 {0} {0}\">",
        size
    );
    let _ = writeln!(
        svg,
        "<rect width=\"{0}\" height=\"{0}\" fill=\"white\"/>",
        size
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"28\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"16\">{}</text>",
        size / 2.0,
        title
    );

    if points.is_empty() {
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"14\">no data</text>",
            size / 2.0,
            size / 2.0
        );
        svg.push_str("</svg>\n");
        return svg;
    }

    let lo = points
        .iter()
        .flat_map(|p| [p.observed_min, p.predicted_min])
        .fold(f64::INFINITY, f64::min);
    let hi = points
        .iter()
        .flat_map(|p| [p.observed_min, p.predicted_min])
        .fold(f64::NEG_INFINITY, f64::max);
    let pad = ((hi - lo) * 0.1).max(15.0);
    let (lo, hi) = (lo - pad, hi + pad);
    let scale = plot / (hi - lo);
    let x_of = |v: f64| margin + (v - lo) * scale;
    let y_of = |v: f64| size - margin - (v - lo) * scale;

    // 95% interval half-width from the residual spread.
    let pred: Vec<f64> = points.iter().map(|p| p.predicted_min).collect();
    let obs: Vec<f64> = points.iter().map(|p| p.observed_min).collect();
    let ci = rmse(&pred, &obs, false).map(|r| 1.96 * r).unwrap_or(0.0);

    // Axes.
    let _ = writeln!(
        svg,
        "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>",
        margin,
        size - margin,
        size - margin
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>",
        margin,
        size - margin,
        margin
    );
    // Hour ticks.
    let mut tick = (lo / 60.0).ceil() * 60.0;
    while tick <= hi {
        let _ = writeln!(
            svg,
            "<line x1=\"{0:.1}\" y1=\"{1}\" x2=\"{0:.1}\" y2=\"{2}\" stroke=\"black\"/>",
            x_of(tick),
            size - margin,
            size - margin + 6.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{}\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"11\">{}</text>",
            x_of(tick),
            size - margin + 22.0,
            hhmm(tick)
        );
        let _ = writeln!(
            svg,
            "<line x1=\"{0}\" y1=\"{1:.1}\" x2=\"{2}\" y2=\"{1:.1}\" stroke=\"black\"/>",
            margin - 6.0,
            y_of(tick),
            margin
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"11\">{}</text>",
            margin - 10.0,
            y_of(tick) + 4.0,
            hhmm(tick)
        );
        tick += 60.0;
    }
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"13\">observed</text>",
        size / 2.0,
        size - 16.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"20\" y=\"{}\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"13\" transform=\"rotate(-90 20 {0})\">predicted</text>",
        size / 2.0
    );

    // Identity line.
    let _ = writeln!(
        svg,
        "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#888\" stroke-dasharray=\"5,4\"/>",
        x_of(lo),
        y_of(lo),
        x_of(hi),
        y_of(hi)
    );

    // Confidence bars first so the dots draw on top.
    for p in points {
        let _ = writeln!(
            svg,
            "<line x1=\"{0:.1}\" y1=\"{1:.1}\" x2=\"{0:.1}\" y2=\"{2:.1}\" stroke=\"#bbbbbb\" stroke-width=\"3\"/>",
            x_of(p.observed_min),
            y_of((p.predicted_min - ci).max(lo)),
            y_of((p.predicted_min + ci).min(hi))
        );
    }
    for p in points {
        let _ = writeln!(
            svg,
            "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3.5\" fill=\"#1f4e79\"/>",
            x_of(p.observed_min),
            y_of(p.predicted_min)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{GmEntry, ReportCell, Target};
    use crate::features::Source;
    use crate::trajectory::Activity;
    use std::collections::BTreeMap;
    use tempfile::tempdir;

    fn fake_report() -> EvaluationReport {
        let mut cells = Vec::new();
        for (method, mtype, base) in
            [("c-tree(bg)", "sfca", 10.0), ("ols", "regression", 30.0)]
        {
            for (i, t) in [250_000u64, 500_000].iter().enumerate() {
                cells.push(ReportCell {
                    method: method.into(),
                    method_type: mtype.into(),
                    problem: "internet:sleep:start".into(),
                    threshold: *t,
                    n: 50 - 10 * i,
                    excluded: if method == "c-tree(bg)" { 1 } else { 0 },
                    rmse_min: Some(base + i as f64),
                    error: None,
                });
            }
        }
        let gms = vec![
            GmEntry {
                method: "c-tree(bg)".into(),
                method_type: "sfca".into(),
                problem: "internet:sleep:start".into(),
                gm_min: Some(10.5),
            },
            GmEntry {
                method: "ols".into(),
                method_type: "regression".into(),
                problem: "internet:sleep:start".into(),
                gm_min: Some(30.5),
            },
        ];
        let mut best_regression = BTreeMap::new();
        best_regression.insert("internet:sleep:start".to_string(), "ols".to_string());
        let mut best_overall = BTreeMap::new();
        best_overall.insert("internet:sleep:start".to_string(), "c-tree(bg)".to_string());
        let mut beating = BTreeMap::new();
        beating.insert(
            "internet:sleep:start".to_string(),
            vec!["c-tree(bg)".to_string()],
        );
        EvaluationReport {
            cells,
            gms,
            best_regression,
            best_overall,
            sfca_beating_regression: beating,
            total_leaks: 0,
        }
    }

    #[test]
    fn table_contains_methods_filters_and_markers() {
        let text = format_table(&fake_report());
        assert!(text.contains("c-tree(bg)"));
        assert!(text.contains("ols"));
        assert!(text.contains(">250000"));
        assert!(text.contains("10.50*"), "{text}");
        assert!(text.contains("30.50^"), "{text}");
        assert!(text.contains('+'), "{text}");
        // Decode exclusions surface in the cell.
        assert!(text.contains("(50,-1)"), "{text}");
    }

    #[test]
    fn scatter_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("scatter.csv");
        let problem = ProblemSpec {
            source: Source::Internet,
            activity: Activity::Sleep,
            target: Target::Stop,
        };
        let points = vec![ScatterPoint {
            problem: problem.label(),
            city_id: "c1".into(),
            year: 2010,
            observed_min: 405.25,
            predicted_min: 398.5,
        }];
        write_scatter_csv(&path, &points).unwrap();
        assert_eq!(read_scatter_csv(&path).unwrap(), points);
    }

    #[test]
    fn svg_is_deterministic_and_structured() {
        let points: Vec<ScatterPoint> = (0..5)
            .map(|i| ScatterPoint {
                problem: "internet:sleep:stop".into(),
                city_id: format!("c{i}"),
                year: 2010,
                observed_min: 390.0 + 5.0 * i as f64,
                predicted_min: 392.0 + 5.0 * i as f64,
            })
            .collect();
        let a = render_scatter_svg(&points, "sleep stop");
        let b = render_scatter_svg(&points, "sleep stop");
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.ends_with("</svg>\n"));
        assert_eq!(a.matches("<circle").count(), 5);
        // One grey bar per point.
        assert_eq!(a.matches("#bbbbbb").count(), 5);
    }

    #[test]
    fn empty_scatter_svg_still_valid() {
        let svg = render_scatter_svg(&[], "empty");
        assert!(svg.contains("no data"));
        assert!(svg.ends_with("</svg>\n"));
    }
}
