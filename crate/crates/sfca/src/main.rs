//! Command-line surface: synthetic corpus generation, preprocessing,
//! feature export, training, benchmark evaluation, decode audits, and
//! report rendering.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sfca::config::RunConfig;
use sfca::decode::{decode_with_audit, ScoreTrace};
use sfca::error::{Result, SfcaError};
use sfca::eval::{
    benchmark_matrix, loocv_decode, PreparedDataset, ProblemSpec, Target,
};
use sfca::features::Source;
use sfca::io;
use sfca::learners::{fit, predict, Family, ModelSpec};
use sfca::report::{
    format_table, render_scatter_svg, report_from_csv_rows, scatter_from_folds,
    write_scatter_csv,
};
use sfca::synth::{corpus_params, generate_city};
use sfca::trajectory::{
    build_synthetic_week, downscale_hourly, register_dow_average, Activity,
    CityYearRecord, DailyTrace, WEEK_SMOOTH_PENALTY,
};
use sfca::transform::{labels_for_records, stack};

#[derive(Parser)]
#[command(name = "sfca", version, about = "Segmented functional classification analysis")]
struct Cli {
    /// Run configuration file (flat key = value format).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the configured master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Cap the worker thread count (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic corpus CSVs.
    Synth {
        #[arg(long)]
        cities: Option<usize>,
        #[arg(long)]
        days: Option<usize>,
    },
    /// Build per-city-year synthetic weeks from raw trace CSVs.
    Preprocess,
    /// Export feature tables for inspection.
    Features,
    /// Fit one model on the full corpus and save it as JSON.
    Train {
        #[arg(long)]
        method: String,
        #[arg(long)]
        source: String,
        #[arg(long)]
        activity: String,
    },
    /// Run the full LOOCV benchmark matrix and write the reports.
    Evaluate,
    /// Dump the decode pipeline stages for one city-year.
    Decode {
        #[arg(long)]
        city: String,
        #[arg(long)]
        year: i32,
        #[arg(long)]
        source: String,
        #[arg(long)]
        activity: String,
        #[arg(long)]
        method: Option<String>,
    },
    /// Render the comparison table and scatter charts from a finished run.
    Report,
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn parse_source(s: &str) -> Result<Source> {
    Source::parse(s)
        .ok_or_else(|| SfcaError::Config(format!("unknown source: {} (internet|electricity)", s)))
}

fn parse_activity(s: &str) -> Result<Activity> {
    Activity::parse(s)
        .ok_or_else(|| SfcaError::Config(format!("unknown activity: {} (sleep|work)", s)))
}

fn method_spec(cfg: &RunConfig, label: &str) -> Result<ModelSpec> {
    if let Some(spec) = cfg.methods.iter().find(|m| m.family.label() == label) {
        return Ok(spec.clone());
    }
    Family::parse(label)
        .map(ModelSpec::new)
        .ok_or_else(|| SfcaError::Config(format!("unknown method: {}", label)))
}

fn records_path(cfg: &RunConfig, source: Source) -> PathBuf {
    Path::new(&cfg.out_dir).join(format!("records_{}.json", source.name()))
}

fn load_prepared(cfg: &RunConfig, source: Source) -> Result<PreparedDataset> {
    let records = io::read_records_json(records_path(cfg, source))?;
    PreparedDataset::new(source, records, cfg.grid(), cfg.include_latitude)
}

fn cmd_synth(cfg: &RunConfig, cities: Option<usize>, days: Option<usize>) -> Result<()> {
    let n_cities = cities.unwrap_or(cfg.synth_cities);
    let n_days = days.unwrap_or(cfg.synth_days);
    let grid = cfg.grid();
    std::fs::create_dir_all(&cfg.data_dir)?;

    let mut params = corpus_params(n_cities, cfg.synth_year, cfg.synth_noise_sigma, cfg.seed);
    if cfg.synth_burst {
        for p in params.iter_mut() {
            p.burst_rate = 0.3;
        }
    }
    let mut outcome_rows = Vec::new();
    let mut static_rows = Vec::new();
    for p in &params {
        let city = generate_city(p, &grid, n_days)?;
        let mut trace_rows = Vec::new();
        for (date, trace) in &city.internet_days {
            for (i, v) in trace.values.iter().enumerate() {
                trace_rows.push(io::TraceRow {
                    city_id: p.city_id.clone(),
                    year: p.year,
                    date: date.clone(),
                    dow: trace.dow,
                    segment: i + 1,
                    value: *v,
                });
            }
        }
        io::write_traces_csv(
            Path::new(&cfg.data_dir).join(format!("{}_traces.csv", p.city_id)),
            &trace_rows,
        )?;
        let mut hourly_rows = Vec::new();
        for (date, _dow, demand) in &city.hourly_days {
            for (hour, mw) in demand.iter().enumerate() {
                hourly_rows.push(io::HourlyRow {
                    city_id: p.city_id.clone(),
                    year: p.year,
                    date: date.clone(),
                    hour: hour as u8,
                    megawatts: *mw,
                });
            }
        }
        io::write_hourly_csv(
            Path::new(&cfg.data_dir).join(format!("{}_hourly.csv", p.city_id)),
            &hourly_rows,
        )?;
        for o in &city.outcomes {
            outcome_rows.push((p.city_id.clone(), p.year, o.clone()));
        }
        static_rows.push((p.city_id.clone(), p.latitude));
    }
    io::write_outcomes_csv(Path::new(&cfg.data_dir).join("outcomes.csv"), &outcome_rows)?;
    io::write_static_csv(Path::new(&cfg.data_dir).join("static.csv"), &static_rows)?;
    // The generating parameters double as the corpus oracle.
    let oracle = serde_json::to_string_pretty(&params)?;
    std::fs::write(Path::new(&cfg.data_dir).join("oracle_params.json"), oracle)?;
    println!(
        "synth: wrote {} cities x {} days to {}",
        n_cities, n_days, cfg.data_dir
    );
    Ok(())
}

fn cmd_preprocess(cfg: &RunConfig) -> Result<()> {
    let grid = cfg.grid();
    std::fs::create_dir_all(&cfg.out_dir)?;
    let outcomes = io::read_outcomes_csv(Path::new(&cfg.data_dir).join("outcomes.csv"))?;
    let statics = io::read_static_csv(Path::new(&cfg.data_dir).join("static.csv"))?;
    let latitude_of = |city: &str| -> Vec<(String, f64)> {
        statics
            .iter()
            .filter(|(c, _)| c == city)
            .map(|(_, lat)| ("latitude".to_string(), *lat))
            .collect()
    };
    let outcomes_of = |city: &str, year: i32| {
        outcomes
            .iter()
            .filter(|(c, y, _)| c == city && *y == year)
            .map(|(_, _, o)| o.clone())
            .collect::<Vec<_>>()
    };

    let mut entries: Vec<PathBuf> = std::fs::read_dir(&cfg.data_dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();

    let mut internet_records: Vec<CityYearRecord> = Vec::new();
    let mut electricity_records: Vec<CityYearRecord> = Vec::new();
    for path in &entries {
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if let Some(_city) = name.strip_suffix("_traces.csv") {
            let rows = io::read_traces_csv(path)?;
            for ((city, year), days) in io::traces_to_days(&rows, &grid)? {
                let week =
                    build_synthetic_week(&city, year, &days, &grid, WEEK_SMOOTH_PENALTY)?;
                internet_records.push(CityYearRecord {
                    city_id: city.clone(),
                    year,
                    week,
                    static_features: latitude_of(&city),
                    outcomes: outcomes_of(&city, year),
                });
            }
        } else if let Some(_city) = name.strip_suffix("_hourly.csv") {
            let rows = io::read_hourly_csv(path)?;
            for ((city, year), days) in io::hourly_to_days(&rows)? {
                let mut traces: Vec<DailyTrace> = Vec::with_capacity(days.len());
                for (dow, hourly) in &days {
                    let values = downscale_hourly(hourly, &grid, 1.0)?;
                    traces.push(DailyTrace::complete(city.clone(), *dow, values));
                }
                let week = register_dow_average(&city, year, &traces, &grid)?;
                electricity_records.push(CityYearRecord {
                    city_id: city.clone(),
                    year,
                    week,
                    static_features: latitude_of(&city),
                    outcomes: outcomes_of(&city, year),
                });
            }
        }
    }
    internet_records.sort_by(|a, b| (&a.city_id, a.year).cmp(&(&b.city_id, b.year)));
    electricity_records.sort_by(|a, b| (&a.city_id, a.year).cmp(&(&b.city_id, b.year)));
    io::write_records_json(records_path(cfg, Source::Internet), &internet_records)?;
    io::write_records_json(records_path(cfg, Source::Electricity), &electricity_records)?;
    println!(
        "preprocess: {} internet and {} electricity city-years",
        internet_records.len(),
        electricity_records.len()
    );
    Ok(())
}

fn cmd_features(cfg: &RunConfig) -> Result<()> {
    for source in [Source::Internet, Source::Electricity] {
        let prepared = load_prepared(cfg, source)?;
        let path = Path::new(&cfg.out_dir).join(format!("features_{}.csv", source.name()));
        io::write_features_csv(&path, &prepared.tables, &prepared.schema)?;
        println!("features: wrote {}", path.display());
    }
    Ok(())
}

fn cmd_train(cfg: &RunConfig, method: &str, source: &str, activity: &str) -> Result<()> {
    let source = parse_source(source)?;
    let activity = parse_activity(activity)?;
    let mut spec = method_spec(cfg, method)?;
    spec.seed = cfg.seed;
    let prepared = load_prepared(cfg, source)?;
    let design = stack(&prepared.tables, &prepared.schema)?;
    let refs: Vec<&CityYearRecord> = prepared.records.iter().collect();
    let labels = labels_for_records(&refs, activity, &prepared.grid, 3)?;
    let y: Vec<f64> = labels
        .labels
        .iter()
        .map(|&b| if b { 1.0 } else { 0.0 })
        .collect();
    let model = fit(&spec, &design.matrix, &y, None, &design.column_names)?;
    let path = Path::new(&cfg.out_dir).join(format!(
        "model_{}_{}_{}.json",
        method.replace(['(', ')'], ""),
        source.name(),
        activity.name()
    ));
    std::fs::write(&path, model.save_json()?)?;
    println!("train: wrote {}", path.display());
    Ok(())
}

fn cmd_evaluate(cfg: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out_dir)?;
    let datasets = vec![
        load_prepared(cfg, Source::Internet)?,
        load_prepared(cfg, Source::Electricity)?,
    ];
    let report =
        benchmark_matrix(&datasets, &cfg.methods, &cfg.filter_thresholds, cfg.seed)?;
    let csv_path = Path::new(&cfg.out_dir).join("report.csv");
    io::write_report_csv(&csv_path, &report)?;
    let text = format_table(&report);
    std::fs::write(Path::new(&cfg.out_dir).join("report.txt"), &text)?;
    println!("{}", text);
    println!("evaluate: wrote {}", csv_path.display());
    if report.total_leaks > 0 {
        return Err(SfcaError::SchemaMismatch(format!(
            "{} training rows shared the held-out city",
            report.total_leaks
        )));
    }
    Ok(())
}

fn cmd_decode(
    cfg: &RunConfig,
    city: &str,
    year: i32,
    source: &str,
    activity: &str,
    method: Option<&str>,
) -> Result<()> {
    let source = parse_source(source)?;
    let activity = parse_activity(activity)?;
    let label = method.unwrap_or("c-tree(bg)");
    let mut spec = method_spec(cfg, label)?;
    if !spec.family.is_classifier() {
        return Err(SfcaError::Config(format!(
            "decode needs a classification method, got {}",
            label
        )));
    }
    spec.seed = cfg.seed;
    let prepared = load_prepared(cfg, source)?;
    let held: Vec<usize> = prepared
        .records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.city_id == city && r.year == year)
        .map(|(i, _)| i)
        .collect();
    let target = *held.first().ok_or_else(|| {
        SfcaError::Config(format!("no record for {} {}", city, year))
    })?;

    let train_tables: Vec<_> = prepared
        .tables
        .iter()
        .enumerate()
        .filter(|(i, _)| !held.contains(i))
        .map(|(_, t)| t.clone())
        .collect();
    let design = stack(&train_tables, &prepared.schema)?;
    let train_refs: Vec<&CityYearRecord> = prepared
        .records
        .iter()
        .enumerate()
        .filter(|(i, _)| !held.contains(i))
        .map(|(_, r)| r)
        .collect();
    let labels = labels_for_records(&train_refs, activity, &prepared.grid, 3)?;
    let y: Vec<f64> = labels
        .labels
        .iter()
        .map(|&b| if b { 1.0 } else { 0.0 })
        .collect();
    let model = fit(&spec, &design.matrix, &y, None, &design.column_names)?;

    let table = &prepared.tables[target];
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
        city_id: city.to_string(),
        year,
        activity,
        scores: padded,
    };
    let (times, audit) = decode_with_audit(&trace, &prepared.grid)?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let path = Path::new(&cfg.out_dir).join(format!(
        "audit_{}_{}_{}_{}.csv",
        city,
        year,
        source.name(),
        activity.name()
    ));
    io::write_audit_csv(&path, &audit)?;
    println!(
        "decode: {} {} {} start {:.1} stop {:.1} duration {:.1}",
        city, year, activity.name(), times.start_min, times.stop_min, times.duration_min
    );
    println!("decode: wrote {}", path.display());
    Ok(())
}

fn cmd_report(cfg: &RunConfig) -> Result<()> {
    let csv_path = Path::new(&cfg.out_dir).join("report.csv");
    let rows = io::read_report_csv(&csv_path)?;
    let report = report_from_csv_rows(&rows)?;
    std::fs::write(
        Path::new(&cfg.out_dir).join("report.txt"),
        format_table(&report),
    )?;

    // Scatter data and charts for the first classification method.
    let sfca_spec = cfg
        .methods
        .iter()
        .find(|m| m.family.is_classifier())
        .cloned()
        .unwrap_or_else(|| ModelSpec::new(Family::CTreeBag));
    for source in [Source::Internet, Source::Electricity] {
        let prepared = load_prepared(cfg, source)?;
        let subset: Vec<usize> = (0..prepared.records.len()).collect();
        for activity in [Activity::Sleep, Activity::Work] {
            let folds = loocv_decode(&prepared, &sfca_spec, activity, &subset, cfg.seed)?;
            for target in [Target::Start, Target::Stop] {
                let problem = ProblemSpec {
                    source,
                    activity,
                    target,
                };
                let points = scatter_from_folds(&folds, &problem);
                let stem = problem.label().replace(':', "_");
                write_scatter_csv(
                    Path::new(&cfg.out_dir).join(format!("scatter_{}.csv", stem)),
                    &points,
                )?;
                let svg = render_scatter_svg(
                    &points,
                    &format!("{} ({})", problem.label(), sfca_spec.family.label()),
                );
                std::fs::write(
                    Path::new(&cfg.out_dir).join(format!("scatter_{}.svg", stem)),
                    svg,
                )?;
            }
        }
    }
    println!("report: wrote tables and charts to {}", cfg.out_dir);
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Synth { cities, days } => cmd_synth(&cfg, *cities, *days),
        Command::Preprocess => cmd_preprocess(&cfg),
        Command::Features => cmd_features(&cfg),
        Command::Train {
            method,
            source,
            activity,
        } => cmd_train(&cfg, method, source, activity),
        Command::Evaluate => cmd_evaluate(&cfg),
        Command::Decode {
            city,
            year,
            source,
            activity,
            method,
        } => cmd_decode(&cfg, city, *year, source, activity, method.as_deref()),
        Command::Report => cmd_report(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .is_err()
        {
            eprintln!("{{\"error\":\"could not configure thread pool\"}}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ SfcaError::Config(_)) => {
            eprintln!("usage error: {}", e);
            eprintln!(
                "{{\"error\":{}}}",
                serde_json::to_string(&e.to_string()).unwrap_or_default()
            );
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!(
                "{{\"error\":{}}}",
                serde_json::to_string(&e.to_string()).unwrap_or_default()
            );
            ExitCode::from(1)
        }
    }
}
