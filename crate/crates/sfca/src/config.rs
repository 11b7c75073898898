//! Run configuration: a flat key-value text format with dotted section
//! keys. Every key has a default; unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Result, SfcaError};
use crate::grid::SegmentGrid;
use crate::learners::{Family, ModelSpec};

/// Parsed run configuration for every CLI subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub segments_per_day: usize,
    pub day_start_offset: usize,
    /// Include |latitude| as a static feature.
    pub include_latitude: bool,
    /// Methods in report order.
    pub methods: Vec<ModelSpec>,
    pub filter_thresholds: Vec<u64>,
    pub seed: u64,
    pub data_dir: String,
    pub out_dir: String,
    pub synth_cities: usize,
    pub synth_days: usize,
    pub synth_year: i32,
    pub synth_noise_sigma: f64,
    /// Add outlier bursts to exercise the robust smoother.
    pub synth_burst: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            segments_per_day: 96,
            day_start_offset: 64,
            include_latitude: true,
            methods: vec![
                ModelSpec::new(Family::CTreeBag),
                ModelSpec::new(Family::Ols),
            ],
            filter_thresholds: crate::eval::FILTER_THRESHOLDS.to_vec(),
            seed: 42,
            data_dir: "data".into(),
            out_dir: "out".into(),
            synth_cities: 60,
            synth_days: 28,
            synth_year: 2010,
            synth_noise_sigma: 0.03,
            synth_burst: false,
        }
    }
}

fn config_err(msg: impl Into<String>) -> SfcaError {
    SfcaError::Config(msg.into())
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(config_err(format!("{}: not a boolean: {}", key, v))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| config_err(format!("{}: not a number: {}", key, v)))
}

impl RunConfig {
    /// Parse from text. Lines are `key = value`; `#` starts a comment;
    /// blank lines are ignored. Method hyperparameters use
    /// `method.<label>.<param> = value` and must follow the `methods` key.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        let mut seen_method_keys: Vec<(String, String, String)> = Vec::new();
        let mut plain: BTreeMap<String, String> = BTreeMap::new();

        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                config_err(format!("line {}: expected key = value", lineno + 1))
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if let Some(rest) = key.strip_prefix("method.") {
                let (label, param) = rest.rsplit_once('.').ok_or_else(|| {
                    config_err(format!("{}: expected method.<label>.<param>", key))
                })?;
                seen_method_keys.push((label.to_string(), param.to_string(), value));
            } else if plain.insert(key.clone(), value).is_some() {
                return Err(config_err(format!("duplicate key: {}", key)));
            }
        }

        for (key, value) in &plain {
            match key.as_str() {
                "grid.segments_per_day" => {
                    cfg.segments_per_day = parse_num(key, value)?
                }
                "grid.day_start_offset" => {
                    cfg.day_start_offset = parse_num(key, value)?
                }
                "features.include_latitude" => {
                    cfg.include_latitude = parse_bool(key, value)?
                }
                "methods" => {
                    let mut methods = Vec::new();
                    for part in value.split(',') {
                        let name = part.trim();
                        let family = Family::parse(name).ok_or_else(|| {
                            config_err(format!("methods: unknown method: {}", name))
                        })?;
                        methods.push(ModelSpec::new(family));
                    }
                    if methods.is_empty() {
                        return Err(config_err("methods: empty list"));
                    }
                    cfg.methods = methods;
                }
                "filters" => {
                    let mut filters = Vec::new();
                    for part in value.split(',') {
                        filters.push(parse_num(key, part.trim())?);
                    }
                    cfg.filter_thresholds = filters;
                }
                "seed" => cfg.seed = parse_num(key, value)?,
                "io.data_dir" => cfg.data_dir = value.clone(),
                "io.out_dir" => cfg.out_dir = value.clone(),
                "synth.cities" => cfg.synth_cities = parse_num(key, value)?,
                "synth.days" => cfg.synth_days = parse_num(key, value)?,
                "synth.year" => cfg.synth_year = parse_num(key, value)?,
                "synth.noise_sigma" => cfg.synth_noise_sigma = parse_num(key, value)?,
                "synth.burst" => cfg.synth_burst = parse_bool(key, value)?,
                other => {
                    return Err(config_err(format!("unknown key: {}", other)));
                }
            }
        }

        for (label, param, value) in &seen_method_keys {
            let spec = cfg
                .methods
                .iter_mut()
                .find(|m| m.family.label() == label)
                .ok_or_else(|| {
                    config_err(format!(
                        "method.{}: not in the methods list",
                        label
                    ))
                })?;
            let key = format!("method.{}.{}", label, param);
            match param.as_str() {
                "lambda" => spec.lambda = parse_num(&key, value)?,
                "tree_count" => spec.tree_count = parse_num(&key, value)?,
                "max_depth" => spec.max_depth = parse_num(&key, value)?,
                "min_leaf" => spec.min_leaf = parse_num(&key, value)?,
                "learning_rate" => spec.learning_rate = parse_num(&key, value)?,
                "subsample" => spec.subsample = parse_num(&key, value)?,
                "weighted" => spec.weighted = parse_bool(&key, value)?,
                other => {
                    return Err(config_err(format!(
                        "method.{}.{}: unknown parameter",
                        label, other
                    )));
                }
            }
        }

        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        RunConfig::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        SegmentGrid::new(self.segments_per_day, self.day_start_offset)?;
        for m in &self.methods {
            m.validate()?;
        }
        if self.filter_thresholds.is_empty() {
            return Err(config_err("filters: empty list"));
        }
        if self.filter_thresholds.windows(2).any(|w| w[1] <= w[0]) {
            return Err(config_err("filters: must be strictly increasing"));
        }
        if self.synth_cities == 0 || self.synth_days < 7 {
            return Err(config_err(
                "synth: need at least 1 city and 7 days",
            ));
        }
        if self.synth_noise_sigma < 0.0 {
            return Err(config_err("synth.noise_sigma: must be >= 0"));
        }
        Ok(())
    }

    pub fn grid(&self) -> SegmentGrid {
        SegmentGrid::new(self.segments_per_day, self.day_start_offset)
            .expect("validated grid")
    }
}
