//! Synthetic city generator: logistic day/activity curves with known
//! ground-truth sleep and work windows, sampled as internet online-fraction
//! traces and hourly electricity demand, with seeded Gaussian noise and
//! optional outlier bursts.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SfcaError};
use crate::grid::{Dow, SegmentGrid, ALL_DOWS, MINUTES_PER_DAY};
use crate::trajectory::{Activity, ActivityOutcome, DailyTrace};

/// Logistic transition slope, per minute. 4/k is the transition width.
pub const DEFAULT_STEEPNESS: f64 = 0.25;

/// Ground-truth generating parameters for one synthetic city-year.
/// Sleep and work times are the weekday values; weekends shift sleep later
/// by `weekend_shift_min` and drop the work block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CityGenParams {
    pub city_id: String,
    pub year: i32,
    pub population: u64,
    pub latitude: f64,
    /// Evening sleep onset, minutes after midnight.
    pub sleep_start_min: f64,
    /// Morning wake time, minutes after midnight.
    pub sleep_stop_min: f64,
    pub work_start_min: f64,
    pub work_stop_min: f64,
    /// Always-on server floor of the online fraction, in [0, 1).
    pub floor: f64,
    pub weekend_shift_min: f64,
    /// Mean demand scale in megawatts.
    pub base_mw: f64,
    pub steepness: f64,
    pub noise_sigma: f64,
    /// Expected outlier bursts per day; 0 disables bursts.
    pub burst_rate: f64,
    pub seed: u64,
}

impl CityGenParams {
    pub fn validate(&self) -> Result<()> {
        let day = 0.0..MINUTES_PER_DAY;
        let ok = day.contains(&self.sleep_start_min)
            && day.contains(&self.sleep_stop_min)
            && self.sleep_stop_min < self.sleep_start_min
            && day.contains(&self.work_start_min)
            && day.contains(&self.work_stop_min)
            && self.work_start_min < self.work_stop_min
            && self.sleep_stop_min < self.work_start_min
            && self.work_stop_min < self.sleep_start_min
            && self.sleep_start_min + self.weekend_shift_min < MINUTES_PER_DAY
            && self.weekend_shift_min >= 0.0
            && self.population > 0
            && self.base_mw > 0.0
            && self.steepness > 0.0
            && self.noise_sigma >= 0.0
            && self.burst_rate >= 0.0
            && (0.0..1.0).contains(&self.floor)
            && self.latitude.abs() <= 90.0;
        if ok {
            Ok(())
        } else {
            Err(SfcaError::InvalidGenParams(format!(
                "inconsistent generator parameters for city {}",
                self.city_id
            )))
        }
    }

    fn sleep_times(&self, dow: Dow) -> (f64, f64) {
        if dow.is_weekend() {
            (
                self.sleep_start_min + self.weekend_shift_min,
                self.sleep_stop_min + self.weekend_shift_min,
            )
        } else {
            (self.sleep_start_min, self.sleep_stop_min)
        }
    }
}

/// One generated city-year: raw daily traces plus the ground truth that
/// produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedCity {
    pub params: CityGenParams,
    /// Internet online-fraction days: (iso week date, trace).
    pub internet_days: Vec<(String, DailyTrace)>,
    /// Hourly demand days: (iso week date, dow, 24 megawatt samples).
    pub hourly_days: Vec<(String, Dow, Vec<f64>)>,
    /// Noise-free internet curves per day of week, Mon first.
    pub oracle_curves: [Vec<f64>; 7],
    pub outcomes: Vec<ActivityOutcome>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Awake and in-work intensities at clock minute `t` for the given day.
fn activity_levels(params: &CityGenParams, dow: Dow, t: f64) -> (f64, f64) {
    let k = params.steepness;
    let (onset, wake) = params.sleep_times(dow);
    let awake = sigmoid(k * (t - wake)) * sigmoid(k * (onset - t));
    let inwork = if dow.is_weekend() {
        0.0
    } else {
        sigmoid(k * (t - params.work_start_min)) * sigmoid(k * (params.work_stop_min - t))
    };
    (awake, inwork)
}

/// Fixed per-city diurnal quirks in weekend online activity: a late-morning
/// bump and an afternoon lull. Weekends are work-free, so the quirks stay
/// clear of the work plateau, and both are smooth Gaussian shapes gated by
/// the awake level and centred hours away from the sleep boundaries, so
/// they never move the activity boundaries themselves. Derived from the
/// city seed, so regeneration is byte-identical.
#[derive(Debug, Clone, Copy)]
struct ShapeQuirks {
    wkend_bump_center_min: f64,
    wkend_bump_height: f64,
    wkend_bump_sigma_min: f64,
    wkend_lull_center_min: f64,
    wkend_lull_depth: f64,
    wkend_lull_sigma_min: f64,
}

impl ShapeQuirks {
    fn for_city(params: &CityGenParams) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ 0x5348_4150_4551u64);
        ShapeQuirks {
            wkend_bump_center_min: 600.0 + 90.0 * rng.gen::<f64>(),
            wkend_bump_height: 0.03 + 0.04 * rng.gen::<f64>(),
            wkend_bump_sigma_min: 30.0 + 10.0 * rng.gen::<f64>(),
            wkend_lull_center_min: 810.0 + 120.0 * rng.gen::<f64>(),
            wkend_lull_depth: 0.06 + 0.06 * rng.gen::<f64>(),
            wkend_lull_sigma_min: 40.0 + 20.0 * rng.gen::<f64>(),
        }
    }

    /// Additive adjustment to the online signal at clock minute `t`.
    fn signal_shift(&self, t: f64, awake: f64, weekend: bool) -> f64 {
        if !weekend {
            return 0.0;
        }
        let gauss = |center: f64, sigma: f64| {
            let z = (t - center) / sigma;
            (-0.5 * z * z).exp()
        };
        awake
            * (self.wkend_bump_height
                * gauss(self.wkend_bump_center_min, self.wkend_bump_sigma_min)
                - self.wkend_lull_depth
                    * gauss(self.wkend_lull_center_min, self.wkend_lull_sigma_min))
    }
}

/// Noiseless internet online fraction at the segment midpoints.
pub fn oracle_internet_curve(
    params: &CityGenParams,
    grid: &SegmentGrid,
    dow: Dow,
) -> Vec<f64> {
    let quirks = ShapeQuirks::for_city(params);
    (1..=grid.segments_per_day)
        .map(|s| {
            let t = grid.midpoint(s);
            let (awake, inwork) = activity_levels(params, dow, t);
            let signal = 0.85 * awake
                + 0.15 * inwork
                + quirks.signal_shift(t, awake, dow.is_weekend());
            params.floor + (1.0 - params.floor) * signal.clamp(0.0, 1.0)
        })
        .collect()
}

/// Noiseless hourly electricity demand at the 24 hour-interval midpoints.
pub fn oracle_hourly_demand(params: &CityGenParams, dow: Dow) -> Vec<f64> {
    (0..24)
        .map(|h| {
            let t = 60.0 * h as f64 + 30.0;
            let (awake, inwork) = activity_levels(params, dow, t);
            params.base_mw * (0.6 + 0.4 * awake + 0.3 * inwork)
        })
        .collect()
}

/// ISO week-date string for day `i` of the run (day 0 is Monday of week 1).
fn iso_week_date(year: i32, day_index: usize) -> String {
    format!("{}-W{:02}-{}", year, day_index / 7 + 1, day_index % 7 + 1)
}

/// Generate `n_days` of internet and demand observations for one city-year
/// (day 0 is a Monday), deterministic in `params.seed`.
pub fn generate_city(
    params: &CityGenParams,
    grid: &SegmentGrid,
    n_days: usize,
) -> Result<GeneratedCity> {
    params.validate()?;
    if n_days < 7 {
        return Err(SfcaError::InvalidGenParams(format!(
            "need at least one full week, got {} days",
            n_days
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let gauss = Normal::new(0.0, 1.0).expect("unit normal");

    let mut internet_days = Vec::with_capacity(n_days);
    let mut hourly_days = Vec::with_capacity(n_days);
    for day in 0..n_days {
        let dow = Dow::from_index((day % 7 + 1) as u8).expect("valid dow");
        let date = iso_week_date(params.year, day);

        let mut values = oracle_internet_curve(params, grid, dow);
        if params.noise_sigma > 0.0 {
            for v in values.iter_mut() {
                *v = (*v + params.noise_sigma * gauss.sample(&mut rng)).clamp(0.0, 1.0);
            }
        }
        if params.burst_rate > 0.0 && rng.gen::<f64>() < params.burst_rate {
            let at = rng.gen_range(0..grid.segments_per_day);
            let len = rng.gen_range(1..=3usize);
            let amp = 0.4 + 0.3 * rng.gen::<f64>();
            for v in values.iter_mut().skip(at).take(len) {
                *v = (*v + amp).clamp(0.0, 1.0);
            }
        }
        internet_days.push((
            date.clone(),
            DailyTrace::complete(params.city_id.clone(), dow, values),
        ));

        let mut demand = oracle_hourly_demand(params, dow);
        if params.noise_sigma > 0.0 {
            for v in demand.iter_mut() {
                *v *= 1.0 + params.noise_sigma * gauss.sample(&mut rng);
            }
        }
        hourly_days.push((date, dow, demand));
    }

    let respondents = (params.population / 1500).max(100);
    let outcomes = vec![
        ActivityOutcome {
            activity: Activity::Sleep,
            start_min: params.sleep_start_min,
            stop_min: params.sleep_stop_min,
            respondents,
            population: params.population,
        },
        ActivityOutcome {
            activity: Activity::Work,
            start_min: params.work_start_min,
            stop_min: params.work_stop_min,
            respondents,
            population: params.population,
        },
    ];
    for o in &outcomes {
        o.validate()?;
    }
    let oracle_curves: [Vec<f64>; 7] = ALL_DOWS
        .map(|dow| oracle_internet_curve(params, grid, dow));
    Ok(GeneratedCity {
        params: params.clone(),
        internet_days,
        hourly_days,
        oracle_curves,
        outcomes,
    })
}

fn mix_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_mul(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Population tiers, cycled so every population filter threshold keeps a
/// usable share of the corpus.
const POPULATION_TIERS: [(u64, u64); 6] = [
    (120_000, 250_000),
    (260_000, 500_000),
    (520_000, 1_000_000),
    (1_050_000, 2_500_000),
    (2_600_000, 5_000_000),
    (5_200_000, 12_000_000),
];

/// Deterministic parameter draws for an `n_cities` corpus.
pub fn corpus_params(
    n_cities: usize,
    year: i32,
    noise_sigma: f64,
    master_seed: u64,
) -> Vec<CityGenParams> {
    let mut out = Vec::with_capacity(n_cities);
    for i in 0..n_cities {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(master_seed, i as u64));
        let (lo, hi) = POPULATION_TIERS[i % POPULATION_TIERS.len()];
        let population = rng.gen_range(lo..=hi);
        // City-level mean schedules sit on the quarter-hour segment grid
        // (bedtimes vary widely across cities while sleep need is conserved,
        // so wake time is onset plus a tightly distributed duration).
        let sleep_start_min = 1290.0 + 15.0 * rng.gen_range(0..=6) as f64;
        let sleep_duration_min = 420.0 + 15.0 * rng.gen_range(0..=3) as f64;
        let wake_min = sleep_start_min + sleep_duration_min - MINUTES_PER_DAY;
        let params = CityGenParams {
            city_id: format!("city{:03}", i + 1),
            year,
            population,
            latitude: -55.0 + 110.0 * rng.gen::<f64>(),
            sleep_start_min,
            sleep_stop_min: wake_min,
            // Work begins a commute-scale gap after the city's wake time;
            // business hours sit on the half-hour grid.
            work_start_min: ((wake_min + 120.0) / 30.0).ceil() * 30.0
                + 30.0 * rng.gen_range(0..=1) as f64,
            work_stop_min: 990.0 + 30.0 * rng.gen_range(0..=3) as f64,
            floor: 0.04 + 0.02 * rng.gen::<f64>(),
            weekend_shift_min: 30.0 + 15.0 * rng.gen_range(0..=1) as f64,
            base_mw: population as f64 / 1000.0 * (0.8 + 0.4 * rng.gen::<f64>()),
            steepness: DEFAULT_STEEPNESS,
            noise_sigma,
            burst_rate: 0.0,
            seed: mix_seed(master_seed, 0x1000 + i as u64),
        };
        debug_assert!(params.validate().is_ok());
        out.push(params);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::build_synthetic_week;

    fn grid() -> SegmentGrid {
        SegmentGrid::default()
    }

    fn base_params(sigma: f64) -> CityGenParams {
        CityGenParams {
            city_id: "c1".into(),
            year: 2010,
            population: 800_000,
            latitude: 40.0,
            sleep_start_min: 1335.0,
            sleep_stop_min: 407.0,
            work_start_min: 540.0,
            work_stop_min: 1020.0,
            floor: 0.05,
            weekend_shift_min: 45.0,
            base_mw: 900.0,
            steepness: DEFAULT_STEEPNESS,
            noise_sigma: sigma,
            burst_rate: 0.0,
            seed: 7,
        }
    }

    #[test]
    fn invalid_params_rejected() {
        let mut p = base_params(0.0);
        p.sleep_stop_min = 1400.0; // wake after onset
        assert!(p.validate().is_err());
        let mut p = base_params(0.0);
        p.work_stop_min = p.work_start_min - 1.0;
        assert!(p.validate().is_err());
        let mut p = base_params(0.0);
        p.population = 0;
        assert!(p.validate().is_err());
        let mut p = base_params(0.0);
        p.floor = 1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let p = base_params(0.05);
        let a = generate_city(&p, &grid(), 14).unwrap();
        let b = generate_city(&p, &grid(), 14).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn noiseless_days_match_oracle() {
        let p = base_params(0.0);
        let city = generate_city(&p, &grid(), 7).unwrap();
        for (_, trace) in &city.internet_days {
            let oracle = oracle_internet_curve(&p, &grid(), trace.dow);
            for (v, o) in trace.values.iter().zip(&oracle) {
                assert_eq!(v.unwrap(), *o);
            }
        }
    }

    #[test]
    fn oracle_curve_tracks_activity_windows() {
        let p = base_params(0.0);
        let g = grid();
        let curve = oracle_internet_curve(&p, &g, Dow::Wed);
        // Deep night (02:00, segment 9) is near the floor; mid-work
        // (12:00, segment 49) is near the ceiling.
        assert!(curve[8] < 0.10, "night level {}", curve[8]);
        assert!(curve[48] > 0.90, "work level {}", curve[48]);
        let demand = oracle_hourly_demand(&p, Dow::Wed);
        assert!(demand[2] < demand[12]);
        assert!(demand[12] <= p.base_mw * 1.3);
    }

    #[test]
    fn weekend_shift_moves_sleep_only_on_weekends() {
        let p = base_params(0.0);
        let g = grid();
        let wed = oracle_internet_curve(&p, &g, Dow::Wed);
        let thu = oracle_internet_curve(&p, &g, Dow::Thu);
        let sat = oracle_internet_curve(&p, &g, Dow::Sat);
        assert_eq!(wed, thu);
        // At the weekday wake time the weekend curve is still low.
        let wake_seg = g.segment_of(p.sleep_stop_min + 10.0);
        assert!(sat[wake_seg - 1] < wed[wake_seg - 1] - 0.2);
    }

    #[test]
    fn bursts_only_when_enabled() {
        let mut p = base_params(0.0);
        let clean = generate_city(&p, &grid(), 28).unwrap();
        p.burst_rate = 1.0;
        let bursty = generate_city(&p, &grid(), 28).unwrap();
        let mut differing_days = 0;
        for ((_, a), (_, b)) in clean.internet_days.iter().zip(&bursty.internet_days) {
            if a.values != b.values {
                differing_days += 1;
            }
        }
        assert!(differing_days >= 20, "only {differing_days} bursty days");
    }

    #[test]
    fn corpus_covers_population_filters() {
        let params = corpus_params(60, 2010, 0.03, 99);
        assert_eq!(params.len(), 60);
        for p in &params {
            p.validate().unwrap();
        }
        for threshold in [250_000u64, 500_000, 1_000_000, 2_500_000, 5_000_000] {
            let above = params.iter().filter(|p| p.population > threshold).count();
            assert!(above >= 8, "only {above} cities above {threshold}");
        }
        let ids: std::collections::BTreeSet<_> =
            params.iter().map(|p| p.city_id.clone()).collect();
        assert_eq!(ids.len(), 60);
    }

    #[test]
    fn generated_days_feed_week_builder() {
        let p = base_params(0.03);
        let city = generate_city(&p, &grid(), 28).unwrap();
        let days: Vec<DailyTrace> =
            city.internet_days.iter().map(|(_, t)| t.clone()).collect();
        let week = build_synthetic_week("c1", 2010, &days, &grid(), 500.0).unwrap();
        for dow in ALL_DOWS {
            assert_eq!(week.trace(dow).len(), 96);
        }
    }

    #[test]
    fn iso_dates_cycle_weeks() {
        assert_eq!(iso_week_date(2010, 0), "2010-W01-1");
        assert_eq!(iso_week_date(2010, 6), "2010-W01-7");
        assert_eq!(iso_week_date(2010, 7), "2010-W02-1");
    }
}
