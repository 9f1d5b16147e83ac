//! Synthetic cohorts shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use wavecast::ingest::{build_cohort, CityId, CityMeta, Cohort, WeeklySeries};
use wavecast::preprocess::DiseaseConfig;
use wavecast::week::{EpiWeek, WeekRange};

pub const GDP_YEARS: (i32, i32) = (2010, 2012);

pub fn week(s: &str) -> EpiWeek {
    s.parse().unwrap()
}

pub fn city(i: usize) -> CityId {
    CityId::new(format!("C{i:02}")).unwrap()
}

/// Contiguous train and test ranges starting at `start`.
pub fn disease(name: &str, start: EpiWeek, train_weeks: usize, test_weeks: usize) -> DiseaseConfig {
    let train = WeekRange::new(start, start.offset(train_weeks as i64 - 1)).unwrap();
    let test = WeekRange::new(
        start.offset(train_weeks as i64),
        start.offset((train_weeks + test_weeks) as i64 - 1),
    )
    .unwrap();
    DiseaseConfig::new(name, train, test, GDP_YEARS).unwrap()
}

/// A synthetic cohort before it is filtered into a [`Cohort`].
pub struct Synthetic {
    pub config: DiseaseConfig,
    pub cases: Vec<Vec<f64>>,
    pub coords: Vec<(f64, f64)>,
    pub gdp: Vec<Vec<f64>>,
}

impl Synthetic {
    pub fn n_cities(&self) -> usize {
        self.cases.len()
    }

    pub fn cohort(&self) -> Cohort {
        let start = self.config.train_range.start;
        let series = self
            .cases
            .iter()
            .enumerate()
            .map(|(i, v)| WeeklySeries::new(city(i), &self.config.disease, start, v.clone()).unwrap())
            .collect();
        let meta: BTreeMap<CityId, CityMeta> = (0..self.n_cities())
            .map(|i| {
                let (lat, lon) = self.coords[i];
                let years = GDP_YEARS.0..=GDP_YEARS.1;
                let m = CityMeta::new(city(i), &format!("City {i}"), lat, lon)
                    .unwrap()
                    .with_gdp(years.zip(self.gdp[i].iter().copied()));
                (city(i), m)
            })
            .collect();
        build_cohort(series, &meta, &self.config).unwrap()
    }

    /// Writes `cases.csv`, `cities.csv` and `gdp.csv` into `dir`.
    pub fn write_csvs(&self, dir: &Path) {
        let start = self.config.train_range.start;
        let mut cases = String::from("city_id,epi_week,cases\n");
        for (i, values) in self.cases.iter().enumerate() {
            for (t, v) in values.iter().enumerate() {
                writeln!(cases, "{},{},{}", city(i), start.offset(t as i64), *v as u64).unwrap();
            }
        }
        let mut cities = String::from("city_id,name,latitude,longitude\n");
        let mut gdp = String::from("city_id,year,gdp_per_capita\n");
        for i in 0..self.n_cities() {
            let (lat, lon) = self.coords[i];
            writeln!(cities, "{},City {i},{lat},{lon}", city(i)).unwrap();
            for (y, g) in (GDP_YEARS.0..=GDP_YEARS.1).zip(&self.gdp[i]) {
                writeln!(gdp, "{},{y},{g}", city(i)).unwrap();
            }
        }
        fs::write(dir.join("cases.csv"), cases).unwrap();
        fs::write(dir.join("cities.csv"), cities).unwrap();
        fs::write(dir.join("gdp.csv"), gdp).unwrap();
    }
}

fn gdp_paths(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let base: f64 = rng.random_range(8_000.0..40_000.0);
            (0..3).map(|y| (base * (1.0 + 0.03 * y as f64)).round()).collect()
        })
        .collect()
}

/// Annual epidemic pulse: a Gaussian bump peaking mid-season.
pub fn pulse(t: i64) -> f64 {
    let phase = t.rem_euclid(52) as f64 - 26.0;
    5.0 + 200.0 * (-phase * phase / (2.0 * 16.0)).exp()
}

/// Cities on a line; city `i` sees the shared pulse `i` weeks late, with
/// multiplicative Gaussian noise of relative size `noise`.
pub fn traveling_wave(n_cities: usize, train_weeks: usize, test_weeks: usize, noise: f64, seed: u64) -> Synthetic {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise).unwrap();
    let total = (train_weeks + test_weeks) as i64;
    let cases = (0..n_cities)
        .map(|i| {
            (0..total)
                .map(|t| (pulse(t - i as i64) * (1.0 + normal.sample(&mut rng))).max(0.0).round())
                .collect()
        })
        .collect();
    let coords = (0..n_cities).map(|i| (-20.0, -50.0 + 0.3 * i as f64)).collect();
    Synthetic {
        config: disease("wave", week("2010-W01"), train_weeks, test_weeks),
        cases,
        coords,
        gdp: gdp_paths(n_cities, &mut rng),
    }
}

/// Stationary seasonal cities; those in `spiked` get one test-window value at
/// the training mean plus six training standard deviations.
pub fn spiked_cohort(n_cities: usize, spiked: &[usize], seed: u64) -> Synthetic {
    let (train_weeks, test_weeks) = (104, 26);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 3.0).unwrap();
    let mut cases: Vec<Vec<f64>> = (0..n_cities)
        .map(|i| {
            (0..train_weeks + test_weeks)
                .map(|t| {
                    let season = (2.0 * std::f64::consts::PI * (t + 3 * i) as f64 / 52.0).sin();
                    (60.0 + 30.0 * season + normal.sample(&mut rng)).round()
                })
                .collect()
        })
        .collect();
    for &i in spiked {
        let train = &cases[i][..train_weeks];
        let n = train.len() as f64;
        let mean = train.iter().sum::<f64>() / n;
        let std = (train.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        cases[i][train_weeks + 10] = (mean + 6.0 * std).ceil();
    }
    let coords = (0..n_cities)
        .map(|_| (rng.random_range(-30.0..0.0), rng.random_range(-60.0..-40.0)))
        .collect();
    Synthetic {
        config: disease("spiky", week("2012-W01"), train_weeks, test_weeks),
        cases,
        coords,
        gdp: gdp_paths(n_cities, &mut rng),
    }
}

/// TOML config for the CSVs written by [`Synthetic::write_csvs`], with small
/// grids so the end-to-end runs stay quick.
pub fn small_config(s: &Synthetic, seed: u64) -> String {
    let c = &s.config;
    format!(
        r#"cities = "cities.csv"
gdp = "gdp.csv"
out = "out"
seed = {seed}
criteria = ["geographic", "gdp_dtw", "cases_dtw"]
neighbors = [1, 2, 3]
algorithms = ["random_forest", "gradient_boosting"]

[grid.random_forest]
n_trees = [5, 10]
max_depth = [3, 0]

[grid.gradient_boosting]
n_trees = [5]
max_depth = [2, 3]
learning_rate = [0.1]

[[disease]]
name = "{}"
cases = "cases.csv"
train = ["{}", "{}"]
test = ["{}", "{}"]
gdp_years = [{}, {}]
"#,
        c.disease,
        c.train_range.start,
        c.train_range.end,
        c.test_range.start,
        c.test_range.end,
        GDP_YEARS.0,
        GDP_YEARS.1
    )
}
