//! Loading case, coordinate and GDP snapshots from CSV and assembling the
//! per-disease city cohort.
//!
//! Expected headers:
//!
//! * cases: `city_id,epi_week,cases`
//! * cities: `city_id,name,latitude,longitude`
//! * gdp: `city_id,year,gdp_per_capita`

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::path::Path;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::DiseaseConfig;
use crate::week::EpiWeek;

pub const CASES_HEADER: [&str; 3] = ["city_id", "epi_week", "cases"];
pub const CITIES_HEADER: [&str; 4] = ["city_id", "name", "latitude", "longitude"];
pub const GDP_HEADER: [&str; 3] = ["city_id", "year", "gdp_per_capita"];

/// Municipality code.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CityId(String);

impl CityId {
    pub fn new(code: impl Into<String>) -> Result<Self> {
        let code = code.into();
        let code = code.trim();
        if code.is_empty() {
            return Err(Error::Config("empty city id".into()));
        }
        Ok(CityId(code.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One city's contiguous weekly case counts for a single disease.
#[derive(Debug, Clone, PartialEq)]
pub struct WeeklySeries {
    pub city: CityId,
    pub disease: String,
    pub start_week: EpiWeek,
    pub values: Vec<f64>,
}

impl WeeklySeries {
    pub fn new(city: CityId, disease: &str, start_week: EpiWeek, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("weekly series"));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::Config(format!(
                "city {city}: case counts must be finite and non-negative, got {v}"
            )));
        }
        Ok(WeeklySeries {
            city,
            disease: disease.to_string(),
            start_week,
            values,
        })
    }

    pub fn end_week(&self) -> EpiWeek {
        self.start_week.offset(self.values.len() as i64 - 1)
    }

    /// Value observed in `week`, if covered.
    pub fn at(&self, week: EpiWeek) -> Option<f64> {
        let idx = self.start_week.weeks_until(week);
        if idx < 0 {
            return None;
        }
        self.values.get(idx as usize).copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CityMeta {
    pub city: CityId,
    pub name: String,
    pub latitude: f64,
    pub longitude: f64,
    pub gdp_per_capita: BTreeMap<i32, f64>,
}

impl CityMeta {
    pub fn new(city: CityId, name: &str, latitude: f64, longitude: f64) -> Result<Self> {
        if !(-90.0..=90.0).contains(&latitude) {
            return Err(Error::Config(format!("latitude {latitude} out of range")));
        }
        if !(-180.0..=180.0).contains(&longitude) {
            return Err(Error::Config(format!("longitude {longitude} out of range")));
        }
        Ok(CityMeta {
            city,
            name: name.to_string(),
            latitude,
            longitude,
            gdp_per_capita: BTreeMap::new(),
        })
    }

    pub fn with_gdp(mut self, gdp: impl IntoIterator<Item = (i32, f64)>) -> Self {
        self.gdp_per_capita.extend(gdp);
        self
    }

    /// GDP values for every year in `years` (inclusive), or `None` if any is missing.
    pub fn gdp_series(&self, years: (i32, i32)) -> Option<Vec<f64>> {
        (years.0..=years.1)
            .map(|y| self.gdp_per_capita.get(&y).copied())
            .collect()
    }
}

/// Cities retained for one disease, with series trimmed to the configured range.
#[derive(Debug, Clone)]
pub struct Cohort {
    pub disease: String,
    pub series: BTreeMap<CityId, WeeklySeries>,
    pub meta: BTreeMap<CityId, CityMeta>,
    /// Cities that were considered and rejected, with the reason.
    pub dropped: Vec<(CityId, String)>,
}

impl Cohort {
    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn cities(&self) -> impl Iterator<Item = &CityId> {
        self.series.keys()
    }
}

fn open(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn check_header(rdr: &mut csv::Reader<File>, path: &Path, expected: &[&str]) -> Result<()> {
    let header = rdr.headers()?;
    let ok = header.len() == expected.len()
        && header.iter().zip(expected).all(|(a, b)| a.trim_start_matches('\u{feff}') == *b);
    if ok {
        Ok(())
    } else {
        Err(Error::Header {
            path: path.to_path_buf(),
            expected: expected.join(","),
        })
    }
}

fn parse_err(path: &Path, record: &csv::StringRecord, message: String) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line: record.position().map(|p| p.line()).unwrap_or(0),
        message,
    }
}

/// Reads a cases CSV into one gap-filled series per city, ordered by city id.
pub fn load_case_series(path: &Path, disease: &str) -> Result<Vec<WeeklySeries>> {
    let mut rdr = open(path)?;
    check_header(&mut rdr, path, &CASES_HEADER)?;

    let mut by_city: BTreeMap<CityId, BTreeMap<EpiWeek, f64>> = BTreeMap::new();
    for record in rdr.records() {
        let record = record?;
        let city = CityId::new(&record[0]).map_err(|e| parse_err(path, &record, e.to_string()))?;
        let week: EpiWeek = record[1]
            .parse()
            .map_err(|_| parse_err(path, &record, format!("bad week token `{}`", &record[1])))?;
        let cases: i64 = record[2]
            .parse()
            .map_err(|_| parse_err(path, &record, format!("non-integer cases `{}`", &record[2])))?;
        if cases < 0 {
            return Err(parse_err(path, &record, "negative case count".into()));
        }
        match by_city.entry(city).or_default().entry(week) {
            Entry::Occupied(e) => {
                return Err(parse_err(
                    path,
                    &record,
                    format!("duplicate row for week {}", e.key()),
                ))
            }
            Entry::Vacant(e) => {
                e.insert(cases as f64);
            }
        }
    }

    by_city
        .into_iter()
        .map(|(city, weeks)| {
            let (&start, _) = weeks.first_key_value().expect("non-empty by construction");
            let (&end, _) = weeks.last_key_value().expect("non-empty by construction");
            let mut values = vec![0.0; start.weeks_until(end) as usize + 1];
            for (week, cases) in weeks {
                values[start.weeks_until(week) as usize] = cases;
            }
            WeeklySeries::new(city, disease, start, values)
        })
        .collect()
}

/// Reads the cities and GDP CSVs. GDP rows for cities absent from the cities
/// file are skipped with a warning.
pub fn load_city_meta(cities_path: &Path, gdp_path: &Path) -> Result<BTreeMap<CityId, CityMeta>> {
    let mut meta = BTreeMap::new();

    let mut rdr = open(cities_path)?;
    check_header(&mut rdr, cities_path, &CITIES_HEADER)?;
    for record in rdr.records() {
        let record = record?;
        let err = |m: String| parse_err(cities_path, &record, m);
        let city = CityId::new(&record[0]).map_err(|e| err(e.to_string()))?;
        let lat: f64 = record[2]
            .parse()
            .map_err(|_| err(format!("bad latitude `{}`", &record[2])))?;
        let lon: f64 = record[3]
            .parse()
            .map_err(|_| err(format!("bad longitude `{}`", &record[3])))?;
        let entry = CityMeta::new(city.clone(), &record[1], lat, lon).map_err(|e| err(e.to_string()))?;
        if meta.insert(city.clone(), entry).is_some() {
            return Err(err(format!("duplicate city {city}")));
        }
    }

    let mut rdr = open(gdp_path)?;
    check_header(&mut rdr, gdp_path, &GDP_HEADER)?;
    for record in rdr.records() {
        let record = record?;
        let err = |m: String| parse_err(gdp_path, &record, m);
        let city = CityId::new(&record[0]).map_err(|e| err(e.to_string()))?;
        let year: i32 = record[1]
            .parse()
            .map_err(|_| err(format!("bad year `{}`", &record[1])))?;
        let gdp: f64 = record[2]
            .parse()
            .map_err(|_| err(format!("bad gdp value `{}`", &record[2])))?;
        if !(gdp > 0.0) || !gdp.is_finite() {
            return Err(err(format!("gdp per capita must be positive, got {gdp}")));
        }
        let Some(entry) = meta.get_mut(&city) else {
            warn!(
                "{}: line {}: city {city} not in cities file, gdp row skipped",
                gdp_path.display(),
                record.position().map(|p| p.line()).unwrap_or(0)
            );
            continue;
        };
        if entry.gdp_per_capita.insert(year, gdp).is_some() {
            return Err(err(format!("duplicate gdp row for {city} in {year}")));
        }
    }

    Ok(meta)
}

/// Keeps the cities with full case coverage of the configured range, known
/// coordinates and GDP for every configured year.
pub fn build_cohort(
    series: Vec<WeeklySeries>,
    meta: &BTreeMap<CityId, CityMeta>,
    config: &DiseaseConfig,
) -> Result<Cohort> {
    let range = config.full_range();
    let mut cohort = Cohort {
        disease: config.disease.clone(),
        series: BTreeMap::new(),
        meta: BTreeMap::new(),
        dropped: Vec::new(),
    };

    for s in series {
        let reason = if s.start_week > range.start || s.end_week() < range.end {
            Some(format!(
                "case data {}..{} does not cover {}..{}",
                s.start_week,
                s.end_week(),
                range.start,
                range.end
            ))
        } else {
            match meta.get(&s.city) {
                None => Some("no coordinates".to_string()),
                Some(m) if m.gdp_series(config.gdp_years).is_none() => Some(format!(
                    "gdp missing for some year in {}..={}",
                    config.gdp_years.0, config.gdp_years.1
                )),
                Some(_) => None,
            }
        };
        if let Some(reason) = reason {
            info!("{}: dropping city {}: {reason}", config.disease, s.city);
            cohort.dropped.push((s.city, reason));
            continue;
        }

        let offset = s.start_week.weeks_until(range.start) as usize;
        let values = s.values[offset..offset + range.len()].to_vec();
        let city = s.city.clone();
        cohort.meta.insert(city.clone(), meta[&city].clone());
        cohort.series.insert(
            city.clone(),
            WeeklySeries {
                city,
                disease: config.disease.clone(),
                start_week: range.start,
                values,
            },
        );
    }

    if cohort.is_empty() {
        return Err(Error::EmptyCohort);
    }
    Ok(cohort)
}
