//! Related-city selection: geographic distance, or dynamic time warping over
//! GDP-per-capita or case series.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{CityId, CityMeta, Cohort};
use crate::preprocess::SplitSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Criterion {
    None,
    Geographic,
    GdpDtw,
    CasesDtw,
}

impl Criterion {
    pub fn as_str(&self) -> &'static str {
        match self {
            Criterion::None => "none",
            Criterion::Geographic => "geographic",
            Criterion::GdpDtw => "gdp_dtw",
            Criterion::CasesDtw => "cases_dtw",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(Criterion::None),
            "geo" | "geographic" => Ok(Criterion::Geographic),
            "gdp" | "gdp_dtw" => Ok(Criterion::GdpDtw),
            "cases" | "cases_dtw" => Ok(Criterion::CasesDtw),
            other => Err(Error::Config(format!("unknown criterion `{other}`"))),
        }
    }
}

impl TryFrom<String> for Criterion {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Criterion> for String {
    fn from(c: Criterion) -> String {
        c.as_str().to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityOptions {
    /// GDP years fed to the GDP criterion, inclusive.
    pub gdp_years: (i32, i32),
    /// Great-circle kilometres instead of Euclidean degrees.
    #[serde(default)]
    pub haversine: bool,
    /// Divide each city's GDP series by its own maximum before DTW.
    #[serde(default)]
    pub normalize_gdp: bool,
}

impl SimilarityOptions {
    pub fn new(gdp_years: (i32, i32)) -> Self {
        SimilarityOptions {
            gdp_years,
            haversine: false,
            normalize_gdp: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeighborRanking {
    pub target: CityId,
    /// Ascending by distance, ties by city id.
    pub ordered: Vec<(CityId, f64)>,
}

/// Euclidean distance in degree space.
pub fn geo_distance(a: &CityMeta, b: &CityMeta) -> f64 {
    (a.latitude - b.latitude).hypot(a.longitude - b.longitude)
}

pub fn haversine_km(a: &CityMeta, b: &CityMeta) -> f64 {
    const EARTH_RADIUS_KM: f64 = 6371.0088;
    let (la, lb) = (a.latitude.to_radians(), b.latitude.to_radians());
    let dlat = lb - la;
    let dlon = (b.longitude - a.longitude).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + la.cos() * lb.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

/// Classic unconstrained DTW with `|p - q|` as the local cost.
pub fn dtw_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.is_empty() || q.is_empty() {
        return Err(Error::Empty("dtw input"));
    }
    let mut prev = vec![f64::INFINITY; q.len() + 1];
    let mut curr = vec![f64::INFINITY; q.len() + 1];
    prev[0] = 0.0;
    for &pi in p {
        curr[0] = f64::INFINITY;
        for (j, &qj) in q.iter().enumerate() {
            let best = prev[j].min(prev[j + 1]).min(curr[j]);
            curr[j + 1] = (pi - qj).abs() + best;
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    Ok(prev[q.len()])
}

fn gdp_profile(meta: &CityMeta, options: &SimilarityOptions) -> Result<Vec<f64>> {
    let mut series = meta
        .gdp_series(options.gdp_years)
        .ok_or_else(|| Error::Coverage {
            city: meta.city.to_string(),
            what: format!("gdp years {}..={}", options.gdp_years.0, options.gdp_years.1),
        })?;
    if options.normalize_gdp {
        let max = series.iter().copied().fold(0.0, f64::max);
        if max > 0.0 {
            series.iter_mut().for_each(|v| *v /= max);
        }
    }
    Ok(series)
}

/// Per-city inputs for one criterion, indexed like the city list they were built from.
enum Profiles<'a> {
    Coordinates(Vec<&'a CityMeta>),
    Series(Vec<Vec<f64>>),
}

impl<'a> Profiles<'a> {
    fn build(
        cities: &[&CityId],
        cohort: &'a Cohort,
        criterion: Criterion,
        splits: &BTreeMap<CityId, SplitSeries>,
        options: &SimilarityOptions,
    ) -> Result<Self> {
        let meta = |c: &CityId| cohort.meta.get(c).ok_or_else(|| Error::UnknownCity(c.to_string()));
        Ok(match criterion {
            Criterion::None => return Err(Error::NoCriterion),
            Criterion::Geographic => {
                Profiles::Coordinates(cities.iter().map(|c| meta(c)).collect::<Result<_>>()?)
            }
            Criterion::GdpDtw => Profiles::Series(
                cities
                    .iter()
                    .map(|c| gdp_profile(meta(c)?, options))
                    .collect::<Result<_>>()?,
            ),
            Criterion::CasesDtw => Profiles::Series(
                cities
                    .iter()
                    .map(|c| {
                        splits
                            .get(*c)
                            .map(|s| s.train.clone())
                            .ok_or_else(|| Error::UnknownCity(c.to_string()))
                    })
                    .collect::<Result<_>>()?,
            ),
        })
    }

    fn distance(&self, i: usize, j: usize, options: &SimilarityOptions) -> Result<f64> {
        match self {
            Profiles::Coordinates(m) if options.haversine => Ok(haversine_km(m[i], m[j])),
            Profiles::Coordinates(m) => Ok(geo_distance(m[i], m[j])),
            Profiles::Series(s) => dtw_distance(&s[i], &s[j]),
        }
    }
}

fn sort_ranking(target: CityId, mut ordered: Vec<(CityId, f64)>) -> NeighborRanking {
    ordered.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    NeighborRanking { target, ordered }
}

/// Ranks every other cohort city by its distance to `target`.
pub fn rank_neighbors(
    target: &CityId,
    cohort: &Cohort,
    criterion: Criterion,
    splits: &BTreeMap<CityId, SplitSeries>,
    options: &SimilarityOptions,
) -> Result<NeighborRanking> {
    if criterion == Criterion::None {
        return Err(Error::NoCriterion);
    }
    if !cohort.series.contains_key(target) {
        return Err(Error::UnknownCity(target.to_string()));
    }
    let mut cities: Vec<&CityId> = vec![target];
    cities.extend(cohort.cities().filter(|c| *c != target));
    let profiles = Profiles::build(&cities, cohort, criterion, splits, options)?;
    let ordered = (1..cities.len())
        .map(|j| Ok((cities[j].clone(), profiles.distance(0, j, options)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(sort_ranking(target.clone(), ordered))
}

/// Rankings for every cohort city, from one symmetric distance matrix computed
/// in parallel.
pub fn rank_all(
    cohort: &Cohort,
    criterion: Criterion,
    splits: &BTreeMap<CityId, SplitSeries>,
    options: &SimilarityOptions,
) -> Result<BTreeMap<CityId, NeighborRanking>> {
    let cities: Vec<&CityId> = cohort.cities().collect();
    let profiles = Profiles::build(&cities, cohort, criterion, splits, options)?;
    let n = cities.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let distances = pairs
        .par_iter()
        .map(|&(i, j)| profiles.distance(i, j, options))
        .collect::<Result<Vec<_>>>()?;

    let mut rows: Vec<Vec<(CityId, f64)>> = vec![Vec::with_capacity(n.saturating_sub(1)); n];
    for (&(i, j), &d) in pairs.iter().zip(&distances) {
        rows[i].push((cities[j].clone(), d));
        rows[j].push((cities[i].clone(), d));
    }
    Ok(cities
        .iter()
        .zip(rows)
        .map(|(c, row)| ((*c).clone(), sort_ranking((*c).clone(), row)))
        .collect())
}

pub fn top_k(ranking: &NeighborRanking, k: usize) -> Result<Vec<CityId>> {
    if k > ranking.ordered.len() {
        return Err(Error::NotEnoughNeighbors {
            requested: k,
            available: ranking.ordered.len(),
        });
    }
    Ok(ranking.ordered[..k].iter().map(|(c, _)| c.clone()).collect())
}
