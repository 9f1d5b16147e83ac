//! Seasonal naive baseline, MAE/MASE, per-city evaluation and cross-city
//! summaries.

use std::collections::BTreeMap;
use std::fmt;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::CityId;
use crate::learn::{HyperParams, Regressor};
use crate::preprocess::{flag_anomalous, DiseaseConfig, SplitSeries, SupervisedDataset};
use crate::similarity::Criterion;
use crate::week::EpiWeek;

/// Which observations feed the MASE denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaseDenominator {
    /// Seasonal naive errors over the same points being scored.
    #[default]
    EvaluationWindow,
    /// Seasonal naive errors over the whole training segment.
    InSample,
}

/// `values[t - m]` for every `t` in `eval_indices`.
pub fn seasonal_naive(values: &[f64], m: usize, eval_indices: &[usize]) -> Result<Vec<f64>> {
    eval_indices
        .iter()
        .map(|&t| {
            if t < m {
                return Err(Error::SeasonalIndex { index: t, period: m });
            }
            values
                .get(t - m)
                .copied()
                .ok_or_else(|| Error::Shape(format!("index {t} beyond series of {}", values.len())))
        })
        .collect()
}

pub fn mae(predictions: &[f64], actuals: &[f64]) -> Result<f64> {
    if predictions.len() != actuals.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} actuals",
            predictions.len(),
            actuals.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::Empty("predictions"));
    }
    Ok(predictions
        .iter()
        .zip(actuals)
        .map(|(p, a)| (p - a).abs())
        .sum::<f64>()
        / predictions.len() as f64)
}

fn scaled(numerator: f64, denominator: f64) -> Result<f64> {
    if denominator == 0.0 {
        return Err(Error::UndefinedMase { mae: numerator });
    }
    Ok(numerator / denominator)
}

/// MASE of `predictions` for `series[indices]`, scaled by the seasonal naive
/// error over the same indices.
pub fn mase_at(predictions: &[f64], series: &[f64], indices: &[usize], m: usize) -> Result<f64> {
    let actuals: Vec<f64> = indices
        .iter()
        .map(|&t| {
            series
                .get(t)
                .copied()
                .ok_or_else(|| Error::Shape(format!("index {t} beyond series of {}", series.len())))
        })
        .collect::<Result<_>>()?;
    let model_mae = mae(predictions, &actuals)?;
    let naive = seasonal_naive(series, m, indices)?;
    // both means share the count, so the ratio of sums avoids one rounding step
    let model_sum: f64 = predictions.iter().zip(&actuals).map(|(p, a)| (p - a).abs()).sum();
    let naive_sum: f64 = naive.iter().zip(&actuals).map(|(p, a)| (p - a).abs()).sum();
    if naive_sum == 0.0 {
        return Err(Error::UndefinedMase { mae: model_mae });
    }
    Ok(model_sum / naive_sum)
}

/// MASE over a window whose observations are `actuals`, immediately preceded
/// by `history` (which must hold at least `m` values).
pub fn mase(predictions: &[f64], actuals: &[f64], history: &[f64], m: usize) -> Result<f64> {
    if history.len() < m {
        return Err(Error::InsufficientHistory {
            needed: m,
            got: history.len(),
        });
    }
    let series: Vec<f64> = history.iter().chain(actuals).copied().collect();
    let indices: Vec<usize> = (history.len()..series.len()).collect();
    mase_at(predictions, &series, &indices, m)
}

/// Classical MASE: the denominator is the seasonal naive MAE over `training`.
pub fn mase_in_sample(predictions: &[f64], actuals: &[f64], training: &[f64], m: usize) -> Result<f64> {
    let numerator = mae(predictions, actuals)?;
    if training.len() <= m {
        return Err(Error::InsufficientHistory {
            needed: m + 1,
            got: training.len(),
        });
    }
    let indices: Vec<usize> = (m..training.len()).collect();
    let naive = seasonal_naive(training, m, &indices)?;
    scaled(numerator, mae(&naive, &training[m..])?)
}

/// Forecasts `y[t - m]` by reading the matching target-lag column.
#[derive(Debug, Clone, Copy)]
pub struct SeasonalNaive {
    column: usize,
}

impl SeasonalNaive {
    /// Requires `horizon <= m < horizon + lags`.
    pub fn from_lags(lags: usize, horizon: usize, m: usize) -> Result<Self> {
        if m < horizon || m - horizon >= lags {
            return Err(Error::Config(format!(
                "period {m} is not reachable with {lags} lags at horizon {horizon}"
            )));
        }
        Ok(SeasonalNaive {
            column: lags - 1 - (m - horizon),
        })
    }
}

impl Regressor for SeasonalNaive {
    fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        rows.iter()
            .map(|r| {
                r.get(self.column)
                    .copied()
                    .ok_or_else(|| Error::Shape(format!("row too short for column {}", self.column)))
            })
            .collect()
    }

    fn name(&self) -> String {
        "seasonal_naive".into()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub city: CityId,
    pub disease: String,
    pub criterion: Criterion,
    pub k_neighbors: usize,
    pub algorithm: String,
    pub params: Option<HyperParams>,
    pub anomalous: bool,
    /// In normalized units; multiply by `scale` for case counts.
    pub train_mae: f64,
    /// `None` when the seasonal naive denominator is zero.
    pub train_mase: Option<f64>,
    pub test_mae: f64,
    pub test_mase: Option<f64>,
    pub scale: f64,
    pub z_threshold: f64,
}

impl EvalReport {
    pub fn train_mae_cases(&self) -> f64 {
        self.train_mae * self.scale
    }

    pub fn test_mae_cases(&self) -> f64 {
        self.test_mae * self.scale
    }
}

/// Identifies the run a report belongs to.
#[derive(Debug, Clone)]
pub struct EvalContext<'a> {
    pub city: &'a CityId,
    pub criterion: Criterion,
    pub k_neighbors: usize,
}

fn window_scores(
    model: &dyn Regressor,
    dataset: &SupervisedDataset,
    split: &SplitSeries,
    full: &[f64],
    config: &DiseaseConfig,
) -> Result<(f64, std::result::Result<f64, Error>)> {
    let predictions = model.predict(&dataset.features)?;
    let error = mae(&predictions, &dataset.targets)?;
    let scaled = match config.mase_denominator {
        MaseDenominator::EvaluationWindow => {
            mase_at(&predictions, full, &dataset.row_weeks, config.seasonal_m)
        }
        MaseDenominator::InSample => {
            mase_in_sample(&predictions, &dataset.targets, &split.train, config.seasonal_m)
        }
    };
    match scaled {
        Ok(_) | Err(Error::UndefinedMase { .. }) => Ok((error, scaled)),
        Err(e) => Err(e),
    }
}

/// Scores `model` in-sample on `train` and out-of-sample on `test`.
/// An undefined MASE is logged and reported as `None`; the MAE is still
/// reported.
pub fn evaluate_city(
    ctx: EvalContext<'_>,
    model: &dyn Regressor,
    train: &SupervisedDataset,
    test: &SupervisedDataset,
    split: &SplitSeries,
    config: &DiseaseConfig,
) -> Result<EvalReport> {
    let full = split.full();
    let (train_mae, train_mase) = window_scores(model, train, split, &full, config)?;
    let (test_mae, test_mase) = window_scores(model, test, split, &full, config)?;
    for (window, r) in [("train", &train_mase), ("test", &test_mase)] {
        if let Err(e) = r {
            warn!("{} {}: {window}: {e}", config.disease, ctx.city);
        }
    }
    Ok(EvalReport {
        city: ctx.city.clone(),
        disease: config.disease.clone(),
        criterion: ctx.criterion,
        k_neighbors: ctx.k_neighbors,
        algorithm: model.name(),
        params: model.params().cloned(),
        anomalous: flag_anomalous(&split.train, &split.test, config.z_threshold)?,
        train_mae,
        train_mase: train_mase.ok(),
        test_mae,
        test_mase: test_mase.ok(),
        scale: split.scale,
        z_threshold: config.z_threshold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForecastPoint {
    pub week: EpiWeek,
    pub actual: f64,
    pub predicted: f64,
}

/// Test-window forecasts in case counts, for plotting.
pub fn forecast_trace(
    model: &dyn Regressor,
    test: &SupervisedDataset,
    split: &SplitSeries,
    config: &DiseaseConfig,
) -> Result<Vec<ForecastPoint>> {
    let predictions = model.predict(&test.features)?;
    Ok(test
        .row_weeks
        .iter()
        .zip(&test.targets)
        .zip(predictions)
        .map(|((&t, &actual), predicted)| ForecastPoint {
            week: config.train_range.start.offset(t as i64),
            actual: actual * split.scale,
            predicted: predicted * split.scale,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Stratum {
    /// Cities without an anomalous test window.
    BelowThreshold,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub disease: String,
    pub algorithm: String,
    pub criterion: Criterion,
    pub k_neighbors: usize,
    pub stratum: Stratum,
    pub z_threshold: f64,
    pub mean_mase: f64,
    pub std_mase: f64,
    pub mean_train_mase: f64,
    pub std_train_mase: f64,
    pub n_cities: usize,
}

impl SummaryRow {
    pub fn stratum_label(&self) -> String {
        match self.stratum {
            Stratum::BelowThreshold => format!("z<{}", self.z_threshold),
            Stratum::All => "all".into(),
        }
    }
}

impl fmt::Display for Stratum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stratum::BelowThreshold => f.write_str("below_threshold"),
            Stratum::All => f.write_str("all"),
        }
    }
}

/// Mean and population std, summed in sorted order so the result does not
/// depend on input order.
fn mean_std(values: &mut [f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let mut dev: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
    dev.sort_by(f64::total_cmp);
    (mean, (dev.iter().sum::<f64>() / n).sqrt())
}

type GroupKey = (String, String, Criterion, usize, Stratum);

/// Groups reports by disease, algorithm, criterion, neighbor count and stratum.
/// Reports with an undefined test MASE are left out; groups left empty are
/// omitted.
pub fn aggregate(reports: &[EvalReport], stratify: bool) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<GroupKey, (f64, Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in reports {
        let Some(test) = r.test_mase else { continue };
        let mut strata = vec![Stratum::All];
        if stratify && !r.anomalous {
            strata.push(Stratum::BelowThreshold);
        }
        for stratum in strata {
            let key = (r.disease.clone(), r.algorithm.clone(), r.criterion, r.k_neighbors, stratum);
            let entry = groups.entry(key).or_insert((r.z_threshold, Vec::new(), Vec::new()));
            entry.1.push(test);
            entry.2.extend(r.train_mase);
        }
    }
    groups
        .into_iter()
        .map(|((disease, algorithm, criterion, k_neighbors, stratum), (z, mut test, mut train))| {
            let (mean_mase, std_mase) = mean_std(&mut test);
            let (mean_train_mase, std_train_mase) = mean_std(&mut train);
            SummaryRow {
                disease,
                algorithm,
                criterion,
                k_neighbors,
                stratum,
                z_threshold: z,
                mean_mase,
                std_mase,
                mean_train_mase,
                std_train_mase,
                n_cities: test.len(),
            }
        })
        .collect()
}

/// The algorithm with the lowest baseline (`criterion = none`) mean test MASE
/// for `disease`, preferring the below-threshold stratum when present.
pub fn best_baseline_algorithm(summary: &[SummaryRow], disease: &str) -> Option<String> {
    let baseline = |stratum| {
        summary
            .iter()
            .filter(move |r| r.disease == disease && r.criterion == Criterion::None && r.stratum == stratum)
    };
    let pick = |rows: Vec<&SummaryRow>| {
        rows.into_iter()
            .filter(|r| r.mean_mase.is_finite())
            .min_by(|a, b| a.mean_mase.total_cmp(&b.mean_mase).then_with(|| a.algorithm.cmp(&b.algorithm)))
            .map(|r| r.algorithm.clone())
    };
    pick(baseline(Stratum::BelowThreshold).collect())
        .or_else(|| pick(baseline(Stratum::All).collect()))
        .or_else(|| {
            summary
                .iter()
                .find(|r| r.disease == disease)
                .map(|r| r.algorithm.clone())
        })
}
