//! Train/test splitting, max-normalization, lag windows, anomaly flagging and
//! descriptive statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::MaseDenominator;
use crate::ingest::{CityId, WeeklySeries};
use crate::week::WeekRange;

/// Per-disease experiment settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiseaseConfig {
    pub disease: String,
    pub train_range: WeekRange,
    pub test_range: WeekRange,
    pub lags: usize,
    pub horizon: usize,
    pub seasonal_m: usize,
    pub z_threshold: f64,
    pub gdp_years: (i32, i32),
    pub mase_denominator: MaseDenominator,
}

impl DiseaseConfig {
    /// Five lags, one-week horizon, `m = 1`, z threshold 4.
    pub fn new(
        disease: &str,
        train_range: WeekRange,
        test_range: WeekRange,
        gdp_years: (i32, i32),
    ) -> Result<Self> {
        let config = DiseaseConfig {
            disease: disease.to_string(),
            train_range,
            test_range,
            lags: 5,
            horizon: 1,
            seasonal_m: 1,
            z_threshold: 4.0,
            gdp_years,
            mase_denominator: MaseDenominator::EvaluationWindow,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.train_range.end >= self.test_range.start {
            return Err(Error::Config(format!(
                "{}: train and test ranges overlap",
                self.disease
            )));
        }
        if self.train_range.end.offset(1) != self.test_range.start {
            return Err(Error::Config(format!(
                "{}: test range must start the week after the train range ends",
                self.disease
            )));
        }
        if self.lags == 0 || self.horizon == 0 || self.seasonal_m == 0 {
            return Err(Error::Config("lags, horizon and seasonal_m must be at least 1".into()));
        }
        if !(self.z_threshold > 0.0) {
            return Err(Error::Config("z_threshold must be positive".into()));
        }
        if self.gdp_years.0 > self.gdp_years.1 {
            return Err(Error::Config("gdp year range is reversed".into()));
        }
        Ok(())
    }

    /// Train start through test end.
    pub fn full_range(&self) -> WeekRange {
        WeekRange {
            start: self.train_range.start,
            end: self.test_range.end,
        }
    }
}

/// A series cut into train and test segments, both divided by `scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSeries {
    pub train: Vec<f64>,
    pub test: Vec<f64>,
    pub scale: f64,
}

impl SplitSeries {
    /// Train followed by test.
    pub fn full(&self) -> Vec<f64> {
        let mut all = Vec::with_capacity(self.train.len() + self.test.len());
        all.extend_from_slice(&self.train);
        all.extend_from_slice(&self.test);
        all
    }
}

pub fn split_and_normalize(series: &WeeklySeries, config: &DiseaseConfig) -> Result<SplitSeries> {
    let segment = |range: &WeekRange| -> Result<Vec<f64>> {
        let offset = series.start_week.weeks_until(range.start);
        if offset < 0 || offset as usize + range.len() > series.values.len() {
            return Err(Error::Coverage {
                city: series.city.to_string(),
                what: format!("{}..{}", range.start, range.end),
            });
        }
        let offset = offset as usize;
        Ok(series.values[offset..offset + range.len()].to_vec())
    };
    let mut train = segment(&config.train_range)?;
    let mut test = segment(&config.test_range)?;

    let max = train.iter().copied().fold(0.0_f64, f64::max);
    let scale = if max > 0.0 { max } else { 1.0 };
    train.iter_mut().for_each(|v| *v /= scale);
    test.iter_mut().for_each(|v| *v /= scale);
    Ok(SplitSeries { train, test, scale })
}

/// Where a feature column comes from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureSource {
    Target,
    Neighbor(CityId),
}

/// `lag == 1` is the most recent usable value, `horizon` weeks before the target.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ColumnLabel {
    pub source: FeatureSource,
    pub lag: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SupervisedDataset {
    pub features: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub column_labels: Vec<ColumnLabel>,
    /// Index of each target within the series the rows were cut from.
    pub row_weeks: Vec<usize>,
}

impl SupervisedDataset {
    /// Builds a dataset from raw rows; labels default to target lags numbered
    /// from the last column.
    pub fn from_rows(features: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        let n_cols = features.first().map_or(0, Vec::len);
        let ds = SupervisedDataset {
            column_labels: (0..n_cols)
                .map(|c| ColumnLabel {
                    source: FeatureSource::Target,
                    lag: n_cols - c,
                })
                .collect(),
            row_weeks: (0..targets.len()).collect(),
            features,
            targets,
        };
        ds.check()?;
        Ok(ds)
    }

    pub fn check(&self) -> Result<()> {
        let n = self.targets.len();
        if self.features.len() != n || self.row_weeks.len() != n {
            return Err(Error::Shape(format!(
                "{} feature rows, {} targets, {} row weeks",
                self.features.len(),
                n,
                self.row_weeks.len()
            )));
        }
        if let Some(row) = self.features.iter().find(|r| r.len() != self.column_labels.len()) {
            return Err(Error::Shape(format!(
                "row has {} columns, expected {}",
                row.len(),
                self.column_labels.len()
            )));
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.targets.len()
    }

    pub fn n_features(&self) -> usize {
        self.column_labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> SupervisedDataset {
        SupervisedDataset {
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            targets: indices.iter().map(|&i| self.targets[i]).collect(),
            column_labels: self.column_labels.clone(),
            row_weeks: indices.iter().map(|&i| self.row_weeks[i]).collect(),
        }
    }
}

/// Window of `lags` values ending `horizon` steps before index `t`, oldest first.
pub(crate) fn lag_window(values: &[f64], t: usize, lags: usize, horizon: usize) -> &[f64] {
    let newest = t - horizon;
    &values[newest + 1 - lags..=newest]
}

pub(crate) fn target_lag_labels(source: FeatureSource, lags: usize) -> Vec<ColumnLabel> {
    (0..lags)
        .map(|c| ColumnLabel {
            source: source.clone(),
            lag: lags - c,
        })
        .collect()
}

/// One row per target index `t` in `lags + horizon - 1 ..= len - 1`.
pub fn make_lag_dataset(values: &[f64], lags: usize, horizon: usize) -> Result<SupervisedDataset> {
    if lags == 0 || horizon == 0 {
        return Err(Error::Config("lags and horizon must be at least 1".into()));
    }
    let needed = lags + horizon;
    if values.len() < needed {
        return Err(Error::InsufficientHistory {
            needed,
            got: values.len(),
        });
    }
    let rows: Vec<usize> = (needed - 1..values.len()).collect();
    Ok(SupervisedDataset {
        features: rows
            .iter()
            .map(|&t| lag_window(values, t, lags, horizon).to_vec())
            .collect(),
        targets: rows.iter().map(|&t| values[t]).collect(),
        column_labels: target_lag_labels(FeatureSource::Target, lags),
        row_weeks: rows,
    })
}

fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// True when any test value sits more than `z_threshold` population standard
/// deviations above the training mean (upper tail only).
pub fn flag_anomalous(train: &[f64], test: &[f64], z_threshold: f64) -> Result<bool> {
    if train.is_empty() {
        return Err(Error::Empty("training segment"));
    }
    let (mean, std) = mean_and_std(train);
    if std == 0.0 {
        return Ok(test.iter().any(|&v| v != mean));
    }
    Ok(test.iter().any(|&v| (v - mean) / std > z_threshold))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesStats {
    pub mean: f64,
    pub std: f64,
    pub max: f64,
    pub skewness: f64,
}

/// Mean, population std, max and Fisher-Pearson skewness `m3 / m2^1.5`.
pub fn series_stats(values: &[f64]) -> Result<SeriesStats> {
    if values.is_empty() {
        return Err(Error::Empty("series"));
    }
    let n = values.len() as f64;
    let (mean, std) = mean_and_std(values);
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m3 = values.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    let skewness = if m2 == 0.0 { 0.0 } else { m3 / m2.powf(1.5) };
    Ok(SeriesStats {
        mean,
        std,
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        skewness,
    })
}
