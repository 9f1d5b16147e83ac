//! Regression-tree ensembles written from scratch: random forests,
//! gradient-boosted trees, and grid search over expanding-window
//! cross-validation.

mod boosting;
mod forest;
mod selection;
mod tree;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::preprocess::SupervisedDataset;

pub use boosting::fit_gradient_boosting;
pub use forest::fit_random_forest;
pub use selection::{cv_splits, default_grid, grid_search, CV_SPLITS};
pub use tree::{fit_tree, Node, Tree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    RandomForest,
    GradientBoosting,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::RandomForest => "random_forest",
            Algorithm::GradientBoosting => "gradient_boosting",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random_forest" | "rf" => Ok(Algorithm::RandomForest),
            "gradient_boosting" | "gb" | "xgboost" => Ok(Algorithm::GradientBoosting),
            other => Err(Error::Config(format!("unknown algorithm `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitCriterion {
    Mae,
    Mse,
}

/// Number of features examined at each split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeatureSubset {
    /// `ceil(sqrt(n_features))`
    Sqrt,
    All,
    Count(usize),
    Fraction(f64),
}

impl FeatureSubset {
    pub fn resolve(&self, n_features: usize) -> usize {
        let k = match *self {
            FeatureSubset::Sqrt => (n_features as f64).sqrt().ceil() as usize,
            FeatureSubset::All => n_features,
            FeatureSubset::Count(k) => k,
            FeatureSubset::Fraction(f) => (f * n_features as f64).ceil() as usize,
        };
        k.clamp(1, n_features.max(1))
    }
}

impl fmt::Display for FeatureSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureSubset::Sqrt => f.write_str("sqrt"),
            FeatureSubset::All => f.write_str("all"),
            FeatureSubset::Count(k) => write!(f, "{k}"),
            FeatureSubset::Fraction(x) => write!(f, "{x:?}"),
        }
    }
}

impl FromStr for FeatureSubset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad feature subset `{s}`"));
        match s.trim() {
            "sqrt" => Ok(FeatureSubset::Sqrt),
            "all" => Ok(FeatureSubset::All),
            t if t.contains('.') => {
                let f: f64 = t.parse().map_err(|_| bad())?;
                if f > 0.0 && f <= 1.0 {
                    Ok(FeatureSubset::Fraction(f))
                } else {
                    Err(bad())
                }
            }
            t => match t.parse::<usize>() {
                Ok(k) if k >= 1 => Ok(FeatureSubset::Count(k)),
                _ => Err(bad()),
            },
        }
    }
}

impl Serialize for FeatureSubset {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FeatureSubset {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub algorithm: Algorithm,
    pub n_trees: usize,
    /// `None` grows until leaves are pure or single-row.
    pub max_depth: Option<usize>,
    /// Shrinkage; used by gradient boosting only.
    pub learning_rate: f64,
    pub split_criterion: SplitCriterion,
    /// Bootstrap resampling; used by random forests only.
    pub bootstrap: bool,
    pub feature_subset: FeatureSubset,
}

impl HyperParams {
    /// Unlimited depth, learning rate 0.1, MAE splits, bootstrap, sqrt feature subset.
    pub fn new(algorithm: Algorithm, n_trees: usize) -> Self {
        HyperParams {
            algorithm,
            n_trees,
            max_depth: None,
            learning_rate: 0.1,
            split_criterion: SplitCriterion::Mae,
            bootstrap: true,
            feature_subset: FeatureSubset::Sqrt,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Config("n_trees must be at least 1".into()));
        }
        if self.max_depth == Some(0) {
            return Err(Error::Config("max_depth must be at least 1 when limited".into()));
        }
        if self.algorithm == Algorithm::GradientBoosting && !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

impl fmt::Display for HyperParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n_trees={};max_depth=", self.n_trees)?;
        match self.max_depth {
            Some(d) => write!(f, "{d}")?,
            None => f.write_str("none")?,
        }
        match self.algorithm {
            Algorithm::RandomForest => write!(
                f,
                ";criterion={};bootstrap={}",
                match self.split_criterion {
                    SplitCriterion::Mae => "mae",
                    SplitCriterion::Mse => "mse",
                },
                self.bootstrap
            )?,
            Algorithm::GradientBoosting => write!(f, ";learning_rate={}", self.learning_rate)?,
        }
        write!(f, ";features={}", self.feature_subset)
    }
}

/// A fitted forest or boosted ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsemble {
    pub params: HyperParams,
    pub trees: Vec<Tree>,
    /// Initial prediction for gradient boosting; unused by forests.
    pub base_value: f64,
    pub seed: u64,
    pub n_features: usize,
}

impl TreeEnsemble {
    pub fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        if let Some(bad) = rows.iter().find(|r| r.len() != self.n_features) {
            return Err(Error::Shape(format!(
                "row has {} columns, model expects {}",
                bad.len(),
                self.n_features
            )));
        }
        Ok(rows.iter().map(|r| self.predict_row(r)).collect())
    }

    fn predict_row(&self, row: &[f64]) -> f64 {
        match self.params.algorithm {
            Algorithm::RandomForest => {
                self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / self.trees.len() as f64
            }
            Algorithm::GradientBoosting => {
                let sum: f64 = self.trees.iter().map(|t| t.predict_row(row)).sum();
                self.base_value + self.params.learning_rate * sum
            }
        }
    }

    /// Boosting predictions after 0, 1, ..., n_trees stages.
    pub fn staged_predict(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let mut current = vec![self.base_value; rows.len()];
        let mut stages = vec![current.clone()];
        for tree in &self.trees {
            for (p, row) in current.iter_mut().zip(rows) {
                *p += self.params.learning_rate * tree.predict_row(row);
            }
            stages.push(current.clone());
        }
        stages
    }

    pub fn max_depth(&self) -> usize {
        self.trees.iter().map(Tree::depth).max().unwrap_or(0)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Independent generator for tree `index` of an ensemble seeded with `seed`.
pub(crate) fn tree_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Fits the ensemble named by `params.algorithm`.
pub fn fit(dataset: &SupervisedDataset, params: &HyperParams, seed: u64) -> Result<TreeEnsemble> {
    match params.algorithm {
        Algorithm::RandomForest => fit_random_forest(dataset, params, seed),
        Algorithm::GradientBoosting => fit_gradient_boosting(dataset, params, seed),
    }
}

pub fn predict(ensemble: &TreeEnsemble, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    ensemble.predict(rows)
}

/// Anything that maps feature rows to point forecasts.
pub trait Regressor: Sync {
    fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>>;

    fn name(&self) -> String;

    fn params(&self) -> Option<&HyperParams> {
        None
    }
}

impl Regressor for TreeEnsemble {
    fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        TreeEnsemble::predict(self, rows)
    }

    fn name(&self) -> String {
        self.params.algorithm.to_string()
    }

    fn params(&self) -> Option<&HyperParams> {
        Some(&self.params)
    }
}
