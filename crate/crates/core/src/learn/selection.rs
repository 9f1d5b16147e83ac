use super::{fit, Algorithm, HyperParams};
use crate::error::{Error, Result};
use crate::preprocess::SupervisedDataset;

pub const CV_SPLITS: usize = 4;

/// Expanding-window splits. The rows are cut into `n_splits + 1` blocks of
/// `n_rows / (n_splits + 1)` rows, the remainder going to the first training
/// window; split `i` validates on block `i + 1` from the end of that layout and
/// trains on every earlier row.
pub fn cv_splits(n_rows: usize, n_splits: usize) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    if n_splits == 0 {
        return Err(Error::Config("need at least one cross-validation split".into()));
    }
    if n_rows < n_splits + 1 {
        return Err(Error::InsufficientHistory {
            needed: n_splits + 1,
            got: n_rows,
        });
    }
    let block = n_rows / (n_splits + 1);
    let first_val = n_rows - n_splits * block;
    Ok((0..n_splits)
        .map(|i| {
            let start = first_val + i * block;
            ((0..start).collect(), (start..start + block).collect())
        })
        .collect())
}

fn mean_abs_error(pred: &[f64], actual: &[f64]) -> f64 {
    pred.iter().zip(actual).map(|(p, a)| (p - a).abs()).sum::<f64>() / pred.len() as f64
}

/// Returns the candidate with the lowest mean validation MAE over
/// [`CV_SPLITS`] expanding-window folds; earlier candidates win ties.
pub fn grid_search(dataset: &SupervisedDataset, grid: &[HyperParams], seed: u64) -> Result<(HyperParams, f64)> {
    if grid.is_empty() {
        return Err(Error::Empty("hyperparameter grid"));
    }
    let folds: Vec<(SupervisedDataset, SupervisedDataset)> = cv_splits(dataset.n_rows(), CV_SPLITS)?
        .iter()
        .map(|(tr, va)| (dataset.subset(tr), dataset.subset(va)))
        .collect();

    let mut best: Option<(usize, f64)> = None;
    for (i, params) in grid.iter().enumerate() {
        params.validate()?;
        let mut total = 0.0;
        for (train, valid) in &folds {
            let model = fit(train, params, seed)?;
            total += mean_abs_error(&model.predict(&valid.features)?, &valid.targets);
        }
        let score = total / folds.len() as f64;
        if best.is_none_or(|(_, b)| score < b) {
            best = Some((i, score));
        }
    }
    let (i, score) = best.expect("grid is non-empty");
    Ok((grid[i].clone(), score))
}

/// Grid of tree counts {25, 50, 100, 150, 200} by depths {2, 4, unlimited},
/// and for boosting learning rates {0.001, 0.005, 0.01}.
pub fn default_grid(algorithm: Algorithm) -> Vec<HyperParams> {
    const TREES: [usize; 5] = [25, 50, 100, 150, 200];
    const DEPTHS: [Option<usize>; 3] = [Some(2), Some(4), None];
    const RATES: [f64; 3] = [0.001, 0.005, 0.01];

    let mut grid = Vec::new();
    for n_trees in TREES {
        for max_depth in DEPTHS {
            let base = HyperParams {
                max_depth,
                ..HyperParams::new(algorithm, n_trees)
            };
            match algorithm {
                Algorithm::RandomForest => grid.push(base),
                Algorithm::GradientBoosting => grid.extend(RATES.iter().map(|&learning_rate| HyperParams {
                    learning_rate,
                    ..base.clone()
                })),
            }
        }
    }
    grid
}
