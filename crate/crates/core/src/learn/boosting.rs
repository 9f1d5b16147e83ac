use super::tree::{grow_tree, GrowSettings};
use super::{tree_rng, Algorithm, HyperParams, SplitCriterion, TreeEnsemble};
use crate::error::{Error, Result};
use crate::preprocess::SupervisedDataset;

/// Stagewise least-squares boosting: start from the target mean, then fit each
/// tree to the current residuals and add it scaled by the learning rate.
/// Residual trees always use squared-error splits with mean leaves.
pub fn fit_gradient_boosting(dataset: &SupervisedDataset, params: &HyperParams, seed: u64) -> Result<TreeEnsemble> {
    if params.algorithm != Algorithm::GradientBoosting {
        return Err(Error::Config(
            "fit_gradient_boosting needs algorithm = gradient_boosting".into(),
        ));
    }
    if params.max_depth == Some(0) || !(params.learning_rate > 0.0) {
        return Err(Error::Config(format!("invalid boosting parameters: {params}")));
    }
    if dataset.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    dataset.check()?;

    let n = dataset.n_rows();
    let base_value = dataset.targets.iter().sum::<f64>() / n as f64;
    let mut settings = GrowSettings::from_params(params, dataset.n_features());
    settings.criterion = SplitCriterion::Mse;

    let rows: Vec<usize> = (0..n).collect();
    let mut current = vec![base_value; n];
    let mut residuals = vec![0.0; n];
    let mut trees = Vec::with_capacity(params.n_trees);
    for stage in 0..params.n_trees {
        for ((r, y), p) in residuals.iter_mut().zip(&dataset.targets).zip(&current) {
            *r = y - p;
        }
        let mut rng = tree_rng(seed, stage);
        let tree = grow_tree(&dataset.features, &residuals, &rows, &settings, &mut rng)?;
        for (p, row) in current.iter_mut().zip(&dataset.features) {
            *p += params.learning_rate * tree.predict_row(row);
        }
        trees.push(tree);
    }

    Ok(TreeEnsemble {
        params: params.clone(),
        trees,
        base_value,
        seed,
        n_features: dataset.n_features(),
    })
}
