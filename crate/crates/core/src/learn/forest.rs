use rand::Rng;
use rayon::prelude::*;

use super::tree::{grow_tree, GrowSettings};
use super::{tree_rng, Algorithm, HyperParams, TreeEnsemble};
use crate::error::{Error, Result};
use crate::preprocess::SupervisedDataset;

/// Bagged trees; tree `i` draws its bootstrap sample and feature subsets from
/// its own stream of `seed`, so the result does not depend on thread count.
pub fn fit_random_forest(dataset: &SupervisedDataset, params: &HyperParams, seed: u64) -> Result<TreeEnsemble> {
    if params.algorithm != Algorithm::RandomForest {
        return Err(Error::Config("fit_random_forest needs algorithm = random_forest".into()));
    }
    params.validate()?;
    if dataset.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    dataset.check()?;

    let n = dataset.n_rows();
    let settings = GrowSettings::from_params(params, dataset.n_features());
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|i| {
            let mut rng = tree_rng(seed, i);
            let rows: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grow_tree(&dataset.features, &dataset.targets, &rows, &settings, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(TreeEnsemble {
        params: params.clone(),
        trees,
        base_value: 0.0,
        seed,
        n_features: dataset.n_features(),
    })
}
