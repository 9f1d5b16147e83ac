//! Lag features from related cities appended to a target city's own lags.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::ingest::CityId;
use crate::preprocess::{
    lag_window, make_lag_dataset, target_lag_labels, DiseaseConfig, FeatureSource, SplitSeries,
    SupervisedDataset,
};

/// Builds train and test datasets for `target`. Columns are the target's lags
/// followed by each neighbor's lags, in the order given; targets always come
/// from the target city. Test rows reach back into the training weeks for
/// their lags. `row_weeks` index the concatenated train+test series.
pub fn augment_dataset(
    target: &CityId,
    splits: &BTreeMap<CityId, SplitSeries>,
    neighbors: &[CityId],
    config: &DiseaseConfig,
) -> Result<(SupervisedDataset, SupervisedDataset)> {
    let (lags, horizon) = (config.lags, config.horizon);
    let own = splits
        .get(target)
        .ok_or_else(|| Error::UnknownCity(target.to_string()))?;

    let mut sources: Vec<(FeatureSource, Vec<f64>)> = vec![(FeatureSource::Target, own.full())];
    for n in neighbors {
        if n == target {
            return Err(Error::Config(format!("city {target} cannot be its own neighbor")));
        }
        if sources.iter().any(|(s, _)| *s == FeatureSource::Neighbor(n.clone())) {
            return Err(Error::Config(format!("neighbor {n} listed twice")));
        }
        let split = splits.get(n).ok_or_else(|| Error::UnknownCity(n.to_string()))?;
        if split.train.len() != own.train.len() || split.test.len() != own.test.len() {
            return Err(Error::Shape(format!(
                "neighbor {n} covers {}+{} weeks, target {target} covers {}+{}",
                split.train.len(),
                split.test.len(),
                own.train.len(),
                own.test.len()
            )));
        }
        sources.push((FeatureSource::Neighbor(n.clone()), split.full()));
    }

    // validates history length for the training rows
    let base = make_lag_dataset(&own.train, lags, horizon)?;
    let column_labels: Vec<_> = sources
        .iter()
        .flat_map(|(s, _)| target_lag_labels(s.clone(), lags))
        .collect();

    let build = |rows: Vec<usize>| SupervisedDataset {
        features: rows
            .iter()
            .map(|&t| {
                sources
                    .iter()
                    .flat_map(|(_, v)| lag_window(v, t, lags, horizon).iter().copied())
                    .collect()
            })
            .collect(),
        targets: rows.iter().map(|&t| sources[0].1[t]).collect(),
        column_labels: column_labels.clone(),
        row_weeks: rows,
    };

    let n_train = own.train.len();
    let train = build(base.row_weeks);
    let test = build((n_train..n_train + own.test.len()).collect());
    Ok((train, test))
}
