//! Greedy binary regression trees with MAE or squared-error splits.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{HyperParams, SplitCriterion};
use crate::error::{Error, Result};
use crate::preprocess::SupervisedDataset;

/// Rows with `row[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub root: Node,
}

impl Tree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if row[*feature] <= *threshold { left } else { right },
            }
        }
    }

    /// Number of split levels on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(n: &Node) -> usize {
            match n {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(left).max(walk(right)),
            }
        }
        walk(&self.root)
    }

    pub fn leaves(&self) -> usize {
        fn walk(n: &Node) -> usize {
            match n {
                Node::Leaf { .. } => 1,
                Node::Split { left, right, .. } => walk(left) + walk(right),
            }
        }
        walk(&self.root)
    }
}

pub(crate) fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Sum of absolute deviations from the median of a growing multiset.
#[derive(Default)]
struct RunningAbsDev {
    low: BinaryHeap<Key>,
    high: BinaryHeap<Reverse<Key>>,
    sum_low: f64,
    sum_high: f64,
}

impl RunningAbsDev {
    fn push(&mut self, v: f64) {
        match self.low.peek() {
            Some(top) if v > top.0 => {
                self.high.push(Reverse(Key(v)));
                self.sum_high += v;
            }
            _ => {
                self.low.push(Key(v));
                self.sum_low += v;
            }
        }
        if self.low.len() > self.high.len() + 1 {
            let Key(x) = self.low.pop().expect("non-empty");
            self.sum_low -= x;
            self.high.push(Reverse(Key(x)));
            self.sum_high += x;
        } else if self.high.len() > self.low.len() {
            let Reverse(Key(x)) = self.high.pop().expect("non-empty");
            self.sum_high -= x;
            self.low.push(Key(x));
            self.sum_low += x;
        }
    }

    fn sad(&self) -> f64 {
        let Some(&Key(m)) = self.low.peek() else {
            return 0.0;
        };
        let sad = (m * self.low.len() as f64 - self.sum_low) + (self.sum_high - m * self.high.len() as f64);
        sad.max(0.0)
    }
}

/// Impurity totals for every prefix of `ys`: entry `i` covers `ys[..=i]`.
fn prefix_costs(ys: impl Iterator<Item = f64>, criterion: SplitCriterion, out: &mut Vec<f64>) {
    out.clear();
    match criterion {
        SplitCriterion::Mae => {
            let mut acc = RunningAbsDev::default();
            for y in ys {
                acc.push(y);
                out.push(acc.sad());
            }
        }
        SplitCriterion::Mse => {
            let (mut n, mut s, mut s2) = (0.0, 0.0, 0.0);
            for y in ys {
                n += 1.0;
                s += y;
                s2 += y * y;
                out.push((s2 - s * s / n).max(0.0));
            }
        }
    }
}

pub(crate) struct GrowSettings {
    pub criterion: SplitCriterion,
    pub max_depth: Option<usize>,
    pub n_subset: usize,
}

impl GrowSettings {
    pub fn from_params(params: &HyperParams, n_features: usize) -> Self {
        GrowSettings {
            criterion: params.split_criterion,
            max_depth: params.max_depth,
            n_subset: params.feature_subset.resolve(n_features),
        }
    }
}

struct Grower<'a, R> {
    features: &'a [Vec<f64>],
    targets: &'a [f64],
    settings: &'a GrowSettings,
    rng: &'a mut R,
    n_features: usize,
    // scratch buffers
    order: Vec<usize>,
    left_cost: Vec<f64>,
    right_cost: Vec<f64>,
}

struct BestSplit {
    cost: f64,
    feature: usize,
    threshold: f64,
}

impl<R: Rng> Grower<'_, R> {
    fn leaf(&self, rows: &[usize]) -> Node {
        let mut ys: Vec<f64> = rows.iter().map(|&r| self.targets[r]).collect();
        let value = match self.settings.criterion {
            SplitCriterion::Mae => median(&mut ys),
            SplitCriterion::Mse => mean(&ys),
        };
        Node::Leaf { value }
    }

    fn sampled_features(&mut self) -> Vec<usize> {
        let k = self.settings.n_subset;
        if k >= self.n_features {
            return (0..self.n_features).collect();
        }
        let mut picked = index::sample(self.rng, self.n_features, k).into_vec();
        picked.sort_unstable();
        picked
    }

    fn best_split(&mut self, rows: &[usize]) -> Option<BestSplit> {
        let mut best: Option<BestSplit> = None;
        for feature in self.sampled_features() {
            let x = |r: usize| self.features[r][feature];
            self.order.clear();
            self.order.extend_from_slice(rows);
            self.order.sort_by(|&a, &b| x(a).total_cmp(&x(b)).then(a.cmp(&b)));

            let ys = self.order.iter().map(|&r| self.targets[r]);
            prefix_costs(ys, self.settings.criterion, &mut self.left_cost);
            let ys_rev = self.order.iter().rev().map(|&r| self.targets[r]);
            prefix_costs(ys_rev, self.settings.criterion, &mut self.right_cost);

            let n = self.order.len();
            for i in 0..n - 1 {
                let (a, b) = (x(self.order[i]), x(self.order[i + 1]));
                if a == b {
                    continue;
                }
                // left = order[..=i], right = order[i+1..] (suffix of length n-1-i)
                let cost = self.left_cost[i] + self.right_cost[n - 2 - i];
                if best.as_ref().is_none_or(|bst| cost < bst.cost) {
                    let mut threshold = 0.5 * (a + b);
                    if threshold >= b {
                        threshold = a;
                    }
                    best = Some(BestSplit {
                        cost,
                        feature,
                        threshold,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, rows: &[usize], depth: usize) -> Node {
        let at_limit = self.settings.max_depth.is_some_and(|d| depth >= d);
        let first = self.targets[rows[0]];
        let pure = rows.iter().all(|&r| self.targets[r] == first);
        if at_limit || rows.len() < 2 || pure {
            return self.leaf(rows);
        }
        let Some(split) = self.best_split(rows) else {
            return self.leaf(rows);
        };
        let (left, right): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| self.features[r][split.feature] <= split.threshold);
        Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: Box::new(self.grow(&left, depth + 1)),
            right: Box::new(self.grow(&right, depth + 1)),
        }
    }
}

/// Grows a tree on `rows` (indices may repeat, e.g. for bootstrap samples).
pub(crate) fn grow_tree<R: Rng>(
    features: &[Vec<f64>],
    targets: &[f64],
    rows: &[usize],
    settings: &GrowSettings,
    rng: &mut R,
) -> Result<Tree> {
    if rows.is_empty() {
        return Err(Error::Empty("training rows"));
    }
    let n_features = features[rows[0]].len();
    let mut grower = Grower {
        features,
        targets,
        settings,
        rng,
        n_features,
        order: Vec::with_capacity(rows.len()),
        left_cost: Vec::with_capacity(rows.len()),
        right_cost: Vec::with_capacity(rows.len()),
    };
    Ok(Tree {
        root: grower.grow(rows, 0),
    })
}

/// Fits one tree on every row of `dataset`.
pub fn fit_tree<R: Rng>(dataset: &SupervisedDataset, params: &HyperParams, rng: &mut R) -> Result<Tree> {
    if dataset.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    dataset.check()?;
    let settings = GrowSettings::from_params(params, dataset.n_features());
    let rows: Vec<usize> = (0..dataset.n_rows()).collect();
    grow_tree(&dataset.features, &dataset.targets, &rows, &settings, rng)
}
