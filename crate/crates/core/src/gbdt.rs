//! Least-squares gradient boosted regression trees over integer codes.
//!
//! Each tree is grown greedily: a node is split on the (feature,
//! threshold) pair with the largest reduction in squared error, where
//! thresholds are midpoints between consecutive distinct codes and rows
//! with `code <= threshold` go left. Ties go to the lowest feature index,
//! then the lowest threshold. Split statistics are summed in row order so
//! that two features inducing the same partition score identically.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GbdtConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
}

impl Default for GbdtConfig {
    fn default() -> Self {
        Self {
            n_trees: 800,
            max_depth: 3,
            learning_rate: 0.1,
            min_samples_leaf: 1,
        }
    }
}

impl GbdtConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 || self.max_depth == 0 || self.min_samples_leaf == 0 {
            return Err(Error::Config(
                "n_trees, max_depth and min_samples_leaf must be at least 1".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::Config(format!(
                "tree learning rate {} outside (0, 1]",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// Binary tree stored in preorder; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

impl RegressionTree {
    /// Rebuilds a tree from preorder nodes, checking child links.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Shape("tree has no nodes".into()));
        }
        for (i, n) in nodes.iter().enumerate() {
            match *n {
                Node::Split {
                    left,
                    right,
                    threshold,
                    ..
                } => {
                    if left <= i
                        || right <= i
                        || left >= nodes.len()
                        || right >= nodes.len()
                        || !threshold.is_finite()
                    {
                        return Err(Error::Shape(format!(
                            "tree node {i} has invalid children or threshold"
                        )));
                    }
                }
                Node::Leaf { value } => {
                    if !value.is_finite() {
                        return Err(Error::Shape(format!("tree leaf {i} is not finite")));
                    }
                }
            }
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Output for one row given as a code per feature.
    pub fn predict_row(&self, row: impl Fn(usize) -> u32) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if f64::from(row(feature)) <= threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    fn max_feature(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .max()
    }
}

/// The best split of a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestSplit {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

/// Squared-error reduction of splitting `rows` into `left`/right, written
/// as `S_L^2/n_L + S_R^2/n_R - S^2/n` with sums taken in row order.
fn split_gain(
    residuals: &[f64],
    rows: &[usize],
    goes_left: impl Fn(usize) -> bool,
) -> Option<(f64, usize)> {
    let (mut sl, mut sr) = (0.0, 0.0);
    let (mut nl, mut nr) = (0usize, 0usize);
    let mut total = 0.0;
    for &r in rows {
        let v = residuals[r];
        total += v;
        if goes_left(r) {
            sl += v;
            nl += 1;
        } else {
            sr += v;
            nr += 1;
        }
    }
    if nl == 0 || nr == 0 {
        return None;
    }
    let gain = sl * sl / nl as f64 + sr * sr / nr as f64 - total * total / rows.len() as f64;
    Some((gain, nl.min(nr)))
}

/// Best (feature, threshold) for `rows`, or `None` when no admissible
/// split reduces the squared error.
pub fn best_split(
    columns: &[&[u32]],
    residuals: &[f64],
    rows: &[usize],
    min_samples_leaf: usize,
) -> Option<BestSplit> {
    let mut best: Option<BestSplit> = None;
    let mut distinct = Vec::new();
    for (f, col) in columns.iter().enumerate() {
        distinct.clear();
        distinct.extend(rows.iter().map(|&r| col[r]));
        distinct.sort_unstable();
        distinct.dedup();
        for w in distinct.windows(2) {
            let threshold = (f64::from(w[0]) + f64::from(w[1])) / 2.0;
            let Some((gain, smaller)) =
                split_gain(residuals, rows, |r| f64::from(col[r]) <= threshold)
            else {
                continue;
            };
            if smaller < min_samples_leaf || gain.is_nan() || gain <= 0.0 {
                continue;
            }
            if best.is_none_or(|b| gain > b.gain) {
                best = Some(BestSplit {
                    feature: f,
                    threshold,
                    gain,
                });
            }
        }
    }
    best
}

fn mean_of(residuals: &[f64], rows: &[usize]) -> f64 {
    rows.iter().map(|&r| residuals[r]).sum::<f64>() / rows.len() as f64
}

/// Grows one tree on `residuals`. Leaves hold the mean residual of their rows.
pub fn fit_tree(
    columns: &[&[u32]],
    residuals: &[f64],
    max_depth: usize,
    min_samples_leaf: usize,
) -> Result<RegressionTree> {
    if residuals.is_empty() {
        return Err(Error::Fit("cannot grow a tree on zero samples".into()));
    }
    if let Some(c) = columns.iter().find(|c| c.len() != residuals.len()) {
        return Err(Error::Shape(format!(
            "feature column has {} rows, residuals have {}",
            c.len(),
            residuals.len()
        )));
    }
    let rows: Vec<usize> = (0..residuals.len()).collect();
    let mut nodes = Vec::new();
    grow(
        columns,
        residuals,
        rows,
        max_depth,
        min_samples_leaf.max(1),
        &mut nodes,
    );
    Ok(RegressionTree { nodes })
}

fn grow(
    columns: &[&[u32]],
    residuals: &[f64],
    rows: Vec<usize>,
    depth_left: usize,
    min_samples_leaf: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let id = nodes.len();
    let leaf = Node::Leaf {
        value: mean_of(residuals, &rows),
    };
    let first = residuals[rows[0]];
    let pure = rows.iter().all(|&r| residuals[r] == first);
    let split = if depth_left == 0 || pure || rows.len() < 2 * min_samples_leaf {
        None
    } else {
        best_split(columns, residuals, &rows, min_samples_leaf)
    };
    let Some(split) = split else {
        nodes.push(leaf);
        return id;
    };
    let col = columns[split.feature];
    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
        .into_iter()
        .partition(|&r| f64::from(col[r]) <= split.threshold);
    nodes.push(Node::Split {
        feature: split.feature,
        threshold: split.threshold,
        left: 0,
        right: 0,
    });
    let left = grow(
        columns,
        residuals,
        left_rows,
        depth_left - 1,
        min_samples_leaf,
        nodes,
    );
    let right = grow(
        columns,
        residuals,
        right_rows,
        depth_left - 1,
        min_samples_leaf,
        nodes,
    );
    if let Node::Split {
        left: l, right: r, ..
    } = &mut nodes[id]
    {
        *l = left;
        *r = right;
    }
    id
}

/// `predict(x) = base + learning_rate * sum(tree_i(x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct GbdtModel {
    base: f64,
    trees: Vec<RegressionTree>,
    learning_rate: f64,
    n_features: usize,
}

impl GbdtModel {
    pub fn from_parts(
        base: f64,
        trees: Vec<RegressionTree>,
        learning_rate: f64,
        n_features: usize,
    ) -> Result<Self> {
        if !base.is_finite() || !learning_rate.is_finite() {
            return Err(Error::Shape(
                "non-finite boosting base or learning rate".into(),
            ));
        }
        if let Some(f) = trees.iter().filter_map(RegressionTree::max_feature).max() {
            if f >= n_features {
                return Err(Error::Shape(format!(
                    "tree splits on feature {f} but the model has {n_features} features"
                )));
            }
        }
        Ok(Self {
            base,
            trees,
            learning_rate,
            n_features,
        })
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Least-squares boosting with no subsampling.
    pub fn fit(columns: &[&[u32]], target: &[f64], config: &GbdtConfig) -> Result<Self> {
        config.validate()?;
        if target.is_empty() {
            return Err(Error::Fit("empty training set".into()));
        }
        if let Some(c) = columns.iter().find(|c| c.len() != target.len()) {
            return Err(Error::Shape(format!(
                "feature column has {} rows, target has {}",
                c.len(),
                target.len()
            )));
        }
        let base = target.iter().sum::<f64>() / target.len() as f64;
        let mut residual: Vec<f64> = target.iter().map(|t| t - base).collect();
        let mut trees = Vec::with_capacity(config.n_trees);
        for _ in 0..config.n_trees {
            let tree = fit_tree(
                columns,
                &residual,
                config.max_depth,
                config.min_samples_leaf,
            )?;
            for (i, r) in residual.iter_mut().enumerate() {
                *r -= config.learning_rate * tree.predict_row(|f| columns[f][i]);
            }
            trees.push(tree);
        }
        Ok(Self {
            base,
            trees,
            learning_rate: config.learning_rate,
            n_features: columns.len(),
        })
    }

    pub fn predict(&self, columns: &[&[u32]]) -> Result<Vec<f64>> {
        if columns.len() != self.n_features {
            return Err(Error::Shape(format!(
                "model was trained on {} features, got {}",
                self.n_features,
                columns.len()
            )));
        }
        let n = columns.first().map_or(0, |c| c.len());
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::Shape("feature columns differ in length".into()));
        }
        Ok((0..n)
            .map(|i| {
                let sum: f64 = self
                    .trees
                    .iter()
                    .map(|t| t.predict_row(|f| columns[f][i]))
                    .sum();
                self.base + self.learning_rate * sum
            })
            .collect())
    }
}
