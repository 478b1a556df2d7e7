//! Small tree ensembles used as base regressors for the health index.

use rand::seq::IndexedRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Dense row-major feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "matrix data has {} values, expected {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: u32,
        right: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0usize;
        loop {
            match self.nodes[at] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x[feature] <= threshold { left } else { right } as usize;
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => {
                    1 + walk(nodes, left as usize).max(walk(nodes, right as usize))
                }
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 20,
            max_depth: 12,
            min_leaf: 5,
        }
    }
}

/// Bagged trees with randomized split thresholds: each node draws one
/// uniform threshold per feature and keeps the best of those.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomizedForest {
    pub trees: Vec<Tree>,
}

fn mean_of(y: &[f64], idx: &[usize]) -> f64 {
    idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64
}

fn grow(x: &Matrix, y: &[f64], idx: Vec<usize>, cfg: &ForestConfig, rng: &mut rng::Rng) -> Tree {
    let mut nodes = vec![Node::Leaf(0.0)];
    let mut stack = vec![(0usize, idx, 0usize)];
    while let Some((slot, idx, depth)) = stack.pop() {
        let mean = mean_of(y, &idx);
        let spread = idx.iter().any(|&i| y[i] != y[idx[0]]);
        let mut best: Option<(f64, usize, f64)> = None;
        if depth < cfg.max_depth && idx.len() >= 2 * cfg.min_leaf.max(1) && spread {
            let total: f64 = idx.iter().map(|&i| y[i]).sum();
            let n = idx.len() as f64;
            for j in 0..x.cols {
                let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &i| {
                    (a.min(x.at(i, j)), b.max(x.at(i, j)))
                });
                if !(hi > lo) {
                    continue;
                }
                let thr = rng.random_range(lo..hi);
                let (mut sl, mut nl) = (0.0, 0usize);
                for &i in &idx {
                    if x.at(i, j) <= thr {
                        sl += y[i];
                        nl += 1;
                    }
                }
                let nr = idx.len() - nl;
                if nl < cfg.min_leaf || nr < cfg.min_leaf {
                    continue;
                }
                // Reduction in squared error up to a constant.
                let sr = total - sl;
                let score = sl * sl / nl as f64 + sr * sr / nr as f64 - total * total / n;
                if best.is_none_or(|b| score > b.0) {
                    best = Some((score, j, thr));
                }
            }
        }
        match best {
            Some((_, feature, threshold)) => {
                let (l, r): (Vec<usize>, Vec<usize>) =
                    idx.iter().partition(|&&i| x.at(i, feature) <= threshold);
                let left = nodes.len();
                nodes.push(Node::Leaf(0.0));
                nodes.push(Node::Leaf(0.0));
                nodes[slot] = Node::Split {
                    feature,
                    threshold,
                    left: left as u32,
                    right: left as u32 + 1,
                };
                stack.push((left + 1, r, depth + 1));
                stack.push((left, l, depth + 1));
            }
            None => nodes[slot] = Node::Leaf(if spread { mean } else { y[idx[0]] }),
        }
    }
    Tree { nodes }
}

impl RandomizedForest {
    pub fn fit(x: &Matrix, y: &[f64], cfg: &ForestConfig, seed: u64) -> Result<Self> {
        check_xy(x, y)?;
        let all: Vec<usize> = (0..x.rows).collect();
        let trees = (0..cfg.n_trees.max(1))
            .map(|t| {
                let mut rng = rng::stream(seed, t as u64);
                let sample: Vec<usize> = (0..x.rows)
                    .map(|_| *all.choose(&mut rng).expect("nonempty"))
                    .collect();
                grow(x, y, sample, cfg, &mut rng)
            })
            .collect();
        Ok(RandomizedForest { trees })
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoostConfig {
    pub rounds: usize,
    pub learning_rate: f64,
    pub min_leaf: usize,
}

impl Default for BoostConfig {
    fn default() -> Self {
        BoostConfig {
            rounds: 300,
            learning_rate: 0.1,
            min_leaf: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub left: f64,
    pub right: f64,
}

/// Gradient boosting of depth-one trees on squared error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedStumps {
    pub base: f64,
    pub learning_rate: f64,
    pub stumps: Vec<Stump>,
}

impl BoostedStumps {
    pub fn fit(x: &Matrix, y: &[f64], cfg: &BoostConfig) -> Result<Self> {
        check_xy(x, y)?;
        let n = x.rows;
        let base = y.iter().sum::<f64>() / n as f64;
        let mut fitted = vec![base; n];
        let orders: Vec<Vec<usize>> = (0..x.cols)
            .map(|j| {
                let mut o: Vec<usize> = (0..n).collect();
                o.sort_by(|&a, &b| x.at(a, j).total_cmp(&x.at(b, j)));
                o
            })
            .collect();
        let min_leaf = cfg.min_leaf.max(1);
        let mut stumps = Vec::with_capacity(cfg.rounds);
        let mut resid = vec![0.0; n];
        for _ in 0..cfg.rounds {
            for i in 0..n {
                resid[i] = y[i] - fitted[i];
            }
            let total: f64 = resid.iter().sum();
            let mut best: Option<(f64, Stump)> = None;
            for (j, order) in orders.iter().enumerate() {
                let mut sl = 0.0;
                for k in 0..n - 1 {
                    sl += resid[order[k]];
                    let nl = k + 1;
                    let nr = n - nl;
                    let (a, b) = (x.at(order[k], j), x.at(order[k + 1], j));
                    if nl < min_leaf || nr < min_leaf || a == b {
                        continue;
                    }
                    let sr = total - sl;
                    let score = sl * sl / nl as f64 + sr * sr / nr as f64;
                    if best.is_none_or(|bst| score > bst.0) {
                        best = Some((
                            score,
                            Stump {
                                feature: j,
                                threshold: 0.5 * (a + b),
                                left: sl / nl as f64,
                                right: sr / nr as f64,
                            },
                        ));
                    }
                }
            }
            let Some((_, s)) = best else { break };
            for i in 0..n {
                let v = if x.at(i, s.feature) <= s.threshold { s.left } else { s.right };
                fitted[i] += cfg.learning_rate * v;
            }
            stumps.push(s);
        }
        Ok(BoostedStumps {
            base,
            learning_rate: cfg.learning_rate,
            stumps,
        })
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.base
            + self.learning_rate
                * self
                    .stumps
                    .iter()
                    .map(|s| if x[s.feature] <= s.threshold { s.left } else { s.right })
                    .sum::<f64>()
    }
}

fn check_xy(x: &Matrix, y: &[f64]) -> Result<()> {
    if x.rows == 0 || x.cols == 0 {
        return Err(Error::Empty("regression data"));
    }
    if y.len() != x.rows {
        return Err(Error::invalid("label count differs from row count"));
    }
    if x.data.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite regression data"));
    }
    Ok(())
}
