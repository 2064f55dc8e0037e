//! CART regression tree.
//!
//! Splits minimize the summed squared deviation of the two children. Every
//! feature and every midpoint between consecutive distinct values is tried;
//! ties go to the lowest feature index, then the lowest threshold. Sums are
//! taken in a canonical (sorted) order so the fitted tree does not depend on
//! the order of the training rows.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_columns, check_training, RegressError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    pub min_samples_split: usize,
    pub max_depth: Option<usize>,
    /// Features examined per split; `None` examines all of them.
    pub max_features: Option<usize>,
    /// Drives feature subsampling; unused when `max_features` is `None`.
    pub seed: u64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            min_samples_split: 2,
            max_depth: None,
            max_features: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node")]
pub enum Node {
    Leaf {
        value: f64,
        samples: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        samples: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub n_features: usize,
    pub params: TreeParams,
    /// Node 0 is the root. Rows with `x[feature] <= threshold` go left.
    pub nodes: Vec<Node>,
}

impl TreeModel {
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>, RegressError> {
        check_columns(x, self.n_features)?;
        Ok((0..x.nrows())
            .map(|i| self.predict_row(|f| x[(i, f)]))
            .collect())
    }

    fn predict_row(&self, value: impl Fn(usize) -> f64) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value, .. } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    at = if value(*feature) <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
            }
        }
    }

    /// Index of the leaf a row lands in.
    pub fn leaf_of(&self, row: &[f64]) -> usize {
        let mut at = 0;
        while let Node::Split {
            feature,
            threshold,
            left,
            right,
            ..
        } = &self.nodes[at]
        {
            at = if row[*feature] <= *threshold {
                *left
            } else {
                *right
            };
        }
        at
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn root_split(&self) -> Option<(usize, f64)> {
        match &self.nodes[0] {
            Node::Split {
                feature, threshold, ..
            } => Some((*feature, *threshold)),
            Node::Leaf { .. } => None,
        }
    }
}

pub fn fit_tree(
    x: &DMatrix<f64>,
    y: &[f64],
    params: &TreeParams,
) -> Result<TreeModel, RegressError> {
    let rows: Vec<usize> = (0..x.nrows()).collect();
    fit_tree_on(x, y, &rows, params)
}

/// Fits on a multiset of row indices (repeats allowed, as in a bootstrap).
pub(crate) fn fit_tree_on(
    x: &DMatrix<f64>,
    y: &[f64],
    rows: &[usize],
    params: &TreeParams,
) -> Result<TreeModel, RegressError> {
    check_training(x, y)?;
    if rows.is_empty() {
        return Err(RegressError::EmptyMatrix);
    }
    if params.max_features == Some(0) {
        return Err(RegressError::InvalidParameter(
            "max_features must be >= 1".into(),
        ));
    }
    let mut builder = Builder {
        x,
        y,
        params,
        nodes: Vec::new(),
        rng: ChaCha8Rng::seed_from_u64(params.seed),
    };
    builder.grow(rows.to_vec(), 0);
    Ok(TreeModel {
        n_features: x.ncols(),
        params: params.clone(),
        nodes: builder.nodes,
    })
}

struct Builder<'a> {
    x: &'a DMatrix<f64>,
    y: &'a [f64],
    params: &'a TreeParams,
    nodes: Vec<Node>,
    rng: ChaCha8Rng,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    sse: f64,
}

/// Sum of a slice in ascending order, independent of the input order.
fn canonical_sum(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum()
}

impl Builder<'_> {
    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let mut targets: Vec<f64> = rows.iter().map(|&r| self.y[r]).collect();
        let pure = targets.iter().all(|&v| v == targets[0]);
        let value = if pure {
            targets[0]
        } else {
            canonical_sum(&mut targets) / rows.len() as f64
        };
        self.nodes.push(Node::Leaf {
            value,
            samples: rows.len(),
        });

        let depth_reached = self.params.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_reached || rows.len() < self.params.min_samples_split.max(2) {
            return id;
        }
        let Some(best) = self.best_split(&rows, value) else {
            return id;
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| self.x[(r, best.feature)] <= best.threshold);
        let left = self.grow(left_rows, depth + 1);
        let right = self.grow(right_rows, depth + 1);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
            samples: rows.len(),
        };
        id
    }

    fn features(&mut self) -> Vec<usize> {
        let p = self.x.ncols();
        match self.params.max_features {
            Some(k) if k < p => {
                let mut picked = sample(&mut self.rng, p, k).into_vec();
                picked.sort_unstable();
                picked
            }
            _ => (0..p).collect(),
        }
    }

    fn best_split(&mut self, rows: &[usize], mean: f64) -> Option<Candidate> {
        let n = rows.len();
        let mut best: Option<Candidate> = None;
        let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n);
        let mut prefix = vec![(0.0f64, 0.0f64); n + 1];
        for feature in self.features() {
            pairs.clear();
            pairs.extend(
                rows.iter()
                    .map(|&r| (self.x[(r, feature)], self.y[r] - mean)),
            );
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
            if pairs[0].0 == pairs[n - 1].0 {
                continue;
            }
            for (k, &(_, v)) in pairs.iter().enumerate() {
                prefix[k + 1] = (prefix[k].0 + v, prefix[k].1 + v * v);
            }
            let (total_s, total_ss) = prefix[n];
            // Scale for the tie tolerance.
            let scale = total_ss.max(f64::MIN_POSITIVE);
            for k in 1..n {
                let (lo, hi) = (pairs[k - 1].0, pairs[k].0);
                if lo == hi {
                    continue;
                }
                let (s_l, ss_l) = prefix[k];
                let (s_r, ss_r) = (total_s - s_l, total_ss - ss_l);
                let sse = (ss_l - s_l * s_l / k as f64) + (ss_r - s_r * s_r / (n - k) as f64);
                let better = match &best {
                    None => true,
                    Some(b) => sse < b.sse - 1e-12 * scale,
                };
                if better {
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some(Candidate {
                        feature,
                        threshold,
                        sse,
                    });
                }
            }
        }
        best
    }
}
