//! Bagged CART trees.
//!
//! Tree `i` trains on a bootstrap sample drawn from a generator seeded with
//! [`tree_seed`]`(master_seed, i)`, so parallel and sequential training give
//! identical forests. Draws index into the canonical row order, which keeps a
//! forest unchanged when the caller permutes its training rows.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{fit_tree_on, TreeModel, TreeParams};
use super::{canonical_row_order, check_columns, check_training, RegressError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub bootstrap: bool,
    pub master_seed: u64,
    /// Growth limits and feature policy for every member. Its `seed` field is
    /// overwritten per tree.
    pub tree: TreeParams,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 10,
            bootstrap: true,
            master_seed: 42,
            tree: TreeParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub params: ForestParams,
    pub tree_seeds: Vec<u64>,
    pub trees: Vec<TreeModel>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of member `index`, mixed from the master seed with SplitMix64.
pub fn tree_seed(master_seed: u64, index: usize) -> u64 {
    splitmix64(master_seed ^ splitmix64(index as u64))
}

impl ForestModel {
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>, RegressError> {
        let n_features = self.trees.first().map_or(0, |t| t.n_features);
        check_columns(x, n_features)?;
        let mut sums = vec![0.0; x.nrows()];
        for tree in &self.trees {
            for (s, p) in sums.iter_mut().zip(tree.predict(x)?) {
                *s += p;
            }
        }
        let n = self.trees.len() as f64;
        Ok(sums.into_iter().map(|s| s / n).collect())
    }
}

pub fn fit_forest(
    x: &DMatrix<f64>,
    y: &[f64],
    params: &ForestParams,
) -> Result<ForestModel, RegressError> {
    check_training(x, y)?;
    if params.n_trees == 0 {
        return Err(RegressError::InvalidParameter(
            "n_trees must be >= 1".into(),
        ));
    }
    let n = x.nrows();
    let order = canonical_row_order(x, y);
    let seeds: Vec<u64> = (0..params.n_trees)
        .map(|i| tree_seed(params.master_seed, i))
        .collect();
    let trees = seeds
        .par_iter()
        .map(|&seed| {
            let rows: Vec<usize> = if params.bootstrap {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..n).map(|_| order[rng.gen_range(0..n)]).collect()
            } else {
                order.clone()
            };
            let tree_params = TreeParams {
                seed: splitmix64(seed),
                ..params.tree.clone()
            };
            fit_tree_on(x, y, &rows, &tree_params)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ForestModel {
        params: params.clone(),
        tree_seeds: seeds,
        trees,
    })
}
