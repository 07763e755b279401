use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{RegressionTree, TreeHyper};
use super::{Embedding, QueryPoint, Space};
use crate::error::{Error, Result};
use crate::model::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub hyper: TreeHyper,
    pub n_estimators: usize,
    pub bootstrap: bool,
    /// Candidate features per split; `None` means `⌈dim / 3⌉`.
    pub max_features: Option<usize>,
}

/// Random-forest weights: the mean of the member trees' leaf weights.
///
/// Every tree's leaves are repopulated with the full dataset after growing,
/// so a sample's weight reflects how often it shares the query's leaf.
#[derive(Debug, Clone)]
pub struct ForestModel {
    trees: Vec<RegressionTree>,
    seeds: Vec<u64>,
    emb: Embedding,
}

impl ForestModel {
    pub fn fit(data: &Dataset, config: &ForestConfig, space: Space, seed: u64) -> Result<Self> {
        if config.n_estimators == 0 {
            return Err(Error::InvalidParameter("n_estimators must be at least 1".into()));
        }
        if config.hyper.min_samples_leaf == 0 || config.hyper.min_samples_leaf > data.len() {
            return Err(Error::InvalidParameter(format!(
                "min_samples_leaf = {} must lie in 1..={}",
                config.hyper.min_samples_leaf,
                data.len()
            )));
        }
        let emb = Embedding::new(data, space);
        let dim = emb.dim();
        let max_features = match config.max_features {
            Some(0) => return Err(Error::InvalidParameter("max_features must be at least 1".into())),
            Some(m) => m.min(dim),
            None => dim.div_ceil(3).max(1),
        };
        let mut master = ChaCha8Rng::seed_from_u64(seed);
        let seeds: Vec<u64> = (0..config.n_estimators).map(|_| master.random()).collect();
        let n = emb.len();
        let trees = seeds
            .iter()
            .map(|&s| {
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                let idx: Vec<usize> = if config.bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                let mut tree = RegressionTree::grow(&emb, idx, config.hyper, max_features, Some(&mut rng));
                tree.repopulate(&emb);
                tree
            })
            .collect();
        Ok(Self { trees, seeds, emb })
    }

    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }

    pub fn seeds(&self) -> &[u64] {
        &self.seeds
    }

    pub fn len(&self) -> usize {
        self.emb.len()
    }

    pub fn is_empty(&self) -> bool {
        self.emb.len() == 0
    }

    pub fn space(&self) -> Space {
        self.emb.space()
    }

    pub fn tree_weights(&self, tree: usize, query: &QueryPoint) -> Result<Vec<f64>> {
        let u = self.emb.embed(query)?;
        let mut w = vec![0.0; self.emb.len()];
        self.trees[tree].accumulate(&u, 1.0, &mut w);
        Ok(w)
    }

    pub fn weights(&self, query: &QueryPoint) -> Result<Vec<f64>> {
        let u = self.emb.embed(query)?;
        let mut w = vec![0.0; self.emb.len()];
        let scale = 1.0 / self.trees.len() as f64;
        for t in &self.trees {
            t.accumulate(&u, scale, &mut w);
        }
        Ok(w)
    }
}
