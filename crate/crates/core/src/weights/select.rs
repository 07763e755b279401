//! Hyperparameter grid search by demand-prediction error.
//!
//! kNN and kernel weights are scored by exact leave-one-out MSE. Trees are
//! scored by 5-fold cross-validation with folds assigned by `index mod 5`.
//! The forest reuses the tree's selected depth and leaf size.

use serde::{Deserialize, Serialize};

use super::knn::by_distance_then_index;
use super::tree::{CartModel, TreeHyper};
use super::{Embedding, Space, WeightFamily, WeightHyper};
use crate::error::{Error, Result};
use crate::model::Dataset;

pub const K_GRID: [usize; 4] = [5, 10, 20, 50];
pub const H_GRID: [f64; 5] = [0.05, 0.1, 0.2, 0.5, 1.0];
pub const DEPTH_GRID: [usize; 4] = [2, 4, 6, 8];
pub const MIN_LEAF_GRID: [usize; 3] = [5, 10, 20];
pub const DEFAULT_ESTIMATORS: usize = 50;
const FOLDS: usize = 5;

/// A selected hyperparameter and its validation MSE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub hyper: WeightHyper,
    pub mse: f64,
}

pub fn select(data: &Dataset, family: WeightFamily, space: Space) -> Result<Selection> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let emb = Embedding::new(data, space);
    match family {
        WeightFamily::Knn => Ok(select_knn(&emb)),
        WeightFamily::Kernel => Ok(select_kernel(&emb)),
        WeightFamily::Cart => Ok(select_tree(&emb)),
        WeightFamily::Forest => {
            let s = select_tree(&emb);
            let WeightHyper::Cart {
                max_depth,
                min_samples_leaf,
            } = s.hyper
            else {
                unreachable!()
            };
            Ok(Selection {
                hyper: WeightHyper::Forest {
                    max_depth,
                    min_samples_leaf,
                    n_estimators: DEFAULT_ESTIMATORS,
                },
                mse: s.mse,
            })
        }
    }
}

fn argmin<T: Clone>(scored: &[(T, f64)]) -> Option<(T, f64)> {
    let mut best: Option<&(T, f64)> = None;
    for s in scored {
        if best.is_none_or(|b| s.1 < b.1) {
            best = Some(s);
        }
    }
    best.cloned()
}

/// Leave-one-out kNN MSE for every `k` in `ks` (each `k < n`).
pub(crate) fn knn_loo_mse(emb: &Embedding, ks: &[usize]) -> Vec<f64> {
    let n = emb.len();
    let y = emb.targets();
    let kmax = ks.iter().copied().max().unwrap_or(0);
    let mut err = vec![0.0; ks.len()];
    let mut keyed = Vec::with_capacity(n);
    for i in 0..n {
        keyed.clear();
        let u = emb.row(i);
        keyed.extend((0..n).filter(|&j| j != i).map(|j| (emb.sq_dist(j, u), j)));
        if kmax < keyed.len() {
            keyed.select_nth_unstable_by(kmax - 1, by_distance_then_index);
            keyed.truncate(kmax);
        }
        keyed.sort_unstable_by(by_distance_then_index);
        let mut prefix = Vec::with_capacity(keyed.len() + 1);
        prefix.push(0.0);
        for (_, j) in &keyed {
            prefix.push(prefix.last().unwrap() + y[*j]);
        }
        for (e, &k) in err.iter_mut().zip(ks) {
            let pred = prefix[k] / k as f64;
            *e += (y[i] - pred).powi(2);
        }
    }
    err.iter().map(|e| e / n as f64).collect()
}

/// Leave-one-out Nadaraya-Watson MSE for every bandwidth in `hs`.
pub(crate) fn kernel_loo_mse(emb: &Embedding, hs: &[f64]) -> Vec<f64> {
    let n = emb.len();
    let y = emb.targets();
    let mut err = vec![0.0; hs.len()];
    let mut d2 = Vec::with_capacity(n);
    for i in 0..n {
        d2.clear();
        let u = emb.row(i);
        d2.extend((0..n).filter(|&j| j != i).map(|j| (emb.sq_dist(j, u), y[j])));
        let min = d2.iter().map(|(d, _)| *d).fold(f64::INFINITY, f64::min);
        for (e, &h) in err.iter_mut().zip(hs) {
            let inv = 1.0 / (2.0 * h * h);
            let (mut num, mut den) = (0.0, 0.0);
            for (d, yj) in &d2 {
                let k = (-(d - min) * inv).exp();
                num += k * yj;
                den += k;
            }
            *e += (y[i] - num / den).powi(2);
        }
    }
    err.iter().map(|e| e / n as f64).collect()
}

fn select_knn(emb: &Embedding) -> Selection {
    let n = emb.len();
    let ks: Vec<usize> = K_GRID.iter().copied().filter(|&k| k < n).collect();
    if ks.is_empty() {
        return Selection {
            hyper: WeightHyper::Knn { k: n },
            mse: f64::NAN,
        };
    }
    let mse = knn_loo_mse(emb, &ks);
    let (k, mse) = argmin(&ks.into_iter().zip(mse).collect::<Vec<_>>()).unwrap();
    Selection {
        hyper: WeightHyper::Knn { k },
        mse,
    }
}

fn select_kernel(emb: &Embedding) -> Selection {
    if emb.len() < 2 {
        return Selection {
            hyper: WeightHyper::Kernel { h: H_GRID[2] },
            mse: f64::NAN,
        };
    }
    let mse = kernel_loo_mse(emb, &H_GRID);
    let (h, mse) = argmin(&H_GRID.into_iter().zip(mse).collect::<Vec<_>>()).unwrap();
    Selection {
        hyper: WeightHyper::Kernel { h },
        mse,
    }
}

/// 5-fold CV MSE of a regression tree.
pub(crate) fn tree_cv_mse(emb: &Embedding, hyper: TreeHyper) -> f64 {
    let n = emb.len();
    let mut total = 0.0;
    for fold in 0..FOLDS {
        let train: Vec<usize> = (0..n).filter(|i| i % FOLDS != fold).collect();
        let model = CartModel::from_embedding(emb.subset(&train), hyper);
        for i in (fold..n).step_by(FOLDS) {
            total += (emb.targets()[i] - model.predict_embedded(emb.row(i))).powi(2);
        }
    }
    total / n as f64
}

fn select_tree(emb: &Embedding) -> Selection {
    let n = emb.len();
    let mut scored = Vec::new();
    for &max_depth in &DEPTH_GRID {
        for &min_samples_leaf in &MIN_LEAF_GRID {
            // every training fold must be able to hold one leaf
            if n < FOLDS || min_samples_leaf > n - n.div_ceil(FOLDS) {
                continue;
            }
            let hyper = TreeHyper {
                max_depth,
                min_samples_leaf,
            };
            scored.push((hyper, tree_cv_mse(emb, hyper)));
        }
    }
    let (hyper, mse) = argmin(&scored).unwrap_or((
        TreeHyper {
            max_depth: DEPTH_GRID[0],
            min_samples_leaf: 1,
        },
        f64::NAN,
    ));
    Selection {
        hyper: WeightHyper::Cart {
            max_depth: hyper.max_depth,
            min_samples_leaf: hyper.min_samples_leaf,
        },
        mse,
    }
}
