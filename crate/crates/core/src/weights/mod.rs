//! Sample-weight generators.
//!
//! Each fitted model maps a query `(p, z)` to a probability vector over the
//! historical samples. Models embed samples and queries in a common unit
//! space: the price and every feature are min-max scaled with the dataset's
//! [`Scaling`](crate::model::Scaling) and compared with the Euclidean metric.
//! A model fitted in [`Space::FeaturesOnly`] ignores the query price, which
//! gives the decision-independent weights used by the baselines.

mod forest;
mod kernel;
mod knn;
pub mod select;
mod tree;

pub use forest::{ForestConfig, ForestModel};
pub use kernel::KernelModel;
pub use knn::KnnModel;
pub use tree::{CartModel, Node, RegressionTree, TreeHyper};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dataset, Scaling};

/// Coordinates a weight model measures similarity in.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Space {
    /// Price joined with the features: decision-dependent weights.
    #[default]
    Joined,
    /// Features only: the price is dropped from the weight function.
    FeaturesOnly,
}

/// A weight query in raw (unscaled) units.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryPoint {
    pub price: f64,
    pub features: Vec<f64>,
}

impl QueryPoint {
    pub fn new(price: f64, features: &[f64]) -> Self {
        Self {
            price,
            features: features.to_vec(),
        }
    }
}

/// Samples embedded in the unit metric space of a [`Space`].
#[derive(Debug, Clone)]
pub(crate) struct Embedding {
    space: Space,
    scaling: Scaling,
    feature_dim: usize,
    dim: usize,
    coords: Vec<f64>,
    targets: Vec<f64>,
}

impl Embedding {
    pub(crate) fn new(data: &Dataset, space: Space) -> Self {
        let feature_dim = data.feature_dim();
        let dim = match space {
            Space::Joined => feature_dim + 1,
            Space::FeaturesOnly => feature_dim,
        };
        let scaling = data.scaling().clone();
        let mut coords = Vec::with_capacity(dim * data.len());
        for s in data.samples() {
            if space == Space::Joined {
                coords.push(scaling.price.scale(s.price));
            }
            coords.extend(s.features.iter().zip(&scaling.features).map(|(v, r)| r.scale(*v)));
        }
        Self {
            space,
            scaling,
            feature_dim,
            dim,
            coords,
            targets: data.demands(),
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.targets.len()
    }

    pub(crate) fn dim(&self) -> usize {
        self.dim
    }

    pub(crate) fn row(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub(crate) fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub(crate) fn space(&self) -> Space {
        self.space
    }

    pub(crate) fn embed(&self, query: &QueryPoint) -> Result<Vec<f64>> {
        if query.features.len() != self.feature_dim {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim,
                got: query.features.len(),
            });
        }
        if !query.price.is_finite() || query.features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("weight query"));
        }
        let mut u = Vec::with_capacity(self.dim);
        if self.space == Space::Joined {
            u.push(self.scaling.price.scale(query.price));
        }
        u.extend(self.scaling.scale_features(&query.features));
        Ok(u)
    }

    pub(crate) fn sq_dist(&self, i: usize, u: &[f64]) -> f64 {
        self.row(i).iter().zip(u).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    /// Restriction to the rows in `idx`, keeping the scaling.
    pub(crate) fn subset(&self, idx: &[usize]) -> Self {
        let mut coords = Vec::with_capacity(idx.len() * self.dim);
        for &i in idx {
            coords.extend_from_slice(self.row(i));
        }
        Self {
            space: self.space,
            scaling: self.scaling.clone(),
            feature_dim: self.feature_dim,
            dim: self.dim,
            coords,
            targets: idx.iter().map(|&i| self.targets[i]).collect(),
        }
    }
}

/// The four weight families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightFamily {
    Knn,
    Kernel,
    Cart,
    Forest,
}

impl WeightFamily {
    pub const ALL: [WeightFamily; 4] = [
        WeightFamily::Knn,
        WeightFamily::Kernel,
        WeightFamily::Cart,
        WeightFamily::Forest,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            WeightFamily::Knn => "knn",
            WeightFamily::Kernel => "kernel",
            WeightFamily::Cart => "cart",
            WeightFamily::Forest => "forest",
        }
    }
}

impl std::fmt::Display for WeightFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for WeightFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "knn" => Ok(WeightFamily::Knn),
            "kernel" => Ok(WeightFamily::Kernel),
            "cart" => Ok(WeightFamily::Cart),
            "forest" | "rf" => Ok(WeightFamily::Forest),
            other => Err(Error::InvalidParameter(format!("unknown weight family `{other}`"))),
        }
    }
}

/// A fitted weight generator.
#[derive(Debug, Clone)]
pub enum WeightModel {
    Knn(KnnModel),
    Kernel(KernelModel),
    Cart(CartModel),
    Forest(ForestModel),
}

impl WeightModel {
    /// Weight vector over the fitted samples; entries are non-negative and
    /// sum to one.
    pub fn weights(&self, query: &QueryPoint) -> Result<Vec<f64>> {
        match self {
            WeightModel::Knn(m) => m.weights(query),
            WeightModel::Kernel(m) => m.weights(query),
            WeightModel::Cart(m) => m.weights(query),
            WeightModel::Forest(m) => m.weights(query),
        }
    }

    pub fn family(&self) -> WeightFamily {
        match self {
            WeightModel::Knn(_) => WeightFamily::Knn,
            WeightModel::Kernel(_) => WeightFamily::Kernel,
            WeightModel::Cart(_) => WeightFamily::Cart,
            WeightModel::Forest(_) => WeightFamily::Forest,
        }
    }

    pub fn space(&self) -> Space {
        match self {
            WeightModel::Knn(m) => m.space(),
            WeightModel::Kernel(m) => m.space(),
            WeightModel::Cart(m) => m.space(),
            WeightModel::Forest(m) => m.space(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            WeightModel::Knn(m) => m.len(),
            WeightModel::Kernel(m) => m.len(),
            WeightModel::Cart(m) => m.len(),
            WeightModel::Forest(m) => m.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Hyperparameters for one weight family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum WeightHyper {
    Knn {
        k: usize,
    },
    Kernel {
        h: f64,
    },
    Cart {
        max_depth: usize,
        min_samples_leaf: usize,
    },
    Forest {
        max_depth: usize,
        min_samples_leaf: usize,
        n_estimators: usize,
    },
}

impl WeightHyper {
    pub fn family(&self) -> WeightFamily {
        match self {
            WeightHyper::Knn { .. } => WeightFamily::Knn,
            WeightHyper::Kernel { .. } => WeightFamily::Kernel,
            WeightHyper::Cart { .. } => WeightFamily::Cart,
            WeightHyper::Forest { .. } => WeightFamily::Forest,
        }
    }
}

/// Fits a weight model with explicit hyperparameters.
pub fn fit(data: &Dataset, hyper: &WeightHyper, space: Space, seed: u64) -> Result<WeightModel> {
    Ok(match *hyper {
        WeightHyper::Knn { k } => WeightModel::Knn(KnnModel::fit(data, k, space)?),
        WeightHyper::Kernel { h } => WeightModel::Kernel(KernelModel::fit(data, h, space)?),
        WeightHyper::Cart {
            max_depth,
            min_samples_leaf,
        } => WeightModel::Cart(CartModel::fit(
            data,
            TreeHyper {
                max_depth,
                min_samples_leaf,
            },
            space,
        )?),
        WeightHyper::Forest {
            max_depth,
            min_samples_leaf,
            n_estimators,
        } => WeightModel::Forest(ForestModel::fit(
            data,
            &ForestConfig {
                hyper: TreeHyper {
                    max_depth,
                    min_samples_leaf,
                },
                n_estimators,
                bootstrap: true,
                max_features: None,
            },
            space,
            seed,
        )?),
    })
}
