use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Embedding, QueryPoint, Space};
use crate::error::{Error, Result};
use crate::model::Dataset;

/// Stopping rules for a regression tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeHyper {
    /// Maximum number of splits on any root-to-leaf path; `0` gives a single leaf.
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl TreeHyper {
    fn validate(&self, n: usize) -> Result<()> {
        if self.min_samples_leaf == 0 {
            return Err(Error::InvalidParameter("min_samples_leaf must be at least 1".into()));
        }
        if self.min_samples_leaf > n {
            return Err(Error::InvalidParameter(format!(
                "min_samples_leaf = {} exceeds the {n} available samples",
                self.min_samples_leaf
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    /// Queries with `u[feature] < threshold` go left, everything else right.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Indices of the dataset samples routed to this leaf.
    Leaf { samples: Vec<usize> },
}

/// A CART regressor over embedded coordinates; node 0 is the root.
#[derive(Debug, Clone)]
pub struct RegressionTree {
    nodes: Vec<Node>,
    hyper: TreeHyper,
}

struct Grower<'a, R> {
    emb: &'a Embedding,
    hyper: TreeHyper,
    max_features: usize,
    rng: Option<&'a mut R>,
    nodes: Vec<Node>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    left: Vec<usize>,
    right: Vec<usize>,
}

impl<R: Rng> Grower<'_, R> {
    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { samples: Vec::new() });
        let split = if depth < self.hyper.max_depth && idx.len() >= 2 * self.hyper.min_samples_leaf {
            self.best_split(&idx)
        } else {
            None
        };
        match split {
            None => self.nodes[id] = Node::Leaf { samples: idx },
            Some(s) => {
                let left = self.grow(s.left, depth + 1);
                let right = self.grow(s.right, depth + 1);
                self.nodes[id] = Node::Split {
                    feature: s.feature,
                    threshold: s.threshold,
                    left,
                    right,
                };
            }
        }
        id
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let dim = self.emb.dim();
        match self.rng.as_deref_mut() {
            Some(rng) if self.max_features < dim => {
                let mut f = index::sample(rng, dim, self.max_features).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..dim).collect(),
        }
    }

    fn best_split(&mut self, idx: &[usize]) -> Option<BestSplit> {
        let y = self.emb.targets();
        let n = idx.len();
        let mean = idx.iter().map(|&i| y[i]).sum::<f64>() / n as f64;
        let parent: f64 = idx.iter().map(|&i| (y[i] - mean).powi(2)).sum();
        if parent <= 0.0 {
            return None;
        }
        let min_leaf = self.hyper.min_samples_leaf;
        let mut best: Option<(usize, f64, f64)> = None;
        let mut order = idx.to_vec();
        for f in self.candidate_features() {
            let x = |i: usize| self.emb.row(i)[f];
            order.sort_by(|&a, &b| x(a).total_cmp(&x(b)).then(a.cmp(&b)));
            let total: f64 = order.iter().map(|&i| y[i] - mean).sum();
            let total2: f64 = order.iter().map(|&i| (y[i] - mean).powi(2)).sum();
            let (mut s1, mut s2) = (0.0, 0.0);
            for k in 1..n {
                let prev = order[k - 1];
                let r = y[prev] - mean;
                s1 += r;
                s2 += r * r;
                if k < min_leaf || n - k < min_leaf {
                    continue;
                }
                let (a, b) = (x(prev), x(order[k]));
                if a >= b {
                    continue;
                }
                let nl = k as f64;
                let nr = (n - k) as f64;
                let sse = (s2 - s1 * s1 / nl) + ((total2 - s2) - (total - s1).powi(2) / nr);
                if best.is_none_or(|(_, _, b)| sse < b) {
                    let mid = 0.5 * (a + b);
                    let threshold = if mid > a { mid } else { b };
                    best = Some((f, threshold, sse));
                }
            }
        }
        let (feature, threshold, sse) = best?;
        if sse >= parent * (1.0 - 1e-12) {
            return None;
        }
        let (left, right) = idx.iter().partition(|&&i| self.emb.row(i)[feature] < threshold);
        Some(BestSplit {
            feature,
            threshold,
            left,
            right,
        })
    }
}

impl RegressionTree {
    /// Grows a tree on the rows `idx` of `emb` (repeats allowed).
    ///
    /// With an rng, each split considers `max_features` features drawn
    /// without replacement.
    pub(crate) fn grow<R: Rng>(
        emb: &Embedding,
        idx: Vec<usize>,
        hyper: TreeHyper,
        max_features: usize,
        rng: Option<&mut R>,
    ) -> Self {
        let mut g = Grower {
            emb,
            hyper,
            max_features,
            rng,
            nodes: Vec::new(),
        };
        g.grow(idx, 0);
        Self { nodes: g.nodes, hyper }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn hyper(&self) -> TreeHyper {
        self.hyper
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], id: usize) -> usize {
            match &nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }

    /// Node id of the leaf an embedded point routes to.
    pub fn route(&self, u: &[f64]) -> usize {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Leaf { .. } => return id,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if u[*feature] < *threshold { *left } else { *right },
            }
        }
    }

    pub fn leaf_samples(&self, leaf: usize) -> &[usize] {
        match &self.nodes[leaf] {
            Node::Leaf { samples } => samples,
            Node::Split { .. } => &[],
        }
    }

    /// Replaces each leaf's sample set with the rows of `emb` that route to it.
    pub(crate) fn repopulate(&mut self, emb: &Embedding) {
        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        for i in 0..emb.len() {
            buckets[self.route(emb.row(i))].push(i);
        }
        for (node, bucket) in self.nodes.iter_mut().zip(buckets) {
            if let Node::Leaf { samples } = node {
                *samples = bucket;
            }
        }
    }

    /// Adds this tree's leaf weights for `u` onto `acc`, scaled by `scale`.
    pub(crate) fn accumulate(&self, u: &[f64], scale: f64, acc: &mut [f64]) {
        let members = self.leaf_samples(self.route(u));
        let share = scale / members.len() as f64;
        for &i in members {
            acc[i] += share;
        }
    }

    /// Leaf-mean prediction.
    pub fn predict(&self, u: &[f64], targets: &[f64]) -> f64 {
        let members = self.leaf_samples(self.route(u));
        members.iter().map(|&i| targets[i]).sum::<f64>() / members.len() as f64
    }
}

/// Weights from a single regression tree: uniform over the query's leaf.
#[derive(Debug, Clone)]
pub struct CartModel {
    tree: RegressionTree,
    emb: Embedding,
}

impl CartModel {
    pub fn fit(data: &Dataset, hyper: TreeHyper, space: Space) -> Result<Self> {
        hyper.validate(data.len())?;
        let emb = Embedding::new(data, space);
        Ok(Self::from_embedding(emb, hyper))
    }

    pub(crate) fn from_embedding(emb: Embedding, hyper: TreeHyper) -> Self {
        let idx = (0..emb.len()).collect();
        let tree = RegressionTree::grow::<rand_chacha::ChaCha8Rng>(&emb, idx, hyper, emb.dim(), None);
        Self { tree, emb }
    }

    pub fn tree(&self) -> &RegressionTree {
        &self.tree
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

    pub fn weights(&self, query: &QueryPoint) -> Result<Vec<f64>> {
        let u = self.emb.embed(query)?;
        let mut w = vec![0.0; self.emb.len()];
        self.tree.accumulate(&u, 1.0, &mut w);
        Ok(w)
    }

    pub(crate) fn predict_embedded(&self, u: &[f64]) -> f64 {
        self.tree.predict(u, self.emb.targets())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Sample;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn one_dim(x: &[f64], d: &[f64]) -> Dataset {
        let samples = x
            .iter()
            .zip(d)
            .map(|(&p, &d)| Sample {
                price: p,
                features: vec![0.0],
                demand: d,
            })
            .collect();
        Dataset::new(samples).unwrap()
    }

    fn stump() -> CartModel {
        let data = one_dim(&[0.0, 1.0, 10.0, 11.0], &[0.0, 0.0, 1.0, 1.0]);
        let hyper = TreeHyper {
            max_depth: 1,
            min_samples_leaf: 1,
        };
        CartModel::fit(&data, hyper, Space::Joined).unwrap()
    }

    fn threshold(m: &CartModel) -> (usize, f64) {
        match m.tree().nodes()[0] {
            Node::Split { feature, threshold, .. } => (feature, threshold),
            Node::Leaf { .. } => panic!("expected a split at the root"),
        }
    }

    #[test]
    fn four_point_stump() {
        let m = stump();
        let (feature, t) = threshold(&m);
        assert_eq!(feature, 0);
        // price scaled by 1/11
        let raw = t * 11.0;
        assert!(raw > 1.0 && raw < 10.0, "threshold {raw}");
        assert_eq!(m.tree().leaf_count(), 2);
        let leaves: Vec<&[usize]> = m
            .tree()
            .nodes()
            .iter()
            .filter_map(|n| match n {
                Node::Leaf { samples } => Some(samples.as_slice()),
                _ => None,
            })
            .collect();
        assert_eq!(leaves, vec![&[0, 1][..], &[2, 3][..]]);
        let w = m.weights(&QueryPoint::new(0.5, &[0.0])).unwrap();
        assert_eq!(w, vec![0.5, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn threshold_query_routes_right() {
        let m = stump();
        let (_, t) = threshold(&m);
        let w = m.weights(&QueryPoint::new(t * 11.0, &[0.0])).unwrap();
        assert_eq!(w, vec![0.0, 0.0, 0.5, 0.5]);
        assert_eq!(m.tree().route(&[t, 0.0]), 2);
    }

    #[test]
    fn constant_demand_is_one_leaf() {
        let data = one_dim(&[0.0, 3.0, 5.0, 9.0, 12.0], &[4.0; 5]);
        let hyper = TreeHyper {
            max_depth: 6,
            min_samples_leaf: 1,
        };
        let m = CartModel::fit(&data, hyper, Space::Joined).unwrap();
        assert_eq!(m.tree().leaf_count(), 1);
        assert_eq!(m.weights(&QueryPoint::new(1.0, &[0.0])).unwrap(), vec![0.2; 5]);
    }

    #[test]
    fn identical_inputs_are_one_leaf() {
        let data = one_dim(&[2.0; 4], &[1.0, 5.0, 2.0, 9.0]);
        let hyper = TreeHyper {
            max_depth: 6,
            min_samples_leaf: 1,
        };
        let m = CartModel::fit(&data, hyper, Space::Joined).unwrap();
        assert_eq!(m.tree().leaf_count(), 1);
    }

    #[test]
    fn min_leaf_equal_to_n_is_one_leaf() {
        let data = one_dim(&[0.0, 1.0, 10.0, 11.0], &[0.0, 0.0, 1.0, 1.0]);
        let hyper = TreeHyper {
            max_depth: 4,
            min_samples_leaf: 4,
        };
        let m = CartModel::fit(&data, hyper, Space::Joined).unwrap();
        assert_eq!(m.tree().leaf_count(), 1);
        let over = TreeHyper {
            max_depth: 4,
            min_samples_leaf: 5,
        };
        assert!(CartModel::fit(&data, over, Space::Joined).is_err());
    }

    fn random_data(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = (0..n)
            .map(|_| {
                let p: f64 = rng.random_range(0.0..10.0);
                let z: Vec<f64> = (0..2).map(|_| rng.random::<f64>()).collect();
                let d = 20.0 - p + 10.0 * z[0] + rng.random_range(0.0..3.0);
                Sample {
                    price: p,
                    features: z,
                    demand: d,
                }
            })
            .collect();
        Dataset::new(samples).unwrap()
    }

    // Brute force over every feature and every midpoint for the root split.
    fn brute_root_sse(emb: &Embedding, min_leaf: usize) -> f64 {
        let y = emb.targets();
        let sse = |idx: &[usize]| {
            let m = idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64;
            idx.iter().map(|&i| (y[i] - m).powi(2)).sum::<f64>()
        };
        let mut best = f64::INFINITY;
        for f in 0..emb.dim() {
            let mut vals: Vec<f64> = (0..emb.len()).map(|i| emb.row(i)[f]).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for w in vals.windows(2) {
                let t = 0.5 * (w[0] + w[1]);
                let (l, r): (Vec<usize>, Vec<usize>) = (0..emb.len()).partition(|&i| emb.row(i)[f] < t);
                if l.len() >= min_leaf && r.len() >= min_leaf {
                    best = best.min(sse(&l) + sse(&r));
                }
            }
        }
        best
    }

    #[test]
    fn root_split_matches_brute_force() {
        for seed in 0..5 {
            let data = random_data(40, seed);
            let hyper = TreeHyper {
                max_depth: 1,
                min_samples_leaf: 3,
            };
            let m = CartModel::fit(&data, hyper, Space::Joined).unwrap();
            let emb = Embedding::new(&data, Space::Joined);
            let y = emb.targets();
            let got: f64 = m
                .tree()
                .nodes()
                .iter()
                .filter_map(|n| match n {
                    Node::Leaf { samples } => {
                        let mean = samples.iter().map(|&i| y[i]).sum::<f64>() / samples.len() as f64;
                        Some(samples.iter().map(|&i| (y[i] - mean).powi(2)).sum::<f64>())
                    }
                    _ => None,
                })
                .sum();
            let want = brute_root_sse(&emb, 3);
            assert!((got - want).abs() <= 1e-9 * want.max(1.0), "{got} vs {want}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn leaves_partition_and_respect_min_leaf(
            seed in 0u64..500, depth in 0usize..6, min_leaf in 1usize..8
        ) {
            let data = random_data(50, seed);
            let hyper = TreeHyper { max_depth: depth, min_samples_leaf: min_leaf };
            let m = CartModel::fit(&data, hyper, Space::Joined).unwrap();
            let mut seen = [0u32; 50];
            for node in m.tree().nodes() {
                if let Node::Leaf { samples } = node {
                    prop_assert!(samples.len() >= min_leaf);
                    for &i in samples { seen[i] += 1; }
                }
            }
            prop_assert!(seen.iter().all(|c| *c == 1));
            prop_assert!(m.tree().depth() <= depth);
        }

        #[test]
        fn same_leaf_same_weights(seed in 0u64..500, a in 0.0f64..10.0, b in 0.0f64..10.0, z in 0.0f64..1.0) {
            let data = random_data(50, seed);
            let hyper = TreeHyper { max_depth: 3, min_samples_leaf: 4 };
            let m = CartModel::fit(&data, hyper, Space::Joined).unwrap();
            let qa = QueryPoint::new(a, &[z, 0.5]);
            let qb = QueryPoint::new(b, &[z, 0.5]);
            let emb = Embedding::new(&data, Space::Joined);
            let la = m.tree().route(&emb.embed(&qa).unwrap());
            let lb = m.tree().route(&emb.embed(&qb).unwrap());
            if la == lb {
                prop_assert_eq!(m.weights(&qa).unwrap(), m.weights(&qb).unwrap());
            }
        }
    }
}
