use std::cmp::Ordering;

use super::{Embedding, QueryPoint, Space};
use crate::error::{Error, Result};
use crate::model::Dataset;

/// k-nearest-neighbour weights: `1/k` on the `k` closest samples.
///
/// Distance ties are broken by ascending sample index.
#[derive(Debug, Clone)]
pub struct KnnModel {
    k: usize,
    emb: Embedding,
}

impl KnnModel {
    pub fn fit(data: &Dataset, k: usize, space: Space) -> Result<Self> {
        if k == 0 || k > data.len() {
            return Err(Error::InvalidParameter(format!(
                "k = {k} must lie in 1..={}",
                data.len()
            )));
        }
        Ok(Self {
            k,
            emb: Embedding::new(data, space),
        })
    }

    pub fn k(&self) -> usize {
        self.k
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

    /// Indices of the `k` nearest samples, in no particular order.
    pub fn neighbours(&self, query: &QueryPoint) -> Result<Vec<usize>> {
        let u = self.emb.embed(query)?;
        let mut keyed: Vec<(f64, usize)> = (0..self.emb.len()).map(|i| (self.emb.sq_dist(i, &u), i)).collect();
        if self.k < keyed.len() {
            keyed.select_nth_unstable_by(self.k - 1, by_distance_then_index);
            keyed.truncate(self.k);
        }
        Ok(keyed.into_iter().map(|(_, i)| i).collect())
    }

    pub fn weights(&self, query: &QueryPoint) -> Result<Vec<f64>> {
        let mut w = vec![0.0; self.emb.len()];
        let share = 1.0 / self.k as f64;
        for i in self.neighbours(query)? {
            w[i] = share;
        }
        Ok(w)
    }
}

pub(crate) fn by_distance_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Sample;

    fn line(prices: &[f64]) -> Dataset {
        // a single zero-width feature keeps the metric one-dimensional
        let samples = prices
            .iter()
            .map(|&p| Sample {
                price: p,
                features: vec![0.0],
                demand: 1.0,
            })
            .collect();
        Dataset::new(samples).unwrap()
    }

    #[test]
    fn k_equal_to_n_is_uniform() {
        let data = line(&[1.0, 2.0, 10.0, 4.0]);
        let m = KnnModel::fit(&data, 4, Space::Joined).unwrap();
        let w = m.weights(&QueryPoint::new(3.0, &[0.0])).unwrap();
        assert_eq!(w, vec![0.25; 4]);
    }

    #[test]
    fn two_nearest_on_a_line() {
        // distances 0.5, 0.5, 8.5
        let data = line(&[1.0, 2.0, 10.0]);
        let m = KnnModel::fit(&data, 2, Space::Joined).unwrap();
        let w = m.weights(&QueryPoint::new(1.5, &[0.0])).unwrap();
        assert_eq!(w, vec![0.5, 0.5, 0.0]);
    }

    #[test]
    fn ties_prefer_the_lower_index() {
        let data = line(&[2.0, 1.0, 10.0]);
        let m = KnnModel::fit(&data, 1, Space::Joined).unwrap();
        let w = m.weights(&QueryPoint::new(1.5, &[0.0])).unwrap();
        assert_eq!(w, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn exactly_k_nonzero_entries() {
        let data = line(&[1.0, 1.0, 1.0, 1.0, 5.0, 6.0]);
        let m = KnnModel::fit(&data, 3, Space::Joined).unwrap();
        let w = m.weights(&QueryPoint::new(1.0, &[0.0])).unwrap();
        assert_eq!(w.iter().filter(|v| **v > 0.0).count(), 3);
        assert_eq!(w, vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn k_out_of_range_is_rejected() {
        let data = line(&[1.0, 2.0]);
        assert!(KnnModel::fit(&data, 3, Space::Joined).is_err());
        assert!(KnnModel::fit(&data, 0, Space::Joined).is_err());
    }

    #[test]
    fn features_only_ignores_price() {
        let samples = vec![
            Sample {
                price: 1.0,
                features: vec![0.0],
                demand: 1.0,
            },
            Sample {
                price: 9.0,
                features: vec![1.0],
                demand: 1.0,
            },
        ];
        let data = Dataset::new(samples).unwrap();
        let m = KnnModel::fit(&data, 1, Space::FeaturesOnly).unwrap();
        let w = m.weights(&QueryPoint::new(9.0, &[0.1])).unwrap();
        assert_eq!(w, vec![1.0, 0.0]);
    }
}
