use super::{Embedding, QueryPoint, Space};
use crate::error::{Error, Result};
use crate::model::Dataset;

/// Nadaraya-Watson weights with a Gaussian kernel of bandwidth `h`.
///
/// `wⁱ ∝ exp(−‖u − uⁱ‖² / 2h²)`. The kernel's normalizing constant cancels,
/// so the exponent is shifted by the smallest distance before exponentiating.
#[derive(Debug, Clone)]
pub struct KernelModel {
    h: f64,
    emb: Embedding,
}

impl KernelModel {
    pub fn fit(data: &Dataset, h: f64, space: Space) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidParameter(format!("bandwidth {h} must be positive")));
        }
        Ok(Self {
            h,
            emb: Embedding::new(data, space),
        })
    }

    pub fn bandwidth(&self) -> f64 {
        self.h
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
        let d2: Vec<f64> = (0..self.emb.len()).map(|i| self.emb.sq_dist(i, &u)).collect();
        if d2.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("kernel distance"));
        }
        Ok(normalized_gaussian(&d2, self.h))
    }
}

pub(crate) fn normalized_gaussian(d2: &[f64], h: f64) -> Vec<f64> {
    let min = d2.iter().copied().fold(f64::INFINITY, f64::min);
    let inv = 1.0 / (2.0 * h * h);
    let mut w: Vec<f64> = d2.iter().map(|d| (-(d - min) * inv).exp()).collect();
    let total: f64 = w.iter().sum();
    for v in &mut w {
        *v /= total;
    }
    w
}
