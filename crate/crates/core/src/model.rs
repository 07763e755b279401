//! Domain types and the exact per-sample profit arithmetic.
//!
//! A single selling period with price `p`, order quantity `q` and realized
//! demand `d` earns `p·min(d, q) − c·q + s·(q − d)⁺`. The price-adjustment
//! variant subtracts `γ·(p − p̃)²`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.max(self.lo).min(self.hi)
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// `n` evenly spaced points including both end points (`n ≥ 2`), or the
    /// single lower end point when `n == 1`.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        match n {
            0 => Vec::new(),
            1 => vec![self.lo],
            _ => {
                let step = self.width() / (n - 1) as f64;
                (0..n)
                    .map(|i| if i == n - 1 { self.hi } else { self.lo + step * i as f64 })
                    .collect()
            }
        }
    }
}

/// Economic constants and the rectangular feasible region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewsvendorParams {
    /// Purchase cost per unit.
    pub c: f64,
    /// Salvage value per unsold unit.
    pub s: f64,
    /// Price-adjustment coefficient (only used by the adjusted profit).
    #[serde(default)]
    pub gamma: f64,
    /// Reference price for the adjustment cost.
    #[serde(default)]
    pub p_tilde: f64,
    pub p_bounds: Interval,
    pub q_bounds: Interval,
}

impl NewsvendorParams {
    pub fn new(c: f64, s: f64, p_bounds: Interval, q_bounds: Interval) -> Result<Self> {
        let params = Self {
            c,
            s,
            gamma: 0.0,
            p_tilde: p_bounds.lo,
            p_bounds,
            q_bounds,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_adjustment(mut self, gamma: f64, p_tilde: f64) -> Result<Self> {
        self.gamma = gamma;
        self.p_tilde = p_tilde;
        self.validate()?;
        Ok(self)
    }

    /// Cost 6, salvage 2, orders in `[0, 120]` and prices in `[7, p_hi]`.
    pub fn simulation(p_hi: f64) -> Self {
        Self {
            c: 6.0,
            s: 2.0,
            gamma: 0.0,
            p_tilde: 7.0,
            p_bounds: Interval::new(7.0, p_hi),
            q_bounds: Interval::new(0.0, 120.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.c,
            self.s,
            self.gamma,
            self.p_tilde,
            self.p_bounds.lo,
            self.p_bounds.hi,
            self.q_bounds.lo,
            self.q_bounds.hi,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("newsvendor parameters"));
        }
        if !(self.s < self.c) {
            return Err(Error::InvalidParameter(format!(
                "salvage value {} must be below cost {}",
                self.s, self.c
            )));
        }
        if !(self.c <= self.p_bounds.lo) {
            return Err(Error::InvalidParameter(format!(
                "cost {} must not exceed the lowest price {}",
                self.c, self.p_bounds.lo
            )));
        }
        if self.p_bounds.lo > self.p_bounds.hi {
            return Err(Error::InvalidParameter("empty price interval".into()));
        }
        if !(0.0 <= self.q_bounds.lo && self.q_bounds.lo <= self.q_bounds.hi) {
            return Err(Error::InvalidParameter(
                "order interval must satisfy 0 ≤ q_lo ≤ q_hi".into(),
            ));
        }
        if self.gamma < 0.0 {
            return Err(Error::InvalidParameter("gamma must be non-negative".into()));
        }
        Ok(())
    }

    /// Critical fractile `(p − c)/(p − s)` at price `p`.
    pub fn fractile(&self, p: f64) -> f64 {
        (p - self.c) / (p - self.s)
    }

    /// Clamp a decision into the feasible box.
    pub fn project(&self, x: Decision) -> Decision {
        Decision {
            p: self.p_bounds.clamp(x.p),
            q: self.q_bounds.clamp(x.q),
        }
    }

    pub fn is_feasible(&self, x: Decision) -> bool {
        self.p_bounds.contains(x.p) && self.q_bounds.contains(x.q)
    }
}

/// A pricing and ordering decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub p: f64,
    pub q: f64,
}

impl Decision {
    pub const fn new(p: f64, q: f64) -> Self {
        Self { p, q }
    }

    pub fn distance(&self, other: &Decision) -> f64 {
        (self.p - other.p).hypot(self.q - other.q)
    }

    fn check(&self) -> Result<()> {
        if !self.p.is_finite() || !self.q.is_finite() {
            return Err(Error::NonFinite("decision"));
        }
        Ok(())
    }
}

/// Gradient (or subgradient) with respect to `(p, q)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Gradient {
    pub dp: f64,
    pub dq: f64,
}

impl Gradient {
    pub const fn new(dp: f64, dq: f64) -> Self {
        Self { dp, dq }
    }

    pub fn dot(&self, other: &Gradient) -> f64 {
        self.dp * other.dp + self.dq * other.dq
    }

    pub fn norm(&self) -> f64 {
        self.dp.hypot(self.dq)
    }

    pub fn scale(&self, k: f64) -> Gradient {
        Gradient::new(self.dp * k, self.dq * k)
    }

    pub fn sub(&self, other: &Gradient) -> Gradient {
        Gradient::new(self.dp - other.dp, self.dq - other.dq)
    }
}

/// Which element of the subdifferential to use at the kink `q = d`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieRule {
    /// `e = 1{q > d}`
    #[default]
    Lower,
    /// `e = 1{q ≥ d}`
    Upper,
}

impl TieRule {
    /// Indicator `e` of the overage event.
    pub fn overage(self, q: f64, d: f64) -> f64 {
        let hit = match self {
            TieRule::Lower => q > d,
            TieRule::Upper => q >= d,
        };
        if hit {
            1.0
        } else {
            0.0
        }
    }
}

fn check_demand(d: f64) -> Result<()> {
    if !d.is_finite() {
        return Err(Error::NonFinite("demand"));
    }
    if d < 0.0 {
        return Err(Error::NegativeDemand(d));
    }
    Ok(())
}

/// Realized profit `p·min(d, q) − c·q + s·(q − d)⁺`.
pub fn profit(params: &NewsvendorParams, x: Decision, d: f64) -> Result<f64> {
    check_demand(d)?;
    x.check()?;
    Ok(x.p * d.min(x.q) - params.c * x.q + params.s * (x.q - d).max(0.0))
}

/// Profit net of the quadratic price-adjustment cost `γ·(p − p̃)²`.
pub fn profit_adjusted(params: &NewsvendorParams, x: Decision, d: f64) -> Result<f64> {
    let base = profit(params, x, d)?;
    let dev = x.p - params.p_tilde;
    Ok(base - params.gamma * dev * dev)
}

/// One element of the subdifferential of [`profit`]:
/// `(min(d, q), (p − c) − (p − s)·e)`.
pub fn subgradient(params: &NewsvendorParams, x: Decision, d: f64, rule: TieRule) -> Result<Gradient> {
    check_demand(d)?;
    x.check()?;
    let e = rule.overage(x.q, d);
    Ok(Gradient::new(d.min(x.q), (x.p - params.c) - (x.p - params.s) * e))
}

pub fn subgradient_adjusted(params: &NewsvendorParams, x: Decision, d: f64, rule: TieRule) -> Result<Gradient> {
    let mut g = subgradient(params, x, d, rule)?;
    g.dp -= 2.0 * params.gamma * (x.p - params.p_tilde);
    Ok(g)
}

/// Min/max range used for `[0, 1]` standardization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        let mut it = values.into_iter();
        let first = it.next()?;
        let (min, max) = it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v)));
        Some(Self { min, max })
    }

    /// Maps `[min, max]` onto `[0, 1]`; a degenerate range maps to 0.
    pub fn scale(&self, v: f64) -> f64 {
        let w = self.max - self.min;
        if w > 0.0 {
            (v - self.min) / w
        } else {
            0.0
        }
    }

    pub fn unscale(&self, u: f64) -> f64 {
        self.min + u * (self.max - self.min)
    }
}

/// Per-coordinate standardization metadata for a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub price: Range,
    pub features: Vec<Range>,
}

impl Scaling {
    pub fn scale_features(&self, z: &[f64]) -> Vec<f64> {
        z.iter().zip(&self.features).map(|(v, r)| r.scale(*v)).collect()
    }
}

/// One historical observation `(pⁱ, zⁱ, Dⁱ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub price: f64,
    pub features: Vec<f64>,
    pub demand: f64,
}

/// Historical samples with the scaling used by the distance-based weights.
///
/// Samples keep their raw units; [`Scaling`] maps prices and features into
/// `[0, 1]` whenever a metric is needed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    samples: Vec<Sample>,
    feature_dim: usize,
    scaling: Scaling,
}

impl Dataset {
    /// Builds a dataset and derives the scaling from the samples' own ranges.
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        let first = samples.first().ok_or(Error::EmptyDataset)?;
        let feature_dim = first.features.len();
        for s in &samples {
            if s.features.len() != feature_dim {
                return Err(Error::DimensionMismatch {
                    expected: feature_dim,
                    got: s.features.len(),
                });
            }
            if !s.price.is_finite() || s.features.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("sample"));
            }
            check_demand(s.demand)?;
        }
        let price = Range::of(samples.iter().map(|s| s.price)).expect("non-empty");
        let features = (0..feature_dim)
            .map(|j| Range::of(samples.iter().map(|s| s.features[j])).expect("non-empty"))
            .collect();
        Ok(Self {
            samples,
            feature_dim,
            scaling: Scaling { price, features },
        })
    }

    /// Replaces the scaling, e.g. with statistics from a training split.
    pub fn with_scaling(mut self, scaling: Scaling) -> Result<Self> {
        if scaling.features.len() != self.feature_dim {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim,
                got: scaling.features.len(),
            });
        }
        self.scaling = scaling;
        Ok(self)
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn scaling(&self) -> &Scaling {
        &self.scaling
    }

    pub fn demands(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.demand).collect()
    }

    pub fn check_features(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.feature_dim {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim,
                got: z.len(),
            });
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("query features"));
        }
        Ok(())
    }

    /// Samples with the same scaling, restricted to `idx`.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        let samples: Vec<Sample> = idx.iter().map(|&i| self.samples[i].clone()).collect();
        if samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(Self {
            samples,
            feature_dim: self.feature_dim,
            scaling: self.scaling.clone(),
        })
    }
}
