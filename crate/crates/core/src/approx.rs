//! Weighted-sample approximations of the expected profit and its gradient.
//!
//! Weights are recomputed at every candidate price, so the approximation
//! tracks how the demand distribution moves with the decision.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    profit, profit_adjusted, subgradient, subgradient_adjusted, Dataset, Decision, Gradient, NewsvendorParams, TieRule,
};
use crate::weights::{QueryPoint, WeightModel};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfitForm {
    #[default]
    Plain,
    /// Profit minus `γ·(p − p̃)²`.
    Adjusted,
}

/// Which profit to optimize, and whether the order quantity is fixed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ProfitKind {
    pub form: ProfitForm,
    /// When set, `q` is pinned to this value and only the price moves.
    #[serde(default)]
    pub frozen_q: Option<f64>,
}

impl ProfitKind {
    pub const PLAIN: ProfitKind = ProfitKind {
        form: ProfitForm::Plain,
        frozen_q: None,
    };

    pub fn price_only(form: ProfitForm, q: f64) -> Self {
        Self {
            form,
            frozen_q: Some(q),
        }
    }

    pub fn is_price_only(&self) -> bool {
        self.frozen_q.is_some()
    }

    /// Applies the frozen quantity, if any.
    pub fn pin(&self, x: Decision) -> Decision {
        match self.frozen_q {
            Some(q) => Decision::new(x.p, q),
            None => x,
        }
    }

    pub fn profit(&self, params: &NewsvendorParams, x: Decision, d: f64) -> Result<f64> {
        let x = self.pin(x);
        match self.form {
            ProfitForm::Plain => profit(params, x, d),
            ProfitForm::Adjusted => profit_adjusted(params, x, d),
        }
    }

    pub fn subgradient(&self, params: &NewsvendorParams, x: Decision, d: f64, rule: TieRule) -> Result<Gradient> {
        let x = self.pin(x);
        let mut g = match self.form {
            ProfitForm::Plain => subgradient(params, x, d, rule)?,
            ProfitForm::Adjusted => subgradient_adjusted(params, x, d, rule)?,
        };
        if self.is_price_only() {
            g.dq = 0.0;
        }
        Ok(g)
    }

    /// Deterministic part of the objective that does not depend on demand.
    pub(crate) fn adjustment(&self, params: &NewsvendorParams, p: f64) -> f64 {
        match self.form {
            ProfitForm::Plain => 0.0,
            ProfitForm::Adjusted => params.gamma * (p - params.p_tilde).powi(2),
        }
    }
}

/// The weighted-sample objective `Σ wⁱ(p, z)·π(p, q, Dⁱ)` for one feature vector.
#[derive(Debug, Clone)]
pub struct ApproxProblem<'a> {
    pub model: &'a WeightModel,
    pub demands: Vec<f64>,
    pub params: NewsvendorParams,
    pub kind: ProfitKind,
    pub rule: TieRule,
    pub features: Vec<f64>,
}

/// Objective value and approximate gradient at one decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub objective: f64,
    pub gradient: Gradient,
}

impl<'a> ApproxProblem<'a> {
    pub fn new(
        model: &'a WeightModel,
        data: &Dataset,
        params: NewsvendorParams,
        kind: ProfitKind,
        features: &[f64],
    ) -> Result<Self> {
        if model.len() != data.len() {
            return Err(Error::InvalidParameter(format!(
                "weight model covers {} samples but the dataset has {}",
                model.len(),
                data.len()
            )));
        }
        data.check_features(features)?;
        params.validate()?;
        Ok(Self {
            model,
            demands: data.demands(),
            params,
            kind,
            rule: TieRule::default(),
            features: features.to_vec(),
        })
    }

    pub fn with_rule(mut self, rule: TieRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn weights(&self, p: f64) -> Result<Vec<f64>> {
        self.model.weights(&QueryPoint::new(p, &self.features))
    }

    pub fn objective(&self, x: Decision) -> Result<f64> {
        let w = self.weights(x.p)?;
        self.objective_with(&w, x)
    }

    pub fn gradient(&self, x: Decision) -> Result<Gradient> {
        let w = self.weights(x.p)?;
        self.gradient_with(&w, x)
    }

    pub fn evaluate(&self, x: Decision) -> Result<Evaluation> {
        let w = self.weights(x.p)?;
        Ok(Evaluation {
            objective: self.objective_with(&w, x)?,
            gradient: self.gradient_with(&w, x)?,
        })
    }

    /// Objective under a fixed weight vector.
    pub fn objective_with(&self, w: &[f64], x: Decision) -> Result<f64> {
        let mut total = 0.0;
        for (wi, d) in w.iter().zip(&self.demands) {
            if *wi != 0.0 {
                total += wi * self.kind.profit(&self.params, x, *d)?;
            }
        }
        if !total.is_finite() {
            return Err(Error::NonFiniteObjective { p: x.p, q: x.q });
        }
        Ok(total)
    }

    pub fn gradient_with(&self, w: &[f64], x: Decision) -> Result<Gradient> {
        let mut g = Gradient::default();
        for (wi, d) in w.iter().zip(&self.demands) {
            if *wi != 0.0 {
                let gi = self.kind.subgradient(&self.params, x, *d, self.rule)?;
                g.dp += wi * gi.dp;
                g.dq += wi * gi.dq;
            }
        }
        Ok(g)
    }
}

/// Smallest demand at which the weighted cumulative distribution reaches `level`.
pub fn weighted_quantile(weights: &[f64], demands: &[f64], level: f64) -> Result<f64> {
    if weights.len() != demands.len() {
        return Err(Error::DimensionMismatch {
            expected: demands.len(),
            got: weights.len(),
        });
    }
    if demands.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut order: Vec<usize> = (0..demands.len()).collect();
    order.sort_by(|&a, &b| demands[a].total_cmp(&demands[b]));
    let target = level - 1e-12;
    let mut cum = 0.0;
    for &i in &order {
        cum += weights[i];
        if cum >= target {
            return Ok(demands[i]);
        }
    }
    Ok(demands[*order.last().unwrap()])
}
