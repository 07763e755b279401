//! Data-driven newsvendor pricing with decision-dependent sample weights.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod agd;
pub mod approx;
pub mod baselines;
pub mod datagen;
pub mod error;
pub mod model;
pub mod oracle;
pub mod weights;

pub use agd::{run_agd, AgdConfig, AgdTrace, Armijo, StepRule, StopReason};
pub use approx::{weighted_quantile, ApproxProblem, Evaluation, ProfitForm, ProfitKind};
pub use datagen::{DemandModel, PricePolicy};
pub use error::{Error, Result};
pub use model::{
    profit, profit_adjusted, subgradient, subgradient_adjusted, Dataset, Decision, Gradient, Interval,
    NewsvendorParams, Range, Sample, Scaling, TieRule,
};
pub use oracle::{Oracle, OracleConfig};
pub use weights::{QueryPoint, Space, WeightFamily, WeightHyper, WeightModel};
