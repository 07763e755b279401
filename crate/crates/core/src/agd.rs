//! Projected approximate-gradient ascent on the weighted-sample objective.

use serde::{Deserialize, Serialize};

use crate::approx::{weighted_quantile, ApproxProblem, Evaluation};
use crate::error::{Error, Result};
use crate::model::{Decision, Gradient, NewsvendorParams};

/// Backtracking parameters: try `α₀, α₀β, α₀β², …` until the objective
/// rises by at least `σ·η·‖g‖²`, giving up once `η < ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Armijo {
    pub alpha0: f64,
    pub beta: f64,
    pub sigma: f64,
    pub eps: f64,
}

impl Default for Armijo {
    fn default() -> Self {
        Self {
            alpha0: 0.05,
            beta: 0.5,
            sigma: 0.0,
            eps: 1e-8,
        }
    }
}

impl Armijo {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha0 > 0.0 && self.alpha0.is_finite()) {
            return Err(Error::InvalidParameter("alpha0 must be positive".into()));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidParameter("beta must lie in (0, 1)".into()));
        }
        if !(0.0..1.0).contains(&self.sigma) {
            return Err(Error::InvalidParameter("sigma must lie in [0, 1)".into()));
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidParameter("eps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum StepRule {
    /// `η_r = c / (r + 1)`
    Diminishing {
        c: f64,
    },
    Armijo(Armijo),
    /// Fixed step, used by the strongly concave experiments.
    Constant {
        eta: f64,
    },
}

impl Default for StepRule {
    fn default() -> Self {
        StepRule::Armijo(Armijo::default())
    }
}

impl StepRule {
    pub fn validate(&self) -> Result<()> {
        match self {
            StepRule::Diminishing { c } if !(*c > 0.0 && c.is_finite()) => {
                Err(Error::InvalidParameter("step constant must be positive".into()))
            }
            StepRule::Constant { eta } if !(*eta > 0.0 && eta.is_finite()) => {
                Err(Error::InvalidParameter("step size must be positive".into()))
            }
            StepRule::Armijo(a) => a.validate(),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgdConfig {
    pub step: StepRule,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub seed: u64,
}

impl Default for AgdConfig {
    fn default() -> Self {
        Self {
            step: StepRule::default(),
            max_iters: 500,
            grad_tol: 1e-6,
            seed: 0,
        }
    }
}

impl AgdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
        }
        if !(self.grad_tol >= 0.0) {
            return Err(Error::InvalidParameter("grad_tol must be non-negative".into()));
        }
        self.step.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIters,
    StepBelowEps,
    GradBelowTol,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::MaxIters => "max_iters",
            StopReason::StepBelowEps => "step_below_eps",
            StopReason::GradBelowTol => "grad_below_tol",
        }
    }
}

/// One entry per visited point; `steps[0]` is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgdTrace {
    pub iterates: Vec<Decision>,
    pub objectives: Vec<f64>,
    pub gradients: Vec<Gradient>,
    pub steps: Vec<f64>,
    pub stop_reason: StopReason,
}

impl AgdTrace {
    pub fn iterations(&self) -> usize {
        self.iterates.len() - 1
    }

    pub fn last(&self) -> Decision {
        *self.iterates.last().expect("trace is never empty")
    }

    pub fn final_objective(&self) -> f64 {
        *self.objectives.last().expect("trace is never empty")
    }
}

pub fn project(x: Decision, params: &NewsvendorParams) -> Decision {
    params.project(x)
}

pub fn diminishing_step(r: usize, c: f64) -> f64 {
    c / (r as f64 + 1.0)
}

fn advance(x: Decision, g: Gradient, eta: f64) -> Decision {
    Decision::new(x.p + eta * g.dp, x.q + eta * g.dq)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArmijoOutcome {
    /// Accepted step size and the objective at the new point.
    Step {
        eta: f64,
        objective: f64,
    },
    Stop,
}

/// Backtracking line search along the ascent direction `g` from `x`.
pub fn armijo_step<F, P>(
    mut objective: F,
    x: Decision,
    fx: f64,
    g: Gradient,
    rule: &Armijo,
    project: P,
) -> Result<ArmijoOutcome>
where
    F: FnMut(Decision) -> Result<f64>,
    P: Fn(Decision) -> Decision,
{
    let gg = g.dot(&g);
    let mut eta = rule.alpha0;
    while eta >= rule.eps {
        let trial = project(advance(x, g, eta));
        let ft = objective(trial)?;
        if !ft.is_finite() {
            return Err(Error::NonFiniteObjective { p: trial.p, q: trial.q });
        }
        if ft - fx >= rule.sigma * eta * gg {
            return Ok(ArmijoOutcome::Step { eta, objective: ft });
        }
        eta *= rule.beta;
    }
    Ok(ArmijoOutcome::Stop)
}

/// `(p_lo, weighted median demand at p_lo)`, the default starting point.
///
/// The price component of the approximate gradient is never negative for
/// the plain profit, so a run cannot recover from starting above the optimum.
pub fn default_start(problem: &ApproxProblem<'_>) -> Result<Decision> {
    let p = problem.params.p_bounds.lo;
    let w = problem.weights(p)?;
    let q = weighted_quantile(&w, &problem.demands, 0.5)?;
    Ok(problem.kind.pin(problem.params.project(Decision::new(p, q))))
}

pub fn run_agd(problem: &ApproxProblem<'_>, x0: Decision, config: &AgdConfig) -> Result<AgdTrace> {
    config.validate()?;
    let params = &problem.params;
    let place = |x: Decision| problem.kind.pin(params.project(x));
    let mut x = place(x0);
    let mut ev = problem.evaluate(x)?;
    let mut trace = AgdTrace {
        iterates: vec![x],
        objectives: vec![ev.objective],
        gradients: vec![ev.gradient],
        steps: vec![0.0],
        stop_reason: StopReason::MaxIters,
    };
    for r in 0..config.max_iters {
        let g = ev.gradient;
        if g.norm() <= config.grad_tol {
            trace.stop_reason = StopReason::GradBelowTol;
            break;
        }
        let (eta, next) = match config.step {
            StepRule::Diminishing { c } => {
                let eta = diminishing_step(r, c);
                let next = place(advance(x, g, eta));
                (eta, problem.evaluate(next)?)
            }
            StepRule::Constant { eta } => {
                let next = place(advance(x, g, eta));
                (eta, problem.evaluate(next)?)
            }
            StepRule::Armijo(rule) => {
                let mut last: Option<(Decision, Evaluation)> = None;
                let outcome = armijo_step(
                    |trial| {
                        let e = problem.evaluate(trial)?;
                        last = Some((trial, e));
                        Ok(e.objective)
                    },
                    x,
                    ev.objective,
                    g,
                    &rule,
                    place,
                )?;
                match outcome {
                    ArmijoOutcome::Stop => {
                        trace.stop_reason = StopReason::StepBelowEps;
                        break;
                    }
                    ArmijoOutcome::Step { eta, .. } => {
                        let (_, e) = last.expect("an accepted step was evaluated");
                        (eta, e)
                    }
                }
            }
        };
        x = place(advance(x, g, eta));
        ev = next;
        trace.iterates.push(x);
        trace.objectives.push(ev.objective);
        trace.gradients.push(ev.gradient);
        trace.steps.push(eta);
    }
    Ok(trace)
}
