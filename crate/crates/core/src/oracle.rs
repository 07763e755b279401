//! Monte Carlo ground truth for the simulated demand laws.
//!
//! Every simulated law is a location family `D = max(0, μ(p, z) + e)` with a
//! price-free noise `e`. The oracle draws `M` noise values once, sorts them
//! and keeps prefix sums, so the expectation of `min(D, q)` at any `(p, q)`
//! costs two binary searches. All evaluations share these common random
//! numbers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::approx::ProfitKind;
use crate::datagen::DemandModel;
use crate::error::{Error, Result};
use crate::model::{Decision, Gradient, NewsvendorParams, TieRule};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleConfig {
    pub mc_samples: usize,
    pub p_grid: usize,
    pub q_grid: usize,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            mc_samples: 50_000,
            p_grid: 201,
            q_grid: 201,
            seed: 0,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mc_samples == 0 {
            return Err(Error::InvalidParameter("mc_samples must be at least 1".into()));
        }
        if self.p_grid < 2 || self.q_grid < 2 {
            return Err(Error::InvalidParameter("grid resolutions must be at least 2".into()));
        }
        Ok(())
    }
}

/// Mean and standard error of a Monte Carlo average.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub se: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientEstimate {
    pub mean: Gradient,
    pub se: Gradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridValue {
    pub p: f64,
    pub q: f64,
    pub value: f64,
    pub se: f64,
}

/// Exhaustive grid search result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOptimum {
    pub x: Decision,
    pub value: f64,
    pub se: f64,
    pub table: Vec<GridValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StablePointResult {
    pub x_ps: Decision,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityEstimate {
    pub epsilon_hat: f64,
    /// Standard error of the ratio attaining the maximum.
    pub se: f64,
    /// `(p₁, p₂, Ŵ₁/|p₁ − p₂|)` for every pair.
    pub ratios: Vec<(f64, f64, f64)>,
}

/// Moments of `min(D, q)` over the common noise sample.
#[derive(Debug, Clone, Copy)]
struct Sales {
    mean: f64,
    var: f64,
}

/// Common-random-number evaluator for one demand law at fixed features.
#[derive(Debug, Clone)]
pub struct Oracle {
    model: DemandModel,
    params: NewsvendorParams,
    kind: ProfitKind,
    z: Vec<f64>,
    cfg: OracleConfig,
    /// Sorted noise draws.
    noise: Vec<f64>,
    /// A sample value subtracted before accumulating, so that degenerate
    /// noise gives exactly zero spread.
    pivot: f64,
    cum: Vec<f64>,
    cum2: Vec<f64>,
}

impl Oracle {
    pub fn new(
        model: &DemandModel,
        params: &NewsvendorParams,
        z: &[f64],
        kind: ProfitKind,
        cfg: &OracleConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        model.validate()?;
        params.validate()?;
        model.location(params.p_bounds.lo, z)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut noise = (0..cfg.mc_samples)
            .map(|_| model.draw_noise(z, &mut rng))
            .collect::<Result<Vec<f64>>>()?;
        noise.sort_by(f64::total_cmp);
        let pivot = noise[noise.len() / 2];
        let mut cum = Vec::with_capacity(noise.len() + 1);
        let mut cum2 = Vec::with_capacity(noise.len() + 1);
        cum.push(0.0);
        cum2.push(0.0);
        for e in &noise {
            let d = e - pivot;
            cum.push(cum.last().unwrap() + d);
            cum2.push(cum2.last().unwrap() + d * d);
        }
        Ok(Self {
            model: model.clone(),
            params: params.clone(),
            kind,
            z: z.to_vec(),
            cfg: *cfg,
            noise,
            pivot,
            cum,
            cum2,
        })
    }

    pub fn with_kind(mut self, kind: ProfitKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn kind(&self) -> ProfitKind {
        self.kind
    }

    pub fn params(&self) -> &NewsvendorParams {
        &self.params
    }

    pub fn config(&self) -> &OracleConfig {
        &self.cfg
    }

    pub fn features(&self) -> &[f64] {
        &self.z
    }

    pub fn location(&self, p: f64) -> f64 {
        self.model
            .location(p, &self.z)
            .expect("features checked at construction")
    }

    fn m(&self) -> f64 {
        self.noise.len() as f64
    }

    /// Sorted demand sample at price `p`.
    pub fn demand_samples(&self, p: f64) -> Vec<f64> {
        let mu = self.location(p);
        self.noise.iter().map(|e| (mu + e).max(0.0)).collect()
    }

    /// Moments of `min(max(0, μ + e), q)` for `q ≥ 0`.
    fn sales(&self, mu: f64, q: f64) -> Sales {
        let q = q.max(0.0);
        let n = self.noise.len();
        let lo = self.noise.partition_point(|e| mu + e <= 0.0);
        let hi = self.noise.partition_point(|e| mu + e < q).max(lo);
        let (n0, n1, n2) = (lo as f64, (hi - lo) as f64, (n - hi) as f64);
        let s1 = self.cum[hi] - self.cum[lo];
        let s2 = self.cum2[hi] - self.cum2[lo];
        let base = mu + self.pivot;
        let mid_mean = if hi > lo { base + s1 / n1 } else { 0.0 };
        let mean = (n1 * mid_mean + n2 * q) / self.m();
        let within = if hi > lo { (s2 - s1 * s1 / n1).max(0.0) } else { 0.0 };
        // between-group spread, pairwise so that a single group contributes exactly zero
        let groups = [(n0, 0.0), (n1, mid_mean), (n2, q)];
        let mut between = 0.0;
        for i in 0..3 {
            for j in i + 1..3 {
                let (a, ma) = groups[i];
                let (b, mb) = groups[j];
                if a > 0.0 && b > 0.0 {
                    between += a * b * (ma - mb).powi(2);
                }
            }
        }
        between /= self.m();
        let var = if n > 1 {
            (within + between) / (self.m() - 1.0)
        } else {
            0.0
        };
        Sales { mean, var }
    }

    /// `E[min(D, q)]` at price `p`.
    pub fn expected_sales(&self, p: f64, q: f64) -> McEstimate {
        let s = self.sales(self.location(p), q);
        McEstimate {
            mean: s.mean,
            se: (s.var / self.m()).sqrt(),
        }
    }

    fn value_from_sales(&self, x: Decision, s: Sales) -> McEstimate {
        let params = &self.params;
        let margin = x.p - params.s;
        McEstimate {
            mean: margin * s.mean - (params.c - params.s) * x.q - self.kind.adjustment(params, x.p),
            se: margin.abs() * (s.var / self.m()).sqrt(),
        }
    }

    /// Expected profit under the true demand law at the decision's price.
    pub fn objective(&self, x: Decision) -> McEstimate {
        let x = self.kind.pin(x);
        self.value_from_sales(x, self.sales(self.location(x.p), x.q))
    }

    /// Expected profit of `x` when demand is drawn at the frozen price `p_frozen`.
    pub fn frozen_objective(&self, x: Decision, p_frozen: f64) -> McEstimate {
        let x = self.kind.pin(x);
        self.value_from_sales(x, self.sales(self.location(p_frozen), x.q))
    }

    /// Mean of the per-sample subgradients under the true law at `x`.
    pub fn expected_gradient(&self, x: Decision, rule: TieRule) -> GradientEstimate {
        let x = self.kind.pin(x);
        let params = &self.params;
        let mu = self.location(x.p);
        let s = self.sales(mu, x.q);
        let mut dp = s.mean;
        if matches!(self.kind.form, crate::approx::ProfitForm::Adjusted) {
            dp -= 2.0 * params.gamma * (x.p - params.p_tilde);
        }
        let se_dp = (s.var / self.m()).sqrt();
        let (dq, se_dq) = if self.kind.is_price_only() {
            (0.0, 0.0)
        } else {
            let count = match rule {
                TieRule::Lower if x.q > 0.0 => self.noise.partition_point(|e| mu + e < x.q),
                TieRule::Lower => 0,
                TieRule::Upper => self.noise.partition_point(|e| (mu + e).max(0.0) <= x.q),
            };
            let pr = count as f64 / self.m();
            let spread = if self.noise.len() > 1 {
                (pr * (1.0 - pr) / (self.m() - 1.0)).sqrt()
            } else {
                0.0
            };
            let margin = x.p - params.s;
            ((x.p - params.c) - margin * pr, margin.abs() * spread)
        };
        GradientEstimate {
            mean: Gradient::new(dp, dq),
            se: Gradient::new(se_dp, se_dq),
        }
    }

    /// Price and quantity axes of the search grid. The quantity axis
    /// collapses to the frozen value for price-only problems.
    pub fn grid_axes(&self) -> (Vec<f64>, Vec<f64>) {
        let ps = self.params.p_bounds.grid(self.cfg.p_grid);
        let qs = match self.kind.frozen_q {
            Some(q) => vec![q],
            None => self.params.q_bounds.grid(self.cfg.q_grid),
        };
        (ps, qs)
    }

    /// Largest spacing of the search grid.
    pub fn grid_step(&self) -> f64 {
        let dp = self.params.p_bounds.width() / (self.cfg.p_grid - 1) as f64;
        if self.kind.is_price_only() {
            dp
        } else {
            dp.max(self.params.q_bounds.width() / (self.cfg.q_grid - 1) as f64)
        }
    }

    /// Exhaustive evaluation of the true objective over the grid.
    ///
    /// Ties go to the first point in `(p, q)` order.
    pub fn grid_optimum(&self) -> GridOptimum {
        let (ps, qs) = self.grid_axes();
        let table: Vec<GridValue> = ps
            .par_iter()
            .flat_map_iter(|&p| {
                let qs = &qs;
                qs.iter().map(move |&q| {
                    let v = self.objective(Decision::new(p, q));
                    GridValue {
                        p,
                        q,
                        value: v.mean,
                        se: v.se,
                    }
                })
            })
            .collect();
        let best = argmax(&table, |g| g.value);
        let b = table[best];
        GridOptimum {
            x: Decision::new(b.p, b.q),
            value: b.value,
            se: b.se,
            table,
        }
    }

    /// Profit-maximizing quantity for the sampled law at price `p`: the
    /// empirical demand quantile at the critical fractile.
    pub fn best_quantity(&self, p: f64) -> f64 {
        if let Some(q) = self.kind.frozen_q {
            return q;
        }
        let params = &self.params;
        if p <= params.c {
            return params.q_bounds.lo;
        }
        let level = params.fractile(p);
        let n = self.noise.len();
        let k = ((level * n as f64).ceil() as usize).clamp(1, n) - 1;
        params.q_bounds.clamp((self.location(p) + self.noise[k]).max(0.0))
    }

    /// Near-continuous maximum: a fine price scan with the exact best
    /// quantity at each price, refined around the best scan point.
    pub fn optimum(&self) -> (Decision, McEstimate) {
        let bounds = self.params.p_bounds;
        let eval = |p: f64| {
            let x = Decision::new(p, self.best_quantity(p));
            (x, self.objective(x))
        };
        let scan = |lo: f64, hi: f64| {
            let pts = crate::model::Interval::new(lo, hi).grid(2001);
            let vals: Vec<(Decision, McEstimate)> = pts.par_iter().map(|&p| eval(p)).collect();
            let i = argmax(&vals, |v| v.1.mean);
            (vals[i], bounds.width() / 2000.0)
        };
        let ((x, v), step) = scan(bounds.lo, bounds.hi);
        let ((x2, v2), _) = scan(bounds.clamp(x.p - step), bounds.clamp(x.p + step));
        if v2.mean >= v.mean {
            (x2, v2)
        } else {
            (x, v)
        }
    }

    /// Relative optimality gap `(f* − f(x))/|f*|`.
    pub fn gap(&self, x: Decision, f_star: f64) -> f64 {
        (f_star - self.objective(x).mean) / f_star.abs()
    }

    /// Repeated argmax under the distribution frozen at the current iterate,
    /// started at the grid optimum.
    pub fn stable_point(&self) -> Result<StablePointResult> {
        const ROUNDS: usize = 100;
        let (ps, qs) = self.grid_axes();
        let mut x = self.grid_optimum().x;
        let mut visited = vec![x];
        for round in 1..=ROUNDS {
            let mu = self.location(x.p);
            let sales: Vec<Sales> = qs.iter().map(|&q| self.sales(mu, q)).collect();
            let mut best = (f64::NEG_INFINITY, x);
            for &p in &ps {
                for (&q, s) in qs.iter().zip(&sales) {
                    let v = self.value_from_sales(Decision::new(p, q), *s).mean;
                    if v > best.0 {
                        best = (v, Decision::new(p, q));
                    }
                }
            }
            let next = best.1;
            if next == x {
                return Ok(StablePointResult {
                    x_ps: x,
                    iterations: round,
                    residual: 0.0,
                });
            }
            if let Some(i) = visited.iter().position(|v| *v == next) {
                return Err(Error::StableCycle(visited[i..].iter().map(|d| (d.p, d.q)).collect()));
            }
            visited.push(next);
            let residual = next.distance(&x);
            x = next;
            if round == ROUNDS {
                return Ok(StablePointResult {
                    x_ps: x,
                    iterations: ROUNDS,
                    residual,
                });
            }
        }
        unreachable!()
    }

    /// Largest `Ŵ₁/|p₁ − p₂|` over the given price pairs.
    pub fn sensitivity(&self, pairs: &[(f64, f64)]) -> Result<SensitivityEstimate> {
        if pairs.is_empty() {
            return Err(Error::InvalidParameter("no price pairs".into()));
        }
        let mut ratios = Vec::with_capacity(pairs.len());
        let mut best = (f64::NEG_INFINITY, 0.0);
        for &(p1, p2) in pairs {
            if !(p1.is_finite() && p2.is_finite()) {
                return Err(Error::NonFinite("price pair"));
            }
            if p1 == p2 {
                return Err(Error::InvalidParameter(format!("coincident price pair ({p1}, {p2})")));
            }
            let (m1, m2) = (self.location(p1), self.location(p2));
            let gap = (p1 - p2).abs();
            let (mut s, mut s2) = (0.0, 0.0);
            for e in &self.noise {
                let d = ((m1 + e).max(0.0) - (m2 + e).max(0.0)).abs() / gap;
                s += d;
                s2 += d * d;
            }
            let ratio = s / self.m();
            let var = if self.noise.len() > 1 {
                ((s2 - s * s / self.m()) / (self.m() - 1.0)).max(0.0)
            } else {
                0.0
            };
            if ratio > best.0 {
                best = (ratio, (var / self.m()).sqrt());
            }
            ratios.push((p1, p2, ratio));
        }
        Ok(SensitivityEstimate {
            epsilon_hat: best.0,
            se: best.1,
            ratios,
        })
    }

    /// Demand levels spanning the sampled range, used by the Lipschitz scans.
    fn demand_levels(&self, n: usize) -> Vec<f64> {
        let top = self
            .demand_samples(self.params.p_bounds.lo)
            .last()
            .copied()
            .unwrap_or(0.0);
        crate::model::Interval::new(0.0, top.max(self.params.q_bounds.hi)).grid(n)
    }

    /// Max finite-difference ratio of the per-sample profit in the decision,
    /// `‖(Δ_p l/Δp, Δ_q l/Δq)‖` over grid cells and demand levels.
    pub fn profit_lipschitz(&self) -> f64 {
        let (ps, qs) = self.grid_axes();
        let levels = self.demand_levels(101);
        let kind = self.kind;
        let params = &self.params;
        let l = |p: f64, q: f64, d: f64| kind.profit(params, Decision::new(p, q), d).unwrap_or(f64::NAN);
        (0..ps.len() - 1)
            .into_par_iter()
            .map(|i| {
                let (p0, p1) = (ps[i], ps[i + 1]);
                let mut best = 0.0f64;
                for j in 0..qs.len() {
                    let q0 = qs[j];
                    let q1 = qs.get(j + 1).copied();
                    for &d in &levels {
                        let base = l(p0, q0, d);
                        let rp = (l(p1, q0, d) - base) / (p1 - p0);
                        let rq = q1.map_or(0.0, |q1| (l(p0, q1, d) - base) / (q1 - q0));
                        best = best.max(rp.hypot(rq));
                    }
                }
                best
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Max finite-difference ratio of the per-sample profit in the demand.
    pub fn demand_lipschitz(&self) -> f64 {
        self.demand_ratio(|o, x, d| o.kind.profit(&o.params, x, d).map(|v| vec![v]))
    }

    /// Max finite-difference ratio of the per-sample subgradient in the demand.
    pub fn gradient_demand_lipschitz(&self, rule: TieRule) -> f64 {
        self.demand_ratio(|o, x, d| o.kind.subgradient(&o.params, x, d, rule).map(|g| vec![g.dp, g.dq]))
    }

    fn demand_ratio<F>(&self, f: F) -> f64
    where
        F: Fn(&Self, Decision, f64) -> Result<Vec<f64>> + Sync,
    {
        let (ps, qs) = self.grid_axes();
        let levels = self.demand_levels(401);
        ps.par_iter()
            .map(|&p| {
                let mut best = 0.0f64;
                for &q in &qs {
                    let x = Decision::new(p, q);
                    let vals: Vec<Vec<f64>> = levels.iter().map(|&d| f(self, x, d).unwrap_or_default()).collect();
                    for k in 1..levels.len() {
                        let diff: f64 = vals[k]
                            .iter()
                            .zip(&vals[k - 1])
                            .map(|(a, b)| (a - b).powi(2))
                            .sum::<f64>()
                            .sqrt();
                        best = best.max(diff / (levels[k] - levels[k - 1]));
                    }
                }
                best
            })
            .reduce(|| 0.0, f64::max)
    }
}

fn argmax<T>(items: &[T], key: impl Fn(&T) -> f64) -> usize {
    let mut best = 0;
    for (i, it) in items.iter().enumerate() {
        if key(it) > key(&items[best]) {
            best = i;
        }
    }
    best
}

pub fn mc_true_objective(
    model: &DemandModel,
    params: &NewsvendorParams,
    x: Decision,
    z: &[f64],
    kind: ProfitKind,
    cfg: &OracleConfig,
) -> Result<McEstimate> {
    Ok(Oracle::new(model, params, z, kind, cfg)?.objective(x))
}

pub fn mc_expected_gradient(
    model: &DemandModel,
    params: &NewsvendorParams,
    x: Decision,
    z: &[f64],
    kind: ProfitKind,
    rule: TieRule,
    cfg: &OracleConfig,
) -> Result<GradientEstimate> {
    Ok(Oracle::new(model, params, z, kind, cfg)?.expected_gradient(x, rule))
}

pub fn grid_optimum(
    model: &DemandModel,
    params: &NewsvendorParams,
    z: &[f64],
    kind: ProfitKind,
    cfg: &OracleConfig,
) -> Result<GridOptimum> {
    Ok(Oracle::new(model, params, z, kind, cfg)?.grid_optimum())
}

pub fn stable_point(
    model: &DemandModel,
    params: &NewsvendorParams,
    z: &[f64],
    kind: ProfitKind,
    cfg: &OracleConfig,
) -> Result<StablePointResult> {
    Oracle::new(model, params, z, kind, cfg)?.stable_point()
}

pub fn estimate_sensitivity(
    model: &DemandModel,
    params: &NewsvendorParams,
    z: &[f64],
    pairs: &[(f64, f64)],
    cfg: &OracleConfig,
) -> Result<SensitivityEstimate> {
    Oracle::new(model, params, z, ProfitKind::PLAIN, cfg)?.sensitivity(pairs)
}

/// Consecutive pairs of an `n`-point grid over the price box.
pub fn adjacent_price_pairs(params: &NewsvendorParams, n: usize) -> Vec<(f64, f64)> {
    let g = params.p_bounds.grid(n);
    g.windows(2).map(|w| (w[0], w[1])).collect()
}

/// Smaller root of `4B²η² − 2Aη + 1 = 0`; requires `A ≥ 2B ≥ 0` and `A > 0`.
pub fn strongly_concave_step(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b >= 0.0 && a >= 2.0 * b) {
        return Err(Error::InvalidParameter(format!(
            "need A ≥ 2B ≥ 0 and A > 0, got A = {a}, B = {b}"
        )));
    }
    if b == 0.0 {
        return Ok(1.0 / (2.0 * a));
    }
    Ok((a - (a * a - 4.0 * b * b).max(0.0).sqrt()) / (4.0 * b * b))
}

/// `1 − 2ηA + 2η²B²`; the contraction factor squared when positive.
pub fn contraction_sq(a: f64, b: f64, eta: f64) -> f64 {
    1.0 - 2.0 * eta * a + 2.0 * eta * eta * b * b
}
