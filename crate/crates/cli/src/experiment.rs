//! Study designs shared by the subcommands and the acceptance suite.

use newsvendor::agd::default_start;
use newsvendor::baselines::{fit_linear_demand, solve_decision_independent, solve_pto, solve_pure_saa};
use newsvendor::datagen::{gen_dataset, gen_features};
use newsvendor::weights::{fit, select::select};
use newsvendor::{
    run_agd, AgdConfig, AgdTrace, ApproxProblem, Armijo, Dataset, Decision, DemandModel, NewsvendorParams, Oracle,
    OracleConfig, PricePolicy, ProfitKind, Space, StepRule, WeightFamily, WeightHyper, WeightModel,
};
use rayon::prelude::*;
use serde::Serialize;

/// Mixes `parts` into `base` with splitmix64 steps.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut x = base;
    for p in parts {
        x ^= p
            .wrapping_add(0x9e37_79b9_7f4a_7c15)
            .wrapping_add(x << 6)
            .wrapping_add(x >> 2);
        x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = x;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        x = z ^ (z >> 31);
    }
    x
}

pub struct Fitted {
    pub hyper: WeightHyper,
    pub model: WeightModel,
}

/// Fits `family`, searching the hyperparameter grid unless `explicit` is given.
pub fn fit_weights(
    data: &Dataset,
    family: WeightFamily,
    space: Space,
    explicit: Option<WeightHyper>,
    seed: u64,
) -> newsvendor::Result<Fitted> {
    let hyper = match explicit {
        Some(h) => h,
        None => select(data, family, space)?.hyper,
    };
    let model = fit(data, &hyper, space, seed)?;
    Ok(Fitted { hyper, model })
}

pub struct AgdRun {
    pub start: Decision,
    pub trace: AgdTrace,
}

/// AGD from the default start on the decision-dependent objective.
pub fn run_dependent(
    fitted: &Fitted,
    data: &Dataset,
    params: &NewsvendorParams,
    kind: ProfitKind,
    z: &[f64],
    agd: &AgdConfig,
) -> newsvendor::Result<AgdRun> {
    let prob = ApproxProblem::new(&fitted.model, data, params.clone(), kind, z)?;
    let start = default_start(&prob)?;
    let trace = run_agd(&prob, start, agd)?;
    Ok(AgdRun { start, trace })
}

/// Oracle plus its optimum for one feature vector.
pub struct Truth {
    pub oracle: Oracle,
    pub x_star: Decision,
    pub f_star: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Assessment {
    pub profit: f64,
    pub se: f64,
    pub gap: f64,
}

impl Truth {
    pub fn new(
        model: &DemandModel,
        params: &NewsvendorParams,
        z: &[f64],
        kind: ProfitKind,
        cfg: &OracleConfig,
    ) -> newsvendor::Result<Self> {
        let oracle = Oracle::new(model, params, z, kind, cfg)?;
        let (x_star, f) = oracle.optimum();
        Ok(Self {
            oracle,
            x_star,
            f_star: f.mean,
        })
    }

    pub fn assess(&self, x: Decision) -> Assessment {
        let v = self.oracle.objective(x);
        Assessment {
            profit: v.mean,
            se: v.se,
            gap: (self.f_star - v.mean) / self.f_star.abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub seed: u64,
    pub method: String,
    pub family: Option<WeightFamily>,
    pub decision_dependent: bool,
    pub p: f64,
    pub q: f64,
    pub true_profit: f64,
    pub stderr: f64,
    pub gap: f64,
    /// `(gap_indep − gap)/gap_indep` against the matched independent row.
    pub gap_reduction: Option<f64>,
    pub iterations: Option<usize>,
}

/// Settings common to the simulated study designs.
#[derive(Debug, Clone)]
pub struct SimDesign {
    pub model: DemandModel,
    pub params: NewsvendorParams,
    pub policy: PricePolicy,
    pub n: usize,
    pub z: Vec<f64>,
    pub kind: ProfitKind,
    pub agd: AgdConfig,
    pub oracle: OracleConfig,
}

impl SimDesign {
    pub fn dataset(&self, seed: u64) -> newsvendor::Result<Dataset> {
        gen_dataset(&self.model, self.n, &self.policy, seed)
    }

    pub fn truth(&self) -> newsvendor::Result<Truth> {
        Truth::new(&self.model, &self.params, &self.z, self.kind, &self.oracle)
    }
}

fn row(seed: u64, method: &str, family: Option<WeightFamily>, dep: bool, x: Decision, a: Assessment) -> CompareRow {
    CompareRow {
        seed,
        method: method.to_string(),
        family,
        decision_dependent: dep,
        p: x.p,
        q: x.q,
        true_profit: a.profit,
        stderr: a.se,
        gap: a.gap,
        gap_reduction: None,
        iterations: None,
    }
}

/// Every method of the comparison table on one simulated dataset.
///
/// `explicit` maps a family to fixed hyperparameters; other families are
/// grid-selected. Rows come in the order AGD×4, independent×4, SAA, PTO.
pub fn compare_seed(
    design: &SimDesign,
    truth: &Truth,
    explicit: &(dyn Fn(WeightFamily) -> Option<WeightHyper> + Sync),
    seed: u64,
) -> newsvendor::Result<Vec<CompareRow>> {
    let data = design.dataset(seed)?;
    let z = &design.z;
    let per_family: Vec<(CompareRow, CompareRow)> = WeightFamily::ALL
        .par_iter()
        .map(|&fam| -> newsvendor::Result<(CompareRow, CompareRow)> {
            let dep = fit_weights(&data, fam, Space::Joined, explicit(fam), seed)?;
            let run = run_dependent(&dep, &data, &design.params, design.kind, z, &design.agd)?;
            let x = run.trace.last();
            let mut d = row(seed, &format!("{fam}"), Some(fam), true, x, truth.assess(x));
            d.iterations = Some(run.trace.iterations());
            let indep = fit_weights(&data, fam, Space::FeaturesOnly, None, seed)?;
            let xi = solve_decision_independent(&indep.model, &data, &design.params, z)?;
            let i = row(seed, &format!("{fam}_indep"), Some(fam), false, xi, truth.assess(xi));
            d.gap_reduction = Some((i.gap - d.gap) / i.gap);
            Ok((d, i))
        })
        .collect::<newsvendor::Result<_>>()?;
    let (mut rows, indep): (Vec<_>, Vec<_>) = per_family.into_iter().unzip();
    rows.extend(indep);
    let saa = solve_pure_saa(&data, &design.params)?;
    rows.push(row(seed, "saa", None, false, saa, truth.assess(saa)));
    let pto = solve_pto(&fit_linear_demand(&data)?, &design.params, z)?.decision;
    rows.push(row(seed, "pto", None, false, pto, truth.assess(pto)));
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub design: &'static str,
    pub seed: u64,
    pub n: usize,
    pub draw: Option<usize>,
    pub alpha0: Option<f64>,
    pub sigma: Option<f64>,
    pub p: f64,
    pub q: f64,
    pub true_profit: f64,
    pub gap: f64,
    pub iterations: usize,
    pub stop_reason: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummaryRow {
    pub n: usize,
    pub alpha0: Option<f64>,
    pub sigma: Option<f64>,
    pub cells: usize,
    pub mean_profit: f64,
    pub mean_gap: f64,
    pub min_gap: f64,
    pub max_gap: f64,
    pub mean_iterations: f64,
}

fn sweep_row(design: &'static str, seed: u64, n: usize, trace: &AgdTrace, truth: &Truth) -> SweepRow {
    let x = trace.last();
    let a = truth.assess(x);
    SweepRow {
        design,
        seed,
        n,
        draw: None,
        alpha0: None,
        sigma: None,
        p: x.p,
        q: x.q,
        true_profit: a.profit,
        gap: a.gap,
        iterations: trace.iterations(),
        stop_reason: trace.stop_reason.as_str(),
    }
}

/// Sample-size design: kNN with fixed `k` at several `N`, each over `draws`
/// random feature vectors.
pub fn sample_size_sweep(
    design: &SimDesign,
    sizes: &[usize],
    draws: usize,
    feature_range: [f64; 2],
    k: usize,
    seed: u64,
) -> newsvendor::Result<Vec<SweepRow>> {
    let [lo, hi] = feature_range;
    let truths: Vec<(Vec<f64>, Truth)> = (0..draws)
        .into_par_iter()
        .map(|d| {
            let u = gen_features(1, derive_seed(seed, &[1, d as u64])).remove(0);
            let z: Vec<f64> = u.iter().map(|v| lo + (hi - lo) * v).collect();
            let truth = Truth::new(&design.model, &design.params, &z, design.kind, &design.oracle)?;
            Ok((z, truth))
        })
        .collect::<newsvendor::Result<_>>()?;
    let cells: Vec<(usize, usize)> = sizes.iter().flat_map(|&n| (0..draws).map(move |d| (n, d))).collect();
    cells
        .par_iter()
        .map(|&(n, d)| {
            let (z, truth) = &truths[d];
            let data = gen_dataset(
                &design.model,
                n,
                &design.policy,
                derive_seed(seed, &[2, d as u64, n as u64]),
            )?;
            let fitted = fit_weights(
                &data,
                WeightFamily::Knn,
                Space::Joined,
                Some(WeightHyper::Knn { k: k.min(n) }),
                seed,
            )?;
            let run = run_dependent(&fitted, &data, &design.params, design.kind, z, &design.agd)?;
            let mut r = sweep_row("sample_size", seed, n, &run.trace, truth);
            r.draw = Some(d);
            Ok(r)
        })
        .collect()
}

/// Armijo `(α₀, σ)` grid on one dataset and one fitted weight model.
pub fn step_grid_sweep(
    design: &SimDesign,
    fitted_family: WeightFamily,
    explicit: Option<WeightHyper>,
    base: Armijo,
    alphas: &[f64],
    sigmas: &[f64],
    seed: u64,
) -> newsvendor::Result<Vec<SweepRow>> {
    let data = design.dataset(seed)?;
    let truth = design.truth()?;
    let fitted = fit_weights(&data, fitted_family, Space::Joined, explicit, seed)?;
    let cells: Vec<(f64, f64)> = alphas
        .iter()
        .flat_map(|&a| sigmas.iter().map(move |&s| (a, s)))
        .collect();
    cells
        .par_iter()
        .map(|&(alpha0, sigma)| {
            let agd = AgdConfig {
                step: StepRule::Armijo(Armijo { alpha0, sigma, ..base }),
                ..design.agd
            };
            let run = run_dependent(&fitted, &data, &design.params, design.kind, &design.z, &agd)?;
            let mut r = sweep_row("step_grid", seed, design.n, &run.trace, &truth);
            r.alpha0 = Some(alpha0);
            r.sigma = Some(sigma);
            Ok(r)
        })
        .collect()
}

/// Groups rows by `(n, α₀, σ)` in first-seen order.
pub fn summarize(rows: &[SweepRow]) -> Vec<SweepSummaryRow> {
    let key = |r: &SweepRow| (r.n, r.alpha0.map(f64::to_bits), r.sigma.map(f64::to_bits));
    let mut keys = Vec::new();
    for r in rows {
        if !keys.contains(&key(r)) {
            keys.push(key(r));
        }
    }
    keys.into_iter()
        .map(|k| {
            let group: Vec<&SweepRow> = rows.iter().filter(|r| key(r) == k).collect();
            let m = group.len() as f64;
            let gaps = group.iter().map(|r| r.gap);
            SweepSummaryRow {
                n: k.0,
                alpha0: group[0].alpha0,
                sigma: group[0].sigma,
                cells: group.len(),
                mean_profit: group.iter().map(|r| r.true_profit).sum::<f64>() / m,
                mean_gap: gaps.clone().sum::<f64>() / m,
                min_gap: gaps.clone().fold(f64::INFINITY, f64::min),
                max_gap: gaps.fold(f64::NEG_INFINITY, f64::max),
                mean_iterations: group.iter().map(|r| r.iterations as f64).sum::<f64>() / m,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationRow {
    pub row: usize,
    pub p_hist: f64,
    pub p_dependent: f64,
    pub q_dependent: f64,
    /// `|p − p_hist| / |p_hist|`
    pub deviation_dependent: f64,
    pub p_independent: f64,
    pub q_independent: f64,
    pub deviation_independent: f64,
}

/// Prices chosen for every held-out row's features, against the price that was charged.
pub fn deviation_table(
    dep: &Fitted,
    indep: &Fitted,
    train: &Dataset,
    test: &Dataset,
    params: &NewsvendorParams,
    kind: ProfitKind,
    agd: &AgdConfig,
) -> newsvendor::Result<Vec<DeviationRow>> {
    test.samples()
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let run = run_dependent(dep, train, params, kind, &s.features, agd)?;
            let x = run.trace.last();
            let xi = solve_decision_independent(&indep.model, train, params, &s.features)?;
            let dev = |p: f64| (p - s.price).abs() / s.price.abs();
            Ok(DeviationRow {
                row: i,
                p_hist: s.price,
                p_dependent: x.p,
                q_dependent: x.q,
                deviation_dependent: dev(x.p),
                p_independent: xi.p,
                q_independent: xi.q,
                deviation_independent: dev(xi.p),
            })
        })
        .collect()
}
