//! The five subcommands. Each writes its files under the output directory
//! and returns their paths.

use std::time::Instant;

use anyhow::Context;
use newsvendor::datagen::{load_dataset, load_real_csv, write_dataset_csv, DroppedRow, REAL_FEATURES};
use newsvendor::{
    Dataset, Decision, DemandModel, NewsvendorParams, PricePolicy, ProfitKind, Scaling, Space, WeightFamily,
    WeightHyper,
};
use serde::Serialize;

use crate::config::{usage, ExperimentConfig, Source, SweepKind};
use crate::experiment::{
    compare_seed, deviation_table, fit_weights, run_dependent, sample_size_sweep, step_grid_sweep, summarize,
    SimDesign, Truth,
};
use crate::output::Written;

#[derive(Serialize)]
struct Timing<'a> {
    command: &'a str,
    wall_seconds: f64,
}

fn finish(cfg: &ExperimentConfig, command: &str, start: Instant, mut written: Written) -> anyhow::Result<Written> {
    let timing = Timing {
        command,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    written.json(cfg.out_dir().join("timing.json"), &timing)?;
    Ok(written)
}

fn dataset_bytes(data: &Dataset, scaled: bool) -> anyhow::Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_dataset_csv(data, &mut buf, scaled)?;
    Ok(buf)
}

fn simulated_design(cfg: &ExperimentConfig) -> anyhow::Result<SimDesign> {
    Ok(SimDesign {
        model: cfg.model(),
        params: cfg.params()?,
        policy: cfg.policy(),
        n: cfg.data.n,
        z: cfg.simulated_features(),
        kind: cfg.kind(),
        agd: cfg.agd.config(cfg.seed()?)?,
        oracle: cfg.oracle,
    })
}

fn require_simulated(cfg: &ExperimentConfig, command: &str) -> anyhow::Result<()> {
    if cfg.data.source != Source::Simulated {
        return Err(usage(format!(
            "`{command}` needs a simulated source; true profits are unknown for files"
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct Provenance<'a> {
    config_hash: String,
    seed: u64,
    n: usize,
    scaled: bool,
    model: &'a DemandModel,
    policy: PricePolicy,
    economics: &'a NewsvendorParams,
}

pub fn cmd_simulate(cfg: &ExperimentConfig) -> anyhow::Result<Written> {
    let start = Instant::now();
    cfg.validate()?;
    require_simulated(cfg, "simulate")?;
    let design = simulated_design(cfg)?;
    let seed = cfg.seed()?;
    let data = design.dataset(seed)?;
    let out = cfg.out_dir();
    let mut w = Written::default();
    w.bytes(out.join("dataset.csv"), &dataset_bytes(&data, cfg.scaled)?)?;
    let prov = Provenance {
        config_hash: cfg.hash(),
        seed,
        n: design.n,
        scaled: cfg.scaled,
        model: &design.model,
        policy: design.policy,
        economics: &design.params,
    };
    w.json(out.join("provenance.json"), &prov)?;
    finish(cfg, "simulate", start, w)
}

#[derive(Serialize)]
struct TraceRow {
    iter: usize,
    p: f64,
    q: f64,
    objective: f64,
    step: f64,
    grad_p: f64,
    grad_q: f64,
}

#[derive(Serialize)]
pub struct SolveSummary {
    pub config_hash: String,
    pub seed: u64,
    pub source: Source,
    pub family: WeightFamily,
    pub hyper: WeightHyper,
    pub kind: ProfitKind,
    pub start: Decision,
    pub decision: Decision,
    pub approx_objective: f64,
    pub iterations: usize,
    pub stop_reason: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub true_profit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub true_profit_stderr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimum: Option<Decision>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimal_profit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
}

/// Training data, optional test data and query features for `solve`.
fn solve_inputs(cfg: &ExperimentConfig) -> anyhow::Result<(Dataset, Option<Dataset>, Vec<f64>)> {
    match cfg.data.source {
        Source::Simulated => {
            let data = simulated_design(cfg)?.dataset(cfg.seed()?)?;
            Ok((data, None, cfg.simulated_features()))
        }
        Source::File => {
            let path = cfg.data_path().expect("validated");
            let train = load_dataset(&path).with_context(|| format!("loading {}", path.display()))?;
            let test = match cfg.test_path() {
                Some(t) => Some(
                    load_dataset(&t)
                        .with_context(|| format!("loading {}", t.display()))?
                        .with_scaling(train.scaling().clone())?,
                ),
                None => None,
            };
            let z = match &cfg.problem.features {
                Some(z) => z.clone(),
                None => {
                    let n = train.len() as f64;
                    (0..train.feature_dim())
                        .map(|j| train.samples().iter().map(|s| s.features[j]).sum::<f64>() / n)
                        .collect()
                }
            };
            Ok((train, test, z))
        }
    }
}

pub fn cmd_solve(cfg: &ExperimentConfig) -> anyhow::Result<Written> {
    let start = Instant::now();
    cfg.validate()?;
    let seed = cfg.seed()?;
    let params = cfg.params()?;
    let kind = cfg.kind();
    let agd = cfg.agd.config(seed)?;
    let (data, test, z) = solve_inputs(cfg)?;
    let family = cfg.weights.family;
    let fitted = fit_weights(&data, family, cfg.weights.space, cfg.weights.explicit(family), seed)?;
    let run = run_dependent(&fitted, &data, &params, kind, &z, &agd)?;
    let trace = &run.trace;
    let x = trace.last();
    let mut summary = SolveSummary {
        config_hash: cfg.hash(),
        seed,
        source: cfg.data.source,
        family,
        hyper: fitted.hyper.clone(),
        kind,
        start: run.start,
        decision: x,
        approx_objective: trace.final_objective(),
        iterations: trace.iterations(),
        stop_reason: trace.stop_reason.as_str(),
        true_profit: None,
        true_profit_stderr: None,
        optimum: None,
        optimal_profit: None,
        gap: None,
    };
    if cfg.data.source == Source::Simulated {
        let truth = Truth::new(&cfg.model(), &params, &z, kind, &cfg.oracle)?;
        let a = truth.assess(x);
        summary.true_profit = Some(a.profit);
        summary.true_profit_stderr = Some(a.se);
        summary.optimum = Some(truth.x_star);
        summary.optimal_profit = Some(truth.f_star);
        summary.gap = Some(a.gap);
    }
    let rows: Vec<TraceRow> = (0..trace.iterates.len())
        .map(|i| TraceRow {
            iter: i,
            p: trace.iterates[i].p,
            q: trace.iterates[i].q,
            objective: trace.objectives[i],
            step: trace.steps[i],
            grad_p: trace.gradients[i].dp,
            grad_q: trace.gradients[i].dq,
        })
        .collect();
    let out = cfg.out_dir();
    let mut w = Written::default();
    w.csv(out.join("trace.csv"), &rows)?;
    w.json(out.join("summary.json"), &summary)?;
    if let Some(test) = test {
        let indep = fit_weights(&data, family, Space::FeaturesOnly, None, seed)?;
        let table = deviation_table(&fitted, &indep, &data, &test, &params, kind, &agd)?;
        w.csv(out.join("deviation.csv"), &table)?;
    }
    finish(cfg, "solve", start, w)
}

pub fn cmd_compare(cfg: &ExperimentConfig) -> anyhow::Result<Written> {
    let start = Instant::now();
    cfg.validate()?;
    require_simulated(cfg, "compare")?;
    let design = simulated_design(cfg)?;
    if design.kind != ProfitKind::PLAIN {
        return Err(usage("`compare` uses the plain profit with a free order quantity"));
    }
    let truth = design.truth()?;
    let mut rows = Vec::new();
    let explicit = |f: WeightFamily| cfg.weights.explicit(f);
    for seed in cfg.replicate_seeds()? {
        rows.extend(compare_seed(&design, &truth, &explicit, seed)?);
    }
    let out = cfg.out_dir();
    let mut w = Written::default();
    w.csv(out.join("compare.csv"), &rows)?;
    #[derive(Serialize)]
    struct Optimum {
        config_hash: String,
        optimum: Decision,
        optimal_profit: f64,
    }
    w.json(
        out.join("optimum.json"),
        &Optimum {
            config_hash: cfg.hash(),
            optimum: truth.x_star,
            optimal_profit: truth.f_star,
        },
    )?;
    finish(cfg, "compare", start, w)
}

pub fn cmd_sweep(cfg: &ExperimentConfig) -> anyhow::Result<Written> {
    let start = Instant::now();
    cfg.validate()?;
    require_simulated(cfg, "sweep")?;
    let design = simulated_design(cfg)?;
    let s = &cfg.sweep;
    let mut rows = Vec::new();
    for seed in cfg.replicate_seeds()? {
        rows.extend(match s.kind {
            SweepKind::SampleSize => sample_size_sweep(&design, &s.sizes, s.draws, s.feature_range, s.k, seed)?,
            SweepKind::StepGrid => {
                let family = cfg.weights.family;
                step_grid_sweep(
                    &design,
                    family,
                    cfg.weights.explicit(family),
                    cfg.agd.armijo(),
                    &s.alphas,
                    &s.sigmas,
                    seed,
                )?
            }
        });
    }
    let out = cfg.out_dir();
    let mut w = Written::default();
    w.csv(out.join("sweep.csv"), &rows)?;
    w.csv(out.join("sweep_summary.csv"), &summarize(&rows))?;
    finish(cfg, "sweep", start, w)
}

#[derive(Serialize)]
pub struct Manifest<'a> {
    pub config_hash: String,
    pub input: String,
    pub feature_names: [&'static str; 6],
    pub train_rows: usize,
    pub test_rows: usize,
    pub dropped_rows: usize,
    pub dropped: &'a [DroppedRow],
    pub scaled: bool,
    pub scaling: &'a Scaling,
    pub train_dates: &'a [String],
    pub test_dates: &'a [String],
}

pub fn cmd_ingest(cfg: &ExperimentConfig) -> anyhow::Result<Written> {
    let start = Instant::now();
    let input = cfg.ingest_input().ok_or_else(|| usage("`ingest` needs ingest.input"))?;
    if !input.exists() {
        return Err(usage(format!("input {} does not exist", input.display())));
    }
    let split = load_real_csv(&input).with_context(|| format!("ingesting {}", input.display()))?;
    if !split.dropped.is_empty() {
        eprintln!(
            "warning: dropped {} unusable row(s) from {}",
            split.dropped.len(),
            input.display()
        );
        for d in &split.dropped {
            eprintln!("  line {}: {}", d.line, d.reason);
        }
    }
    let out = cfg.out_dir();
    let mut w = Written::default();
    w.bytes(out.join("train.csv"), &dataset_bytes(&split.train, cfg.scaled)?)?;
    w.bytes(out.join("test.csv"), &dataset_bytes(&split.test, cfg.scaled)?)?;
    let manifest = Manifest {
        config_hash: cfg.hash(),
        input: cfg
            .ingest
            .input
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_default(),
        feature_names: REAL_FEATURES,
        train_rows: split.train.len(),
        test_rows: split.test.len(),
        dropped_rows: split.dropped.len(),
        dropped: &split.dropped,
        scaled: cfg.scaled,
        scaling: split.train.scaling(),
        train_dates: &split.train_dates,
        test_dates: &split.test_dates,
    };
    w.json(out.join("manifest.json"), &manifest)?;
    finish(cfg, "ingest", start, w)
}
