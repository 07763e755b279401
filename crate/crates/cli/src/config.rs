//! Experiment configuration files.

use std::path::{Path, PathBuf};

use anyhow::Context;
use newsvendor::datagen::FEATURE_DIM;
use newsvendor::{
    AgdConfig, Armijo, DemandModel, NewsvendorParams, OracleConfig, PricePolicy, ProfitForm, ProfitKind, Space,
    StepRule, WeightFamily, WeightHyper,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// A configuration problem the user has to fix; the binary exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    #[default]
    Simulated,
    File,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    #[default]
    Complex,
    Linear,
}

impl ModelName {
    pub fn model(self) -> DemandModel {
        match self {
            ModelName::Complex => DemandModel::complex(),
            ModelName::Linear => DemandModel::linear(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub source: Source,
    pub model: ModelName,
    pub n: usize,
    /// Dataset CSV for `source = "file"`.
    pub path: Option<PathBuf>,
    /// Held-out rows used for the price deviation table.
    pub test_path: Option<PathBuf>,
    /// Historical price policy; defaults to the model's own.
    pub policy: Option<PricePolicy>,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            source: Source::Simulated,
            model: ModelName::Complex,
            n: 2000,
            path: None,
            test_path: None,
            policy: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    pub form: ProfitForm,
    pub frozen_q: Option<f64>,
    /// Query features; simulated runs default to `0.5` in every coordinate.
    pub features: Option<Vec<f64>>,
}

/// Weight family and either explicit hyperparameters or grid selection.
///
/// A family is fitted with explicit values when all of its parameters are
/// given (`n_estimators` falls back to 50); otherwise the grid is searched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightsConfig {
    pub family: WeightFamily,
    pub space: Space,
    pub k: Option<usize>,
    pub h: Option<f64>,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: Option<usize>,
    pub n_estimators: Option<usize>,
}

impl Default for WeightsConfig {
    fn default() -> Self {
        Self {
            family: WeightFamily::Kernel,
            space: Space::Joined,
            k: None,
            h: None,
            max_depth: None,
            min_samples_leaf: None,
            n_estimators: None,
        }
    }
}

impl WeightsConfig {
    /// Explicit hyperparameters for `family`, or `None` for grid selection.
    pub fn explicit(&self, family: WeightFamily) -> Option<WeightHyper> {
        match family {
            WeightFamily::Knn => self.k.map(|k| WeightHyper::Knn { k }),
            WeightFamily::Kernel => self.h.map(|h| WeightHyper::Kernel { h }),
            WeightFamily::Cart => Some(WeightHyper::Cart {
                max_depth: self.max_depth?,
                min_samples_leaf: self.min_samples_leaf?,
            }),
            WeightFamily::Forest => Some(WeightHyper::Forest {
                max_depth: self.max_depth?,
                min_samples_leaf: self.min_samples_leaf?,
                n_estimators: self
                    .n_estimators
                    .unwrap_or(newsvendor::weights::select::DEFAULT_ESTIMATORS),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepName {
    #[default]
    Armijo,
    Diminishing,
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgdSection {
    pub step: StepName,
    pub alpha0: f64,
    pub beta: f64,
    pub sigma: f64,
    pub eps: f64,
    /// Constant of the diminishing rule `c / (r + 1)`.
    pub c: f64,
    pub eta: Option<f64>,
    pub max_iters: usize,
    pub grad_tol: f64,
}

impl Default for AgdSection {
    fn default() -> Self {
        let a = Armijo::default();
        let d = AgdConfig::default();
        Self {
            step: StepName::Armijo,
            alpha0: a.alpha0,
            beta: a.beta,
            sigma: a.sigma,
            eps: a.eps,
            c: 0.05,
            eta: None,
            max_iters: d.max_iters,
            grad_tol: d.grad_tol,
        }
    }
}

impl AgdSection {
    pub fn armijo(&self) -> Armijo {
        Armijo {
            alpha0: self.alpha0,
            beta: self.beta,
            sigma: self.sigma,
            eps: self.eps,
        }
    }

    pub fn rule(&self) -> anyhow::Result<StepRule> {
        Ok(match self.step {
            StepName::Armijo => StepRule::Armijo(self.armijo()),
            StepName::Diminishing => StepRule::Diminishing { c: self.c },
            StepName::Constant => StepRule::Constant {
                eta: self.eta.ok_or_else(|| usage("step = \"constant\" needs `eta`"))?,
            },
        })
    }

    pub fn config(&self, seed: u64) -> anyhow::Result<AgdConfig> {
        let cfg = AgdConfig {
            step: self.rule()?,
            max_iters: self.max_iters,
            grad_tol: self.grad_tol,
            seed,
        };
        cfg.validate().map_err(|e| usage(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    #[default]
    SampleSize,
    StepGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub kind: SweepKind,
    pub sizes: Vec<usize>,
    pub draws: usize,
    /// Features of each draw are uniform on this interval in every coordinate.
    pub feature_range: [f64; 2],
    /// Neighbour count of the sample-size design.
    pub k: usize,
    pub alphas: Vec<f64>,
    pub sigmas: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            kind: SweepKind::SampleSize,
            sizes: vec![100, 200, 500, 1000, 2000, 5000],
            draws: 5,
            feature_range: [0.2, 0.8],
            k: 20,
            alphas: vec![0.01, 0.05, 0.1, 0.5, 1.0],
            sigmas: vec![0.0, 0.1, 0.2, 0.5, 0.9],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    /// Raw electricity CSV.
    pub input: Option<PathBuf>,
}

/// One run's configuration, as read from TOML and adjusted by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Defaults to the first of `seeds`.
    pub seed: Option<u64>,
    /// Replicate seeds for `compare` and `sweep`; defaults to `[seed]`.
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Write prices and features mapped to `[0, 1]`.
    #[serde(default)]
    pub scaled: bool,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub economics: Option<NewsvendorParams>,
    #[serde(default)]
    pub problem: ProblemConfig,
    #[serde(default)]
    pub weights: WeightsConfig,
    #[serde(default)]
    pub agd: AgdSection,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub ingest: IngestConfig,
    /// Directory of the config file.
    #[serde(skip)]
    pub base: PathBuf,
}

/// Scalar fields that flags may override.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub n: Option<usize>,
    pub max_iters: Option<usize>,
    pub family: Option<WeightFamily>,
    pub scaled: bool,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        toml::from_str(text).map_err(|e| usage(format!("invalid config: {e}")))
    }

    /// Reads a config file; relative paths inside it are taken relative to its directory.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg = Self::parse(&text)?;
        cfg.base = path.parent().unwrap_or(Path::new("")).to_path_buf();
        Ok(cfg)
    }

    /// `path` as seen from the working directory.
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_relative() {
            self.base.join(path)
        } else {
            path.to_path_buf()
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = Some(s);
        }
        if let Some(out) = &o.out {
            let cwd = std::env::current_dir().unwrap_or_default();
            self.out = Some(if out.is_relative() { cwd.join(out) } else { out.clone() });
        }
        if let Some(n) = o.n {
            self.data.n = n;
        }
        if let Some(m) = o.max_iters {
            self.agd.max_iters = m;
        }
        if let Some(f) = o.family {
            self.weights.family = f;
        }
        self.scaled |= o.scaled;
    }

    pub fn seed(&self) -> anyhow::Result<u64> {
        self.seed
            .or_else(|| self.seeds.as_ref().and_then(|s| s.first().copied()))
            .ok_or_else(|| usage("no seed given; set `seed` or `seeds` in the config or pass --seed"))
    }

    pub fn replicate_seeds(&self) -> anyhow::Result<Vec<u64>> {
        match &self.seeds {
            Some(s) if s.is_empty() => Err(usage("`seeds` must not be empty")),
            Some(s) => Ok(s.clone()),
            None => Ok(vec![self.seed()?]),
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        match &self.out {
            Some(o) => self.resolve(o),
            None => PathBuf::from("."),
        }
    }

    pub fn data_path(&self) -> Option<PathBuf> {
        self.data.path.as_deref().map(|p| self.resolve(p))
    }

    pub fn test_path(&self) -> Option<PathBuf> {
        self.data.test_path.as_deref().map(|p| self.resolve(p))
    }

    pub fn ingest_input(&self) -> Option<PathBuf> {
        self.ingest.input.as_deref().map(|p| self.resolve(p))
    }

    pub fn model(&self) -> DemandModel {
        self.data.model.model()
    }

    pub fn params(&self) -> anyhow::Result<NewsvendorParams> {
        let params = match (&self.economics, self.data.source) {
            (Some(p), _) => p.clone(),
            (None, Source::Simulated) => self.model().default_params(),
            (None, Source::File) => return Err(usage("file sources need an [economics] section")),
        };
        params.validate().map_err(|e| usage(e.to_string()))?;
        Ok(params)
    }

    pub fn policy(&self) -> PricePolicy {
        self.data.policy.unwrap_or_else(|| self.model().default_policy())
    }

    pub fn kind(&self) -> ProfitKind {
        ProfitKind {
            form: self.problem.form,
            frozen_q: self.problem.frozen_q,
        }
    }

    pub fn simulated_features(&self) -> Vec<f64> {
        self.problem.features.clone().unwrap_or_else(|| vec![0.5; FEATURE_DIM])
    }

    /// Checks everything that does not need data on disk.
    pub fn validate(&self) -> anyhow::Result<()> {
        self.seed()?;
        if self.data.source == Source::Simulated && self.data.n == 0 {
            return Err(usage("data.n must be at least 1"));
        }
        if self.data.source == Source::File {
            let path = self.data_path().ok_or_else(|| usage("file sources need data.path"))?;
            if !path.exists() {
                return Err(usage(format!("dataset {} does not exist", path.display())));
            }
            if let Some(t) = self.test_path() {
                if !t.exists() {
                    return Err(usage(format!("test dataset {} does not exist", t.display())));
                }
            }
        }
        if let Some(p) = self.data.policy {
            p.validate().map_err(|e| usage(e.to_string()))?;
        }
        self.params()?;
        self.agd.config(0)?;
        self.oracle.validate().map_err(|e| usage(e.to_string()))?;
        if let Some(z) = &self.problem.features {
            if z.iter().any(|v| !v.is_finite()) {
                return Err(usage("problem.features must be finite"));
            }
        }
        let s = &self.sweep;
        if s.sizes.contains(&0) || s.draws == 0 || s.k == 0 {
            return Err(usage("sweep sizes, draws and k must be positive"));
        }
        if !matches!(
            s.feature_range[0].partial_cmp(&s.feature_range[1]),
            Some(std::cmp::Ordering::Less | std::cmp::Ordering::Equal)
        ) {
            return Err(usage("sweep.feature_range must be increasing"));
        }
        Ok(())
    }

    /// SHA-256 of the effective configuration's JSON form, without the
    /// output directory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        let json = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_defaults() {
        let cfg = ExperimentConfig::parse("seed = 3").unwrap();
        assert_eq!(cfg.seed().unwrap(), 3);
        assert_eq!(cfg.data.n, 2000);
        assert_eq!(cfg.weights.family, WeightFamily::Kernel);
        assert_eq!(cfg.agd.max_iters, 500);
        assert_eq!(cfg.oracle, OracleConfig::default());
        assert_eq!(cfg.replicate_seeds().unwrap(), vec![3]);
        cfg.validate().unwrap();
    }

    #[test]
    fn missing_seed_is_a_usage_error() {
        let cfg = ExperimentConfig::parse("").unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(err.downcast_ref::<UsageError>().is_some());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::parse("seed = 1\nsede = 2").is_err());
        assert!(ExperimentConfig::parse("seed = 1\n[data]\nsize = 2").is_err());
    }

    #[test]
    fn zero_sizes_are_rejected() {
        let mut cfg = ExperimentConfig::parse("seed = 1\n[data]\nn = 0").unwrap();
        assert!(cfg.validate().is_err());
        cfg.data.n = 5;
        cfg.agd.max_iters = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn explicit_hyper_needs_every_field() {
        let w = WeightsConfig {
            max_depth: Some(4),
            ..WeightsConfig::default()
        };
        assert_eq!(w.explicit(WeightFamily::Cart), None);
        assert_eq!(w.explicit(WeightFamily::Kernel), None);
        let w = WeightsConfig {
            min_samples_leaf: Some(5),
            ..w
        };
        assert_eq!(
            w.explicit(WeightFamily::Forest),
            Some(WeightHyper::Forest {
                max_depth: 4,
                min_samples_leaf: 5,
                n_estimators: 50
            })
        );
    }

    #[test]
    fn overrides_change_the_hash() {
        let mut cfg = ExperimentConfig::parse("seed = 1").unwrap();
        let h = cfg.hash();
        assert_eq!(h, cfg.clone().hash());
        cfg.apply(&Overrides {
            seed: Some(2),
            ..Overrides::default()
        });
        assert_ne!(h, cfg.hash());
        assert_eq!(h.len(), 64);
        let h2 = cfg.hash();
        cfg.out = Some(PathBuf::from("elsewhere"));
        assert_eq!(h2, cfg.hash());
    }

    #[test]
    fn sections_parse() {
        let text = r#"
            seed = 9
            seeds = [1, 2]
            [data]
            model = "linear"
            n = 50
            policy = { policy = "uniform", lo = 7.0, hi = 30.0 }
            [economics]
            c = 5.0
            s = 1.0
            p_bounds = { lo = 6.0, hi = 30.0 }
            q_bounds = { lo = 0.0, hi = 100.0 }
            [problem]
            form = "adjusted"
            frozen_q = 60.0
            [weights]
            family = "knn"
            k = 7
            [agd]
            step = "diminishing"
            c = 0.1
            [oracle]
            mc_samples = 100
            [sweep]
            kind = "step_grid"
        "#;
        let cfg = ExperimentConfig::parse(text).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.model().name(), "linear");
        assert_eq!(cfg.params().unwrap().c, 5.0);
        assert_eq!(cfg.kind().frozen_q, Some(60.0));
        assert_eq!(cfg.weights.explicit(WeightFamily::Knn), Some(WeightHyper::Knn { k: 7 }));
        assert_eq!(cfg.agd.rule().unwrap(), StepRule::Diminishing { c: 0.1 });
        assert_eq!(cfg.oracle.mc_samples, 100);
        assert_eq!(cfg.oracle.p_grid, 201);
        assert_eq!(cfg.sweep.kind, SweepKind::StepGrid);
        assert_eq!(cfg.replicate_seeds().unwrap(), vec![1, 2]);
    }
}
