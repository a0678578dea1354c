//! Run configuration: a flat TOML key-value file, every key overridable from
//! the command line.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::calendar::YearMonth;
use crate::cohort::SelectionCriteria;
use crate::counterfactual::{GbdtParams, MaxFeatures, ModelParams, RfParams};
use crate::heterogeneity::{BootstrapConfig, NoiseMode, RepresentativeRule};
use crate::report::TableFormat;
use crate::seed::derive_labeled;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    #[default]
    Gbdt,
    Rf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Event-log files (JSON lines).
    pub events: Vec<PathBuf>,
    pub profiles: PathBuf,
    pub languages: PathBuf,
    pub output: PathBuf,
    pub seed: u64,

    /// Year whose stable teams train the counterfactual models.
    pub reference_year: i32,
    /// Year whose stable teams are exposed to the shock.
    pub target_year: i32,
    /// Last month before the shock; platform forecasts start after it.
    pub shock_boundary: YearMonth,
    /// Outcome months (of the year after each cohort year).
    pub months: Vec<u32>,
    /// First month of the platform series.
    pub series_start: Option<YearMonth>,

    pub min_active_members: u32,
    pub require_push_by_year_end: bool,

    pub model: ModelKind,
    /// Also train and report the other model family.
    pub compare_models: bool,
    pub test_fraction: f64,
    pub folds: usize,
    pub gbdt_n_trees: Vec<usize>,
    pub gbdt_learning_rate: Vec<f64>,
    pub gbdt_max_depth: Vec<usize>,
    pub gbdt_min_samples_leaf: Vec<usize>,
    pub rf_n_trees: Vec<usize>,
    /// 0 means unlimited depth.
    pub rf_max_depth: Vec<usize>,
    pub rf_max_features: Vec<String>,
    pub rf_min_samples_leaf: Vec<usize>,

    /// Conformal miscoverage.
    pub alpha: f64,
    pub cluster_threshold: f64,
    pub representative: RepresentativeRule,
    pub bootstrap_iterations: usize,
    pub bootstrap_level: f64,
    pub bootstrap_noise: NoiseMode,
    /// Format of the report tables.
    pub table_format: TableFormat,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            events: vec![PathBuf::from("events.jsonl")],
            profiles: PathBuf::from("profiles.csv"),
            languages: PathBuf::from("languages.csv"),
            output: PathBuf::from("out"),
            seed: 0,
            reference_year: 2018,
            target_year: 2019,
            shock_boundary: YearMonth { year: 2019, month: 12 },
            months: (1..=6).collect(),
            series_start: None,
            min_active_members: 3,
            require_push_by_year_end: true,
            model: ModelKind::Gbdt,
            compare_models: true,
            test_fraction: 0.2,
            folds: 5,
            gbdt_n_trees: vec![100, 300],
            gbdt_learning_rate: vec![0.05, 0.1],
            gbdt_max_depth: vec![3, 5, 7],
            gbdt_min_samples_leaf: vec![5, 20],
            rf_n_trees: vec![200],
            rf_max_depth: vec![0, 10],
            rf_max_features: vec!["all".into(), "sqrt".into()],
            rf_min_samples_leaf: vec![5],
            alpha: 0.05,
            cluster_threshold: 0.7,
            representative: RepresentativeRule::MostCentral,
            bootstrap_iterations: 1000,
            bootstrap_level: 0.95,
            bootstrap_noise: NoiseMode::PerObservation,
            table_format: TableFormat::Text,
        }
    }
}

fn parse_max_features(s: &str) -> Result<MaxFeatures, PipelineError> {
    match s {
        "all" => Ok(MaxFeatures::All),
        "sqrt" => Ok(MaxFeatures::Sqrt),
        n => n
            .parse::<usize>()
            .ok()
            .filter(|n| *n > 0)
            .map(MaxFeatures::Count)
            .ok_or_else(|| PipelineError::Config(format!("rf_max_features entry {n:?} (expected all, sqrt or a count)"))),
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<PipelineConfig, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    /// Reads a config file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<PipelineConfig, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.events.iter_mut().for_each(fix);
        fix(&mut self.profiles);
        fix(&mut self.languages);
        fix(&mut self.output);
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.target_year <= self.reference_year {
            return bad(format!("target_year {} must be after reference_year {}", self.target_year, self.reference_year));
        }
        if self.months.is_empty() || self.months.iter().any(|m| !(1..=12).contains(m)) {
            return bad(format!("months {:?} must be a non-empty subset of 1..=12", self.months));
        }
        let mut m = self.months.clone();
        m.sort_unstable();
        m.dedup();
        if m.len() != self.months.len() {
            return bad("months must not repeat".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha {} must lie in (0, 1)", self.alpha));
        }
        if !(self.bootstrap_level > 0.0 && self.bootstrap_level < 1.0) {
            return bad(format!("bootstrap_level {} must lie in (0, 1)", self.bootstrap_level));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return bad(format!("test_fraction {} must lie in (0, 1)", self.test_fraction));
        }
        if !(0.0..1.0).contains(&self.cluster_threshold) {
            return bad(format!("cluster_threshold {} must lie in [0, 1)", self.cluster_threshold));
        }
        if self.folds < 2 {
            return bad("folds must be >= 2".into());
        }
        if self.bootstrap_iterations == 0 {
            return bad("bootstrap_iterations must be >= 1".into());
        }
        if self.events.is_empty() {
            return bad("at least one events file is required".into());
        }
        self.selection(self.reference_year).validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        if self.grid(ModelKind::Gbdt)?.is_empty() || self.grid(ModelKind::Rf)?.is_empty() {
            return bad("model grids must be non-empty".into());
        }
        Ok(())
    }

    pub fn selection(&self, year: i32) -> SelectionCriteria {
        SelectionCriteria {
            year,
            min_active_members_per_quarter: self.min_active_members,
            require_push_by_year_end: self.require_push_by_year_end,
        }
    }

    /// Cartesian grid for one model family, in config order.
    pub fn grid(&self, kind: ModelKind) -> Result<Vec<ModelParams>, PipelineError> {
        let mut g = Vec::new();
        match kind {
            ModelKind::Gbdt => {
                for &n_trees in &self.gbdt_n_trees {
                    for &learning_rate in &self.gbdt_learning_rate {
                        if !(learning_rate > 0.0 && learning_rate <= 1.0) {
                            return Err(PipelineError::Config(format!("gbdt_learning_rate {learning_rate}")));
                        }
                        for &depth in &self.gbdt_max_depth {
                            for &min_samples_leaf in &self.gbdt_min_samples_leaf {
                                g.push(ModelParams::Gbdt(GbdtParams {
                                    n_trees,
                                    learning_rate,
                                    max_depth: (depth > 0).then_some(depth),
                                    min_samples_leaf,
                                    ..Default::default()
                                }));
                            }
                        }
                    }
                }
            }
            ModelKind::Rf => {
                let seed = derive_labeled(self.seed, "rf");
                for &n_trees in &self.rf_n_trees {
                    for &depth in &self.rf_max_depth {
                        for mf in &self.rf_max_features {
                            let max_features = parse_max_features(mf)?;
                            for &min_samples_leaf in &self.rf_min_samples_leaf {
                                g.push(ModelParams::Rf(RfParams {
                                    n_trees,
                                    max_depth: (depth > 0).then_some(depth),
                                    min_samples_leaf,
                                    max_features,
                                    bootstrap: true,
                                    seed,
                                }));
                            }
                        }
                    }
                }
            }
        }
        Ok(g)
    }

    pub fn bootstrap(&self, seed: u64) -> BootstrapConfig {
        BootstrapConfig { iterations: self.bootstrap_iterations, seed, level: self.bootstrap_level, noise: self.bootstrap_noise }
    }
}
