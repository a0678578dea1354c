//! In-memory stage computations. The file-based stages and the acceptance
//! harness both go through these functions.

use std::collections::HashMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::config::{ModelKind, PipelineConfig};
use super::PipelineError;
use crate::calendar::{Quarter, YearMonth};
use crate::cohort::{self, feature_names, month_counts, FeatureTable};
use crate::counterfactual::{
    evaluate, kfold_tune, train_test_split, BaselineEval, DesignMatrix, EvalReport, ModelFile, ModelParams, Outcome,
    TuneResult,
};
use crate::effects::{
    compute_ite, conformal_interval, residual_distribution_report, ConformalInterval, DistributionReport, IteRecord,
};
use crate::event::{read_languages, read_profiles, scan_files, Corpus, LanguageTable, ProfileTable, ScanReport};
use crate::heterogeneity::{
    bootstrap_regress, cluster_features, design_with_intercept, multi_month_report, spearman_matrix, standardize, vif,
    BootstrapReport, ClusterSelection, ConsistencyTable, CorrelationMatrix,
};
use crate::seed::derive_labeled;
use crate::timeseries::{aggregate_all, forecast_with_intervals, overall_effect, Forecast, GapRow, MonthlySeries, StlParams};

fn fail<E: std::fmt::Display>(stage: &'static str) -> impl Fn(E) -> PipelineError {
    move |e| PipelineError::Stage { stage, message: e.to_string() }
}

/// Parsed inputs of a run.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub corpus: Corpus,
    pub profiles: ProfileTable,
    pub languages: LanguageTable,
}

impl Inputs {
    pub fn load(events: &[PathBuf], profiles: &std::path::Path, languages: &std::path::Path) -> Result<(Inputs, ScanReport), PipelineError> {
        let (ev, report) = scan_files(events, |_| true).map_err(fail("ingest"))?;
        let open = |p: &std::path::Path| std::fs::File::open(p).map_err(|e| PipelineError::Stage { stage: "ingest", message: format!("{}: {e}", p.display()) });
        let profiles = read_profiles(open(profiles)?).map_err(fail("ingest"))?;
        let languages = read_languages(open(languages)?).map_err(fail("ingest"))?;
        Ok((Inputs { corpus: Corpus::from_events(&ev), profiles, languages }, report))
    }
}

// ---------------------------------------------------------------- platform

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricForecast {
    pub metric: String,
    pub forecast: Forecast,
    pub gaps: Vec<GapRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformOutput {
    pub series: Vec<MonthlySeries>,
    pub forecasts: Vec<MetricForecast>,
}

/// Monthly platform series from the first configured (or observed) month
/// through the later of the last event and the shock boundary.
pub fn aggregate(inputs: &Inputs, cfg: &PipelineConfig) -> Result<Vec<MonthlySeries>, PipelineError> {
    let (lo, hi) = inputs.corpus.time_span().ok_or_else(|| fail("aggregate")("no events"))?;
    let first = cfg.series_start.unwrap_or_else(|| YearMonth::of_timestamp(lo));
    let last = YearMonth::of_timestamp(hi).max(cfg.shock_boundary);
    aggregate_all(&inputs.corpus, first, last).map_err(fail("aggregate"))
}

/// Forecasts each series past the shock boundary and compares with the
/// observed months after it (up to 12; 6 forecast months when none observed).
pub fn forecast(series: &[MonthlySeries], cfg: &PipelineConfig) -> Result<Vec<MetricForecast>, PipelineError> {
    let stl = StlParams::default();
    let mut out = Vec::new();
    for s in series {
        let Some(last) = s.end_month() else { return Err(fail("forecast")(format!("{} is empty", s.metric.name()))) };
        if cfg.shock_boundary < s.start_month || cfg.shock_boundary > last {
            return Err(fail("forecast")(format!("shock boundary {} outside series {}..{last}", cfg.shock_boundary, s.start_month)));
        }
        let observed_after = cfg.shock_boundary.months_until(last).clamp(0, 12) as usize;
        let horizon = if observed_after > 0 { observed_after } else { 6 };
        let history = s.window(s.start_month, cfg.shock_boundary);
        let forecast = forecast_with_intervals(&history, horizon, &[80.0, 95.0], &stl)
            .map_err(|e| fail("forecast")(format!("{}: {e}", s.metric.name())))?;
        let gaps = if observed_after > 0 {
            let after = s.window(cfg.shock_boundary.plus(1), cfg.shock_boundary.plus(horizon as i64));
            overall_effect(&after.values, &forecast).map_err(fail("forecast"))?
        } else {
            Vec::new()
        };
        out.push(MetricForecast { metric: s.metric.name().to_string(), forecast, gaps });
    }
    Ok(out)
}

pub fn platform(inputs: &Inputs, cfg: &PipelineConfig) -> Result<PlatformOutput, PipelineError> {
    let series = aggregate(inputs, cfg)?;
    let forecasts = forecast(&series, cfg)?;
    Ok(PlatformOutput { series, forecasts })
}

// ---------------------------------------------------------------- cohorts

/// Observed outcomes of one repo-month, with the same month a year earlier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRow {
    pub repo_id: String,
    pub month: u32,
    pub productivity: f64,
    pub team_size: f64,
    /// Missing when the repo had no events on record by the end of that month.
    pub prior_productivity: Option<f64>,
    pub prior_team_size: Option<f64>,
}

impl OutcomeRow {
    pub fn value(&self, outcome: Outcome) -> f64 {
        match outcome {
            Outcome::Productivity => self.productivity,
            Outcome::TeamSize => self.team_size,
        }
    }

    pub fn prior(&self, outcome: Outcome) -> Option<f64> {
        match outcome {
            Outcome::Productivity => self.prior_productivity,
            Outcome::TeamSize => self.prior_team_size,
        }
    }
}

/// Stable teams of one year with complete Q4 features and next-year outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    pub year: i32,
    pub selected: Vec<String>,
    /// Selected repos dropped for missing features.
    pub dropped: Vec<String>,
    pub features: FeatureTable,
    pub outcomes: Vec<OutcomeRow>,
}

impl Cohort {
    /// A cohort read back from its feature and outcome tables.
    pub fn from_parts(year: i32, features: FeatureTable, outcomes: Vec<OutcomeRow>) -> Cohort {
        Cohort { year, selected: features.repo_ids(), dropped: Vec::new(), features, outcomes }
    }

    pub fn repo_ids(&self) -> Vec<String> {
        self.features.repo_ids()
    }

    pub fn design(&self) -> Result<DesignMatrix, PipelineError> {
        let names: Vec<String> = feature_names().into_iter().map(String::from).collect();
        let rows = self.features.rows.iter().map(|r| r.model_values()).collect();
        DesignMatrix::new(names, rows).map_err(fail("features"))
    }

    fn rows_for(&self, month: u32) -> Result<Vec<&OutcomeRow>, PipelineError> {
        let by_repo: HashMap<&str, &OutcomeRow> =
            self.outcomes.iter().filter(|o| o.month == month).map(|o| (o.repo_id.as_str(), o)).collect();
        self.features
            .rows
            .iter()
            .map(|r| by_repo.get(r.repo_id.as_str()).copied().ok_or_else(|| fail("features")(format!("no month-{month} outcome for {}", r.repo_id))))
            .collect()
    }

    /// Outcome values aligned with the feature rows.
    pub fn outcome_column(&self, outcome: Outcome, month: u32) -> Result<Vec<f64>, PipelineError> {
        Ok(self.rows_for(month)?.iter().map(|o| o.value(outcome)).collect())
    }

    pub fn prior_column(&self, outcome: Outcome, month: u32) -> Result<Vec<Option<f64>>, PipelineError> {
        Ok(self.rows_for(month)?.iter().map(|o| o.prior(outcome)).collect())
    }
}

pub fn select(inputs: &Inputs, cfg: &PipelineConfig, year: i32) -> Result<Vec<u32>, PipelineError> {
    cohort::select_teams(&inputs.corpus, &cfg.selection(year)).map_err(fail("select"))
}

pub fn build_cohort(inputs: &Inputs, cfg: &PipelineConfig, year: i32, repos: &[u32]) -> Result<Cohort, PipelineError> {
    let c = &inputs.corpus;
    let quarter = Quarter { year, q: 4 };
    let all = FeatureTable::new(cohort::extract_all(c, repos, quarter, &inputs.profiles, &inputs.languages));
    let dropped = all.rows.iter().filter(|r| !r.is_complete()).map(|r| r.repo_id.clone()).collect();
    let features = all.complete();
    let mut outcomes = Vec::new();
    for r in &features.rows {
        let repo = c.repo_index(&r.repo_id).ok_or_else(|| fail("features")(format!("unknown repo {}", r.repo_id)))?;
        let first_ts = c.repo_events(repo).first().map(|e| e.ts);
        for &m in &cfg.months {
            let now = month_counts(c, repo, YearMonth { year: year + 1, month: m });
            let prior_month = YearMonth { year, month: m };
            let existed = first_ts.is_some_and(|t| t < prior_month.end_ts());
            let prior = existed.then(|| month_counts(c, repo, prior_month));
            outcomes.push(OutcomeRow {
                repo_id: r.repo_id.clone(),
                month: m,
                productivity: now.log_pushes(),
                team_size: now.log_members(),
                prior_productivity: prior.map(|p| p.log_pushes()),
                prior_team_size: prior.map(|p| p.log_members()),
            });
        }
    }
    Ok(Cohort {
        year,
        selected: repos.iter().map(|&r| c.repo_name(r).to_string()).collect(),
        dropped,
        features,
        outcomes,
    })
}

// ---------------------------------------------------------------- models

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub repo_id: String,
    pub month: u32,
    pub outcome: Outcome,
    pub observed: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFit {
    pub outcome: Outcome,
    pub month: u32,
    pub kind: ModelKind,
    pub tune: TuneResult,
    pub file: ModelFile,
    pub eval: EvalReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutput {
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    /// Counterfactual models first, then comparison models.
    pub fits: Vec<ModelFit>,
    pub baselines: Vec<BaselineEval>,
    /// Counterfactual model on the held-out reference rows.
    pub test_predictions: Vec<Prediction>,
}

impl TrainOutput {
    pub fn model(&self, kind: ModelKind, outcome: Outcome, month: u32) -> Option<&ModelFit> {
        self.fits.iter().find(|f| f.kind == kind && f.outcome == outcome && f.month == month)
    }

    /// Every evaluation, Table-1 style: models then baseline per outcome and month.
    pub fn evals(&self) -> Vec<EvalReport> {
        let mut out: Vec<EvalReport> = self.fits.iter().map(|f| f.eval.clone()).collect();
        out.extend(self.baselines.iter().map(|b| b.report.clone()));
        out
    }
}

fn tune_or_take(x: &DesignMatrix, y: &[f64], grid: &[ModelParams], k: usize, seed: u64) -> Result<TuneResult, PipelineError> {
    if grid.len() == 1 {
        return Ok(TuneResult { best: grid[0], best_index: 0, cv_mse: Vec::new() });
    }
    kfold_tune(x, y, grid, k, seed).map_err(fail("train"))
}

/// Tunes, fits and evaluates one model per (outcome, month) on the reference cohort.
pub fn train(reference: &Cohort, cfg: &PipelineConfig) -> Result<TrainOutput, PipelineError> {
    let x = reference.design()?;
    let n = x.n_rows();
    if n < 2 * cfg.folds.max(5) {
        return Err(fail("train")(format!("reference cohort has only {n} complete teams")));
    }
    let (train_idx, test_idx) = train_test_split(n, cfg.test_fraction, derive_labeled(cfg.seed, "split"));
    let ids = reference.repo_ids();
    let pick = |idx: &[usize], v: &[f64]| idx.iter().map(|&i| v[i]).collect::<Vec<f64>>();
    let (x_train, x_test) = (x.select_rows(&train_idx), x.select_rows(&test_idx));
    let mut kinds = vec![cfg.model];
    if cfg.compare_models {
        kinds.push(match cfg.model {
            ModelKind::Gbdt => ModelKind::Rf,
            ModelKind::Rf => ModelKind::Gbdt,
        });
    }
    let mut fits = Vec::new();
    let mut compare = Vec::new();
    let mut baselines = Vec::new();
    let mut test_predictions = Vec::new();
    for outcome in Outcome::ALL {
        for &month in &cfg.months {
            let y = reference.outcome_column(outcome, month)?;
            let (y_train, y_test) = (pick(&train_idx, &y), pick(&test_idx, &y));
            for (ki, &kind) in kinds.iter().enumerate() {
                let grid = cfg.grid(kind)?;
                let label = format!("tune/{}/{}/{month}", kind_tag(kind), outcome.as_str());
                let tune = tune_or_take(&x_train, &y_train, &grid, cfg.folds, derive_labeled(cfg.seed, &label))?;
                let model = tune.best.fit(&x_train, &y_train).map_err(fail("train"))?;
                let mut eval = evaluate(&model, &x_test, &y_test).map_err(fail("train"))?;
                eval.outcome = Some(outcome);
                eval.month = Some(month);
                let mut file = ModelFile::new(x.names.clone(), model);
                file.outcome = Some(outcome);
                file.month = Some(month);
                file.params = Some(tune.best);
                if ki == 0 {
                    let pred = file.predict(&x_test).map_err(fail("train"))?;
                    for (j, &i) in test_idx.iter().enumerate() {
                        test_predictions.push(Prediction { repo_id: ids[i].clone(), month, outcome, observed: y[i], predicted: pred[j] });
                    }
                }
                let fit = ModelFit { outcome, month, kind, tune, file, eval };
                if ki == 0 {
                    fits.push(fit);
                } else {
                    compare.push(fit);
                }
            }
            let prior = reference.prior_column(outcome, month)?;
            let mut b = BaselineEval::evaluate(&pick_opt(&test_idx, &prior), &y_test).map_err(fail("train"))?;
            b.report.outcome = Some(outcome);
            b.report.month = Some(month);
            baselines.push(b);
        }
    }
    fits.extend(compare);
    Ok(TrainOutput {
        train_ids: train_idx.iter().map(|&i| ids[i].clone()).collect(),
        test_ids: test_idx.iter().map(|&i| ids[i].clone()).collect(),
        fits,
        baselines,
        test_predictions,
    })
}

fn pick_opt(idx: &[usize], v: &[Option<f64>]) -> Vec<Option<f64>> {
    idx.iter().map(|&i| v[i]).collect()
}

pub fn kind_tag(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::Gbdt => "gbdt",
        ModelKind::Rf => "rf",
    }
}

/// Counterfactual predictions for the target cohort.
pub fn predict(models: &[&ModelFile], target: &Cohort) -> Result<Vec<Prediction>, PipelineError> {
    let x = target.design()?;
    let ids = target.repo_ids();
    let mut out = Vec::new();
    for m in models {
        let (outcome, month) = match (m.outcome, m.month) {
            (Some(o), Some(mo)) => (o, mo),
            _ => return Err(fail("predict")("model file lacks outcome/month")),
        };
        let y = target.outcome_column(outcome, month)?;
        let pred = m.predict(&x).map_err(fail("predict"))?;
        for i in 0..ids.len() {
            out.push(Prediction { repo_id: ids[i].clone(), month, outcome, observed: y[i], predicted: pred[i] });
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------- effects

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectSummary {
    pub outcome: Outcome,
    pub month: u32,
    pub n_target: usize,
    /// Mean ITE.
    pub ate: f64,
    pub conformal: ConformalInterval,
    pub distribution: DistributionReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectsOutput {
    pub ites: Vec<IteRecord>,
    pub summaries: Vec<EffectSummary>,
}

impl EffectsOutput {
    pub fn summary(&self, outcome: Outcome, month: u32) -> Option<&EffectSummary> {
        self.summaries.iter().find(|s| s.outcome == outcome && s.month == month)
    }
}

fn slice<'a>(p: &'a [Prediction], outcome: Outcome, month: u32) -> Vec<&'a Prediction> {
    p.iter().filter(|r| r.outcome == outcome && r.month == month).collect()
}

pub fn effects(test: &[Prediction], target: &[Prediction], cfg: &PipelineConfig) -> Result<EffectsOutput, PipelineError> {
    let mut ites = Vec::new();
    let mut summaries = Vec::new();
    for outcome in Outcome::ALL {
        for &month in &cfg.months {
            let t = slice(target, outcome, month);
            let r = slice(test, outcome, month);
            let observed: Vec<(String, f64)> = t.iter().map(|p| (p.repo_id.clone(), p.observed)).collect();
            let predicted: Vec<(String, f64)> = t.iter().map(|p| (p.repo_id.clone(), p.predicted)).collect();
            let recs = compute_ite(&observed, &predicted, month, outcome).map_err(fail("effects"))?;
            let ite: Vec<f64> = recs.iter().map(|r| r.ite).collect();
            let test_y: Vec<f64> = r.iter().map(|p| p.observed).collect();
            let test_yhat: Vec<f64> = r.iter().map(|p| p.predicted).collect();
            let resid: Vec<f64> = test_y.iter().zip(&test_yhat).map(|(a, b)| a - b).collect();
            let conformal = conformal_interval(&resid, cfg.alpha).map_err(fail("effects"))?;
            let distribution =
                residual_distribution_report(&test_y, &test_yhat, &ite, month, outcome).map_err(fail("effects"))?;
            summaries.push(EffectSummary {
                outcome,
                month,
                n_target: ite.len(),
                ate: distribution.effects.mean,
                conformal,
                distribution,
            });
            ites.extend(recs);
        }
    }
    Ok(EffectsOutput { ites, summaries })
}

// ---------------------------------------------------------------- regression

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VifRow {
    pub feature: String,
    /// Infinite (null in JSON) under perfect collinearity.
    #[serde(with = "crate::effects::conformal::infinite_as_null")]
    pub vif: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthRegression {
    pub outcome: Outcome,
    pub month: u32,
    pub report: BootstrapReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionOutput {
    /// Features with a single value over the target cohort, left out of
    /// correlation and regression.
    pub constant: Vec<String>,
    pub correlation: CorrelationMatrix,
    pub clusters: ClusterSelection,
    pub vif: Vec<VifRow>,
    pub regressions: Vec<MonthRegression>,
    pub consistency: Vec<(Outcome, ConsistencyTable)>,
}

impl RegressionOutput {
    pub fn regression(&self, outcome: Outcome, month: u32) -> Option<&BootstrapReport> {
        self.regressions.iter().find(|r| r.outcome == outcome && r.month == month).map(|r| &r.report)
    }

    pub fn selected_names(&self) -> Vec<String> {
        self.clusters.selected().iter().map(|&i| self.correlation.names[i].clone()).collect()
    }
}

/// Clusters the target features, then bootstraps the ITE regressions on the
/// standardized representatives.
pub fn regress(
    target: &Cohort,
    test: &[Prediction],
    predictions: &[Prediction],
    fx: &EffectsOutput,
    cfg: &PipelineConfig,
) -> Result<RegressionOutput, PipelineError> {
    let names = feature_names();
    let matrix = target.features.model_matrix(&names).map_err(fail("regress"))?;
    let mut used = Vec::new();
    let mut constant = Vec::new();
    let mut columns = Vec::new();
    for (j, name) in names.iter().enumerate() {
        let col: Vec<f64> = matrix.iter().map(|r| r[j]).collect();
        if col.iter().all(|v| *v == col[0]) {
            constant.push(name.to_string());
        } else {
            used.push(name.to_string());
            columns.push(col);
        }
    }
    let correlation = spearman_matrix(&used, &columns).map_err(fail("regress"))?;
    let clusters = cluster_features(&correlation, cfg.cluster_threshold, cfg.representative);
    let selected = clusters.selected();
    let sel_names: Vec<String> = selected.iter().map(|&i| used[i].clone()).collect();
    let sel_cols = standardize(&selected.iter().map(|&i| columns[i].clone()).collect::<Vec<_>>());
    let vifs = vif(&sel_names, &sel_cols).map_err(fail("regress"))?;
    let (design_names, x) = design_with_intercept(&sel_names, &sel_cols).map_err(fail("regress"))?;
    let ids = target.repo_ids();
    let mut regressions = Vec::new();
    for outcome in Outcome::ALL {
        for &month in &cfg.months {
            let by_repo: HashMap<&str, &Prediction> =
                slice(predictions, outcome, month).into_iter().map(|p| (p.repo_id.as_str(), p)).collect();
            let rows: Vec<&Prediction> = ids
                .iter()
                .map(|id| by_repo.get(id.as_str()).copied().ok_or_else(|| fail("regress")(format!("no prediction for {id}"))))
                .collect::<Result<_, _>>()?;
            let y: Vec<f64> = rows.iter().map(|p| p.observed).collect();
            let yhat: Vec<f64> = rows.iter().map(|p| p.predicted).collect();
            let pool: Vec<f64> = slice(test, outcome, month).iter().map(|p| p.observed - p.predicted).collect();
            let d = fx.summary(outcome, month).map(|s| s.conformal.d).unwrap_or(f64::INFINITY);
            let seed = derive_labeled(cfg.seed, &format!("bootstrap/{}/{month}", outcome.as_str()));
            let report = bootstrap_regress(design_names.clone(), &x, &y, &yhat, &pool, d, &cfg.bootstrap(seed))
                .map_err(fail("regress"))?;
            regressions.push(MonthRegression { outcome, month, report });
        }
    }
    let consistency = Outcome::ALL
        .iter()
        .map(|&o| {
            let reps: Vec<(u32, &BootstrapReport)> =
                regressions.iter().filter(|r| r.outcome == o).map(|r| (r.month, &r.report)).collect();
            (o, multi_month_report(&reps, &cfg.months))
        })
        .collect();
    Ok(RegressionOutput {
        constant,
        correlation,
        vif: sel_names.iter().zip(vifs).map(|(f, v)| VifRow { feature: f.clone(), vif: v }).collect(),
        clusters,
        regressions,
        consistency,
    })
}

/// Everything after ingestion, computed in memory.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub reference: Cohort,
    pub target: Cohort,
    pub train: TrainOutput,
    pub predictions: Vec<Prediction>,
    pub effects: EffectsOutput,
    pub regression: Option<RegressionOutput>,
}

/// Runs select through regress. `with_regression = false` stops after the effects.
pub fn analyze(inputs: &Inputs, cfg: &PipelineConfig, with_regression: bool) -> Result<Analysis, PipelineError> {
    cfg.validate()?;
    let ref_repos = select(inputs, cfg, cfg.reference_year)?;
    let tgt_repos = select(inputs, cfg, cfg.target_year)?;
    let reference = build_cohort(inputs, cfg, cfg.reference_year, &ref_repos)?;
    let target = build_cohort(inputs, cfg, cfg.target_year, &tgt_repos)?;
    if target.features.rows.is_empty() {
        return Err(fail("features")("target cohort is empty"));
    }
    let train = train(&reference, cfg)?;
    let models: Vec<&ModelFile> = train.fits.iter().filter(|f| f.kind == cfg.model).map(|f| &f.file).collect();
    let predictions = predict(&models, &target)?;
    let effects = effects(&train.test_predictions, &predictions, cfg)?;
    let regression =
        if with_regression { Some(regress(&target, &train.test_predictions, &predictions, &effects, cfg)?) } else { None };
    Ok(Analysis { reference, target, train, predictions, effects, regression })
}
