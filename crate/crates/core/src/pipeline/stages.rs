//! File-based stages. Each stage reads what earlier stages wrote under the
//! output directory, so the CLI can run them one at a time; `run_pipeline`
//! chains them and writes `manifest.json`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::analysis::{self, Cohort, EffectsOutput, Inputs, MetricForecast, OutcomeRow, Prediction, RegressionOutput};
use super::config::PipelineConfig;
use super::PipelineError;
use crate::calendar::YearMonth;
use crate::cohort::{schema_json, FeatureTable};
use crate::counterfactual::{EvalReport, ModelFile, Outcome, MODEL_VERSION};
use crate::effects::IteRecord;
use crate::event::ScanReport;
use crate::heterogeneity::ConsistencyTable;
use crate::report::{
    bootstrap_table, consistency_table, eval_table, render_plot, render_table, sci, Plot, Table,
};
use crate::timeseries::{Metric, MonthlySeries};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_FORMAT: &str = "teamshock-manifest";

/// Stages in run order, as named in the manifest.
pub const STAGES: [&str; 9] = ["ingest", "timeseries", "select", "features", "train", "predict", "effects", "regress", "report"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileRole {
    /// Read, never written by this run.
    Input,
    Output,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    /// Relative to the output directory for outputs; as configured for inputs.
    pub path: String,
    pub role: FileRole,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub outputs: Vec<String>,
}

/// Everything needed to check or repeat a run. Contains no timestamps or
/// absolute output paths, so identical runs give identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub tool_version: String,
    pub model_format_version: u32,
    pub seed: u64,
    /// The run configuration with `output` replaced by ".".
    pub config: PipelineConfig,
    pub stages: Vec<StageRecord>,
    pub files: Vec<FileRecord>,
}

impl Manifest {
    pub fn file(&self, path: &str) -> Option<&FileRecord> {
        self.files.iter().find(|f| f.path == path)
    }

    pub fn stage(&self, name: &str) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.name == name)
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn digest_file(path: &Path) -> std::io::Result<(String, u64)> {
    let mut h = Sha256::new();
    let mut f = File::open(path)?;
    let n = std::io::copy(&mut f, &mut h)?;
    Ok((hex::encode(h.finalize()), n))
}

/// Run state shared by the stages: config, cached inputs and file ledger.
pub struct Context {
    pub cfg: PipelineConfig,
    inputs: Option<Inputs>,
    scan: Option<ScanReport>,
    files: BTreeMap<String, FileRecord>,
    stages: Vec<StageRecord>,
}

impl Context {
    /// Validates the config and creates the output directory.
    pub fn new(cfg: PipelineConfig) -> Result<Context, PipelineError> {
        cfg.validate()?;
        std::fs::create_dir_all(&cfg.output)
            .map_err(|e| PipelineError::stage("ingest", format!("{}: {e}", cfg.output.display())))?;
        Ok(Context { cfg, inputs: None, scan: None, files: BTreeMap::new(), stages: Vec::new() })
    }

    /// Uses already-parsed inputs instead of reading the configured files.
    pub fn with_inputs(cfg: PipelineConfig, inputs: Inputs) -> Result<Context, PipelineError> {
        let mut c = Context::new(cfg)?;
        c.inputs = Some(inputs);
        Ok(c)
    }

    pub fn out(&self, rel: &str) -> PathBuf {
        self.cfg.output.join(rel)
    }

    fn begin(&mut self, stage: &str) {
        self.stages.push(StageRecord { name: stage.to_string(), outputs: Vec::new() });
    }

    fn write(&mut self, stage: &'static str, rel: &str, bytes: &[u8]) -> Result<(), PipelineError> {
        let path = self.out(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| PipelineError::stage(stage, format!("{}: {e}", parent.display())))?;
        }
        std::fs::write(&path, bytes).map_err(|e| PipelineError::stage(stage, format!("{}: {e}", path.display())))?;
        self.files.insert(
            rel.to_string(),
            FileRecord { path: rel.to_string(), role: FileRole::Output, sha256: hex_digest(bytes), bytes: bytes.len() as u64 },
        );
        if let Some(s) = self.stages.last_mut() {
            s.outputs.push(rel.to_string());
        }
        Ok(())
    }

    fn write_json<T: Serialize + ?Sized>(&mut self, stage: &'static str, rel: &str, v: &T) -> Result<(), PipelineError> {
        let mut s = serde_json::to_string_pretty(v).map_err(|e| PipelineError::stage(stage, e))?;
        s.push('\n');
        self.write(stage, rel, s.as_bytes())
    }

    fn write_csv<T: Serialize>(&mut self, stage: &'static str, rel: &str, rows: &[T]) -> Result<(), PipelineError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r).map_err(|e| PipelineError::stage(stage, e))?;
        }
        let bytes = w.into_inner().map_err(|e| PipelineError::stage(stage, e))?;
        self.write(stage, rel, &bytes)
    }

    /// Reads a file under the output directory.
    fn read(&mut self, stage: &'static str, rel: &str) -> Result<Vec<u8>, PipelineError> {
        let path = self.out(rel);
        let bytes = std::fs::read(&path)
            .map_err(|e| PipelineError::stage(stage, format!("{} (run the earlier stages first): {e}", path.display())))?;
        self.files.entry(rel.to_string()).or_insert_with(|| FileRecord {
            path: rel.to_string(),
            role: FileRole::Input,
            sha256: hex_digest(&bytes),
            bytes: bytes.len() as u64,
        });
        Ok(bytes)
    }

    fn read_json<T: DeserializeOwned>(&mut self, stage: &'static str, rel: &str) -> Result<T, PipelineError> {
        let bytes = self.read(stage, rel)?;
        serde_json::from_slice(&bytes).map_err(|e| PipelineError::stage(stage, format!("{rel}: {e}")))
    }

    fn read_csv<T: DeserializeOwned>(&mut self, stage: &'static str, rel: &str) -> Result<Vec<T>, PipelineError> {
        let bytes = self.read(stage, rel)?;
        csv::Reader::from_reader(bytes.as_slice())
            .deserialize()
            .collect::<Result<Vec<T>, _>>()
            .map_err(|e| PipelineError::stage(stage, format!("{rel}: {e}")))
    }

    fn record_input(&mut self, path: &Path) -> Result<(), PipelineError> {
        let (sha256, bytes) = digest_file(path).map_err(|e| PipelineError::stage("ingest", format!("{}: {e}", path.display())))?;
        let key = path.display().to_string();
        self.files.insert(key.clone(), FileRecord { path: key, role: FileRole::Input, sha256, bytes });
        Ok(())
    }

    /// Parsed raw inputs, loaded on first use.
    pub fn inputs(&mut self) -> Result<&Inputs, PipelineError> {
        if self.inputs.is_none() {
            let cfg = &self.cfg;
            let (inputs, scan) = Inputs::load(&cfg.events, &cfg.profiles, &cfg.languages)?;
            let paths: Vec<PathBuf> = cfg.events.iter().chain([&cfg.profiles, &cfg.languages]).cloned().collect();
            for p in &paths {
                self.record_input(p)?;
            }
            self.inputs = Some(inputs);
            self.scan = Some(scan);
        }
        Ok(self.inputs.as_ref().expect("loaded above"))
    }

    pub fn manifest(&self) -> Manifest {
        Manifest {
            format: MANIFEST_FORMAT.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            model_format_version: MODEL_VERSION,
            seed: self.cfg.seed,
            config: PipelineConfig { output: PathBuf::from("."), ..self.cfg.clone() },
            stages: self.stages.clone(),
            files: self.files.values().cloned().collect(),
        }
    }

    pub fn write_manifest(&self) -> Result<Manifest, PipelineError> {
        let m = self.manifest();
        let mut s = serde_json::to_string_pretty(&m).map_err(|e| PipelineError::stage("report", e))?;
        s.push('\n');
        let path = self.out(MANIFEST_FILE);
        std::fs::write(&path, s).map_err(|e| PipelineError::stage("report", format!("{}: {e}", path.display())))?;
        Ok(m)
    }
}

// ---------------------------------------------------------------- file names

pub const INGEST_FILE: &str = "ingest.json";
pub const MONTHLY_FILE: &str = "monthly.csv";
pub const FORECAST_FILE: &str = "forecast.json";
pub const GAPS_FILE: &str = "gaps.csv";
pub const SELECTION_FILE: &str = "selection.json";
pub const FEATURE_SCHEMA_FILE: &str = "feature_schema.json";
pub const EVAL_FILE: &str = "eval.csv";
pub const TUNING_FILE: &str = "tuning.json";
pub const SPLIT_FILE: &str = "split.json";
pub const TEST_PREDICTIONS_FILE: &str = "test_predictions.csv";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const ITE_FILE: &str = "ite.csv";
pub const EFFECTS_FILE: &str = "effects.json";
pub const REGRESSION_FILE: &str = "regression.json";
pub const REGRESSION_CSV: &str = "regression.csv";
pub const VIF_FILE: &str = "vif.csv";

pub fn features_file(role: &str) -> String {
    format!("features_{role}.csv")
}

pub fn outcomes_file(role: &str) -> String {
    format!("outcomes_{role}.csv")
}

pub fn model_file(kind: &str, outcome: Outcome, month: u32) -> String {
    format!("models/{kind}_{}_m{month}.json", outcome.as_str())
}

fn roles(cfg: &PipelineConfig) -> [(&'static str, i32); 2] {
    [("reference", cfg.reference_year), ("target", cfg.target_year)]
}

// ---------------------------------------------------------------- stages

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub scan: ScanReport,
    pub repos: usize,
    pub actors: usize,
    pub first_month: Option<YearMonth>,
    pub last_month: Option<YearMonth>,
    pub profiles: usize,
    pub languages: usize,
}

pub fn ingest(ctx: &mut Context) -> Result<IngestSummary, PipelineError> {
    ctx.begin("ingest");
    let inputs = ctx.inputs()?;
    let span = inputs.corpus.time_span();
    let mut summary = IngestSummary {
        scan: ScanReport::default(),
        repos: inputs.corpus.n_repos(),
        actors: inputs.corpus.n_actors(),
        first_month: span.map(|(lo, _)| YearMonth::of_timestamp(lo)),
        last_month: span.map(|(_, hi)| YearMonth::of_timestamp(hi)),
        profiles: inputs.profiles.len(),
        languages: inputs.languages.len(),
    };
    summary.scan = ctx.scan.clone().unwrap_or_default();
    if summary.repos == 0 {
        return Err(PipelineError::stage("ingest", "no valid events"));
    }
    ctx.write_json("ingest", INGEST_FILE, &summary)?;
    Ok(summary)
}

fn monthly_csv(series: &[MonthlySeries]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["month".to_string()];
    header.extend(series.iter().map(|s| s.metric.name().to_string()));
    w.write_record(&header).expect("in-memory write");
    let n = series.first().map_or(0, |s| s.len());
    for i in 0..n {
        let mut rec = vec![series[0].month(i).to_string()];
        rec.extend(series.iter().map(|s| s.values[i].to_string()));
        w.write_record(&rec).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn parse_monthly(bytes: &[u8]) -> Result<Vec<MonthlySeries>, String> {
    let mut r = csv::Reader::from_reader(bytes);
    let header: Vec<String> = r.headers().map_err(|e| e.to_string())?.iter().map(String::from).collect();
    if header.first().map(String::as_str) != Some("month") {
        return Err("first column must be month".into());
    }
    let metrics: Vec<Metric> =
        header[1..].iter().map(|h| Metric::from_name(h).ok_or_else(|| format!("unknown metric {h}"))).collect::<Result<_, _>>()?;
    let mut start = None;
    let mut values = vec![Vec::new(); metrics.len()];
    for rec in r.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let m: YearMonth = rec[0].parse().map_err(|e: crate::calendar::CalendarError| e.to_string())?;
        let expected = start.map(|s: YearMonth| s.plus(values[0].len() as i64));
        if expected.is_some_and(|e| e != m) {
            return Err(format!("month {m} out of sequence"));
        }
        start.get_or_insert(m);
        for (j, v) in values.iter_mut().enumerate() {
            v.push(rec[j + 1].parse::<f64>().map_err(|e| format!("{m}: {e}"))?);
        }
    }
    let start = start.ok_or("no rows")?;
    Ok(metrics.into_iter().zip(values).map(|(metric, values)| MonthlySeries { metric, start_month: start, values }).collect())
}

pub fn aggregate(ctx: &mut Context) -> Result<Vec<MonthlySeries>, PipelineError> {
    let cfg = ctx.cfg.clone();
    let series = analysis::aggregate(ctx.inputs()?, &cfg)?;
    ctx.write("aggregate", MONTHLY_FILE, &monthly_csv(&series))?;
    Ok(series)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct GapCsvRow {
    metric: String,
    month: YearMonth,
    observed: f64,
    point: f64,
    lo80: f64,
    hi80: f64,
    lo95: f64,
    hi95: f64,
    gap: f64,
    flag: String,
}

pub fn forecast(ctx: &mut Context) -> Result<Vec<MetricForecast>, PipelineError> {
    let bytes = ctx.read("forecast", MONTHLY_FILE)?;
    let series = parse_monthly(&bytes).map_err(|e| PipelineError::stage("forecast", format!("{MONTHLY_FILE}: {e}")))?;
    let forecasts = analysis::forecast(&series, &ctx.cfg)?;
    ctx.write_json("forecast", FORECAST_FILE, &forecasts)?;
    let gaps: Vec<GapCsvRow> = forecasts
        .iter()
        .flat_map(|f| {
            f.gaps.iter().map(|g| GapCsvRow {
                metric: f.metric.clone(),
                month: g.month,
                observed: g.observed,
                point: g.point,
                lo80: g.lo80,
                hi80: g.hi80,
                lo95: g.lo95,
                hi95: g.hi95,
                gap: g.gap,
                flag: g.flag.as_str().into(),
            })
        })
        .collect();
    ctx.write_csv("forecast", GAPS_FILE, &gaps)?;
    Ok(forecasts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSelection {
    pub year: i32,
    pub repos: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub reference: CohortSelection,
    pub target: CohortSelection,
}

pub fn select(ctx: &mut Context) -> Result<Selection, PipelineError> {
    ctx.begin("select");
    let cfg = ctx.cfg.clone();
    let inputs = ctx.inputs()?;
    let pick = |year| -> Result<CohortSelection, PipelineError> {
        let ids = analysis::select(inputs, &cfg, year)?;
        Ok(CohortSelection { year, repos: ids.iter().map(|&r| inputs.corpus.repo_name(r).to_string()).collect() })
    };
    let sel = Selection { reference: pick(cfg.reference_year)?, target: pick(cfg.target_year)? };
    ctx.write_json("select", SELECTION_FILE, &sel)?;
    Ok(sel)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSummary {
    pub role: String,
    pub year: i32,
    pub selected: usize,
    pub complete: usize,
    pub dropped: Vec<String>,
}

pub fn features(ctx: &mut Context) -> Result<Vec<FeatureSummary>, PipelineError> {
    ctx.begin("features");
    let sel: Selection = ctx.read_json("features", SELECTION_FILE)?;
    let cfg = ctx.cfg.clone();
    let mut summaries = Vec::new();
    for ((role, year), chosen) in roles(&cfg).into_iter().zip([&sel.reference, &sel.target]) {
        let inputs = ctx.inputs()?;
        let ids: Vec<u32> = chosen
            .repos
            .iter()
            .map(|r| inputs.corpus.repo_index(r).ok_or_else(|| PipelineError::stage("features", format!("selected repo {r} not in events"))))
            .collect::<Result<_, _>>()?;
        let cohort = analysis::build_cohort(inputs, &cfg, year, &ids)?;
        let mut buf = Vec::new();
        cohort.features.write_csv(&mut buf).map_err(|e| PipelineError::stage("features", e))?;
        ctx.write("features", &features_file(role), &buf)?;
        ctx.write_csv("features", &outcomes_file(role), &cohort.outcomes)?;
        summaries.push(FeatureSummary {
            role: role.into(),
            year,
            selected: cohort.selected.len(),
            complete: cohort.features.rows.len(),
            dropped: cohort.dropped.clone(),
        });
    }
    ctx.write("features", FEATURE_SCHEMA_FILE, schema_json().as_bytes())?;
    ctx.write_json("features", "features_summary.json", &summaries)?;
    Ok(summaries)
}

fn load_cohort(ctx: &mut Context, stage: &'static str, role: &str, year: i32) -> Result<Cohort, PipelineError> {
    let bytes = ctx.read(stage, &features_file(role))?;
    let features = FeatureTable::read_csv(bytes.as_slice()).map_err(|e| PipelineError::stage(stage, e))?;
    let outcomes: Vec<OutcomeRow> = ctx.read_csv(stage, &outcomes_file(role))?;
    Ok(Cohort::from_parts(year, features, outcomes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TuningRecord {
    model: String,
    outcome: Outcome,
    month: u32,
    best_index: usize,
    best: crate::counterfactual::ModelParams,
    cv_mse: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Split {
    train: Vec<String>,
    test: Vec<String>,
}

pub fn train(ctx: &mut Context) -> Result<Vec<EvalReport>, PipelineError> {
    ctx.begin("train");
    let cfg = ctx.cfg.clone();
    let reference = load_cohort(ctx, "train", "reference", cfg.reference_year)?;
    let out = analysis::train(&reference, &cfg)?;
    for f in &out.fits {
        let rel = model_file(analysis::kind_tag(f.kind), f.outcome, f.month);
        ctx.write("train", &rel, f.file.to_json().as_bytes())?;
    }
    let tuning: Vec<TuningRecord> = out
        .fits
        .iter()
        .map(|f| TuningRecord {
            model: analysis::kind_tag(f.kind).into(),
            outcome: f.outcome,
            month: f.month,
            best_index: f.tune.best_index,
            best: f.tune.best,
            cv_mse: f.tune.cv_mse.clone(),
        })
        .collect();
    ctx.write_json("train", TUNING_FILE, &tuning)?;
    ctx.write_json("train", SPLIT_FILE, &Split { train: out.train_ids.clone(), test: out.test_ids.clone() })?;
    let evals = out.evals();
    ctx.write_csv("train", EVAL_FILE, &evals)?;
    ctx.write_csv("train", TEST_PREDICTIONS_FILE, &out.test_predictions)?;
    Ok(evals)
}

pub fn predict(ctx: &mut Context) -> Result<Vec<Prediction>, PipelineError> {
    ctx.begin("predict");
    let cfg = ctx.cfg.clone();
    let target = load_cohort(ctx, "predict", "target", cfg.target_year)?;
    let kind = analysis::kind_tag(cfg.model);
    let mut models = Vec::new();
    for outcome in Outcome::ALL {
        for &m in &cfg.months {
            let rel = model_file(kind, outcome, m);
            let bytes = ctx.read("predict", &rel)?;
            let text = String::from_utf8(bytes).map_err(|e| PipelineError::stage("predict", format!("{rel}: {e}")))?;
            models.push(ModelFile::from_json(&text).map_err(|e| PipelineError::stage("predict", format!("{rel}: {e}")))?);
        }
    }
    let refs: Vec<&ModelFile> = models.iter().collect();
    let preds = analysis::predict(&refs, &target)?;
    ctx.write_csv("predict", PREDICTIONS_FILE, &preds)?;
    Ok(preds)
}

pub fn effects(ctx: &mut Context) -> Result<EffectsOutput, PipelineError> {
    ctx.begin("effects");
    let test: Vec<Prediction> = ctx.read_csv("effects", TEST_PREDICTIONS_FILE)?;
    let target: Vec<Prediction> = ctx.read_csv("effects", PREDICTIONS_FILE)?;
    let fx = analysis::effects(&test, &target, &ctx.cfg)?;
    ctx.write_csv::<IteRecord>("effects", ITE_FILE, &fx.ites)?;
    ctx.write_json("effects", EFFECTS_FILE, &fx.summaries)?;
    Ok(fx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CoefficientRow {
    outcome: Outcome,
    month: u32,
    variable: String,
    median: f64,
    lower: f64,
    upper: f64,
    significant: bool,
}

pub fn regress(ctx: &mut Context) -> Result<RegressionOutput, PipelineError> {
    ctx.begin("regress");
    let cfg = ctx.cfg.clone();
    let target = load_cohort(ctx, "regress", "target", cfg.target_year)?;
    let test: Vec<Prediction> = ctx.read_csv("regress", TEST_PREDICTIONS_FILE)?;
    let preds: Vec<Prediction> = ctx.read_csv("regress", PREDICTIONS_FILE)?;
    let summaries = ctx.read_json("regress", EFFECTS_FILE)?;
    let fx = EffectsOutput { ites: Vec::new(), summaries };
    let reg = analysis::regress(&target, &test, &preds, &fx, &cfg)?;
    ctx.write_json("regress", REGRESSION_FILE, &reg)?;
    ctx.write_csv("regress", VIF_FILE, &reg.vif)?;
    let rows: Vec<CoefficientRow> = reg
        .regressions
        .iter()
        .flat_map(|r| {
            r.report.coefficients.iter().map(move |c| CoefficientRow {
                outcome: r.outcome,
                month: r.month,
                variable: c.name.clone(),
                median: c.median,
                lower: c.lower,
                upper: c.upper,
                significant: c.significant,
            })
        })
        .collect();
    ctx.write_csv("regress", REGRESSION_CSV, &rows)?;
    Ok(reg)
}

fn effects_table(summaries: &[analysis::EffectSummary]) -> Table {
    let mut t = Table::new(
        "Average effects and residual comparison",
        &["outcome", "month", "n", "ATE", "conformal d", "residual mean", "KS D", "KS p"],
    );
    for s in summaries {
        t.push(vec![
            s.outcome.as_str().into(),
            s.month.to_string(),
            s.n_target.to_string(),
            sci(s.ate),
            sci(s.conformal.d),
            sci(s.distribution.residuals.mean),
            sci(s.distribution.ks.statistic),
            sci(s.distribution.ks.p_value),
        ]);
    }
    t
}

fn gaps_table(forecasts: &[MetricForecast]) -> Table {
    let mut t = Table::new("Observed vs forecast", &["metric", "month", "observed", "forecast", "gap", "flag"]);
    for f in forecasts {
        for g in &f.gaps {
            t.push(vec![f.metric.clone(), g.month.to_string(), sci(g.observed), sci(g.point), sci(g.gap), g.flag.as_str().into()]);
        }
    }
    t
}

/// Tables and plots under `report/`.
pub fn report(ctx: &mut Context) -> Result<Vec<String>, PipelineError> {
    ctx.begin("report");
    let cfg = ctx.cfg.clone();
    let fmt = cfg.table_format;
    let ext = fmt.extension();
    let mut tables: Vec<(String, Table)> = Vec::new();

    let evals: Vec<EvalReport> = ctx.read_csv("report", EVAL_FILE)?;
    tables.push((format!("report/table1.{ext}"), eval_table(&evals)));
    let summaries: Vec<analysis::EffectSummary> = ctx.read_json("report", EFFECTS_FILE)?;
    tables.push((format!("report/effects.{ext}"), effects_table(&summaries)));
    let reg: RegressionOutput = ctx.read_json("report", REGRESSION_FILE)?;
    for r in &reg.regressions {
        let title = format!("{} month {}: median and {}% CI", r.outcome.as_str(), r.month, (r.report.level * 100.0).round());
        tables.push((format!("report/regression_{}_m{}.{ext}", r.outcome.as_str(), r.month), bootstrap_table(&title, &r.report)));
    }
    for (o, table) in &reg.consistency {
        let table: &ConsistencyTable = table;
        tables.push((format!("report/consistency_{}.{ext}", o.as_str()), consistency_table(&format!("{} across months", o.as_str()), table)));
    }
    let forecasts: Vec<MetricForecast> = ctx.read_json("report", FORECAST_FILE)?;
    tables.push((format!("report/gaps.{ext}"), gaps_table(&forecasts)));
    let mut written = Vec::new();
    for (rel, t) in &tables {
        ctx.write("report", rel, render_table(t, fmt).as_bytes())?;
        written.push(rel.clone());
    }

    let monthly = ctx.read("report", MONTHLY_FILE)?;
    let series = parse_monthly(&monthly).map_err(|e| PipelineError::stage("report", format!("{MONTHLY_FILE}: {e}")))?;
    for f in &forecasts {
        let Some(s) = series.iter().find(|s| s.metric.name() == f.metric) else { continue };
        let history = s.window(s.start_month, cfg.shock_boundary);
        let after = s.window(cfg.shock_boundary.plus(1), cfg.shock_boundary.plus(f.forecast.horizon() as i64));
        let observed = (!f.gaps.is_empty()).then_some(&after);
        let svg = render_plot(&f.metric, &Plot::Forecast { history: &history, forecast: &f.forecast, observed });
        let rel = format!("report/forecast_{}.svg", f.metric);
        ctx.write("report", &rel, svg.as_bytes())?;
        written.push(rel);
    }
    for o in Outcome::ALL {
        let dists: Vec<_> = summaries.iter().filter(|s| s.outcome == o).map(|s| s.distribution.clone()).collect();
        if dists.is_empty() {
            continue;
        }
        let svg = render_plot(&format!("ITE vs test residuals: {}", o.as_str()), &Plot::Distribution(&dists));
        let rel = format!("report/ite_{}.svg", o.as_str());
        ctx.write("report", &rel, svg.as_bytes())?;
        written.push(rel);
    }
    Ok(written)
}

/// The platform stage as one manifest entry.
fn timeseries(ctx: &mut Context) -> Result<(), PipelineError> {
    ctx.begin("timeseries");
    aggregate(ctx)?;
    forecast(ctx)?;
    Ok(())
}

/// Runs every stage in order and writes the manifest.
pub fn run_pipeline(cfg: PipelineConfig) -> Result<Manifest, PipelineError> {
    run_with(Context::new(cfg)?)
}

pub fn run_with(mut ctx: Context) -> Result<Manifest, PipelineError> {
    ingest(&mut ctx)?;
    timeseries(&mut ctx)?;
    select(&mut ctx)?;
    features(&mut ctx)?;
    train(&mut ctx)?;
    predict(&mut ctx)?;
    effects(&mut ctx)?;
    regress(&mut ctx)?;
    report(&mut ctx)?;
    ctx.write_manifest()
}

/// Runs one stage by name, as the CLI subcommands do.
pub fn run_stage(ctx: &mut Context, name: &str) -> Result<(), PipelineError> {
    match name {
        "ingest" => ingest(ctx).map(drop),
        "aggregate" => {
            ctx.begin("aggregate");
            aggregate(ctx).map(drop)
        }
        "forecast" => {
            ctx.begin("forecast");
            forecast(ctx).map(drop)
        }
        "timeseries" => timeseries(ctx),
        "select" => select(ctx).map(drop),
        "features" => features(ctx).map(drop),
        "train" => train(ctx).map(drop),
        "predict" => predict(ctx).map(drop),
        "effects" => effects(ctx).map(drop),
        "regress" => regress(ctx).map(drop),
        "report" => report(ctx).map(drop),
        other => Err(PipelineError::Config(format!("unknown stage {other:?}"))),
    }
}

/// Writes `value` as pretty JSON to `path` (helper for the CLI).
pub fn write_json_file<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()
}
