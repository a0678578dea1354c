//! `teamshock` command line: one subcommand per pipeline stage, `run` for all
//! of them, and `synth` for synthetic corpora with known effects.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use teamshock::calendar::YearMonth;
use teamshock::pipeline::{run_stage, run_with, Context, ModelKind, PipelineConfig, PipelineError};
use teamshock::heterogeneity::{NoiseMode, RepresentativeRule};
use teamshock::report::TableFormat;
use teamshock::synth::{generate_synthetic, ShockSpec, SyntheticSpec};

#[derive(Parser, Debug)]
#[command(name = "teamshock", version, about = "Estimate the effect of a shock on remote teams from event logs")]
struct Cli {
    /// Run configuration (TOML key-value file). Flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print the effective configuration as TOML and exit.
    #[arg(long, global = true)]
    print_config: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic corpus with a planted shock and its ground truth.
    Synth(SynthArgs),
    /// Parse event logs and profile tables; write ingest.json.
    Ingest(ConfigArgs),
    /// Monthly platform series (monthly.csv).
    Aggregate(ConfigArgs),
    /// Forecast past the shock boundary and compare with observed months.
    Forecast(ConfigArgs),
    /// Select stable teams for the reference and target years.
    Select(ConfigArgs),
    /// Q4 features and next-year outcomes of the selected teams.
    Features(ConfigArgs),
    /// Tune, fit and evaluate the counterfactual models.
    Train(ConfigArgs),
    /// Counterfactual predictions for the target teams.
    Predict(ConfigArgs),
    /// Individual effects, conformal bounds and KS tests.
    Effects(ConfigArgs),
    /// Feature clustering, VIF and bootstrapped effect regressions.
    Regress(ConfigArgs),
    /// Tables and plots under report/.
    Report(ConfigArgs),
    /// All stages in order, then manifest.json.
    Run(ConfigArgs),
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Generator spec (TOML); flags below override it.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    n_repos: Option<usize>,
    #[arg(long)]
    n_background: Option<usize>,
    /// Generate without any shock.
    #[arg(long)]
    no_shock: bool,
    /// Shock on ln(1 + pushes).
    #[arg(long, allow_hyphen_values = true)]
    productivity_ate: Option<f64>,
    /// Shock on ln(1 + active members).
    #[arg(long, allow_hyphen_values = true)]
    size_ate: Option<f64>,
    /// Planted effect on the productivity ITE, FEATURE=COEF (repeatable).
    #[arg(long = "plant", value_parser = parse_plant, allow_hyphen_values = true)]
    plant: Vec<(String, f64)>,
}

fn parse_plant(s: &str) -> Result<(String, f64), String> {
    let (name, coef) = s.split_once('=').ok_or("expected FEATURE=COEF")?;
    Ok((name.trim().to_string(), coef.trim().parse().map_err(|e| format!("{coef}: {e}"))?))
}

fn parse_enum<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn parse_month(s: &str) -> Result<YearMonth, String> {
    s.parse::<YearMonth>().map_err(|e| e.to_string())
}

/// One flag per configuration key.
#[derive(Args, Debug, Default)]
struct ConfigArgs {
    #[arg(long, value_delimiter = ',')]
    events: Option<Vec<PathBuf>>,
    #[arg(long)]
    profiles: Option<PathBuf>,
    #[arg(long)]
    languages: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    reference_year: Option<i32>,
    #[arg(long)]
    target_year: Option<i32>,
    /// YYYY-MM
    #[arg(long, value_parser = parse_month)]
    shock_boundary: Option<YearMonth>,
    #[arg(long, value_delimiter = ',')]
    months: Option<Vec<u32>>,
    /// YYYY-MM
    #[arg(long, value_parser = parse_month)]
    series_start: Option<YearMonth>,
    #[arg(long)]
    min_active_members: Option<u32>,
    #[arg(long)]
    require_push_by_year_end: Option<bool>,
    /// gbdt or rf
    #[arg(long, value_parser = parse_enum::<ModelKind>)]
    model: Option<ModelKind>,
    #[arg(long)]
    compare_models: Option<bool>,
    #[arg(long)]
    test_fraction: Option<f64>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    gbdt_n_trees: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    gbdt_learning_rate: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    gbdt_max_depth: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    gbdt_min_samples_leaf: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    rf_n_trees: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    rf_max_depth: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    rf_max_features: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    rf_min_samples_leaf: Option<Vec<usize>>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    cluster_threshold: Option<f64>,
    /// most_central or first_listed
    #[arg(long, value_parser = parse_enum::<RepresentativeRule>)]
    representative: Option<RepresentativeRule>,
    #[arg(long)]
    bootstrap_iterations: Option<usize>,
    #[arg(long)]
    bootstrap_level: Option<f64>,
    /// per_observation or shared
    #[arg(long, value_parser = parse_enum::<NoiseMode>)]
    bootstrap_noise: Option<NoiseMode>,
    /// csv, json or text
    #[arg(long, value_parser = |s: &str| s.parse::<TableFormat>().map_err(|e| e.to_string()))]
    table_format: Option<TableFormat>,
}

macro_rules! apply {
    ($cfg:ident, $args:ident, $($field:ident),* $(,)?) => {
        $( if let Some(v) = $args.$field { $cfg.$field = v; } )*
    };
}

impl ConfigArgs {
    fn apply(self, cfg: &mut PipelineConfig) {
        let a = self;
        if a.series_start.is_some() {
            cfg.series_start = a.series_start;
        }
        apply!(
            cfg, a, events, profiles, languages, output, reference_year, target_year, shock_boundary, months,
            min_active_members, require_push_by_year_end, model, compare_models, test_fraction, folds, gbdt_n_trees,
            gbdt_learning_rate, gbdt_max_depth, gbdt_min_samples_leaf, rf_n_trees, rf_max_depth, rf_max_features,
            rf_min_samples_leaf, alpha, cluster_threshold, representative, bootstrap_iterations, bootstrap_level,
            bootstrap_noise, table_format,
        );
    }
}

fn load_config(path: Option<&PathBuf>, seed: Option<u64>, args: ConfigArgs) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = match path {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    args.apply(&mut cfg);
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn synth(args: SynthArgs, seed: u64) -> Result<(), PipelineError> {
    let mut spec = match &args.spec {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| PipelineError::Config(format!("{}: {e}", p.display())))?;
            toml::from_str::<SyntheticSpec>(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", p.display())))?
        }
        None => SyntheticSpec::default(),
    };
    if let Some(n) = args.n_repos {
        spec.n_repos = n;
    }
    if let Some(n) = args.n_background {
        spec.n_background = n;
    }
    if args.no_shock {
        spec.shock = ShockSpec::none();
    }
    if let Some(v) = args.productivity_ate {
        spec.shock.productivity_ate = v;
    }
    if let Some(v) = args.size_ate {
        spec.shock.size_ate = v;
    }
    spec.planted.extend(args.plant);
    spec.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
    let corpus = generate_synthetic(&spec, seed).map_err(|e| PipelineError::stage("synth", e))?;
    std::fs::create_dir_all(&args.out).map_err(|e| PipelineError::stage("synth", format!("{}: {e}", args.out.display())))?;
    let files = corpus.write_to(&args.out).map_err(|e| PipelineError::stage("synth", e))?;
    println!("synth: {} events, {} teams", corpus.events.len(), spec.n_repos);
    for f in files {
        println!("  {}", f.display());
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<(), PipelineError> {
    let (stage, args) = match cli.command {
        Command::Synth(a) => return synth(a, cli.seed.unwrap_or(0)),
        Command::Ingest(a) => ("ingest", a),
        Command::Aggregate(a) => ("aggregate", a),
        Command::Forecast(a) => ("forecast", a),
        Command::Select(a) => ("select", a),
        Command::Features(a) => ("features", a),
        Command::Train(a) => ("train", a),
        Command::Predict(a) => ("predict", a),
        Command::Effects(a) => ("effects", a),
        Command::Regress(a) => ("regress", a),
        Command::Report(a) => ("report", a),
        Command::Run(a) => ("run", a),
    };
    let cfg = load_config(cli.config.as_ref(), cli.seed, args)?;
    if cli.print_config {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    let out = cfg.output.clone();
    let mut ctx = Context::new(cfg)?;
    if stage == "run" {
        let m = run_with(ctx)?;
        println!("run: {} stages, {} files, manifest at {}", m.stages.len(), m.files.len(), out.join("manifest.json").display());
    } else {
        run_stage(&mut ctx, stage)?;
        let m = ctx.manifest();
        let written: Vec<&str> = m.stages.iter().flat_map(|s| s.outputs.iter().map(String::as_str)).collect();
        println!("{stage}: wrote {} file(s) under {}", written.len(), out.display());
        for w in written {
            println!("  {w}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
