//! Command-line front end: `synth`, `validate`, `eval` and `sfs`.
//!
//! Settings come from an optional JSON config file and are overridden by
//! flags. `eval` and `sfs` write the resolved settings to `config.json` in the
//! output directory; passing that file back with `--config` reproduces the run.
//!
//! Exit codes: 0 success, 1 usage or validation failure, 2 computation failure.

mod config;

use std::fs;
use std::io::{BufWriter, Write as _};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use config::{ChannelSet, FdtBands, RunConfig};

use crate::dataset::{
    load_dataset, load_dataset_lenient, synth_dataset, validate_dataset, write_dataset, DataFormat,
    Dataset, Finding, SynthSpec, ValidationReport,
};
use crate::error::{Error, Result};
use crate::eval::{evaluate, write_report, FeatureTable, NormalPool, Scenario, ScoreUnit};
use crate::features::{write_features_csv, FeatureKind, TdStat};
use crate::model::{fit_class_model, save_models};
use crate::selection::{sfs_table, Criterion, SfsMetric};

#[derive(Debug, Parser)]
#[command(
    name = "semg-auth",
    version,
    about = "sEMG gesture biometrics pipeline"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset in the canonical layout.
    Synth(SynthArgs),
    /// Check a dataset directory and list every problem found.
    Validate(ValidateArgs),
    /// Leave-one-trial-out verification and identification report.
    Eval(EvalArgs),
    /// Sequential forward channel selection.
    Sfs(SfsArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 6)]
    pub users: usize,
    #[arg(long, default_value_t = 16)]
    pub gestures: usize,
    #[arg(long, default_value_t = 7)]
    pub trials: usize,
    #[arg(long, default_value_t = 8)]
    pub channels: usize,
    #[arg(long, default_value_t = 5.0)]
    pub duration_s: f64,
    #[arg(long, default_value_t = 2048.0)]
    pub sampling_rate: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub separation: f64,
    #[arg(long, default_value = "csv", value_parser = parse_format)]
    pub format: DataFormat,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub dataset: PathBuf,
}

/// Flags shared by `eval` and `sfs`. Unset flags fall back to the config file.
#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON run configuration; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// td, fdt, ar, td+fdt or td+ar.
    #[arg(long, value_parser = parse_via::<FeatureKind>)]
    pub features: Option<FeatureKind>,
    /// Comma-separated channel indices, or `all`.
    #[arg(long, value_parser = parse_via::<ChannelSet>)]
    pub channels: Option<ChannelSet>,
    #[arg(long)]
    pub window_ms: Option<f64>,
    #[arg(long)]
    pub step_ms: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, value_parser = parse_td_stat)]
    pub td_stat: Option<TdStat>,
    #[arg(long)]
    pub td_threshold: Option<f64>,
    /// Band count, or comma-separated ascending edges in Hz.
    #[arg(long, value_parser = parse_via::<FdtBands>)]
    pub fdt_bands: Option<FdtBands>,
    #[arg(long)]
    pub ar_order: Option<usize>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: PipelineArgs,
    /// Comma-separated subset of normal, leaked, self.
    #[arg(long, value_delimiter = ',', value_parser = parse_via::<Scenario>)]
    pub scenario: Option<Vec<Scenario>>,
    /// Comma-separated rank-k values.
    #[arg(long, value_delimiter = ',')]
    pub ranks: Option<Vec<usize>>,
    /// Score whole trials by their median window score.
    #[arg(long)]
    pub aggregate: bool,
    /// Let Normal-scenario impostors use the authentication gesture too.
    #[arg(long)]
    pub normal_inclusive: bool,
    /// Also fit every (gesture, user) model on all trials and save it here.
    #[arg(long)]
    pub export_models: Option<PathBuf>,
    /// Also write every feature row to this CSV file.
    #[arg(long)]
    pub dump_features: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SfsArgs {
    #[command(flatten)]
    pub common: PipelineArgs,
    /// eer, r1e or r5e.
    #[arg(long, default_value = "eer", value_parser = parse_metric_name)]
    pub metric: String,
    /// Scenario for the eer metric.
    #[arg(long, value_parser = parse_via::<Scenario>)]
    pub scenario: Option<Scenario>,
    #[arg(long, value_parser = parse_criterion)]
    pub criterion: Option<Criterion>,
    #[arg(long)]
    pub normal_inclusive: bool,
}

fn parse_via<T: std::str::FromStr<Err = Error>>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_format(s: &str) -> std::result::Result<DataFormat, String> {
    match s {
        "csv" => Ok(DataFormat::Csv),
        "f32le" => Ok(DataFormat::F32le),
        _ => Err(format!("unknown format {s:?}, expected csv or f32le")),
    }
}

fn parse_td_stat(s: &str) -> std::result::Result<TdStat, String> {
    match s {
        "mav" => Ok(TdStat::Mav),
        "rms" => Ok(TdStat::Rms),
        _ => Err(format!("unknown TD statistic {s:?}, expected mav or rms")),
    }
}

fn parse_criterion(s: &str) -> std::result::Result<Criterion, String> {
    parse_via(s)
}

fn parse_metric_name(s: &str) -> std::result::Result<String, String> {
    match s.to_ascii_lowercase().as_str() {
        m @ ("eer" | "r1e" | "r5e") => Ok(m.to_string()),
        _ => Err(format!("unknown metric {s:?}, expected eer, r1e or r5e")),
    }
}

/// Exit status for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::SingularCovariance { .. }
        | Error::DimensionMismatch { .. }
        | Error::EmptyPool { .. }
        | Error::MissingModel { .. }
        | Error::UnstableSignature { .. }
        | Error::NoUsableParticipants { .. } => 2,
        _ => 1,
    }
}

/// Parses `std::env::args` and runs the command. Returns the exit status.
pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    run(cli)
}

/// Runs an already parsed command line.
pub fn run(cli: Cli) -> i32 {
    let outcome = match cli.command {
        Command::Synth(a) => cmd_synth(&a),
        Command::Validate(a) => cmd_validate(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Sfs(a) => cmd_sfs(&a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn cmd_synth(a: &SynthArgs) -> Result<i32> {
    let spec = SynthSpec {
        users: a.users,
        gestures: a.gestures,
        trials: a.trials,
        channels: a.channels,
        duration_s: a.duration_s,
        sampling_rate_hz: a.sampling_rate,
        seed: a.seed,
        separation: a.separation,
    };
    let dataset = synth_dataset(&spec)?;
    write_dataset(&a.out, &dataset, a.format)?;
    let m = &dataset.meta;
    println!(
        "wrote {}: {} participants, {} gestures, {} trials, {} channels, {} samples at {} Hz",
        a.out.display(),
        m.participant_ids.len(),
        m.gesture_ids.len(),
        m.trials_per_gesture,
        m.channel_count,
        spec.n_samples(),
        m.sampling_rate_hz
    );
    Ok(0)
}

fn cmd_validate(a: &ValidateArgs) -> Result<i32> {
    let (meta, recordings, mut findings) = load_dataset_lenient(&a.dataset)?;
    let mut report = validate_dataset(&meta, &recordings);
    findings.append(&mut report.findings);
    findings.sort_by_key(finding_order);
    let report = ValidationReport { findings };
    println!("{report}");
    Ok(if report.is_clean() { 0 } else { 1 })
}

fn finding_order(f: &Finding) -> String {
    f.to_string()
}

impl PipelineArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::read(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.dataset {
            cfg.dataset_root = Some(v.clone());
        }
        if let Some(v) = &self.out {
            cfg.output_dir = Some(v.clone());
        }
        if let Some(v) = self.features {
            cfg.feature_set = v;
        }
        if let Some(v) = &self.channels {
            cfg.channels = v.clone();
        }
        if let Some(v) = self.window_ms {
            cfg.window_ms = v;
        }
        if let Some(v) = self.step_ms {
            cfg.step_ms = v;
        }
        if let Some(v) = self.lambda {
            cfg.lambda = v;
        }
        if let Some(v) = self.td_stat {
            cfg.td_stat = v;
        }
        if let Some(v) = self.td_threshold {
            cfg.td_threshold = v;
        }
        if let Some(v) = &self.fdt_bands {
            cfg.fdt_bands = v.clone();
        }
        if let Some(v) = self.ar_order {
            cfg.ar_order = v;
        }
        Ok(cfg)
    }

    fn install_threads(&self) {
        if let Some(n) = self.threads {
            // fails only if a pool was already installed in this process
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
    }
}

fn required<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    value
        .as_deref()
        .ok_or_else(|| Error::InvalidSpec(format!("{flag} is required (flag or config file)")))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn cmd_eval(a: &EvalArgs) -> Result<i32> {
    a.common.install_threads();
    let mut cfg = a.common.resolve()?;
    if let Some(v) = &a.scenario {
        cfg.scenarios = v.clone();
    }
    if let Some(v) = &a.ranks {
        cfg.ranks = v.clone();
    }
    if a.aggregate {
        cfg.unit = ScoreUnit::TrialMedian;
    }
    if a.normal_inclusive {
        cfg.normal_pool = NormalPool::IncludeAuthGesture;
    }
    let root = required(&cfg.dataset_root, "--dataset")?.to_path_buf();
    let out = required(&cfg.output_dir, "--out")?.to_path_buf();
    let dataset = load_dataset(&root)?;
    let eval_cfg = cfg.eval_config(&dataset.meta)?;

    let report = evaluate(&dataset, &eval_cfg)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    write_report(&out, &report)?;
    write_text(&out.join("config.json"), &cfg.to_json())?;

    if a.dump_features.is_some() || a.export_models.is_some() {
        let table = FeatureTable::extract(
            &dataset,
            eval_cfg.channels.as_deref(),
            &eval_cfg.feature_spec,
            &eval_cfg.window_spec,
        )?;
        if let Some(path) = &a.dump_features {
            let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
            let mut w = BufWriter::new(file);
            write_features_csv(&mut w, table.matrices()).map_err(|e| Error::io(path, e))?;
            w.flush().map_err(|e| Error::io(path, e))?;
        }
        if let Some(dir) = &a.export_models {
            export_models(dir, &table, eval_cfg.lambda)?;
        }
    }

    print!("{}", report.summary_json());
    Ok(0)
}

fn export_models(dir: &Path, table: &FeatureTable, lambda: f64) -> Result<()> {
    let mut models = Vec::new();
    for (g, gesture) in table.gestures.iter().enumerate() {
        for (p, user) in table.participants.iter().enumerate() {
            let rows: Vec<&[f64]> = (0..table.trials)
                .flat_map(|t| table.get(p, g, t).iter_rows())
                .collect();
            models.push(fit_class_model(gesture, user, &rows, lambda)?);
        }
    }
    save_models(dir, &models)
}

fn cmd_sfs(a: &SfsArgs) -> Result<i32> {
    a.common.install_threads();
    let mut cfg = a.common.resolve()?;
    if a.normal_inclusive {
        cfg.normal_pool = NormalPool::IncludeAuthGesture;
    }
    if let Some(c) = a.criterion {
        cfg.criterion = c;
    }
    let metric = match a.metric.as_str() {
        "eer" => SfsMetric::Eer(a.scenario.unwrap_or(Scenario::Leaked)),
        other => other.parse()?,
    };
    cfg.metric = Some(metric);
    let root = required(&cfg.dataset_root, "--dataset")?.to_path_buf();
    let out = required(&cfg.output_dir, "--out")?.to_path_buf();
    let dataset: Dataset = load_dataset(&root)?;
    let eval_cfg = cfg.eval_config(&dataset.meta)?;

    let table = FeatureTable::extract(
        &dataset,
        eval_cfg.channels.as_deref(),
        &eval_cfg.feature_spec,
        &eval_cfg.window_spec,
    )?;
    let mut trace = sfs_table(&table, &eval_cfg, metric, cfg.criterion)?;
    // report source channel numbers, not positions in the selected set
    for it in &mut trace.iterations {
        it.selected = table.channels[it.selected];
        for c in &mut it.candidates {
            c.0 = table.channels[c.0];
        }
        for c in &mut it.applied {
            *c = table.channels[*c];
        }
    }

    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    write_text(&out.join("sfs.csv"), &trace.to_csv())?;
    write_text(&out.join("sfs_summary.json"), &trace.summary_json())?;
    write_text(&out.join("config.json"), &cfg.to_json())?;
    print!("{}", trace.summary_json());
    Ok(0)
}
