//! Command-line front end: `simulate`, `identify`, `detect` and `eval`.
//!
//! Every command produces a [`RunReport`]; failures surface as
//! `{"error": …, "kind": …}` on stderr with a nonzero exit status.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::events::{
    localize, samples_needed, DetectOutcome, Detector, DetectorConfig, LocalizeOptions, Threshold,
};
use crate::identify::{block_metrics, lowrank_identify, refine_with_prior, Hyper, IdentifyOptions, Metrics};
use crate::netmodel::{read_ybus, write_ybus, AdmittanceMatrix, NodeId, Phase, Terminal};
use crate::phasors::{PhasorDataset, SlotStream};
use crate::simkit::{run_scenario, GroundTruth, ScenarioSpec};
use crate::solvers::Method;
use crate::{CMat, Error, Result};

/// File names written by `simulate` and read by `identify`.
pub const PHASORS_FILE: &str = "phasors.csv";
pub const TRUTH_FILE: &str = "truth.json";
pub const NETWORK_FILE: &str = "network.json";

/// Environment variable capping the worker-thread count.
pub const THREADS_ENV: &str = "GRIDID_THREADS";

/// Ridge weight used by `identify --prior` when `--lambda auto`.
pub const DEFAULT_PRIOR_LAMBDA: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(name = "gridid", version, about = "Admittance-matrix identification and event localization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic feeder scenario.
    Simulate(SimulateArgs),
    /// Estimate the admittance matrix from phasor data.
    Identify(IdentifyArgs),
    /// Stream phasor data, detect and localize admittance changes.
    Detect(DetectArgs),
    /// Compare an estimate against a reference matrix.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    /// Scenario JSON.
    #[arg(long)]
    pub spec: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct IdentifyArgs {
    /// Directory holding `phasors.csv` and optionally `truth.json`.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "adaptive", value_parser = ["lasso", "adaptive"])]
    pub method: String,
    /// `auto` (cross-validated) or a number.
    #[arg(long, default_value = "auto")]
    pub lambda: String,
    /// `auto` (cross-validated) or a number; adaptive lasso only.
    #[arg(long, default_value = "auto")]
    pub gamma: String,
    /// Approximate model to refine instead of identifying from scratch.
    #[arg(long)]
    pub prior: Option<PathBuf>,
    /// Report path; the estimate goes next to it as `<stem>.ybus.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DetectArgs {
    /// Slot-major phasor CSV.
    #[arg(long)]
    pub stream: PathBuf,
    /// Model in force at the start of the stream.
    #[arg(long)]
    pub ybus: PathBuf,
    /// `auto` or a fixed residual threshold.
    #[arg(long, default_value = "auto")]
    pub threshold: String,
    /// Slots used to localize each event (default: the recommended minimum).
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Block {
    Full,
    Trusted,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalArgs {
    /// Estimated Y-bus JSON.
    #[arg(long)]
    pub est: PathBuf,
    /// Reference Y-bus JSON or ground-truth JSON (its first interval is used).
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long, value_enum, default_value = "full")]
    pub block: Block,
}

/// How the detector's model was updated after an event.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelUpdate {
    /// `Y₀ ← Y₀ + ΔŶ`.
    Localized,
    /// Replaced by a fresh identification on the window.
    Reidentified,
    /// Kept unchanged.
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    /// Detection slot.
    pub t: usize,
    pub residual: f64,
    pub threshold: f64,
    /// Changed entries as `(node, phase, node, phase)`.
    pub delta_support: Vec<(NodeId, Phase, NodeId, Phase)>,
    /// `[re, im]` per support entry.
    pub delta_values: Vec<[f64; 2]>,
    pub method: String,
    /// Slots actually used for localization.
    pub window: usize,
    pub localization_residual: Option<f64>,
    pub model_update: ModelUpdate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Self-contained record of one command invocation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    /// Error metrics keyed by block (`full`, `trusted`).
    pub metrics: BTreeMap<String, Metrics>,
    pub trusted: Option<Vec<Terminal>>,
    pub events: Vec<EventRecord>,
    pub warnings: Vec<String>,
    pub wall_time_s: f64,
    pub diagnostics: serde_json::Value,
}

impl RunReport {
    fn new(command: &str, config: &impl Serialize) -> Self {
        RunReport {
            command: command.to_string(),
            config: serde_json::to_value(config).expect("arguments serialize"),
            seed: None,
            metrics: BTreeMap::new(),
            trusted: None,
            events: Vec::new(),
            warnings: Vec::new(),
            wall_time_s: 0.0,
            diagnostics: serde_json::Value::Null,
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn read(path: impl AsRef<Path>) -> Result<RunReport> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    fn write(&self, path: &Path) -> Result<()> {
        create_parent(path)?;
        std::fs::write(path, self.to_json_string()).map_err(|e| Error::io(path, e))
    }
}

fn create_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e)),
        _ => Ok(()),
    }
}

/// Path of the estimate written alongside an `identify` report.
pub fn estimate_path(report: &Path) -> PathBuf {
    report.with_extension("ybus.json")
}

/// Runs a command, stamps the wall time and writes the report to `--out`
/// for the commands that take a report path.
pub fn run(cli: Cli) -> Result<RunReport> {
    let start = Instant::now();
    let (mut report, out) = match &cli.command {
        Command::Simulate(a) => (cmd_simulate(a)?, None),
        Command::Identify(a) => (cmd_identify(a)?, Some(&a.out)),
        Command::Detect(a) => (cmd_detect(a)?, Some(&a.out)),
        Command::Eval(a) => (cmd_eval(a)?, None),
    };
    report.wall_time_s = start.elapsed().as_secs_f64();
    if let Some(path) = out {
        report.write(path)?;
    }
    Ok(report)
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<RunReport> {
    let spec = ScenarioSpec::read(&args.spec)?;
    let sc = run_scenario(&spec)?;
    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    sc.dataset.write_csv(args.out.join(PHASORS_FILE))?;
    sc.truth.write(args.out.join(TRUTH_FILE))?;
    sc.network.write(args.out.join(NETWORK_FILE))?;
    let mut report = RunReport::new("simulate", args);
    report.seed = Some(spec.seed);
    report.diagnostics = serde_json::json!({
        "spec": spec,
        "terminals": sc.dataset.dim(),
        "slots": sc.dataset.slots(),
        "voltage_rank": sc.dataset.numerical_rank(crate::phasors::DEFAULT_RANK_TOL),
        "intervals": sc.truth.intervals.len(),
    });
    Ok(report)
}

fn require_dir(dir: &Path) -> Result<()> {
    if !dir.is_dir() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "data directory not found"),
        ));
    }
    Ok(())
}

pub fn cmd_identify(args: &IdentifyArgs) -> Result<RunReport> {
    require_dir(&args.data)?;
    let ds = PhasorDataset::read_csv(args.data.join(PHASORS_FILE))?;
    let truth_path = args.data.join(TRUTH_FILE);
    let truth = if truth_path.exists() { Some(GroundTruth::read(&truth_path)?) } else { None };
    let method = Method::parse(&args.method)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown method {:?}", args.method)))?;
    let lambda = Hyper::parse(&args.lambda)?;
    let gamma = Hyper::parse(&args.gamma)?;
    let mut report = RunReport::new("identify", args);

    let (estimate, trusted) = match &args.prior {
        Some(p) => {
            let (prior, _) = read_ybus(p)?;
            let lam = match lambda {
                Hyper::Auto => DEFAULT_PRIOR_LAMBDA,
                Hyper::Value(v) => v,
            };
            if gamma != Hyper::Auto {
                report.warnings.push("--gamma is ignored when refining a prior".into());
            }
            let (y, diag) = refine_with_prior(&ds, &prior, lam)?;
            report.diagnostics = serde_json::json!({ "prior": diag });
            let all = y.index().terminals().to_vec();
            (y, all)
        }
        None => {
            let opts = IdentifyOptions {
                method,
                lambda,
                gamma,
                ..Default::default()
            };
            let part = lowrank_identify(&ds, &opts)?;
            if !part.dependent.is_empty() {
                report.warnings.push(format!(
                    "voltage data have rank {} of {}; only the block on the trusted terminals is determined",
                    part.rank,
                    ds.dim()
                ));
            }
            report.diagnostics = serde_json::to_value(&part).expect("diagnostics serialize");
            (part.assemble_full()?, part.trusted_terminals())
        }
    };
    create_parent(&args.out)?;
    write_ybus(estimate_path(&args.out), &estimate, Some(&trusted))?;

    if let Some(truth) = &truth {
        if truth.intervals.len() > 1 {
            report
                .warnings
                .push("ground truth has several intervals; metrics use the first".into());
        }
        let y = truth.initial();
        report.metrics.insert("full".into(), block_metrics(&estimate, y, None)?);
        report
            .metrics
            .insert("trusted".into(), block_metrics(&estimate, y, Some(&trusted))?);
        let norm = |t: Option<&[Terminal]>| -> Result<f64> {
            let zero = AdmittanceMatrix::zeros(y.index().clone());
            Ok(block_metrics(&zero, y, t)?.m2)
        };
        if let serde_json::Value::Object(m) = &mut report.diagnostics {
            m.insert("truth_norm_full".into(), norm(None)?.into());
            m.insert("truth_norm_trusted".into(), norm(Some(&trusted))?.into());
        }
    }
    report.trusted = Some(trusted);
    Ok(report)
}

pub fn cmd_detect(args: &DetectArgs) -> Result<RunReport> {
    let (y0, _) = read_ybus(&args.ybus)?;
    let threshold = match Hyper::parse(&args.threshold)? {
        Hyper::Auto => Threshold::default(),
        Hyper::Value(t) => Threshold::Fixed(t),
    };
    let dim = y0.dim();
    let recommended = samples_needed(1, dim, 3);
    let window = args.window.unwrap_or(recommended);
    if window == 0 {
        return Err(Error::InvalidParameter("--window must be at least 1".into()));
    }
    let mut report = RunReport::new("detect", args);
    if window < recommended {
        report.warnings.push(format!(
            "window {window} is below the recommended {recommended} slots; localization may be inexact"
        ));
    }
    let file = File::open(&args.stream).map_err(|e| Error::io(&args.stream, e))?;
    let mut stream = SlotStream::new(BufReader::new(file), y0.index().clone()).map_err(|e| match e {
        Error::InvalidData(m) => Error::Parse {
            path: args.stream.display().to_string(),
            message: m,
        },
        other => other,
    })?;
    let mut det = Detector::new(y0, DetectorConfig { threshold, ..Default::default() })?;
    let loc_opts = LocalizeOptions::default();
    let mut slots = 0usize;
    while let Some(item) = stream.next() {
        let (_, v, i) = item?;
        slots += 1;
        let DetectOutcome::Event { slot, residual, threshold } = det.detect_step(v.as_slice(), i.as_slice())? else {
            continue;
        };
        let mut vs = vec![v];
        let mut is = vec![i];
        while vs.len() < window {
            match stream.next() {
                Some(item) => {
                    let (_, v, i) = item?;
                    vs.push(v);
                    is.push(i);
                }
                None => break,
            }
        }
        slots += vs.len() - 1;
        det.skip(vs.len() - 1);
        let win = PhasorDataset::new(
            det.model().index().clone(),
            CMat::from_columns(&vs),
            CMat::from_columns(&is),
            1.0,
        )?;
        let record = handle_event(&mut det, &win, slot, residual, threshold, window, &loc_opts)?;
        report.events.push(record);
    }
    report.diagnostics = serde_json::json!({
        "slots_processed": slots,
        "recommended_window": recommended,
        "window": window,
    });
    Ok(report)
}

/// Localizes the change over `win` and updates the detector's model: by the
/// localized change when it explains the window, otherwise by a fresh
/// identification on the window when that is possible.
fn handle_event(
    det: &mut Detector,
    win: &PhasorDataset,
    slot: usize,
    residual: f64,
    threshold: f64,
    requested: usize,
    opts: &LocalizeOptions,
) -> Result<EventRecord> {
    let mut record = EventRecord {
        t: slot,
        residual,
        threshold,
        delta_support: Vec::new(),
        delta_values: Vec::new(),
        method: "adaptive".into(),
        window: win.slots(),
        localization_residual: None,
        model_update: ModelUpdate::None,
        note: (win.slots() < requested).then(|| format!("stream ended after {} window slots", win.slots())),
    };
    let loc = match localize(det.model(), win, opts) {
        Ok(loc) => loc,
        Err(e) => {
            record.note = Some(format!("localization failed: {e}"));
            return Ok(record);
        }
    };
    record.delta_support = loc
        .support
        .iter()
        .map(|(a, b)| (a.node, a.phase, b.node, b.phase))
        .collect();
    record.delta_values = loc.values.iter().map(|z| [z.re, z.im]).collect();
    record.localization_residual = Some(loc.residual);
    if loc.passed {
        let updated = det.model().sum(&loc.delta)?;
        det.update_model(updated)?;
        record.model_update = ModelUpdate::Localized;
        return Ok(record);
    }
    match lowrank_identify(win, &IdentifyOptions::default()) {
        Ok(part) if part.dependent.is_empty() => {
            det.update_model(part.assemble_full()?)?;
            record.model_update = ModelUpdate::Reidentified;
        }
        Ok(part) => {
            record.note = Some(format!(
                "localization residual {:.3e} too large and the window has rank {} of {}; model kept",
                loc.residual,
                part.rank,
                win.dim()
            ));
        }
        Err(e) => {
            record.note = Some(format!(
                "localization residual {:.3e} too large and re-identification failed: {e}",
                loc.residual
            ));
        }
    }
    Ok(record)
}

/// Reads a Y-bus file, or the first interval of a ground-truth file.
fn read_reference(path: &Path) -> Result<AdmittanceMatrix> {
    match read_ybus(path) {
        Ok((y, _)) => Ok(y),
        Err(Error::Parse { .. }) => Ok(GroundTruth::read(path)?.initial().clone()),
        Err(e) => Err(e),
    }
}

pub fn cmd_eval(args: &EvalArgs) -> Result<RunReport> {
    let (est, trusted) = read_ybus(&args.est)?;
    let truth = read_reference(&args.truth)?;
    let mut report = RunReport::new("eval", args);
    let m = match args.block {
        Block::Full => block_metrics(&est, &truth, None)?,
        Block::Trusted => {
            let t = trusted.as_deref().ok_or_else(|| {
                Error::InvalidParameter(format!("{} lists no trusted terminals", args.est.display()))
            })?;
            block_metrics(&est, &truth, Some(t))?
        }
    };
    let key = match args.block {
        Block::Full => "full",
        Block::Trusted => "trusted",
    };
    report.metrics.insert(key.into(), m);
    report.trusted = trusted;
    Ok(report)
}

/// Sizes the global worker pool from [`THREADS_ENV`] when set.
pub fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidParameter(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    // A pool that is already initialized keeps its size.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn error_json(message: &str, kind: &str) -> String {
    serde_json::json!({ "error": message, "kind": kind }).to_string()
}

/// Parses `argv`, runs the command and returns the process exit code. The
/// report goes to stdout; errors go to stderr as JSON.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            eprintln!("{}", error_json(e.render().to_string().trim(), "usage"));
            return 2;
        }
    };
    match configure_threads().and_then(|_| run(cli)) {
        Ok(report) => {
            use std::io::Write;
            // A closed pipe on stdout is not a failure of the command.
            let _ = writeln!(std::io::stdout().lock(), "{}", report.to_json_string());
            0
        }
        Err(e) => {
            eprintln!("{}", error_json(&e.to_string(), e.kind()));
            1
        }
    }
}
