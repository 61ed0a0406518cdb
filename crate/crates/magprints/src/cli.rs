//! Command-line front end: dataset generation, training, evaluation,
//! vocabulary enumeration, and stream recognition as one `magprints` binary.
//!
//! Every subcommand is deterministic given its flags: identical invocations
//! produce byte-identical output files (reports embed the run configuration,
//! never timestamps). Exit codes: `0` success, `1` runtime or domain error,
//! `2` usage error (bad flags, missing required arguments).
//!
//! Output files land in the directory given by `--out-dir`, which defaults
//! to the `MAGPRINTS_OUT_DIR` environment variable and then to the current
//! directory; explicit `--dataset`/`--report`/`--model`/`--events` paths
//! override this per file.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::classifier::{cross_validate, train, DEFAULT_EPOCHS, DEFAULT_LAMBDA};
use crate::device::DeviceModel;
use crate::features::{PINCH_LEN, SINGLE_TOUCH_LEN};
use crate::gestures::{
    enumerate_vocabulary, recognize_stream, GestureEvent, RecognizerConfig, VocabularyConfig,
};
use crate::io::{
    read_dataset, read_model, read_scenario, read_trace, write_dataset, write_events, write_model,
    write_report, write_scenario, write_trace, DatasetFile, ReportFile, TraceFile,
};
use crate::magnetics::Polarity;
use crate::presets::{by_name, dataset_from_sessions, generate_sessions, Protocol, StudyPreset};
use crate::{Error, Result};

/// Disc magnet dimensions, written `DIAMETERxHEIGHT` in millimeters.
#[derive(Debug, Clone, Copy, PartialEq)]
struct MagnetSize {
    diameter_mm: f64,
    height_mm: f64,
}

impl FromStr for MagnetSize {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (d, h) = s
            .split_once('x')
            .ok_or_else(|| format!("expected DIAMETERxHEIGHT in mm (e.g. 7.9x0.8), got `{s}`"))?;
        let diameter_mm: f64 = d.parse().map_err(|_| format!("invalid magnet diameter `{d}`"))?;
        let height_mm: f64 = h.parse().map_err(|_| format!("invalid magnet height `{h}`"))?;
        if !diameter_mm.is_finite()
            || diameter_mm <= 0.0
            || !height_mm.is_finite()
            || height_mm <= 0.0
        {
            return Err(format!("magnet dimensions must be positive, got `{s}`"));
        }
        Ok(MagnetSize { diameter_mm, height_mm })
    }
}

impl fmt::Display for MagnetSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.diameter_mm, self.height_mm)
    }
}

/// Inclusive touch-count range, written `MIN..MAX` or a single count.
#[derive(Debug, Clone, Copy, PartialEq)]
struct TouchRange {
    min: u32,
    max: u32,
}

impl FromStr for TouchRange {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if let Some((lo, hi)) = s.split_once("..") {
            let min = lo.parse().map_err(|_| format!("invalid touch count `{lo}`"))?;
            let max = hi.parse().map_err(|_| format!("invalid touch count `{hi}`"))?;
            Ok(TouchRange { min, max })
        } else {
            let n = s.parse().map_err(|_| format!("invalid touch count `{s}`"))?;
            Ok(TouchRange { min: n, max: n })
        }
    }
}

impl fmt::Display for TouchRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.min, self.max)
    }
}

/// Which pole of the disc faces away from the screen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolarityArg {
    /// North pole away from the screen.
    North,
    /// South pole away from the screen.
    South,
}

impl From<PolarityArg> for Polarity {
    fn from(p: PolarityArg) -> Polarity {
        match p {
            PolarityArg::North => Polarity::NorthUp,
            PolarityArg::South => Polarity::SouthUp,
        }
    }
}

impl fmt::Display for PolarityArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolarityArg::North => "north",
            PolarityArg::South => "south",
        })
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "magprints",
    version,
    about = "Simulate magnet-instrumented touch input and train finger recognizers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate study sessions: per-session trace files plus a dataset file.
    Gen(GenArgs),
    /// Cross-validate a dataset and write the evaluation report.
    Cv(CvArgs),
    /// Train a classifier on a dataset and write the model file.
    Train(TrainArgs),
    /// Enumerate the distinguishable gesture vocabulary of a finger setup.
    Vocab(VocabArgs),
    /// Recognize the gesture stream of a trace with a trained model.
    Recognize(RecognizeArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    /// Built-in study protocol: study1, study1-2fp, study2, study2-chorded,
    /// or study3.
    #[arg(long, required_unless_present = "scenario", conflicts_with = "scenario")]
    preset: Option<String>,

    /// Generate from a scenario file instead of a preset.
    #[arg(long)]
    scenario: Option<PathBuf>,

    /// Disc magnet as DIAMETERxHEIGHT in millimeters.
    #[arg(long, default_value = "7.9x0.8")]
    magnet: MagnetSize,

    /// Disc polarity; two-disc presets mount opposite polarities and ignore
    /// this flag.
    #[arg(long, value_enum, default_value_t = PolarityArg::North)]
    polarity: PolarityArg,

    /// Number of magnetic fingerprints: 1, or 2 for the opposite-polarity
    /// study1 variant.
    #[arg(long, default_value_t = 1)]
    fingerprints: u32,

    /// RNG seed; every output is bit-for-bit reproducible from it.
    #[arg(long)]
    seed: u64,

    /// Directory for outputs when explicit paths are not given.
    #[arg(long, env = "MAGPRINTS_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,

    /// Dataset output path (default: OUT_DIR/NAME-dataset.txt).
    #[arg(long)]
    dataset: Option<PathBuf>,

    /// Also write the effective scenario to this path, re-usable via
    /// `gen --scenario`.
    #[arg(long)]
    emit_scenario: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CvArgs {
    /// Dataset file to evaluate.
    #[arg(long)]
    data: PathBuf,

    /// Number of stratified cross-validation folds (at least 2).
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(2..))]
    folds: u64,

    /// Regularization strength of the hinge-loss objective.
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    lambda: f64,

    /// Training passes over the data.
    #[arg(long, default_value_t = DEFAULT_EPOCHS)]
    epochs: u32,

    /// RNG seed for fold assignment and per-class training streams.
    #[arg(long)]
    seed: u64,

    /// Directory for outputs when explicit paths are not given.
    #[arg(long, env = "MAGPRINTS_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,

    /// Report output path (default: OUT_DIR/DATA_STEM-report.txt).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Dataset file to train on.
    #[arg(long)]
    data: PathBuf,

    /// Regularization strength of the hinge-loss objective.
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    lambda: f64,

    /// Training passes over the data.
    #[arg(long, default_value_t = DEFAULT_EPOCHS)]
    epochs: u32,

    /// RNG seed for the per-class training streams.
    #[arg(long)]
    seed: u64,

    /// Directory for outputs when explicit paths are not given.
    #[arg(long, env = "MAGPRINTS_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,

    /// Model output path (default: OUT_DIR/DATA_STEM-model.txt).
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VocabArgs {
    /// Unmagnetized fingers available (mutually indistinguishable).
    #[arg(long, default_value_t = 4)]
    plain: u32,

    /// Distinct magnetic fingerprints available.
    #[arg(long, default_value_t = 1)]
    fingerprints: u32,

    /// Touch-point range, e.g. `1..5`, or a single count.
    #[arg(long, default_value = "1..5")]
    touch: TouchRange,

    /// Disallow several magnetic fingerprints touching simultaneously.
    #[arg(long)]
    no_chording: bool,
}

#[derive(Debug, Args)]
struct RecognizeArgs {
    /// Trace file to recognize.
    #[arg(long)]
    trace: PathBuf,

    /// Model file to classify touches with.
    #[arg(long)]
    model: PathBuf,

    /// Directory for outputs when explicit paths are not given.
    #[arg(long, env = "MAGPRINTS_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,

    /// Events output path (default: OUT_DIR/TRACE_STEM-events.txt).
    #[arg(long)]
    events: Option<PathBuf>,
}

/// Parse `argv` and run the requested subcommand.
///
/// Returns the process exit code: `0` on success, `1` on a runtime or
/// domain error (printed to stderr), `2` on a usage error (clap prints the
/// diagnostic). `--help` and `--version` return `0`.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::Gen(args) => cmd_gen(&args),
        Command::Cv(args) => cmd_cv(&args),
        Command::Train(args) => cmd_train(&args),
        Command::Vocab(args) => cmd_vocab(&args),
        Command::Recognize(args) => cmd_recognize(&args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Create the parent directory of an output path if needed.
fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    Ok(())
}

/// The file stem of a path, for deriving default output names.
fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "out".to_string(), |s| s.to_string_lossy().into_owned())
}

/// The device a preset records with.
fn preset_device(preset: &StudyPreset) -> &DeviceModel {
    match &preset.protocol {
        Protocol::Grid(s) => &s.device,
        Protocol::Pinch(s) | Protocol::ChordedPinch(s) => &s.device,
    }
}

/// Resolve the generation source: a named preset (with the fingerprint-count
/// shorthand) or a scenario file.
fn load_protocol(args: &GenArgs) -> Result<(String, StudyPreset)> {
    if let Some(path) = &args.scenario {
        let preset = read_scenario(path)?;
        return Ok((preset.name.clone(), preset));
    }
    let base = args.preset.as_deref().expect("clap requires --preset or --scenario");
    let name = match (base, args.fingerprints) {
        (name, 1) => name.to_string(),
        ("study1", 2) | ("study1-2fp", 2) => "study1-2fp".to_string(),
        (name, n) => {
            return Err(Error::InvalidScenario(format!(
                "preset `{name}` supports one magnetic fingerprint \
                 (pass --fingerprints 2 only with study1), got {n}"
            )))
        }
    };
    let preset =
        by_name(&name, args.magnet.diameter_mm, args.magnet.height_mm, args.polarity.into())?;
    Ok((name, preset))
}

/// The canonical configuration string embedded in generated datasets.
fn gen_config(args: &GenArgs, name: &str) -> String {
    match &args.scenario {
        Some(path) => format!("gen --scenario {} --seed {}", path.display(), args.seed),
        None => format!(
            "gen --preset {name} --magnet {} --polarity {} --fingerprints {} --seed {}",
            args.magnet, args.polarity, args.fingerprints, args.seed
        ),
    }
}

fn cmd_gen(args: &GenArgs) -> Result<()> {
    let (name, preset) = load_protocol(args)?;
    if let Some(path) = &args.emit_scenario {
        ensure_parent(path)?;
        write_scenario(path, &preset)?;
        println!("scenario: {}", path.display());
    }
    let sessions = generate_sessions(&preset, args.seed)?;
    let dataset = dataset_from_sessions(&sessions)?;

    let device = preset_device(&preset);
    for (i, trace) in sessions.iter().enumerate() {
        let path = args.out_dir.join(format!("{name}-session{i:02}-trace.txt"));
        ensure_parent(&path)?;
        let file = TraceFile { device: device.clone(), seed: args.seed, trace: trace.clone() };
        write_trace(&path, &file)?;
    }

    let data_path =
        args.dataset.clone().unwrap_or_else(|| args.out_dir.join(format!("{name}-dataset.txt")));
    ensure_parent(&data_path)?;
    let note = gen_config(args, &name);
    write_dataset(&data_path, &DatasetFile { note: Some(note), dataset: dataset.clone() })?;

    println!(
        "wrote {} rows ({} features) to {}",
        dataset.rows().len(),
        dataset.dim(),
        data_path.display()
    );
    for (class, count) in dataset.class_counts() {
        println!("  {class}: {count}");
    }
    println!("traces: {} sessions in {}", sessions.len(), args.out_dir.display());
    Ok(())
}

fn cmd_cv(args: &CvArgs) -> Result<()> {
    let file = read_dataset(&args.data)?;
    let report =
        cross_validate(&file.dataset, args.folds as usize, args.lambda, args.epochs, args.seed)?;
    let config = format!(
        "cv --data {} --folds {} --lambda {} --epochs {} --seed {}",
        args.data.display(),
        args.folds,
        args.lambda,
        args.epochs,
        args.seed
    );
    let path = args
        .report
        .clone()
        .unwrap_or_else(|| args.out_dir.join(format!("{}-report.txt", stem(&args.data))));
    ensure_parent(&path)?;
    println!("accuracy {:.2} ({:.2})", report.mean_accuracy, report.std_dev);
    println!("pooled {:.2}", report.pooled_accuracy);
    write_report(&path, &ReportFile { config: Some(config), report })?;
    println!("report: {}", path.display());
    Ok(())
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    let file = read_dataset(&args.data)?;
    let model = train(&file.dataset, args.lambda, args.epochs, args.seed)?;
    let path = args
        .model
        .clone()
        .unwrap_or_else(|| args.out_dir.join(format!("{}-model.txt", stem(&args.data))));
    ensure_parent(&path)?;
    write_model(&path, &model)?;
    println!("trained {} classes x {} features", model.classes().len(), model.dim());
    println!("model: {}", path.display());
    Ok(())
}

fn cmd_vocab(args: &VocabArgs) -> Result<()> {
    let cfg = VocabularyConfig {
        plain_fingers: args.plain,
        fingerprint_count: args.fingerprints,
        min_touch_points: args.touch.min,
        max_touch_points: args.touch.max,
        chording_allowed: !args.no_chording,
    };
    let classes = enumerate_vocabulary(&cfg)?;
    for class in &classes {
        println!("{}", class.name());
    }
    println!("count {}", classes.len());
    Ok(())
}

fn cmd_recognize(args: &RecognizeArgs) -> Result<()> {
    let trace_file = read_trace(&args.trace)?;
    let model = read_model(&args.model)?;
    if model.dim() != SINGLE_TOUCH_LEN && model.dim() != PINCH_LEN {
        return Err(Error::DimensionMismatch {
            context: format!(
                "model `{}` vs feature extractors (touch rows have {} features, \
                 pinch rows {})",
                args.model.display(),
                SINGLE_TOUCH_LEN,
                PINCH_LEN
            ),
            expected: SINGLE_TOUCH_LEN,
            got: model.dim(),
        });
    }
    let events = recognize_stream(&trace_file.trace, &model, &RecognizerConfig::default());
    let path = args
        .events
        .clone()
        .unwrap_or_else(|| args.out_dir.join(format!("{}-events.txt", stem(&args.trace))));
    ensure_parent(&path)?;
    write_events(&path, &events)?;

    let mut counts: BTreeMap<&'static str, usize> = BTreeMap::new();
    for event in &events {
        let kind = match event {
            GestureEvent::Tap { .. } => "tap",
            GestureEvent::Pinch { .. } => "pinch",
            GestureEvent::Hover { .. } => "hover",
            GestureEvent::Rotary { .. } => "rotary",
        };
        *counts.entry(kind).or_default() += 1;
    }
    let summary: Vec<String> =
        counts.iter().map(|(kind, count)| format!("{count} {kind}")).collect();
    println!("events: {} ({})", events.len(), summary.join(", "));

    // Agreement with ground truth, when the trace carries labels.
    let touches = trace_file.trace.touches();
    let mut labeled = 0usize;
    let mut agreed = 0usize;
    for event in &events {
        let (timestamp, label) = match event {
            GestureEvent::Tap { timestamp, label: Some(label), .. }
            | GestureEvent::Pinch { timestamp, label: Some(label), .. } => (*timestamp, label),
            _ => continue,
        };
        let truth =
            touches.iter().find(|t| t.timestamp == timestamp).and_then(|t| t.true_label.as_deref());
        if let Some(truth) = truth {
            labeled += 1;
            if truth == label {
                agreed += 1;
            }
        }
    }
    if labeled > 0 {
        println!("agreement {agreed}/{labeled}");
    }
    println!("events file: {}", path.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn magnet_size_parses_and_displays() {
        let size: MagnetSize = "7.9x0.8".parse().unwrap();
        assert_eq!(size, MagnetSize { diameter_mm: 7.9, height_mm: 0.8 });
        assert_eq!(size.to_string(), "7.9x0.8");
        assert!("7.9".parse::<MagnetSize>().is_err());
        assert!("0x0.8".parse::<MagnetSize>().is_err());
        assert!("axb".parse::<MagnetSize>().is_err());
    }

    #[test]
    fn touch_range_parses_both_forms() {
        assert_eq!("1..5".parse::<TouchRange>().unwrap(), TouchRange { min: 1, max: 5 });
        assert_eq!("3".parse::<TouchRange>().unwrap(), TouchRange { min: 3, max: 3 });
        assert!("1..x".parse::<TouchRange>().is_err());
    }

    #[test]
    fn missing_seed_is_a_usage_error() {
        let err = Cli::try_parse_from(["magprints", "gen", "--preset", "study1"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err = Cli::try_parse_from(["magprints", "cv", "--data", "d.txt"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn single_fold_is_a_usage_error() {
        let err = Cli::try_parse_from([
            "magprints",
            "cv",
            "--data",
            "d.txt",
            "--folds",
            "1",
            "--seed",
            "7",
        ])
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn preset_and_scenario_conflict() {
        let err = Cli::try_parse_from([
            "magprints",
            "gen",
            "--preset",
            "study1",
            "--scenario",
            "s.txt",
            "--seed",
            "7",
        ])
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn two_fingerprints_rename_the_study1_preset() {
        let args = match Cli::try_parse_from([
            "magprints",
            "gen",
            "--preset",
            "study1",
            "--magnet",
            "12.7x0.8",
            "--fingerprints",
            "2",
            "--seed",
            "7",
        ])
        .unwrap()
        .command
        {
            Command::Gen(args) => args,
            other => panic!("expected gen, parsed {other:?}"),
        };
        let (name, preset) = load_protocol(&args).unwrap();
        assert_eq!(name, "study1-2fp");
        assert_eq!(preset.name, "study1-2fp");
        // But a preset that cannot take two fingerprints errors.
        let mut bad = args;
        bad.preset = Some("study3".to_string());
        assert!(load_protocol(&bad).is_err());
    }
}
