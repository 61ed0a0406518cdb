//! Provenance checks for the committed fixtures under `tests/golden/`.
//!
//! The acceptance suite proves the fixtures *round-trip* byte-exactly; this
//! suite proves the pipeline still *produces* them: rebuilding every artifact
//! from the same tiny scenario and seed must reproduce the committed bytes.
//! A failure here means synthesis, extraction, training, evaluation,
//! recognition, or a text format changed behavior. If the change was
//! intentional, refresh the fixtures with
//! `cargo run --example regen_goldens` and review the diff.

use std::path::{Path, PathBuf};

use magprints::classifier::{cross_validate, train, DEFAULT_EPOCHS, DEFAULT_LAMBDA};
use magprints::device::DeviceModel;
use magprints::gestures::{recognize_stream, RecognizerConfig};
use magprints::io::{self, DatasetFile, ReportFile, TraceFile};
use magprints::magnetics::{EarthField, MagnetSpec, Polarity};
use magprints::presets::{dataset_from_sessions, generate_sessions, Protocol, StudyPreset};
use magprints::synth::{FingerModel, Grid, GridScenario, Jitter, RetractionPolicy, Timing};

/// Seed of every fixture artifact (matches the `regen_goldens` example).
const SEED: u64 = 7;

/// Folds of the fixture cross-validation (matches the example).
const FOLDS: usize = 4;

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden")
}

/// The fixture scenario; must stay identical to the `regen_goldens` example.
fn fixture_preset() -> StudyPreset {
    let scenario = GridScenario {
        device: DeviceModel::iphone4(),
        earth: EarthField::default(),
        grid: Grid::new(2, 2).expect("valid grid"),
        targets_per_cell: 1,
        fingers: vec![
            FingerModel::magnetic(
                MagnetSpec::n40(7.9, 0.8, Polarity::NorthUp, "north").expect("valid magnet"),
            ),
            FingerModel::plain(),
        ],
        retraction: RetractionPolicy::PalmCurl,
        timing: Timing::default(),
        jitter: Jitter::default(),
    };
    StudyPreset { name: "golden".into(), sessions: 2, protocol: Protocol::Grid(scenario) }
}

/// Write `artifact` with `write` and assert it matches the committed fixture.
fn assert_reproduces(name: &str, write: impl FnOnce(&Path) -> magprints::Result<()>) {
    let dir = tempfile::tempdir().expect("temp dir");
    let rebuilt_path = dir.path().join(name);
    write(&rebuilt_path).expect("write rebuilt artifact");
    let rebuilt = std::fs::read(&rebuilt_path).expect("read rebuilt artifact");
    let committed = std::fs::read(golden_dir().join(name)).expect("read committed fixture");
    assert!(
        rebuilt == committed,
        "{name}: the pipeline no longer reproduces the committed fixture; if the change is \
         intentional, run `cargo run --example regen_goldens` and review the diff"
    );
}

#[test]
fn pipeline_reproduces_scenario_fixture() {
    assert_reproduces("golden-scenario.txt", |path| io::write_scenario(path, &fixture_preset()));
}

#[test]
fn pipeline_reproduces_trace_fixture() {
    let sessions = generate_sessions(&fixture_preset(), SEED).expect("synthesize");
    let file = TraceFile { device: DeviceModel::iphone4(), seed: SEED, trace: sessions[0].clone() };
    assert_reproduces("golden-trace.txt", |path| io::write_trace(path, &file));
}

#[test]
fn pipeline_reproduces_dataset_model_report_and_events_fixtures() {
    let sessions = generate_sessions(&fixture_preset(), SEED).expect("synthesize");
    let dataset = dataset_from_sessions(&sessions).expect("extract rows");
    let model = train(&dataset, DEFAULT_LAMBDA, DEFAULT_EPOCHS, SEED).expect("train");
    let report = cross_validate(&dataset, FOLDS, DEFAULT_LAMBDA, DEFAULT_EPOCHS, SEED).expect("cv");
    let events = recognize_stream(&sessions[0], &model, &RecognizerConfig::default());

    let note = format!("golden fixture: preset golden, seed {SEED}");
    assert_reproduces("golden-dataset.txt", |path| {
        io::write_dataset(path, &DatasetFile { note: Some(note), dataset: dataset.clone() })
    });
    assert_reproduces("golden-model.txt", |path| io::write_model(path, &model));
    let config = format!("golden fixture: {FOLDS}-fold cross-validation, seed {SEED}");
    assert_reproduces("golden-report.txt", |path| {
        io::write_report(path, &ReportFile { config: Some(config), report: report.clone() })
    });
    assert_reproduces("golden-events.txt", |path| io::write_events(path, &events));
}

#[test]
fn fixture_semantics_survive_a_read() {
    let dir = golden_dir();

    let trace = io::read_trace(dir.join("golden-trace.txt")).expect("read trace");
    assert_eq!(trace.seed, SEED);
    assert_eq!(trace.trace.touches().len(), 8);

    let dataset = io::read_dataset(dir.join("golden-dataset.txt")).expect("read dataset");
    assert_eq!(dataset.dataset.rows().len(), 16);
    assert_eq!(dataset.dataset.classes(), ["north".to_string(), "plain".to_string()]);

    let model = io::read_model(dir.join("golden-model.txt")).expect("read model");
    assert_eq!(model.dim(), dataset.dataset.dim());

    let report = io::read_report(dir.join("golden-report.txt")).expect("read report");
    assert_eq!(report.report.total(), 16);

    let events = io::read_events(dir.join("golden-events.txt")).expect("read events");
    assert_eq!(events.len(), 9);

    let preset = io::read_scenario(dir.join("golden-scenario.txt")).expect("read scenario");
    assert_eq!(preset, fixture_preset());
}
