//! Regenerates the committed golden fixtures under `tests/golden/`.
//!
//! The fixtures pin the exact byte-level output of every text format on the
//! reference platform, and the `golden` integration test checks both that the
//! committed files still round-trip byte-exactly and that the pipeline still
//! reproduces them from scratch. After an *intentional* change to a format or
//! to the synthesis pipeline, rerun this tool and review the diff:
//!
//! ```text
//! cargo run --example regen_goldens
//! ```

use std::path::PathBuf;

use magprints::classifier::{cross_validate, train, DEFAULT_EPOCHS, DEFAULT_LAMBDA};
use magprints::device::DeviceModel;
use magprints::gestures::{recognize_stream, RecognizerConfig};
use magprints::io::{self, DatasetFile, ReportFile, TraceFile};
use magprints::magnetics::{EarthField, MagnetSpec, Polarity};
use magprints::presets::{dataset_from_sessions, generate_sessions, Protocol, StudyPreset};
use magprints::synth::{FingerModel, Grid, GridScenario, Jitter, RetractionPolicy, Timing};

/// Seed of every fixture artifact.
const SEED: u64 = 7;

/// Folds of the fixture cross-validation (8 rows per class, 2 per fold).
const FOLDS: usize = 4;

/// A deliberately small tap study: 2 sessions x 2x2 grid x 1 target per cell
/// x 2 fingers = 16 rows, so every fixture stays a few kilobytes.
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

fn main() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden");
    std::fs::create_dir_all(&dir).expect("create tests/golden");

    let preset = fixture_preset();
    io::write_scenario(dir.join("golden-scenario.txt"), &preset).expect("write scenario");

    let sessions = generate_sessions(&preset, SEED).expect("synthesize sessions");
    let trace =
        TraceFile { device: DeviceModel::iphone4(), seed: SEED, trace: sessions[0].clone() };
    io::write_trace(dir.join("golden-trace.txt"), &trace).expect("write trace");

    let dataset = dataset_from_sessions(&sessions).expect("extract rows");
    let model = train(&dataset, DEFAULT_LAMBDA, DEFAULT_EPOCHS, SEED).expect("train");
    let report = cross_validate(&dataset, FOLDS, DEFAULT_LAMBDA, DEFAULT_EPOCHS, SEED).expect("cv");
    let events = recognize_stream(&sessions[0], &model, &RecognizerConfig::default());

    let note = format!("golden fixture: preset golden, seed {SEED}");
    io::write_dataset(dir.join("golden-dataset.txt"), &DatasetFile { note: Some(note), dataset })
        .expect("write dataset");
    io::write_model(dir.join("golden-model.txt"), &model).expect("write model");
    let config = format!("golden fixture: {FOLDS}-fold cross-validation, seed {SEED}");
    io::write_report(dir.join("golden-report.txt"), &ReportFile { config: Some(config), report })
        .expect("write report");
    io::write_events(dir.join("golden-events.txt"), &events).expect("write events");

    for name in [
        "golden-scenario.txt",
        "golden-trace.txt",
        "golden-dataset.txt",
        "golden-model.txt",
        "golden-report.txt",
        "golden-events.txt",
    ] {
        let len = std::fs::metadata(dir.join(name)).expect("stat fixture").len();
        println!("{} ({len} bytes)", dir.join(name).display());
    }
}
