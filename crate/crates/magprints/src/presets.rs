//! Canned multi-session study protocols.
//!
//! Each preset bundles a complete data-collection protocol — device, target
//! grid, hand, retraction posture, session count — so that a full labeled
//! dataset is one function call (or one CLI invocation) away:
//!
//! * [`study1`] — single-finger taps on a phone, one magnetic fingerprint
//!   (instrumented middle finger) against the plain index finger.
//! * [`study1_two_fingerprints`] — taps with two opposite-polarity discs
//!   (index and ring) plus a plain middle finger.
//! * [`study2`] — pinch gestures: plain thumb–index versus magnetic
//!   thumb–middle.
//! * [`study2_chorded`] — chorded pinches with discs on both thumb and index,
//!   distinguishing thumb–index, thumb–middle, and index–middle.
//! * [`study3`] — single-finger taps on a tablet's denser grid, for
//!   distance-to-sensor analyses.
//!
//! A preset expands to one [`SensorTrace`] per session via
//! [`generate_sessions`]; [`dataset_from_sessions`] turns those traces into a
//! labeled feature [`Dataset`] (tap rows and pinch rows as appropriate).

use std::collections::BTreeSet;

use crate::classifier::Dataset;
use crate::device::{DeviceModel, SensorTrace};
use crate::error::Error;
use crate::features::{extract_pinch_features, extract_touch_features, FeatureVector};
use crate::magnetics::{EarthField, MagnetSpec, Polarity};
use crate::seed::{mix2, salt};
use crate::synth::{
    synthesize_chorded_pinch, synthesize_grid_session, synthesize_pinch_session, FingerModel, Grid,
    GridScenario, Jitter, PinchKind, PinchScenario, RetractionPolicy, Timing,
};
use crate::Result;

/// Sessions in each tap-study preset.
pub const STUDY1_SESSIONS: u32 = 10;

/// Sessions in each pinch-study preset.
pub const STUDY2_SESSIONS: u32 = 8;

/// Sessions in the tablet-study preset.
pub const STUDY3_SESSIONS: u32 = 8;

/// The single-session scenario of a study, tagged with its gesture family.
#[derive(Debug, Clone, PartialEq)]
pub enum Protocol {
    /// Single-finger target taps.
    Grid(GridScenario),
    /// Two-finger pinches (at most one disc down at a time).
    Pinch(PinchScenario),
    /// Two-finger pinches where a chord of two discs can be down at once.
    ChordedPinch(PinchScenario),
}

/// A complete study protocol: a per-session scenario repeated over sessions.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyPreset {
    /// Preset name as accepted by the CLI (e.g. `"study1"`).
    pub name: String,
    /// Number of recording sessions.
    pub sessions: u32,
    /// The scenario each session executes (with a distinct derived seed).
    pub protocol: Protocol,
}

/// The class label a disc polarity defines.
fn polarity_label(polarity: Polarity) -> &'static str {
    match polarity {
        Polarity::NorthUp => "north",
        Polarity::SouthUp => "south",
    }
}

/// Phone tap study with one magnetic fingerprint.
///
/// An instrumented middle finger (disc `diameter_mm` × `height_mm`, the given
/// polarity) and a plain index finger each tap every cell of a 3 × 4 grid
/// twice per session, inactive fingers curled at the palm; 10 sessions of
/// 48 touches → 480 labeled rows.
pub fn study1(diameter_mm: f64, height_mm: f64, polarity: Polarity) -> Result<StudyPreset> {
    let disc = MagnetSpec::n40(diameter_mm, height_mm, polarity, polarity_label(polarity))?;
    Ok(StudyPreset {
        name: "study1".into(),
        sessions: STUDY1_SESSIONS,
        protocol: Protocol::Grid(GridScenario {
            device: DeviceModel::iphone4(),
            earth: EarthField::default(),
            grid: Grid::new(3, 4)?,
            targets_per_cell: 2,
            fingers: vec![FingerModel::plain(), FingerModel::magnetic(disc)],
            retraction: RetractionPolicy::PalmCurl,
            timing: Timing::default(),
            jitter: Jitter::default(),
        }),
    })
}

/// Phone tap study with two opposite-polarity fingerprints.
///
/// Discs of the given size ride the index (north up) and ring (south up)
/// fingers; the middle finger stays plain. Three finger blocks per session,
/// 72 touches each; 10 sessions → 720 labeled rows over three classes.
pub fn study1_two_fingerprints(diameter_mm: f64, height_mm: f64) -> Result<StudyPreset> {
    let north = MagnetSpec::n40(diameter_mm, height_mm, Polarity::NorthUp, "north")?;
    let south = MagnetSpec::n40(diameter_mm, height_mm, Polarity::SouthUp, "south")?;
    Ok(StudyPreset {
        name: "study1-2fp".into(),
        sessions: STUDY1_SESSIONS,
        protocol: Protocol::Grid(GridScenario {
            device: DeviceModel::iphone4(),
            earth: EarthField::default(),
            grid: Grid::new(3, 4)?,
            targets_per_cell: 2,
            fingers: vec![
                FingerModel::magnetic(north),
                FingerModel::plain(),
                FingerModel::magnetic(south),
            ],
            retraction: RetractionPolicy::PalmCurl,
            timing: Timing::default(),
            jitter: Jitter::default(),
        }),
    })
}

/// The ten pinch target pairs on the phone grid: six horizontal neighbors
/// and four diagonals.
fn phone_pinch_pairs() -> Vec<((u32, u32), (u32, u32))> {
    vec![
        // Horizontal, rows 0–2.
        ((0, 0), (1, 0)),
        ((1, 0), (2, 0)),
        ((0, 1), (1, 1)),
        ((1, 1), (2, 1)),
        ((0, 2), (1, 2)),
        ((1, 2), (2, 2)),
        // Diagonal.
        ((0, 0), (1, 1)),
        ((1, 0), (2, 1)),
        ((0, 2), (1, 3)),
        ((1, 2), (2, 3)),
    ]
}

/// Phone pinch study: plain thumb–index pinches versus thumb–middle pinches
/// where the middle finger carries the disc.
///
/// Ten target pairs × 2 repetitions × 2 pinch kinds = 40 gestures per
/// session; 8 sessions → 320 pinch rows, 160 per class.
pub fn study2(diameter_mm: f64, height_mm: f64, polarity: Polarity) -> Result<StudyPreset> {
    let disc = MagnetSpec::n40(diameter_mm, height_mm, polarity, polarity_label(polarity))?;
    Ok(StudyPreset {
        name: "study2".into(),
        sessions: STUDY2_SESSIONS,
        protocol: Protocol::Pinch(PinchScenario {
            device: DeviceModel::iphone4(),
            earth: EarthField::default(),
            grid: Grid::new(3, 4)?,
            fingers: vec![
                FingerModel::plain(),        // thumb
                FingerModel::plain(),        // index
                FingerModel::magnetic(disc), // middle
            ],
            kinds: vec![
                PinchKind { label: "thumb-index".into(), thumb: 0, partner: 1 },
                PinchKind { label: "thumb-middle".into(), thumb: 0, partner: 2 },
            ],
            pairs: phone_pinch_pairs(),
            repetitions: 2,
            retraction: RetractionPolicy::PalmCurl,
            timing: Timing::default(),
            jitter: Jitter::default(),
        }),
    })
}

/// Phone chorded-pinch study: discs on both thumb (north up) and index
/// (south up), so a thumb–index pinch puts two opposing dipoles down at once.
///
/// Ten target pairs × 1 repetition × 3 pinch kinds = 30 gestures per session;
/// 8 sessions → 240 pinch rows, 80 per class.
pub fn study2_chorded(diameter_mm: f64, height_mm: f64) -> Result<StudyPreset> {
    let thumb = MagnetSpec::n40(diameter_mm, height_mm, Polarity::NorthUp, "north")?;
    let index = MagnetSpec::n40(diameter_mm, height_mm, Polarity::SouthUp, "south")?;
    Ok(StudyPreset {
        name: "study2-chorded".into(),
        sessions: STUDY2_SESSIONS,
        protocol: Protocol::ChordedPinch(PinchScenario {
            device: DeviceModel::iphone4(),
            earth: EarthField::default(),
            grid: Grid::new(3, 4)?,
            fingers: vec![
                FingerModel::magnetic(thumb),
                FingerModel::magnetic(index),
                FingerModel::plain(), // middle
            ],
            kinds: vec![
                PinchKind { label: "thumb-index".into(), thumb: 0, partner: 1 },
                PinchKind { label: "thumb-middle".into(), thumb: 0, partner: 2 },
                PinchKind { label: "index-middle".into(), thumb: 1, partner: 2 },
            ],
            pairs: phone_pinch_pairs(),
            repetitions: 1,
            retraction: RetractionPolicy::PalmCurl,
            timing: Timing::default(),
            jitter: Jitter::default(),
        }),
    })
}

/// Tablet tap study: the phone protocol's hand on a tablet's 8 × 6 grid,
/// one target per cell per finger.
///
/// 96 touches per session; 8 sessions → 768 labeled rows. Restrict the
/// resulting dataset with [`filter_by_cells`] and
/// [`crate::synth::Grid::cells_near_sensor`] to study accuracy versus
/// distance from the magnetometer.
pub fn study3(diameter_mm: f64, height_mm: f64, polarity: Polarity) -> Result<StudyPreset> {
    let disc = MagnetSpec::n40(diameter_mm, height_mm, polarity, polarity_label(polarity))?;
    Ok(StudyPreset {
        name: "study3".into(),
        sessions: STUDY3_SESSIONS,
        protocol: Protocol::Grid(GridScenario {
            device: DeviceModel::ipad4(),
            earth: EarthField::default(),
            grid: Grid::new(8, 6)?,
            targets_per_cell: 1,
            fingers: vec![FingerModel::plain(), FingerModel::magnetic(disc)],
            retraction: RetractionPolicy::PalmCurl,
            timing: Timing::default(),
            jitter: Jitter::default(),
        }),
    })
}

/// Look up a preset by CLI name. `diameter_mm` × `height_mm` and `polarity`
/// configure the instrumented finger(s); two-disc presets ignore `polarity`
/// (they always mount opposite polarities).
pub fn by_name(
    name: &str,
    diameter_mm: f64,
    height_mm: f64,
    polarity: Polarity,
) -> Result<StudyPreset> {
    match name {
        "study1" => study1(diameter_mm, height_mm, polarity),
        "study1-2fp" => study1_two_fingerprints(diameter_mm, height_mm),
        "study2" => study2(diameter_mm, height_mm, polarity),
        "study2-chorded" => study2_chorded(diameter_mm, height_mm),
        "study3" => study3(diameter_mm, height_mm, polarity),
        other => Err(Error::InvalidScenario(format!(
            "unknown preset {other:?} (expected study1, study1-2fp, study2, study2-chorded, or study3)"
        ))),
    }
}

/// Names accepted by [`by_name`], for help text and error messages.
pub const PRESET_NAMES: [&str; 5] = ["study1", "study1-2fp", "study2", "study2-chorded", "study3"];

/// Generate every session trace of a preset.
///
/// Session `i` runs with seed `mix2(seed, SESSION, i)`, so sessions are
/// mutually independent yet the whole study is a pure function of `seed`.
pub fn generate_sessions(preset: &StudyPreset, seed: u64) -> Result<Vec<SensorTrace>> {
    (0..preset.sessions)
        .map(|i| {
            let session_seed = mix2(seed, salt::SESSION, u64::from(i));
            match &preset.protocol {
                Protocol::Grid(s) => synthesize_grid_session(s, session_seed),
                Protocol::Pinch(s) => synthesize_pinch_session(s, session_seed),
                Protocol::ChordedPinch(s) => synthesize_chorded_pinch(s, session_seed),
            }
        })
        .collect()
}

/// Extract the labeled feature rows of one session trace.
///
/// Single-contact touches become tap rows (62 features); double-contact
/// touches are paired in timestamp order into pinch rows (64 features).
/// Every row's `meta.session` is set to `session`.
pub fn session_rows(trace: &SensorTrace, session: u32) -> Result<Vec<FeatureVector>> {
    let touches = trace.touches();
    let mut rows = Vec::new();
    let mut i = 0;
    while i < touches.len() {
        let touch = &touches[i];
        let mut row = if touch.contact_count >= 2 {
            let partner = touches.get(i + 1).filter(|t| t.contact_count >= 2).ok_or_else(|| {
                Error::InvalidTrace(format!(
                    "touch at t={} declares {} contacts but has no partner",
                    touch.timestamp, touch.contact_count
                ))
            })?;
            let row = extract_pinch_features(trace, touch, partner)?;
            i += 2;
            row
        } else {
            let row = extract_touch_features(trace, touch)?;
            i += 1;
            row
        };
        row.meta.session = session;
        rows.push(row);
    }
    Ok(rows)
}

/// Assemble a labeled dataset from session traces (session `i` gets
/// `meta.session = i`).
pub fn dataset_from_sessions(sessions: &[SensorTrace]) -> Result<Dataset> {
    let mut rows = Vec::new();
    for (i, trace) in sessions.iter().enumerate() {
        rows.extend(session_rows(trace, i as u32)?);
    }
    Dataset::new(rows)
}

/// Generate a preset's full labeled dataset: sessions plus extraction.
///
/// ```
/// use magprints::device::DeviceModel;
/// use magprints::magnetics::{EarthField, MagnetSpec, Polarity};
/// use magprints::presets::{generate_dataset, Protocol, StudyPreset};
/// use magprints::synth::{FingerModel, Grid, GridScenario, Jitter, RetractionPolicy, Timing};
///
/// // A miniature study: one magnetic and one plain finger each tap every
/// // cell of a 2x2 grid once per session, for two sessions.
/// let scenario = GridScenario {
///     device: DeviceModel::iphone4(),
///     earth: EarthField::default(),
///     grid: Grid::new(2, 2)?,
///     targets_per_cell: 1,
///     fingers: vec![
///         FingerModel::magnetic(MagnetSpec::n40(7.9, 0.8, Polarity::NorthUp, "north")?),
///         FingerModel::plain(),
///     ],
///     retraction: RetractionPolicy::PalmCurl,
///     timing: Timing::default(),
///     jitter: Jitter::default(),
/// };
/// let preset = StudyPreset {
///     name: "mini".into(),
///     sessions: 2,
///     protocol: Protocol::Grid(scenario),
/// };
/// let data = generate_dataset(&preset, 7)?;
/// assert_eq!(data.rows().len(), 16); // 2 sessions x 4 cells x 2 fingers
/// assert_eq!(data.classes(), ["north".to_string(), "plain".to_string()]);
/// # Ok::<(), magprints::Error>(())
/// ```
pub fn generate_dataset(preset: &StudyPreset, seed: u64) -> Result<Dataset> {
    let sessions = generate_sessions(preset, seed)?;
    dataset_from_sessions(&sessions)
}

/// Keep only the rows recorded on the given grid cells (e.g. the
/// sensor-near sub-grid of the tablet study). Errors if no row survives.
pub fn filter_by_cells(dataset: &Dataset, cells: &BTreeSet<(u32, u32)>) -> Result<Dataset> {
    let rows: Vec<FeatureVector> = dataset
        .rows()
        .iter()
        .filter(|row| row.meta.cell.is_some_and(|c| cells.contains(&c)))
        .cloned()
        .collect();
    if rows.is_empty() {
        return Err(Error::DegenerateDataset("no rows fall on the requested cells".into()));
    }
    Dataset::new(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{PINCH_LEN, SINGLE_TOUCH_LEN};

    #[test]
    fn tap_preset_counts_match_the_protocols() {
        let preset = study1(7.9, 0.8, Polarity::NorthUp).unwrap();
        assert_eq!(preset.sessions, 10);
        let Protocol::Grid(scenario) = &preset.protocol else { panic!("study1 is a tap study") };
        assert_eq!(scenario.touch_count(), 48);
        assert_eq!(u64::from(preset.sessions) * u64::from(scenario.touch_count()), 480);

        let preset = study1_two_fingerprints(12.7, 0.8).unwrap();
        let Protocol::Grid(scenario) = &preset.protocol else { panic!("tap study") };
        assert_eq!(scenario.touch_count(), 72);
        assert_eq!(u64::from(preset.sessions) * u64::from(scenario.touch_count()), 720);

        let preset = study3(12.7, 0.8, Polarity::NorthUp).unwrap();
        let Protocol::Grid(scenario) = &preset.protocol else { panic!("tap study") };
        assert_eq!(scenario.touch_count(), 96);
        assert_eq!(u64::from(preset.sessions) * u64::from(scenario.touch_count()), 768);
    }

    #[test]
    fn pinch_preset_counts_match_the_protocols() {
        let preset = study2(7.9, 0.8, Polarity::NorthUp).unwrap();
        assert_eq!(preset.sessions, 8);
        let Protocol::Pinch(scenario) = &preset.protocol else { panic!("study2 pinches") };
        assert_eq!(scenario.gesture_count(), 40);
        assert_eq!(scenario.pairs.len(), 10);
        // 8 sessions x 40 gestures = 320 rows, 160 per class.
        assert_eq!(u64::from(preset.sessions) * u64::from(scenario.gesture_count()), 320);

        let preset = study2_chorded(12.7, 1.6).unwrap();
        let Protocol::ChordedPinch(scenario) = &preset.protocol else { panic!("chorded") };
        assert_eq!(scenario.gesture_count(), 30);
        assert_eq!(u64::from(preset.sessions) * u64::from(scenario.gesture_count()), 240);
    }

    #[test]
    fn study1_dataset_has_480_balanced_rows() {
        let preset = study1(7.9, 0.8, Polarity::NorthUp).unwrap();
        let dataset = generate_dataset(&preset, 7).unwrap();
        assert_eq!(dataset.rows().len(), 480);
        assert_eq!(dataset.classes(), ["north", "plain"]);
        assert_eq!(dataset.dim(), SINGLE_TOUCH_LEN);
        for (_, count) in dataset.class_counts() {
            assert_eq!(count, 240);
        }
        // Sessions are numbered 0..10 with 48 rows each.
        let mut per_session = std::collections::BTreeMap::new();
        for row in dataset.rows() {
            *per_session.entry(row.meta.session).or_insert(0usize) += 1;
        }
        assert_eq!(per_session.len(), 10);
        assert!(per_session.values().all(|&n| n == 48));
    }

    #[test]
    fn study2_dataset_has_160_rows_per_pinch_class() {
        let preset = study2(7.9, 0.8, Polarity::NorthUp).unwrap();
        let dataset = generate_dataset(&preset, 11).unwrap();
        assert_eq!(dataset.rows().len(), 320);
        assert_eq!(dataset.dim(), PINCH_LEN);
        assert_eq!(dataset.classes(), ["thumb-index", "thumb-middle"]);
        for (_, count) in dataset.class_counts() {
            assert_eq!(count, 160);
        }
    }

    #[test]
    fn chorded_dataset_has_80_rows_per_class() {
        let preset = study2_chorded(12.7, 1.6).unwrap();
        let dataset = generate_dataset(&preset, 13).unwrap();
        assert_eq!(dataset.rows().len(), 240);
        assert_eq!(dataset.classes(), ["index-middle", "thumb-index", "thumb-middle"]);
        for (_, count) in dataset.class_counts() {
            assert_eq!(count, 80);
        }
    }

    #[test]
    fn tablet_dataset_filters_to_the_sensor_near_subgrid() {
        let preset = study3(12.7, 0.8, Polarity::NorthUp).unwrap();
        let dataset = generate_dataset(&preset, 3).unwrap();
        assert_eq!(dataset.rows().len(), 768);

        let grid = Grid::new(8, 6).unwrap();
        let near: BTreeSet<(u32, u32)> =
            grid.cells_near_sensor(4.0, 3.0).unwrap().into_iter().collect();
        let sub = filter_by_cells(&dataset, &near).unwrap();
        // 12 of 48 cells -> a quarter of the rows, classes preserved.
        assert_eq!(sub.rows().len(), 192);
        assert_eq!(sub.classes(), dataset.classes());

        let none: BTreeSet<(u32, u32)> = BTreeSet::new();
        assert!(filter_by_cells(&dataset, &none).is_err());
    }

    #[test]
    fn preset_generation_is_deterministic_and_seed_sensitive() {
        let preset = study1(7.9, 0.8, Polarity::NorthUp).unwrap();
        let a = generate_sessions(&preset, 5).unwrap();
        let b = generate_sessions(&preset, 5).unwrap();
        assert_eq!(a, b);
        let c = generate_sessions(&preset, 6).unwrap();
        assert_ne!(a[0].samples(), c[0].samples());
        // Sessions within a study are mutually distinct.
        assert_ne!(a[0].samples(), a[1].samples());
    }

    #[test]
    fn preset_lookup_accepts_exactly_the_published_names() {
        for name in PRESET_NAMES {
            assert!(by_name(name, 7.9, 0.8, Polarity::NorthUp).is_ok(), "preset {name}");
        }
        assert!(by_name("study4", 7.9, 0.8, Polarity::NorthUp).is_err());
    }
}
