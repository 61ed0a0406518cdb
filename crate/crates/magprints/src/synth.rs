//! Scripted synthetic study sessions.
//!
//! This module turns a declarative [`GridScenario`] or [`PinchScenario`] into
//! a fully sampled [`SensorTrace`] with ground-truth touch labels. A scenario
//! describes a hand: a list of [`FingerModel`]s (some carrying a disc magnet
//! on the nail, some plain), a target grid tiling the screen, and per-target
//! timing. The synthesizer choreographs one approach–touch–dwell leg per
//! target, moves the inactive fingers according to a [`RetractionPolicy`],
//! superposes every magnet's dipole field over the ambient field, and samples
//! the result through the device's magnetometer model.
//!
//! # Determinism contract
//!
//! A session is a pure function of `(scenario, seed)`. Three independent
//! random streams are derived from the seed: target ordering, motion jitter,
//! and sensor noise. The *draw order* of the jitter stream is part of the
//! format contract (changing it changes every synthetic trace):
//!
//! 1. per finger, in declaration order: mount-tilt extra angle, then azimuth;
//! 2. per leg: touch-point x, touch-point y (thumb first, then partner for
//!    pinches), standoff multiplier per active finger, pinch stagger (pinch
//!    legs only), then — under [`RetractionPolicy::PalmCurl`] — three wander
//!    draws per inactive finger in declaration order.

use nalgebra::Vector3;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::device::{sample_trace, DeviceModel, Scene, SensorTrace, TouchEvent};
use crate::error::Error;
use crate::features::HISTORY_S;
use crate::magnetics::{Dipole, EarthField, MagnetSpec};
use crate::seed::{mix, salt};
use crate::Result;

/// Default height, meters, from which a finger starts its descent.
pub const DEFAULT_APPROACH_HEIGHT_M: f64 = 0.080;

/// Default gap, meters, between the magnet (on the nail) and the glass while
/// the fingertip is pressed on the screen.
pub const DEFAULT_TOUCH_STANDOFF_M: f64 = 0.010;

/// How far behind the bottom screen edge a retracted hand parks, meters.
///
/// At this range the largest supported disc (12.7 mm × 2.4 mm N40) contributes
/// less than 0.5 µT at the magnetometer, below the sensor's noise floor.
pub const RETRACTION_DISTANCE_M: f64 = 0.55;

/// Height above the glass of a finger held hovering over a neighbor cell.
pub const HOVER_HEIGHT_M: f64 = 0.025;

/// Resting offset of a curled inactive finger relative to the active
/// fingertip: alongside the knuckle line, toward the palm, above the glass.
pub const CURL_OFFSET_M: Vector3<f64> = Vector3::new(0.0, -0.055, 0.020);

/// Lateral spacing between curled fingers sharing the palm, meters.
pub const CURL_SLOT_DX_M: f64 = 0.012;

/// Lowest height above the glass a curled finger may wander down to.
const CURL_MIN_Z_M: f64 = 0.004;

/// A finger participating in a session, optionally instrumented with a disc
/// magnet glued to the nail.
#[derive(Debug, Clone, PartialEq)]
pub struct FingerModel {
    /// The nail-mounted disc, or `None` for an uninstrumented finger.
    pub magnet: Option<MagnetSpec>,
    /// Height, meters, from which the descent toward a target begins.
    pub approach_height_m: f64,
    /// Magnet-to-glass gap, meters, while the fingertip presses the screen.
    pub touch_standoff_m: f64,
    /// Resting tilt of the magnet axis away from the screen normal, degrees.
    pub tilt_deg: f64,
}

impl FingerModel {
    /// An uninstrumented finger with default geometry.
    pub fn plain() -> FingerModel {
        FingerModel { magnet: None, ..FingerModel::default_geometry() }
    }

    /// A finger carrying `magnet`, with default geometry.
    pub fn magnetic(magnet: MagnetSpec) -> FingerModel {
        FingerModel { magnet: Some(magnet), ..FingerModel::default_geometry() }
    }

    fn default_geometry() -> FingerModel {
        FingerModel {
            magnet: None,
            approach_height_m: DEFAULT_APPROACH_HEIGHT_M,
            touch_standoff_m: DEFAULT_TOUCH_STANDOFF_M,
            tilt_deg: 0.0,
        }
    }

    /// The class label this finger produces: its magnet id, or `"plain"`.
    pub fn label(&self) -> &str {
        self.magnet.as_ref().map_or("plain", |m| &m.id)
    }

    fn validate(&self) -> Result<()> {
        if !self.touch_standoff_m.is_finite() || self.touch_standoff_m <= 0.0 {
            return Err(Error::InvalidScenario(format!(
                "touch standoff {} m must be positive",
                self.touch_standoff_m
            )));
        }
        if !self.approach_height_m.is_finite() || self.approach_height_m <= self.touch_standoff_m {
            return Err(Error::InvalidScenario(format!(
                "approach height {} m must exceed the touch standoff {} m",
                self.approach_height_m, self.touch_standoff_m
            )));
        }
        if !self.tilt_deg.is_finite() || !(0.0..90.0).contains(&self.tilt_deg) {
            return Err(Error::InvalidScenario(format!(
                "tilt {}° must lie in [0°, 90°)",
                self.tilt_deg
            )));
        }
        Ok(())
    }
}

/// Where the inactive fingers of the hand go while another finger works.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RetractionPolicy {
    /// The whole hand except the active finger withdraws past the bottom
    /// screen edge ([`RETRACTION_DISTANCE_M`] away), out of sensing range.
    Retracted,
    /// Inactive fingers hold [`HOVER_HEIGHT_M`] above a cell neighboring the
    /// active target.
    Hovering,
    /// Inactive fingers curl toward the palm and ride along with the active
    /// fingertip at [`CURL_OFFSET_M`], with a small per-leg wander. This is
    /// the realistic posture: nearby magnets keep interfering with the
    /// measurement.
    PalmCurl,
}

/// Per-target timing of a session, seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timing {
    /// Quiet time before the first leg while the hand moves into position.
    pub lead_in_s: f64,
    /// Lateral travel from the previous position to above the next target.
    pub glide_s: f64,
    /// Descent from the approach height down to the touch standoff.
    pub approach_s: f64,
    /// Hold (or pinch-drag) time after touchdown.
    pub dwell_s: f64,
}

impl Default for Timing {
    fn default() -> Timing {
        Timing { lead_in_s: 0.7, glide_s: 0.3, approach_s: 1.0, dwell_s: 0.2 }
    }
}

impl Timing {
    /// Duration of one full leg: glide + approach + dwell.
    pub fn leg_s(&self) -> f64 {
        self.glide_s + self.approach_s + self.dwell_s
    }

    fn validate(&self, dt: f64) -> Result<()> {
        for (name, v) in [
            ("lead-in", self.lead_in_s),
            ("glide", self.glide_s),
            ("approach", self.approach_s),
            ("dwell", self.dwell_s),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidScenario(format!("{name} time {v} s must be >= 0")));
            }
        }
        if self.glide_s <= 0.0 {
            return Err(Error::InvalidScenario("glide time must be positive".into()));
        }
        if self.approach_s < HISTORY_S {
            return Err(Error::WindowTooShort { needed: HISTORY_S, available: self.approach_s });
        }
        if self.dwell_s < dt {
            return Err(Error::InvalidScenario(format!(
                "dwell {} s is shorter than one sample interval {dt} s",
                self.dwell_s
            )));
        }
        Ok(())
    }
}

/// Magnitudes of the seeded motion imperfections a session applies.
///
/// All fields are standard deviations (drawn from centered normals and
/// clamped); setting one to zero removes that imperfection entirely.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jitter {
    /// Touch-point scatter as a fraction of the cell size (clamped to ±40 %
    /// of the cell, so a touch always lands inside its target cell).
    pub touch_sd_frac: f64,
    /// Relative scatter of the touch standoff (clamped to ±30 %).
    pub standoff_sd_frac: f64,
    /// Extra mount tilt per finger per session, degrees (folded positive).
    pub tilt_sd_deg: f64,
    /// Timing offset of the second pinch finger, seconds (clamped to ±50 ms).
    pub stagger_sd_s: f64,
    /// Per-leg drift of curled inactive fingers, meters per axis
    /// (clamped to ±30 mm); only used by [`RetractionPolicy::PalmCurl`].
    pub curl_wander_sd_m: f64,
}

impl Default for Jitter {
    fn default() -> Jitter {
        Jitter {
            touch_sd_frac: 0.12,
            standoff_sd_frac: 0.10,
            tilt_sd_deg: 6.0,
            stagger_sd_s: 0.020,
            curl_wander_sd_m: 0.012,
        }
    }
}

impl Jitter {
    /// No motion imperfections at all: every quantity takes its exact
    /// scripted value. Useful for physics tests.
    pub fn none() -> Jitter {
        Jitter {
            touch_sd_frac: 0.0,
            standoff_sd_frac: 0.0,
            tilt_sd_deg: 0.0,
            stagger_sd_s: 0.0,
            curl_wander_sd_m: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("touch jitter", self.touch_sd_frac),
            ("standoff jitter", self.standoff_sd_frac),
            ("tilt jitter", self.tilt_sd_deg),
            ("stagger jitter", self.stagger_sd_s),
            ("curl wander", self.curl_wander_sd_m),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidScenario(format!("{name} {v} must be >= 0")));
            }
        }
        Ok(())
    }
}

/// A rectangular target grid tiling the whole screen.
///
/// Cells are addressed `(col, row)` with `(0, 0)` at the screen's top-left
/// pixel corner; columns grow rightward, rows grow downward (pixel order).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    /// Number of columns.
    pub cols: u32,
    /// Number of rows.
    pub rows: u32,
}

impl Grid {
    /// Build a grid, rejecting empty dimensions.
    pub fn new(cols: u32, rows: u32) -> Result<Grid> {
        if cols == 0 || rows == 0 {
            return Err(Error::InvalidScenario(format!("grid {cols}x{rows} must be at least 1x1")));
        }
        Ok(Grid { cols, rows })
    }

    /// Total number of cells.
    pub fn cell_count(&self) -> u32 {
        self.cols * self.rows
    }

    /// All cells in row-major order (row 0 first, columns left to right).
    pub fn cells(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::with_capacity(self.cell_count() as usize);
        for row in 0..self.rows {
            for col in 0..self.cols {
                out.push((col, row));
            }
        }
        out
    }

    /// Pixel-space width and height of one cell on `device`.
    pub fn cell_size_px(&self, device: &DeviceModel) -> (f64, f64) {
        (
            f64::from(device.screen_width_px - 1) / f64::from(self.cols),
            f64::from(device.screen_height_px - 1) / f64::from(self.rows),
        )
    }

    /// Pixel coordinates of a cell's center.
    pub fn cell_center_px(&self, device: &DeviceModel, cell: (u32, u32)) -> Result<(f64, f64)> {
        let (col, row) = cell;
        if col >= self.cols || row >= self.rows {
            return Err(Error::InvalidScenario(format!(
                "cell ({col}, {row}) outside {}x{} grid",
                self.cols, self.rows
            )));
        }
        let (cw, ch) = self.cell_size_px(device);
        Ok(((f64::from(col) + 0.5) * cw, (f64::from(row) + 0.5) * ch))
    }

    /// Whether a pixel point lies inside a cell's rectangle.
    pub fn cell_contains_px(
        &self,
        device: &DeviceModel,
        cell: (u32, u32),
        x_px: f64,
        y_px: f64,
    ) -> bool {
        let (cw, ch) = self.cell_size_px(device);
        let x0 = f64::from(cell.0) * cw;
        let y0 = f64::from(cell.1) * ch;
        (x0..=x0 + cw).contains(&x_px) && (y0..=y0 + ch).contains(&y_px)
    }

    /// The cells whose centers fall inside a `sub_cols` × `sub_rows` rectangle
    /// (fractional sizes allowed) anchored at the magnetometer corner — the
    /// screen's top-right. Used to restrict an analysis to the sensor-near
    /// region of a larger screen.
    pub fn cells_near_sensor(&self, sub_cols: f64, sub_rows: f64) -> Result<Vec<(u32, u32)>> {
        if !sub_cols.is_finite() || !sub_rows.is_finite() || sub_cols <= 0.0 || sub_rows <= 0.0 {
            return Err(Error::InvalidScenario(format!(
                "sub-grid {sub_cols}x{sub_rows} must be positive"
            )));
        }
        let mut out = Vec::new();
        for row in 0..self.rows {
            for col in 0..self.cols {
                let from_right = f64::from(self.cols) - f64::from(col) - 0.5;
                let from_top = f64::from(row) + 0.5;
                if from_right < sub_cols && from_top < sub_rows {
                    out.push((col, row));
                }
            }
        }
        Ok(out)
    }
}

/// A tap-study session: each finger visits every grid cell a fixed number of
/// times, one finger block after another, in seeded random order within the
/// block.
#[derive(Debug, Clone, PartialEq)]
pub struct GridScenario {
    /// The device being touched.
    pub device: DeviceModel,
    /// Ambient field the magnetometer sits in.
    pub earth: EarthField,
    /// Target grid tiling the screen.
    pub grid: Grid,
    /// How many times each finger visits each cell.
    pub targets_per_cell: u32,
    /// The hand, in declaration order (blocks run in this order).
    pub fingers: Vec<FingerModel>,
    /// Where inactive fingers go.
    pub retraction: RetractionPolicy,
    /// Per-leg timing.
    pub timing: Timing,
    /// Motion imperfection magnitudes.
    pub jitter: Jitter,
}

impl GridScenario {
    /// Number of touches a session of this scenario produces.
    pub fn touch_count(&self) -> u32 {
        self.grid.cell_count() * self.targets_per_cell * self.fingers.len() as u32
    }

    fn validate(&self) -> Result<()> {
        validate_hand(&self.fingers)?;
        if self.targets_per_cell == 0 {
            return Err(Error::InvalidScenario("targets per cell must be at least 1".into()));
        }
        self.timing.validate(self.device.dt())?;
        self.jitter.validate()
    }
}

/// One pinch class: a label plus the two participating fingers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PinchKind {
    /// Class label both touches of the pinch receive.
    pub label: String,
    /// Index into the scenario's finger list: the thumb side.
    pub thumb: usize,
    /// Index into the scenario's finger list: the opposing finger.
    pub partner: usize,
}

/// A pinch-study session: every (kind × cell pair) combination is performed
/// `repetitions` times, in seeded random order.
#[derive(Debug, Clone, PartialEq)]
pub struct PinchScenario {
    /// The device being touched.
    pub device: DeviceModel,
    /// Ambient field the magnetometer sits in.
    pub earth: EarthField,
    /// Target grid tiling the screen.
    pub grid: Grid,
    /// The hand, in declaration order.
    pub fingers: Vec<FingerModel>,
    /// The pinch classes to perform.
    pub kinds: Vec<PinchKind>,
    /// Cell pairs to pinch across; the two cells must be one step apart
    /// (horizontally, vertically, or diagonally adjacent).
    pub pairs: Vec<((u32, u32), (u32, u32))>,
    /// Repetitions of each (kind, pair) combination.
    pub repetitions: u32,
    /// Where fingers not participating in the current pinch go.
    pub retraction: RetractionPolicy,
    /// Per-leg timing; the dwell is the drag phase of the pinch.
    pub timing: Timing,
    /// Motion imperfection magnitudes.
    pub jitter: Jitter,
}

impl PinchScenario {
    /// Number of pinch gestures (each contributing two touches) per session.
    pub fn gesture_count(&self) -> u32 {
        (self.kinds.len() * self.pairs.len()) as u32 * self.repetitions
    }

    fn validate(&self) -> Result<()> {
        validate_hand(&self.fingers)?;
        if self.kinds.is_empty() {
            return Err(Error::InvalidScenario("a pinch scenario needs at least one kind".into()));
        }
        let mut labels = std::collections::BTreeSet::new();
        for kind in &self.kinds {
            if kind.label.is_empty() || kind.label.chars().any(char::is_whitespace) {
                return Err(Error::InvalidScenario(format!(
                    "pinch label {:?} must be non-empty and whitespace-free",
                    kind.label
                )));
            }
            if !labels.insert(kind.label.as_str()) {
                return Err(Error::InvalidScenario(format!(
                    "duplicate pinch label {:?}",
                    kind.label
                )));
            }
            if kind.thumb >= self.fingers.len() || kind.partner >= self.fingers.len() {
                return Err(Error::InvalidScenario(format!(
                    "pinch kind {:?} references a finger outside the hand",
                    kind.label
                )));
            }
            if kind.thumb == kind.partner {
                return Err(Error::InvalidScenario(format!(
                    "pinch kind {:?} must use two distinct fingers",
                    kind.label
                )));
            }
        }
        if self.pairs.is_empty() {
            return Err(Error::InvalidScenario("a pinch scenario needs at least one pair".into()));
        }
        for &(a, b) in &self.pairs {
            for cell in [a, b] {
                if cell.0 >= self.grid.cols || cell.1 >= self.grid.rows {
                    return Err(Error::InvalidScenario(format!(
                        "pinch cell ({}, {}) outside {}x{} grid",
                        cell.0, cell.1, self.grid.cols, self.grid.rows
                    )));
                }
            }
            let dc = (i64::from(a.0) - i64::from(b.0)).abs();
            let dr = (i64::from(a.1) - i64::from(b.1)).abs();
            if dc > 1 || dr > 1 || (dc == 0 && dr == 0) {
                return Err(Error::InvalidScenario(format!(
                    "pinch cells ({}, {}) and ({}, {}) must be one cell apart",
                    a.0, a.1, b.0, b.1
                )));
            }
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidScenario("repetitions must be at least 1".into()));
        }
        self.timing.validate(self.device.dt())?;
        self.jitter.validate()
    }
}

fn validate_hand(fingers: &[FingerModel]) -> Result<()> {
    if fingers.is_empty() {
        return Err(Error::InvalidScenario("a scenario needs at least one finger".into()));
    }
    let mut ids = std::collections::BTreeSet::new();
    for finger in fingers {
        finger.validate()?;
        if let Some(magnet) = &finger.magnet {
            if magnet.id == "plain" {
                return Err(Error::InvalidScenario(
                    "magnet id \"plain\" collides with the uninstrumented class".into(),
                ));
            }
            if !ids.insert(magnet.id.as_str()) {
                return Err(Error::InvalidScenario(format!("duplicate magnet id {:?}", magnet.id)));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Motion: piecewise-interpolated finger tracks.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
enum Interp {
    /// Stay at `to` for the whole segment.
    Hold,
    /// Smoothstep (3u² − 2u³): zero velocity at both ends.
    Smooth,
    /// Cubic ease-in (u³): gentle start, fastest at the end — a descent that
    /// accelerates toward the touch.
    EaseIn,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    t0: f64,
    t1: f64,
    from: Vector3<f64>,
    to: Vector3<f64>,
    interp: Interp,
}

impl Segment {
    fn eval(&self, t: f64) -> Vector3<f64> {
        let span = self.t1 - self.t0;
        if span <= 0.0 {
            return self.to;
        }
        let u = ((t - self.t0) / span).clamp(0.0, 1.0);
        let s = match self.interp {
            Interp::Hold => 1.0,
            Interp::Smooth => u * u * (3.0 - 2.0 * u),
            Interp::EaseIn => u * u * u,
        };
        self.from + (self.to - self.from) * s
    }
}

/// The motion of one finger over a whole session, plus its magnet and axis.
#[derive(Debug, Clone)]
struct Track {
    segments: Vec<Segment>,
    magnet: Option<MagnetSpec>,
    /// Unit vector the magnet's "up" axis points along (screen normal tilted
    /// by the session's mount angle).
    axis: Vector3<f64>,
}

impl Track {
    fn position(&self, t: f64) -> Vector3<f64> {
        match self.segments.last() {
            None => Vector3::zeros(),
            Some(last) if t >= last.t1 => last.to,
            Some(_) => {
                let idx = self.segments.partition_point(|s| s.t1 <= t);
                self.segments[idx.min(self.segments.len() - 1)].eval(t)
            }
        }
    }
}

/// A time-indexed dipole path for a single finger, usable as a [`Scene`].
///
/// Produced by [`approach_trajectory`]; a plain finger yields an empty scene.
#[derive(Debug, Clone)]
pub struct FingerPath {
    track: Track,
    duration_s: f64,
}

impl FingerPath {
    /// Magnet position at time `t` (clamped to the path's span), meters.
    pub fn position_at(&self, t: f64) -> Vector3<f64> {
        self.track.position(t)
    }

    /// Total path duration: the descent plus one dwell sample.
    pub fn duration_s(&self) -> f64 {
        self.duration_s
    }
}

impl Scene for FingerPath {
    fn dipoles_at(&self, t: f64) -> Vec<Dipole> {
        match &self.track.magnet {
            None => Vec::new(),
            Some(magnet) => vec![magnet.dipole_with_axis(self.track.position(t), self.track.axis)],
        }
    }
}

/// Unit axis tilted `tilt_deg` away from the screen normal toward azimuth
/// `azimuth_rad` (0 = +X).
fn tilted_axis(tilt_deg: f64, azimuth_rad: f64) -> Vector3<f64> {
    let theta = tilt_deg.to_radians();
    let (sin_t, cos_t) = theta.sin_cos();
    let (sin_a, cos_a) = azimuth_rad.sin_cos();
    Vector3::new(sin_t * cos_a, sin_t * sin_a, cos_t)
}

/// The single-finger descent onto one grid cell, as a standalone scene.
///
/// The finger starts `approach_height_m` above the cell center, descends with
/// a cubic ease-in to `touch_standoff_m` at `t = duration_s`, then dwells for
/// one sample interval. The magnet axis is the screen normal tilted by the
/// finger's resting tilt (toward +X).
///
/// Errors with [`Error::WindowTooShort`] when `duration_s` is shorter than
/// the differential-feature history (0.5 s).
///
/// ```
/// use magprints::device::DeviceModel;
/// use magprints::magnetics::{MagnetSpec, Polarity};
/// use magprints::synth::{approach_trajectory, FingerModel, Grid};
///
/// let device = DeviceModel::iphone4();
/// let grid = Grid::new(3, 4)?;
/// let finger = FingerModel::magnetic(MagnetSpec::n40(7.9, 0.8, Polarity::NorthUp, "north")?);
/// let path = approach_trajectory(&finger, &device, &grid, (1, 2), 1.0)?;
/// // At the end of the descent the magnet sits at the touch standoff.
/// assert!((path.position_at(1.0).z - finger.touch_standoff_m).abs() < 1e-12);
/// # Ok::<(), magprints::Error>(())
/// ```
pub fn approach_trajectory(
    finger: &FingerModel,
    device: &DeviceModel,
    grid: &Grid,
    cell: (u32, u32),
    duration_s: f64,
) -> Result<FingerPath> {
    finger.validate()?;
    if !duration_s.is_finite() || duration_s < HISTORY_S {
        return Err(Error::WindowTooShort { needed: HISTORY_S, available: duration_s });
    }
    let (cx, cy) = grid.cell_center_px(device, cell)?;
    let center = device.pixel_to_glass(cx, cy)?;
    let top = Vector3::new(center.x, center.y, finger.approach_height_m);
    let touch = Vector3::new(center.x, center.y, finger.touch_standoff_m);
    let dwell = device.dt();
    let segments = vec![
        Segment { t0: 0.0, t1: duration_s, from: top, to: touch, interp: Interp::EaseIn },
        Segment {
            t0: duration_s,
            t1: duration_s + dwell,
            from: touch,
            to: touch,
            interp: Interp::Hold,
        },
    ];
    Ok(FingerPath {
        track: Track {
            segments,
            magnet: finger.magnet.clone(),
            axis: tilted_axis(finger.tilt_deg, 0.0),
        },
        duration_s: duration_s + dwell,
    })
}

// ---------------------------------------------------------------------------
// Session assembly.
// ---------------------------------------------------------------------------

/// The whole hand's motion over a session.
struct SessionScene {
    tracks: Vec<Track>,
}

impl Scene for SessionScene {
    fn dipoles_at(&self, t: f64) -> Vec<Dipole> {
        self.tracks
            .iter()
            .filter_map(|track| {
                track
                    .magnet
                    .as_ref()
                    .map(|magnet| magnet.dipole_with_axis(track.position(t), track.axis))
            })
            .collect()
    }
}

/// Shared per-session state while legs are appended.
struct SessionBuilder<'a> {
    device: &'a DeviceModel,
    grid: Grid,
    retraction: RetractionPolicy,
    tracks: Vec<Track>,
    /// Current position of each finger (end of its last segment).
    pos: Vec<Vector3<f64>>,
    touches: Vec<TouchEvent>,
}

impl<'a> SessionBuilder<'a> {
    fn new(
        device: &'a DeviceModel,
        grid: Grid,
        retraction: RetractionPolicy,
        fingers: &[FingerModel],
        axes: Vec<Vector3<f64>>,
    ) -> SessionBuilder<'a> {
        let park = park_point(device);
        let tracks = fingers
            .iter()
            .zip(axes)
            .map(|(finger, axis)| Track {
                segments: Vec::new(),
                magnet: finger.magnet.clone(),
                axis,
            })
            .collect();
        SessionBuilder {
            device,
            grid,
            retraction,
            tracks,
            pos: vec![park; fingers.len()],
            touches: Vec::new(),
        }
    }

    fn push(&mut self, finger: usize, t0: f64, t1: f64, to: Vector3<f64>, interp: Interp) {
        let from = self.pos[finger];
        self.tracks[finger].segments.push(Segment { t0, t1, from, to, interp });
        self.pos[finger] = to;
    }

    /// Where an inactive finger rests, given the active fingertip's target.
    /// `slot` numbers the inactive fingers (0, 1, …) in declaration order.
    fn rest_position(
        &self,
        slot: usize,
        active_cell: (u32, u32),
        active_tip: Vector3<f64>,
        wander: Vector3<f64>,
    ) -> Vector3<f64> {
        match self.retraction {
            RetractionPolicy::Retracted => park_point(self.device),
            RetractionPolicy::Hovering => {
                let (col, row) = active_cell;
                let step = 1 + slot as i64;
                let cand = i64::from(col) - step;
                let col_n = if cand >= 0 {
                    cand as u32
                } else {
                    (i64::from(col) + step).min(i64::from(self.grid.cols) - 1) as u32
                };
                // Grid cells always map to valid pixels, so unwrap is safe.
                let (cx, cy) = self
                    .grid
                    .cell_center_px(self.device, (col_n, row))
                    .expect("neighbor cell is inside the grid");
                let p = self.device.pixel_to_glass(cx, cy).expect("cell center is on screen");
                Vector3::new(p.x, p.y, HOVER_HEIGHT_M)
            }
            RetractionPolicy::PalmCurl => {
                let k = slot as f64;
                let side = if slot.is_multiple_of(2) { -1.0 } else { 1.0 };
                let dx = side * CURL_SLOT_DX_M * (1.0 + (k / 2.0).floor());
                let mut p = active_tip + CURL_OFFSET_M + wander;
                p.x += dx;
                p.z = p.z.max(CURL_MIN_Z_M);
                p
            }
        }
    }

    fn finish(self) -> (SessionScene, Vec<TouchEvent>) {
        (SessionScene { tracks: self.tracks }, self.touches)
    }
}

/// Park point of a withdrawn hand: past the bottom screen edge, on the table.
fn park_point(device: &DeviceModel) -> Vector3<f64> {
    Vector3::new(device.screen_width_m / 2.0, -RETRACTION_DISTANCE_M, 0.01)
}

/// Snap a touch instant to the sample it is reported on (the last sample at
/// or before the physical contact).
fn snap_to_sample(t: f64, rate_hz: f64) -> f64 {
    (t * rate_hz).floor() / rate_hz
}

fn clamped_normal<R: Rng>(rng: &mut R, sd: f64, limit: f64) -> f64 {
    let n = Normal::new(0.0, sd).expect("standard deviation is validated non-negative");
    n.sample(rng).clamp(-limit, limit)
}

/// Session-level axis draws: one folded-normal tilt increment and one uniform
/// azimuth per finger, in declaration order.
fn draw_axes<R: Rng>(fingers: &[FingerModel], jitter: &Jitter, rng: &mut R) -> Vec<Vector3<f64>> {
    fingers
        .iter()
        .map(|finger| {
            let extra = clamped_normal(rng, jitter.tilt_sd_deg, 3.0 * jitter.tilt_sd_deg).abs();
            let azimuth = rng.gen::<f64>() * std::f64::consts::TAU;
            let tilt = (finger.tilt_deg + extra).min(89.0);
            tilted_axis(tilt, azimuth)
        })
        .collect()
}

/// A jittered touch point inside `cell`: center plus clamped scatter, pixels.
fn draw_touch_px<R: Rng>(
    device: &DeviceModel,
    grid: &Grid,
    cell: (u32, u32),
    jitter: &Jitter,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let (cx, cy) = grid.cell_center_px(device, cell)?;
    let (cw, ch) = grid.cell_size_px(device);
    let dx = clamped_normal(rng, jitter.touch_sd_frac * cw, 0.4 * cw);
    let dy = clamped_normal(rng, jitter.touch_sd_frac * ch, 0.4 * ch);
    Ok((cx + dx, cy + dy))
}

fn draw_standoff<R: Rng>(finger: &FingerModel, jitter: &Jitter, rng: &mut R) -> f64 {
    let mult = 1.0 + clamped_normal(rng, jitter.standoff_sd_frac, 0.3);
    finger.touch_standoff_m * mult
}

/// Wander draws for inactive fingers (PalmCurl only): three clamped normals
/// per inactive finger, in declaration order. Other policies draw nothing.
fn draw_wanders<R: Rng>(
    retraction: RetractionPolicy,
    inactive: &[usize],
    jitter: &Jitter,
    rng: &mut R,
) -> Vec<Vector3<f64>> {
    match retraction {
        RetractionPolicy::PalmCurl => inactive
            .iter()
            .map(|_| {
                let w = jitter.curl_wander_sd_m;
                Vector3::new(
                    clamped_normal(rng, w, 0.03),
                    clamped_normal(rng, w, 0.03),
                    clamped_normal(rng, w, 0.03),
                )
            })
            .collect(),
        _ => vec![Vector3::zeros(); inactive.len()],
    }
}

/// Synthesize one tap-study session: every finger visits every cell
/// `targets_per_cell` times (finger blocks in declaration order, seeded
/// order within a block), and every touchdown is recorded as a labeled
/// [`TouchEvent`] snapped to the sample grid.
///
/// The result is a pure function of `(scenario, seed)`.
pub fn synthesize_grid_session(scenario: &GridScenario, seed: u64) -> Result<SensorTrace> {
    scenario.validate()?;
    let device = &scenario.device;
    let timing = &scenario.timing;
    let mut order_rng = ChaCha8Rng::seed_from_u64(mix(seed, salt::ORDER));
    let mut jitter_rng = ChaCha8Rng::seed_from_u64(mix(seed, salt::JITTER));
    let noise_seed = mix(seed, salt::NOISE);

    // Target sequence: one block per finger, shuffled within the block.
    let mut legs: Vec<(usize, (u32, u32))> = Vec::new();
    for (fi, _) in scenario.fingers.iter().enumerate() {
        let mut cells: Vec<(u32, u32)> = Vec::new();
        for _ in 0..scenario.targets_per_cell {
            cells.extend(scenario.grid.cells());
        }
        cells.shuffle(&mut order_rng);
        legs.extend(cells.into_iter().map(|cell| (fi, cell)));
    }

    let axes = draw_axes(&scenario.fingers, &scenario.jitter, &mut jitter_rng);
    let mut builder =
        SessionBuilder::new(device, scenario.grid, scenario.retraction, &scenario.fingers, axes);

    // Lead-in: the first leg's finger pre-positions above its target; the
    // rest of the hand takes its resting pose.
    let first = legs.first().expect("validated scenarios have at least one leg");
    let (fx, fy) = scenario.grid.cell_center_px(device, first.1)?;
    let first_center = device.pixel_to_glass(fx, fy)?;
    let first_tip =
        Vector3::new(first_center.x, first_center.y, scenario.fingers[first.0].approach_height_m);
    let mut slot = 0;
    for fi in 0..scenario.fingers.len() {
        let to = if fi == first.0 {
            first_tip
        } else {
            let rest = builder.rest_position(slot, first.1, first_tip, Vector3::zeros());
            slot += 1;
            rest
        };
        builder.push(fi, 0.0, timing.lead_in_s, to, Interp::Smooth);
    }

    let leg_s = timing.leg_s();
    for (leg_idx, &(active, cell)) in legs.iter().enumerate() {
        let t0 = timing.lead_in_s + leg_idx as f64 * leg_s;
        let t_touch = t0 + timing.glide_s + timing.approach_s;
        let t_end = t0 + leg_s;

        // Jitter draws for this leg, in contract order.
        let (px, py) =
            draw_touch_px(device, &scenario.grid, cell, &scenario.jitter, &mut jitter_rng)?;
        let standoff = draw_standoff(&scenario.fingers[active], &scenario.jitter, &mut jitter_rng);
        let inactive: Vec<usize> = (0..scenario.fingers.len()).filter(|&fi| fi != active).collect();
        let wanders =
            draw_wanders(scenario.retraction, &inactive, &scenario.jitter, &mut jitter_rng);

        let glass = device.pixel_to_glass(px, py)?;
        let above = Vector3::new(glass.x, glass.y, scenario.fingers[active].approach_height_m);
        let tip = Vector3::new(glass.x, glass.y, standoff);

        builder.push(active, t0, t0 + timing.glide_s, above, Interp::Smooth);
        builder.push(active, t0 + timing.glide_s, t_touch, tip, Interp::EaseIn);
        builder.push(active, t_touch, t_end, tip, Interp::Hold);

        for (slot, (&fi, &wander)) in inactive.iter().zip(&wanders).enumerate() {
            let rest = builder.rest_position(slot, cell, tip, wander);
            builder.push(fi, t0, t_end, rest, Interp::Smooth);
        }

        builder.touches.push(TouchEvent {
            timestamp: snap_to_sample(t_touch, device.sample_rate_hz),
            x: px,
            y: py,
            true_label: Some(scenario.fingers[active].label().to_string()),
            contact_count: 1,
            cell: Some(cell),
        });
    }

    let duration = timing.lead_in_s + legs.len() as f64 * leg_s;
    let (scene, touches) = builder.finish();
    let trace = sample_trace(&scene, &scenario.earth, device, duration, noise_seed)?;
    SensorTrace::new(trace.samples().to_vec(), touches)
}

/// Synthesize one pinch-study session: every (kind × pair) combination is
/// performed `repetitions` times in seeded random order. Each gesture lands
/// two touches (`contact_count = 2`, same class label) within the pinch
/// pairing window, then drags the two contacts 20 % closer during the dwell.
pub fn synthesize_pinch_session(scenario: &PinchScenario, seed: u64) -> Result<SensorTrace> {
    scenario.validate()?;
    let device = &scenario.device;
    let timing = &scenario.timing;
    let mut order_rng = ChaCha8Rng::seed_from_u64(mix(seed, salt::ORDER));
    let mut jitter_rng = ChaCha8Rng::seed_from_u64(mix(seed, salt::JITTER));
    let noise_seed = mix(seed, salt::NOISE);

    // Gesture sequence: kinds × pairs × repetitions, shuffled together.
    let mut legs: Vec<(usize, usize)> = Vec::new();
    for kind in 0..scenario.kinds.len() {
        for pair in 0..scenario.pairs.len() {
            for _ in 0..scenario.repetitions {
                legs.push((kind, pair));
            }
        }
    }
    legs.shuffle(&mut order_rng);

    let axes = draw_axes(&scenario.fingers, &scenario.jitter, &mut jitter_rng);
    let mut builder =
        SessionBuilder::new(device, scenario.grid, scenario.retraction, &scenario.fingers, axes);

    // The thumb always takes the on-screen-lower cell of the pair (larger
    // pixel row; ties go to the left cell), matching a right hand pinching
    // upward across the pair.
    let assign = |pair: ((u32, u32), (u32, u32))| -> ((u32, u32), (u32, u32)) {
        let (a, b) = pair;
        if (a.1, std::cmp::Reverse(a.0)) >= (b.1, std::cmp::Reverse(b.0)) {
            (a, b)
        } else {
            (b, a)
        }
    };

    // Lead-in: both leg-0 fingers pre-position above their cells.
    let &(kind0, pair0) = legs.first().expect("validated scenarios have at least one leg");
    let kind0 = &scenario.kinds[kind0];
    let (thumb_cell0, partner_cell0) = assign(scenario.pairs[pair0]);
    let mut thumb_tip0 = Vector3::zeros();
    {
        let mut slot = 0;
        for fi in 0..scenario.fingers.len() {
            let to = if fi == kind0.thumb || fi == kind0.partner {
                let cell = if fi == kind0.thumb { thumb_cell0 } else { partner_cell0 };
                let (cx, cy) = scenario.grid.cell_center_px(device, cell)?;
                let p = device.pixel_to_glass(cx, cy)?;
                let tip = Vector3::new(p.x, p.y, scenario.fingers[fi].approach_height_m);
                if fi == kind0.thumb {
                    thumb_tip0 = tip;
                }
                tip
            } else {
                let rest = builder.rest_position(slot, thumb_cell0, thumb_tip0, Vector3::zeros());
                slot += 1;
                rest
            };
            builder.push(fi, 0.0, timing.lead_in_s, to, Interp::Smooth);
        }
    }

    let leg_s = timing.leg_s();
    for (leg_idx, &(kind_idx, pair_idx)) in legs.iter().enumerate() {
        let kind = &scenario.kinds[kind_idx];
        let (thumb_cell, partner_cell) = assign(scenario.pairs[pair_idx]);
        let t0 = timing.lead_in_s + leg_idx as f64 * leg_s;
        let t_end = t0 + leg_s;

        // Jitter draws for this leg, in contract order.
        let (tx, ty) =
            draw_touch_px(device, &scenario.grid, thumb_cell, &scenario.jitter, &mut jitter_rng)?;
        let (px, py) =
            draw_touch_px(device, &scenario.grid, partner_cell, &scenario.jitter, &mut jitter_rng)?;
        let thumb_standoff =
            draw_standoff(&scenario.fingers[kind.thumb], &scenario.jitter, &mut jitter_rng);
        let partner_standoff =
            draw_standoff(&scenario.fingers[kind.partner], &scenario.jitter, &mut jitter_rng);
        let stagger = clamped_normal(&mut jitter_rng, scenario.jitter.stagger_sd_s, 0.05);
        let inactive: Vec<usize> = (0..scenario.fingers.len())
            .filter(|&fi| fi != kind.thumb && fi != kind.partner)
            .collect();
        let wanders =
            draw_wanders(scenario.retraction, &inactive, &scenario.jitter, &mut jitter_rng);

        let thumb_glass = device.pixel_to_glass(tx, ty)?;
        let partner_glass = device.pixel_to_glass(px, py)?;
        let thumb_tip = Vector3::new(thumb_glass.x, thumb_glass.y, thumb_standoff);
        let partner_tip = Vector3::new(partner_glass.x, partner_glass.y, partner_standoff);

        // Contacts drag 20 % closer during the dwell: each moves 10 % of the
        // separation toward the other (in the screen plane).
        let gap = Vector3::new(partner_tip.x - thumb_tip.x, partner_tip.y - thumb_tip.y, 0.0);
        let thumb_drag = thumb_tip + gap * 0.1;
        let partner_drag = partner_tip - gap * 0.1;

        for (fi, tip, drag, shift) in [
            (kind.thumb, thumb_tip, thumb_drag, 0.0),
            (kind.partner, partner_tip, partner_drag, stagger),
        ] {
            let above = Vector3::new(tip.x, tip.y, scenario.fingers[fi].approach_height_m);
            let t_touch = t0 + timing.glide_s + timing.approach_s + shift;
            builder.push(fi, t0, t_touch - timing.approach_s, above, Interp::Smooth);
            builder.push(fi, t_touch - timing.approach_s, t_touch, tip, Interp::EaseIn);
            builder.push(fi, t_touch, t_end, drag, Interp::Smooth);
            builder.touches.push(TouchEvent {
                timestamp: snap_to_sample(t_touch, device.sample_rate_hz),
                x: if fi == kind.thumb { tx } else { px },
                y: if fi == kind.thumb { ty } else { py },
                true_label: Some(kind.label.clone()),
                contact_count: 2,
                cell: Some(if fi == kind.thumb { thumb_cell } else { partner_cell }),
            });
        }

        for (slot, (&fi, &wander)) in inactive.iter().zip(&wanders).enumerate() {
            let rest = builder.rest_position(slot, thumb_cell, thumb_tip, wander);
            builder.push(fi, t0, t_end, rest, Interp::Smooth);
        }
    }

    let duration = timing.lead_in_s + legs.len() as f64 * leg_s;
    let (scene, touches) = builder.finish();
    let trace = sample_trace(&scene, &scenario.earth, device, duration, noise_seed)?;
    SensorTrace::new(trace.samples().to_vec(), touches)
}

/// Synthesize a chorded pinch session: like [`synthesize_pinch_session`], but
/// the hand must carry two magnets of opposite polarity so that two-magnet
/// chords (both down at once) are distinguishable from single-magnet pinches.
pub fn synthesize_chorded_pinch(scenario: &PinchScenario, seed: u64) -> Result<SensorTrace> {
    let mut north = false;
    let mut south = false;
    for finger in &scenario.fingers {
        if let Some(magnet) = &finger.magnet {
            match magnet.polarity.sign() {
                s if s > 0.0 => north = true,
                _ => south = true,
            }
        }
    }
    if !(north && south) {
        return Err(Error::InvalidScenario(
            "a chorded pinch needs two magnetic fingers with opposite polarities".into(),
        ));
    }
    synthesize_pinch_session(scenario, seed)
}
