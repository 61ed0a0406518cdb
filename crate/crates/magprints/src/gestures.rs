//! Gesture vocabulary combinatorics and the streaming recognizer.
//!
//! With `p` interchangeable plain fingers and `f` mutually distinguishable
//! magnetic fingerprints, a touch of `t` fingers is characterized by the
//! *set* of fingerprints present — plain fingers add count but not identity.
//! [`enumerate_vocabulary`] lists every distinguishable `(touch count,
//! fingerprint set)` class a hand can produce; with one fingerprint, four
//! plain fingers, and one to five touch points that comes to nine classes.
//!
//! The recognizer side turns a raw trace into events: touches within the
//! pairing window fuse into pinches, every touch or pinch is classified by a
//! trained model over its differential features, and a pre-touch [`hover`]
//! pass reports an approaching magnet (with polarity) before contact.
//! [`rotary_angle`] tracks the in-plane field angle of a held magnetic
//! finger relative to its angle at touch, the mechanism behind knob-style
//! continuous input.

use std::collections::BTreeSet;

use crate::classifier::{predict, ClassifierModel};
use crate::device::SensorTrace;
use crate::features::{extract_pinch_features, extract_touch_features};
use crate::magnetics::Polarity;
use crate::{Error, Result};

/// The finger inventory and touch-count range a vocabulary is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VocabularyConfig {
    /// Unmagnetized fingers available (mutually indistinguishable).
    pub plain_fingers: u32,
    /// Distinct magnetic fingerprints available.
    pub fingerprint_count: u32,
    /// Smallest touch count in the vocabulary (≥ 1).
    pub min_touch_points: u32,
    /// Largest touch count in the vocabulary.
    pub max_touch_points: u32,
    /// Whether several magnetic fingers may touch simultaneously.
    pub chording_allowed: bool,
}

impl VocabularyConfig {
    /// Validate the count relationships.
    pub fn validate(&self) -> Result<()> {
        if self.min_touch_points < 1 {
            return Err(Error::InvalidVocabulary("min_touch_points must be at least 1".into()));
        }
        if self.min_touch_points > self.max_touch_points {
            return Err(Error::InvalidVocabulary(format!(
                "min_touch_points {} exceeds max_touch_points {}",
                self.min_touch_points, self.max_touch_points
            )));
        }
        let fingers = self.plain_fingers + self.fingerprint_count;
        if self.max_touch_points > fingers {
            return Err(Error::InvalidVocabulary(format!(
                "max_touch_points {} exceeds the {} available fingers",
                self.max_touch_points, fingers
            )));
        }
        Ok(())
    }
}

/// One distinguishable gesture class: how many fingers touched and which
/// fingerprints were among them.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct GestureClass {
    /// Number of simultaneous touch points.
    pub touch_count: u32,
    /// Fingerprint ids present (`0..fingerprint_count`).
    pub fingerprint_set: BTreeSet<u32>,
}

impl GestureClass {
    /// Canonical whitespace-free name, e.g. `t3`, `t2.fp0`, `t4.fp0.fp1`.
    pub fn name(&self) -> String {
        let mut s = format!("t{}", self.touch_count);
        for id in &self.fingerprint_set {
            s.push_str(&format!(".fp{id}"));
        }
        s
    }
}

/// Every distinguishable gesture class the configuration allows, sorted.
///
/// A class `(t, S)` is realizable when `|S| ≤ t` fingerprints and
/// `t − |S| ≤ plain_fingers` plain fingers can be recruited; configurations
/// with chording disabled drop every class using two or more fingerprints.
///
/// ```
/// use magprints::gestures::{enumerate_vocabulary, VocabularyConfig};
/// let cfg = VocabularyConfig {
///     plain_fingers: 4,
///     fingerprint_count: 1,
///     min_touch_points: 1,
///     max_touch_points: 5,
///     chording_allowed: false,
/// };
/// // One magnetic fingerprint doubles almost the whole tap vocabulary:
/// // two classes per touch count below five, plus the five-finger touch.
/// assert_eq!(enumerate_vocabulary(&cfg)?.len(), 9);
/// # Ok::<(), magprints::Error>(())
/// ```
pub fn enumerate_vocabulary(cfg: &VocabularyConfig) -> Result<Vec<GestureClass>> {
    cfg.validate()?;
    let mut classes = BTreeSet::new();
    for t in cfg.min_touch_points..=cfg.max_touch_points {
        // Iterate fingerprint subsets as bitmasks of 0..fingerprint_count.
        for mask in 0u64..(1u64 << cfg.fingerprint_count) {
            let size = mask.count_ones();
            if size > t {
                continue;
            }
            if t - size > cfg.plain_fingers {
                continue;
            }
            if !cfg.chording_allowed && size >= 2 {
                continue;
            }
            let fingerprint_set =
                (0..cfg.fingerprint_count).filter(|id| mask & (1 << id) != 0).collect();
            classes.insert(GestureClass { touch_count: t, fingerprint_set });
        }
    }
    Ok(classes.into_iter().collect())
}

/// Thresholds and windows for the streaming recognizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecognizerConfig {
    /// Two touches at most this far apart in time fuse into a pinch, s.
    pub pinch_window_s: f64,
    /// Field deviation that counts as an approaching magnet, µT.
    pub hover_threshold_ut: f64,
    /// Consecutive above-threshold samples required to fire a hover.
    pub hover_run: usize,
    /// Minimum in-plane deviation for a determinate rotary angle, µT.
    pub rotary_threshold_ut: f64,
    /// Length of the baseline window at the start of a trace, s.
    pub baseline_s: f64,
}

impl Default for RecognizerConfig {
    fn default() -> Self {
        RecognizerConfig {
            pinch_window_s: 0.100,
            hover_threshold_ut: 5.0,
            hover_run: 3,
            rotary_threshold_ut: 10.0,
            baseline_s: 0.25,
        }
    }
}

/// One recognized event, in trace time.
#[derive(Debug, Clone, PartialEq)]
pub enum GestureEvent {
    /// A single-finger touch and its predicted class.
    Tap {
        /// Touch timestamp, s.
        timestamp: f64,
        /// Predicted class, absent when `warning` explains why.
        label: Option<String>,
        /// Why classification was skipped (e.g. not enough history).
        warning: Option<String>,
    },
    /// A two-finger pinch and its predicted class.
    Pinch {
        /// Earlier of the two touch timestamps, s.
        timestamp: f64,
        /// Predicted class, absent when `warning` explains why.
        label: Option<String>,
        /// Why classification was skipped.
        warning: Option<String>,
    },
    /// A magnet approached before any contact.
    Hover {
        /// Timestamp of the first above-threshold sample, s.
        timestamp: f64,
        /// Polarity inferred from the dominant field change.
        polarity: Polarity,
    },
    /// Angle progress of a held rotary gesture.
    Rotary {
        /// Sample timestamp, s.
        timestamp: f64,
        /// Angle relative to touch onset, degrees, clamped to ±90.
        angle_deg: f64,
    },
}

impl GestureEvent {
    /// When the event occurred.
    pub fn timestamp(&self) -> f64 {
        match self {
            GestureEvent::Tap { timestamp, .. }
            | GestureEvent::Pinch { timestamp, .. }
            | GestureEvent::Hover { timestamp, .. }
            | GestureEvent::Rotary { timestamp, .. } => *timestamp,
        }
    }
}

/// Per-axis median of the samples in the leading `baseline_s` of the trace.
/// `None` when the trace does not cover the baseline window.
fn baseline(trace: &SensorTrace, baseline_s: f64) -> Option<nalgebra::Vector3<f64>> {
    let start = trace.start()?;
    if trace.end()? - start < baseline_s {
        return None;
    }
    let window: Vec<_> = trace.samples().iter().take_while(|s| s.t - start < baseline_s).collect();
    let mut axes = nalgebra::Vector3::zeros();
    for axis in 0..3 {
        let mut values: Vec<f64> = window.iter().map(|s| s.b[axis]).collect();
        values.sort_by(f64::total_cmp);
        let n = values.len();
        axes[axis] =
            if n % 2 == 1 { values[n / 2] } else { (values[n / 2 - 1] + values[n / 2]) / 2.0 };
    }
    Some(axes)
}

/// Detect an approaching magnet before contact.
///
/// The baseline is the per-axis median of the first `baseline_s` of the
/// trace; a hover fires at the first of `hover_run` consecutive samples
/// whose deviation from baseline exceeds `hover_threshold_ut`. Polarity is
/// the sign of the deviation's dominant component at the firing sample
/// (an approaching north-up magnet pushes the field up, i.e. positive).
/// Returns `None` when nothing approaches or the trace is shorter than the
/// baseline window.
pub fn hover_detect(trace: &SensorTrace, cfg: &RecognizerConfig) -> Option<(Polarity, f64)> {
    let base = baseline(trace, cfg.baseline_s)?;
    let start = trace.start()?;
    let mut run = 0usize;
    let mut run_start = None;
    for sample in trace.samples().iter().skip_while(|s| s.t - start < cfg.baseline_s) {
        let dev = sample.b - base;
        if dev.norm() > cfg.hover_threshold_ut {
            if run == 0 {
                run_start = Some((sample.t, dev));
            }
            run += 1;
            if run >= cfg.hover_run {
                let (onset, first_dev) = run_start.expect("run started");
                let dominant =
                    (0..3).max_by(|a, b| first_dev[*a].abs().total_cmp(&first_dev[*b].abs()))?;
                let polarity =
                    if first_dev[dominant] >= 0.0 { Polarity::NorthUp } else { Polarity::SouthUp };
                return Some((polarity, onset));
            }
        } else {
            run = 0;
            run_start = None;
        }
    }
    None
}

/// One point of a rotary trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleSample {
    /// Sample timestamp, s.
    pub t: f64,
    /// Unwrapped angle relative to touch onset, degrees, clamped to ±90;
    /// `None` while the in-plane deviation is below the rotary threshold.
    pub angle_deg: Option<f64>,
}

/// Track the in-plane field angle of a held magnetic finger.
///
/// Subtracts the trace-start baseline, projects the deviation onto the
/// screen plane, and reports the planar angle `atan2(Y, X)` unwrapped
/// relative to its value at the anchor touch, clamped to ±90°. Samples whose
/// in-plane deviation is below `rotary_threshold_ut` are indeterminate
/// (`None`) — a plain finger never produces a determinate angle. If the
/// anchor sample itself is indeterminate there is no reference and the whole
/// trajectory is indeterminate.
pub fn rotary_angle(
    trace: &SensorTrace,
    anchor_timestamp: f64,
    cfg: &RecognizerConfig,
) -> Result<Vec<AngleSample>> {
    let base = baseline(trace, cfg.baseline_s).ok_or_else(|| {
        Error::InvalidTrace(format!("trace shorter than the {} s baseline window", cfg.baseline_s))
    })?;
    let (start, end) = (trace.start().expect("nonempty"), trace.end().expect("nonempty"));
    if anchor_timestamp < start || anchor_timestamp > end {
        return Err(Error::TouchOutsideTrace { touch: anchor_timestamp, start, end });
    }
    let slack = crate::features::LOOKUP_SLACK_S;
    let first = trace.samples().partition_point(|s| s.t <= anchor_timestamp + slack) - 1;
    let in_plane = |i: usize| {
        let dev = trace.samples()[i].b - base;
        let magnitude = dev.x.hypot(dev.y);
        (magnitude > cfg.rotary_threshold_ut).then(|| dev.y.atan2(dev.x).to_degrees())
    };
    let mut trajectory = Vec::with_capacity(trace.samples().len() - first);
    let mut previous_raw = in_plane(first);
    let mut cumulative = 0.0;
    let reference_ok = previous_raw.is_some();
    for i in first..trace.samples().len() {
        let t = trace.samples()[i].t;
        let raw = in_plane(i);
        let angle_deg = match (reference_ok, raw, previous_raw) {
            (true, Some(raw), Some(prev)) => {
                let mut delta = raw - prev;
                while delta > 180.0 {
                    delta -= 360.0;
                }
                while delta <= -180.0 {
                    delta += 360.0;
                }
                cumulative += delta;
                Some(cumulative.clamp(-90.0, 90.0))
            }
            _ => None,
        };
        if raw.is_some() {
            previous_raw = raw;
        }
        trajectory.push(AngleSample { t, angle_deg });
    }
    // The anchor sample itself is the zero reference.
    if let Some(first_point) = trajectory.first_mut() {
        if reference_ok {
            first_point.angle_deg = Some(0.0);
        }
    }
    Ok(trajectory)
}

/// Turn a trace into an ordered gesture-event stream.
///
/// Touches are paired greedily: a touch followed within the pinch window by
/// another becomes one pinch; everything else is a tap. Each event is
/// classified by `model` over its extracted features; extraction or
/// prediction failures become per-event warnings rather than stream
/// failures. A pre-touch hover, if any, is emitted as its own event. Events
/// arrive sorted by timestamp.
pub fn recognize_stream(
    trace: &SensorTrace,
    model: &ClassifierModel,
    cfg: &RecognizerConfig,
) -> Vec<GestureEvent> {
    let mut events = Vec::new();
    if let Some((polarity, timestamp)) = hover_detect(trace, cfg) {
        events.push(GestureEvent::Hover { timestamp, polarity });
    }
    let touches = trace.touches();
    let mut i = 0;
    while i < touches.len() {
        let paired = i + 1 < touches.len()
            && touches[i + 1].timestamp - touches[i].timestamp
                <= cfg.pinch_window_s + crate::features::LOOKUP_SLACK_S;
        if paired {
            let (a, b) = (&touches[i], &touches[i + 1]);
            let timestamp = a.timestamp.min(b.timestamp);
            let event = match extract_pinch_features(trace, a, b)
                .and_then(|row| predict(model, &row))
            {
                Ok(label) => GestureEvent::Pinch { timestamp, label: Some(label), warning: None },
                Err(e) => {
                    GestureEvent::Pinch { timestamp, label: None, warning: Some(e.to_string()) }
                }
            };
            events.push(event);
            i += 2;
        } else {
            let touch = &touches[i];
            let event =
                match extract_touch_features(trace, touch).and_then(|row| predict(model, &row)) {
                    Ok(label) => GestureEvent::Tap {
                        timestamp: touch.timestamp,
                        label: Some(label),
                        warning: None,
                    },
                    Err(e) => GestureEvent::Tap {
                        timestamp: touch.timestamp,
                        label: None,
                        warning: Some(e.to_string()),
                    },
                };
            events.push(event);
            i += 1;
        }
    }
    events.sort_by(|a, b| a.timestamp().total_cmp(&b.timestamp()));
    events
}
