//! Differential feature extraction from magnetometer traces.
//!
//! A touch is described by where it landed and how the field at the sensor
//! moved during the half second before contact: the reading at the touch,
//! minus the readings 25 ms, 50 ms, …, 500 ms earlier. Differencing cancels
//! every constant background — the earth's field, hard-iron offsets, the
//! device's own magnetization — so only the approaching magnet (or its
//! absence) remains. No filtering is applied; the raw noisy samples feed the
//! differentials directly.
//!
//! Single touches yield 62 features: pixel x, pixel y, then twenty (X,Y,Z)
//! difference vectors ordered oldest (−500 ms) to newest (−25 ms). Pinches
//! yield 64: both touch positions (canonically ordered by x then y), then
//! the same twenty differences anchored at the *earlier* of the two touches.
//!
//! Lookups take the sample at-or-before the requested time — never
//! interpolated — so at 40 Hz the 25 ms lag grid lands exactly on the sample
//! grid and extraction is reproducible to the bit.

use crate::device::{SensorTrace, TouchEvent};
use crate::{Error, Result};

/// Features in a single-touch row: 2 coordinates + 20 lags × 3 axes.
pub const SINGLE_TOUCH_LEN: usize = 62;
/// Features in a pinch row: 4 coordinates + 20 lags × 3 axes.
pub const PINCH_LEN: usize = 64;
/// Number of differential lags.
pub const LAG_COUNT: usize = 20;
/// Spacing between lags, seconds.
pub const LAG_STEP_S: f64 = 0.025;
/// Pre-touch history the differential window requires, seconds.
pub const HISTORY_S: f64 = LAG_COUNT as f64 * LAG_STEP_S;
/// Two touches this close in time form one pinch, seconds.
pub const PINCH_PAIR_WINDOW_S: f64 = 0.100;

/// Slack for at-or-before sample lookups, seconds. Touch and lag times are
/// derived from the same 40 Hz grid as the samples but through different
/// float expressions; a nanosecond of slack absorbs that rounding without
/// ever being able to reach the next sample 25 ms away.
pub(crate) const LOOKUP_SLACK_S: f64 = 1e-9;

/// Row provenance carried alongside the feature values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RowMeta {
    /// Session the row came from (0 when extracted outside a study run).
    pub session: u32,
    /// Timestamp of the (earlier) touch, seconds.
    pub timestamp: f64,
    /// Target grid cell, when the touch was scripted.
    pub cell: Option<(u32, u32)>,
}

/// One labeled feature row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    /// Feature values; length 62 (single touch) or 64 (pinch).
    pub values: Vec<f64>,
    /// Class label, when ground truth is known.
    pub label: Option<String>,
    /// Row provenance.
    pub meta: RowMeta,
}

impl FeatureVector {
    /// Number of features.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// True when the row has no features (never produced by extraction).
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The differential block (everything after the coordinate block).
    ///
    /// Coordinates are 2 values for single-touch rows and 4 for pinch rows.
    pub fn differentials(&self) -> &[f64] {
        let coords = self.values.len() - 3 * LAG_COUNT;
        &self.values[coords..]
    }
}

/// Index of the last sample at-or-before `t` (with lookup slack).
fn index_at_or_before(trace: &SensorTrace, t: f64) -> Option<usize> {
    let n = trace.samples().partition_point(|s| s.t <= t + LOOKUP_SLACK_S);
    n.checked_sub(1)
}

/// Extract the 60 differential values ending at `anchor_t` into `out`.
fn push_differentials(trace: &SensorTrace, anchor_t: f64, out: &mut Vec<f64>) -> Result<()> {
    let samples = trace.samples();
    let (start, end) = match (trace.start(), trace.end()) {
        (Some(s), Some(e)) => (s, e),
        _ => return Err(Error::InvalidTrace("empty trace".into())),
    };
    let anchor = index_at_or_before(trace, anchor_t).ok_or(Error::TouchOutsideTrace {
        touch: anchor_t,
        start,
        end,
    })?;
    if anchor_t > end + LOOKUP_SLACK_S {
        return Err(Error::TouchOutsideTrace { touch: anchor_t, start, end });
    }
    let oldest = anchor_t - HISTORY_S;
    if start > oldest + LOOKUP_SLACK_S {
        return Err(Error::WindowTooShort { needed: HISTORY_S, available: anchor_t - start });
    }
    let m = samples[anchor].b;
    for k in (1..=LAG_COUNT).rev() {
        let lag_t = anchor_t - k as f64 * LAG_STEP_S;
        let v = samples[index_at_or_before(trace, lag_t).expect("window checked")].b;
        let c = m - v;
        out.push(c.x);
        out.push(c.y);
        out.push(c.z);
    }
    Ok(())
}

/// Features for one touch: `[x, y, c₂₀ … c₁]`, length 62.
///
/// `c_k` is the reading at the touch minus the reading `k`·25 ms earlier,
/// both taken at-or-before their nominal times. Requires 0.5 s of trace
/// before the touch.
///
/// ```
/// use magprints::device::{sample_trace, DeviceModel, TouchEvent};
/// use magprints::features::extract_touch_features;
/// use magprints::magnetics::EarthField;
///
/// // A still scene: every differential is exactly zero.
/// let dev = DeviceModel::iphone4().with_noise(0.0)?;
/// let trace = sample_trace(&|_t: f64| Vec::new(), &EarthField::default(), &dev, 1.0, 0)?;
/// let touch = TouchEvent {
///     timestamp: 0.75, x: 320.0, y: 480.0,
///     true_label: None, contact_count: 1, cell: None,
/// };
/// let row = extract_touch_features(&trace, &touch)?;
/// assert_eq!(row.values.len(), 62);
/// assert_eq!(&row.values[..2], &[320.0, 480.0]);
/// assert!(row.values[2..].iter().all(|&v| v == 0.0));
/// # Ok::<(), magprints::Error>(())
/// ```
pub fn extract_touch_features(trace: &SensorTrace, touch: &TouchEvent) -> Result<FeatureVector> {
    let mut values = Vec::with_capacity(SINGLE_TOUCH_LEN);
    values.push(touch.x);
    values.push(touch.y);
    push_differentials(trace, touch.timestamp, &mut values)?;
    debug_assert_eq!(values.len(), SINGLE_TOUCH_LEN);
    Ok(FeatureVector {
        values,
        label: touch.true_label.clone(),
        meta: RowMeta { session: 0, timestamp: touch.timestamp, cell: touch.cell },
    })
}

/// Features for a two-finger pinch: `[x_a, y_a, x_b, y_b, c₂₀ … c₁]`,
/// length 64.
///
/// The two touches are canonically ordered by x then y pixel coordinate, so
/// argument order never matters. The differential window is anchored at the
/// earlier touch timestamp. Touches more than 100 ms apart are not a pinch.
pub fn extract_pinch_features(
    trace: &SensorTrace,
    touch_a: &TouchEvent,
    touch_b: &TouchEvent,
) -> Result<FeatureVector> {
    let gap = (touch_a.timestamp - touch_b.timestamp).abs();
    if gap > PINCH_PAIR_WINDOW_S + LOOKUP_SLACK_S {
        return Err(Error::NotAPinch { gap_ms: gap * 1e3, window_ms: PINCH_PAIR_WINDOW_S * 1e3 });
    }
    let (first, second) = if (touch_a.x, touch_a.y) <= (touch_b.x, touch_b.y) {
        (touch_a, touch_b)
    } else {
        (touch_b, touch_a)
    };
    let anchor_t = touch_a.timestamp.min(touch_b.timestamp);
    let mut values = Vec::with_capacity(PINCH_LEN);
    values.extend_from_slice(&[first.x, first.y, second.x, second.y]);
    push_differentials(trace, anchor_t, &mut values)?;
    debug_assert_eq!(values.len(), PINCH_LEN);
    let label = first.true_label.clone().or_else(|| second.true_label.clone());
    let cell = first.cell.or(second.cell);
    Ok(FeatureVector { values, label, meta: RowMeta { session: 0, timestamp: anchor_t, cell } })
}

/// Per-feature affine transform fitted on a training set (z-scoring).
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    means: Vec<f64>,
    stds: Vec<f64>,
}

impl Scaler {
    /// Fit means and population standard deviations per feature column.
    pub fn fit(rows: &[FeatureVector]) -> Result<Scaler> {
        let first = rows
            .first()
            .ok_or_else(|| Error::DegenerateDataset("cannot fit a scaler on no rows".into()))?;
        let dim = first.len();
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    context: "scaler training rows".into(),
                    expected: dim,
                    got: row.len(),
                });
            }
        }
        let n = rows.len() as f64;
        let mut means = vec![0.0; dim];
        for row in rows {
            for (m, v) in means.iter_mut().zip(&row.values) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n;
        }
        let mut vars = vec![0.0; dim];
        for row in rows {
            for ((var, mean), v) in vars.iter_mut().zip(&means).zip(&row.values) {
                let d = v - mean;
                *var += d * d;
            }
        }
        let stds = vars.iter().map(|v| (v / n).sqrt()).collect();
        Ok(Scaler { means, stds })
    }

    /// Rebuild a scaler from stored parameters (e.g. a model file).
    pub fn from_parts(means: Vec<f64>, stds: Vec<f64>) -> Result<Scaler> {
        if means.len() != stds.len() {
            return Err(Error::DimensionMismatch {
                context: "scaler means vs stds".into(),
                expected: means.len(),
                got: stds.len(),
            });
        }
        Ok(Scaler { means, stds })
    }

    /// Per-feature means.
    pub fn means(&self) -> &[f64] {
        &self.means
    }

    /// Per-feature population standard deviations.
    pub fn stds(&self) -> &[f64] {
        &self.stds
    }

    /// Number of feature columns the scaler was fitted on.
    pub fn len(&self) -> usize {
        self.means.len()
    }

    /// True when fitted on zero columns (never produced by `fit`).
    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    /// Z-score one row: `(v − mean) / std`, with zero-variance columns
    /// mapping to 0.
    pub fn transform(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.means.len() {
            return Err(Error::DimensionMismatch {
                context: "scaler vs feature vector".into(),
                expected: self.means.len(),
                got: values.len(),
            });
        }
        Ok(values
            .iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(v, (m, s))| if *s > 0.0 { (v - m) / s } else { 0.0 })
            .collect())
    }
}

/// Fit a scaler on `train` and return it with the transformed rows.
///
/// Transformed training columns have mean 0 and variance 1 (zero-variance
/// columns map to all zeros). Apply the same scaler to held-out rows; never
/// refit on them.
pub fn standardize(train: &[FeatureVector]) -> Result<(Scaler, Vec<FeatureVector>)> {
    let scaler = Scaler::fit(train)?;
    let transformed = train
        .iter()
        .map(|row| {
            Ok(FeatureVector {
                values: scaler.transform(&row.values)?,
                label: row.label.clone(),
                meta: row.meta.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((scaler, transformed))
}
