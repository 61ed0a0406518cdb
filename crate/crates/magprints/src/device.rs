//! Device geometry and magnetometer sampling.
//!
//! A device is a screen (pixel grid mapped onto a physical rectangle) with a
//! three-axis magnetometer tucked under the top-right corner of the glass.
//! Device coordinates are right-handed: origin at the bottom-left corner of
//! the glass, X across the screen, Y along it, Z out of the glass face.
//! Pixel coordinates follow screen convention: origin top-left, y down;
//! pixel column `w-1` sits on the right physical edge.
//!
//! [`sample_trace`] renders a time-indexed dipole scene into the sequence of
//! field samples the magnetometer would report: total field at the sensor,
//! plus seeded zero-mean Gaussian noise per axis, saturated at the sensor's
//! full-scale range (default ±1200 µT, like a real compass chip's ADC), then
//! snapped to the sensor's quantization grid. Quantization (default
//! 2⁻¹⁰ µT/LSB, far below the noise floor) models the sensor ADC and is what
//! makes "shift every sample by a constant" an *exact* no-op for the
//! differential features downstream: on a shared dyadic grid the additions
//! and subtractions incur no rounding. Saturation matters for recognition:
//! without it, a fingertip right on top of the sensor would report
//! physically impossible tens of millitesla and dwarf every other row of a
//! dataset.

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::magnetics::{total_field, Dipole, EarthField};
use crate::{Error, Result};

/// Meters per inch, for preset screen dimensions quoted in inches.
const M_PER_INCH: f64 = 0.0254;

/// A touchscreen device with a built-in magnetometer.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceModel {
    /// Preset or user-chosen name, recorded in trace files.
    pub name: String,
    /// Screen width, pixels.
    pub screen_width_px: u32,
    /// Screen height, pixels.
    pub screen_height_px: u32,
    /// Screen width, meters.
    pub screen_width_m: f64,
    /// Screen height, meters.
    pub screen_height_m: f64,
    /// Magnetometer position in device coordinates, meters.
    pub magnetometer_pos: Vector3<f64>,
    /// Sampling rate, hertz.
    pub sample_rate_hz: f64,
    /// Per-axis Gaussian noise standard deviation, microtesla.
    pub noise_sigma_ut: f64,
    /// Sensor quantization step, microtesla per LSB (0 disables quantization).
    pub quantum_ut: f64,
    /// Full-scale measurement range, microtesla: reported samples saturate
    /// at ±`range_ut` per axis, like any real magnetometer ADC.
    pub range_ut: f64,
}

/// Sensor ADC step used by all presets: 2⁻¹⁰ µT, a dyadic grid three orders
/// of magnitude below the default noise floor.
pub const DEFAULT_QUANTUM_UT: f64 = 0.0009765625;

/// Full-scale range used by all presets: ±1200 µT per axis, typical of the
/// three-axis compass chips in phones of the studied era. Saturation is what
/// keeps a touch right on top of the sensor (tens of millitesla in free
/// space) from dwarfing every other sample in a dataset. The value is a
/// whole number of microtesla, so it lies exactly on the quantization grid.
pub const DEFAULT_RANGE_UT: f64 = 1200.0;

/// Magnetometer inset from the top and right glass edges, meters.
pub const MAGNETOMETER_INSET_M: f64 = 0.005;
/// Magnetometer depth below the glass surface, meters.
pub const MAGNETOMETER_DEPTH_M: f64 = 0.002;

impl DeviceModel {
    /// Build and validate a device model.
    ///
    /// The magnetometer must sit within the device bounding box: over the
    /// screen rectangle, between the glass surface and 20 mm below it.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: &str,
        screen_width_px: u32,
        screen_height_px: u32,
        screen_width_m: f64,
        screen_height_m: f64,
        magnetometer_pos: Vector3<f64>,
        sample_rate_hz: f64,
        noise_sigma_ut: f64,
        quantum_ut: f64,
    ) -> Result<DeviceModel> {
        if screen_width_px < 2 || screen_height_px < 2 {
            return Err(Error::InvalidDevice(format!(
                "screen must be at least 2x2 px, got {screen_width_px}x{screen_height_px}"
            )));
        }
        if !screen_width_m.is_finite()
            || screen_width_m <= 0.0
            || !screen_height_m.is_finite()
            || screen_height_m <= 0.0
        {
            return Err(Error::InvalidDevice("physical screen dimensions must be positive".into()));
        }
        if !sample_rate_hz.is_finite() || sample_rate_hz <= 0.0 {
            return Err(Error::InvalidDevice(format!(
                "sample rate {sample_rate_hz} Hz must be positive"
            )));
        }
        if !noise_sigma_ut.is_finite() || noise_sigma_ut < 0.0 {
            return Err(Error::InvalidDevice(format!(
                "noise sigma {noise_sigma_ut} uT must be non-negative"
            )));
        }
        if !quantum_ut.is_finite() || quantum_ut < 0.0 {
            return Err(Error::InvalidDevice(format!(
                "quantum {quantum_ut} uT must be non-negative"
            )));
        }
        let p = magnetometer_pos;
        let in_box = (0.0..=screen_width_m).contains(&p.x)
            && (0.0..=screen_height_m).contains(&p.y)
            && (-0.02..=0.0).contains(&p.z);
        if !in_box {
            return Err(Error::InvalidDevice(format!(
                "magnetometer at ({}, {}, {}) outside the device bounding box",
                p.x, p.y, p.z
            )));
        }
        Ok(DeviceModel {
            name: name.to_string(),
            screen_width_px,
            screen_height_px,
            screen_width_m,
            screen_height_m,
            magnetometer_pos,
            sample_rate_hz,
            noise_sigma_ut,
            quantum_ut,
            range_ut: DEFAULT_RANGE_UT,
        })
    }

    /// Helper for presets: magnetometer under the top-right glass corner.
    fn preset(name: &str, px: (u32, u32), inches: (f64, f64), sample_rate_hz: f64) -> DeviceModel {
        let w = inches.0 * M_PER_INCH;
        let h = inches.1 * M_PER_INCH;
        let mag =
            Vector3::new(w - MAGNETOMETER_INSET_M, h - MAGNETOMETER_INSET_M, -MAGNETOMETER_DEPTH_M);
        DeviceModel::new(name, px.0, px.1, w, h, mag, sample_rate_hz, 1.0, DEFAULT_QUANTUM_UT)
            .expect("preset geometry is valid")
    }

    /// Smartphone preset: 640x960 px portrait screen, 1.94" x 2.91", 40 Hz.
    pub fn iphone4() -> DeviceModel {
        DeviceModel::preset("iphone4", (640, 960), (1.94, 2.91), 40.0)
    }

    /// Tablet preset: 2048x1536 px landscape screen, 9.50" x 7.31", 40 Hz.
    pub fn ipad4() -> DeviceModel {
        DeviceModel::preset("ipad4", (2048, 1536), (9.50, 7.31), 40.0)
    }

    /// Small-tablet preset: the tablet's pixel density on a 6.5x5 cell
    /// active area (1664x1280 px), matching the subset-grid analyses.
    pub fn ipadmini() -> DeviceModel {
        DeviceModel::preset("ipadmini", (1664, 1280), (9.50 * 6.5 / 8.0, 7.31 * 5.0 / 6.0), 40.0)
    }

    /// Look up a preset by name.
    pub fn by_name(name: &str) -> Result<DeviceModel> {
        match name {
            "iphone4" => Ok(DeviceModel::iphone4()),
            "ipad4" => Ok(DeviceModel::ipad4()),
            "ipadmini" => Ok(DeviceModel::ipadmini()),
            other => Err(Error::InvalidDevice(format!(
                "unknown device preset `{other}` (expected iphone4, ipad4, or ipadmini)"
            ))),
        }
    }

    /// This device with a different noise level.
    pub fn with_noise(mut self, noise_sigma_ut: f64) -> Result<DeviceModel> {
        if !noise_sigma_ut.is_finite() || noise_sigma_ut < 0.0 {
            return Err(Error::InvalidDevice(format!(
                "noise sigma {noise_sigma_ut} uT must be non-negative"
            )));
        }
        self.noise_sigma_ut = noise_sigma_ut;
        Ok(self)
    }

    /// This device with a different full-scale range.
    pub fn with_range(mut self, range_ut: f64) -> Result<DeviceModel> {
        if !range_ut.is_finite() || range_ut <= 0.0 {
            return Err(Error::InvalidDevice(format!("range {range_ut} uT must be positive")));
        }
        self.range_ut = range_ut;
        Ok(self)
    }

    /// Glass-surface position of a pixel coordinate, in device coordinates.
    ///
    /// Pixels map linearly onto the physical screen: column 0 on the left
    /// edge, column `w-1` on the right edge; row 0 on the top edge (y =
    /// screen height), row `h-1` on the bottom edge (y = 0). Z is 0 at the
    /// glass. Fractional pixels (touch centroids) are accepted.
    pub fn pixel_to_glass(&self, x_px: f64, y_px: f64) -> Result<Vector3<f64>> {
        let max_x = f64::from(self.screen_width_px - 1);
        let max_y = f64::from(self.screen_height_px - 1);
        if !(0.0..=max_x).contains(&x_px) || !(0.0..=max_y).contains(&y_px) {
            return Err(Error::PixelOutOfRange {
                x: x_px,
                y: y_px,
                width: self.screen_width_px,
                height: self.screen_height_px,
            });
        }
        Ok(Vector3::new(
            x_px / max_x * self.screen_width_m,
            self.screen_height_m - y_px / max_y * self.screen_height_m,
            0.0,
        ))
    }

    /// Glass-surface position of a pixel, relative to the magnetometer.
    ///
    /// The pixel nearest the magnetometer is the top-right corner:
    ///
    /// ```
    /// use magprints::device::DeviceModel;
    /// let dev = DeviceModel::iphone4();
    /// let p = dev.screen_to_device(639.0, 0.0)?;
    /// // Exactly the corner insets: 5 mm in x and y, 2 mm in z.
    /// assert!((p.x - 0.005).abs() < 1e-12);
    /// assert!((p.y - 0.005).abs() < 1e-12);
    /// assert!((p.z - 0.002).abs() < 1e-12);
    /// # Ok::<(), magprints::Error>(())
    /// ```
    pub fn screen_to_device(&self, x_px: f64, y_px: f64) -> Result<Vector3<f64>> {
        Ok(self.pixel_to_glass(x_px, y_px)? - self.magnetometer_pos)
    }

    /// Sampling interval, seconds.
    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }
}

/// Snap a value to the sensor quantization grid (`quantum == 0` disables).
pub fn quantize_ut(value: f64, quantum_ut: f64) -> f64 {
    if quantum_ut > 0.0 {
        (value / quantum_ut).round() * quantum_ut
    } else {
        value
    }
}

/// One magnetometer reading: timestamp (s) and field (µT).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    /// Timestamp, seconds from trace start.
    pub t: f64,
    /// Field vector, microtesla.
    pub b: Vector3<f64>,
}

/// One touch-down event reported by the touchscreen.
#[derive(Debug, Clone, PartialEq)]
pub struct TouchEvent {
    /// Timestamp, seconds, snapped to the sample grid by the synthesizer.
    pub timestamp: f64,
    /// Touch x, pixels (fractional centroids allowed).
    pub x: f64,
    /// Touch y, pixels.
    pub y: f64,
    /// Ground-truth class when known ("plain" or a magnet id).
    pub true_label: Option<String>,
    /// Simultaneous contacts this touch belongs to (1 = tap, 2 = pinch).
    pub contact_count: u32,
    /// Target grid cell (col, row) when the touch came from a scripted session.
    pub cell: Option<(u32, u32)>,
}

/// A sampled magnetometer trace with its touch events.
///
/// Invariants enforced at construction: timestamps strictly increase with
/// uniform spacing (within 1 ns), and every touch timestamp falls inside the
/// sampled range. Touches are kept sorted by timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorTrace {
    samples: Vec<Sample>,
    touches: Vec<TouchEvent>,
}

impl SensorTrace {
    /// Maximum deviation from uniform sample spacing, seconds.
    pub const SPACING_TOLERANCE_S: f64 = 1e-9;

    /// Build a trace, validating the timing invariants. Touches are sorted
    /// by timestamp (ties keep their given order).
    pub fn new(samples: Vec<Sample>, mut touches: Vec<TouchEvent>) -> Result<SensorTrace> {
        if samples.is_empty() && !touches.is_empty() {
            return Err(Error::InvalidTrace("touches present but no samples".into()));
        }
        if samples.len() >= 2 {
            let dt = samples[1].t - samples[0].t;
            if dt <= 0.0 {
                return Err(Error::InvalidTrace("sample timestamps must strictly increase".into()));
            }
            for (i, pair) in samples.windows(2).enumerate() {
                let gap = pair[1].t - pair[0].t;
                if gap <= 0.0 {
                    return Err(Error::InvalidTrace(format!(
                        "sample timestamps must strictly increase (index {})",
                        i + 1
                    )));
                }
                if (gap - dt).abs() > Self::SPACING_TOLERANCE_S {
                    return Err(Error::InvalidTrace(format!(
                        "non-uniform sample spacing at index {}: {} vs {}",
                        i + 1,
                        gap,
                        dt
                    )));
                }
            }
        }
        if let (Some(first), Some(last)) = (samples.first(), samples.last()) {
            for touch in &touches {
                if touch.timestamp < first.t || touch.timestamp > last.t {
                    return Err(Error::TouchOutsideTrace {
                        touch: touch.timestamp,
                        start: first.t,
                        end: last.t,
                    });
                }
            }
        }
        touches.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
        Ok(SensorTrace { samples, touches })
    }

    /// The field samples, in time order.
    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    /// The touch events, sorted by timestamp.
    pub fn touches(&self) -> &[TouchEvent] {
        &self.touches
    }

    /// First sample timestamp, if any.
    pub fn start(&self) -> Option<f64> {
        self.samples.first().map(|s| s.t)
    }

    /// Last sample timestamp, if any.
    pub fn end(&self) -> Option<f64> {
        self.samples.last().map(|s| s.t)
    }

    /// The trace with `offset` added to every sample, exactly.
    ///
    /// The offset is first snapped to the quantization grid `quantum_ut`;
    /// adding one on-grid value to another is exact in IEEE arithmetic, so
    /// the shift cancels bit-for-bit out of every sample difference. With
    /// `quantum_ut == 0` the raw offset is added and exactness is not
    /// guaranteed.
    pub fn with_offset(&self, offset: Vector3<f64>, quantum_ut: f64) -> SensorTrace {
        let q = Vector3::new(
            quantize_ut(offset.x, quantum_ut),
            quantize_ut(offset.y, quantum_ut),
            quantize_ut(offset.z, quantum_ut),
        );
        SensorTrace {
            samples: self.samples.iter().map(|s| Sample { t: s.t, b: s.b + q }).collect(),
            touches: self.touches.clone(),
        }
    }
}

/// A time-indexed dipole configuration to be sampled.
pub trait Scene {
    /// The dipoles present at time `t` (seconds from trace start).
    fn dipoles_at(&self, t: f64) -> Vec<Dipole>;
}

impl<F: Fn(f64) -> Vec<Dipole>> Scene for F {
    fn dipoles_at(&self, t: f64) -> Vec<Dipole> {
        self(t)
    }
}

/// Sample a scene at the device's magnetometer for `duration` seconds.
///
/// Produces `floor(duration · rate) + 1` samples at t = 0, dt, 2·dt, …; each
/// is the total field at the sensor plus seeded per-axis Gaussian noise,
/// saturated at ±`range_ut` per axis, then snapped to the sensor's
/// quantization grid. Identical inputs and seed reproduce the trace bit for
/// bit. With `noise_sigma_ut == 0` no randomness is consumed at all.
///
/// The background earth vector is itself snapped to the sensor grid once per
/// trace (a sub-LSB adjustment): the constant component of every sample is
/// then exactly representable, which is what lets differential features
/// cancel it bit for bit.
///
/// The returned trace has no touch events; session synthesizers attach them.
pub fn sample_trace(
    scene: &dyn Scene,
    earth: &EarthField,
    device: &DeviceModel,
    duration_s: f64,
    seed: u64,
) -> Result<SensorTrace> {
    if !duration_s.is_finite() || duration_s < 0.0 {
        return Err(Error::InvalidTrace(format!("duration {duration_s} s must be non-negative")));
    }
    let e = earth.vector();
    let earth = EarthField::raw(Vector3::new(
        quantize_ut(e.x, device.quantum_ut),
        quantize_ut(e.y, device.quantum_ut),
        quantize_ut(e.z, device.quantum_ut),
    ));
    let earth = &earth;
    let count = (duration_s * device.sample_rate_hz).floor() as usize + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = if device.noise_sigma_ut > 0.0 {
        Some(Normal::new(0.0, device.noise_sigma_ut).expect("validated sigma"))
    } else {
        None
    };
    let mut samples = Vec::with_capacity(count);
    for i in 0..count {
        let t = i as f64 / device.sample_rate_hz;
        let dipoles = scene.dipoles_at(t);
        let mut b = total_field(&dipoles, earth, device.magnetometer_pos)?;
        if let Some(noise) = &noise {
            b.x += noise.sample(&mut rng);
            b.y += noise.sample(&mut rng);
            b.z += noise.sample(&mut rng);
        }
        let r = device.range_ut;
        b.x = quantize_ut(b.x.clamp(-r, r), device.quantum_ut);
        b.y = quantize_ut(b.y.clamp(-r, r), device.quantum_ut);
        b.z = quantize_ut(b.z.clamp(-r, r), device.quantum_ut);
        samples.push(Sample { t, b });
    }
    SensorTrace::new(samples, Vec::new())
}
