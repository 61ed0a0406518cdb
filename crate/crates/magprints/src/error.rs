//! Crate-wide error type.

/// Everything that can go wrong across the toolkit.
///
/// Variants intentionally carry enough context to be actionable from the CLI
/// without a backtrace: file parse errors name the line, dimension mismatches
/// name both sides, and range violations echo the offending value.
#[derive(Debug, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    /// Magnet specification failed validation (dimension or remanence).
    #[error("invalid magnet spec: {0}")]
    InvalidMagnet(String),

    /// Earth-field magnitude outside the plausible geomagnetic range.
    #[error("earth field magnitude {magnitude:.2} uT outside plausible 20..=70 uT range")]
    EarthFieldRange {
        /// Magnitude of the rejected vector, in microtesla.
        magnitude: f64,
    },

    /// Dipole field requested at the dipole's own position.
    #[error("field evaluated at the dipole's own position (singularity)")]
    DipoleSingularity,

    /// Device model failed validation.
    #[error("invalid device model: {0}")]
    InvalidDevice(String),

    /// Pixel coordinate outside the screen.
    #[error("pixel ({x}, {y}) outside the {width}x{height} px screen")]
    PixelOutOfRange {
        /// Offending x coordinate, in pixels.
        x: f64,
        /// Offending y coordinate, in pixels.
        y: f64,
        /// Screen width, in pixels.
        width: u32,
        /// Screen height, in pixels.
        height: u32,
    },

    /// Sensor trace failed a structural invariant.
    #[error("invalid trace: {0}")]
    InvalidTrace(String),

    /// Scenario failed validation.
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    /// Touch timestamp not covered by the trace's sample range.
    #[error("touch at {touch:.4} s outside sampled range {start:.4}..{end:.4} s")]
    TouchOutsideTrace {
        /// Touch timestamp, in seconds.
        touch: f64,
        /// First sample timestamp.
        start: f64,
        /// Last sample timestamp.
        end: f64,
    },

    /// Not enough pre-touch history to extract features.
    #[error("feature window needs {needed:.3} s of history before the touch, trace provides {available:.3} s")]
    WindowTooShort {
        /// History the extractor requires, in seconds.
        needed: f64,
        /// History actually available, in seconds.
        available: f64,
    },

    /// Two touches too far apart in time to form a pinch.
    #[error("touches {gap_ms:.1} ms apart exceed the {window_ms:.0} ms pinch pairing window")]
    NotAPinch {
        /// Gap between the two touch timestamps, in milliseconds.
        gap_ms: f64,
        /// Pairing window, in milliseconds.
        window_ms: f64,
    },

    /// A vector had the wrong length for the operation.
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        /// What was being matched (e.g. "model weights vs feature vector").
        context: String,
        /// Expected dimensionality.
        expected: usize,
        /// Actual dimensionality.
        got: usize,
    },

    /// Dataset unusable for training (empty, unlabeled, or single-class).
    #[error("degenerate dataset: {0}")]
    DegenerateDataset(String),

    /// A training hyperparameter outside its valid range.
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),

    /// Requested fold count below the minimum of two.
    #[error("cross-validation needs at least 2 folds, got {0}")]
    InvalidFolds(usize),

    /// A class has fewer rows than the fold count.
    #[error(
        "stratification impossible: class `{class}` has {rows} rows, fewer than {folds} folds"
    )]
    Stratification {
        /// Class that cannot be spread across folds.
        class: String,
        /// Rows available for that class.
        rows: usize,
        /// Requested fold count.
        folds: usize,
    },

    /// Vocabulary configuration failed validation.
    #[error("invalid vocabulary config: {0}")]
    InvalidVocabulary(String),

    /// A text artifact failed to parse; names the offending line.
    #[error("{path}:{line}: {message}")]
    Parse {
        /// File being parsed.
        path: String,
        /// 1-based line number of the offending line.
        line: usize,
        /// What went wrong.
        message: String,
    },

    /// A text artifact declared a schema version this build does not speak.
    #[error("{path}:{line}: unsupported schema `{found}` (expected `{expected}`)")]
    Version {
        /// File being parsed.
        path: String,
        /// 1-based line number of the header.
        line: usize,
        /// Header found in the file.
        found: String,
        /// Header this build expects.
        expected: String,
    },

    /// Refused to serialize a trace with no samples.
    #[error("refusing to write a trace with no samples")]
    EmptyTrace,

    /// Underlying filesystem error, annotated with the path.
    #[error("{path}: {source}")]
    Io {
        /// Path involved in the failed operation.
        path: String,
        /// Operating-system error.
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Helper for filesystem errors carrying the path.
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io { path: path.display().to_string(), source }
    }
}
