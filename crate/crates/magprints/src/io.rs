//! Versioned, line-oriented text formats for every artifact the toolkit
//! produces: sensor traces, feature datasets, trained models, evaluation
//! reports, recognized event streams, and study scenarios.
//!
//! # Design
//!
//! Every file is plain UTF-8 text, one record per line, with a version
//! header on line 1. Text formats were chosen over binary ones so that
//! golden files diff cleanly and other implementations can conform against
//! them. Three lexical rules make round-trips exact:
//!
//! - **Numbers** are written with Rust's shortest round-trip decimal
//!   representation, so reading a file back reproduces every `f64` bit for
//!   bit. Integers are plain decimal.
//! - **Strings** (labels, names, notes) are double-quoted with backslash
//!   escapes for `"` `\` and the control characters `\n` `\r` `\t`. An
//!   absent optional string is the bare token `-`.
//! - **Grid cells** are `col,row` (e.g. `2,3`); an absent cell is `-`.
//!
//! Parse failures name the file and the 1-based line: truncated files point
//! at the line that should exist, malformed lines point at themselves, and
//! an unknown header is a version error.
//!
//! # Grammar
//!
//! Tokens are separated by single spaces; `f` is a decimal float, `u` an
//! unsigned integer, `str` a quoted string, `opt` a quoted string or `-`,
//! `cell` is `u,u` or `-`.
//!
//! ```text
//! trace    := "magprints-trace v1"
//!             "device" str u u f f f f f f f f f
//!                       (name, px width/height, m width/height,
//!                        magnetometer x y z, rate Hz, noise uT,
//!                        quantum uT, range uT)
//!             "seed" u
//!             "samples" u        followed by that many:
//!               "s" f f f f      (t, bx, by, bz)
//!             "touches" u        followed by that many:
//!               "t" f f f opt u cell   (t, x, y, label, contacts, cell)
//!
//! dataset  := "magprints-dataset v1"
//!             "note" opt
//!             "dim" u
//!             "classes" u str...
//!             "rows" u           followed by that many:
//!               "r" u f cell str f{dim}   (session, t, cell, label, values)
//!
//! model    := "magprints-model v1"
//!             "classes" u str...
//!             "dim" u
//!             "hyper" f u u      (lambda, epochs, seed)
//!             "means" f{dim}
//!             "stds" f{dim}
//!             per class, in class order:
//!               "class" str f f{dim}     (label, bias, weights)
//!
//! report   := "magprints-report v1"
//!             "config" opt
//!             "classes" u str...
//!             "folds" u
//!             "fold-acc" f{folds}
//!             "mean" f
//!             "sd" f
//!             "pooled" f
//!             "confusion" u      followed by that many:
//!               "crow" u{n}      (true-class row of predicted counts)
//!             "cells" u          followed by that many:
//!               "cell" u,u u u   (cell, correct, total)
//!
//! events   := "magprints-events v1"
//!             "events" u         followed by that many, one of:
//!               "tap" f opt opt          (t, label, warning)
//!               "pinch" f opt opt
//!               "hover" f ("north"|"south")
//!               "rotary" f f             (t, angle deg)
//!
//! scenario := "magprints-scenario v1"
//!             "name" str
//!             "sessions" u
//!             "protocol" ("grid"|"pinch"|"chorded-pinch")
//!             "device" ...       (as in trace)
//!             "earth" f f f
//!             "grid" u u         (cols, rows)
//!             "retraction" ("retracted"|"hovering"|"palm-curl")
//!             "timing" f f f f   (lead-in, glide, approach, dwell)
//!             "jitter" f f f f f (touch, standoff, tilt, stagger, wander)
//!             "fingers" u        followed by that many, one of:
//!               "finger" "plain" f f f   (approach, standoff, tilt)
//!               "finger" "magnet" str f f f ("north"|"south") f f f
//!                         (id, diameter mm, height mm, remanence T,
//!                          polarity, approach, standoff, tilt)
//!             for "grid":
//!               "targets-per-cell" u
//!             for "pinch" / "chorded-pinch":
//!               "repetitions" u
//!               "kinds" u        followed by that many:
//!                 "kind" str u u (label, thumb index, partner index)
//!               "pairs" u        followed by that many:
//!                 "pair" u,u u,u
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::Vector3;

use crate::classifier::{CellAccuracy, ClassifierModel, CvReport, Dataset};
use crate::device::{DeviceModel, Sample, SensorTrace, TouchEvent};
use crate::features::{FeatureVector, RowMeta, Scaler};
use crate::gestures::GestureEvent;
use crate::magnetics::{EarthField, MagnetSpec, Polarity};
use crate::presets::{Protocol, StudyPreset};
use crate::synth::{
    FingerModel, Grid, GridScenario, Jitter, PinchKind, PinchScenario, RetractionPolicy, Timing,
};
use crate::{Error, Result};

/// Header of trace files.
pub const TRACE_HEADER: &str = "magprints-trace v1";
/// Header of dataset files.
pub const DATASET_HEADER: &str = "magprints-dataset v1";
/// Header of model files.
pub const MODEL_HEADER: &str = "magprints-model v1";
/// Header of evaluation-report files.
pub const REPORT_HEADER: &str = "magprints-report v1";
/// Header of recognized-event files.
pub const EVENTS_HEADER: &str = "magprints-events v1";
/// Header of scenario files.
pub const SCENARIO_HEADER: &str = "magprints-scenario v1";

/// A sensor trace together with its recording provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceFile {
    /// The device that produced the trace.
    pub device: DeviceModel,
    /// Seed the trace was generated from.
    pub seed: u64,
    /// The samples and touches.
    pub trace: SensorTrace,
}

/// A feature dataset together with a free-form provenance note.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetFile {
    /// How the dataset was produced (e.g. the generating command line).
    pub note: Option<String>,
    /// The labeled rows.
    pub dataset: Dataset,
}

/// An evaluation report together with the configuration that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportFile {
    /// The canonical run configuration (e.g. the evaluating command line).
    pub config: Option<String>,
    /// The cross-validation results.
    pub report: CvReport,
}

// ---------------------------------------------------------------------------
// Lexical helpers: writing
// ---------------------------------------------------------------------------

/// Quote a string with backslash escapes for `"` `\` and line breaks.
fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Quoted string or the absent marker `-`.
fn quote_opt(s: Option<&str>) -> String {
    match s {
        Some(v) => quote(v),
        None => "-".to_string(),
    }
}

/// `col,row` or the absent marker `-`.
fn cell_token(cell: Option<(u32, u32)>) -> String {
    match cell {
        Some((col, row)) => format!("{col},{row}"),
        None => "-".to_string(),
    }
}

/// The polarity keyword used in all formats.
fn polarity_word(p: Polarity) -> &'static str {
    match p {
        Polarity::NorthUp => "north",
        Polarity::SouthUp => "south",
    }
}

/// Serialize a device description (the fields after the `device` keyword).
fn device_fields(d: &DeviceModel) -> String {
    let p = d.magnetometer_pos;
    format!(
        "{} {} {} {} {} {} {} {} {} {} {} {}",
        quote(&d.name),
        d.screen_width_px,
        d.screen_height_px,
        d.screen_width_m,
        d.screen_height_m,
        p.x,
        p.y,
        p.z,
        d.sample_rate_hz,
        d.noise_sigma_ut,
        d.quantum_ut,
        d.range_ut
    )
}

/// Write `text` to `path`, annotating filesystem errors with the path.
fn save(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Read `path` to a string, annotating filesystem errors with the path.
fn load(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// Lexical helpers: reading
// ---------------------------------------------------------------------------

/// Line cursor over a file's text, tracking 1-based line numbers.
struct Reader<'a> {
    path: String,
    lines: std::str::Lines<'a>,
    line_no: usize,
}

impl<'a> Reader<'a> {
    /// Open a reader and check the version header.
    fn new(path: &Path, text: &'a str, expected: &'static str) -> Result<Reader<'a>> {
        let mut reader =
            Reader { path: path.display().to_string(), lines: text.lines(), line_no: 0 };
        let (line, header) = reader.next_line("the version header")?;
        if header != expected {
            return Err(Error::Version {
                path: reader.path,
                line,
                found: header.to_string(),
                expected: expected.to_string(),
            });
        }
        Ok(reader)
    }

    /// The next line, or a truncation error naming the line that is missing.
    fn next_line(&mut self, what: &str) -> Result<(usize, &'a str)> {
        match self.lines.next() {
            Some(line) => {
                self.line_no += 1;
                Ok((self.line_no, line))
            }
            None => Err(Error::Parse {
                path: self.path.clone(),
                line: self.line_no + 1,
                message: format!("file ends before {what}"),
            }),
        }
    }

    /// The next line, which must begin with `keyword`.
    fn line(&mut self, keyword: &'static str) -> Result<Tokens<'a>> {
        let (line_no, line) = self.next_line(&format!("the `{keyword}` line"))?;
        let mut tokens = Tokens { path: self.path.clone(), line: line_no, rest: line };
        tokens.keyword(keyword)?;
        Ok(tokens)
    }

    /// Reject anything after the last expected line.
    fn finish(mut self) -> Result<()> {
        if self.lines.next().is_some() {
            return Err(Error::Parse {
                path: self.path,
                line: self.line_no + 1,
                message: "unexpected content after the last record".to_string(),
            });
        }
        Ok(())
    }

    /// Wrap a construction error as a parse error at `line`.
    fn refine<T>(&self, line: usize, result: Result<T>) -> Result<T> {
        result.map_err(|e| match e {
            e @ (Error::Parse { .. } | Error::Version { .. }) => e,
            other => Error::Parse { path: self.path.clone(), line, message: other.to_string() },
        })
    }
}

/// Token cursor over one line.
struct Tokens<'a> {
    path: String,
    line: usize,
    rest: &'a str,
}

impl<'a> Tokens<'a> {
    fn error(&self, message: String) -> Error {
        Error::Parse { path: self.path.clone(), line: self.line, message }
    }

    fn skip_spaces(&mut self) {
        self.rest = self.rest.trim_start_matches(' ');
    }

    /// The next bare (unquoted) token.
    fn word(&mut self, what: &str) -> Result<&'a str> {
        self.skip_spaces();
        if self.rest.is_empty() {
            return Err(self.error(format!("line ends before {what}")));
        }
        let end = self.rest.find(' ').unwrap_or(self.rest.len());
        let (token, rest) = self.rest.split_at(end);
        self.rest = rest;
        Ok(token)
    }

    /// The next token, which must equal `keyword`.
    fn keyword(&mut self, keyword: &'static str) -> Result<()> {
        let token = self.word(&format!("the `{keyword}` keyword"))?;
        if token != keyword {
            return Err(self.error(format!("expected `{keyword}`, found `{token}`")));
        }
        Ok(())
    }

    /// The next token as a quoted string.
    fn string(&mut self, what: &str) -> Result<String> {
        self.skip_spaces();
        let mut chars = self.rest.char_indices();
        if !matches!(chars.next(), Some((_, '"'))) {
            return Err(self.error(format!("expected a quoted {what}")));
        }
        let mut out = String::new();
        let mut escaped = false;
        for (i, c) in chars {
            if escaped {
                out.push(match c {
                    '"' => '"',
                    '\\' => '\\',
                    'n' => '\n',
                    'r' => '\r',
                    't' => '\t',
                    other => {
                        return Err(self.error(format!("unknown escape `\\{other}` in {what}")))
                    }
                });
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                self.rest = &self.rest[i + 1..];
                return Ok(out);
            } else {
                out.push(c);
            }
        }
        Err(self.error(format!("unterminated quoted {what}")))
    }

    /// A quoted string or the absent marker `-`.
    fn opt_string(&mut self, what: &str) -> Result<Option<String>> {
        self.skip_spaces();
        if self.rest.starts_with('"') {
            return Ok(Some(self.string(what)?));
        }
        let token = self.word(what)?;
        if token == "-" {
            Ok(None)
        } else {
            Err(self.error(format!("expected a quoted {what} or `-`, found `{token}`")))
        }
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        let token = self.word(what)?;
        token.parse().map_err(|_| self.error(format!("invalid {what}: `{token}`")))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let token = self.word(what)?;
        token.parse().map_err(|_| self.error(format!("invalid {what}: `{token}`")))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        let token = self.word(what)?;
        token.parse().map_err(|_| self.error(format!("invalid {what}: `{token}`")))
    }

    fn usize(&mut self, what: &str) -> Result<usize> {
        let token = self.word(what)?;
        token.parse().map_err(|_| self.error(format!("invalid {what}: `{token}`")))
    }

    /// A required `col,row` cell token.
    fn cell_required(&mut self, what: &str) -> Result<(u32, u32)> {
        let token = self.word(what)?;
        let parsed = token
            .split_once(',')
            .and_then(|(c, r)| Some((c.parse::<u32>().ok()?, r.parse::<u32>().ok()?)));
        parsed.ok_or_else(|| self.error(format!("invalid {what}: `{token}` (want `col,row`)")))
    }

    /// A `col,row` cell token or the absent marker `-`.
    fn cell(&mut self, what: &str) -> Result<Option<(u32, u32)>> {
        self.skip_spaces();
        if self.rest.starts_with('-') {
            let token = self.word(what)?;
            if token == "-" {
                return Ok(None);
            }
            return Err(self.error(format!("invalid {what}: `{token}` (want `col,row` or `-`)")));
        }
        Ok(Some(self.cell_required(what)?))
    }

    /// Reject trailing tokens.
    fn finish(mut self) -> Result<()> {
        self.skip_spaces();
        if !self.rest.is_empty() {
            return Err(self.error(format!("unexpected trailing content: `{}`", self.rest)));
        }
        Ok(())
    }
}

/// Parse the fields of a `device` line (after the keyword).
fn parse_device(tokens: &mut Tokens<'_>) -> Result<DeviceModel> {
    let name = tokens.string("device name")?;
    let width_px = tokens.u32("screen width (px)")?;
    let height_px = tokens.u32("screen height (px)")?;
    let width_m = tokens.f64("screen width (m)")?;
    let height_m = tokens.f64("screen height (m)")?;
    let mx = tokens.f64("magnetometer x")?;
    let my = tokens.f64("magnetometer y")?;
    let mz = tokens.f64("magnetometer z")?;
    let rate = tokens.f64("sample rate")?;
    let noise = tokens.f64("noise sigma")?;
    let quantum = tokens.f64("quantum")?;
    let range = tokens.f64("range")?;
    DeviceModel::new(
        &name,
        width_px,
        height_px,
        width_m,
        height_m,
        Vector3::new(mx, my, mz),
        rate,
        noise,
        quantum,
    )?
    .with_range(range)
}

// ---------------------------------------------------------------------------
// Traces
// ---------------------------------------------------------------------------

/// Write a trace file. Refuses traces with no samples.
pub fn write_trace<P: AsRef<Path>>(path: P, file: &TraceFile) -> Result<()> {
    let samples = file.trace.samples();
    if samples.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let touches = file.trace.touches();
    let mut out = String::new();
    let _ = writeln!(out, "{TRACE_HEADER}");
    let _ = writeln!(out, "device {}", device_fields(&file.device));
    let _ = writeln!(out, "seed {}", file.seed);
    let _ = writeln!(out, "samples {}", samples.len());
    for s in samples {
        let _ = writeln!(out, "s {} {} {} {}", s.t, s.b.x, s.b.y, s.b.z);
    }
    let _ = writeln!(out, "touches {}", touches.len());
    for t in touches {
        let _ = writeln!(
            out,
            "t {} {} {} {} {} {}",
            t.timestamp,
            t.x,
            t.y,
            quote_opt(t.true_label.as_deref()),
            t.contact_count,
            cell_token(t.cell)
        );
    }
    save(path.as_ref(), &out)
}

/// Read a trace file back, reproducing the written trace bit for bit.
pub fn read_trace<P: AsRef<Path>>(path: P) -> Result<TraceFile> {
    let text = load(path.as_ref())?;
    let mut reader = Reader::new(path.as_ref(), &text, TRACE_HEADER)?;

    let mut tokens = reader.line("device")?;
    let device_line = tokens.line;
    let device = reader.refine(device_line, parse_device(&mut tokens))?;
    tokens.finish()?;

    let mut tokens = reader.line("seed")?;
    let seed = tokens.u64("seed")?;
    tokens.finish()?;

    let mut tokens = reader.line("samples")?;
    let samples_line = tokens.line;
    let sample_count = tokens.usize("sample count")?;
    tokens.finish()?;
    let mut samples = Vec::with_capacity(sample_count);
    for _ in 0..sample_count {
        let mut tokens = reader.line("s")?;
        let t = tokens.f64("sample time")?;
        let bx = tokens.f64("bx")?;
        let by = tokens.f64("by")?;
        let bz = tokens.f64("bz")?;
        tokens.finish()?;
        samples.push(Sample { t, b: Vector3::new(bx, by, bz) });
    }

    let mut tokens = reader.line("touches")?;
    let touch_count = tokens.usize("touch count")?;
    tokens.finish()?;
    let mut touches = Vec::with_capacity(touch_count);
    for _ in 0..touch_count {
        let mut tokens = reader.line("t")?;
        let timestamp = tokens.f64("touch time")?;
        let x = tokens.f64("touch x")?;
        let y = tokens.f64("touch y")?;
        let true_label = tokens.opt_string("label")?;
        let contact_count = tokens.u32("contact count")?;
        let cell = tokens.cell("cell")?;
        tokens.finish()?;
        touches.push(TouchEvent { timestamp, x, y, true_label, contact_count, cell });
    }

    let trace = reader.refine(samples_line, SensorTrace::new(samples, touches))?;
    reader.finish()?;
    Ok(TraceFile { device, seed, trace })
}

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

/// Write a dataset file.
pub fn write_dataset<P: AsRef<Path>>(path: P, file: &DatasetFile) -> Result<()> {
    let data = &file.dataset;
    let mut out = String::new();
    let _ = writeln!(out, "{DATASET_HEADER}");
    let _ = writeln!(out, "note {}", quote_opt(file.note.as_deref()));
    let _ = writeln!(out, "dim {}", data.dim());
    let _ = write!(out, "classes {}", data.classes().len());
    for class in data.classes() {
        let _ = write!(out, " {}", quote(class));
    }
    out.push('\n');
    let _ = writeln!(out, "rows {}", data.rows().len());
    for row in data.rows() {
        let _ = write!(
            out,
            "r {} {} {} {}",
            row.meta.session,
            row.meta.timestamp,
            cell_token(row.meta.cell),
            quote_opt(row.label.as_deref())
        );
        for v in &row.values {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    save(path.as_ref(), &out)
}

/// Read a dataset file back, checking the declared dimensionality and row
/// count against the records.
pub fn read_dataset<P: AsRef<Path>>(path: P) -> Result<DatasetFile> {
    let text = load(path.as_ref())?;
    let mut reader = Reader::new(path.as_ref(), &text, DATASET_HEADER)?;

    let mut tokens = reader.line("note")?;
    let note = tokens.opt_string("note")?;
    tokens.finish()?;

    let mut tokens = reader.line("dim")?;
    let dim = tokens.usize("dimensionality")?;
    tokens.finish()?;

    let mut tokens = reader.line("classes")?;
    let class_count = tokens.usize("class count")?;
    let mut classes = Vec::with_capacity(class_count);
    for _ in 0..class_count {
        classes.push(tokens.string("class label")?);
    }
    tokens.finish()?;

    let mut tokens = reader.line("rows")?;
    let rows_line = tokens.line;
    let row_count = tokens.usize("row count")?;
    tokens.finish()?;
    let mut rows = Vec::with_capacity(row_count);
    for _ in 0..row_count {
        let mut tokens = reader.line("r")?;
        let session = tokens.u32("session")?;
        let timestamp = tokens.f64("timestamp")?;
        let cell = tokens.cell("cell")?;
        let label = tokens.opt_string("label")?;
        let mut values = Vec::with_capacity(dim);
        for i in 0..dim {
            values.push(tokens.f64(&format!("feature {i}"))?);
        }
        tokens.finish()?;
        rows.push(FeatureVector { values, label, meta: RowMeta { session, timestamp, cell } });
    }

    let dataset = reader.refine(rows_line, Dataset::with_classes(rows, classes))?;
    reader.finish()?;
    Ok(DatasetFile { note, dataset })
}

// ---------------------------------------------------------------------------
// Models
// ---------------------------------------------------------------------------

/// Write a trained classifier to a model file.
pub fn write_model<P: AsRef<Path>>(path: P, model: &ClassifierModel) -> Result<()> {
    let (lambda, epochs, seed) = model.hyperparameters();
    let mut out = String::new();
    let _ = writeln!(out, "{MODEL_HEADER}");
    let _ = write!(out, "classes {}", model.classes().len());
    for class in model.classes() {
        let _ = write!(out, " {}", quote(class));
    }
    out.push('\n');
    let _ = writeln!(out, "dim {}", model.dim());
    let _ = writeln!(out, "hyper {lambda} {epochs} {seed}");
    let _ = write!(out, "means");
    for m in model.scaler().means() {
        let _ = write!(out, " {m}");
    }
    out.push('\n');
    let _ = write!(out, "stds");
    for s in model.scaler().stds() {
        let _ = write!(out, " {s}");
    }
    out.push('\n');
    for ((class, weights), bias) in model.classes().iter().zip(model.weights()).zip(model.biases())
    {
        let _ = write!(out, "class {} {bias}", quote(class));
        for w in weights {
            let _ = write!(out, " {w}");
        }
        out.push('\n');
    }
    save(path.as_ref(), &out)
}

/// Read a model file back into a ready-to-predict classifier.
pub fn read_model<P: AsRef<Path>>(path: P) -> Result<ClassifierModel> {
    let text = load(path.as_ref())?;
    let mut reader = Reader::new(path.as_ref(), &text, MODEL_HEADER)?;

    let mut tokens = reader.line("classes")?;
    let class_count = tokens.usize("class count")?;
    let mut classes = Vec::with_capacity(class_count);
    for _ in 0..class_count {
        classes.push(tokens.string("class label")?);
    }
    tokens.finish()?;

    let mut tokens = reader.line("dim")?;
    let dim = tokens.usize("dimensionality")?;
    tokens.finish()?;

    let mut tokens = reader.line("hyper")?;
    let lambda = tokens.f64("lambda")?;
    let epochs = tokens.u32("epochs")?;
    let seed = tokens.u64("seed")?;
    tokens.finish()?;

    let mut tokens = reader.line("means")?;
    let means_line = tokens.line;
    let mut means = Vec::with_capacity(dim);
    for i in 0..dim {
        means.push(tokens.f64(&format!("mean {i}"))?);
    }
    tokens.finish()?;

    let mut tokens = reader.line("stds")?;
    let mut stds = Vec::with_capacity(dim);
    for i in 0..dim {
        stds.push(tokens.f64(&format!("std {i}"))?);
    }
    tokens.finish()?;
    let scaler = reader.refine(means_line, Scaler::from_parts(means, stds))?;

    let mut weights = Vec::with_capacity(class_count);
    let mut biases = Vec::with_capacity(class_count);
    let mut last_line = means_line;
    for expected in classes.clone() {
        let mut tokens = reader.line("class")?;
        last_line = tokens.line;
        let label = tokens.string("class label")?;
        if label != expected {
            return Err(tokens.error(format!(
                "class rows must follow the header order: expected `{expected}`, found `{label}`"
            )));
        }
        biases.push(tokens.f64("bias")?);
        let mut w = Vec::with_capacity(dim);
        for i in 0..dim {
            w.push(tokens.f64(&format!("weight {i}"))?);
        }
        tokens.finish()?;
        weights.push(w);
    }

    let model = reader.refine(
        last_line,
        ClassifierModel::from_parts(classes, scaler, weights, biases, lambda, epochs, seed),
    )?;
    reader.finish()?;
    Ok(model)
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// Write a cross-validation report file.
pub fn write_report<P: AsRef<Path>>(path: P, file: &ReportFile) -> Result<()> {
    let r = &file.report;
    let mut out = String::new();
    let _ = writeln!(out, "{REPORT_HEADER}");
    let _ = writeln!(out, "config {}", quote_opt(file.config.as_deref()));
    let _ = write!(out, "classes {}", r.classes.len());
    for class in &r.classes {
        let _ = write!(out, " {}", quote(class));
    }
    out.push('\n');
    let _ = writeln!(out, "folds {}", r.fold_accuracies.len());
    let _ = write!(out, "fold-acc");
    for a in &r.fold_accuracies {
        let _ = write!(out, " {a}");
    }
    out.push('\n');
    let _ = writeln!(out, "mean {}", r.mean_accuracy);
    let _ = writeln!(out, "sd {}", r.std_dev);
    let _ = writeln!(out, "pooled {}", r.pooled_accuracy);
    let _ = writeln!(out, "confusion {}", r.confusion.len());
    for row in &r.confusion {
        let _ = write!(out, "crow");
        for count in row {
            let _ = write!(out, " {count}");
        }
        out.push('\n');
    }
    let _ = writeln!(out, "cells {}", r.cell_accuracy.len());
    for (&(col, row), &(correct, total)) in &r.cell_accuracy {
        let _ = writeln!(out, "cell {col},{row} {correct} {total}");
    }
    save(path.as_ref(), &out)
}

/// Read a report file back.
pub fn read_report<P: AsRef<Path>>(path: P) -> Result<ReportFile> {
    let text = load(path.as_ref())?;
    let mut reader = Reader::new(path.as_ref(), &text, REPORT_HEADER)?;

    let mut tokens = reader.line("config")?;
    let config = tokens.opt_string("config")?;
    tokens.finish()?;

    let mut tokens = reader.line("classes")?;
    let class_count = tokens.usize("class count")?;
    let mut classes = Vec::with_capacity(class_count);
    for _ in 0..class_count {
        classes.push(tokens.string("class label")?);
    }
    tokens.finish()?;

    let mut tokens = reader.line("folds")?;
    let folds = tokens.usize("fold count")?;
    tokens.finish()?;

    let mut tokens = reader.line("fold-acc")?;
    let mut fold_accuracies = Vec::with_capacity(folds);
    for i in 0..folds {
        fold_accuracies.push(tokens.f64(&format!("fold accuracy {i}"))?);
    }
    tokens.finish()?;

    let mut tokens = reader.line("mean")?;
    let mean_accuracy = tokens.f64("mean accuracy")?;
    tokens.finish()?;
    let mut tokens = reader.line("sd")?;
    let std_dev = tokens.f64("standard deviation")?;
    tokens.finish()?;
    let mut tokens = reader.line("pooled")?;
    let pooled_accuracy = tokens.f64("pooled accuracy")?;
    tokens.finish()?;

    let mut tokens = reader.line("confusion")?;
    let n = tokens.usize("confusion size")?;
    if n != class_count {
        return Err(
            tokens.error(format!("confusion size {n} does not match the {class_count} classes"))
        );
    }
    tokens.finish()?;
    let mut confusion = Vec::with_capacity(n);
    for _ in 0..n {
        let mut tokens = reader.line("crow")?;
        let mut row = Vec::with_capacity(n);
        for i in 0..n {
            row.push(tokens.u64(&format!("count {i}"))?);
        }
        tokens.finish()?;
        confusion.push(row);
    }

    let mut tokens = reader.line("cells")?;
    let cell_count = tokens.usize("cell count")?;
    tokens.finish()?;
    let mut cell_accuracy = CellAccuracy::new();
    for _ in 0..cell_count {
        let mut tokens = reader.line("cell")?;
        let cell = tokens.cell_required("cell")?;
        let correct = tokens.u64("correct count")?;
        let total = tokens.u64("total count")?;
        tokens.finish()?;
        cell_accuracy.insert(cell, (correct, total));
    }

    reader.finish()?;
    Ok(ReportFile {
        config,
        report: CvReport {
            classes,
            fold_accuracies,
            mean_accuracy,
            std_dev,
            pooled_accuracy,
            confusion,
            cell_accuracy,
        },
    })
}

// ---------------------------------------------------------------------------
// Event streams
// ---------------------------------------------------------------------------

/// Write a recognized-event stream file.
///
/// ```
/// use magprints::gestures::GestureEvent;
/// use magprints::io::{read_events, write_events};
/// use magprints::magnetics::Polarity;
///
/// let dir = tempfile::tempdir().unwrap();
/// let path = dir.path().join("events.txt");
/// let events = vec![
///     GestureEvent::Hover { timestamp: 0.55, polarity: Polarity::SouthUp },
///     GestureEvent::Tap { timestamp: 2.0, label: Some("north".into()), warning: None },
/// ];
/// write_events(&path, &events)?;
/// assert_eq!(read_events(&path)?, events);
/// # Ok::<(), magprints::Error>(())
/// ```
pub fn write_events<P: AsRef<Path>>(path: P, events: &[GestureEvent]) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "{EVENTS_HEADER}");
    let _ = writeln!(out, "events {}", events.len());
    for event in events {
        match event {
            GestureEvent::Tap { timestamp, label, warning } => {
                let _ = writeln!(
                    out,
                    "tap {timestamp} {} {}",
                    quote_opt(label.as_deref()),
                    quote_opt(warning.as_deref())
                );
            }
            GestureEvent::Pinch { timestamp, label, warning } => {
                let _ = writeln!(
                    out,
                    "pinch {timestamp} {} {}",
                    quote_opt(label.as_deref()),
                    quote_opt(warning.as_deref())
                );
            }
            GestureEvent::Hover { timestamp, polarity } => {
                let _ = writeln!(out, "hover {timestamp} {}", polarity_word(*polarity));
            }
            GestureEvent::Rotary { timestamp, angle_deg } => {
                let _ = writeln!(out, "rotary {timestamp} {angle_deg}");
            }
        }
    }
    save(path.as_ref(), &out)
}

/// Read a recognized-event stream file back.
pub fn read_events<P: AsRef<Path>>(path: P) -> Result<Vec<GestureEvent>> {
    let text = load(path.as_ref())?;
    let mut reader = Reader::new(path.as_ref(), &text, EVENTS_HEADER)?;

    let mut tokens = reader.line("events")?;
    let count = tokens.usize("event count")?;
    tokens.finish()?;

    let mut events = Vec::with_capacity(count);
    for _ in 0..count {
        let (line_no, line) = reader.next_line("an event line")?;
        let mut tokens = Tokens { path: reader.path.clone(), line: line_no, rest: line };
        let kind = tokens.word("event kind")?;
        let event = match kind {
            "tap" => GestureEvent::Tap {
                timestamp: tokens.f64("timestamp")?,
                label: tokens.opt_string("label")?,
                warning: tokens.opt_string("warning")?,
            },
            "pinch" => GestureEvent::Pinch {
                timestamp: tokens.f64("timestamp")?,
                label: tokens.opt_string("label")?,
                warning: tokens.opt_string("warning")?,
            },
            "hover" => {
                let timestamp = tokens.f64("timestamp")?;
                let word = tokens.word("polarity")?;
                let polarity = match word {
                    "north" => Polarity::NorthUp,
                    "south" => Polarity::SouthUp,
                    other => {
                        return Err(tokens.error(format!(
                            "invalid polarity: `{other}` (want `north` or `south`)"
                        )))
                    }
                };
                GestureEvent::Hover { timestamp, polarity }
            }
            "rotary" => GestureEvent::Rotary {
                timestamp: tokens.f64("timestamp")?,
                angle_deg: tokens.f64("angle")?,
            },
            other => return Err(tokens.error(format!("unknown event kind `{other}`"))),
        };
        tokens.finish()?;
        events.push(event);
    }

    reader.finish()?;
    Ok(events)
}

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

/// The retraction keyword used in scenario files.
fn retraction_word(policy: RetractionPolicy) -> &'static str {
    match policy {
        RetractionPolicy::Retracted => "retracted",
        RetractionPolicy::Hovering => "hovering",
        RetractionPolicy::PalmCurl => "palm-curl",
    }
}

/// Append the lines shared by both scenario protocols.
#[allow(clippy::too_many_arguments)] // one argument per shared scenario field
fn write_scenario_common(
    out: &mut String,
    device: &DeviceModel,
    earth: &EarthField,
    grid: &Grid,
    retraction: RetractionPolicy,
    timing: &Timing,
    jitter: &Jitter,
    fingers: &[FingerModel],
) {
    let e = earth.vector();
    let _ = writeln!(out, "device {}", device_fields(device));
    let _ = writeln!(out, "earth {} {} {}", e.x, e.y, e.z);
    let _ = writeln!(out, "grid {} {}", grid.cols, grid.rows);
    let _ = writeln!(out, "retraction {}", retraction_word(retraction));
    let _ = writeln!(
        out,
        "timing {} {} {} {}",
        timing.lead_in_s, timing.glide_s, timing.approach_s, timing.dwell_s
    );
    let _ = writeln!(
        out,
        "jitter {} {} {} {} {}",
        jitter.touch_sd_frac,
        jitter.standoff_sd_frac,
        jitter.tilt_sd_deg,
        jitter.stagger_sd_s,
        jitter.curl_wander_sd_m
    );
    let _ = writeln!(out, "fingers {}", fingers.len());
    for finger in fingers {
        match &finger.magnet {
            None => {
                let _ = writeln!(
                    out,
                    "finger plain {} {} {}",
                    finger.approach_height_m, finger.touch_standoff_m, finger.tilt_deg
                );
            }
            Some(magnet) => {
                let _ = writeln!(
                    out,
                    "finger magnet {} {} {} {} {} {} {} {}",
                    quote(&magnet.id),
                    magnet.diameter_mm,
                    magnet.height_mm,
                    magnet.remanence_t,
                    polarity_word(magnet.polarity),
                    finger.approach_height_m,
                    finger.touch_standoff_m,
                    finger.tilt_deg
                );
            }
        }
    }
}

/// Write a study scenario file.
pub fn write_scenario<P: AsRef<Path>>(path: P, preset: &StudyPreset) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "{SCENARIO_HEADER}");
    let _ = writeln!(out, "name {}", quote(&preset.name));
    let _ = writeln!(out, "sessions {}", preset.sessions);
    match &preset.protocol {
        Protocol::Grid(s) => {
            let _ = writeln!(out, "protocol grid");
            write_scenario_common(
                &mut out,
                &s.device,
                &s.earth,
                &s.grid,
                s.retraction,
                &s.timing,
                &s.jitter,
                &s.fingers,
            );
            let _ = writeln!(out, "targets-per-cell {}", s.targets_per_cell);
        }
        Protocol::Pinch(s) | Protocol::ChordedPinch(s) => {
            let word = if matches!(preset.protocol, Protocol::Pinch(_)) {
                "pinch"
            } else {
                "chorded-pinch"
            };
            let _ = writeln!(out, "protocol {word}");
            write_scenario_common(
                &mut out,
                &s.device,
                &s.earth,
                &s.grid,
                s.retraction,
                &s.timing,
                &s.jitter,
                &s.fingers,
            );
            let _ = writeln!(out, "repetitions {}", s.repetitions);
            let _ = writeln!(out, "kinds {}", s.kinds.len());
            for kind in &s.kinds {
                let _ =
                    writeln!(out, "kind {} {} {}", quote(&kind.label), kind.thumb, kind.partner);
            }
            let _ = writeln!(out, "pairs {}", s.pairs.len());
            for (a, b) in &s.pairs {
                let _ = writeln!(out, "pair {},{} {},{}", a.0, a.1, b.0, b.1);
            }
        }
    }
    save(path.as_ref(), &out)
}

/// Read a study scenario file back.
pub fn read_scenario<P: AsRef<Path>>(path: P) -> Result<StudyPreset> {
    let text = load(path.as_ref())?;
    let mut reader = Reader::new(path.as_ref(), &text, SCENARIO_HEADER)?;

    let mut tokens = reader.line("name")?;
    let name = tokens.string("scenario name")?;
    tokens.finish()?;

    let mut tokens = reader.line("sessions")?;
    let sessions = tokens.u32("session count")?;
    tokens.finish()?;

    let mut tokens = reader.line("protocol")?;
    let protocol_word = tokens.word("protocol")?.to_string();
    tokens.finish()?;
    if !matches!(protocol_word.as_str(), "grid" | "pinch" | "chorded-pinch") {
        return Err(Error::Parse {
            path: path.as_ref().display().to_string(),
            line: 4,
            message: format!(
                "unknown protocol `{protocol_word}` (want `grid`, `pinch`, or `chorded-pinch`)"
            ),
        });
    }

    let mut tokens = reader.line("device")?;
    let device_line = tokens.line;
    let device = reader.refine(device_line, parse_device(&mut tokens))?;
    tokens.finish()?;

    let mut tokens = reader.line("earth")?;
    let earth_line = tokens.line;
    let ex = tokens.f64("earth x")?;
    let ey = tokens.f64("earth y")?;
    let ez = tokens.f64("earth z")?;
    tokens.finish()?;
    let earth = reader.refine(earth_line, EarthField::new(Vector3::new(ex, ey, ez)))?;

    let mut tokens = reader.line("grid")?;
    let grid_line = tokens.line;
    let cols = tokens.u32("grid cols")?;
    let rows = tokens.u32("grid rows")?;
    tokens.finish()?;
    let grid = reader.refine(grid_line, Grid::new(cols, rows))?;

    let mut tokens = reader.line("retraction")?;
    let word = tokens.word("retraction policy")?;
    let retraction = match word {
        "retracted" => RetractionPolicy::Retracted,
        "hovering" => RetractionPolicy::Hovering,
        "palm-curl" => RetractionPolicy::PalmCurl,
        other => {
            return Err(tokens.error(format!(
                "unknown retraction policy `{other}` (want `retracted`, `hovering`, or `palm-curl`)"
            )))
        }
    };
    tokens.finish()?;

    let mut tokens = reader.line("timing")?;
    let timing = Timing {
        lead_in_s: tokens.f64("lead-in")?,
        glide_s: tokens.f64("glide")?,
        approach_s: tokens.f64("approach")?,
        dwell_s: tokens.f64("dwell")?,
    };
    tokens.finish()?;

    let mut tokens = reader.line("jitter")?;
    let jitter = Jitter {
        touch_sd_frac: tokens.f64("touch sd")?,
        standoff_sd_frac: tokens.f64("standoff sd")?,
        tilt_sd_deg: tokens.f64("tilt sd")?,
        stagger_sd_s: tokens.f64("stagger sd")?,
        curl_wander_sd_m: tokens.f64("wander sd")?,
    };
    tokens.finish()?;

    let mut tokens = reader.line("fingers")?;
    let finger_count = tokens.usize("finger count")?;
    tokens.finish()?;
    let mut fingers = Vec::with_capacity(finger_count);
    for _ in 0..finger_count {
        let mut tokens = reader.line("finger")?;
        let finger_line = tokens.line;
        let kind = tokens.word("finger kind")?;
        let magnet = match kind {
            "plain" => None,
            "magnet" => {
                let id = tokens.string("magnet id")?;
                let diameter = tokens.f64("diameter")?;
                let height = tokens.f64("height")?;
                let remanence = tokens.f64("remanence")?;
                let word = tokens.word("polarity")?;
                let polarity = match word {
                    "north" => Polarity::NorthUp,
                    "south" => Polarity::SouthUp,
                    other => {
                        return Err(tokens.error(format!(
                            "invalid polarity: `{other}` (want `north` or `south`)"
                        )))
                    }
                };
                Some(reader.refine(
                    finger_line,
                    MagnetSpec::new(diameter, height, remanence, polarity, &id),
                )?)
            }
            other => {
                return Err(tokens
                    .error(format!("unknown finger kind `{other}` (want `plain` or `magnet`)")))
            }
        };
        let finger = FingerModel {
            magnet,
            approach_height_m: tokens.f64("approach height")?,
            touch_standoff_m: tokens.f64("touch standoff")?,
            tilt_deg: tokens.f64("tilt")?,
        };
        tokens.finish()?;
        fingers.push(finger);
    }

    let protocol = if protocol_word == "grid" {
        let mut tokens = reader.line("targets-per-cell")?;
        let targets_per_cell = tokens.u32("targets per cell")?;
        tokens.finish()?;
        Protocol::Grid(GridScenario {
            device,
            earth,
            grid,
            targets_per_cell,
            fingers,
            retraction,
            timing,
            jitter,
        })
    } else {
        let mut tokens = reader.line("repetitions")?;
        let repetitions = tokens.u32("repetitions")?;
        tokens.finish()?;

        let mut tokens = reader.line("kinds")?;
        let kind_count = tokens.usize("kind count")?;
        tokens.finish()?;
        let mut kinds = Vec::with_capacity(kind_count);
        for _ in 0..kind_count {
            let mut tokens = reader.line("kind")?;
            kinds.push(PinchKind {
                label: tokens.string("kind label")?,
                thumb: tokens.usize("thumb index")?,
                partner: tokens.usize("partner index")?,
            });
            tokens.finish()?;
        }

        let mut tokens = reader.line("pairs")?;
        let pair_count = tokens.usize("pair count")?;
        tokens.finish()?;
        let mut pairs = Vec::with_capacity(pair_count);
        for _ in 0..pair_count {
            let mut tokens = reader.line("pair")?;
            let a = tokens.cell_required("first cell")?;
            let b = tokens.cell_required("second cell")?;
            tokens.finish()?;
            pairs.push((a, b));
        }

        let scenario = PinchScenario {
            device,
            earth,
            grid,
            fingers,
            kinds,
            pairs,
            repetitions,
            retraction,
            timing,
            jitter,
        };
        if protocol_word == "pinch" {
            Protocol::Pinch(scenario)
        } else {
            Protocol::ChordedPinch(scenario)
        }
    };

    reader.finish()?;
    Ok(StudyPreset { name, sessions, protocol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{cross_validate, train};
    use crate::presets::{generate_sessions, study1, study2_chorded};

    fn temp_path(name: &str) -> std::path::PathBuf {
        let dir = tempfile::tempdir().expect("tempdir");
        // Keep the directory alive by leaking it: unit tests are short-lived.
        let path = dir.path().join(name);
        std::mem::forget(dir);
        path
    }

    fn tiny_trace() -> TraceFile {
        let device = DeviceModel::iphone4();
        let samples = (0..24)
            .map(|k| Sample {
                t: k as f64 / 40.0,
                b: Vector3::new(
                    if k == 3 { -0.0 } else { 0.125 * k as f64 },
                    50.0 - k as f64,
                    -3.0 + 0.5 * k as f64,
                ),
            })
            .collect();
        let touches = vec![
            TouchEvent {
                timestamp: 0.5,
                x: 320.25,
                y: 481.5,
                true_label: Some("plain finger \"A\"\\note".to_string()),
                contact_count: 1,
                cell: Some((2, 3)),
            },
            TouchEvent {
                timestamp: 0.55,
                x: 10.0,
                y: 20.0,
                true_label: None,
                contact_count: 2,
                cell: None,
            },
        ];
        let trace = SensorTrace::new(samples, touches).unwrap();
        TraceFile { device, seed: 7, trace }
    }

    fn tiny_dataset() -> Dataset {
        // Two well-separated classes, eight rows each, three features.
        let mut rows = Vec::new();
        for i in 0..8 {
            let a = i as f64;
            rows.push(FeatureVector {
                values: vec![a, 1.0 + 0.1 * a, -5.0],
                label: Some("alpha".to_string()),
                meta: RowMeta { session: i as u32 % 2, timestamp: a, cell: Some((0, 0)) },
            });
            rows.push(FeatureVector {
                values: vec![a + 40.0, -1.0 - 0.1 * a, 5.0],
                label: Some("beta".to_string()),
                meta: RowMeta { session: i as u32 % 2, timestamp: a + 0.5, cell: Some((1, 0)) },
            });
        }
        Dataset::new(rows).unwrap()
    }

    #[test]
    fn trace_round_trip_is_bit_exact() {
        let file = tiny_trace();
        let path = temp_path("trace.txt");
        write_trace(&path, &file).unwrap();
        let back = read_trace(&path).unwrap();
        assert_eq!(back, file);
        // Negative zero survives with its sign bit.
        let bx = back.trace.samples()[3].b.x;
        assert_eq!(bx.to_bits(), (-0.0f64).to_bits());
        // Writing the read-back file reproduces the bytes exactly.
        let first = fs::read(&path).unwrap();
        let path2 = temp_path("trace2.txt");
        write_trace(&path2, &back).unwrap();
        assert_eq!(fs::read(&path2).unwrap(), first);
    }

    #[test]
    fn empty_trace_is_rejected_on_write() {
        let file = TraceFile {
            device: DeviceModel::iphone4(),
            seed: 0,
            trace: SensorTrace::new(vec![], vec![]).unwrap(),
        };
        let err = write_trace(temp_path("empty.txt"), &file).unwrap_err();
        assert!(matches!(err, Error::EmptyTrace));
    }

    #[test]
    fn truncated_trace_names_the_missing_line() {
        let path = temp_path("trace.txt");
        write_trace(&path, &tiny_trace()).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        // Keep the header, device, seed, and the `samples 24` line only.
        let cut: Vec<&str> = text.lines().take(4).collect();
        fs::write(&path, cut.join("\n")).unwrap();
        let err = read_trace(&path).unwrap_err();
        match err {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 5, "the first missing sample line");
                assert!(message.contains("file ends"), "{message}");
            }
            other => panic!("expected a parse error, got {other}"),
        }
    }

    #[test]
    fn corrupted_sample_names_its_own_line() {
        let path = temp_path("trace.txt");
        write_trace(&path, &tiny_trace()).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
        lines[6] = "s 0.05 oops 50 0".to_string(); // third sample line
        fs::write(&path, lines.join("\n") + "\n").unwrap();
        let err = read_trace(&path).unwrap_err();
        match err {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 7);
                assert!(message.contains("oops"), "{message}");
            }
            other => panic!("expected a parse error, got {other}"),
        }
    }

    #[test]
    fn unknown_version_is_a_version_error() {
        let path = temp_path("trace.txt");
        fs::write(&path, "magprints-trace v9\n").unwrap();
        let err = read_trace(&path).unwrap_err();
        match err {
            Error::Version { line, found, expected, .. } => {
                assert_eq!(line, 1);
                assert_eq!(found, "magprints-trace v9");
                assert_eq!(expected, TRACE_HEADER);
            }
            other => panic!("expected a version error, got {other}"),
        }
    }

    #[test]
    fn dataset_round_trip_preserves_rows_and_classes() {
        let file = DatasetFile {
            note: Some("gen --preset study1 --seed 7".to_string()),
            dataset: tiny_dataset(),
        };
        let path = temp_path("data.txt");
        write_dataset(&path, &file).unwrap();
        let back = read_dataset(&path).unwrap();
        assert_eq!(back, file);
    }

    #[test]
    fn dataset_row_width_must_match_the_header() {
        let path = temp_path("data.txt");
        let text = "magprints-dataset v1\n\
                    note -\n\
                    dim 3\n\
                    classes 1 \"alpha\"\n\
                    rows 1\n\
                    r 0 0.5 - \"alpha\" 1 2\n";
        fs::write(&path, text).unwrap();
        let err = read_dataset(&path).unwrap_err();
        match err {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 6);
                assert!(message.contains("feature 2"), "{message}");
            }
            other => panic!("expected a parse error, got {other}"),
        }
    }

    #[test]
    fn single_class_dataset_reads_fine_but_cannot_train() {
        let rows: Vec<FeatureVector> = tiny_dataset()
            .rows()
            .iter()
            .filter(|r| r.label.as_deref() == Some("alpha"))
            .cloned()
            .collect();
        let dataset = Dataset::new(rows).unwrap();
        let path = temp_path("one-class.txt");
        write_dataset(&path, &DatasetFile { note: None, dataset }).unwrap();
        let back = read_dataset(&path).unwrap();
        assert_eq!(back.dataset.classes(), ["alpha"]);
        let err = train(&back.dataset, 1e-4, 5, 7).unwrap_err();
        assert!(matches!(err, Error::DegenerateDataset(_)));
    }

    #[test]
    fn model_round_trip_reproduces_predictions() {
        let data = tiny_dataset();
        let model = train(&data, 1e-4, 50, 7).unwrap();
        let path = temp_path("model.txt");
        write_model(&path, &model).unwrap();
        let back = read_model(&path).unwrap();
        assert_eq!(back, model);
        for row in data.rows() {
            assert_eq!(
                crate::classifier::predict(&back, row).unwrap(),
                crate::classifier::predict(&model, row).unwrap()
            );
        }
    }

    #[test]
    fn model_rows_out_of_class_order_are_rejected() {
        let model = train(&tiny_dataset(), 1e-4, 5, 7).unwrap();
        let path = temp_path("model.txt");
        write_model(&path, &model).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        lines.swap(6, 7); // the two class rows
        fs::write(&path, lines.join("\n") + "\n").unwrap();
        let err = read_model(&path).unwrap_err();
        match err {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 7);
                assert!(message.contains("header order"), "{message}");
            }
            other => panic!("expected a parse error, got {other}"),
        }
    }

    #[test]
    fn report_round_trip_is_exact() {
        let report = cross_validate(&tiny_dataset(), 4, 1e-4, 50, 7).unwrap();
        let file = ReportFile { config: Some("cv --folds 4 --seed 7".to_string()), report };
        let path = temp_path("report.txt");
        write_report(&path, &file).unwrap();
        let back = read_report(&path).unwrap();
        assert_eq!(back, file);
    }

    #[test]
    fn events_round_trip_is_exact() {
        let events = vec![
            GestureEvent::Hover { timestamp: 1.25, polarity: Polarity::SouthUp },
            GestureEvent::Tap { timestamp: 2.0, label: Some("north".to_string()), warning: None },
            GestureEvent::Rotary { timestamp: 2.025, angle_deg: -14.5 },
            GestureEvent::Pinch {
                timestamp: 3.0,
                label: None,
                warning: Some("not enough \"history\"".to_string()),
            },
        ];
        let path = temp_path("events.txt");
        write_events(&path, &events).unwrap();
        assert_eq!(read_events(&path).unwrap(), events);
    }

    #[test]
    fn scenario_round_trip_generates_identical_sessions() {
        let preset = study1(7.9, 0.8, Polarity::NorthUp).unwrap();
        let path = temp_path("scenario.txt");
        write_scenario(&path, &preset).unwrap();
        let back = read_scenario(&path).unwrap();
        assert_eq!(back, preset);
        let original = generate_sessions(&preset, 7).unwrap();
        let reread = generate_sessions(&back, 7).unwrap();
        assert_eq!(original[0], reread[0], "read-back scenario must generate bit-identical traces");
    }

    #[test]
    fn chorded_scenario_round_trips() {
        let preset = study2_chorded(12.7, 0.8).unwrap();
        let path = temp_path("chorded.txt");
        write_scenario(&path, &preset).unwrap();
        assert_eq!(read_scenario(&path).unwrap(), preset);
    }

    #[test]
    fn scenario_with_implausible_earth_field_names_the_line() {
        let preset = study1(7.9, 0.8, Polarity::NorthUp).unwrap();
        let path = temp_path("scenario.txt");
        write_scenario(&path, &preset).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
        let earth_line = lines.iter().position(|l| l.starts_with("earth ")).unwrap();
        lines[earth_line] = "earth 0 500 0".to_string();
        fs::write(&path, lines.join("\n") + "\n").unwrap();
        let err = read_scenario(&path).unwrap_err();
        match err {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, earth_line + 1);
                assert!(message.contains("earth field"), "{message}");
            }
            other => panic!("expected a parse error, got {other}"),
        }
    }
}
