//! Simulation and recognition toolkit for magnet-instrumented multitouch input.
//!
//! `magprints` models fingers wearing small axially magnetized discs above a
//! touchscreen, samples the combined magnetic field at the device's built-in
//! magnetometer, and recognizes which finger produced each touch from the
//! field's motion signature in the half second before contact. Everything is
//! deterministic from a seed: traces, datasets, trained models, and reports
//! reproduce bit for bit.
//!
//! The crate is organized as a pipeline; the guide in `book/` walks through
//! each stage with the same examples used in the doc-tests:
//!
//! 1. [`magnetics`] — disc magnets as point dipoles, field superposition.
//! 2. [`device`] — screen geometry, magnetometer placement, seeded sampling.
//! 3. [`synth`] — scripted approach trajectories and synthetic study sessions.
//! 4. [`features`] — differential feature vectors around each touch.
//! 5. [`classifier`] — linear one-vs-rest SVM with stratified cross-validation.
//! 6. [`gestures`] — gesture vocabulary enumeration and stream recognition.
//! 7. [`io`] — versioned line-oriented text formats for every artifact.
//! 8. [`cli`] — the `magprints` command-line front end.
//!
//! # Example
//!
//! Compute the dipole moment of a worn disc magnet and its field a couple of
//! centimeters away:
//!
//! ```
//! use magprints::magnetics::{dipole_field, MagnetSpec, Polarity};
//! use nalgebra::Vector3;
//!
//! // A 7.9 mm x 0.8 mm N40 disc, north pole facing away from the screen.
//! let spec = MagnetSpec::n40(7.9, 0.8, Polarity::NorthUp, "north")?;
//! assert!((spec.moment() - 3.93e-2).abs() / 3.93e-2 < 1e-2); // A·m²
//!
//! // On the magnet's axis, 20 mm below the disc, the field is ~1 mT:
//! let dipole = spec.dipole_at(Vector3::zeros());
//! let field = dipole_field(&dipole, Vector3::new(0.0, 0.0, -0.02))?;
//! assert!((field.z - 9.825e-4).abs() / 9.825e-4 < 1e-3);
//! # Ok::<(), magprints::Error>(())
//! ```

#![forbid(unsafe_code)]
#![deny(missing_docs)]

pub mod classifier;
pub mod cli;
pub mod device;
pub mod features;
pub mod gestures;
pub mod io;
pub mod magnetics;
pub mod presets;
pub mod synth;

mod error;
mod seed;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
