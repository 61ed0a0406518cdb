//! Disc magnets as point dipoles: moments, fields, superposition.
//!
//! A small axially magnetized disc worn on a fingernail is modeled as a point
//! dipole at the disc center. The dipole moment magnitude follows from the
//! disc's remanence and volume, `m = Br·V/μ0`, and the field anywhere outside
//! the disc is the classical point-dipole expression. Fields from several
//! worn magnets superpose linearly on top of the ambient geomagnetic field.
//!
//! Coordinates are right-handed device coordinates: X across the screen,
//! Y along it, Z out of the glass toward the user. Positions are meters;
//! dipole fields are tesla; summed sensor-level fields are microtesla.

use nalgebra::Vector3;

use crate::{Error, Result};

/// Vacuum permeability, N/A².
pub const MU_0: f64 = 4.0e-7 * std::f64::consts::PI;

/// Distance below which a field evaluation counts as singular, meters.
///
/// The point-dipole expression diverges at the source; anything below a
/// nanometer is a modeling error rather than a physical configuration.
pub const MIN_SEPARATION_M: f64 = 1e-9;

/// Which pole of a worn disc faces away from the screen.
///
/// "Up" is +Z, away from the glass toward the user. A `NorthUp` disc has its
/// dipole moment along +Z; flipping the disc exactly negates its field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    /// North pole faces away from the screen.
    NorthUp,
    /// South pole faces away from the screen.
    SouthUp,
}

impl Polarity {
    /// Sign applied to the magnet's axis to get the moment direction.
    pub fn sign(self) -> f64 {
        match self {
            Polarity::NorthUp => 1.0,
            Polarity::SouthUp => -1.0,
        }
    }

    /// The opposite polarity.
    pub fn flipped(self) -> Polarity {
        match self {
            Polarity::NorthUp => Polarity::SouthUp,
            Polarity::SouthUp => Polarity::NorthUp,
        }
    }
}

/// Physical description of a worn disc magnet.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnetSpec {
    /// Disc diameter, millimeters.
    pub diameter_mm: f64,
    /// Disc height (thickness), millimeters.
    pub height_mm: f64,
    /// Remanent field strength of the disc material, tesla.
    pub remanence_t: f64,
    /// Which pole faces away from the screen.
    pub polarity: Polarity,
    /// Fingerprint label this magnet defines (a dataset class name).
    pub id: String,
}

impl MagnetSpec {
    /// Remanence of grade N40 sintered NdFeB, tesla.
    pub const N40_REMANENCE_T: f64 = 1.26;

    /// Build a spec, validating that all physical quantities are positive
    /// and the id is usable as a whitespace-free class label.
    pub fn new(
        diameter_mm: f64,
        height_mm: f64,
        remanence_t: f64,
        polarity: Polarity,
        id: &str,
    ) -> Result<MagnetSpec> {
        if !diameter_mm.is_finite() || diameter_mm <= 0.0 {
            return Err(Error::InvalidMagnet(format!(
                "diameter {diameter_mm} mm must be positive"
            )));
        }
        if !height_mm.is_finite() || height_mm <= 0.0 {
            return Err(Error::InvalidMagnet(format!("height {height_mm} mm must be positive")));
        }
        if !remanence_t.is_finite() || remanence_t <= 0.0 {
            return Err(Error::InvalidMagnet(format!(
                "remanence {remanence_t} T must be positive"
            )));
        }
        if id.is_empty() || id.chars().any(char::is_whitespace) {
            return Err(Error::InvalidMagnet(format!(
                "id `{id}` must be non-empty and contain no whitespace"
            )));
        }
        Ok(MagnetSpec { diameter_mm, height_mm, remanence_t, polarity, id: id.to_string() })
    }

    /// Build an N40-grade disc spec (remanence 1.26 T).
    ///
    /// ```
    /// use magprints::magnetics::{MagnetSpec, Polarity};
    /// let disc = MagnetSpec::n40(7.9, 0.8, Polarity::NorthUp, "north")?;
    /// // m = Br · π r² h / μ0 ≈ 3.93e-2 A·m²
    /// assert!((disc.moment() - 3.93e-2).abs() / 3.93e-2 < 1e-2);
    /// # Ok::<(), magprints::Error>(())
    /// ```
    pub fn n40(
        diameter_mm: f64,
        height_mm: f64,
        polarity: Polarity,
        id: &str,
    ) -> Result<MagnetSpec> {
        MagnetSpec::new(diameter_mm, height_mm, Self::N40_REMANENCE_T, polarity, id)
    }

    /// Dipole moment magnitude `Br·V/μ0`, A·m².
    pub fn moment(&self) -> f64 {
        let r = self.diameter_mm * 1e-3 / 2.0;
        let h = self.height_mm * 1e-3;
        let volume = std::f64::consts::PI * r * r * h;
        self.remanence_t * volume / MU_0
    }

    /// The same spec with the disc flipped over.
    pub fn flipped(&self, id: &str) -> Result<MagnetSpec> {
        MagnetSpec::new(
            self.diameter_mm,
            self.height_mm,
            self.remanence_t,
            self.polarity.flipped(),
            id,
        )
    }

    /// Place this magnet at `position` with its axis along the screen normal.
    pub fn dipole_at(&self, position: Vector3<f64>) -> Dipole {
        self.dipole_with_axis(position, Vector3::z())
    }

    /// Place this magnet at `position` with an arbitrary (unit) "up" axis,
    /// e.g. for a tilted finger. The moment direction is the axis times the
    /// polarity sign.
    pub fn dipole_with_axis(&self, position: Vector3<f64>, axis: Vector3<f64>) -> Dipole {
        Dipole { moment: axis * (self.polarity.sign() * self.moment()), position }
    }
}

/// A point dipole: moment vector (A·m²) at a position (m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dipole {
    /// Dipole moment vector, A·m².
    pub moment: Vector3<f64>,
    /// Dipole position in device coordinates, meters.
    pub position: Vector3<f64>,
}

/// Ambient geomagnetic field at the device, microtesla.
///
/// The device lies flat on a table, so the default field lies in the screen
/// plane (no vertical component) pointing along +Y ("north") at the global
/// mean magnitude of 50 µT.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EarthField {
    vector_ut: Vector3<f64>,
}

impl EarthField {
    /// Smallest plausible geomagnetic magnitude, µT.
    pub const MIN_UT: f64 = 20.0;
    /// Largest plausible geomagnetic magnitude, µT.
    pub const MAX_UT: f64 = 70.0;

    /// Build an earth field, validating the magnitude is geomagnetically
    /// plausible (20..=70 µT).
    pub fn new(vector_ut: Vector3<f64>) -> Result<EarthField> {
        let magnitude = vector_ut.norm();
        if !(Self::MIN_UT..=Self::MAX_UT).contains(&magnitude) {
            return Err(Error::EarthFieldRange { magnitude });
        }
        Ok(EarthField { vector_ut })
    }

    /// The field vector, µT.
    pub fn vector(&self) -> Vector3<f64> {
        self.vector_ut
    }

    /// Wrap a vector without range validation. Reserved for internal use
    /// where the vector is a perturbation of an already-validated field
    /// (e.g. snapping to the sensor quantization grid).
    pub(crate) fn raw(vector_ut: Vector3<f64>) -> EarthField {
        EarthField { vector_ut }
    }
}

impl Default for EarthField {
    fn default() -> Self {
        EarthField { vector_ut: Vector3::new(0.0, 50.0, 0.0) }
    }
}

/// Point-dipole field at `at`, tesla.
///
/// `B = (μ0/4π) · (3(m·r̂)r̂ − m) / |r|³` with `r = at − position`.
/// Evaluating at the dipole's own position is a singularity error.
///
/// On the dipole axis this reduces to `B = μ0·m/(2π d³)`:
///
/// ```
/// use magprints::magnetics::{dipole_field, Dipole, MU_0};
/// use nalgebra::Vector3;
///
/// let d = Dipole { moment: Vector3::new(0.0, 0.0, 3.93e-2), position: Vector3::zeros() };
/// let b = dipole_field(&d, Vector3::new(0.0, 0.0, 0.02))?;
/// let closed_form = MU_0 * 3.93e-2 / (2.0 * std::f64::consts::PI * 0.02f64.powi(3));
/// assert!((b.z - closed_form).abs() / closed_form < 1e-12);
/// # Ok::<(), magprints::Error>(())
/// ```
pub fn dipole_field(dipole: &Dipole, at: Vector3<f64>) -> Result<Vector3<f64>> {
    let r = at - dipole.position;
    let dist = r.norm();
    if dist < MIN_SEPARATION_M {
        return Err(Error::DipoleSingularity);
    }
    let rhat = r / dist;
    let m = dipole.moment;
    let radial = 3.0 * m.dot(&rhat);
    Ok((MU_0 / (4.0 * std::f64::consts::PI)) * (rhat * radial - m) / (dist * dist * dist))
}

/// Total field at `at`: earth field plus every dipole's contribution, µT.
///
/// An empty dipole list returns the earth field unchanged.
pub fn total_field(
    dipoles: &[Dipole],
    earth: &EarthField,
    at: Vector3<f64>,
) -> Result<Vector3<f64>> {
    let mut sum_t = Vector3::zeros();
    for dipole in dipoles {
        sum_t += dipole_field(dipole, at)?;
    }
    Ok(earth.vector() + sum_t * 1e6)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Independent oracle: moment from first principles with literal numbers.
    /// 7.9 mm x 0.8 mm N40 disc: V = π·(3.95e-3)²·8e-4 m³, m = 1.26·V/μ0.
    #[test]
    fn moment_matches_volume_oracle() {
        let spec = MagnetSpec::n40(7.9, 0.8, Polarity::NorthUp, "north").unwrap();
        let volume = std::f64::consts::PI * 3.95e-3 * 3.95e-3 * 8e-4;
        let oracle = 1.26 * volume / (4.0e-7 * std::f64::consts::PI);
        assert_relative_eq!(spec.moment(), oracle, max_relative = 1e-12);
        // Frozen value: ≈ 3.93e-2 A·m² (π cancels: m = Br·r²·h/4e-7).
        assert_relative_eq!(spec.moment(), 3.9318e-2, max_relative = 1e-3);
    }

    #[test]
    fn study_magnet_moments_are_ordered_by_volume() {
        let m32 = MagnetSpec::n40(3.2, 0.8, Polarity::NorthUp, "a").unwrap().moment();
        let m79 = MagnetSpec::n40(7.9, 0.8, Polarity::NorthUp, "b").unwrap().moment();
        let m127 = MagnetSpec::n40(12.7, 0.8, Polarity::NorthUp, "c").unwrap().moment();
        let m127t = MagnetSpec::n40(12.7, 2.4, Polarity::NorthUp, "d").unwrap().moment();
        assert!(m32 < m79 && m79 < m127 && m127 < m127t);
        // Frozen oracle values, Br·r²·h/4e-7:
        assert_relative_eq!(m32, 6.4512e-3, max_relative = 1e-4);
        assert_relative_eq!(m127, 1.016e-1, max_relative = 1e-3);
    }

    /// On-axis closed form μ0·m/(2π d³) must match the general expression to
    /// within accumulated rounding (1e-9 relative is the acceptance bound).
    #[test]
    fn on_axis_field_matches_closed_form() {
        let moment = 3.93e-2;
        let d = Dipole { moment: Vector3::new(0.0, 0.0, moment), position: Vector3::zeros() };
        for dist in [0.005, 0.01, 0.02, 0.05, 0.1] {
            let b = dipole_field(&d, Vector3::new(0.0, 0.0, dist)).unwrap();
            let closed = MU_0 * moment / (2.0 * std::f64::consts::PI * dist.powi(3));
            assert_relative_eq!(b.z, closed, max_relative = 1e-9);
            // Transverse components vanish exactly on the axis.
            assert_eq!(b.x, 0.0);
            assert_eq!(b.y, 0.0);
        }
        // Frozen: 2e-7·0.0393/8e-6 = 9.825e-4 T at 20 mm — around a thousand
        // times the geomagnetic background, which is why touches are visible.
        let b = dipole_field(&d, Vector3::new(0.0, 0.0, 0.02)).unwrap();
        assert_relative_eq!(b.z, 9.825e-4, max_relative = 1e-9);
    }

    /// Equatorial field is half the axial magnitude, opposite direction.
    #[test]
    fn equatorial_field_is_half_axial_and_reversed() {
        let moment = 3.93e-2;
        let d = Dipole { moment: Vector3::new(0.0, 0.0, moment), position: Vector3::zeros() };
        let b = dipole_field(&d, Vector3::new(0.02, 0.0, 0.0)).unwrap();
        let expected = -MU_0 * moment / (4.0 * std::f64::consts::PI * 0.02f64.powi(3));
        assert_relative_eq!(b.z, expected, max_relative = 1e-12);
        assert_eq!(b.x, 0.0);
        assert_eq!(b.y, 0.0);
    }

    /// |B| falls as 1/d³: doubling distance divides the magnitude by 8.
    #[test]
    fn inverse_cube_decay() {
        let d = Dipole {
            moment: Vector3::new(0.011, -0.02, 0.033),
            position: Vector3::new(0.004, 0.002, -0.001),
        };
        for p in [
            Vector3::new(0.01, 0.02, 0.015),
            Vector3::new(-0.03, 0.00, 0.01),
            Vector3::new(0.0, 0.0, 0.02),
        ] {
            let near = dipole_field(&d, d.position + p).unwrap().norm();
            let far = dipole_field(&d, d.position + p * 2.0).unwrap().norm();
            assert_relative_eq!(near / far, 8.0, max_relative = 1e-9);
        }
    }

    /// Flipping polarity negates the field component-by-component, bit-exactly.
    #[test]
    fn polarity_flip_negates_field_exactly() {
        let north = MagnetSpec::n40(7.9, 0.8, Polarity::NorthUp, "n").unwrap();
        let south = north.flipped("s").unwrap();
        let pos = Vector3::new(0.01, 0.02, 0.01);
        for at in [
            Vector3::new(0.044, 0.069, -0.002),
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(0.03, -0.01, 0.004),
        ] {
            let bn = dipole_field(&north.dipole_at(pos), at).unwrap();
            let bs = dipole_field(&south.dipole_at(pos), at).unwrap();
            assert_eq!(bn.x, -bs.x);
            assert_eq!(bn.y, -bs.y);
            assert_eq!(bn.z, -bs.z);
        }
    }

    /// Superposition: the summed field is the sum of individual fields.
    #[test]
    fn superposition_is_linear() {
        let earth = EarthField::default();
        let a = Dipole {
            moment: Vector3::new(0.0, 0.0, 0.04),
            position: Vector3::new(0.01, 0.01, 0.01),
        };
        let b = Dipole {
            moment: Vector3::new(0.0, 0.0, -0.1),
            position: Vector3::new(0.03, 0.05, 0.01),
        };
        let at = Vector3::new(0.044, 0.069, -0.002);
        let both = total_field(&[a, b], &earth, at).unwrap();
        let only_a = total_field(&[a], &earth, at).unwrap() - earth.vector();
        let only_b = total_field(&[b], &earth, at).unwrap() - earth.vector();
        let recombined = earth.vector() + only_a + only_b;
        assert_relative_eq!(both.x, recombined.x, max_relative = 1e-12);
        assert_relative_eq!(both.y, recombined.y, max_relative = 1e-12);
        assert_relative_eq!(both.z, recombined.z, max_relative = 1e-12);
    }

    /// A close opposite-polarity pair acts as a quadrupole: its far field is
    /// much weaker than either magnet alone at the same distance.
    #[test]
    fn opposite_magnets_partially_cancel() {
        let earth = EarthField::default();
        let n = MagnetSpec::n40(12.7, 0.8, Polarity::NorthUp, "n").unwrap();
        let s = n.flipped("s").unwrap();
        let sensor = Vector3::new(0.0, 0.0, 0.0);
        // 4 mm apart, both 50 mm from the sensor.
        let pair = [
            n.dipole_at(Vector3::new(-0.002, 0.0, 0.05)),
            s.dipole_at(Vector3::new(0.002, 0.0, 0.05)),
        ];
        let combined = (total_field(&pair, &earth, sensor).unwrap() - earth.vector()).norm();
        let single = (total_field(&pair[..1], &earth, sensor).unwrap() - earth.vector()).norm();
        assert!(
            combined < 0.5 * single,
            "close opposite pair should mostly cancel: {combined} vs {single}"
        );
    }

    /// With no dipoles the total field IS the earth field, bit for bit.
    #[test]
    fn empty_scene_returns_earth_exactly() {
        let earth = EarthField::new(Vector3::new(11.5, -43.25, 7.0)).unwrap();
        let total = total_field(&[], &earth, Vector3::new(0.01, 0.02, 0.0)).unwrap();
        assert_eq!(total, earth.vector());
    }

    #[test]
    fn singularity_at_dipole_position() {
        let d = Dipole { moment: Vector3::z() * 0.04, position: Vector3::new(0.01, 0.01, 0.01) };
        assert!(matches!(dipole_field(&d, d.position), Err(Error::DipoleSingularity)));
    }

    #[test]
    fn spec_validation_rejects_nonphysical_values() {
        assert!(MagnetSpec::n40(0.0, 0.8, Polarity::NorthUp, "x").is_err());
        assert!(MagnetSpec::n40(7.9, -0.8, Polarity::NorthUp, "x").is_err());
        assert!(MagnetSpec::new(7.9, 0.8, 0.0, Polarity::NorthUp, "x").is_err());
        assert!(MagnetSpec::n40(7.9, 0.8, Polarity::NorthUp, "").is_err());
        assert!(MagnetSpec::n40(7.9, 0.8, Polarity::NorthUp, "two words").is_err());
    }

    #[test]
    fn earth_field_range_is_enforced() {
        assert!(EarthField::new(Vector3::new(0.0, 10.0, 0.0)).is_err());
        assert!(EarthField::new(Vector3::new(0.0, 80.0, 0.0)).is_err());
        assert!(EarthField::new(Vector3::new(0.0, 20.0, 0.0)).is_ok());
        assert!(EarthField::new(Vector3::new(0.0, 70.0, 0.0)).is_ok());
        assert_relative_eq!(EarthField::default().vector().norm(), 50.0);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_unit_offset() -> impl Strategy<Value = Vector3<f64>> {
            (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0).prop_filter_map(
                "non-degenerate offset",
                |(x, y, z)| {
                    let v = Vector3::new(x, y, z);
                    (v.norm() > 1e-3).then(|| v.normalize())
                },
            )
        }

        proptest! {
            /// Inverse-cube decay holds in every direction.
            #[test]
            fn decay_ratio_is_eight(dir in arb_unit_offset(), dist in 0.005f64..0.2) {
                let d = Dipole { moment: Vector3::new(0.01, 0.02, 0.03), position: Vector3::zeros() };
                let near = dipole_field(&d, dir * dist).unwrap().norm();
                let far = dipole_field(&d, dir * (2.0 * dist)).unwrap().norm();
                prop_assert!((near / far - 8.0).abs() < 1e-9);
            }

            /// Field is linear in the moment.
            #[test]
            fn field_scales_with_moment(dir in arb_unit_offset(), scale in 0.1f64..10.0) {
                let base = Dipole { moment: Vector3::new(0.004, -0.01, 0.02), position: Vector3::zeros() };
                let scaled = Dipole { moment: base.moment * scale, position: base.position };
                let at = dir * 0.03;
                let b1 = dipole_field(&base, at).unwrap() * scale;
                let b2 = dipole_field(&scaled, at).unwrap();
                prop_assert!((b1 - b2).norm() <= 1e-12 * b2.norm().max(1e-300));
            }
        }
    }
}
