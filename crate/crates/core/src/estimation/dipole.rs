//! Dipole moments from measured splittings, and geometry of computed dipole vectors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Electron gyromagnetic ratio, MHz/mT.
pub const GAMMA_E: f64 = 28.024;
/// Planck constant, J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// One Debye in C·m.
pub const DEBYE: f64 = 3.33564e-30;

/// Transverse microwave field in μT from a ground-state magnetic Rabi frequency.
pub fn field_from_magnetic_rabi(rabi_m: f64) -> Result<f64> {
    field_from_magnetic_rabi_with(rabi_m, GAMMA_E)
}

pub fn field_from_magnetic_rabi_with(rabi_m: f64, gamma_e: f64) -> Result<f64> {
    if !(rabi_m >= 0.0) || !(gamma_e > 0.0) {
        return Err(Error::Domain(format!(
            "need rabi_m >= 0 and gamma_e > 0, got ({rabi_m}, {gamma_e})"
        )));
    }
    Ok(rabi_m / gamma_e * 1000.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleEstimate {
    /// Debye.
    pub mu: f64,
    pub splitting_mhz: f64,
    pub field_kv_m: f64,
    /// Debye; zero until an orientation spread is applied.
    pub uncertainty: f64,
}

/// μ = h·f/E in Debye for a splitting in MHz and a field in kV/m.
pub fn dipole_from_splitting(splitting_mhz: f64, field_kv_m: f64) -> Result<DipoleEstimate> {
    if !(field_kv_m > 0.0) || !(splitting_mhz >= 0.0) {
        return Err(Error::Domain(format!(
            "need splitting >= 0 and field > 0, got ({splitting_mhz}, {field_kv_m})"
        )));
    }
    let mu = PLANCK * splitting_mhz * 1e6 / (field_kv_m * 1e3) / DEBYE;
    Ok(DipoleEstimate {
        mu,
        splitting_mhz,
        field_kv_m,
        uncertainty: 0.0,
    })
}

/// Spread of the field projected on a dipole tilted from the NV axis at random azimuth.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientationSpread {
    /// Mean and standard deviation of the projected field, kV/m.
    pub field_mean: f64,
    pub field_std: f64,
    /// Median and 16th/84th percentile of μ, Debye.
    pub mu_median: f64,
    pub mu_low: f64,
    pub mu_high: f64,
    pub samples: usize,
}

/// Propagate an unknown dipole azimuth into the dipole estimate.
///
/// The field has components `field_parallel` along the NV axis and
/// `field_perp` across it; the dipole sits `tilt_deg` off the axis with a
/// uniformly random azimuth.
pub fn orientation_spread(
    splitting_mhz: f64,
    field_parallel: f64,
    field_perp: f64,
    tilt_deg: f64,
    samples: usize,
    seed: u64,
) -> Result<OrientationSpread> {
    if samples < 2 || !(field_parallel.is_finite() && field_perp.is_finite() && tilt_deg.is_finite()) {
        return Err(Error::Domain(
            "orientation spread needs >= 2 samples and finite inputs".into(),
        ));
    }
    let (st, ct) = tilt_deg.to_radians().sin_cos();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fields = Vec::with_capacity(samples);
    let mut mus = Vec::with_capacity(samples);
    for _ in 0..samples {
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let e = (field_parallel * ct + field_perp * st * phi.cos()).abs();
        fields.push(e);
        if e > 0.0 {
            mus.push(dipole_from_splitting(splitting_mhz, e)?.mu);
        }
    }
    if mus.is_empty() {
        return Err(Error::Domain(
            "field is orthogonal to the dipole for every azimuth".into(),
        ));
    }
    let n = fields.len() as f64;
    let field_mean = fields.iter().sum::<f64>() / n;
    let field_std = (fields.iter().map(|f| (f - field_mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    mus.sort_by(f64::total_cmp);
    let q = |p: f64| mus[((mus.len() - 1) as f64 * p).round() as usize];
    Ok(OrientationSpread {
        field_mean,
        field_std,
        mu_median: q(0.5),
        mu_low: q(0.16),
        mu_high: q(0.84),
        samples,
    })
}

/// Components in the basis {⟨−1,0,1⟩, ⟨−1,2,−1⟩, ⟨1,1,1⟩}, Debye; z is the NV axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl DipoleVector {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn dot(&self, o: &DipoleVector) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    fn check(&self) -> Result<()> {
        if [self.x, self.y, self.z].iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Domain(format!("dipole components must be finite, got {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleGeometry {
    pub magnitude: f64,
    pub parallel: f64,
    pub perpendicular: f64,
    /// Degrees from the NV axis; `None` for the zero vector.
    pub angle_to_axis: Option<f64>,
}

pub fn dipole_geometry(v: &DipoleVector) -> Result<DipoleGeometry> {
    v.check()?;
    let magnitude = v.norm();
    let angle_to_axis = (magnitude > 0.0).then(|| (v.z / magnitude).clamp(-1.0, 1.0).acos().to_degrees());
    Ok(DipoleGeometry {
        magnitude,
        parallel: v.z,
        perpendicular: v.x.hypot(v.y),
        angle_to_axis,
    })
}

/// Angle between two dipoles in degrees.
pub fn pair_angle(a: &DipoleVector, b: &DipoleVector) -> Result<f64> {
    a.check()?;
    b.check()?;
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Domain("pair angle undefined for a zero vector".into()));
    }
    Ok((a.dot(b) / (na * nb)).clamp(-1.0, 1.0).acos().to_degrees())
}

/// One row of computed dipoles at a given strain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleRow {
    /// Strain in units of 10⁻² %.
    pub strain: f64,
    pub delta_p_y: DipoleVector,
    pub delta_p_x: DipoleVector,
    pub transition: DipoleVector,
}

/// Derived quantities of one [`DipoleRow`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowGeometry {
    pub strain: f64,
    pub delta_p_y: DipoleGeometry,
    pub delta_p_x: DipoleGeometry,
    pub transition: DipoleGeometry,
    pub pair_angle: f64,
}

pub fn row_geometry(row: &DipoleRow) -> Result<RowGeometry> {
    Ok(RowGeometry {
        strain: row.strain,
        delta_p_y: dipole_geometry(&row.delta_p_y)?,
        delta_p_x: dipole_geometry(&row.delta_p_x)?,
        transition: dipole_geometry(&row.transition)?,
        pair_angle: pair_angle(&row.delta_p_x, &row.delta_p_y)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn splitting_to_dipole() {
        let d = dipole_from_splitting(557.0, 30.0).unwrap();
        assert!((d.mu - 3.69).abs() < 0.01, "{}", d.mu);
        let h = dipole_from_splitting(557.0, 60.0).unwrap();
        assert!((h.mu - d.mu / 2.0).abs() < 1e-12);
        assert_eq!(dipole_from_splitting(0.0, 5.0).unwrap().mu, 0.0);
        assert!(dipole_from_splitting(1.0, 0.0).is_err());
    }

    #[test]
    fn magnetic_field_conversion() {
        assert!((field_from_magnetic_rabi(9.1).unwrap() - 325.0).abs() < 2.0);
        assert_eq!(field_from_magnetic_rabi(0.0).unwrap(), 0.0);
        assert!((field_from_magnetic_rabi(28.024).unwrap() - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn strained_row_geometry() {
        let g = dipole_geometry(&DipoleVector::new(0.23, -2.10, 1.63)).unwrap();
        assert!((g.parallel - 1.63).abs() < 0.01);
        assert!((g.perpendicular - 2.11).abs() < 0.01);
        assert!((g.magnitude - 2.67).abs() < 0.01);
        let t = dipole_geometry(&DipoleVector::new(-0.13, -0.93, 1.99)).unwrap();
        assert!((t.magnitude - 2.20).abs() < 0.01);
        assert!((t.angle_to_axis.unwrap() - 25.2).abs() < 0.5);
        let z = dipole_geometry(&DipoleVector::new(0.0, 0.0, 1.0)).unwrap();
        assert_eq!((z.parallel, z.perpendicular, z.angle_to_axis), (1.0, 0.0, Some(0.0)));
        assert_eq!(
            dipole_geometry(&DipoleVector::new(0.0, 0.0, 0.0))
                .unwrap()
                .angle_to_axis,
            None
        );
    }

    #[test]
    fn orientation_spread_is_seeded() {
        let a = orientation_spread(557.0, 25.0, 20.0, 25.0, 4000, 7).unwrap();
        let b = orientation_spread(557.0, 25.0, 20.0, 25.0, 4000, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.mu_low <= a.mu_median && a.mu_median <= a.mu_high);
        assert!(a.field_std > 0.0);
    }

    fn vec3() -> impl Strategy<Value = DipoleVector> {
        (-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0).prop_map(|(x, y, z)| DipoleVector::new(x, y, z))
    }

    proptest! {
        #[test]
        fn magnitude_decomposes(v in vec3()) {
            let g = dipole_geometry(&v).unwrap();
            prop_assert!((g.magnitude.powi(2) - g.parallel.powi(2) - g.perpendicular.powi(2)).abs() < 1e-12);
        }

        #[test]
        fn pair_angle_symmetric_and_scale_free(a in vec3(), b in vec3(), s in 0.01f64..100.0) {
            prop_assume!(a.norm() > 1e-3 && b.norm() > 1e-3);
            let ab = pair_angle(&a, &b).unwrap();
            prop_assert_eq!(ab, pair_angle(&b, &a).unwrap());
            let sa = DipoleVector::new(a.x * s, a.y * s, a.z * s);
            prop_assert!((pair_angle(&sa, &b).unwrap() - ab).abs() < 1e-6);
            prop_assert!(pair_angle(&a, &a).unwrap().abs() < 1e-5);
        }
    }
}
