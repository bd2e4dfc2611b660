//! Domain types for the driven three-level optical model.
//!
//! Every frequency, rate and coupling is an ordinary frequency in MHz; the
//! factor 2π only appears inside the time-domain oracle. Powers are linear
//! mW. The ground state |0⟩ is the energy reference.

use crate::error::{Error, Result, ValidationReport};

/// Eigenfrequencies of the working states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelDiagram {
    /// Ground-state reference, always 0.
    pub omega_0: f64,
    pub omega_x: f64,
    pub omega_y: f64,
    /// Magnetic excited level used by ODMR; user supplied.
    pub omega_m: Option<f64>,
}

impl LevelDiagram {
    pub fn new(omega_x: f64, omega_y: f64) -> Self {
        Self {
            omega_0: 0.0,
            omega_x,
            omega_y,
            omega_m: None,
        }
    }

    pub fn with_magnetic(mut self, omega_m: f64) -> Self {
        self.omega_m = Some(omega_m);
        self
    }

    /// Transverse splitting ω_x − ω_y.
    pub fn splitting(&self) -> f64 {
        self.omega_x - self.omega_y
    }

    /// Detuning of a drive at `omega_d` from the E_x ↔ E_y transition.
    pub fn detuning(&self, omega_d: f64) -> f64 {
        omega_d - self.splitting()
    }

    pub fn omega_m(&self) -> Result<f64> {
        self.omega_m
            .ok_or_else(|| Error::MissingKey("model.omega_m_mhz".into()))
    }

    /// Every level shifted by `delta`, ground reference kept at 0.
    pub fn shifted(&self, delta: f64) -> Self {
        Self {
            omega_0: 0.0,
            omega_x: self.omega_x + delta,
            omega_y: self.omega_y + delta,
            omega_m: self.omega_m.map(|m| m + delta),
        }
    }
}

/// Microwave tone and its power-to-coupling slopes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveField {
    pub omega_d: f64,
    pub power_mw: f64,
    /// Ω_d per √mW.
    pub k_rabi: f64,
    /// A_x per √mW.
    pub k_stark_x: f64,
    /// A_y per √mW.
    pub k_stark_y: f64,
    /// Ω_m per √mW.
    pub k_magnetic: f64,
}

impl DriveField {
    pub fn undriven(omega_d: f64) -> Self {
        Self {
            omega_d,
            power_mw: 0.0,
            k_rabi: 0.0,
            k_stark_x: 0.0,
            k_stark_y: 0.0,
            k_magnetic: 0.0,
        }
    }

    pub fn at_power(mut self, power_mw: f64) -> Self {
        self.power_mw = power_mw;
        self
    }

    pub fn at_frequency(mut self, omega_d: f64) -> Self {
        self.omega_d = omega_d;
        self
    }

    fn scale(&self, slope: f64) -> f64 {
        slope * self.power_mw.max(0.0).sqrt()
    }

    pub fn rabi_d(&self) -> f64 {
        self.scale(self.k_rabi)
    }

    pub fn stark_x(&self) -> f64 {
        self.scale(self.k_stark_x)
    }

    pub fn stark_y(&self) -> f64 {
        self.scale(self.k_stark_y)
    }

    pub fn rabi_m(&self) -> f64 {
        self.scale(self.k_magnetic)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaserField {
    pub omega_l: f64,
    pub rabi_x: f64,
    pub rabi_y: f64,
}

impl LaserField {
    pub fn new(rabi_x: f64, rabi_y: f64) -> Self {
        Self {
            omega_l: 0.0,
            rabi_x,
            rabi_y,
        }
    }

    pub fn tuned(mut self, omega_l: f64) -> Self {
        self.omega_l = omega_l;
        self
    }
}

/// Homogeneous and inhomogeneous broadening of the two optical lines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineshapeParams {
    /// Spontaneous-emission rate γ*.
    pub gamma_star: f64,
    /// Gaussian standard deviation of the E_x line.
    pub sigma_x: f64,
    /// Gaussian standard deviation of the E_y line.
    pub sigma_y: f64,
    /// PL brightness of E_y relative to E_x at equal optical Rabi frequency.
    pub pl_ratio: f64,
}

impl LineshapeParams {
    /// γ* for PLE lineshapes.
    pub const PLE_GAMMA_STAR: f64 = 15.0;
    /// γ* for ODMR population transfer (spin repolarization under green light).
    pub const ODMR_GAMMA_STAR: f64 = 2.3;

    pub fn homogeneous(gamma_star: f64) -> Self {
        Self {
            gamma_star,
            sigma_x: 0.0,
            sigma_y: 0.0,
            pl_ratio: 1.0,
        }
    }
}

impl Default for LineshapeParams {
    fn default() -> Self {
        Self::homogeneous(Self::PLE_GAMMA_STAR)
    }
}

/// A model whose invariants have all been checked.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelBundle {
    pub levels: LevelDiagram,
    pub drive: DriveField,
    pub laser: LaserField,
    pub shape: LineshapeParams,
}

impl ModelBundle {
    pub fn with_power(&self, power_mw: f64) -> Result<Self> {
        validate_model(self.levels, self.drive.at_power(power_mw), self.laser, self.shape)
    }

    pub fn with_drive_frequency(&self, omega_d: f64) -> Result<Self> {
        validate_model(self.levels, self.drive.at_frequency(omega_d), self.laser, self.shape)
    }
}

/// `slope · √power`, the coupling produced by a drive of linear power `power`.
pub fn coupling_from_power(slope: f64, power: f64) -> Result<f64> {
    if !(slope >= 0.0) || !slope.is_finite() {
        return Err(Error::Domain(format!("coupling slope must be >= 0, got {slope}")));
    }
    if !(power >= 0.0) || !power.is_finite() {
        return Err(Error::Domain(format!("power must be >= 0 mW, got {power}")));
    }
    Ok(slope * power.sqrt())
}

/// Check every invariant and return the bundle, or a report listing all violations.
pub fn validate_model(
    levels: LevelDiagram,
    drive: DriveField,
    laser: LaserField,
    shape: LineshapeParams,
) -> Result<ModelBundle> {
    let mut report = ValidationReport::default();

    let frequencies = [
        ("levels.omega_0", levels.omega_0),
        ("levels.omega_x", levels.omega_x),
        ("levels.omega_y", levels.omega_y),
        ("levels.omega_m", levels.omega_m.unwrap_or(0.0)),
        ("drive.omega_d", drive.omega_d),
        ("laser.omega_l", laser.omega_l),
    ];
    for (field, v) in frequencies {
        if !v.is_finite() {
            report.push(field, v, "must be finite");
        }
    }

    if levels.omega_0 != 0.0 {
        report.push("levels.omega_0", levels.omega_0, "ground reference must be 0");
    }
    if levels.omega_x < levels.omega_y {
        report.push(
            "levels.omega_x",
            levels.omega_x,
            "omega_x >= omega_y (transverse splitting is non-negative by labeling)",
        );
    }
    if drive.omega_d < 0.0 {
        report.push("drive.omega_d", drive.omega_d, "drive frequency must be >= 0");
    }

    let non_negative = [
        ("drive.power_mw", drive.power_mw),
        ("drive.k_rabi", drive.k_rabi),
        ("drive.k_stark_x", drive.k_stark_x),
        ("drive.k_stark_y", drive.k_stark_y),
        ("drive.k_magnetic", drive.k_magnetic),
        ("laser.rabi_x", laser.rabi_x),
        ("laser.rabi_y", laser.rabi_y),
        ("shape.gamma_star", shape.gamma_star),
        ("shape.sigma_x", shape.sigma_x),
        ("shape.sigma_y", shape.sigma_y),
        ("shape.pl_ratio", shape.pl_ratio),
    ];
    for (field, v) in non_negative {
        if !(v >= 0.0) || !v.is_finite() {
            report.push(field, v, "must be finite and >= 0");
        }
    }

    if report.is_empty() {
        Ok(ModelBundle {
            levels,
            drive,
            laser,
            shape,
        })
    } else {
        Err(Error::Validation(report))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn valid_parts() -> (LevelDiagram, DriveField, LaserField, LineshapeParams) {
        let drive = DriveField {
            omega_d: 2900.0,
            power_mw: 100.0,
            k_rabi: 15.8,
            k_stark_x: 0.0,
            k_stark_y: 0.0,
            k_magnetic: 0.28,
        };
        (
            LevelDiagram::new(2900.0, 0.0),
            drive,
            LaserField::new(8.16, 17.4),
            LineshapeParams::default(),
        )
    }

    #[test]
    fn coupling_examples() {
        assert_eq!(coupling_from_power(10.7, 1.0).unwrap(), 10.7);
        assert_eq!(coupling_from_power(15.8, 0.0).unwrap(), 0.0);
        assert_eq!(coupling_from_power(15.8, 4.0).unwrap(), 31.6);
    }

    #[test]
    fn coupling_rejects_negative_inputs() {
        assert!(matches!(coupling_from_power(-1.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(coupling_from_power(1.0, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn accepts_large_strain() {
        let (l, d, la, s) = valid_parts();
        let b = validate_model(l, d, la, s).unwrap();
        assert_eq!(b.levels.splitting(), 2900.0);
    }

    #[test]
    fn rejects_negative_power() {
        let (l, mut d, la, s) = valid_parts();
        d.power_mw = -1.0;
        match validate_model(l, d, la, s) {
            Err(Error::Validation(r)) => {
                assert_eq!(r.fields().collect::<Vec<_>>(), vec!["drive.power_mw"]);
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn reports_every_violation() {
        let (mut l, mut d, mut la, s) = valid_parts();
        l.omega_x = -5.0;
        d.k_rabi = -1.0;
        la.rabi_y = f64::NAN;
        let Err(Error::Validation(r)) = validate_model(l, d, la, s) else {
            panic!("expected validation error");
        };
        let fields: Vec<_> = r.fields().collect();
        assert_eq!(fields, vec!["levels.omega_x", "drive.k_rabi", "laser.rabi_y"]);
    }

    #[test]
    fn zero_model_is_legal() {
        let b = validate_model(
            LevelDiagram::new(0.0, 0.0),
            DriveField::undriven(0.0),
            LaserField::new(0.0, 0.0),
            LineshapeParams {
                gamma_star: 0.0,
                sigma_x: 0.0,
                sigma_y: 0.0,
                pl_ratio: 0.0,
            },
        );
        assert!(b.is_ok());
    }

    #[test]
    fn odmr_level_is_required_on_access() {
        let l = LevelDiagram::new(2900.0, 0.0);
        assert!(matches!(l.omega_m(), Err(Error::MissingKey(_))));
        assert_eq!(l.with_magnetic(-2850.0).omega_m().unwrap(), -2850.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn coupling_is_homogeneous(k in 0.0..100.0f64, p in 0.0..1e4f64) {
                let a = coupling_from_power(k, p).unwrap();
                let b = coupling_from_power(k, 4.0 * p).unwrap();
                prop_assert_eq!(b, 2.0 * a);
            }

            #[test]
            fn coupling_is_monotone(k in 0.0..100.0f64, p in 0.0..1e4f64, dp in 0.0..1e3f64) {
                prop_assert!(coupling_from_power(k, p + dp).unwrap() >= coupling_from_power(k, p).unwrap());
            }
        }
    }
}
