//! Forward synthesis of PLE and ODMR spectra.

mod antenna;
mod odmr;
mod ple;
mod protection;

pub use antenna::{AntennaResponse, Interpolation};
pub use odmr::{
    odmr_resonance_roots, simulate_odmr, Component, MagneticLevel, OdmrModel, OdmrResonance, ODMR_DEFAULT_INHOM_FWHM,
};
pub(crate) use ple::echo_bundle;
pub use ple::{branch_pl_weight, branch_sigma, mw_frequency_sweep, power_sweep_ple, simulate_ple, PleLine, PleModel};
pub use protection::{bright_y_position, fit_power_law, ProtectionEnsemble, ProtectionOutcome, TRANSVERSE_FWHM};

use crate::diagnostics::Warning;
use crate::error::{Error, Result};
use crate::lineshape::check_grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumKind {
    Ple,
    Odmr,
}

impl SpectrumKind {
    pub fn tag(self) -> &'static str {
        match self {
            SpectrumKind::Ple => "ple",
            SpectrumKind::Odmr => "odmr",
        }
    }
}

/// A sampled curve with the parameters that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub axis: Vec<f64>,
    pub intensity: Vec<f64>,
    pub params_echo: Vec<(String, String)>,
    pub kind: SpectrumKind,
    pub warnings: Vec<Warning>,
}

impl Spectrum {
    pub fn new(kind: SpectrumKind, axis: Vec<f64>, intensity: Vec<f64>) -> Result<Self> {
        check_grid(&axis)?;
        if axis.len() != intensity.len() {
            return Err(Error::Domain(format!(
                "axis has {} points but intensity has {}",
                axis.len(),
                intensity.len()
            )));
        }
        if let Some(v) = intensity.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::Domain(format!("intensity must be finite and >= 0, found {v}")));
        }
        Ok(Self {
            axis,
            intensity,
            params_echo: Vec::new(),
            kind,
            warnings: Vec::new(),
        })
    }

    pub fn echo(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.params_echo.push((key.into(), value.to_string()));
        self
    }

    pub fn len(&self) -> usize {
        self.axis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axis.is_empty()
    }

    /// Samples with axis value in `[lo, hi]`.
    pub fn window(&self, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
        self.axis
            .iter()
            .zip(&self.intensity)
            .filter(|(x, _)| **x >= lo && **x <= hi)
            .map(|(x, y)| (*x, *y))
            .unzip()
    }
}

/// `min, min + step, …` up to and including `max` (within half a step).
pub fn linear_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !min.is_finite() || !max.is_finite() || max < min {
        return Err(Error::Domain(format!(
            "grid needs finite min <= max and step > 0, got ({min}, {max}, {step})"
        )));
    }
    let n = ((max - min) / step + 0.5).floor() as usize;
    Ok((0..=n).map(|i| min + i as f64 * step).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_includes_endpoints() {
        let g = linear_grid(-1.0, 1.0, 0.5).unwrap();
        assert_eq!(g, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(linear_grid(3.0, 3.0, 1.0).unwrap(), vec![3.0]);
        assert!(linear_grid(0.0, 1.0, 0.0).is_err());
        assert!(linear_grid(1.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn spectrum_invariants() {
        assert!(Spectrum::new(SpectrumKind::Ple, vec![0.0, 1.0], vec![0.0, 1.0]).is_ok());
        assert!(Spectrum::new(SpectrumKind::Ple, vec![1.0, 0.0], vec![0.0, 1.0]).is_err());
        assert!(Spectrum::new(SpectrumKind::Ple, vec![0.0, 1.0], vec![0.0]).is_err());
        assert!(Spectrum::new(SpectrumKind::Ple, vec![0.0, 1.0], vec![0.0, -1.0]).is_err());
    }
}
