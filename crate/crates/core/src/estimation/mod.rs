//! Inverse problems: peak fits, power regressions, the joint sideband
//! amplitude fit and dipole arithmetic.

pub mod dipole;
pub mod lm;
pub mod peaks;
pub mod power;
pub mod sidebands;

pub use dipole::{
    dipole_from_splitting, dipole_geometry, field_from_magnetic_rabi, orientation_spread, pair_angle, row_geometry,
    DipoleEstimate, DipoleGeometry, DipoleRow, DipoleVector, OrientationSpread, RowGeometry,
};
pub use lm::{levenberg_marquardt, LmFit, LmOptions};
pub use peaks::{argmax, find_peaks, fit_peak, fit_peak_xy, PeakFit, PeakModel, PeakWidth};
pub use power::{fit_splitting_vs_power, PowerSlope};
pub use sidebands::{
    fit_sideband_amplitudes, predict_amplitudes, synthesize_amplitudes, AmplitudeObservation, SidebandFit,
    SidebandParams,
};
