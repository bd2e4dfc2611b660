//! Single-peak fits with a constant baseline.

use std::fmt;

use crate::error::{Error, Result};
use crate::estimation::lm::{levenberg_marquardt, LmOptions};
use crate::lineshape::Voigt;
use crate::spectra::Spectrum;

pub const MIN_SAMPLES: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeakModel {
    Gaussian,
    Lorentzian,
    Voigt,
}

impl PeakModel {
    pub fn tag(self) -> &'static str {
        match self {
            PeakModel::Gaussian => "gaussian",
            PeakModel::Lorentzian => "lorentzian",
            PeakModel::Voigt => "voigt",
        }
    }

    pub fn from_tag(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" => Ok(PeakModel::Gaussian),
            "lorentzian" => Ok(PeakModel::Lorentzian),
            "voigt" => Ok(PeakModel::Voigt),
            other => Err(Error::Domain(format!(
                "unknown peak model `{other}` (gaussian, lorentzian, voigt)"
            ))),
        }
    }

    /// Parameter names in fit order.
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            PeakModel::Gaussian => &["center", "sigma", "amplitude", "baseline"],
            PeakModel::Lorentzian => &["center", "fwhm", "amplitude", "baseline"],
            PeakModel::Voigt => &["center", "sigma", "lorentz_fwhm", "amplitude", "baseline"],
        }
    }

    /// Model curve for a parameter vector in [`param_names`](Self::param_names) order.
    pub fn curve(self, p: &[f64], x: &[f64]) -> Vec<f64> {
        match self {
            PeakModel::Gaussian => x
                .iter()
                .map(|x| p[2] * (-0.5 * ((x - p[0]) / p[1]).powi(2)).exp() + p[3])
                .collect(),
            PeakModel::Lorentzian => x
                .iter()
                .map(|x| p[2] / (1.0 + 4.0 * ((x - p[0]) / p[1]).powi(2)) + p[3])
                .collect(),
            PeakModel::Voigt => {
                let v = unit_voigt(p[2].abs(), p[1].abs());
                let peak = v.eval(0.0);
                x.iter().map(|x| p[3] * v.eval(x - p[0]) / peak + p[4]).collect()
            }
        }
    }
}

impl fmt::Display for PeakModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Voigt with Lorentzian FWHM `fwhm` and Gaussian std `sigma`.
fn unit_voigt(fwhm: f64, sigma: f64) -> Voigt {
    Voigt::new(0.5 * fwhm, fwhm / std::f64::consts::SQRT_2, sigma)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PeakWidth {
    Sigma(f64),
    Fwhm(f64),
    Voigt { sigma: f64, lorentz_fwhm: f64 },
}

impl PeakWidth {
    /// Full width at half maximum of the fitted shape.
    pub fn fwhm(&self) -> f64 {
        match *self {
            PeakWidth::Sigma(s) => s * (8.0 * std::f64::consts::LN_2).sqrt(),
            PeakWidth::Fwhm(f) => f,
            PeakWidth::Voigt { sigma, lorentz_fwhm } => {
                let v = unit_voigt(lorentz_fwhm, sigma);
                let half = 0.5 * v.eval(0.0);
                let fg = sigma * (8.0 * std::f64::consts::LN_2).sqrt();
                let (mut lo, mut hi) = (0.0, lorentz_fwhm + fg);
                while v.eval(hi) > half {
                    hi *= 2.0;
                }
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if v.eval(mid) > half {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo + hi
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeakFit {
    pub model: PeakModel,
    pub center: f64,
    pub width: PeakWidth,
    pub amplitude: f64,
    pub baseline: f64,
    /// Standard errors in [`PeakModel::param_names`] order.
    pub stderr: Vec<f64>,
    pub params: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
}

/// Local maxima whose height above the minimum exceeds `fraction` of the range.
///
/// Plateaus count once, at their lowest-frequency sample.
pub fn find_peaks(y: &[f64], fraction: f64) -> Vec<usize> {
    if y.len() < 3 {
        return Vec::new();
    }
    let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let thresh = lo + fraction * (hi - lo);
    let mut out = Vec::new();
    let mut i = 0;
    while i < y.len() {
        let mut j = i;
        while j + 1 < y.len() && y[j + 1] == y[i] {
            j += 1;
        }
        let left_ok = i == 0 || y[i - 1] < y[i];
        let right_ok = j + 1 == y.len() || y[j + 1] < y[i];
        if left_ok && right_ok && y[i] > thresh && hi > lo {
            out.push(i);
        }
        i = j + 1;
    }
    out
}

/// Index of the maximum; the lower frequency wins ties.
pub fn argmax(y: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in y.iter().enumerate() {
        if best.is_none_or(|b| *v > y[b]) {
            best = Some(i);
        }
    }
    best
}

fn initial_guess(model: PeakModel, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let imax = argmax(y).ok_or_else(|| Error::NoPeak("empty window".into()))?;
    let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
    let amp = y[imax] - lo;
    let half = lo + 0.5 * amp;
    let left = (0..imax).rev().find(|&i| y[i] <= half).map(|i| x[i]);
    let right = (imax + 1..y.len()).find(|&i| y[i] <= half).map(|i| x[i]);
    let span = x[x.len() - 1] - x[0];
    let fwhm = match (left, right) {
        (Some(l), Some(r)) => r - l,
        (Some(l), None) => 2.0 * (x[imax] - l),
        (None, Some(r)) => 2.0 * (r - x[imax]),
        (None, None) => 0.5 * span,
    }
    .max(span / (x.len() as f64));
    let c = x[imax];
    Ok(match model {
        PeakModel::Gaussian => vec![c, fwhm / 2.3548, amp, lo],
        PeakModel::Lorentzian => vec![c, fwhm, amp, lo],
        PeakModel::Voigt => vec![c, fwhm / (2.0 * 2.3548), 0.5 * fwhm, amp, lo],
    })
}

fn check_window(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Domain("x and y lengths differ".into()));
    }
    if x.len() < MIN_SAMPLES {
        return Err(Error::Domain(format!(
            "peak fit needs at least {MIN_SAMPLES} samples, window has {}",
            x.len()
        )));
    }
    if x.windows(2).any(|w| !(w[1] > w[0])) || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("window axis must increase and values be finite".into()));
    }
    let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi - lo > 1e-12 * hi.abs().max(lo.abs())) || hi == lo {
        return Err(Error::NoPeak("window is flat".into()));
    }
    let maxima = find_peaks(y, 0.5).len();
    if maxima > 1 {
        return Err(Error::MultiModal { maxima });
    }
    if maxima == 0 {
        return Err(Error::NoPeak("maximum sits on the window edge".into()));
    }
    Ok(())
}

/// Fit `model` plus a constant baseline to samples `(x, y)`.
pub fn fit_peak_xy(x: &[f64], y: &[f64], model: PeakModel) -> Result<PeakFit> {
    check_window(x, y)?;
    // fit on data scaled to [0, 1] so tolerances are independent of units
    let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
    let range = y.iter().copied().fold(f64::NEG_INFINITY, f64::max) - lo;
    let ys: Vec<f64> = y.iter().map(|v| (v - lo) / range).collect();
    let p0 = initial_guess(model, x, &ys)?;
    let mut fit = levenberg_marquardt(
        |p| Ok(model.curve(p, x).iter().zip(&ys).map(|(m, d)| m - d).collect()),
        &p0,
        &LmOptions::default(),
    )?;
    let (ia, ib) = match model {
        PeakModel::Voigt => (3, 4),
        _ => (2, 3),
    };
    fit.params[ia] *= range;
    fit.params[ib] = fit.params[ib] * range + lo;
    fit.stderr[ia] *= range;
    fit.stderr[ib] *= range;
    fit.cost *= range * range;
    let p = &fit.params;
    let width = match model {
        PeakModel::Gaussian => PeakWidth::Sigma(p[1].abs()),
        PeakModel::Lorentzian => PeakWidth::Fwhm(p[1].abs()),
        PeakModel::Voigt => PeakWidth::Voigt {
            sigma: p[1].abs(),
            lorentz_fwhm: p[2].abs(),
        },
    };
    let (amplitude, baseline) = match model {
        PeakModel::Voigt => (p[3], p[4]),
        _ => (p[2], p[3]),
    };
    if !(width.fwhm() > 0.0) {
        return Err(Error::NonConvergence(format!("{model} fit collapsed to zero width")));
    }
    Ok(PeakFit {
        model,
        center: p[0],
        width,
        amplitude,
        baseline,
        stderr: fit.stderr.clone(),
        params: fit.params.clone(),
        residual_norm: fit.residual_norm(),
        iterations: fit.iterations,
    })
}

/// Fit one peak of `spectrum` inside `[lo, hi]`.
pub fn fit_peak(spectrum: &Spectrum, window: (f64, f64), model: PeakModel) -> Result<PeakFit> {
    let (x, y) = spectrum.window(window.0, window.1);
    fit_peak_xy(&x, &y, model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lineshape::{lorentzian_fwhm, rho11};
    use crate::spectra::linear_grid;
    use proptest::prelude::*;

    #[test]
    fn gaussian_round_trip() {
        let x = linear_grid(-400.0, 400.0, 5.0).unwrap();
        let y: Vec<f64> = x.iter().map(|x| (-0.5 * (x / 91.0).powi(2)).exp()).collect();
        let f = fit_peak_xy(&x, &y, PeakModel::Gaussian).unwrap();
        assert!(f.center.abs() < 0.1);
        match f.width {
            PeakWidth::Sigma(s) => assert!((s - 91.0).abs() < 0.91),
            _ => unreachable!(),
        }
    }

    #[test]
    fn lorentzian_natural_width() {
        let x = linear_grid(-150.0, 150.0, 1.0).unwrap();
        let y: Vec<f64> = x.iter().map(|x| rho11(1e-3, *x, 15.0)).collect();
        let f = fit_peak_xy(&x, &y, PeakModel::Lorentzian).unwrap();
        assert!((f.width.fwhm() - 15.0).abs() < 0.15);
    }

    #[test]
    fn flat_and_bimodal_rejected() {
        let x = linear_grid(0.0, 10.0, 1.0).unwrap();
        assert!(matches!(
            fit_peak_xy(&x, &vec![2.0; x.len()], PeakModel::Gaussian),
            Err(Error::NoPeak(_))
        ));
        let y: Vec<f64> = x
            .iter()
            .map(|x| (-(x - 2.0_f64).powi(2)).exp() + (-(x - 8.0_f64).powi(2)).exp())
            .collect();
        assert!(matches!(
            fit_peak_xy(&x, &y, PeakModel::Gaussian),
            Err(Error::MultiModal { maxima: 2 })
        ));
        assert!(fit_peak_xy(&x[..5], &y[..5], PeakModel::Gaussian).is_err());
    }

    #[test]
    fn ties_resolve_to_lower_frequency() {
        assert_eq!(argmax(&[0.0, 1.0, 1.0, 0.0]), Some(1));
        assert_eq!(find_peaks(&[0.0, 1.0, 1.0, 0.0], 0.5), vec![1]);
    }

    #[test]
    fn voigt_fit_matches_generating_widths() {
        let (w, g, s) = (10.0, 15.0, 20.0);
        let v = Voigt::new(w, g, s);
        let x = linear_grid(-200.0, 200.0, 2.0).unwrap();
        let y: Vec<f64> = x.iter().map(|x| 7.0 * v.eval(x - 3.0)).collect();
        let f = fit_peak_xy(&x, &y, PeakModel::Voigt).unwrap();
        let PeakWidth::Voigt { sigma, lorentz_fwhm } = f.width else {
            unreachable!()
        };
        assert!((sigma - s).abs() < 0.02 * s, "{sigma}");
        assert!((lorentz_fwhm - lorentzian_fwhm(w, g)).abs() < 0.02 * lorentzian_fwhm(w, g));
        assert!((f.center - 3.0).abs() < 0.01);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn lorentzian_round_trip(c in -20.0f64..20.0, fwhm in 8.0f64..60.0, amp in 0.1f64..10.0, base in 0.0f64..1.0) {
            let x = linear_grid(-200.0, 200.0, 2.0).unwrap();
            let p = [c, fwhm, amp, base];
            let y = PeakModel::Lorentzian.curve(&p, &x);
            let f = fit_peak_xy(&x, &y, PeakModel::Lorentzian).unwrap();
            for (a, b) in f.params.iter().zip(p) {
                prop_assert!((a - b).abs() < 1e-6 * b.abs().max(1.0), "{:?} vs {:?}", f.params, p);
            }
        }
    }
}
