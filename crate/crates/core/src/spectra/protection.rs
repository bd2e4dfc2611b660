//! Sensitivity of the dressed optical lines to transverse electric noise.
//!
//! A transverse field ε⊥ moves ω_x → ω_x + ε⊥ and ω_y → ω_y − ε⊥, while a
//! longitudinal field ε∥ moves both lines together. With the drive held at
//! the mean splitting, the dressed lines only move at second order in ε⊥.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dressed::{sideband_ladder, Branch};
use crate::error::{Error, Result};
use crate::lineshape::rho11;
use crate::model::{DriveField, LaserField, LevelDiagram};

/// FWHM of the transverse part of the spectral diffusion.
pub const TRANSVERSE_FWHM: f64 = 48.0;

const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;
const PROBE_RABI: f64 = 1.0;

/// Center and coupling of the tracked y line for one noise realisation.
fn tracked_line(levels: &LevelDiagram, rabi_d: f64, eps_perp: f64, eps_par: f64) -> Result<(f64, f64)> {
    let perturbed = LevelDiagram::new(levels.omega_x + eps_perp + eps_par, levels.omega_y - eps_perp + eps_par);
    let drive = DriveField {
        omega_d: levels.splitting(),
        power_mw: 1.0,
        k_rabi: rabi_d,
        k_stark_x: 0.0,
        k_stark_y: 0.0,
        k_magnetic: 0.0,
    };
    let ladder = sideband_ladder(&perturbed, &LaserField::new(PROBE_RABI, PROBE_RABI), &drive, Some(2))?;
    let entry = if rabi_d > 0.0 {
        // upper line of the dressed y pair
        ladder.entry(Branch::Plus, -1)
    } else {
        // brightest line of E_y character
        let strength = |e: &&crate::dressed::LadderEntry| e.branch_weights.1 * e.eff_rabi * e.eff_rabi;
        ladder.entries.iter().max_by(|a, b| strength(a).total_cmp(&strength(b)))
    };
    let e = entry.ok_or_else(|| Error::Domain("no bright y resonance in ladder".into()))?;
    Ok((e.center, e.eff_rabi.abs()))
}

/// Position of the maximum of the tracked y resonance in the homogeneous PLE
/// spectrum, refined by golden-section search on the full spectrum.
pub fn bright_y_position(levels: &LevelDiagram, rabi_d: f64, gamma_star: f64, eps_perp: f64) -> Result<f64> {
    let (center, _) = tracked_line(levels, rabi_d, eps_perp, 0.0)?;
    let perturbed = LevelDiagram::new(levels.omega_x + eps_perp, levels.omega_y - eps_perp);
    let bundle = crate::model::validate_model(
        perturbed,
        DriveField {
            omega_d: levels.splitting(),
            power_mw: 1.0,
            k_rabi: rabi_d,
            k_stark_x: 0.0,
            k_stark_y: 0.0,
            k_magnetic: 0.0,
        },
        LaserField::new(PROBE_RABI, PROBE_RABI),
        crate::model::LineshapeParams::homogeneous(gamma_star),
    )?;
    let model = super::PleModel::new(&bundle, Some(2))?;
    let half = gamma_star.max(1.0);
    Ok(golden_max(|w| model.eval(w), center - half, center + half, 1e-10))
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Least-squares fit of log y = p log x + log c; returns (p, c).
pub fn fit_power_law(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Domain("power-law fit needs at least two paired samples".into()));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::Domain("power-law fit needs positive samples".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("power-law fit needs distinct abscissae".into()));
    }
    let p = sxy / sxx;
    Ok((p, (my - p * mx).exp()))
}

/// Seeded ensemble of static (ε⊥, ε∥) realisations.
#[derive(Debug, Clone)]
pub struct ProtectionEnsemble {
    pub levels: LevelDiagram,
    pub rabi_d: f64,
    pub gamma_star: f64,
    /// Gaussian std of ε⊥.
    pub sigma_perp: f64,
    /// Gaussian std of ε∥.
    pub sigma_par: f64,
    pub samples: usize,
    pub seed: u64,
    /// Spacing of the grid on which ensemble lines are measured.
    pub resolution: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtectionOutcome {
    pub sigma_par: f64,
    pub undriven_fwhm: f64,
    pub driven_fwhm: f64,
}

impl ProtectionOutcome {
    pub fn narrowing(&self) -> f64 {
        self.undriven_fwhm / self.driven_fwhm
    }
}

impl ProtectionEnsemble {
    pub fn new(levels: LevelDiagram, rabi_d: f64, gamma_star: f64, samples: usize, seed: u64) -> Self {
        Self {
            levels,
            rabi_d,
            gamma_star,
            sigma_perp: TRANSVERSE_FWHM / FWHM_PER_SIGMA,
            sigma_par: 0.0,
            samples,
            seed,
            resolution: 1.0,
        }
    }

    fn draws(&self) -> Vec<(f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.samples)
            .map(|_| {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                (a, b)
            })
            .collect()
    }

    /// FWHM of the ensemble-averaged homogeneous line.
    fn line_fwhm(&self, draws: &[(f64, f64)], rabi_d: f64) -> Result<f64> {
        if draws.is_empty() {
            return Err(Error::Domain("ensemble needs at least one sample".into()));
        }
        let lines: Vec<(f64, f64)> = draws
            .iter()
            .map(|&(zp, zl)| tracked_line(&self.levels, rabi_d, self.sigma_perp * zp, self.sigma_par * zl))
            .collect::<Result<_>>()?;
        let mean = lines.iter().map(|l| l.0).sum::<f64>() / lines.len() as f64;
        let spread = 6.0 * self.sigma_perp.hypot(self.sigma_par) + 10.0 * self.gamma_star + 10.0;
        let n = (2.0 * spread / self.resolution).ceil() as usize;
        let axis: Vec<f64> = (0..=n).map(|i| mean - spread + i as f64 * self.resolution).collect();
        let values: Vec<f64> = axis
            .iter()
            .map(|&w| {
                lines
                    .iter()
                    .map(|&(c, r)| rho11(r, w - c, self.gamma_star))
                    .sum::<f64>()
            })
            .collect();
        half_max_width(&axis, &values)
            .ok_or_else(|| Error::Domain("ensemble line has no resolvable half maximum".into()))
    }

    pub fn undriven_fwhm(&self) -> Result<f64> {
        self.line_fwhm(&self.draws(), 0.0)
    }

    pub fn driven_fwhm(&self) -> Result<f64> {
        self.line_fwhm(&self.draws(), self.rabi_d)
    }

    /// Choose σ∥ so the undriven line has FWHM `target`, by bisection with the
    /// same draws at every trial.
    pub fn calibrate_longitudinal(&mut self, target: f64) -> Result<f64> {
        let draws = self.draws();
        let width = |s: &mut Self, sp: f64| {
            s.sigma_par = sp;
            s.line_fwhm(&draws, 0.0)
        };
        let (mut lo, mut hi) = (0.0, target);
        if width(self, lo)? > target {
            return Err(Error::Domain(format!(
                "transverse noise alone already exceeds the target width {target} MHz"
            )));
        }
        while width(self, hi)? < target {
            hi *= 2.0;
            if hi > 1e6 {
                return Err(Error::NonConvergence("longitudinal width calibration diverged".into()));
            }
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if width(self, mid)? < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-9 * hi {
                break;
            }
        }
        self.sigma_par = 0.5 * (lo + hi);
        Ok(self.sigma_par)
    }

    pub fn run(&self) -> Result<ProtectionOutcome> {
        let draws = self.draws();
        Ok(ProtectionOutcome {
            sigma_par: self.sigma_par,
            undriven_fwhm: self.line_fwhm(&draws, 0.0)?,
            driven_fwhm: self.line_fwhm(&draws, self.rabi_d)?,
        })
    }
}

/// Width between the outermost half-maximum crossings around the global maximum.
pub(crate) fn half_max_width(x: &[f64], y: &[f64]) -> Option<f64> {
    let (imax, &ymax) = y.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
    if !(ymax > 0.0) {
        return None;
    }
    let half = 0.5 * ymax;
    let mut l = imax;
    while l > 0 && y[l] > half {
        l -= 1;
    }
    let mut r = imax;
    while r + 1 < y.len() && y[r] > half {
        r += 1;
    }
    if y[l] > half || y[r] > half {
        return None;
    }
    let xl = x[l] + (half - y[l]) * (x[l + 1] - x[l]) / (y[l + 1] - y[l]);
    let xr = x[r - 1] + (half - y[r - 1]) * (x[r] - x[r - 1]) / (y[r] - y[r - 1]);
    Some(xr - xl)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dressed::protected_shift;

    fn levels() -> LevelDiagram {
        LevelDiagram::new(2900.0, 0.0)
    }

    #[test]
    fn undriven_shift_is_linear() {
        let p0 = bright_y_position(&levels(), 0.0, 15.0, 0.0).unwrap();
        for eps in [1.0, 7.0, 30.0] {
            let p = bright_y_position(&levels(), 0.0, 15.0, eps).unwrap();
            assert!(((p0 - p) - eps).abs() < 1e-4, "{eps}: {}", p0 - p);
        }
    }

    #[test]
    fn driven_shift_follows_exact_expression() {
        let p0 = bright_y_position(&levels(), 557.0, 15.0, 0.0).unwrap();
        for eps in [5.0, 20.0, 50.0] {
            let p = bright_y_position(&levels(), 557.0, 15.0, eps).unwrap();
            let want = protected_shift(eps, 557.0).unwrap();
            assert!(((p - p0) - want).abs() < 0.01 * want, "{eps}: {} vs {want}", p - p0);
        }
    }

    #[test]
    fn power_law_fit_recovers_exponent() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.7)).collect();
        let (p, c) = fit_power_law(&x, &y).unwrap();
        assert!((p - 1.7).abs() < 1e-12 && (c - 3.0).abs() < 1e-12);
        assert!(fit_power_law(&[1.0], &[1.0]).is_err());
        assert!(fit_power_law(&[1.0, 2.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn ensemble_is_deterministic_and_narrows() {
        let mut e = ProtectionEnsemble::new(levels(), 557.0, 15.0, 2000, 7);
        e.sigma_par = 20.0;
        let a = e.run().unwrap();
        let b = e.run().unwrap();
        assert_eq!(a, b);
        assert!(a.driven_fwhm < a.undriven_fwhm);
    }

    #[test]
    fn calibration_hits_target() {
        let mut e = ProtectionEnsemble::new(levels(), 557.0, 15.0, 2000, 11);
        let s = e.calibrate_longitudinal(98.0).unwrap();
        assert!(s > 0.0);
        assert!((e.undriven_fwhm().unwrap() - 98.0).abs() < 1e-3);
    }

    #[test]
    fn half_max_of_triangle() {
        let x: Vec<f64> = (0..=20).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 10.0 - (v - 10.0).abs()).collect();
        assert!((half_max_width(&x, &y).unwrap() - 10.0).abs() < 1e-12);
    }
}
