//! Steady-state excited population of a driven, decaying two-level
//! transition and its Gaussian-broadened (Voigt) form.
//!
//! ρ₁₁ = W² / (4Δ_R² + 2W² + γ*²), a Lorentzian in Δ_R of FWHM √(2W² + γ*²)
//! and peak height W²/(2W² + γ*²) ≤ ½.

use crate::diagnostics::{emit, Warning};
use crate::error::{Error, Result};

/// Result of [`steady_state_population`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Population {
    pub value: f64,
    /// Set for W = γ* = Δ_R = 0, where the expression is 0/0 and 0 is returned.
    pub degenerate: bool,
}

/// ρ₁₁ without input checks; the 0/0 point maps to 0.
#[inline]
pub fn rho11(rabi_w: f64, detuning_r: f64, gamma_star: f64) -> f64 {
    let w2 = rabi_w * rabi_w;
    let f2 = 2.0 * w2 + gamma_star * gamma_star;
    let den = 4.0 * detuning_r * detuning_r + f2;
    if den == 0.0 {
        0.0
    } else {
        w2 / den
    }
}

pub fn steady_state_population(rabi_w: f64, detuning_r: f64, gamma_star: f64) -> Result<Population> {
    if !(rabi_w >= 0.0) || !(gamma_star >= 0.0) || !detuning_r.is_finite() {
        return Err(Error::Domain(format!(
            "population needs W >= 0, gamma* >= 0 and finite detuning, got ({rabi_w}, {detuning_r}, {gamma_star})"
        )));
    }
    let degenerate = rabi_w == 0.0 && gamma_star == 0.0 && detuning_r == 0.0;
    if degenerate {
        log::warn!("{}", Warning::DegenerateLineshape);
    }
    Ok(Population {
        value: rho11(rabi_w, detuning_r, gamma_star),
        degenerate,
    })
}

/// FWHM √(2W² + γ*²) of the power-broadened Lorentzian.
pub fn lorentzian_fwhm(rabi_w: f64, gamma_star: f64) -> f64 {
    (2.0 * rabi_w * rabi_w + gamma_star * gamma_star).sqrt()
}

/// ρ₁₁ normalised to its own peak: (2W² + γ*²)/(4Δ_R² + 2W² + γ*²).
///
/// Defined for W = 0 as the weak-probe limit.
pub fn relative_population(rabi_w: f64, detuning_r: f64, gamma_star: f64) -> f64 {
    let f2 = 2.0 * rabi_w * rabi_w + gamma_star * gamma_star;
    if f2 == 0.0 {
        return if detuning_r == 0.0 { 1.0 } else { 0.0 };
    }
    f2 / (4.0 * detuning_r * detuning_r + f2)
}

/// A single broadened resonance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakShape {
    pub center: f64,
    pub rabi_w: f64,
    pub gamma_star: f64,
    /// Gaussian standard deviation.
    pub sigma: f64,
    pub amplitude_scale: f64,
}

impl PeakShape {
    pub fn fwhm_lorentzian(&self) -> f64 {
        lorentzian_fwhm(self.rabi_w, self.gamma_star)
    }

    fn check(&self) -> Result<()> {
        let ok = self.rabi_w >= 0.0
            && self.gamma_star >= 0.0
            && self.sigma >= 0.0
            && self.amplitude_scale >= 0.0
            && self.center.is_finite()
            && self.sigma.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid peak shape {self:?}")))
        }
    }

    /// Smallest feature the profile can resolve: min of the positive values among γ*, σ and FWHM/10.
    pub fn resolution_limit(&self) -> Option<f64> {
        [self.gamma_star, self.sigma, self.fwhm_lorentzian() / 10.0]
            .into_iter()
            .filter(|v| *v > 0.0)
            .min_by(f64::total_cmp)
    }
}

/// Intensities of one profile on a grid plus any diagnostics raised.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub values: Vec<f64>,
    pub warnings: Vec<Warning>,
}

/// Node count above which the Lorentzian is integrated exactly against a
/// piecewise-linear Gaussian instead of by plain quadrature.
const MAX_TRAPEZOID_NODES: usize = 2000;
const GAUSS_CUTOFF: f64 = 6.0;
const PRODUCT_STEPS_PER_SIGMA: f64 = 256.0;

/// Precomputed convolution of ρ₁₁(W, ·, γ*) with a normalised Gaussian of std σ.
#[derive(Debug, Clone)]
pub struct Voigt {
    w2: f64,
    f2: f64,
    fwhm: f64,
    sigma: f64,
    kind: Quadrature,
}

#[derive(Debug, Clone)]
enum Quadrature {
    Bare,
    Zero,
    Trapezoid {
        nodes: Vec<f64>,
        weights: Vec<f64>,
    },
    Product {
        step: f64,
        start: f64,
        g: Vec<f64>,
        norm: f64,
    },
}

impl Voigt {
    pub fn new(rabi_w: f64, gamma_star: f64, sigma: f64) -> Self {
        let w2 = rabi_w * rabi_w;
        let f2 = 2.0 * w2 + gamma_star * gamma_star;
        let fwhm = f2.sqrt();
        let kind = if w2 == 0.0 || fwhm == 0.0 {
            Quadrature::Zero
        } else if sigma == 0.0 {
            Quadrature::Bare
        } else {
            let h = fwhm.min(sigma) / 10.0;
            let half = (GAUSS_CUTOFF * sigma / h).ceil() as usize;
            if 2 * half < MAX_TRAPEZOID_NODES {
                let mut nodes = Vec::with_capacity(2 * half + 1);
                let mut weights = Vec::with_capacity(2 * half + 1);
                for k in 0..=2 * half {
                    let v = (k as f64 - half as f64) * h;
                    nodes.push(v);
                    weights.push((-0.5 * (v / sigma).powi(2)).exp());
                }
                let total: f64 = weights.iter().sum();
                weights.iter_mut().for_each(|w| *w /= total);
                Quadrature::Trapezoid { nodes, weights }
            } else {
                let step = sigma / PRODUCT_STEPS_PER_SIGMA;
                let half = (GAUSS_CUTOFF * PRODUCT_STEPS_PER_SIGMA) as usize;
                let start = -(half as f64) * step;
                let g: Vec<f64> = (0..=2 * half)
                    .map(|k| {
                        let v = start + k as f64 * step;
                        (-0.5 * (v / sigma).powi(2)).exp()
                    })
                    .collect();
                let norm = step * (g.iter().sum::<f64>() - 0.5 * (g[0] + g[2 * half]));
                Quadrature::Product { step, start, g, norm }
            }
        };
        Self {
            w2,
            f2,
            fwhm,
            sigma,
            kind,
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Broadened ρ₁₁ at detuning `u` from the line center.
    pub fn eval(&self, u: f64) -> f64 {
        let f2 = self.f2;
        match &self.kind {
            Quadrature::Zero => 0.0,
            Quadrature::Bare => self.w2 / (4.0 * u * u + f2),
            Quadrature::Trapezoid { nodes, weights } => {
                let mut acc = 0.0;
                for (v, w) in nodes.iter().zip(weights) {
                    let x = u - v;
                    acc += w / (4.0 * x * x + f2);
                }
                self.w2 * acc
            }
            Quadrature::Product { step, start, g, norm } => {
                // ∫ (a + b t) L(u' − t) dt over each cell, L exact
                let f = self.fwhm;
                let mut acc = 0.0;
                for k in 0..g.len() - 1 {
                    let up = u - (start + k as f64 * step);
                    let s0 = 2.0 * up / f;
                    let s1 = 2.0 * (up - step) / f;
                    let dat = (s0 - s1).atan2(1.0 + s0 * s1);
                    let dln = ((s0 - s1) * (s0 + s1) / (1.0 + s1 * s1)).ln_1p();
                    let i0 = dat;
                    let i1 = up * dat - 0.25 * f * dln;
                    let b = (g[k + 1] - g[k]) / step;
                    acc += g[k] * i0 + b * i1;
                }
                self.w2 / (2.0 * f) * acc / norm
            }
        }
    }
}

/// Voigt profile of `peak` on a strictly increasing grid.
pub fn voigt_profile(peak: &PeakShape, grid: &[f64]) -> Result<Profile> {
    peak.check()?;
    check_grid(grid)?;
    let mut warnings = Vec::new();
    if peak.rabi_w == 0.0 && peak.gamma_star == 0.0 {
        emit(&mut warnings, Warning::DegenerateLineshape);
    }
    if let (Some(limit), Some(spacing)) = (peak.resolution_limit(), max_spacing(grid)) {
        if spacing > limit {
            emit(&mut warnings, Warning::CoarseGrid { spacing, limit });
        }
    }
    let v = Voigt::new(peak.rabi_w, peak.gamma_star, peak.sigma);
    let values = grid
        .iter()
        .map(|w| peak.amplitude_scale * v.eval(w - peak.center))
        .collect();
    Ok(Profile { values, warnings })
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("grid contains non-finite values".into()));
    }
    if let Some(i) = grid.windows(2).position(|p| p[1] <= p[0]) {
        return Err(Error::Domain(format!(
            "grid must be strictly increasing (index {} -> {})",
            i,
            i + 1
        )));
    }
    Ok(())
}

pub(crate) fn max_spacing(grid: &[f64]) -> Option<f64> {
    grid.windows(2).map(|p| p[1] - p[0]).max_by(f64::total_cmp)
}
