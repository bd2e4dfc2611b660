use rayon::prelude::*;

use super::{AntennaResponse, Spectrum, SpectrumKind};
use crate::dressed::{mixing, Branch};
use crate::error::{Error, Result};
use crate::lineshape::{check_grid, rho11};
use crate::model::{DriveField, LevelDiagram, LineshapeParams};

/// FWHM of the Gaussian applied to ODMR spectra.
pub const ODMR_DEFAULT_INHOM_FWHM: f64 = 48.0;

const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;
const GAUSS_CUTOFF: f64 = 6.0;

/// One magnetic excited level |E_m⟩ coupled to the dressed pair.
#[derive(Debug, Clone, PartialEq)]
pub struct MagneticLevel {
    pub label: String,
    pub omega_m: f64,
    /// Relative oscillator strength of the transition.
    pub weight: f64,
}

impl MagneticLevel {
    pub fn new(label: impl Into<String>, omega_m: f64) -> Self {
        Self {
            label: label.into(),
            omega_m,
            weight: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdmrModel {
    pub levels: LevelDiagram,
    pub magnetic: Vec<MagneticLevel>,
    /// Ω_m per √mW.
    pub k_magnetic: f64,
    pub gamma_star: f64,
    /// FWHM of the final Gaussian convolution.
    pub inhom_width: f64,
}

/// Bare component of a dressed state that meets |E_m⟩.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    X,
    Y,
}

impl OdmrModel {
    /// Single magnetic level taken from `levels.omega_m`; fails if it is absent.
    pub fn new(levels: LevelDiagram, k_magnetic: f64) -> Result<Self> {
        let m = levels.omega_m()?;
        Self::with_levels(levels, vec![MagneticLevel::new("E_m", m)], k_magnetic)
    }

    pub fn with_levels(levels: LevelDiagram, magnetic: Vec<MagneticLevel>, k_magnetic: f64) -> Result<Self> {
        let model = Self {
            levels,
            magnetic,
            k_magnetic,
            gamma_star: LineshapeParams::ODMR_GAMMA_STAR,
            inhom_width: ODMR_DEFAULT_INHOM_FWHM,
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        if self.magnetic.is_empty() {
            return Err(Error::MissingKey("model.omega_m_mhz".into()));
        }
        let ok = self.k_magnetic >= 0.0
            && self.gamma_star >= 0.0
            && self.inhom_width >= 0.0
            && self.inhom_width.is_finite()
            && self.magnetic.iter().all(|m| m.omega_m.is_finite() && m.weight >= 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(
                "ODMR model needs k_magnetic, gamma*, inhom width and level weights >= 0".into(),
            ))
        }
    }

    pub fn sigma(&self) -> f64 {
        self.inhom_width / FWHM_PER_SIGMA
    }

    /// Transition frequencies |q − ω_m| and couplings of the four dressed
    /// resonances of `level` at drive frequency `omega_d` and power `power_mw`.
    fn resonances(
        &self,
        level: &MagneticLevel,
        drive: &DriveField,
        omega_d: f64,
        power_mw: f64,
    ) -> [(Component, Branch, f64, f64); 4] {
        let sp = power_mw.max(0.0).sqrt();
        let rabi_d = drive.k_rabi * sp;
        let rabi_m = self.k_magnetic * sp;
        let l = &self.levels;
        // rabi_d >= 0 by validation, so mixing cannot fail
        let f = mixing(rabi_d, l.detuning(omega_d)).expect("non-negative drive");
        let c = f.composition();
        let sum = l.omega_x + l.omega_y;
        let cx = 0.5 * (sum + omega_d);
        let cy = 0.5 * (sum - omega_d);
        let t = |q: f64| (q - level.omega_m).abs();
        [
            (
                Component::X,
                Branch::Plus,
                t(cx + f.omega_plus),
                rabi_m * c.plus_x.abs(),
            ),
            (
                Component::X,
                Branch::Minus,
                t(cx + f.omega_minus),
                rabi_m * c.minus_x.abs(),
            ),
            (
                Component::Y,
                Branch::Plus,
                t(cy + f.omega_plus),
                rabi_m * c.plus_y.abs(),
            ),
            (
                Component::Y,
                Branch::Minus,
                t(cy + f.omega_minus),
                rabi_m * c.minus_y.abs(),
            ),
        ]
    }

    /// Unbroadened population transfer at one drive frequency.
    pub fn homogeneous(&self, drive: &DriveField, omega_d: f64, power_mw: f64) -> f64 {
        let mut acc = 0.0;
        for level in &self.magnetic {
            for (_, _, freq, w) in self.resonances(level, drive, omega_d, power_mw) {
                acc += level.weight * rho11(w, omega_d - freq, self.gamma_star);
            }
        }
        acc
    }

    fn power_at(&self, drive: &DriveField, antenna: Option<&AntennaResponse>, omega_d: f64) -> Result<f64> {
        match antenna {
            Some(a) => a.corrected_power(drive.power_mw, omega_d),
            None => Ok(drive.power_mw),
        }
    }

    /// Convolution nodes (offset, weight), normalised.
    fn kernel(&self) -> Vec<(f64, f64)> {
        let sigma = self.sigma();
        if sigma == 0.0 {
            return vec![(0.0, 1.0)];
        }
        let fine = if self.gamma_star > 0.0 {
            self.gamma_star.min(sigma)
        } else {
            sigma
        };
        let h = fine / 10.0;
        let half = (GAUSS_CUTOFF * sigma / h).ceil() as i64;
        let mut k: Vec<(f64, f64)> = (-half..=half)
            .map(|i| {
                let v = i as f64 * h;
                (v, (-0.5 * (v / sigma).powi(2)).exp())
            })
            .collect();
        let total: f64 = k.iter().map(|p| p.1).sum();
        k.iter_mut().for_each(|p| p.1 /= total);
        k
    }
}

/// ODMR spectrum versus drive frequency.
///
/// At every frequency the dressed pair is recomputed with Δ(ω_d), the four
/// transitions to each |E_m⟩ are evaluated with Ω_m projected on the bare
/// component, and the result is convolved with the inhomogeneous Gaussian.
/// With an antenna table, the drive power is corrected point by point; the
/// table must cover the grid plus the Gaussian support.
pub fn simulate_odmr(
    model: &OdmrModel,
    drive: &DriveField,
    grid: &[f64],
    antenna: Option<&AntennaResponse>,
) -> Result<Spectrum> {
    model.validate()?;
    check_grid(grid)?;
    if !(drive.power_mw >= 0.0) || !(drive.k_rabi >= 0.0) {
        return Err(Error::Domain("drive power and k_rabi must be >= 0".into()));
    }
    let kernel = model.kernel();
    if let (Some(a), Some(first), Some(last)) = (antenna, grid.first(), grid.last()) {
        let reach = kernel.last().map(|p| p.0).unwrap_or(0.0);
        let (lo, hi) = a.range();
        if first - reach < lo || last + reach > hi {
            return Err(Error::Domain(format!(
                "antenna table [{lo}, {hi}] MHz does not cover the grid plus convolution support [{}, {}] MHz",
                first - reach,
                last + reach
            )));
        }
    }
    let intensity: Vec<f64> = grid
        .par_iter()
        .map(|&w| {
            let mut acc = 0.0;
            for &(v, g) in &kernel {
                let x = w - v;
                let p = model.power_at(drive, antenna, x)?;
                acc += g * model.homogeneous(drive, x, p);
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;

    let mut s = Spectrum::new(SpectrumKind::Odmr, grid.to_vec(), intensity)?
        .echo("omega_x_mhz", model.levels.omega_x)
        .echo("omega_y_mhz", model.levels.omega_y);
    for m in &model.magnetic {
        s = s
            .echo(format!("omega_m_mhz[{}]", m.label), m.omega_m)
            .echo(format!("weight[{}]", m.label), m.weight);
    }
    Ok(s.echo("power_mw", drive.power_mw)
        .echo("k_rabi_mhz", drive.k_rabi)
        .echo("k_magnetic_mhz", model.k_magnetic)
        .echo("gamma_star_mhz", model.gamma_star)
        .echo("inhom_fwhm_mhz", model.inhom_width)
        .echo("antenna", if antenna.is_some() { "table" } else { "flat" }))
}

/// A drive frequency satisfying the dressed resonance condition.
#[derive(Debug, Clone, PartialEq)]
pub struct OdmrResonance {
    pub level: String,
    pub component: Component,
    pub branch: Branch,
    pub omega_d: f64,
    /// Ω_m projected on the bare component at the root.
    pub rabi_w: f64,
    /// Generalized Rabi frequency √(Ω_d² + Δ²) at the root.
    pub splitting: f64,
}

/// Self-consistent roots of ω_d = |q(ω_d) − ω_m| in `[lo, hi]`, found by
/// scanning with `step` for sign changes and bisecting each bracket.
pub fn odmr_resonance_roots(
    model: &OdmrModel,
    drive: &DriveField,
    antenna: Option<&AntennaResponse>,
    lo: f64,
    hi: f64,
    step: f64,
) -> Result<Vec<OdmrResonance>> {
    model.validate()?;
    if !(step > 0.0) || !(hi > lo) {
        return Err(Error::Domain(format!(
            "root scan needs lo < hi and step > 0, got ({lo}, {hi}, {step})"
        )));
    }
    let n = ((hi - lo) / step).ceil() as usize;
    let mut out = Vec::new();
    for level in &model.magnetic {
        for slot in 0..4 {
            let f = |w: f64| -> Result<f64> {
                let p = model.power_at(drive, antenna, w)?;
                Ok(w - model.resonances(level, drive, w, p)[slot].2)
            };
            let mut a = lo;
            let mut fa = f(a)?;
            for k in 1..=n {
                let b = (lo + k as f64 * step).min(hi);
                let fb = f(b)?;
                if (fa < 0.0) != (fb < 0.0) {
                    let (mut x0, mut x1) = (a, b);
                    let neg0 = fa < 0.0;
                    while x1 - x0 > 1e-10 * x1.abs().max(1.0) {
                        let mid = 0.5 * (x0 + x1);
                        if (f(mid)? < 0.0) == neg0 {
                            x0 = mid;
                        } else {
                            x1 = mid;
                        }
                    }
                    let w = 0.5 * (x0 + x1);
                    let p = model.power_at(drive, antenna, w)?;
                    let (component, branch, _, rabi_w) = model.resonances(level, drive, w, p)[slot];
                    let rabi_d = drive.k_rabi * p.sqrt();
                    out.push(OdmrResonance {
                        level: level.label.clone(),
                        component,
                        branch,
                        omega_d: w,
                        rabi_w,
                        splitting: rabi_d.hypot(model.levels.detuning(w)),
                    });
                }
                a = b;
                fa = fb;
            }
        }
    }
    out.sort_by(|x, y| x.omega_d.total_cmp(&y.omega_d));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::linear_grid;

    fn model() -> OdmrModel {
        OdmrModel::new(LevelDiagram::new(2900.0, 0.0).with_magnetic(-2850.0), 0.28).unwrap()
    }

    fn drive(power: f64) -> DriveField {
        DriveField {
            omega_d: 0.0,
            power_mw: power,
            k_rabi: 15.8,
            k_stark_x: 0.0,
            k_stark_y: 0.0,
            k_magnetic: 0.28,
        }
    }

    fn maxima(s: &Spectrum) -> Vec<(f64, f64)> {
        let y = &s.intensity;
        (1..y.len() - 1)
            .filter(|&i| y[i] > y[i - 1] && y[i] >= y[i + 1] && y[i] > 1e-6)
            .map(|i| (s.axis[i], y[i]))
            .collect()
    }

    #[test]
    fn requires_magnetic_level() {
        let r = OdmrModel::new(LevelDiagram::new(2900.0, 0.0), 0.28);
        assert!(matches!(r, Err(Error::MissingKey(k)) if k == "model.omega_m_mhz"));
    }

    #[test]
    fn undriven_limit_has_bare_resonance() {
        // vanishing electric coupling, magnetic coupling kept
        let mut d = drive(100.0);
        d.k_rabi = 0.0;
        let roots = odmr_resonance_roots(&model(), &d, None, 2000.0, 7000.0, 1.0).unwrap();
        let weighted: Vec<_> = roots.iter().filter(|r| r.rabi_w > 1e-9).collect();
        let pos: Vec<f64> = weighted.iter().map(|r| r.omega_d).collect();
        assert_eq!(pos.len(), 2, "{roots:?}");
        assert!((pos[0] - 2850.0).abs() < 1e-6);
        assert!((pos[1] - 5750.0).abs() < 1e-6);
    }

    #[test]
    fn roots_satisfy_dressed_condition() {
        let m = model();
        let d = drive(1000.0);
        let roots = odmr_resonance_roots(&m, &d, None, 2300.0, 3400.0, 0.5).unwrap();
        let y: Vec<_> = roots.iter().filter(|r| r.component == Component::Y).collect();
        assert_eq!(y.len(), 2);
        for r in y {
            let delta = r.omega_d - 2900.0;
            let sign = if r.branch == Branch::Plus { 1.0 } else { -1.0 };
            let want = 0.0 - delta / 2.0 + sign * 0.5 * (15.8f64 * 1000f64.sqrt()).hypot(delta) + 2850.0;
            assert!((r.omega_d - want).abs() < 1e-6);
        }
    }

    #[test]
    fn magnetic_line_splits_upper_weaker() {
        let m = model();
        let grid = linear_grid(2300.0, 3400.0, 1.0).unwrap();
        let s = simulate_odmr(&m, &drive(300.0), &grid, None).unwrap();
        let pk = maxima(&s);
        assert_eq!(pk.len(), 2, "{pk:?}");
        assert!(pk[1].1 < pk[0].1);
        let roots = odmr_resonance_roots(&m, &drive(300.0), None, 2300.0, 3400.0, 0.5).unwrap();
        for (p, r) in pk.iter().zip(roots.iter().filter(|r| r.component == Component::Y)) {
            assert!((p.0 - r.omega_d).abs() < 5.0, "{p:?} {r:?}");
        }
    }

    #[test]
    fn flat_antenna_matches_constant_power() {
        let m = model();
        let grid = linear_grid(2600.0, 3100.0, 5.0).unwrap();
        let flat = AntennaResponse::flat(2000.0, 4000.0, 30.0).unwrap();
        let a = simulate_odmr(&m, &drive(500.0), &grid, None).unwrap();
        let b = simulate_odmr(&m, &drive(500.0), &grid, Some(&flat)).unwrap();
        assert_eq!(a.intensity, b.intensity);
    }

    #[test]
    fn antenna_must_cover_kernel() {
        let m = model();
        let grid = linear_grid(2600.0, 3100.0, 5.0).unwrap();
        let short = AntennaResponse::flat(2600.0, 3100.0, 30.0).unwrap();
        assert!(simulate_odmr(&m, &drive(500.0), &grid, Some(&short)).is_err());
    }

    #[test]
    fn zero_width_skips_convolution() {
        let mut m = model();
        m.inhom_width = 0.0;
        let d = drive(200.0);
        let grid = linear_grid(2700.0, 3000.0, 3.0).unwrap();
        let s = simulate_odmr(&m, &d, &grid, None).unwrap();
        for (w, v) in grid.iter().zip(&s.intensity) {
            assert_eq!(*v, m.homogeneous(&d, *w, 200.0));
        }
    }

    #[test]
    fn translation_covariance() {
        let m = model();
        let mut shifted = m.clone();
        shifted.levels = m.levels.shifted(40.0);
        shifted.magnetic[0].omega_m += 40.0;
        let grid = linear_grid(2500.0, 3200.0, 10.0).unwrap();
        let a = simulate_odmr(&m, &drive(400.0), &grid, None).unwrap();
        let b = simulate_odmr(&shifted, &drive(400.0), &grid, None).unwrap();
        for (x, y) in a.intensity.iter().zip(&b.intensity) {
            assert!((x - y).abs() <= 1e-12 * x.max(1e-12));
        }
    }
}
