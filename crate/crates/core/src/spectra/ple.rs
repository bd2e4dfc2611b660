use rayon::prelude::*;

use super::{AntennaResponse, Spectrum, SpectrumKind};
use crate::diagnostics::{emit, Warning};
use crate::dressed::{sideband_ladder, Branch, SidebandLadder};
use crate::error::{Error, Result};
use crate::lineshape::{check_grid, lorentzian_fwhm, max_spacing, Voigt};
use crate::model::{LineshapeParams, ModelBundle};

/// PL brightness of a dressed branch: E_x fraction + r · E_y fraction.
pub fn branch_pl_weight(weights: (f64, f64), pl_ratio: f64) -> f64 {
    weights.0 + pl_ratio * weights.1
}

/// Gaussian width of a dressed branch, mixing the bare-line variances by composition.
pub fn branch_sigma(weights: (f64, f64), shape: &LineshapeParams) -> f64 {
    (weights.0 * shape.sigma_x.powi(2) + weights.1 * shape.sigma_y.powi(2)).sqrt()
}

/// One broadened resonance of a PLE spectrum.
#[derive(Debug, Clone)]
pub struct PleLine {
    pub branch: Branch,
    pub n: i64,
    pub center: f64,
    pub eff_rabi: f64,
    pub weight: f64,
    pub sigma: f64,
    voigt: Voigt,
}

impl PleLine {
    pub fn eval(&self, omega_l: f64) -> f64 {
        self.weight * self.voigt.eval(omega_l - self.center)
    }
}

/// A PLE spectrum as a continuous function of laser frequency.
#[derive(Debug, Clone)]
pub struct PleModel {
    pub lines: Vec<PleLine>,
    pub ladder: Option<SidebandLadder>,
    pub gamma_star: f64,
    pub warnings: Vec<Warning>,
}

impl PleModel {
    pub fn new(bundle: &ModelBundle, n_max: Option<usize>) -> Result<Self> {
        let shape = bundle.shape;
        let drive = &bundle.drive;
        let static_field = drive.rabi_d() == 0.0 && drive.stark_x() == 0.0 && drive.stark_y() == 0.0;
        let mut warnings = Vec::new();
        let make = |branch, n, center, eff_rabi: f64, weights| PleLine {
            branch,
            n,
            center,
            eff_rabi,
            weight: branch_pl_weight(weights, shape.pl_ratio),
            sigma: branch_sigma(weights, &shape),
            voigt: Voigt::new(eff_rabi.abs(), shape.gamma_star, branch_sigma(weights, &shape)),
        };

        let (lines, ladder) = if drive.omega_d == 0.0 && static_field {
            let l = &bundle.levels;
            let lines = vec![
                make(Branch::Plus, 0, l.omega_x, bundle.laser.rabi_x, (1.0, 0.0)),
                make(Branch::Minus, 0, l.omega_y, bundle.laser.rabi_y, (0.0, 1.0)),
            ];
            (lines, None)
        } else {
            let ladder = sideband_ladder(&bundle.levels, &bundle.laser, drive, n_max)?;
            for w in &ladder.warnings {
                emit(&mut warnings, w.clone());
            }
            let lines = ladder
                .entries
                .iter()
                .filter(|e| e.eff_rabi != 0.0)
                .map(|e| make(e.branch, e.n, e.center, e.eff_rabi, e.branch_weights))
                .collect();
            (lines, Some(ladder))
        };

        let model = Self {
            lines,
            ladder,
            gamma_star: shape.gamma_star,
            warnings,
        };
        let mut warnings = model.warnings.clone();
        for (first, second) in model.overlapping_pairs() {
            emit(&mut warnings, Warning::OverlappingPeaks { first, second });
        }
        Ok(Self { warnings, ..model })
    }

    /// Centers of strong lines closer than three times the larger homogeneous FWHM.
    fn overlapping_pairs(&self) -> Vec<(f64, f64)> {
        let strong: Vec<&PleLine> = self
            .lines
            .iter()
            .filter(|l| l.eff_rabi.abs() > self.gamma_star)
            .collect();
        let mut out = Vec::new();
        for (i, a) in strong.iter().enumerate() {
            for b in &strong[i + 1..] {
                let fa = lorentzian_fwhm(a.eff_rabi.abs(), self.gamma_star);
                let fb = lorentzian_fwhm(b.eff_rabi.abs(), self.gamma_star);
                if (a.center - b.center).abs() < 3.0 * fa.max(fb) {
                    out.push((a.center.min(b.center), a.center.max(b.center)));
                }
            }
        }
        out
    }

    pub fn eval(&self, omega_l: f64) -> f64 {
        self.lines.iter().map(|l| l.eval(omega_l)).sum()
    }

    pub fn line(&self, branch: Branch, n: i64) -> Option<&PleLine> {
        self.lines.iter().find(|l| l.branch == branch && l.n == n)
    }

    /// Smallest positive value among γ*, the branch σ's and FWHM/10 of the lines.
    pub fn resolution_limit(&self) -> Option<f64> {
        self.lines
            .iter()
            .flat_map(|l| {
                [
                    self.gamma_star,
                    l.sigma,
                    lorentzian_fwhm(l.eff_rabi.abs(), self.gamma_star) / 10.0,
                ]
            })
            .filter(|v| *v > 0.0)
            .min_by(f64::total_cmp)
    }

    /// Upper bound ½ Σ weights on the intensity.
    pub fn intensity_bound(&self) -> f64 {
        0.5 * self.lines.iter().map(|l| l.weight).sum::<f64>()
    }
}

pub(crate) fn echo_bundle(s: Spectrum, b: &ModelBundle) -> Spectrum {
    let mut s = s
        .echo("omega_x_mhz", b.levels.omega_x)
        .echo("omega_y_mhz", b.levels.omega_y);
    if let Some(m) = b.levels.omega_m {
        s = s.echo("omega_m_mhz", m);
    }
    s.echo("omega_d_mhz", b.drive.omega_d)
        .echo("power_mw", b.drive.power_mw)
        .echo("k_rabi_mhz", b.drive.k_rabi)
        .echo("k_stark_x_mhz", b.drive.k_stark_x)
        .echo("k_stark_y_mhz", b.drive.k_stark_y)
        .echo("k_magnetic_mhz", b.drive.k_magnetic)
        .echo("rabi_x_mhz", b.laser.rabi_x)
        .echo("rabi_y_mhz", b.laser.rabi_y)
        .echo("gamma_star_mhz", b.shape.gamma_star)
        .echo("sigma_x_mhz", b.shape.sigma_x)
        .echo("sigma_y_mhz", b.shape.sigma_y)
        .echo("pl_ratio", b.shape.pl_ratio)
}

/// PLE intensity versus laser frequency on `grid`.
pub fn simulate_ple(bundle: &ModelBundle, grid: &[f64], n_max: Option<usize>) -> Result<Spectrum> {
    check_grid(grid)?;
    let model = PleModel::new(bundle, n_max)?;
    let intensity: Vec<f64> = grid.par_iter().map(|&w| model.eval(w)).collect();
    let mut s = Spectrum::new(SpectrumKind::Ple, grid.to_vec(), intensity)?;
    s.warnings = model.warnings.clone();
    if let (Some(limit), Some(spacing)) = (model.resolution_limit(), max_spacing(grid)) {
        if spacing > limit {
            emit(&mut s.warnings, Warning::CoarseGrid { spacing, limit });
        }
    }
    let mut s = echo_bundle(s, bundle);
    if let Some(l) = &model.ladder {
        s = s.echo("n_max", l.n_max);
    }
    Ok(s)
}

/// One PLE spectrum per drive frequency, with the drive power optionally
/// corrected by the antenna response.
pub fn mw_frequency_sweep(
    bundle: &ModelBundle,
    omegas: &[f64],
    grid: &[f64],
    antenna: Option<&AntennaResponse>,
) -> Result<Vec<Spectrum>> {
    if let Some(w) = omegas.iter().find(|w| !(**w > 0.0)) {
        return Err(Error::Domain(format!("sweep drive frequencies must be > 0, got {w}")));
    }
    omegas
        .par_iter()
        .map(|&w| {
            let mut b = bundle.with_drive_frequency(w)?;
            if let Some(a) = antenna {
                b.drive.power_mw = a.corrected_power(bundle.drive.power_mw, w)?;
            }
            simulate_ple(&b, grid, None)
        })
        .collect()
}

/// One PLE spectrum per drive power.
pub fn power_sweep_ple(bundle: &ModelBundle, powers: &[f64], grid: &[f64]) -> Result<Vec<Spectrum>> {
    if let Some(p) = powers.iter().find(|p| !(**p >= 0.0)) {
        return Err(Error::Domain(format!("sweep powers must be >= 0, got {p}")));
    }
    if powers.windows(2).any(|p| p[1] < p[0]) {
        return Err(Error::Domain("sweep powers must be ascending".into()));
    }
    powers
        .par_iter()
        .map(|&p| simulate_ple(&bundle.with_power(p)?, grid, None))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dressed::mixing;
    use crate::model::{validate_model, DriveField, LaserField, LevelDiagram};
    use crate::spectra::linear_grid;

    fn comb_bundle(power: f64) -> ModelBundle {
        validate_model(
            LevelDiagram::new(2900.0, 0.0),
            DriveField {
                omega_d: 470.0,
                power_mw: power,
                k_rabi: 10.7,
                k_stark_x: 11.7,
                k_stark_y: 19.4,
                k_magnetic: 0.0,
            },
            LaserField::new(11.0, 6.3),
            LineshapeParams {
                gamma_star: 15.0,
                sigma_x: 111.0,
                sigma_y: 91.0,
                pl_ratio: 3.1,
            },
        )
        .unwrap()
    }

    fn local_maxima(s: &Spectrum) -> Vec<f64> {
        let y = &s.intensity;
        (1..y.len() - 1)
            .filter(|&i| y[i] > y[i - 1] && y[i] >= y[i + 1])
            .map(|i| s.axis[i])
            .collect()
    }

    #[test]
    fn undriven_two_peaks_at_bare_lines() {
        let b = validate_model(
            LevelDiagram::new(2900.0, 0.0),
            DriveField::undriven(0.0),
            LaserField::new(8.16, 17.4),
            LineshapeParams {
                gamma_star: 15.0,
                sigma_x: 111.0,
                sigma_y: 91.0,
                pl_ratio: 1.6,
            },
        )
        .unwrap();
        let grid = linear_grid(-1000.0, 4000.0, 1.0).unwrap();
        let s = simulate_ple(&b, &grid, None).unwrap();
        assert_eq!(local_maxima(&s), vec![0.0, 2900.0]);
    }

    #[test]
    fn undriven_with_drive_frequency_matches_bare() {
        let mut b = comb_bundle(0.0);
        let grid = linear_grid(-500.0, 3400.0, 2.0).unwrap();
        let with_tone = simulate_ple(&b, &grid, None).unwrap();
        b.drive.omega_d = 0.0;
        let bare = simulate_ple(&b, &grid, None).unwrap();
        for (a, c) in with_tone.intensity.iter().zip(&bare.intensity) {
            assert!((a - c).abs() <= 1e-12 * c.max(1e-300));
        }
    }

    #[test]
    fn resonant_drive_splits_by_rabi() {
        let base = validate_model(
            LevelDiagram::new(2900.0, 0.0),
            DriveField {
                omega_d: 2900.0,
                power_mw: 0.0,
                k_rabi: 15.8,
                k_stark_x: 0.0,
                k_stark_y: 0.0,
                k_magnetic: 0.0,
            },
            LaserField::new(1.0, 1.0),
            LineshapeParams::homogeneous(15.0),
        )
        .unwrap();
        let grid = linear_grid(-400.0, 400.0, 0.25).unwrap();
        for p in [100.0, 200.0, 300.0] {
            let s = simulate_ple(&base.with_power(p).unwrap(), &grid, None).unwrap();
            let m = local_maxima(&s);
            assert_eq!(m.len(), 2, "{m:?}");
            let om = 15.8 * p.sqrt();
            assert!((m[1] - m[0] - om).abs() < 1.0, "{} vs {om}", m[1] - m[0]);
            assert!((m[0] + m[1]).abs() < 0.6);
        }
    }

    #[test]
    fn truncation_is_stable() {
        let b = comb_bundle(1000.0);
        let grid = linear_grid(-3000.0, 6000.0, 5.0).unwrap();
        let model = PleModel::new(&b, None).unwrap();
        let n = model.ladder.as_ref().unwrap().n_max;
        let a = simulate_ple(&b, &grid, Some(n)).unwrap();
        let c = simulate_ple(&b, &grid, Some(n + 3)).unwrap();
        let peak = c.intensity.iter().copied().fold(0.0, f64::max);
        let diff = a
            .intensity
            .iter()
            .zip(&c.intensity)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-6 * peak, "{diff} vs {peak}");
    }

    #[test]
    fn intensity_bounded() {
        let b = comb_bundle(2000.0);
        let model = PleModel::new(&b, None).unwrap();
        let bound = model.intensity_bound();
        for k in 0..2000 {
            let w = -3000.0 + 4.5 * k as f64;
            let v = model.eval(w);
            assert!(v >= 0.0 && v <= bound);
        }
    }

    #[test]
    fn translation_covariance() {
        let b = comb_bundle(600.0);
        let mut shifted = b;
        shifted.levels = b.levels.shifted(123.25);
        let grid = linear_grid(-1000.0, 4000.0, 7.0).unwrap();
        let grid2: Vec<f64> = grid.iter().map(|w| w + 123.25).collect();
        let s1 = simulate_ple(&b, &grid, None).unwrap();
        let s2 = simulate_ple(&shifted, &grid2, None).unwrap();
        for (a, c) in s1.intensity.iter().zip(&s2.intensity) {
            assert!((a - c).abs() <= 1e-9 * a.max(1e-12));
        }
    }

    #[test]
    fn comb_spacing_and_in_pair_separation() {
        let b = comb_bundle(2000.0);
        let model = PleModel::new(&b, None).unwrap();
        let ladder = model.ladder.as_ref().unwrap();
        let frame = mixing(b.drive.rabi_d(), b.levels.detuning(470.0)).unwrap();
        let p0 = ladder.entry(Branch::Plus, 0).unwrap().center;
        let m0 = ladder.entry(Branch::Minus, 0).unwrap().center;
        assert!((p0 - m0 - 470.0 - frame.generalized_rabi()).abs() < 1e-9);
    }

    #[test]
    fn sweep_flat_antenna_is_identity() {
        let b = comb_bundle(500.0);
        let grid = linear_grid(-600.0, 600.0, 4.0).unwrap();
        let flat = AntennaResponse::flat(300.0, 600.0, 27.0).unwrap();
        let ws = [380.0, 420.0, 460.0];
        let a = mw_frequency_sweep(&b, &ws, &grid, None).unwrap();
        let c = mw_frequency_sweep(&b, &ws, &grid, Some(&flat)).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn sweep_resonant_member_matches_single() {
        let b = comb_bundle(300.0);
        let grid = linear_grid(-600.0, 600.0, 4.0).unwrap();
        let sweep = mw_frequency_sweep(&b, &[2900.0], &grid, None).unwrap();
        let single = simulate_ple(&b.with_drive_frequency(2900.0).unwrap(), &grid, None).unwrap();
        assert_eq!(sweep[0], single);
        assert!(mw_frequency_sweep(&b, &[0.0], &grid, None).is_err());
    }

    #[test]
    fn antenna_scales_power() {
        let b = comb_bundle(1000.0);
        let grid = linear_grid(-600.0, 600.0, 4.0).unwrap();
        let a = AntennaResponse::new(vec![400.0, 500.0], vec![30.0, 20.0]).unwrap();
        let s = mw_frequency_sweep(&b, &[500.0], &grid, Some(&a)).unwrap();
        let want = simulate_ple(
            &b.with_drive_frequency(500.0).unwrap().with_power(100.0).unwrap(),
            &grid,
            None,
        )
        .unwrap();
        for (x, y) in s[0].intensity.iter().zip(&want.intensity) {
            assert!((x - y).abs() <= 1e-12 * y.max(1e-300));
        }
    }

    #[test]
    fn power_sweep_checks_order() {
        let b = comb_bundle(0.0);
        let grid = linear_grid(-100.0, 100.0, 10.0).unwrap();
        assert!(power_sweep_ple(&b, &[1.0, 0.5], &grid).is_err());
        assert!(power_sweep_ple(&b, &[-1.0], &grid).is_err());
        assert_eq!(power_sweep_ple(&b, &[0.0, 10.0, 20.0], &grid).unwrap().len(), 3);
    }

    #[test]
    fn overlap_warning_for_close_strong_lines() {
        let b = validate_model(
            LevelDiagram::new(100.0, 0.0),
            DriveField {
                omega_d: 100.0,
                power_mw: 1.0,
                k_rabi: 5.0,
                k_stark_x: 0.0,
                k_stark_y: 0.0,
                k_magnetic: 0.0,
            },
            LaserField::new(40.0, 40.0),
            LineshapeParams::homogeneous(15.0),
        )
        .unwrap();
        let m = PleModel::new(&b, None).unwrap();
        assert!(m.warnings.iter().any(|w| matches!(w, Warning::OverlappingPeaks { .. })));
    }

    #[test]
    fn weights_and_sigma() {
        assert_eq!(branch_pl_weight((1.0, 0.0), 3.1), 1.0);
        assert_eq!(branch_pl_weight((0.0, 1.0), 3.1), 3.1);
        let s = LineshapeParams {
            gamma_star: 15.0,
            sigma_x: 111.0,
            sigma_y: 91.0,
            pl_ratio: 1.0,
        };
        assert_eq!(branch_sigma((1.0, 0.0), &s), 111.0);
        assert_eq!(branch_sigma((0.0, 1.0), &s), 91.0);
    }
}
