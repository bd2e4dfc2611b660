//! Recover the drive coupling slope from the Autler–Townes splitting of
//! resonantly dressed PLE spectra.

use nvdress::estimation::{fit_peak, fit_splitting_vs_power, PeakModel};
use nvdress::model::{validate_model, DriveField, LaserField, LevelDiagram, LineshapeParams};
use nvdress::spectra::{linear_grid, power_sweep_ple};

fn main() -> nvdress::Result<()> {
    let levels = LevelDiagram::new(2900.0, 0.0);
    let mut drive = DriveField::undriven(2900.0);
    drive.k_rabi = 15.8;
    let bundle = validate_model(
        levels,
        drive,
        LaserField::new(5.0, 5.0),
        LineshapeParams::homogeneous(15.0),
    )?;
    let powers = [25.0, 50.0, 100.0, 200.0, 400.0, 800.0];
    let grid = linear_grid(-400.0, 400.0, 0.5)?;
    let spectra = power_sweep_ple(&bundle, &powers, &grid)?;
    let mut samples = Vec::new();
    for (p, s) in powers.iter().zip(&spectra) {
        let lo = fit_peak(s, (-400.0, 0.0), PeakModel::Lorentzian)?;
        let hi = fit_peak(s, (0.0, 400.0), PeakModel::Lorentzian)?;
        let split = hi.center - lo.center;
        println!("P = {p:>5} mW  splitting {split:>8.3} MHz");
        samples.push((*p, split));
    }
    let fit = fit_splitting_vs_power(&samples)?;
    println!("slope {:.4} ± {:.4} MHz/√mW", fit.slope, fit.stderr);
    Ok(())
}
