//! Resonant dressing suppresses the first-order response of the optical
//! lines to transverse electric fields.

use nvdress::model::LevelDiagram;
use nvdress::spectra::{bright_y_position, fit_power_law, ProtectionEnsemble};

fn main() -> nvdress::Result<()> {
    let levels = LevelDiagram::new(2900.0, 0.0);
    let eps: Vec<f64> = (0..=12).map(|k| 10f64.powf(k as f64 / 12.0 * 50f64.log10())).collect();
    for (label, rabi_d) in [("undriven", 0.0), ("driven", 557.0)] {
        let zero = bright_y_position(&levels, rabi_d, 15.0, 0.0)?;
        let shift: Vec<f64> = eps
            .iter()
            .map(|e| Ok((bright_y_position(&levels, rabi_d, 15.0, *e)? - zero).abs()))
            .collect::<nvdress::Result<_>>()?;
        let (p, _) = fit_power_law(&eps, &shift)?;
        println!("{label:<9} shift exponent {p:.3}");
    }
    let mut ens = ProtectionEnsemble::new(levels, 557.0, 15.0, 4000, 11);
    ens.calibrate_longitudinal(98.0)?;
    let out = ens.run()?;
    println!(
        "ensemble: undriven {:.1} MHz, driven {:.1} MHz, narrowing x{:.2}",
        out.undriven_fwhm,
        out.driven_fwhm,
        out.narrowing()
    );
    Ok(())
}
