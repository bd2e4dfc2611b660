//! Power-broadened Lorentzian and its Voigt convolution with a Gaussian.

use nvdress::estimation::{fit_peak_xy, PeakModel};
use nvdress::lineshape::{lorentzian_fwhm, relative_population, Voigt};

fn main() -> nvdress::Result<()> {
    let g = 15.0;
    let x: Vec<f64> = (-1500..=1500).map(|i| i as f64 * 0.1).collect();
    for w in [0.0, g, 3.0 * g] {
        let y: Vec<f64> = x.iter().map(|d| relative_population(w, *d, g)).collect();
        let fit = fit_peak_xy(&x, &y, PeakModel::Lorentzian)?;
        println!(
            "W = {w:>4.0}  fitted FWHM {:>8.4}  closed form {:>8.4}",
            fit.width.fwhm(),
            lorentzian_fwhm(w, g)
        );
    }
    let v = Voigt::new(g, g, 20.0);
    let peak = v.eval(0.0);
    for u in [0.0, 10.0, 20.0, 40.0, 80.0] {
        println!("voigt({u:>4}) / voigt(0) = {:.5}", v.eval(u) / peak);
    }
    Ok(())
}
