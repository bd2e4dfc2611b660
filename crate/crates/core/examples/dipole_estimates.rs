//! Dipole moments from measured splittings, and the geometry of computed
//! dipole vectors.

use std::path::Path;

use nvdress::estimation::{dipole_from_splitting, field_from_magnetic_rabi, orientation_spread, row_geometry};
use nvdress::io::load_dipoles;

fn main() -> nvdress::Result<()> {
    let est = dipole_from_splitting(557.0, 30.0)?;
    println!("557 MHz at 30 kV/m -> {:.3} D", est.mu);
    println!("Omega_m = 9.1 MHz -> B_perp = {:.1} uT", field_from_magnetic_rabi(9.1)?);
    let spread = orientation_spread(557.0, 25.0, 20.0, 25.0, 20000, 7)?;
    println!(
        "random azimuth: {:.2} D (16-84%: {:.2} - {:.2})",
        spread.mu_median, spread.mu_low, spread.mu_high
    );
    let rows = load_dipoles(&Path::new(env!("CARGO_MANIFEST_DIR")).join("data/dipoles.csv"))?;
    for row in &rows {
        let g = row_geometry(row)?;
        println!(
            "strain {:>4}: |dp_y| {:.3}  dp_par {:.3}  dp_perp {:.3}  pair angle {:.1}  |mu| {:.3} at {:.1} deg",
            g.strain,
            g.delta_p_y.magnitude,
            g.delta_p_y.parallel.abs(),
            g.delta_p_y.perpendicular,
            g.pair_angle,
            g.transition.magnitude,
            g.transition.angle_to_axis.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
