//! Dressed-state energies and the four optical resonances as the drive is
//! tuned across the E_x–E_y splitting.

use nvdress::dressed::{mixing, optical_resonances};
use nvdress::model::{coupling_from_power, LevelDiagram};

fn main() -> nvdress::Result<()> {
    let levels = LevelDiagram::new(2900.0, 0.0);
    let rabi_d = coupling_from_power(15.8, 1000.0)?;
    println!("Omega_d = {rabi_d:.1} MHz");
    println!("omega_d    theta    split     +y        -y        +x        -x");
    for omega_d in (2500..=3300).step_by(100) {
        let w = omega_d as f64;
        let f = mixing(rabi_d, levels.detuning(w))?;
        let r = optical_resonances(&levels, rabi_d, w)?;
        println!(
            "{w:>7.0} {:>8.3} {:>8.1} {:>9.1} {:>9.1} {:>9.1} {:>9.1}",
            f.theta,
            f.generalized_rabi(),
            r.plus_y,
            r.minus_y,
            r.plus_x,
            r.minus_x
        );
    }
    Ok(())
}
