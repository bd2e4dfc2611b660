//! Stark-modulation sidebands of an off-resonant drive.

use nvdress::dressed::{sideband_ladder, Branch};
use nvdress::model::{DriveField, LaserField, LevelDiagram};

fn main() -> nvdress::Result<()> {
    let levels = LevelDiagram::new(2900.0, 0.0);
    let drive = DriveField {
        omega_d: 470.0,
        power_mw: 1000.0,
        k_rabi: 10.7,
        k_stark_x: 11.7,
        k_stark_y: 19.4,
        k_magnetic: 0.0,
    };
    let ladder = sideband_ladder(&levels, &LaserField::new(11.0, 6.3), &drive, None)?;
    println!(
        "A+ = {:.1} MHz, A- = {:.1} MHz, n_max = {}, cross-term ratio = {:.3}",
        ladder.a_plus, ladder.a_minus, ladder.n_max, ladder.validity_ratio
    );
    for w in &ladder.warnings {
        println!("warning: {w}");
    }
    for branch in [Branch::Plus, Branch::Minus] {
        for e in ladder.branch(branch).filter(|e| e.n.abs() <= 4) {
            println!(
                "{}{:<3} {:>9.1} MHz  rabi {:>8.4}",
                branch.symbol(),
                e.n,
                e.center,
                e.eff_rabi
            );
        }
    }
    Ok(())
}
