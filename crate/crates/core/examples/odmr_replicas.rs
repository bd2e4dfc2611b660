//! Dressed ODMR: resonance roots with a flat antenna and with a measured
//! frequency response that makes one resonance appear more than once.

use std::path::Path;

use nvdress::io::load_antenna;
use nvdress::model::{DriveField, LevelDiagram};
use nvdress::spectra::{linear_grid, odmr_resonance_roots, simulate_odmr, AntennaResponse, MagneticLevel, OdmrModel};

fn main() -> nvdress::Result<()> {
    let levels = LevelDiagram::new(2900.0, 0.0);
    let model = OdmrModel::with_levels(levels, vec![MagneticLevel::new("E1", -2850.0)], 0.29)?;
    let mut drive = DriveField::undriven(0.0);
    drive.power_mw = 1000.0;
    drive.k_rabi = 15.8;
    let table = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/antenna_ripple.csv");
    let measured = load_antenna(&table)?;
    let flat = AntennaResponse::flat(1000.0, 5000.0, 30.0)?;
    for (name, antenna) in [("flat", &flat), ("measured", &measured)] {
        println!("{name} antenna");
        for r in odmr_resonance_roots(&model, &drive, Some(antenna), 2000.0, 4000.0, 1.0)? {
            println!(
                "  {} {:?}{} at {:.1} MHz, splitting {:.1} MHz",
                r.level,
                r.component,
                r.branch.symbol(),
                r.omega_d,
                r.splitting
            );
        }
    }
    let grid = linear_grid(2600.0, 3200.0, 1.0)?;
    let s = simulate_odmr(&model, &drive, &grid, Some(&measured))?;
    let (i, y) = s
        .intensity
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty grid");
    println!("strongest ODMR response {y:.4e} at {:.0} MHz", s.axis[i]);
    Ok(())
}
