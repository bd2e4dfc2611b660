//! Compare the closed-form sideband ladder with direct integration of the
//! driven master equation.

use nvdress::dressed::{sideband_ladder, Branch};
use nvdress::lineshape::rho11;
use nvdress::model::{validate_model, DriveField, LaserField, LevelDiagram, LineshapeParams};
use nvdress::oracle::{steady_state_point, IntegrationConfig};

fn main() -> nvdress::Result<()> {
    let omega_d = 470.0;
    let sqrt_p: f64 = 1.2 * omega_d / 19.4;
    let drive = DriveField {
        omega_d,
        power_mw: sqrt_p * sqrt_p,
        k_rabi: 10.7,
        k_stark_x: 11.7,
        k_stark_y: 19.4,
        k_magnetic: 0.0,
    };
    let bundle = validate_model(
        LevelDiagram::new(2900.0, 0.0),
        drive,
        LaserField::new(0.0, 2.0),
        LineshapeParams::homogeneous(15.0),
    )?;
    let ladder = sideband_ladder(&bundle.levels, &bundle.laser, &bundle.drive, None)?;
    let cfg = IntegrationConfig::default();
    let g = bundle.shape.gamma_star;
    println!("cross-term ratio {:.4}", ladder.validity_ratio);
    println!(" n   center      oracle peak   ladder peak   ratio");
    let base = ladder.entry(Branch::Minus, 0).unwrap();
    let p0 = steady_state_point(&bundle, base.center, &cfg)?.population;
    for n in -2..=2 {
        let e = ladder.entry(Branch::Minus, n).unwrap();
        let p = steady_state_point(&bundle, e.center, &cfg)?.population;
        let want = rho11(e.eff_rabi, 0.0, g) / rho11(base.eff_rabi, 0.0, g);
        println!(
            "{n:>2} {:>10.3} {:>13.6e} {:>13.6e} {:>7.4}",
            e.center,
            p,
            rho11(e.eff_rabi, 0.0, g),
            (p / p0) / want
        );
    }
    Ok(())
}
