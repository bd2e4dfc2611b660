//! Shared-parameter fit of sideband amplitudes tracked across drive powers.
//!
//! Pass a path to also write the synthetic amplitude table.

use std::fmt::Write as _;

use nvdress::dressed::Branch;
use nvdress::estimation::sidebands::PARAM_NAMES;
use nvdress::estimation::{fit_sideband_amplitudes, synthesize_amplitudes, SidebandParams};
use nvdress::model::{validate_model, DriveField, LaserField, LevelDiagram, LineshapeParams};

fn main() -> nvdress::Result<()> {
    let mut drive = DriveField::undriven(470.0);
    drive.k_rabi = 10.7;
    let shape = LineshapeParams {
        gamma_star: 15.0,
        sigma_x: 20.0,
        sigma_y: 20.0,
        pl_ratio: 1.0,
    };
    let template = validate_model(LevelDiagram::new(2900.0, 0.0), drive, LaserField::new(1.0, 1.0), shape)?;
    let truth = SidebandParams {
        k_stark_x: 11.7,
        k_stark_y: 19.4,
        rabi_x: 11.0,
        rabi_y: 6.3,
        pl_ratio: 3.1,
    };
    let powers = [100.0, 300.0, 600.0, 1000.0, 1500.0, 2000.0];
    let tracked: Vec<(Branch, i64)> = [Branch::Plus, Branch::Minus]
        .into_iter()
        .flat_map(|b| (-3..=3).map(move |n| (b, n)))
        .collect();
    let obs = synthesize_amplitudes(&template, &truth, &powers, &tracked)?;
    if let Some(path) = std::env::args().nth(1) {
        let mut text = String::from("power_mw,branch,n,amplitude\n");
        for o in &obs {
            let _ = writeln!(text, "{},{},{},{:.8e}", o.power_mw, o.branch.symbol(), o.n, o.amplitude);
        }
        std::fs::write(&path, text)?;
        println!("wrote {} observations to {path}", obs.len());
    }
    let start = SidebandParams {
        k_stark_x: 10.0,
        k_stark_y: 17.0,
        rabi_x: 9.5,
        rabi_y: 7.0,
        pl_ratio: 2.7,
    };
    let fit = fit_sideband_amplitudes(&template, &obs, Some(start))?;
    println!("{} iterations, cost {:.3e}", fit.iterations, fit.cost);
    for ((name, got), want) in PARAM_NAMES.iter().zip(fit.params.to_vec()).zip(truth.to_vec()) {
        println!("{name:<10} {got:>9.4}  (true {want})");
    }
    Ok(())
}
