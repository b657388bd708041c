//! Steady-state populations of the seven-level model with the drive off and
//! on the |0> -> |-1> resonance.

use odmr_sim::hamiltonian::{build_rwa_hamiltonian, resonance_frequencies, DefectParams, DriveConfig, StaticField};
use odmr_sim::lindblad::{build_liouvillian, jump_operators, photoluminescence, steady_state, Level};

fn main() {
    let params = DefectParams::default();
    let field = StaticField::new(2.3);
    let (f_minus, _) = resonance_frequencies(&params, &field);
    let jumps = jump_operators(&params);
    let on = DriveConfig {
        freq: f_minus,
        delta_deg: 120.0,
        ..DriveConfig::default()
    };
    let mut pl = Vec::new();
    for (label, drive) in [("off", on.off()), ("on", on)] {
        let h = build_rwa_hamiltonian(&params, &field, &drive);
        let rho = steady_state(&build_liouvillian(&h, &jumps).unwrap()).unwrap();
        print!("drive {label:3}:");
        for level in Level::ALL {
            print!(" {}={:.5}", level.label(), rho.population(level));
        }
        println!();
        pl.push(photoluminescence(&rho, &params));
    }
    println!("contrast at {f_minus:.2} MHz: {:.4}", (pl[1] - pl[0]) / pl[0]);
}
