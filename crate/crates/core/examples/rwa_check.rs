//! Lab-frame periodic steady state versus the rotating-wave steady state.
//! All frequencies and rates are scaled down 100x so the carrier period can be
//! resolved by direct integration.

use odmr_sim::hamiltonian::{build_lab_hamiltonian, resonance_frequencies, DefectParams, DriveConfig, StaticField};
use odmr_sim::lindblad::{jump_operators, periodic_steady_state, photoluminescence};
use odmr_sim::odmr::ContrastSolver;

fn main() {
    let scale = 0.01;
    let params = DefectParams::default().scaled(scale);
    let field = StaticField::new(2.3 * scale);
    let (f_minus, f_plus) = resonance_frequencies(&params, &field);
    let solver = ContrastSolver::new(&params, &field).unwrap();
    let jumps = jump_operators(&params);
    for (freq, delta_deg) in [(f_minus, 120.0), (f_plus, 300.0), (f_minus, 300.0)] {
        let drive = DriveConfig { freq, delta_deg, ..DriveConfig::default().scaled(scale) };
        let rwa = solver.contrast(&drive).unwrap();
        let orbit =
            periodic_steady_state(|t| build_lab_hamiltonian(&params, &field, &drive, t), &jumps, 1.0 / freq, 200).unwrap();
        let lab = (photoluminescence(&orbit.mean, &params) - solver.pl_off()) / solver.pl_off();
        println!("f = {freq:.4} MHz, delta = {delta_deg:5.1}: rwa {rwa:.5e}, lab {lab:.5e}");
    }
}
