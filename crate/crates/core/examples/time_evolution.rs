//! RK4 relaxation from the ground |0> state towards the steady state.

use odmr_sim::hamiltonian::{build_rwa_hamiltonian, DefectParams, DriveConfig, StaticField};
use odmr_sim::lindblad::{build_liouvillian, evolve, jump_operators, steady_state, DensityMatrix, Level};

fn main() {
    let params = DefectParams::default();
    let h = build_rwa_hamiltonian(&params, &StaticField::new(2.3), &DriveConfig::default());
    let jumps = jump_operators(&params);
    let l = build_liouvillian(&h, &jumps).unwrap();
    let target = steady_state(&l).unwrap();
    let dt = 0.05 / l.inf_norm();
    let rho0 = DensityMatrix::pure(Level::G0);
    println!("t_us     trace_distance_to_steady_state");
    for t in [0.01, 0.1, 0.3, 1.0, 3.0, 10.0] {
        let rho = evolve(&h, &jumps, &rho0, t, dt).unwrap();
        println!("{t:6.2}   {:.3e}", rho.trace_distance(&target).unwrap());
    }
}
