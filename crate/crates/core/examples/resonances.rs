//! Ground-state resonances versus static field, checked against the
//! eigenvalues of the 3x3 spin Hamiltonian.

use odmr_sim::hamiltonian::{build_ground_hamiltonian, resonance_frequencies, DefectParams, StaticField};
use odmr_sim::spin_algebra::eig_hermitian;

fn main() {
    let params = DefectParams::default();
    println!("b0_mt   f_minus    f_plus     eig_gap_err");
    for b0 in [0.0, 0.5, 1.0, 2.3, 5.0, 8.0] {
        let field = StaticField::new(b0);
        let (fm, fp) = resonance_frequencies(&params, &field);
        let mut e = eig_hermitian(&build_ground_hamiltonian(&params, &field)).unwrap().values;
        e.sort_by(f64::total_cmp);
        let err = (e[1] - e[0] - fm).abs().max((e[2] - e[0] - fp).abs());
        println!("{b0:5.2}  {fm:9.3}  {fp:9.3}  {err:.1e}");
    }
}
