//! Hyperfine stick spectrum from three nearest nitrogen nuclei.

use odmr_sim::hamiltonian::{hyperfine_stick_spectrum, DefectParams, HyperfineParams, StaticField};

fn main() {
    let lines = hyperfine_stick_spectrum(&DefectParams::default(), &StaticField::new(2.3), &HyperfineParams::default())
        .unwrap();
    for l in &lines {
        let m = l.nuclear_m.map_or("-".to_string(), |m| m.to_string());
        println!("{:5}  {:9.2} MHz  weight {:2}  M = {m}", l.branch.label(), l.frequency, l.weight);
    }
}
