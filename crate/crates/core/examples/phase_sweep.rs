//! Integrated contrast below and above the zero-field splitting as a function
//! of the applied phase difference.

use odmr_sim::odmr::{argmax, integrated_contrast, phase_sweep, SweepConfig};

fn main() {
    let cfg = SweepConfig::default();
    let map = phase_sweep(&cfg, 2.3).unwrap();
    let ic = integrated_contrast(&map, cfg.params.d_gs);
    println!("delta_deg  below   above");
    for k in 0..ic.deltas.len() {
        println!("{:8.0}  {:.3}   {:.3}", ic.deltas[k], ic.below[k], ic.above[k]);
    }
    let below = ic.deltas[argmax(&ic.below).unwrap()];
    let above = ic.deltas[argmax(&ic.above).unwrap()];
    println!("maxima at {below} and {above} deg");
}
