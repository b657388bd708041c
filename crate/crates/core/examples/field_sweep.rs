//! Maximum selectivity of each transition versus static field.

use odmr_sim::fitting::Fitter;
use odmr_sim::odmr::{field_sweep, phase_grid, SweepConfig};

fn main() {
    let cfg = SweepConfig {
        delta_list: phase_grid(30.0),
        b_list: vec![0.0, 0.5, 1.0, 2.3, 5.0, 8.0],
        ..SweepConfig::default()
    };
    let curve = field_sweep(&cfg, &Fitter::default()).unwrap();
    println!("b0_mt  sel_minus  at_deg  sel_plus  at_deg  separation_mhz");
    for p in &curve.points {
        match &p.result {
            Ok(m) => println!(
                "{:5.2}  {:.3}  {:6.0}  {:.3}  {:6.0}  {:8.2}{}",
                m.b0,
                m.sel_minus.value,
                m.delta_star_minus,
                m.sel_plus.value,
                m.delta_star_plus,
                m.peak_separation,
                if m.degenerate { "  (degenerate)" } else { "" }
            ),
            Err(e) => println!("{:5.2}  fit failed: {e}", p.b0),
        }
    }
}
