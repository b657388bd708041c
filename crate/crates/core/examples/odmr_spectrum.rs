//! ODMR spectra at 2.3 mT for a linear drive and for the two circular
//! settings that address one transition each.

use odmr_sim::odmr::{frequency_sweep, SweepConfig};

fn main() {
    let cfg = SweepConfig::default();
    for delta in [30.0, 120.0, 300.0] {
        let spec = frequency_sweep(&cfg, delta, 2.3).unwrap();
        let half = spec.freqs.iter().position(|&f| f > cfg.params.d_gs).unwrap();
        let dip = |range: std::ops::Range<usize>| {
            range
                .map(|i| (spec.freqs[i], spec.contrasts[i]))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap()
        };
        let (fl, cl) = dip(0..half);
        let (fu, cu) = dip(half..spec.len());
        println!("delta {delta:5.1} deg: lower dip {cl:.4} at {fl:.1} MHz, upper dip {cu:.4} at {fu:.1} MHz");
    }
}
