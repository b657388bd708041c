//! Double-Lorentzian fit of a noisy synthetic spectrum. Set ODMR_SIM_SEED to
//! change the noise realization.

use odmr_sim::fitting::{selectivity, subtract_linear_background, Fitter, LineShape, LorentzianPeak, Transition};
use odmr_sim::synthetic::{add_noise, max_depth, rng, sample, seed_from_env};

fn main() {
    let truth = LineShape {
        peak_minus: LorentzianPeak { center: 3398.5, fwhm: 40.0, area: 3.0 },
        peak_plus: LorentzianPeak { center: 3581.5, fwhm: 45.0, area: 1.0 },
        bg_slope: 2e-6,
        bg_offset: -0.001,
        f_ref: 3500.0,
    };
    let seed = seed_from_env();
    let clean = sample(&truth, 3250.0, 3750.0, 201);
    let noisy = add_noise(&clean, 0.01 * max_depth(&truth), &mut rng(seed));

    let flat = subtract_linear_background(&noisy, 0.1).unwrap();
    let guess = LineShape {
        peak_minus: LorentzianPeak { center: 3400.0, fwhm: 30.0, area: 1.0 },
        peak_plus: LorentzianPeak { center: 3580.0, fwhm: 30.0, area: 1.0 },
        bg_slope: 0.0,
        bg_offset: 0.0,
        f_ref: 3500.0,
    };
    let fit = Fitter::default().fit(&flat, &guess).unwrap();
    let sd = |i: usize| fit.covariance[i][i].sqrt();
    println!("seed {seed}, {} iterations, rms residual {:.2e}", fit.iterations, fit.rms_residual);
    println!("minus: center {:.2} +- {:.2}, fwhm {:.2}, area {:.3}", fit.peak_minus.center, sd(0), fit.peak_minus.fwhm, fit.peak_minus.area);
    println!("plus:  center {:.2} +- {:.2}, fwhm {:.2}, area {:.3}", fit.peak_plus.center, sd(3), fit.peak_plus.fwhm, fit.peak_plus.area);
    let s = selectivity(&fit, Transition::Minus).unwrap();
    println!("selectivity |0>->|-1>: {:.3} +- {:.3} (true 0.75)", s.value, s.sigma);
}
