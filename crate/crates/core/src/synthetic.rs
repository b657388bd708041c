//! Synthetic double-Lorentzian spectra with seeded Gaussian noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::fitting::LineShape;
use crate::odmr::Spectrum;

pub const SEED_ENV: &str = "ODMR_SIM_SEED";
pub const DEFAULT_SEED: u64 = 0x0d3a_5eed;

/// Seed from `ODMR_SIM_SEED`, or [`DEFAULT_SEED`] when unset or unparsable.
pub fn seed_from_env() -> u64 {
    std::env::var(SEED_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_SEED)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}

/// Noiseless samples of `shape` on an even grid.
pub fn sample(shape: &LineShape, lo: f64, hi: f64, n: usize) -> Spectrum {
    let freqs = linspace(lo, hi, n);
    let contrasts = freqs.iter().map(|&f| shape.eval(f)).collect();
    Spectrum {
        freqs,
        contrasts,
        delta_deg: 0.0,
        b0: 0.0,
    }
}

/// Adds zero-mean Gaussian noise of standard deviation `sigma`.
pub fn add_noise(spec: &Spectrum, sigma: f64, rng: &mut ChaCha8Rng) -> Spectrum {
    let mut out = spec.clone();
    if sigma > 0.0 {
        let normal = Normal::new(0.0, sigma).expect("sigma is positive and finite");
        for y in out.contrasts.iter_mut() {
            *y += normal.sample(rng);
        }
    }
    out
}

/// Depth of the deeper of the two dips, ignoring the background.
pub fn max_depth(shape: &LineShape) -> f64 {
    shape.peak_minus.peak_value().max(shape.peak_plus.peak_value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitting::LorentzianPeak;

    fn shape() -> LineShape {
        LineShape {
            peak_minus: LorentzianPeak {
                center: 3400.0,
                fwhm: 40.0,
                area: 3.0,
            },
            peak_plus: LorentzianPeak {
                center: 3580.0,
                fwhm: 40.0,
                area: 1.0,
            },
            bg_slope: 0.0,
            bg_offset: 0.0,
            f_ref: 3500.0,
        }
    }

    #[test]
    fn same_seed_same_noise() {
        let s = sample(&shape(), 3250.0, 3750.0, 101);
        let a = add_noise(&s, 1e-3, &mut rng(5));
        let b = add_noise(&s, 1e-3, &mut rng(5));
        let c = add_noise(&s, 1e-3, &mut rng(6));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn grid_endpoints() {
        let g = linspace(1.0, 2.0, 3);
        assert_eq!(g, vec![1.0, 1.5, 2.0]);
        assert_eq!(linspace(1.0, 2.0, 1), vec![1.0]);
        assert!(linspace(1.0, 2.0, 0).is_empty());
    }

    #[test]
    fn depth_of_deeper_dip() {
        let d = max_depth(&shape());
        assert!((d - 2.0 * 3.0 / (std::f64::consts::PI * 40.0)).abs() < 1e-15);
    }
}
