//! Linear background subtraction, double-Lorentzian least squares, and
//! area-ratio selectivity.
//!
//! Contrast dips are modeled as
//! `y(f) = offset + slope * (f - f_ref) - L(f; minus) - L(f; plus)` with
//! `L(f) = area * (g / pi) / ((f - center)^2 + g^2)` and `g = fwhm / 2`.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::hamiltonian::{resonance_frequencies, DefectParams, StaticField};
use crate::odmr::Spectrum;
use crate::spin_algebra::{eig_hermitian, ComplexMatrix};

pub const N_PARAMS: usize = 8;
pub const MIN_SAMPLES: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("no convergence after {iterations} Levenberg-Marquardt iterations")]
    FitFailed { iterations: usize },
    #[error("spectrum is flat (total variation {variation:e})")]
    FlatSpectrum { variation: f64 },
    #[error("need at least {MIN_SAMPLES} samples, got {got}")]
    TooFewSamples { got: usize },
    #[error("wing sample at {frequency} MHz deviates by {sigmas:.1} sigma from the background line")]
    WingsContainPeak { frequency: f64, sigmas: f64 },
    #[error("wing fraction {0} outside (0, 0.4]")]
    BadWingFraction(f64),
    #[error("total fitted area {0:e} is zero")]
    ZeroTotalArea(f64),
    #[error("non-finite value in fit input")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzianPeak {
    /// MHz.
    pub center: f64,
    /// MHz, > 0.
    pub fwhm: f64,
    /// Integrated dip magnitude, contrast x MHz.
    pub area: f64,
}

impl LorentzianPeak {
    pub fn half_width(&self) -> f64 {
        0.5 * self.fwhm
    }

    /// Maximum depth, `2 area / (pi fwhm)`.
    pub fn peak_value(&self) -> f64 {
        2.0 * self.area / (PI * self.fwhm)
    }

    pub fn eval(&self, f: f64) -> f64 {
        let g = self.half_width();
        let d = f - self.center;
        self.area * (g / PI) / (d * d + g * g)
    }
}

/// The eight model parameters with the background referenced to `f_ref`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineShape {
    pub peak_minus: LorentzianPeak,
    pub peak_plus: LorentzianPeak,
    /// 1/MHz.
    pub bg_slope: f64,
    /// Background at `f_ref`.
    pub bg_offset: f64,
    /// MHz.
    pub f_ref: f64,
}

impl LineShape {
    pub fn eval(&self, f: f64) -> f64 {
        self.bg_offset + self.bg_slope * (f - self.f_ref)
            - self.peak_minus.eval(f)
            - self.peak_plus.eval(f)
    }

    /// `[c-, w-, a-, c+, w+, a+, slope, offset]`.
    pub fn to_array(&self) -> [f64; N_PARAMS] {
        let (m, p) = (&self.peak_minus, &self.peak_plus);
        [
            m.center,
            m.fwhm,
            m.area,
            p.center,
            p.fwhm,
            p.area,
            self.bg_slope,
            self.bg_offset,
        ]
    }

    pub fn from_array(x: &[f64; N_PARAMS], f_ref: f64) -> Self {
        Self {
            peak_minus: LorentzianPeak {
                center: x[0],
                fwhm: x[1],
                area: x[2],
            },
            peak_plus: LorentzianPeak {
                center: x[3],
                fwhm: x[4],
                area: x[5],
            },
            bg_slope: x[6],
            bg_offset: x[7],
            f_ref,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoubleLorentzianFit {
    pub peak_minus: LorentzianPeak,
    pub peak_plus: LorentzianPeak,
    pub bg_slope: f64,
    pub bg_offset: f64,
    pub f_ref: f64,
    pub rms_residual: f64,
    /// Parameter order as in [`LineShape::to_array`].
    pub covariance: [[f64; N_PARAMS]; N_PARAMS],
    pub iterations: usize,
    /// Cost after each accepted step, starting with the initial cost.
    pub cost_history: Vec<f64>,
    /// Center distance below half the mean fwhm.
    pub poorly_separated: bool,
}

impl DoubleLorentzianFit {
    pub fn line_shape(&self) -> LineShape {
        LineShape {
            peak_minus: self.peak_minus,
            peak_plus: self.peak_plus,
            bg_slope: self.bg_slope,
            bg_offset: self.bg_offset,
            f_ref: self.f_ref,
        }
    }

    pub fn separation(&self) -> f64 {
        self.peak_plus.center - self.peak_minus.center
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transition {
    Minus,
    Plus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selectivity {
    pub value: f64,
    pub sigma: f64,
}

/// Levenberg-Marquardt settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fitter {
    pub max_iterations: usize,
    pub lambda0: f64,
    pub rel_cost_tol: f64,
    pub grad_tol: f64,
}

impl Default for Fitter {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            lambda0: 1e-3,
            rel_cost_tol: 1e-10,
            grad_tol: 1e-8,
        }
    }
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Fits a line to the outer `wing_fraction` of samples on each side and
/// subtracts it everywhere.
///
/// The wing scatter is estimated robustly (median absolute deviation); a wing
/// sample more than 5 sigma off the line means a resonance reaches the wings.
pub fn subtract_linear_background(spec: &Spectrum, wing_fraction: f64) -> Result<Spectrum, FitError> {
    if !(wing_fraction > 0.0 && wing_fraction <= 0.4) {
        return Err(FitError::BadWingFraction(wing_fraction));
    }
    let n = spec.len();
    let n_wing = ((wing_fraction * n as f64).round() as usize).max(2);
    if 2 * n_wing > n {
        return Err(FitError::TooFewSamples { got: n });
    }
    let idx: Vec<usize> = (0..n_wing).chain(n - n_wing..n).collect();
    let xs: Vec<f64> = idx.iter().map(|&i| spec.freqs[i]).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| spec.contrasts[i]).collect();
    let (slope, intercept) = linear_fit(&xs, &ys);
    let resid: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| y - (slope * x + intercept)).collect();
    let scale = spec.contrasts.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    let sigma = (1.4826 * median(resid.iter().map(|r| r.abs()).collect()))
        .max(1e-9 * scale)
        .max(1e-300);
    for (k, r) in resid.iter().enumerate() {
        let sigmas = r.abs() / sigma;
        if sigmas > 5.0 {
            return Err(FitError::WingsContainPeak {
                frequency: xs[k],
                sigmas,
            });
        }
    }
    let contrasts = spec
        .freqs
        .iter()
        .zip(&spec.contrasts)
        .map(|(f, y)| y - (slope * f + intercept))
        .collect();
    Ok(Spectrum {
        freqs: spec.freqs.clone(),
        contrasts,
        delta_deg: spec.delta_deg,
        b0: spec.b0,
    })
}

/// Seeds centers at the model resonances, widths at `2 gamma_phi / 2pi`, and
/// areas from the dip depth found near each center. A dip that is not
/// visible gets 10% of the other area.
pub fn initial_guess(spec: &Spectrum, params: &DefectParams, field: &StaticField) -> LineShape {
    let (f_minus, f_plus) = resonance_frequencies(params, field);
    let fwhm = (2.0 * params.gamma_phi / (2.0 * PI)).max(1e-3);
    let n = spec.len();
    let f_ref = if n > 0 {
        0.5 * (spec.freqs[0] + spec.freqs[n - 1])
    } else {
        0.0
    };
    // most samples sit on the baseline; the ends may not if a dip is cut off
    let bg_slope = 0.0;
    let bg_offset = if n > 0 { median(spec.contrasts.clone()) } else { 0.0 };
    let depth_near = |center: f64| -> f64 {
        let window = 0.5 * (f_plus - f_minus).max(fwhm);
        spec.freqs
            .iter()
            .zip(&spec.contrasts)
            .filter(|(f, _)| (**f - center).abs() <= window)
            .map(|(f, y)| bg_offset + bg_slope * (f - f_ref) - y)
            .fold(0.0f64, f64::max)
    };
    let to_area = |depth: f64| depth * PI * fwhm / 2.0;
    let mut a_minus = to_area(depth_near(f_minus));
    let mut a_plus = to_area(depth_near(f_plus));
    let visible = 1e-6 * a_minus.max(a_plus);
    if a_plus <= visible {
        a_plus = 0.1 * a_minus;
    } else if a_minus <= visible {
        a_minus = 0.1 * a_plus;
    }
    LineShape {
        peak_minus: LorentzianPeak {
            center: f_minus,
            fwhm,
            area: a_minus,
        },
        peak_plus: LorentzianPeak {
            center: f_plus,
            fwhm,
            area: a_plus,
        },
        bg_slope,
        bg_offset,
        f_ref,
    }
}

/// Internal coordinates: `u = (f - mid) / sf`, `v = y / sy`.
struct Scaling {
    mid: f64,
    sf: f64,
    sy: f64,
}

impl Scaling {
    /// Multipliers taking scaled parameters to physical ones.
    fn factors(&self) -> [f64; N_PARAMS] {
        let (sf, sy) = (self.sf, self.sy);
        [sf, sf, sy * sf, sf, sf, sy * sf, sy / sf, sy]
    }

    fn to_scaled(&self, shape: &LineShape) -> [f64; N_PARAMS] {
        // re-reference the background to the scaling midpoint
        let offset = shape.bg_offset + shape.bg_slope * (self.mid - shape.f_ref);
        let mut x = shape.to_array();
        x[7] = offset;
        x[0] -= self.mid;
        x[3] -= self.mid;
        let k = self.factors();
        let mut out = [0.0; N_PARAMS];
        for i in 0..N_PARAMS {
            out[i] = x[i] / k[i];
        }
        out
    }

    fn to_physical(&self, x: &[f64; N_PARAMS]) -> [f64; N_PARAMS] {
        let k = self.factors();
        let mut out = [0.0; N_PARAMS];
        for i in 0..N_PARAMS {
            out[i] = x[i] * k[i];
        }
        out[0] += self.mid;
        out[3] += self.mid;
        out
    }
}

/// Residuals `model - data` and the Jacobian in scaled coordinates.
fn residuals_and_jacobian(x: &[f64; N_PARAMS], us: &[f64], vs: &[f64]) -> (Vec<f64>, Vec<[f64; N_PARAMS]>) {
    let mut r = Vec::with_capacity(us.len());
    let mut jac = Vec::with_capacity(us.len());
    for (&u, &v) in us.iter().zip(vs) {
        let mut row = [0.0; N_PARAMS];
        let mut model = x[7] + x[6] * u;
        row[6] = u;
        row[7] = 1.0;
        for p in 0..2 {
            let (c, w, a) = (x[3 * p], x[3 * p + 1], x[3 * p + 2]);
            let g = 0.5 * w;
            let d = u - c;
            let den = d * d + g * g;
            let shape = g / (PI * den);
            model -= a * shape;
            // derivatives of -a * g / (pi (d^2 + g^2))
            row[3 * p] = -a * g * 2.0 * d / (PI * den * den);
            row[3 * p + 1] = -a * 0.5 * (d * d - g * g) / (PI * den * den);
            row[3 * p + 2] = -shape;
        }
        r.push(model - v);
        jac.push(row);
    }
    (r, jac)
}

fn project(x: &mut [f64; N_PARAMS]) {
    for p in 0..2 {
        x[3 * p + 1] = x[3 * p + 1].abs().max(1e-9);
        x[3 * p + 2] = x[3 * p + 2].max(0.0);
    }
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
fn solve(mut a: [[f64; N_PARAMS]; N_PARAMS], mut b: [f64; N_PARAMS]) -> Option<[f64; N_PARAMS]> {
    for k in 0..N_PARAMS {
        let piv = (k..N_PARAMS).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[piv][k].abs() < 1e-300 || !a[piv][k].is_finite() {
            return None;
        }
        a.swap(k, piv);
        b.swap(k, piv);
        for i in k + 1..N_PARAMS {
            let f = a[i][k] / a[k][k];
            for j in k..N_PARAMS {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = [0.0; N_PARAMS];
    for k in (0..N_PARAMS).rev() {
        let s: f64 = (k + 1..N_PARAMS).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    Some(x)
}

/// Moore-Penrose inverse of a symmetric PSD matrix via its eigenbasis.
fn symmetric_pinv(a: &[[f64; N_PARAMS]; N_PARAMS]) -> [[f64; N_PARAMS]; N_PARAMS] {
    let rows: Vec<Vec<Complex64>> = a
        .iter()
        .map(|r| r.iter().map(|&v| Complex64::new(v, 0.0)).collect())
        .collect();
    let mut out = [[0.0; N_PARAMS]; N_PARAMS];
    let Ok(eig) = eig_hermitian(&ComplexMatrix::from_rows(&rows).hermitian_part()) else {
        return [[f64::NAN; N_PARAMS]; N_PARAMS];
    };
    let top = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for k in 0..N_PARAMS {
        let lam = eig.values[k];
        if lam <= 1e-12 * top {
            continue;
        }
        let v = eig.vector(k);
        for i in 0..N_PARAMS {
            for j in 0..N_PARAMS {
                out[i][j] += (v[i] * v[j].conj()).re / lam;
            }
        }
    }
    for i in 0..N_PARAMS {
        for j in 0..i {
            let s = 0.5 * (out[i][j] + out[j][i]);
            out[i][j] = s;
            out[j][i] = s;
        }
    }
    out
}

fn normal_equations(r: &[f64], jac: &[[f64; N_PARAMS]]) -> ([[f64; N_PARAMS]; N_PARAMS], [f64; N_PARAMS]) {
    let mut jtj = [[0.0; N_PARAMS]; N_PARAMS];
    let mut jtr = [0.0; N_PARAMS];
    for (row, &ri) in jac.iter().zip(r) {
        for i in 0..N_PARAMS {
            jtr[i] += row[i] * ri;
            for j in 0..=i {
                jtj[i][j] += row[i] * row[j];
            }
        }
    }
    for i in 0..N_PARAMS {
        for j in 0..i {
            jtj[j][i] = jtj[i][j];
        }
    }
    (jtj, jtr)
}

fn cost_of(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|v| v * v).sum::<f64>()
}

impl Fitter {
    pub fn fit(&self, spec: &Spectrum, guess: &LineShape) -> Result<DoubleLorentzianFit, FitError> {
        fit_double_lorentzian_with(spec, guess, self)
    }
}

pub fn fit_double_lorentzian(spec: &Spectrum, guess: &LineShape) -> Result<DoubleLorentzianFit, FitError> {
    fit_double_lorentzian_with(spec, guess, &Fitter::default())
}

fn fit_double_lorentzian_with(
    spec: &Spectrum,
    guess: &LineShape,
    cfg: &Fitter,
) -> Result<DoubleLorentzianFit, FitError> {
    let n = spec.len();
    if n < MIN_SAMPLES {
        return Err(FitError::TooFewSamples { got: n });
    }
    if spec.freqs.iter().chain(&spec.contrasts).any(|v| !v.is_finite())
        || guess.to_array().iter().any(|v| !v.is_finite())
    {
        return Err(FitError::NonFinite);
    }
    let variation: f64 = spec.contrasts.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    if variation < 1e-12 {
        return Err(FitError::FlatSpectrum { variation });
    }
    let (lo, hi) = (spec.freqs[0], spec.freqs[n - 1]);
    let scaling = Scaling {
        mid: 0.5 * (lo + hi),
        sf: 0.5 * (hi - lo),
        sy: spec.contrasts.iter().fold(0.0f64, |m, y| m.max(y.abs())),
    };
    let us: Vec<f64> = spec.freqs.iter().map(|f| (f - scaling.mid) / scaling.sf).collect();
    let vs: Vec<f64> = spec.contrasts.iter().map(|y| y / scaling.sy).collect();

    let mut x = scaling.to_scaled(guess);
    project(&mut x);
    let (mut r, mut jac) = residuals_and_jacobian(&x, &us, &vs);
    let mut cost = cost_of(&r);
    let mut history = vec![cost];
    let mut lambda = cfg.lambda0;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iterations {
        iterations += 1;
        let (jtj, jtr) = normal_equations(&r, &jac);
        let grad = jtr.iter().map(|g| g * g).sum::<f64>().sqrt();
        if grad < cfg.grad_tol || cost < 1e-30 {
            converged = true;
            break;
        }
        let mut accepted = false;
        while lambda < 1e20 {
            let mut a = jtj;
            for i in 0..N_PARAMS {
                a[i][i] += lambda * jtj[i][i].max(1e-12);
            }
            let neg: [f64; N_PARAMS] = jtr.map(|g| -g);
            let Some(step) = solve(a, neg) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial = x;
            for i in 0..N_PARAMS {
                trial[i] += step[i];
            }
            project(&mut trial);
            let (r_new, jac_new) = residuals_and_jacobian(&trial, &us, &vs);
            let c_new = cost_of(&r_new);
            if c_new.is_finite() && c_new < cost {
                let rel = (cost - c_new) / cost;
                let small_step = step
                    .iter()
                    .zip(&x)
                    .all(|(s, xi)| s.abs() <= 1e-14 * (1.0 + xi.abs()));
                x = trial;
                r = r_new;
                jac = jac_new;
                cost = c_new;
                history.push(cost);
                lambda = (lambda / 10.0).max(1e-15);
                accepted = true;
                if rel < cfg.rel_cost_tol || small_step {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no damped step lowers the cost: at the floating-point floor
            converged = true;
        }
        if converged {
            break;
        }
    }
    if !converged {
        return Err(FitError::FitFailed { iterations });
    }

    let (jtj, _) = normal_equations(&r, &jac);
    let dof = (n - N_PARAMS).max(1) as f64;
    let s2 = 2.0 * cost / dof;
    let inv = symmetric_pinv(&jtj);
    let k = scaling.factors();
    let mut covariance = [[0.0; N_PARAMS]; N_PARAMS];
    for i in 0..N_PARAMS {
        for j in 0..N_PARAMS {
            covariance[i][j] = s2 * inv[i][j] * k[i] * k[j];
        }
    }
    let phys = scaling.to_physical(&x);
    let mut shape = LineShape::from_array(&phys, scaling.mid);
    if shape.peak_minus.center > shape.peak_plus.center {
        std::mem::swap(&mut shape.peak_minus, &mut shape.peak_plus);
        let perm = [3, 4, 5, 0, 1, 2, 6, 7];
        let old = covariance;
        for i in 0..N_PARAMS {
            for j in 0..N_PARAMS {
                covariance[i][j] = old[perm[i]][perm[j]];
            }
        }
    }
    let rms_residual = (2.0 * cost / n as f64).sqrt() * scaling.sy;
    let mean_fwhm = 0.5 * (shape.peak_minus.fwhm + shape.peak_plus.fwhm);
    let poorly_separated = shape.peak_plus.center - shape.peak_minus.center < 0.5 * mean_fwhm;
    let scale_cost = scaling.sy * scaling.sy;
    Ok(DoubleLorentzianFit {
        peak_minus: shape.peak_minus,
        peak_plus: shape.peak_plus,
        bg_slope: shape.bg_slope,
        bg_offset: shape.bg_offset,
        f_ref: shape.f_ref,
        rms_residual,
        covariance,
        iterations,
        cost_history: history.into_iter().map(|c| c * scale_cost).collect(),
        poorly_separated,
    })
}

/// `area_which / (area_minus + area_plus)` with first-order uncertainty.
pub fn selectivity(fit: &DoubleLorentzianFit, which: Transition) -> Result<Selectivity, FitError> {
    let (am, ap) = (fit.peak_minus.area, fit.peak_plus.area);
    let total = am + ap;
    if total.abs() < 1e-12 {
        return Err(FitError::ZeroTotalArea(total));
    }
    let value = match which {
        Transition::Minus => am / total,
        Transition::Plus => 1.0 - am / total,
    };
    // d(am/T)/d am = ap/T^2, d(am/T)/d ap = -am/T^2; the complement flips sign
    let (g2, g5) = (ap / (total * total), -am / (total * total));
    let c = &fit.covariance;
    let var = g2 * g2 * c[2][2] + 2.0 * g2 * g5 * c[2][5] + g5 * g5 * c[5][5];
    Ok(Selectivity {
        value,
        sigma: var.max(0.0).sqrt(),
    })
}
