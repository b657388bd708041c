//! CW-ODMR sweeps over drive frequency, microwave phase and static field.
//!
//! Grid points are independent steady-state solves; sweeps fan them out with
//! rayon on whatever pool is current and collect in grid order, so results do
//! not depend on the thread count.

use rayon::prelude::*;
use thiserror::Error;

use crate::fitting::{
    fit_double_lorentzian, initial_guess, selectivity, FitError, Fitter, Selectivity, Transition,
};
use crate::hamiltonian::{build_rwa_hamiltonian, DefectParams, DriveConfig, ParamError, StaticField};
use crate::lindblad::{
    build_liouvillian, jump_operators, photoluminescence, steady_state, JumpOperator, LindbladError,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdmrError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Solver(#[from] LindbladError),
    #[error("fit failed at delta = {delta_deg} deg: {source}")]
    Fit { delta_deg: f64, source: FitError },
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(&'static str),
    #[error("invalid sweep: {0}")]
    InvalidSweep(&'static str),
}

/// Ordered contrast samples for one `(delta, b0)` setting.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// MHz, strictly ascending.
    pub freqs: Vec<f64>,
    /// Negative at dips.
    pub contrasts: Vec<f64>,
    pub delta_deg: f64,
    pub b0: f64,
}

impl Spectrum {
    pub fn new(freqs: Vec<f64>, contrasts: Vec<f64>, delta_deg: f64, b0: f64) -> Result<Self, OdmrError> {
        if freqs.len() != contrasts.len() {
            return Err(OdmrError::InvalidSpectrum("frequency and contrast lengths differ"));
        }
        if freqs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(OdmrError::InvalidSpectrum("frequencies must be strictly ascending"));
        }
        Ok(Self {
            freqs,
            contrasts,
            delta_deg,
            b0,
        })
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// Drops samples inside any of the closed `[lo, hi]` windows.
    pub fn masked(&self, windows: &[(f64, f64)]) -> Spectrum {
        let keep = |f: f64| !windows.iter().any(|&(lo, hi)| f >= lo && f <= hi);
        let (freqs, contrasts) = self
            .freqs
            .iter()
            .zip(&self.contrasts)
            .filter(|(f, _)| keep(**f))
            .map(|(f, c)| (*f, *c))
            .unzip();
        Spectrum {
            freqs,
            contrasts,
            delta_deg: self.delta_deg,
            b0: self.b0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// MHz.
    pub f_start: f64,
    pub f_stop: f64,
    pub n_freq: usize,
    /// Applied phases, degrees in `[0, 360)`.
    pub delta_list: Vec<f64>,
    /// mT.
    pub b_list: Vec<f64>,
    /// Template; `freq` and `delta_deg` are overwritten per grid point.
    pub drive: DriveConfig,
    pub params: DefectParams,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            f_start: 3250.0,
            f_stop: 3750.0,
            n_freq: 201,
            delta_list: phase_grid(10.0),
            b_list: vec![0.5, 1.0, 2.3, 5.0, 8.0],
            drive: DriveConfig::default(),
            params: DefectParams::default(),
        }
    }
}

/// `0, step, 2 step, ...` below 360.
pub fn phase_grid(step_deg: f64) -> Vec<f64> {
    let n = (360.0 / step_deg).ceil() as usize;
    (0..n).map(|k| k as f64 * step_deg).filter(|d| *d < 360.0).collect()
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), OdmrError> {
        if !(self.f_start.is_finite() && self.f_stop.is_finite() && self.f_start < self.f_stop) {
            return Err(OdmrError::InvalidSweep("f_start must be below f_stop"));
        }
        if self.n_freq < 2 {
            return Err(OdmrError::InvalidSweep("n_freq must be at least 2"));
        }
        if self.delta_list.iter().any(|d| !(0.0..360.0).contains(d)) {
            return Err(OdmrError::InvalidSweep("delta values must lie in [0, 360)"));
        }
        for &b in &self.b_list {
            StaticField::new(b).validate()?;
        }
        self.drive.validate()?;
        self.params.validate()?;
        Ok(())
    }

    pub fn freqs(&self) -> Vec<f64> {
        let n = self.n_freq;
        let span = self.f_stop - self.f_start;
        (0..n)
            .map(|i| {
                if i == n - 1 {
                    self.f_stop
                } else {
                    self.f_start + span * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    }

    fn drive_at(&self, freq: f64, delta_deg: f64) -> DriveConfig {
        DriveConfig {
            freq,
            delta_deg,
            ..self.drive
        }
    }
}

/// Steady-state contrast solver for one static field; the drive-off
/// photoluminescence is computed once and reused.
#[derive(Debug, Clone)]
pub struct ContrastSolver {
    params: DefectParams,
    field: StaticField,
    jumps: Vec<JumpOperator>,
    pl_off: f64,
}

impl ContrastSolver {
    pub fn new(params: &DefectParams, field: &StaticField) -> Result<Self, OdmrError> {
        params.validate()?;
        field.validate()?;
        let jumps = jump_operators(params);
        let mut solver = Self {
            params: *params,
            field: *field,
            jumps,
            pl_off: 0.0,
        };
        solver.pl_off = solver.photoluminescence(&DriveConfig::default().off())?;
        Ok(solver)
    }

    pub fn pl_off(&self) -> f64 {
        self.pl_off
    }

    pub fn photoluminescence(&self, drive: &DriveConfig) -> Result<f64, LindbladError> {
        let h = build_rwa_hamiltonian(&self.params, &self.field, drive);
        let rho = steady_state(&build_liouvillian(&h, &self.jumps)?)?;
        Ok(photoluminescence(&rho, &self.params))
    }

    /// `(PL_on - PL_off) / PL_off`.
    pub fn contrast(&self, drive: &DriveConfig) -> Result<f64, OdmrError> {
        drive.validate()?;
        if drive.omega1 == 0.0 && drive.omega2 == 0.0 {
            return Ok(0.0);
        }
        let on = self.photoluminescence(drive)?;
        Ok((on - self.pl_off) / self.pl_off)
    }
}

pub fn contrast_at(
    f: f64,
    drive: &DriveConfig,
    field: &StaticField,
    params: &DefectParams,
) -> Result<f64, OdmrError> {
    let d = DriveConfig { freq: f, ..*drive };
    ContrastSolver::new(params, field)?.contrast(&d)
}

/// Samples the contrast on the configured frequency grid at one `(delta, b0)`.
pub fn frequency_sweep(cfg: &SweepConfig, delta_deg: f64, b0: f64) -> Result<Spectrum, OdmrError> {
    cfg.validate()?;
    let solver = ContrastSolver::new(&cfg.params, &StaticField::new(b0))?;
    spectrum_with(&solver, cfg, delta_deg, b0)
}

fn spectrum_with(solver: &ContrastSolver, cfg: &SweepConfig, delta_deg: f64, b0: f64) -> Result<Spectrum, OdmrError> {
    let freqs = cfg.freqs();
    let contrasts = freqs
        .par_iter()
        .map(|&f| solver.contrast(&cfg.drive_at(f, delta_deg)))
        .collect::<Result<Vec<_>, _>>()?;
    Spectrum::new(freqs, contrasts, delta_deg, b0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMap {
    pub b0: f64,
    pub deltas: Vec<f64>,
    pub freqs: Vec<f64>,
    /// One row per delta.
    pub contrast: Vec<Vec<f64>>,
}

impl PhaseMap {
    pub fn spectrum(&self, row: usize) -> Spectrum {
        Spectrum {
            freqs: self.freqs.clone(),
            contrasts: self.contrast[row].clone(),
            delta_deg: self.deltas[row],
            b0: self.b0,
        }
    }
}

pub fn phase_sweep(cfg: &SweepConfig, b0: f64) -> Result<PhaseMap, OdmrError> {
    cfg.validate()?;
    let solver = ContrastSolver::new(&cfg.params, &StaticField::new(b0))?;
    let freqs = cfg.freqs();
    let nf = freqs.len();
    let flat = (0..cfg.delta_list.len() * nf)
        .into_par_iter()
        .map(|k| solver.contrast(&cfg.drive_at(freqs[k % nf], cfg.delta_list[k / nf])))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PhaseMap {
        b0,
        deltas: cfg.delta_list.clone(),
        contrast: flat.chunks(nf).map(<[f64]>::to_vec).collect(),
        freqs,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratedContrast {
    pub deltas: Vec<f64>,
    /// Integral of |contrast| below `d_gs`, contrast x MHz.
    pub below_raw: Vec<f64>,
    pub above_raw: Vec<f64>,
    /// Each curve min-max normalized to [0, 1] on its own.
    pub below: Vec<f64>,
    pub above: Vec<f64>,
}

fn trapezoid_split(freqs: &[f64], ys: &[f64], split: f64) -> (f64, f64) {
    let (mut below, mut above) = (0.0, 0.0);
    for k in 0..freqs.len().saturating_sub(1) {
        let (f0, f1) = (freqs[k], freqs[k + 1]);
        let (y0, y1) = (ys[k].abs(), ys[k + 1].abs());
        if f1 <= split {
            below += 0.5 * (y0 + y1) * (f1 - f0);
        } else if f0 >= split {
            above += 0.5 * (y0 + y1) * (f1 - f0);
        } else {
            let ym = y0 + (y1 - y0) * (split - f0) / (f1 - f0);
            below += 0.5 * (y0 + ym) * (split - f0);
            above += 0.5 * (ym + y1) * (f1 - split);
        }
    }
    (below, above)
}

fn min_max_normalize(v: &[f64]) -> Vec<f64> {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    v.iter()
        .map(|x| if span > 0.0 { (x - lo) / span } else { 0.0 })
        .collect()
}

/// Trapezoidal integral of |contrast| on each side of `d_gs`, per phase.
pub fn integrated_contrast(map: &PhaseMap, d_gs: f64) -> IntegratedContrast {
    let (below_raw, above_raw): (Vec<f64>, Vec<f64>) = map
        .contrast
        .iter()
        .map(|row| trapezoid_split(&map.freqs, row, d_gs))
        .unzip();
    IntegratedContrast {
        deltas: map.deltas.clone(),
        below: min_max_normalize(&below_raw),
        above: min_max_normalize(&above_raw),
        below_raw,
        above_raw,
    }
}

/// First index of the maximum.
pub fn argmax(v: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, x) in v.iter().enumerate() {
        if best.is_none_or(|b| *x > v[b]) {
            best = Some(i);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub delta_deg: f64,
    pub sel_minus: Selectivity,
    pub sel_plus: Selectivity,
    /// Fitted center separation, MHz.
    pub separation: f64,
    pub poorly_separated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxSelectivity {
    pub b0: f64,
    pub delta_star_minus: f64,
    pub sel_minus: Selectivity,
    pub delta_star_plus: f64,
    pub sel_plus: Selectivity,
    /// Mean fitted peak separation over the phase grid, MHz.
    pub peak_separation: f64,
    /// Zero field: the two transitions are not spin-selective and the phase
    /// of maximum selectivity is not meaningful.
    pub degenerate: bool,
    pub per_delta: Vec<PhasePoint>,
}

fn fit_point(spec: &Spectrum, params: &DefectParams, fitter: &Fitter) -> Result<PhasePoint, OdmrError> {
    let wrap = |source| OdmrError::Fit {
        delta_deg: spec.delta_deg,
        source,
    };
    let guess = initial_guess(spec, params, &StaticField::new(spec.b0));
    let fit = fitter.fit(spec, &guess).map_err(wrap)?;
    Ok(PhasePoint {
        delta_deg: spec.delta_deg,
        sel_minus: selectivity(&fit, Transition::Minus).map_err(wrap)?,
        sel_plus: selectivity(&fit, Transition::Plus).map_err(wrap)?,
        separation: fit.separation(),
        poorly_separated: fit.poorly_separated,
    })
}

/// Fits the spectrum at every phase in `cfg.delta_list` and returns the
/// phase maximizing each transition's selectivity.
pub fn find_max_selectivity(cfg: &SweepConfig, b0: f64, fitter: &Fitter) -> Result<MaxSelectivity, OdmrError> {
    if cfg.delta_list.is_empty() {
        return Err(OdmrError::InvalidSweep("delta_list is empty"));
    }
    let map = phase_sweep(cfg, b0)?;
    let per_delta = (0..map.deltas.len())
        .into_par_iter()
        .map(|row| fit_point(&map.spectrum(row), &cfg.params, fitter))
        .collect::<Result<Vec<_>, _>>()?;
    let minus: Vec<f64> = per_delta.iter().map(|p| p.sel_minus.value).collect();
    let plus: Vec<f64> = per_delta.iter().map(|p| p.sel_plus.value).collect();
    let im = argmax(&minus).expect("non-empty");
    let ip = argmax(&plus).expect("non-empty");
    let peak_separation = per_delta.iter().map(|p| p.separation).sum::<f64>() / per_delta.len() as f64;
    Ok(MaxSelectivity {
        b0,
        delta_star_minus: per_delta[im].delta_deg,
        sel_minus: per_delta[im].sel_minus,
        delta_star_plus: per_delta[ip].delta_deg,
        sel_plus: per_delta[ip].sel_plus,
        peak_separation,
        degenerate: cfg.params.gamma_e() * b0.abs() < 1e-9,
        per_delta,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldPoint {
    pub b0: f64,
    pub result: Result<MaxSelectivity, OdmrError>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectivityCurve {
    pub points: Vec<FieldPoint>,
}

impl SelectivityCurve {
    pub fn b_values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.b0).collect()
    }
}

/// [`find_max_selectivity`] at every field in `cfg.b_list`. A failure at one
/// field is recorded in that point and the sweep continues.
pub fn field_sweep(cfg: &SweepConfig, fitter: &Fitter) -> Result<SelectivityCurve, OdmrError> {
    cfg.validate()?;
    let points = cfg
        .b_list
        .iter()
        .map(|&b0| FieldPoint {
            b0,
            result: find_max_selectivity(cfg, b0, fitter),
        })
        .collect();
    Ok(SelectivityCurve { points })
}

/// `center_plus - center_minus` of a double-Lorentzian fit, MHz.
pub fn peak_separation(spec: &Spectrum, params: &DefectParams, fitter: &Fitter) -> Result<f64, OdmrError> {
    let guess = initial_guess(spec, params, &StaticField::new(spec.b0));
    let fit = fitter.fit(spec, &guess).map_err(|source| OdmrError::Fit {
        delta_deg: spec.delta_deg,
        source,
    })?;
    Ok(fit.separation())
}

/// Convenience wrapper with the default optimizer settings.
pub fn fit_spectrum(spec: &Spectrum, params: &DefectParams) -> Result<crate::fitting::DoubleLorentzianFit, FitError> {
    fit_double_lorentzian(spec, &initial_guess(spec, params, &StaticField::new(spec.b0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{resonance_frequencies, wrap_degrees};
    use proptest::prelude::*;

    fn drive(freq: f64, delta_deg: f64) -> DriveConfig {
        DriveConfig {
            freq,
            delta_deg,
            ..Default::default()
        }
    }

    fn coarse() -> SweepConfig {
        SweepConfig {
            n_freq: 101,
            delta_list: phase_grid(30.0),
            ..Default::default()
        }
    }

    #[test]
    fn zero_drive_gives_zero_contrast() {
        let p = DefectParams::default();
        let d = drive(3400.0, 0.0).off();
        assert_eq!(contrast_at(3400.0, &d, &StaticField::new(2.3), &p).unwrap(), 0.0);
    }

    #[test]
    fn far_off_resonance_is_dark() {
        let p = DefectParams::default();
        let field = StaticField::new(2.3);
        // linewidth ~ gamma_phi / 2pi ~ 16 MHz; 900 MHz is > 50 linewidths away
        for f in [2500.0, 4500.0] {
            let c = contrast_at(f, &drive(f, 0.0), &field, &p).unwrap();
            assert!(c.abs() < 1e-4, "{f}: {c}");
        }
    }

    #[test]
    fn resonant_sigma_minus_is_a_dip() {
        let p = DefectParams::default();
        let field = StaticField::new(2.3);
        let (fm, _) = resonance_frequencies(&p, &field);
        let d = drive(fm, 120.0);
        assert_eq!(d.effective_phase_deg(), 90.0);
        assert!(contrast_at(fm, &d, &field, &p).unwrap() < 0.0);
    }

    fn dip(spec: &Spectrum, lo: f64, hi: f64) -> (f64, f64) {
        spec.freqs
            .iter()
            .zip(&spec.contrasts)
            .filter(|(f, _)| **f >= lo && **f <= hi)
            .map(|(f, c)| (*f, *c))
            .fold((0.0, 0.0), |best, x| if x.1 < best.1 { x } else { best })
    }

    #[test]
    fn circular_drive_selects_one_branch() {
        let cfg = SweepConfig::default();
        let d = cfg.params.d_gs;
        let s = frequency_sweep(&cfg, 120.0, 2.3).unwrap();
        let (f_lo, c_lo) = dip(&s, 3250.0, d);
        let (_, c_hi) = dip(&s, d, 3750.0);
        assert!((f_lo - 3398.5).abs() <= 2.5, "{f_lo}");
        assert!(c_lo < 3.0 * c_hi.min(-1e-12), "{c_lo} vs {c_hi}");

        let s = frequency_sweep(&cfg, 300.0, 2.3).unwrap();
        let (_, c_lo) = dip(&s, 3250.0, d);
        let (f_hi, c_hi) = dip(&s, d, 3750.0);
        assert!((f_hi - 3581.5).abs() <= 2.5, "{f_hi}");
        assert!(c_hi < 3.0 * c_lo.min(-1e-12));
    }

    #[test]
    fn linear_drive_gives_equal_dips() {
        let cfg = SweepConfig::default();
        let s = frequency_sweep(&cfg, 30.0, 2.3).unwrap();
        let (_, c_lo) = dip(&s, 3250.0, 3490.0);
        let (_, c_hi) = dip(&s, 3490.0, 3750.0);
        assert!((c_lo - c_hi).abs() <= 0.01 * c_lo.abs(), "{c_lo} vs {c_hi}");
    }

    #[test]
    fn spectrum_invariants() {
        assert!(Spectrum::new(vec![1.0, 2.0], vec![0.0], 0.0, 0.0).is_err());
        assert!(Spectrum::new(vec![1.0, 1.0], vec![0.0, 0.0], 0.0, 0.0).is_err());
        let s = Spectrum::new(vec![1.0, 2.0, 3.0, 4.0], vec![0.0, -1.0, -2.0, 0.0], 0.0, 0.0).unwrap();
        let m = s.masked(&[(1.5, 3.0)]);
        assert_eq!(m.freqs, vec![1.0, 4.0]);
    }

    #[test]
    fn sweep_validation() {
        let mut cfg = SweepConfig::default();
        cfg.n_freq = 1;
        assert!(cfg.validate().is_err());
        let mut cfg = SweepConfig::default();
        cfg.f_stop = cfg.f_start;
        assert!(cfg.validate().is_err());
        let mut cfg = SweepConfig::default();
        cfg.delta_list = vec![360.0];
        assert!(cfg.validate().is_err());
        let cfg = SweepConfig {
            n_freq: 2,
            ..Default::default()
        };
        assert_eq!(cfg.freqs(), vec![3250.0, 3750.0]);
        assert_eq!(phase_grid(10.0).len(), 36);
    }

    #[test]
    fn integrated_curves_are_normalized_and_mirrored() {
        let mut cfg = coarse();
        cfg.drive.offset_deg = 0.0;
        // the mirror f -> 2 d_gs - f needs a grid symmetric about d_gs
        cfg.f_start = 3230.0;
        cfg.delta_list = phase_grid(10.0);
        let map = phase_sweep(&cfg, 2.3).unwrap();
        assert_eq!(map.contrast.len(), 36);
        assert!(map.contrast.iter().all(|r| r.len() == 101));
        let ic = integrated_contrast(&map, cfg.params.d_gs);
        for curve in [&ic.below, &ic.above] {
            let lo = curve.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = curve.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert_eq!((lo, hi), (0.0, 1.0));
        }
        let n = ic.deltas.len();
        for k in 0..n {
            let mirror = (n - k) % n;
            assert_eq!(ic.deltas[mirror], wrap_degrees(360.0 - ic.deltas[k]));
            assert!((ic.below[k] - ic.above[mirror]).abs() < 1e-6);
        }
        let sep = wrap_degrees(ic.deltas[argmax(&ic.above).unwrap()] - ic.deltas[argmax(&ic.below).unwrap()]);
        assert!((sep - 180.0).abs() <= 10.0, "{sep}");
    }

    #[test]
    fn trapezoid_split_at_interior_point() {
        // |y| = 1 on [0, 4], split at 1.5 lands inside a cell
        let (b, a) = trapezoid_split(&[0.0, 1.0, 2.0, 4.0], &[-1.0, -1.0, -1.0, -1.0], 1.5);
        assert!((b - 1.5).abs() < 1e-15 && (a - 2.5).abs() < 1e-15);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let cfg = SweepConfig {
            n_freq: 41,
            delta_list: phase_grid(60.0),
            ..Default::default()
        };
        let run = |n| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .unwrap()
                .install(|| phase_sweep(&cfg, 2.3).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn peak_separation_tracks_the_resonances() {
        let cfg = SweepConfig::default();
        let fitter = Fitter::default();
        let mut last = 0.0;
        for (b0, want) in [(0.0, Some(130.0)), (1.0, None), (2.3, Some(183.1)), (4.0, None)] {
            let s = frequency_sweep(&cfg, 30.0, b0).unwrap();
            let sep = peak_separation(&s, &cfg.params, &fitter).unwrap();
            if let Some(w) = want {
                assert!((sep - w).abs() <= 1.0, "b0={b0}: {sep}");
            }
            assert!(sep > last);
            last = sep;
        }
    }

    #[test]
    fn symmetric_model_has_equal_max_selectivities() {
        let m = find_max_selectivity(&coarse(), 2.3, &Fitter::default()).unwrap();
        assert!((m.sel_minus.value - m.sel_plus.value).abs() < 0.01);
        assert_eq!(wrap_degrees(m.delta_star_plus - m.delta_star_minus), 180.0);
        assert!(!m.degenerate);
        for p in &m.per_delta {
            assert_eq!(p.sel_minus.value + p.sel_plus.value, 1.0);
        }
    }

    #[test]
    fn zero_field_is_flagged_and_unselective() {
        let m = find_max_selectivity(&coarse(), 0.0, &Fitter::default()).unwrap();
        assert!(m.degenerate);
        for p in &m.per_delta {
            assert!((p.sel_minus.value - 0.5).abs() < 0.01);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn handedness_mirror(f in 3250.0..3750.0f64, delta in 0.0..360.0f64, b0 in 0.1..8.0f64) {
            let p = DefectParams::default();
            let solver = ContrastSolver::new(&p, &StaticField::new(b0)).unwrap();
            let base = DriveConfig { offset_deg: 0.0, ..Default::default() };
            let a = solver.contrast(&DriveConfig { freq: f, delta_deg: delta, ..base }).unwrap();
            let b = solver
                .contrast(&DriveConfig { freq: 2.0 * p.d_gs - f, delta_deg: wrap_degrees(360.0 - delta), ..base })
                .unwrap();
            prop_assert!((a - b).abs() < 1e-6, "{} vs {}", a, b);
        }

        #[test]
        fn contrast_is_a_bounded_dip(f in 3250.0..3750.0f64, delta in 0.0..360.0f64, b0 in 0.0..8.0f64) {
            let c = contrast_at(f, &drive(f, delta), &StaticField::new(b0), &DefectParams::default()).unwrap();
            prop_assert!(c <= 1e-12 && c >= -1.0, "{}", c);
        }
    }
}
