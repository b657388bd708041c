//! Static ground-state Hamiltonian, resonance frequencies, circular drive
//! decomposition, the rotating-frame seven-level Hamiltonian, and the
//! hyperfine stick spectrum.
//!
//! Units throughout: energies and frequencies in MHz (h = 1), fields in mT,
//! rates in 1/us, angles in degrees.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lindblad::{Level, N_LEVELS};
use crate::spin_algebra::{eig_hermitian, kron, spin1_operators, ComplexMatrix, LinalgError};

/// Bohr magneton over Planck constant, MHz/mT.
pub const BOHR_MHZ_PER_MT: f64 = 13.9962;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid {field} = {value}: {reason}")]
pub struct ParamError {
    pub field: &'static str,
    pub value: f64,
    pub reason: &'static str,
}

fn check(field: &'static str, value: f64, ok: bool, reason: &'static str) -> Result<(), ParamError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(ParamError {
            field,
            value,
            reason,
        })
    }
}

/// How the merged `|4>` (excited +-1) and `|2>` (ground +-1) rates of the
/// five-level optical model are distributed over the two spin branches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchSplit {
    /// `e+ -> s` and `e- -> s` each at `k_45`; `s -> g+` and `s -> g-` each at
    /// `k_52 / 2`. Collapsing the seven-level populations reproduces the
    /// five-level rate equations exactly.
    #[default]
    Conserving,
    /// Every branch gets the full merged rate (`k_45` and `k_52` each).
    Full,
}

/// Optical and intersystem-crossing rates, 1/us.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpticalRates {
    /// Spin-conserving optical pumping g -> e.
    pub k_p: f64,
    /// Radiative decay e -> g.
    pub k_d: f64,
    /// ISC from e(+-1) to the metastable singlet.
    pub k_45: f64,
    /// ISC from e(0) to the metastable singlet.
    pub k_35: f64,
    /// Singlet relaxation into g(+-1).
    pub k_52: f64,
    /// Singlet relaxation into g(0).
    pub k_51: f64,
    pub split: BranchSplit,
}

impl Default for OpticalRates {
    fn default() -> Self {
        Self {
            k_p: 7.0,
            k_d: 880.0,
            k_45: 1150.0,
            k_35: 220.0,
            k_52: 20.0,
            k_51: 13.0,
            split: BranchSplit::Conserving,
        }
    }
}

impl OpticalRates {
    pub fn validate(&self) -> Result<(), ParamError> {
        for (name, v) in [
            ("rates.k_p", self.k_p),
            ("rates.k_d", self.k_d),
            ("rates.k_45", self.k_45),
            ("rates.k_35", self.k_35),
            ("rates.k_52", self.k_52),
            ("rates.k_51", self.k_51),
        ] {
            check(name, v, v >= 0.0, "rates must be non-negative")?;
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            k_p: self.k_p * factor,
            k_d: self.k_d * factor,
            k_45: self.k_45 * factor,
            k_35: self.k_35 * factor,
            k_52: self.k_52 * factor,
            k_51: self.k_51 * factor,
            split: self.split,
        }
    }

    pub fn zero() -> Self {
        Self {
            k_p: 0.0,
            k_d: 0.0,
            k_45: 0.0,
            k_35: 0.0,
            k_52: 0.0,
            k_51: 0.0,
            split: BranchSplit::Conserving,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DefectParams {
    /// Longitudinal zero-field splitting, MHz.
    pub d_gs: f64,
    /// Transverse zero-field splitting, MHz.
    pub e_gs: f64,
    pub g_factor: f64,
    /// Ground-state pure dephasing rate, 1/us.
    pub gamma_phi: f64,
    #[serde(skip)]
    pub rates: OpticalRates,
}

impl Default for DefectParams {
    fn default() -> Self {
        Self {
            d_gs: 3490.0,
            e_gs: 65.0,
            g_factor: 2.002,
            gamma_phi: 100.0,
            rates: OpticalRates::default(),
        }
    }
}

impl DefectParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        check("defect.d_gs", self.d_gs, self.d_gs > 0.0, "must be positive")?;
        check("defect.e_gs", self.e_gs, self.e_gs >= 0.0, "must be non-negative")?;
        check(
            "defect.g_factor",
            self.g_factor,
            self.g_factor > 1.5 && self.g_factor < 2.5,
            "must lie in (1.5, 2.5)",
        )?;
        check(
            "defect.gamma_phi",
            self.gamma_phi,
            self.gamma_phi >= 0.0,
            "must be non-negative",
        )?;
        self.rates.validate()
    }

    /// Electron gyromagnetic ratio, MHz/mT.
    pub fn gamma_e(&self) -> f64 {
        self.g_factor * BOHR_MHZ_PER_MT
    }

    /// Every frequency and rate multiplied by `factor` (time stretched by
    /// `1/factor`). The g-factor is untouched; scale the field separately.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            d_gs: self.d_gs * factor,
            e_gs: self.e_gs * factor,
            g_factor: self.g_factor,
            gamma_phi: self.gamma_phi * factor,
            rates: self.rates.scaled(factor),
        }
    }
}

/// Static field along the defect symmetry axis, mT.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StaticField {
    pub b0: f64,
}

impl StaticField {
    pub const MAX_ABS_MT: f64 = 100.0;

    pub fn new(b0: f64) -> Self {
        Self { b0 }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        check(
            "field.b0",
            self.b0,
            self.b0.abs() <= Self::MAX_ABS_MT,
            "|b0| must not exceed 100 mT",
        )
    }
}

/// Two orthogonal linearly polarized drive arms with a relative phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriveConfig {
    /// Rabi amplitude of the x arm, MHz.
    pub omega1: f64,
    /// Rabi amplitude of the y arm, MHz.
    pub omega2: f64,
    /// Applied phase difference, degrees.
    pub delta_deg: f64,
    /// Path-length phase offset added to the applied phase, degrees.
    pub offset_deg: f64,
    /// Drive frequency, MHz.
    pub freq: f64,
}

impl Default for DriveConfig {
    fn default() -> Self {
        Self {
            omega1: 1.0,
            omega2: 1.0,
            delta_deg: 0.0,
            offset_deg: -30.0,
            freq: 3490.0,
        }
    }
}

impl DriveConfig {
    pub fn validate(&self) -> Result<(), ParamError> {
        check("drive.omega1", self.omega1, self.omega1 >= 0.0, "must be non-negative")?;
        check("drive.omega2", self.omega2, self.omega2 >= 0.0, "must be non-negative")?;
        check("drive.delta_deg", self.delta_deg, true, "must be finite")?;
        check("drive.offset_deg", self.offset_deg, true, "must be finite")?;
        check("drive.freq", self.freq, self.freq > 0.0, "must be positive")
    }

    /// `(delta + offset) mod 360`, in `[0, 360)`.
    pub fn effective_phase_deg(&self) -> f64 {
        wrap_degrees(self.delta_deg + self.offset_deg)
    }

    pub fn off(&self) -> Self {
        Self {
            omega1: 0.0,
            omega2: 0.0,
            ..*self
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            omega1: self.omega1 * factor,
            omega2: self.omega2 * factor,
            freq: self.freq * factor,
            ..*self
        }
    }
}

pub fn wrap_degrees(x: f64) -> f64 {
    let w = x.rem_euclid(360.0);
    // rem_euclid can return 360.0 for tiny negative inputs
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

/// Secular hyperfine coupling to the nearest nitrogen nuclei (each I = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperfineParams {
    /// MHz.
    pub a_zz: f64,
    pub n_nuclei: usize,
}

impl Default for HyperfineParams {
    fn default() -> Self {
        Self {
            a_zz: -47.0,
            n_nuclei: 3,
        }
    }
}

impl HyperfineParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        check(
            "hyperfine.a_zz",
            self.a_zz,
            self.a_zz.abs() <= 200.0,
            "|a_zz| must not exceed 200 MHz",
        )?;
        check(
            "hyperfine.n_nuclei",
            self.n_nuclei as f64,
            self.n_nuclei <= 3,
            "at most three nuclei are supported",
        )
    }
}

/// `H = D (Sz^2 - 2/3) + E (Sx^2 - Sy^2) + gamma_e B0 Sz`, 3x3 in MHz.
pub fn build_ground_hamiltonian(params: &DefectParams, field: &StaticField) -> ComplexMatrix {
    let ops = spin1_operators();
    let sz2 = &ops.sz * &ops.sz;
    let sx2 = &ops.sx * &ops.sx;
    let sy2 = &ops.sy * &ops.sy;
    let id = ComplexMatrix::identity(3);

    let mut h = (&sz2 - &id.scale_real(2.0 / 3.0)).scale_real(params.d_gs);
    h.add_scaled(Complex64::new(params.e_gs, 0.0), &(&sx2 - &sy2))
        .expect("3x3");
    h.add_scaled(Complex64::new(params.gamma_e() * field.b0, 0.0), &ops.sz)
        .expect("3x3");
    h
}

/// `(f_minus, f_plus) = D -+ sqrt(E^2 + (gamma_e B0)^2)`.
pub fn resonance_frequencies(params: &DefectParams, field: &StaticField) -> (f64, f64) {
    let split = params.e_gs.hypot(params.gamma_e() * field.b0);
    (params.d_gs - split, params.d_gs + split)
}

/// Complex co- and counter-rotating amplitudes `(c_plus, c_minus)` in MHz.
///
/// For the field `B = omega1 x sin(wt) + omega2 y sin(wt + phi)` these are the
/// `e^{-iwt}` Fourier coefficients of `Bx - i By` (drives `|0> -> |+1>`) and
/// `Bx + i By` (drives `|0> -> |-1>`):
///
/// `c_+- = (i omega1 +- omega2 e^{-i phi}) / 2`, with `phi` the effective phase.
pub fn circular_amplitudes(drive: &DriveConfig) -> (Complex64, Complex64) {
    let phi = drive.effective_phase_deg().to_radians();
    let arm1 = Complex64::new(0.0, drive.omega1);
    let arm2 = drive.omega2 * Complex64::from_polar(1.0, -phi);
    (0.5 * (arm1 + arm2), 0.5 * (arm1 - arm2))
}

/// `(amp_plus, amp_minus) = (|c_+|, |c_-|)`; see [`circular_amplitudes`].
pub fn circular_components(drive: &DriveConfig) -> (f64, f64) {
    let (cp, cm) = circular_amplitudes(drive);
    (cp.norm(), cm.norm())
}

/// Maps a spin-1 basis index (`+1, 0, -1`) to the ground level it occupies.
fn ground_level(spin_index: usize) -> Level {
    match spin_index {
        0 => Level::GPlus,
        1 => Level::G0,
        2 => Level::GMinus,
        _ => unreachable!("spin-1 index out of range"),
    }
}

/// The ground Hamiltonian embedded in the seven-level space with `g0` at zero.
fn embed_ground(h3: &ComplexMatrix) -> ComplexMatrix {
    let mut h = ComplexMatrix::zeros(N_LEVELS);
    let origin = h3[(1, 1)];
    for a in 0..3 {
        for b in 0..3 {
            let (la, lb) = (ground_level(a).index(), ground_level(b).index());
            h[(la, lb)] = h3[(a, b)];
        }
        let l = ground_level(a).index();
        h[(l, l)] -= origin;
    }
    h
}

/// Rotating-frame, rotating-wave Hamiltonian on the seven-level basis, MHz.
///
/// The ground levels are the bare `m_s` states; `g+-` carry `D +- gamma_e B0 - f`
/// on the diagonal and `E` couples them. The drive enters as
/// `<g+-|H|g0> = c_+- / sqrt(2)` (from `<+-1|S+-|0> = sqrt(2)` and the factor 1/2
/// in `Bx Sx + By Sy = (S+ (Bx - iBy) + S- (Bx + iBy)) / 2`).
pub fn build_rwa_hamiltonian(
    params: &DefectParams,
    field: &StaticField,
    drive: &DriveConfig,
) -> ComplexMatrix {
    let mut h = embed_ground(&build_ground_hamiltonian(params, field));
    let (gp, g0, gm) = (Level::GPlus.index(), Level::G0.index(), Level::GMinus.index());
    h[(gp, gp)] -= drive.freq;
    h[(gm, gm)] -= drive.freq;

    let (cp, cm) = circular_amplitudes(drive);
    let vp = cp * FRAC_1_SQRT_2;
    let vm = cm * FRAC_1_SQRT_2;
    h[(gp, g0)] = vp;
    h[(g0, gp)] = vp.conj();
    h[(gm, g0)] = vm;
    h[(g0, gm)] = vm.conj();
    h
}

/// Lab-frame Hamiltonian at time `t_us` including both counter-rotating terms.
pub fn build_lab_hamiltonian(
    params: &DefectParams,
    field: &StaticField,
    drive: &DriveConfig,
    t_us: f64,
) -> ComplexMatrix {
    let ops = spin1_operators();
    let theta = 2.0 * PI * drive.freq * t_us;
    let phi = drive.effective_phase_deg().to_radians();
    let bx = drive.omega1 * theta.sin();
    let by = drive.omega2 * (theta + phi).sin();
    let mut h3 = build_ground_hamiltonian(params, field);
    h3.add_scaled(Complex64::new(bx, 0.0), &ops.sx).expect("3x3");
    h3.add_scaled(Complex64::new(by, 0.0), &ops.sy).expect("3x3");
    embed_ground(&h3)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Branch {
    /// `|0> -> |-1>`.
    Minus,
    /// `|0> -> |+1>`.
    Plus,
}

impl Branch {
    pub fn label(self) -> &'static str {
        match self {
            Branch::Minus => "minus",
            Branch::Plus => "plus",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StickLine {
    pub frequency: f64,
    /// Number of nuclear configurations contributing.
    pub weight: f64,
    pub branch: Branch,
    /// Total nuclear projection; `None` once lines of different projection
    /// coincide and are merged.
    pub nuclear_m: Option<i32>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StickError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

const MERGE_TOL_MHZ: f64 = 1e-6;

/// ESR stick spectrum of the electron spin coupled to `n_nuclei` spin-1 nuclei
/// through `a_zz Sz Iz_k`.
///
/// The full `3^(n+1)` Hamiltonian is diagonalized. Each eigenstate is
/// classified by its electron character and total nuclear projection `M`;
/// transitions conserve `M`. A `+-1`-like eigenstate belongs to the plus
/// branch when its `|+1>` weight dominates (ties go to the upper level).
/// Weights count degenerate nuclear configurations, so each branch sums to
/// `3^n`. Lines that coincide within a branch are merged.
pub fn hyperfine_stick_spectrum(
    params: &DefectParams,
    field: &StaticField,
    hf: &HyperfineParams,
) -> Result<Vec<StickLine>, StickError> {
    params.validate()?;
    field.validate()?;
    hf.validate()?;

    let ops = spin1_operators();
    let n_nuc = hf.n_nuclei;
    let nuc_dim = 3usize.pow(n_nuc as u32);
    let dim = 3 * nuc_dim;

    let mut h = kron(&build_ground_hamiltonian(params, field), &ComplexMatrix::identity(nuc_dim));
    let mut nuclear_mz = vec![0.0; nuc_dim];
    for (n, m) in nuclear_mz.iter_mut().enumerate() {
        let mut rest = n;
        for _ in 0..n_nuc {
            // digit 0 -> +1, 1 -> 0, 2 -> -1
            *m += 1.0 - (rest % 3) as f64;
            rest /= 3;
        }
    }
    for k in 0..n_nuc {
        let iz = (0..n_nuc).fold(ComplexMatrix::identity(1), |acc, j| {
            let factor = if j == k {
                ops.sz.clone()
            } else {
                ComplexMatrix::identity(3)
            };
            kron(&acc, &factor)
        });
        h.add_scaled(Complex64::new(hf.a_zz, 0.0), &kron(&ops.sz, &iz))?;
    }

    let eig = eig_hermitian(&h)?;

    struct State {
        energy: f64,
        p_plus: f64,
        p_zero: f64,
        p_minus: f64,
        m: i32,
    }
    let states: Vec<State> = (0..dim)
        .map(|k| {
            let v = eig.vector(k);
            let mut p = [0.0; 3];
            let mut m = 0.0;
            for (idx, amp) in v.iter().enumerate() {
                let w = amp.norm_sqr();
                p[idx / nuc_dim] += w;
                m += w * nuclear_mz[idx % nuc_dim];
            }
            State {
                energy: eig.values[k],
                p_plus: p[0],
                p_zero: p[1],
                p_minus: p[2],
                m: m.round() as i32,
            }
        })
        .collect();

    let n = n_nuc as i32;
    let mut lines = Vec::new();
    for m in -n..=n {
        let zero: Vec<&State> = states.iter().filter(|s| s.m == m && s.p_zero > 0.5).collect();
        let pm: Vec<&State> = states.iter().filter(|s| s.m == m && s.p_zero <= 0.5).collect();
        if zero.is_empty() {
            continue;
        }
        let e0 = zero.iter().map(|s| s.energy).sum::<f64>() / zero.len() as f64;
        let mid = pm.iter().map(|s| s.energy).sum::<f64>() / pm.len() as f64;
        let mut acc = [(0.0, 0usize); 2];
        for s in &pm {
            let d = s.p_plus - s.p_minus;
            let plus = if d.abs() > 1e-9 { d > 0.0 } else { s.energy > mid };
            let slot = &mut acc[plus as usize];
            slot.0 += s.energy;
            slot.1 += 1;
        }
        for (slot, branch) in acc.iter().zip([Branch::Minus, Branch::Plus]) {
            if slot.1 > 0 {
                lines.push(StickLine {
                    frequency: slot.0 / slot.1 as f64 - e0,
                    weight: slot.1 as f64,
                    branch,
                    nuclear_m: Some(m),
                });
            }
        }
    }

    lines.sort_by(|a, b| {
        a.branch
            .cmp(&b.branch)
            .then(a.frequency.total_cmp(&b.frequency))
    });
    let mut merged: Vec<StickLine> = Vec::with_capacity(lines.len());
    for line in lines {
        match merged.last_mut() {
            Some(last)
                if last.branch == line.branch
                    && (last.frequency - line.frequency).abs() < MERGE_TOL_MHZ =>
            {
                let w = last.weight + line.weight;
                last.frequency = (last.frequency * last.weight + line.frequency * line.weight) / w;
                last.weight = w;
                if last.nuclear_m != line.nuclear_m {
                    last.nuclear_m = None;
                }
            }
            _ => merged.push(line),
        }
    }
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin_algebra::ZERO;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    /// Transition frequencies from the eigenvalues of the explicit 3x3.
    fn eig_transitions(params: &DefectParams, field: &StaticField) -> (f64, f64) {
        let h = build_ground_hamiltonian(params, field);
        let eig = eig_hermitian(&h).unwrap();
        // the m=0 state is the one with largest |0> weight
        let k0 = (0..3)
            .max_by(|&a, &b| eig.vectors[(1, a)].norm().total_cmp(&eig.vectors[(1, b)].norm()))
            .unwrap();
        let e0 = eig.values[k0];
        let mut others: Vec<f64> = (0..3).filter(|&k| k != k0).map(|k| eig.values[k] - e0).collect();
        others.sort_by(f64::total_cmp);
        (others[0], others[1])
    }

    #[test]
    fn zero_field_gaps() {
        let p = DefectParams::default();
        let (lo, hi) = eig_transitions(&p, &StaticField::new(0.0));
        assert!(approx(lo, 3425.0, 1e-9) && approx(hi, 3555.0, 1e-9));
        assert_eq!(resonance_frequencies(&p, &StaticField::new(0.0)), (3425.0, 3555.0));
    }

    #[test]
    fn degenerate_without_strain() {
        let p = DefectParams {
            e_gs: 0.0,
            ..Default::default()
        };
        let h = build_ground_hamiltonian(&p, &StaticField::new(0.0));
        assert!(approx(h[(0, 0)].re, 3490.0 / 3.0, 1e-9));
        assert!(approx(h[(2, 2)].re, 3490.0 / 3.0, 1e-9));
        assert!(approx(h[(1, 1)].re, -2.0 * 3490.0 / 3.0, 1e-9));
        assert_eq!(resonance_frequencies(&p, &StaticField::new(0.0)), (3490.0, 3490.0));
    }

    #[test]
    fn transitions_at_2p3_mt() {
        let p = DefectParams::default();
        let f = StaticField::new(2.3);
        let (lo, hi) = eig_transitions(&p, &f);
        assert!(approx(lo, 3398.5, 0.1) && approx(hi, 3581.5, 0.1), "{lo} {hi}");
        let (fm, fp) = resonance_frequencies(&p, &f);
        assert!(approx(fm, 3398.5, 0.1) && approx(fp, 3581.5, 0.1));
        assert!(approx(p.gamma_e() * 2.3, 64.5, 0.1));
    }

    #[test]
    fn eigen_gaps_match_closed_form_on_random_draws() {
        let mut s = 7u64;
        let mut uni = |lo: f64, hi: f64| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            lo + (hi - lo) * ((s >> 11) as f64 / (1u64 << 53) as f64)
        };
        for _ in 0..100 {
            let p = DefectParams {
                d_gs: uni(2000.0, 4000.0),
                e_gs: uni(0.0, 150.0),
                g_factor: uni(1.9, 2.1),
                ..Default::default()
            };
            let f = StaticField::new(uni(-20.0, 20.0));
            let (lo, hi) = eig_transitions(&p, &f);
            let (fm, fp) = resonance_frequencies(&p, &f);
            assert!(approx(lo, fm, 1e-6) && approx(hi, fp, 1e-6));
        }
    }

    /// Projects the time-domain field onto rotating unit vectors by quadrature.
    fn projected_components(drive: &DriveConfig) -> (f64, f64) {
        let n = 4096;
        let phi = drive.effective_phase_deg().to_radians();
        let (mut plus, mut minus) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for k in 0..n {
            let th = 2.0 * PI * k as f64 / n as f64;
            let bx = drive.omega1 * th.sin();
            let by = drive.omega2 * (th + phi).sin();
            let rot = Complex64::from_polar(1.0, th);
            plus += Complex64::new(bx, -by) * rot;
            minus += Complex64::new(bx, by) * rot;
        }
        ((plus / n as f64).norm(), (minus / n as f64).norm())
    }

    fn drive(o1: f64, o2: f64, phase: f64) -> DriveConfig {
        DriveConfig {
            omega1: o1,
            omega2: o2,
            delta_deg: phase,
            offset_deg: 0.0,
            ..Default::default()
        }
    }

    #[test]
    fn circular_at_ninety_degrees() {
        let d = drive(1.0, 1.0, 90.0);
        let (p, m) = circular_components(&d);
        let (op, om) = projected_components(&d);
        assert!(approx(p, op, 1e-12) && approx(m, om, 1e-12));
        assert!(approx(p, 0.0, 1e-12) && approx(m, 1.0, 1e-12));
        let (p, m) = circular_components(&drive(1.0, 1.0, 270.0));
        assert!(approx(p, 1.0, 1e-12) && approx(m, 0.0, 1e-12));
    }

    #[test]
    fn linear_and_single_arm() {
        let (p, m) = circular_components(&drive(1.0, 1.0, 0.0));
        assert!(approx(p, m, 1e-15));
        for phase in [0.0, 37.0, 200.0] {
            let (p, m) = circular_components(&drive(1.0, 0.0, phase));
            assert!(approx(p, 0.5, 1e-15) && approx(m, 0.5, 1e-15));
        }
    }

    #[test]
    fn offset_enters_effective_phase() {
        let d = DriveConfig {
            delta_deg: 120.0,
            offset_deg: -30.0,
            ..Default::default()
        };
        assert!(approx(d.effective_phase_deg(), 90.0, 1e-12));
        let d = DriveConfig {
            delta_deg: 10.0,
            offset_deg: -30.0,
            ..Default::default()
        };
        assert!(approx(d.effective_phase_deg(), 340.0, 1e-12));
    }

    #[test]
    fn quadrature_oracle_over_phase_grid() {
        for i in 0..36 {
            let d = drive(1.3, 0.7, 10.0 * i as f64);
            let (p, m) = circular_components(&d);
            let (op, om) = projected_components(&d);
            assert!(approx(p, op, 1e-12) && approx(m, om, 1e-12));
        }
    }

    #[test]
    fn handedness_mirror_and_power() {
        for i in 0..72 {
            let phase = 5.0 * i as f64;
            let (p, m) = circular_components(&drive(2.0, 2.0, phase));
            let (_, m_mirror) = circular_components(&drive(2.0, 2.0, wrap_degrees(-phase)));
            assert!(approx(p, m_mirror, 1e-12));
            assert!(approx(p * p + m * m, 4.0, 1e-12));
        }
    }

    #[test]
    fn rwa_without_drive_is_diagonal() {
        let p = DefectParams::default();
        let f = StaticField::new(2.3);
        let d = DriveConfig {
            omega1: 0.0,
            omega2: 0.0,
            freq: 3500.0,
            ..Default::default()
        };
        let p0 = DefectParams { e_gs: 0.0, ..p };
        let h = build_rwa_hamiltonian(&p0, &f, &d);
        for i in 0..N_LEVELS {
            for j in 0..N_LEVELS {
                if i != j {
                    assert_eq!(h[(i, j)], ZERO);
                }
            }
        }
        let gp = Level::GPlus.index();
        assert!(approx(h[(gp, gp)].re, 3490.0 + p.gamma_e() * 2.3 - 3500.0, 1e-9));
        // with strain the only off-diagonal left is the E coupling
        let h = build_rwa_hamiltonian(&p, &f, &d);
        assert!(approx(h[(gp, Level::GMinus.index())].re, 65.0, 1e-12));
    }

    #[test]
    fn on_resonance_pure_sigma_minus() {
        // E = 0 so the bare |-1> is an eigenstate and its detuning vanishes at f_minus
        let p = DefectParams {
            e_gs: 0.0,
            ..Default::default()
        };
        let f = StaticField::new(2.3);
        let (fm, _) = resonance_frequencies(&p, &f);
        let d = DriveConfig {
            omega1: 5.0,
            omega2: 5.0,
            delta_deg: 90.0,
            offset_deg: 0.0,
            freq: fm,
        };
        let h = build_rwa_hamiltonian(&p, &f, &d);
        let (g0, gp, gm) = (Level::G0.index(), Level::GPlus.index(), Level::GMinus.index());
        assert!(h[(gm, gm)].norm() < 1e-9);
        assert!(h[(gm, g0)].norm() > 1.0);
        for i in 0..N_LEVELS {
            for j in 0..N_LEVELS {
                let pair = (i.min(j), i.max(j));
                if i != j && pair != (g0.min(gm), g0.max(gm)) {
                    assert!(h[(i, j)].norm() < 1e-12, "({i},{j}) nonzero");
                }
            }
        }
        assert!(h[(gp, g0)].norm() < 1e-12);
    }

    #[test]
    fn rwa_matches_time_averaged_interaction_picture() {
        // Average U^dag(t) H_lab(t) U(t) - F over one drive period, where U rotates
        // g+- at the drive frequency. The counter-rotating parts average out.
        let p = DefectParams::default().scaled(0.01);
        let f = StaticField::new(0.023);
        let d = DriveConfig {
            omega1: 0.03,
            omega2: 0.05,
            delta_deg: 77.0,
            offset_deg: -30.0,
            freq: 34.2,
        };
        let rwa = build_rwa_hamiltonian(&p, &f, &d);
        let n = 2000;
        let period = 1.0 / d.freq;
        let mut avg = ComplexMatrix::zeros(N_LEVELS);
        let rotating = [Level::GPlus.index(), Level::GMinus.index()];
        for k in 0..n {
            let t = (k as f64 + 0.5) / n as f64 * period;
            let hl = build_lab_hamiltonian(&p, &f, &d, t);
            let mut phases = vec![Complex64::new(1.0, 0.0); N_LEVELS];
            for &r in &rotating {
                phases[r] = Complex64::from_polar(1.0, 2.0 * PI * d.freq * t);
            }
            let mut hi = ComplexMatrix::zeros(N_LEVELS);
            for i in 0..N_LEVELS {
                for j in 0..N_LEVELS {
                    hi[(i, j)] = phases[i] * hl[(i, j)] * phases[j].conj();
                }
            }
            for &r in &rotating {
                hi[(r, r)] -= d.freq;
            }
            avg.add_scaled(Complex64::new(1.0 / n as f64, 0.0), &hi).unwrap();
        }
        assert!(avg.max_abs_diff(&rwa).unwrap() < 1e-10, "{avg:?}\n{rwa:?}");
    }

    #[test]
    fn rwa_is_hermitian() {
        for i in 0..50 {
            let d = DriveConfig {
                omega1: 0.3 * i as f64,
                omega2: 7.0 - 0.1 * i as f64,
                delta_deg: 7.3 * i as f64,
                offset_deg: -30.0,
                freq: 3300.0 + 9.0 * i as f64,
            };
            let h = build_rwa_hamiltonian(&DefectParams::default(), &StaticField::new(0.1 * i as f64), &d);
            assert!(h.hermitian_deviation() <= 1e-12 * h.max_abs());
        }
    }

    /// Number of ways `n` spin-1 projections sum to `m`.
    fn brute_force_multiplicity(n: usize, m: i32) -> usize {
        let mut count = 0;
        for code in 0..3usize.pow(n as u32) {
            let mut rest = code;
            let mut sum = 0;
            for _ in 0..n {
                sum += (rest % 3) as i32 - 1;
                rest /= 3;
            }
            if sum == m {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn stick_spectrum_defaults() {
        let lines = hyperfine_stick_spectrum(
            &DefectParams::default(),
            &StaticField::new(2.3),
            &HyperfineParams::default(),
        )
        .unwrap();
        assert_eq!(lines.len(), 14);
        for branch in [Branch::Minus, Branch::Plus] {
            let total: f64 = lines.iter().filter(|l| l.branch == branch).map(|l| l.weight).sum();
            assert_eq!(total, 27.0);
        }
    }

    #[test]
    fn stick_spectrum_uniform_spacing_without_strain() {
        let p = DefectParams {
            e_gs: 0.0,
            ..Default::default()
        };
        let lines =
            hyperfine_stick_spectrum(&p, &StaticField::new(2.3), &HyperfineParams::default()).unwrap();
        for branch in [Branch::Minus, Branch::Plus] {
            let b: Vec<&StickLine> = lines.iter().filter(|l| l.branch == branch).collect();
            assert_eq!(b.len(), 7);
            for w in b.windows(2) {
                assert!(approx(w[1].frequency - w[0].frequency, 47.0, 1e-9));
            }
            for l in &b {
                let m = l.nuclear_m.unwrap();
                assert_eq!(l.weight as usize, brute_force_multiplicity(3, m));
            }
            let weights: Vec<usize> = b.iter().map(|l| l.weight as usize).collect();
            assert_eq!(weights, vec![1, 3, 6, 7, 6, 3, 1]);
        }
    }

    #[test]
    fn stick_spectrum_decoupled_limit() {
        let p = DefectParams::default();
        let f = StaticField::new(2.3);
        let hf = HyperfineParams {
            a_zz: 0.0,
            n_nuclei: 3,
        };
        let lines = hyperfine_stick_spectrum(&p, &f, &hf).unwrap();
        assert_eq!(lines.len(), 2);
        let (fm, fp) = resonance_frequencies(&p, &f);
        assert!(approx(lines[0].frequency, fm, 1e-6) && lines[0].branch == Branch::Minus);
        assert!(approx(lines[1].frequency, fp, 1e-6) && lines[1].branch == Branch::Plus);
        assert_eq!(lines[0].weight, 27.0);
    }

    #[test]
    fn stick_spectrum_symmetric_at_zero_field_without_strain() {
        let p = DefectParams {
            e_gs: 0.0,
            ..Default::default()
        };
        let lines =
            hyperfine_stick_spectrum(&p, &StaticField::new(0.0), &HyperfineParams::default()).unwrap();
        let mut freqs: Vec<(f64, f64)> = lines.iter().map(|l| (l.frequency, l.weight)).collect();
        freqs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut mirrored: Vec<(f64, f64)> =
            freqs.iter().map(|&(f, w)| (2.0 * p.d_gs - f, w)).collect();
        mirrored.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (a, b) in freqs.iter().zip(&mirrored) {
            assert!(approx(a.0, b.0, 1e-6) && a.1 == b.1);
        }
    }

    #[test]
    fn validation_names_the_field() {
        let err = StaticField::new(150.0).validate().unwrap_err();
        assert_eq!(err.field, "field.b0");
        let p = DefectParams {
            g_factor: 3.0,
            ..Default::default()
        };
        assert_eq!(p.validate().unwrap_err().field, "defect.g_factor");
        let r = OpticalRates {
            k_35: -1.0,
            ..Default::default()
        };
        assert_eq!(r.validate().unwrap_err().field, "rates.k_35");
    }
}
