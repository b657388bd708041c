//! Seven-level open-system model: jump operators, the vectorized Lindblad
//! generator, its steady state, and RK4 time evolution.
//!
//! Density matrices are vectorized row-major, `vec(rho)[i * 7 + j] = rho[i][j]`,
//! so `vec(A rho B) = (A kron B^T) vec(rho)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::hamiltonian::{BranchSplit, DefectParams};
use crate::spin_algebra::{eig_hermitian, kron, ComplexMatrix, LinalgError, ONE, ZERO};

pub const N_LEVELS: usize = 7;
pub const LIOUVILLE_DIM: usize = N_LEVELS * N_LEVELS;

/// Pivot threshold (relative to the largest generator entry) below which a
/// direction counts as part of the null space.
const NULL_PIVOT_TOL: f64 = 1e-9;

/// Largest allowed `dt * ||L||_inf` for RK4.
pub const RK4_STABILITY_BOUND: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    G0,
    GPlus,
    GMinus,
    E0,
    EPlus,
    EMinus,
    S,
}

impl Level {
    pub const ALL: [Level; N_LEVELS] = [
        Level::G0,
        Level::GPlus,
        Level::GMinus,
        Level::E0,
        Level::EPlus,
        Level::EMinus,
        Level::S,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Level> {
        Self::ALL.get(i).copied()
    }

    pub fn label(self) -> &'static str {
        match self {
            Level::G0 => "g0",
            Level::GPlus => "g+",
            Level::GMinus => "g-",
            Level::E0 => "e0",
            Level::EPlus => "e+",
            Level::EMinus => "e-",
            Level::S => "s",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LindbladError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("steady state is not unique: null space has dimension {nullity}")]
    DegenerateSteadyState { nullity: usize },
    #[error("RK4 step too large: dt * ||L|| = {product:.3} exceeds {RK4_STABILITY_BOUND}")]
    StepTooLarge { product: f64 },
    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),
    #[error("expected a {expected}x{expected} operator, got {got}x{got}")]
    WrongDimension { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpKind {
    Pump,
    Radiative,
    IntersystemCrossing,
    Relaxation,
    Dephasing,
}

#[derive(Debug, Clone)]
pub struct JumpOperator {
    /// Unit-normalized operator; the rate multiplies the whole dissipator.
    pub op: ComplexMatrix,
    /// 1/us.
    pub rate: f64,
    pub kind: JumpKind,
}

impl JumpOperator {
    pub fn transfer(from: Level, to: Level, rate: f64, kind: JumpKind) -> Self {
        Self {
            op: ComplexMatrix::basis_projector(N_LEVELS, to.index(), from.index()),
            rate,
            kind,
        }
    }

    pub fn dephasing(level: Level, rate: f64) -> Self {
        Self {
            op: ComplexMatrix::basis_projector(N_LEVELS, level.index(), level.index()),
            rate,
            kind: JumpKind::Dephasing,
        }
    }
}

/// The optical cycle plus ground-state dephasing. Zero-rate channels are
/// omitted.
pub fn jump_operators(params: &DefectParams) -> Vec<JumpOperator> {
    use JumpKind::*;
    use Level::*;
    let r = &params.rates;
    let relax_pm = match r.split {
        BranchSplit::Conserving => 0.5 * r.k_52,
        BranchSplit::Full => r.k_52,
    };
    let transfers = [
        (G0, E0, r.k_p, Pump),
        (GPlus, EPlus, r.k_p, Pump),
        (GMinus, EMinus, r.k_p, Pump),
        (E0, G0, r.k_d, Radiative),
        (EPlus, GPlus, r.k_d, Radiative),
        (EMinus, GMinus, r.k_d, Radiative),
        (EPlus, S, r.k_45, IntersystemCrossing),
        (EMinus, S, r.k_45, IntersystemCrossing),
        (E0, S, r.k_35, IntersystemCrossing),
        (S, GPlus, relax_pm, Relaxation),
        (S, GMinus, relax_pm, Relaxation),
        (S, G0, r.k_51, Relaxation),
    ];
    let mut jumps: Vec<JumpOperator> = transfers
        .into_iter()
        .filter(|t| t.2 > 0.0)
        .map(|(from, to, rate, kind)| JumpOperator::transfer(from, to, rate, kind))
        .collect();
    if params.gamma_phi > 0.0 {
        jumps.push(JumpOperator::dephasing(GPlus, params.gamma_phi));
        jumps.push(JumpOperator::dephasing(GMinus, params.gamma_phi));
    }
    jumps
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    rho: ComplexMatrix,
}

impl DensityMatrix {
    pub const TRACE_TOL: f64 = 1e-9;
    pub const HERMITIAN_TOL: f64 = 1e-10;
    pub const PSD_TOL: f64 = 1e-8;

    /// Validates trace, Hermiticity and positivity.
    pub fn new(rho: ComplexMatrix) -> Result<Self, LindbladError> {
        if rho.dim() != N_LEVELS {
            return Err(LindbladError::WrongDimension {
                expected: N_LEVELS,
                got: rho.dim(),
            });
        }
        let tr = rho.trace();
        if (tr - ONE).norm() > Self::TRACE_TOL {
            return Err(LindbladError::InvalidDensityMatrix(format!(
                "trace {tr} differs from 1"
            )));
        }
        let dev = rho.hermitian_deviation();
        if dev > Self::HERMITIAN_TOL {
            return Err(LindbladError::InvalidDensityMatrix(format!(
                "Hermiticity violated by {dev:e}"
            )));
        }
        let dm = Self {
            rho: rho.hermitian_part(),
        };
        let min = dm.min_eigenvalue()?;
        if min < -Self::PSD_TOL {
            return Err(LindbladError::InvalidDensityMatrix(format!(
                "negative eigenvalue {min:e}"
            )));
        }
        Ok(dm)
    }

    pub fn pure(level: Level) -> Self {
        Self {
            rho: ComplexMatrix::basis_projector(N_LEVELS, level.index(), level.index()),
        }
    }

    pub fn maximally_mixed() -> Self {
        Self {
            rho: ComplexMatrix::identity(N_LEVELS).scale_real(1.0 / N_LEVELS as f64),
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.rho
    }

    pub fn population(&self, level: Level) -> f64 {
        let i = level.index();
        self.rho[(i, i)].re
    }

    pub fn populations(&self) -> [f64; N_LEVELS] {
        let mut out = [0.0; N_LEVELS];
        for (i, p) in out.iter_mut().enumerate() {
            *p = self.rho[(i, i)].re;
        }
        out
    }

    pub fn min_eigenvalue(&self) -> Result<f64, LindbladError> {
        Ok(eig_hermitian(&self.rho)?.values[0])
    }

    /// Half the trace norm of the difference.
    pub fn trace_distance(&self, other: &Self) -> Result<f64, LindbladError> {
        let diff = (&self.rho - &other.rho).hermitian_part();
        let eig = eig_hermitian(&diff)?;
        Ok(0.5 * eig.values.iter().map(|v| v.abs()).sum::<f64>())
    }

    /// Normalizes the trace and projects onto the Hermitian part without
    /// checking positivity; for solver outputs whose positivity is a tested
    /// property rather than a runtime check.
    fn from_unnormalized(rho: ComplexMatrix) -> Self {
        let tr = rho.trace();
        Self {
            rho: rho.scale(ONE / tr).hermitian_part(),
        }
    }
}

/// `vec(rho)` with row-major stacking.
pub fn vectorize(rho: &ComplexMatrix) -> Vec<Complex64> {
    rho.as_slice().to_vec()
}

pub fn unvectorize(v: &[Complex64]) -> ComplexMatrix {
    let n = (v.len() as f64).sqrt().round() as usize;
    ComplexMatrix::from_vec(n, v.to_vec())
}

#[derive(Debug, Clone)]
pub struct Liouvillian {
    mat: ComplexMatrix,
}

impl Liouvillian {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix, LindbladError> {
        let n = self.mat.dim();
        if rho.dim() * rho.dim() != n {
            return Err(LindbladError::WrongDimension {
                expected: N_LEVELS,
                got: rho.dim(),
            });
        }
        let v = rho.as_slice();
        let m = self.mat.as_slice();
        let out: Vec<Complex64> = (0..n)
            .map(|r| m[r * n..(r + 1) * n].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect();
        Ok(ComplexMatrix::from_vec(rho.dim(), out))
    }

    /// Max absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        let n = self.mat.dim();
        let m = self.mat.as_slice();
        (0..n)
            .map(|r| m[r * n..(r + 1) * n].iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `max_col |sum_i L[(i,i), col]|`; zero for a trace-preserving generator.
    pub fn trace_leakage(&self) -> f64 {
        let n = self.mat.dim();
        let d = (n as f64).sqrt().round() as usize;
        (0..n)
            .map(|col| {
                (0..d)
                    .map(|i| self.mat[(i * d + i, col)])
                    .sum::<Complex64>()
                    .norm()
            })
            .fold(0.0, f64::max)
    }
}

fn check_operator(h: &ComplexMatrix) -> Result<(), LindbladError> {
    if h.dim() != N_LEVELS {
        return Err(LindbladError::WrongDimension {
            expected: N_LEVELS,
            got: h.dim(),
        });
    }
    Ok(())
}

/// `L vec(rho) = vec(-i 2pi [H, rho] + sum_k r_k (A rho A^dag - {A^dag A, rho}/2))`.
///
/// `h` is in MHz; the factor `2 pi` turns it into rad/us to match the rates.
pub fn build_liouvillian(
    h: &ComplexMatrix,
    jumps: &[JumpOperator],
) -> Result<Liouvillian, LindbladError> {
    check_operator(h)?;
    let deviation = h.hermitian_deviation();
    if deviation > crate::spin_algebra::HERMITIAN_TOL * h.max_abs().max(1.0) {
        return Err(LinalgError::NotHermitian { deviation }.into());
    }
    let id = ComplexMatrix::identity(N_LEVELS);
    let coherent = Complex64::new(0.0, -2.0 * PI);
    let mut mat = ComplexMatrix::zeros(LIOUVILLE_DIM);
    mat.add_scaled(coherent, &kron(h, &id))?;
    mat.add_scaled(-coherent, &kron(&id, &h.transpose()))?;
    for jump in jumps {
        check_operator(&jump.op)?;
        let r = Complex64::new(jump.rate, 0.0);
        let ada = &jump.op.dagger() * &jump.op;
        mat.add_scaled(r, &kron(&jump.op, &jump.op.conj()))?;
        mat.add_scaled(-0.5 * r, &kron(&ada, &id))?;
        mat.add_scaled(-0.5 * r, &kron(&id, &ada.transpose()))?;
    }
    Ok(Liouvillian { mat })
}

/// The master-equation right-hand side evaluated directly on `rho`.
pub fn master_rhs(h: &ComplexMatrix, jumps: &[JumpOperator], rho: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::commutator(h, rho)
        .expect("dimension checked by caller")
        .scale(Complex64::new(0.0, -2.0 * PI));
    for jump in jumps {
        let a = &jump.op;
        let ad = a.dagger();
        let ada = &ad * a;
        let sandwich = &(a * rho) * &ad;
        let anti = &(&ada * rho) + &(rho * &ada);
        let r = Complex64::new(jump.rate, 0.0);
        out.add_scaled(r, &sandwich).expect("same dim");
        out.add_scaled(-0.5 * r, &anti).expect("same dim");
    }
    out
}

/// Null vector of a square matrix by Gaussian elimination with full pivoting.
///
/// Returns the vector (with free component 1) and the numerical nullity.
/// A numerically full-rank input yields the direction of its smallest pivot.
pub(crate) fn null_vector(a: &ComplexMatrix) -> Result<Vec<Complex64>, LindbladError> {
    let n = a.dim();
    let mut m = a.as_slice().to_vec();
    let mut col_perm: Vec<usize> = (0..n).collect();
    let tol = NULL_PIVOT_TOL * a.max_abs();
    let mut rank = 0;
    for k in 0..n {
        let (mut pi, mut pj, mut best) = (k, k, -1.0);
        for i in k..n {
            for j in k..n {
                let v = m[i * n + j].norm();
                if v > best {
                    best = v;
                    pi = i;
                    pj = j;
                }
            }
        }
        if best <= tol {
            break;
        }
        rank += 1;
        if pi != k {
            for j in 0..n {
                m.swap(k * n + j, pi * n + j);
            }
        }
        if pj != k {
            for i in 0..n {
                m.swap(i * n + k, i * n + pj);
            }
            col_perm.swap(k, pj);
        }
        let pivot = m[k * n + k];
        for i in k + 1..n {
            let f = m[i * n + k] / pivot;
            if f == ZERO {
                continue;
            }
            m[i * n + k] = ZERO;
            for j in k + 1..n {
                let t = m[k * n + j];
                m[i * n + j] -= f * t;
            }
        }
    }
    let nullity = n - rank;
    if nullity > 1 {
        return Err(LindbladError::DegenerateSteadyState { nullity });
    }
    let rank = n - 1;
    let mut x = vec![ZERO; n];
    x[n - 1] = ONE;
    for k in (0..rank).rev() {
        let s: Complex64 = (k + 1..n).map(|j| m[k * n + j] * x[j]).sum();
        x[k] = -s / m[k * n + k];
    }
    let mut out = vec![ZERO; n];
    for (k, &c) in col_perm.iter().enumerate() {
        out[c] = x[k];
    }
    Ok(out)
}

pub fn steady_state(l: &Liouvillian) -> Result<DensityMatrix, LindbladError> {
    let v = null_vector(&l.mat)?;
    Ok(DensityMatrix::from_unnormalized(unvectorize(&v)))
}

/// One RK4 step of `d rho/dt = f(t, rho)`.
fn rk4_step<F>(f: &F, t: f64, dt: f64, rho: &ComplexMatrix) -> ComplexMatrix
where
    F: Fn(f64, &ComplexMatrix) -> ComplexMatrix,
{
    let half = Complex64::new(0.5 * dt, 0.0);
    let k1 = f(t, rho);
    let mut y = rho.clone();
    y.add_scaled(half, &k1).expect("same dim");
    let k2 = f(t + 0.5 * dt, &y);
    let mut y = rho.clone();
    y.add_scaled(half, &k2).expect("same dim");
    let k3 = f(t + 0.5 * dt, &y);
    let mut y = rho.clone();
    y.add_scaled(Complex64::new(dt, 0.0), &k3).expect("same dim");
    let k4 = f(t + dt, &y);
    let mut out = rho.clone();
    let w = dt / 6.0;
    out.add_scaled(Complex64::new(w, 0.0), &k1).expect("same dim");
    out.add_scaled(Complex64::new(2.0 * w, 0.0), &k2).expect("same dim");
    out.add_scaled(Complex64::new(2.0 * w, 0.0), &k3).expect("same dim");
    out.add_scaled(Complex64::new(w, 0.0), &k4).expect("same dim");
    out
}

/// Superoperator of a map `rho -> step(rho)`, built column by column from the
/// images of the basis matrices `|i><j|`.
fn superoperator_of<S>(step: S) -> ComplexMatrix
where
    S: Fn(&ComplexMatrix) -> ComplexMatrix,
{
    let mut sup = ComplexMatrix::zeros(LIOUVILLE_DIM);
    for i in 0..N_LEVELS {
        for j in 0..N_LEVELS {
            let col = i * N_LEVELS + j;
            let image = step(&ComplexMatrix::basis_projector(N_LEVELS, i, j));
            for (row, z) in image.as_slice().iter().enumerate() {
                sup[(row, col)] = *z;
            }
        }
    }
    sup
}

fn apply_super(sup: &ComplexMatrix, rho: &ComplexMatrix) -> ComplexMatrix {
    let n = sup.dim();
    let s = sup.as_slice();
    let v = rho.as_slice();
    let out = (0..n)
        .map(|r| s[r * n..(r + 1) * n].iter().zip(v).map(|(a, b)| a * b).sum())
        .collect();
    ComplexMatrix::from_vec(rho.dim(), out)
}

// An RK4 step of a traceless generator preserves the trace exactly, i.e.
// `vec(I)^T P = vec(I)^T`. Restoring that row sum after each product keeps
// roundoff from accumulating along the marginal trace direction, which would
// otherwise grow like the step count. Equivalent to integrating with rho_00
// eliminated in favour of the trace.
fn pin_trace(p: &mut ComplexMatrix) {
    let n = LIOUVILLE_DIM;
    let diag = |i: usize| i * (N_LEVELS + 1);
    let data = p.as_mut_slice();
    for col in 0..n {
        let target = if (0..N_LEVELS).any(|i| diag(i) == col) { ONE } else { ZERO };
        let sum: Complex64 = (0..N_LEVELS).map(|i| data[diag(i) * n + col]).sum();
        data[col] += target - sum;
    }
}

fn trace_preserving_power(base: &ComplexMatrix, mut exp: u64) -> ComplexMatrix {
    let mut result = ComplexMatrix::identity(base.dim());
    let mut b = base.clone();
    pin_trace(&mut b);
    while exp > 0 {
        if exp & 1 == 1 {
            result = &result * &b;
            pin_trace(&mut result);
        }
        exp >>= 1;
        if exp > 0 {
            b = &b * &b;
            pin_trace(&mut b);
        }
    }
    result
}

/// Fourth-order Runge-Kutta integration of the master equation to `t_final`.
///
/// The generator is time independent, so `n` RK4 steps are the `n`-th power of
/// the one-step map. That map is assembled by stepping each basis matrix with
/// the direct right-hand side, then raised to the required power by repeated
/// squaring; the result is the same RK4 trajectory endpoint.
/// The step is shrunk to `t_final / ceil(t_final / dt)`.
pub fn evolve(
    h: &ComplexMatrix,
    jumps: &[JumpOperator],
    rho0: &DensityMatrix,
    t_final: f64,
    dt: f64,
) -> Result<DensityMatrix, LindbladError> {
    check_operator(h)?;
    if t_final <= 0.0 {
        return Ok(rho0.clone());
    }
    let norm = build_liouvillian(h, jumps)?.inf_norm();
    if dt * norm >= RK4_STABILITY_BOUND {
        return Err(LindbladError::StepTooLarge {
            product: dt * norm,
        });
    }
    let steps = (t_final / dt).ceil().max(1.0) as u64;
    let h_step = t_final / steps as f64;
    let rhs = |_t: f64, rho: &ComplexMatrix| master_rhs(h, jumps, rho);
    let one_step = superoperator_of(|basis| rk4_step(&rhs, 0.0, h_step, basis));
    let propagator = trace_preserving_power(&one_step, steps);
    Ok(DensityMatrix {
        rho: apply_super(&propagator, &rho0.rho).hermitian_part(),
    })
}

/// Periodic steady state of a time-periodic master equation.
#[derive(Debug, Clone)]
pub struct PeriodicState {
    /// State at the start of each period.
    pub start: DensityMatrix,
    /// Time average over one period.
    pub mean: DensityMatrix,
}

/// Finds the periodic orbit of `d rho/dt = L(t) rho` with `H(t)` of period
/// `period` by RK4 over `steps` sub-steps per period: the one-period map is
/// built from basis matrices, its fixed point is taken as the orbit start, and
/// the orbit is then integrated once more to form the period average.
pub fn periodic_steady_state<H>(
    hamiltonian_at: H,
    jumps: &[JumpOperator],
    period: f64,
    steps: usize,
) -> Result<PeriodicState, LindbladError>
where
    H: Fn(f64) -> ComplexMatrix,
{
    let dt = period / steps as f64;
    let rhs = |t: f64, rho: &ComplexMatrix| master_rhs(&hamiltonian_at(t), jumps, rho);
    let one_period = superoperator_of(|basis| {
        let mut rho = basis.clone();
        for k in 0..steps {
            rho = rk4_step(&rhs, k as f64 * dt, dt, &rho);
        }
        rho
    });
    let fixed = &one_period - &ComplexMatrix::identity(LIOUVILLE_DIM);
    let start = DensityMatrix::from_unnormalized(unvectorize(&null_vector(&fixed)?));

    // trapezoid rule on a periodic integrand
    let mut acc = ComplexMatrix::zeros(N_LEVELS);
    let mut rho = start.rho.clone();
    for k in 0..steps {
        acc.add_scaled(ONE, &rho)?;
        rho = rk4_step(&rhs, k as f64 * dt, dt, &rho);
    }
    let mean = DensityMatrix::from_unnormalized(acc);
    Ok(PeriodicState { start, mean })
}

/// Radiative emission rate `k_d * (e0 + e+ + e-)`, arbitrary units.
pub fn photoluminescence(rho: &DensityMatrix, params: &DefectParams) -> f64 {
    let excited = [Level::E0, Level::EPlus, Level::EMinus]
        .iter()
        .map(|&l| rho.population(l))
        .sum::<f64>();
    params.rates.k_d * excited
}
