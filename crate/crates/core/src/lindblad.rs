//! Drift/diffusion description of the charging dynamics.
//!
//! The battery is a harmonic mode `H0 = mu (x^2 + p^2) / 2` driven by the
//! parametric potential `-(lambda/2)(xp + px)` and damped by a squeezed
//! thermal bath with jump operators `L+ ~ a cosh r + a^dag sinh r e^{i theta}`
//! and `L- ~ a^dag cosh r + a sinh r e^{i theta}`. The covariance matrix then
//! obeys `d cov/dt = A cov + cov A^T + D`.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gaussian::{max_abs, omega, symplectic_spectrum, GaussianState, SymplecticSpectrum, TOL_PHYS};

/// Residual bound accepted from the Lyapunov solver, relative to `|D|`.
const LYAPUNOV_RESIDUAL_TOL: f64 = 1e-10;

/// Drift eigenvalues with real part above `-STABILITY_TOL * scale` are not
/// counted as decaying.
const STABILITY_TOL: f64 = 1e-12;

/// Charging Hamiltonian parameters and the window in which the drive is on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSpec {
    pub mu: f64,
    pub lambda: f64,
    pub window: (f64, f64),
}

impl DriveSpec {
    pub fn new(mu: f64, lambda: f64, window: (f64, f64)) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::InvalidParameter {
                name: "mu",
                value: mu,
                reason: "must be finite and positive",
            });
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter {
                name: "lambda",
                value: lambda,
                reason: "must be finite and non-negative",
            });
        }
        if !(window.0 < window.1) || !window.0.is_finite() || window.0 < 0.0 {
            return Err(Error::InvalidParameter {
                name: "tau_a",
                value: window.0,
                reason: "window must satisfy 0 <= tau_a < tau_b",
            });
        }
        Ok(Self { mu, lambda, window })
    }

    /// Drive switched on at `t = 0` and never switched off.
    pub fn constant(mu: f64, lambda: f64) -> Result<Self> {
        Self::new(mu, lambda, (0.0, f64::INFINITY))
    }

    pub fn is_on(&self, t: f64) -> bool {
        t >= self.window.0 && t <= self.window.1
    }
}

/// Squeezed thermal bath plus the occupation of the preparation bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathSpec {
    pub gamma: f64,
    pub n_b: f64,
    pub r_b: f64,
    pub theta_b: f64,
    pub n_a: f64,
}

impl BathSpec {
    /// Validates the bounds; `theta_b` is reduced into `[0, 2 pi)`.
    pub fn new(gamma: f64, n_b: f64, r_b: f64, theta_b: f64, n_a: f64) -> Result<Self> {
        for (name, value) in [("gamma", gamma), ("N_B", n_b), ("r_B", r_b), ("N_A", n_a)] {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be finite and non-negative",
                });
            }
        }
        if !theta_b.is_finite() {
            return Err(Error::InvalidParameter {
                name: "theta_B",
                value: theta_b,
                reason: "must be finite",
            });
        }
        Ok(Self {
            gamma,
            n_b,
            r_b,
            theta_b: theta_b.rem_euclid(TAU),
            n_a,
        })
    }

    /// No bath at all (`gamma = 0`).
    pub fn closed(n_a: f64) -> Result<Self> {
        Self::new(0.0, 0.0, 0.0, 0.0, n_a)
    }
}

/// Jump operators `L_k = b_k^T r` stored column-wise as a `2n x m` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LindbladSpec {
    b: DMatrix<Complex<f64>>,
}

impl LindbladSpec {
    pub fn new(b: DMatrix<Complex<f64>>) -> Result<Self> {
        if b.nrows() == 0 || !b.nrows().is_multiple_of(2) {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: b.nrows(),
            });
        }
        Ok(Self { b })
    }

    pub fn b_matrix(&self) -> &DMatrix<Complex<f64>> {
        &self.b
    }

    pub fn n_modes(&self) -> usize {
        self.b.nrows() / 2
    }
}

/// `H_s` in `H = r^T H_s r / 2`: `mu 1 - lambda sigma_x` while the drive is on.
pub fn hamiltonian_matrix(drive: &DriveSpec, drive_on: bool) -> DMatrix<f64> {
    let l = if drive_on { drive.lambda } else { 0.0 };
    DMatrix::from_row_slice(2, 2, &[drive.mu, -l, -l, drive.mu])
}

/// Quadrature coefficients of `L+` and `L-`.
///
/// The rates are `gamma (N_B + 1)` and `gamma N_B`, so the amplitude decays
/// at `gamma / 2` and a thermal bath relaxes the covariance at rate `gamma`.
pub fn jump_vectors(bath: &BathSpec) -> LindbladSpec {
    let i = Complex::new(0.0, 1.0);
    // a = (x + i p)/sqrt2, a^dag = (x - i p)/sqrt2
    let a = [Complex::new(FRAC_1_SQRT_2, 0.0), i * FRAC_1_SQRT_2];
    let ad = [Complex::new(FRAC_1_SQRT_2, 0.0), -i * FRAC_1_SQRT_2];
    let phase = Complex::from_polar(1.0, bath.theta_b);
    let (ch, sh) = (bath.r_b.cosh(), bath.r_b.sinh());
    let amp_plus = (bath.gamma * (bath.n_b + 1.0)).sqrt();
    let amp_minus = (bath.gamma * bath.n_b).sqrt();
    let mut b = DMatrix::zeros(2, 2);
    for q in 0..2 {
        b[(q, 0)] = (a[q] * ch + ad[q] * sh * phase) * amp_plus;
        b[(q, 1)] = (ad[q] * ch + a[q] * sh * phase) * amp_minus;
    }
    LindbladSpec { b }
}

/// Drift and diffusion matrices of the covariance flow.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftDiffusion {
    drift: DMatrix<f64>,
    diffusion: DMatrix<f64>,
}

impl DriftDiffusion {
    pub fn new(drift: DMatrix<f64>, diffusion: DMatrix<f64>) -> Result<Self> {
        let dim = drift.nrows();
        if dim == 0 || !dim.is_multiple_of(2) || !drift.is_square() {
            return Err(Error::DimensionMismatch {
                expected: 2 * (dim / 2).max(1),
                found: dim,
            });
        }
        if diffusion.shape() != drift.shape() {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: diffusion.nrows(),
            });
        }
        let asym = max_abs(&(&diffusion - diffusion.transpose()));
        if asym > 1e-12 * max_abs(&diffusion).max(1.0) {
            return Err(Error::NotSymmetric(asym));
        }
        let diffusion = (&diffusion + diffusion.transpose()) * 0.5;
        Ok(Self { drift, diffusion })
    }

    /// Builds `(A, D)` from a quadratic Hamiltonian matrix and jump vectors:
    /// `A = Omega H - Omega Im(B B^dag)`, `D = 2 Omega Re(B B^dag) Omega^T`.
    pub fn from_generators(h_s: &DMatrix<f64>, lindblad: &LindbladSpec) -> Result<Self> {
        let dim = h_s.nrows();
        if lindblad.b.nrows() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: lindblad.b.nrows(),
            });
        }
        let om = omega(dim / 2);
        let bb = &lindblad.b * lindblad.b.adjoint();
        let re = bb.map(|z| z.re);
        let im = bb.map(|z| z.im);
        let drift = &om * h_s - &om * im;
        let diffusion = &om * re * om.transpose() * 2.0;
        Self::new(drift, diffusion)
    }

    /// Uncoupled composition of independent systems.
    pub fn direct_sum(parts: &[DriftDiffusion]) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidModeCount(0));
        }
        let dim: usize = parts.iter().map(|p| p.drift.nrows()).sum();
        let mut drift = DMatrix::zeros(dim, dim);
        let mut diffusion = DMatrix::zeros(dim, dim);
        let mut at = 0;
        for p in parts {
            let d = p.drift.nrows();
            drift.view_mut((at, at), (d, d)).copy_from(&p.drift);
            diffusion.view_mut((at, at), (d, d)).copy_from(&p.diffusion);
            at += d;
        }
        Ok(Self { drift, diffusion })
    }

    pub fn drift(&self) -> &DMatrix<f64> {
        &self.drift
    }

    pub fn diffusion(&self) -> &DMatrix<f64> {
        &self.diffusion
    }

    pub fn n_modes(&self) -> usize {
        self.drift.nrows() / 2
    }

    pub fn dim(&self) -> usize {
        self.drift.nrows()
    }
}

pub fn drift_diffusion(drive: &DriveSpec, bath: &BathSpec, drive_on: bool) -> DriftDiffusion {
    let h = hamiltonian_matrix(drive, drive_on);
    DriftDiffusion::from_generators(&h, &jump_vectors(bath)).expect("single-mode generators have consistent shapes")
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    /// Every drift eigenvalue has negative real part: a unique, attracting
    /// steady state exists.
    pub stable: bool,
    /// Trajectories stay bounded: `stable`, or closed dynamics with `H_s > 0`.
    pub bounded: bool,
    /// `mu^2 - lambda^2 - gamma^2/4`, the printed Routh-Hurwitz expression
    /// for one mode.
    pub margin: Option<f64>,
    pub max_re_eig: f64,
    pub eigenvalues: Vec<Complex<f64>>,
}

impl StabilityReport {
    pub fn from_drift(drift: &DMatrix<f64>) -> Self {
        let eigenvalues: Vec<Complex<f64>> = drift.complex_eigenvalues().iter().copied().collect();
        let max_re_eig = eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        let stable = max_re_eig < -STABILITY_TOL * max_abs(drift).max(1.0);
        Self {
            stable,
            bounded: stable,
            margin: None,
            max_re_eig,
            eigenvalues,
        }
    }

    /// Whether the sign of the printed margin matches the eigenvalue test.
    pub fn margin_agrees(&self) -> Option<bool> {
        self.margin.map(|m| (m > 0.0) == self.stable)
    }
}

/// Stability of the charging dynamics (drive on).
pub fn stability_check(drive: &DriveSpec, bath: &BathSpec) -> StabilityReport {
    let dd = drift_diffusion(drive, bath, true);
    let mut report = StabilityReport::from_drift(dd.drift());
    report.margin = Some(drive.mu.powi(2) - drive.lambda.powi(2) - bath.gamma.powi(2) / 4.0);
    if bath.gamma == 0.0 && drive.mu > drive.lambda {
        // H_s > 0: purely imaginary drift spectrum, bounded oscillation
        report.bounded = true;
    }
    report
}

/// `D >= 0` and `det D >= det(Omega^T A - A^T Omega)` for one mode.
pub fn bona_fide_check(dd: &DriftDiffusion) -> Result<bool> {
    if dd.n_modes() != 1 {
        return Err(Error::Unsupported("bona fide inequality is single-mode only"));
    }
    let om = omega(1);
    let a = dd.drift();
    let rhs = (om.transpose() * a - a.transpose() * &om).determinant();
    let lhs = dd.diffusion().determinant();
    let scale = max_abs(dd.diffusion()).max(max_abs(a)).powi(2).max(1.0);
    Ok(dd.diffusion().trace() >= -1e-12 * scale && lhs >= rhs - 1e-12 * scale)
}

/// `max |A cov + cov A^T + D|`.
pub fn lyapunov_residual(dd: &DriftDiffusion, cov: &DMatrix<f64>) -> f64 {
    let a = dd.drift();
    max_abs(&(a * cov + cov * a.transpose() + dd.diffusion()))
}

/// Solves `A cov + cov A^T + D = 0` by vectorization.
pub fn steady_state(dd: &DriftDiffusion) -> Result<GaussianState> {
    let report = StabilityReport::from_drift(dd.drift());
    if !report.stable {
        return Err(Error::Unstable(report.max_re_eig));
    }
    let cov = solve_lyapunov(dd.drift(), dd.diffusion())?;
    let res = lyapunov_residual(dd, &cov);
    if !(res <= LYAPUNOV_RESIDUAL_TOL * max_abs(dd.diffusion()).max(1.0)) {
        return Err(Error::SingularSystem);
    }
    GaussianState::from_cov(cov)
}

fn solve_lyapunov(a: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    // column-major vec: vec(A X) = (I (x) A) vec X, vec(X A^T) = (A (x) I) vec X
    let system = eye.kronecker(a) + a.kronecker(&eye);
    let rhs = DVector::from_iterator(n * n, d.iter().map(|x| -x));
    let lu = system.lu();
    if !lu.is_invertible() {
        return Err(Error::SingularSystem);
    }
    let x = lu.solve(&rhs).ok_or(Error::SingularSystem)?;
    let x = DMatrix::from_column_slice(n, n, x.as_slice());
    Ok((&x + x.transpose()) * 0.5)
}

/// How `evolve` advances the covariance matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Propagator {
    /// Matrix-exponential propagation, exact up to rounding.
    Exact,
    /// Classical fourth-order Runge-Kutta with at most `dt` per substep.
    Rk4 { dt: f64 },
}

impl Propagator {
    /// Default RK4 step `1e-3 / max(mu, lambda, gamma, 1)`.
    pub fn default_rk4(drive: &DriveSpec, bath: &BathSpec) -> Self {
        let scale = drive.mu.max(drive.lambda).max(bath.gamma).max(1.0);
        Propagator::Rk4 { dt: 1e-3 / scale }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<GaussianState>,
    pub spectra: Vec<SymplecticSpectrum>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&GaussianState> {
        self.states.last()
    }
}

/// Uniform grid `0, dt, 2 dt, ...` up to and including `horizon` (rounded).
pub fn uniform_grid(horizon: f64, dt: f64) -> Vec<f64> {
    let steps = (horizon / dt).round().max(1.0) as usize;
    (0..=steps).map(|k| k as f64 * dt).collect()
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() || t_grid[0] != 0.0 || t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidTimeGrid);
    }
    Ok(())
}

fn checked_state(mean: DVector<f64>, cov: DMatrix<f64>, t: f64) -> Result<(GaussianState, SymplecticSpectrum)> {
    if cov.iter().chain(mean.iter()).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite(t));
    }
    let cov = (&cov + cov.transpose()) * 0.5;
    let spectrum = symplectic_spectrum(&cov)?;
    if spectrum.min() < 1.0 - TOL_PHYS * max_abs(&cov).max(1.0) {
        return Err(Error::Unphysical(spectrum.min()));
    }
    Ok((GaussianState::new(mean, cov)?, spectrum))
}

/// Advances `(mean, cov)` in place by a time step.
type StepFn = dyn FnMut(&mut DVector<f64>, &mut DMatrix<f64>, f64);

/// Integrates `d mean/dt = A mean`, `d cov/dt = A cov + cov A^T + D` on `t_grid`
/// (increasing, starting at 0).
pub fn evolve(initial: &GaussianState, dd: &DriftDiffusion, t_grid: &[f64], method: Propagator) -> Result<Trajectory> {
    check_grid(t_grid)?;
    if initial.cov().nrows() != dd.dim() {
        return Err(Error::DimensionMismatch {
            expected: dd.dim(),
            found: initial.cov().nrows(),
        });
    }
    let mut stepper: Box<StepFn> = match method {
        Propagator::Exact => Box::new(ExactStepper::new(dd)?.into_fn()),
        Propagator::Rk4 { dt } => {
            if !(dt > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "dt",
                    value: dt,
                    reason: "must be positive",
                });
            }
            let rk = Rk4::new(dd, dt);
            Box::new(move |m, c, h| rk.advance(m, c, h))
        }
    };
    let mut mean = initial.mean().clone();
    let mut cov = initial.cov().clone();
    let mut traj = Trajectory {
        times: Vec::with_capacity(t_grid.len()),
        states: Vec::with_capacity(t_grid.len()),
        spectra: Vec::with_capacity(t_grid.len()),
    };
    let mut prev = 0.0;
    for &t in t_grid {
        if t > prev {
            stepper(&mut mean, &mut cov, t - prev);
        }
        prev = t;
        let (state, spectrum) = checked_state(mean.clone(), cov.clone(), t)?;
        traj.times.push(t);
        traj.states.push(state);
        traj.spectra.push(spectrum);
    }
    Ok(traj)
}

/// Exact one-interval maps, cached by step length.
struct ExactStepper {
    a: DMatrix<f64>,
    d: DMatrix<f64>,
    steady: Option<DMatrix<f64>>,
    cache: Option<(f64, DMatrix<f64>, DMatrix<f64>)>,
}

impl ExactStepper {
    fn new(dd: &DriftDiffusion) -> Result<Self> {
        let steady = match steady_state(dd) {
            Ok(s) => Some(s.cov().clone()),
            Err(Error::Unstable(_)) | Err(Error::SingularSystem) => None,
            Err(e) => return Err(e),
        };
        Ok(Self {
            a: dd.drift().clone(),
            d: dd.diffusion().clone(),
            steady,
            cache: None,
        })
    }

    /// `(e^{A h}, Q(h))` with `Q(h) = int_0^h e^{A s} D e^{A^T s} ds`.
    fn maps(&mut self, h: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        if let Some((ch, f, q)) = &self.cache {
            if (ch - h).abs() <= 1e-14 * h.max(1.0) {
                return (f.clone(), q.clone());
            }
        }
        let n = self.a.nrows();
        let (f, q) = if self.steady.is_some() {
            ((&self.a * h).exp(), DMatrix::zeros(n, n))
        } else {
            // Van Loan: exp([[-A, D], [0, A^T]] h) = [[., F12], [0, F22]],
            // F22 = e^{A^T h}, Q = F22^T F12
            let mut c = DMatrix::zeros(2 * n, 2 * n);
            c.view_mut((0, 0), (n, n)).copy_from(&(-&self.a));
            c.view_mut((0, n), (n, n)).copy_from(&self.d);
            c.view_mut((n, n), (n, n)).copy_from(&self.a.transpose());
            let e = (c * h).exp();
            let f22 = e.view((n, n), (n, n)).into_owned();
            let f12 = e.view((0, n), (n, n)).into_owned();
            let q = f22.transpose() * f12;
            (f22.transpose(), (&q + q.transpose()) * 0.5)
        };
        self.cache = Some((h, f.clone(), q.clone()));
        (f, q)
    }

    fn into_fn(mut self) -> impl FnMut(&mut DVector<f64>, &mut DMatrix<f64>, f64) {
        move |mean, cov, h| {
            let (f, q) = self.maps(h);
            *mean = &f * &*mean;
            match &self.steady {
                Some(s) => *cov = &f * (&*cov - s) * f.transpose() + s,
                None => *cov = &f * &*cov * f.transpose() + q,
            }
        }
    }
}

/// Fixed-step RK4 on flat column-major buffers.
struct Rk4 {
    n: usize,
    a: Vec<f64>,
    d: Vec<f64>,
    dt: f64,
}

impl Rk4 {
    fn new(dd: &DriftDiffusion, dt: f64) -> Self {
        Self {
            n: dd.dim(),
            a: dd.drift().as_slice().to_vec(),
            d: dd.diffusion().as_slice().to_vec(),
            dt,
        }
    }

    #[inline]
    fn a(&self, i: usize, j: usize) -> f64 {
        self.a[i + j * self.n]
    }

    /// `out = A X + X A^T + D`, `dm = A m`.
    fn rhs(&self, m: &[f64], x: &[f64], dm: &mut [f64], out: &mut [f64], ax: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            dm[i] = (0..n).map(|k| self.a(i, k) * m[k]).sum();
            for j in 0..n {
                ax[i + j * n] = (0..n).map(|k| self.a(i, k) * x[k + j * n]).sum();
            }
        }
        for i in 0..n {
            for j in 0..n {
                out[i + j * n] = ax[i + j * n] + ax[j + i * n] + self.d[i + j * n];
            }
        }
    }

    fn advance(&self, mean: &mut DVector<f64>, cov: &mut DMatrix<f64>, span: f64) {
        let n = self.n;
        let steps = (span / self.dt).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        let mut x = cov.as_slice().to_vec();
        let mut m = mean.as_slice().to_vec();
        let nn = n * n;
        let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; nn], vec![0.0; nn], vec![0.0; nn], vec![0.0; nn]);
        let (mut l1, mut l2, mut l3, mut l4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        let mut tmp = vec![0.0; nn];
        let mut tm = vec![0.0; n];
        let mut ax = vec![0.0; nn];
        for _ in 0..steps {
            self.rhs(&m, &x, &mut l1, &mut k1, &mut ax);
            for i in 0..nn {
                tmp[i] = x[i] + 0.5 * h * k1[i];
            }
            for i in 0..n {
                tm[i] = m[i] + 0.5 * h * l1[i];
            }
            self.rhs(&tm, &tmp, &mut l2, &mut k2, &mut ax);
            for i in 0..nn {
                tmp[i] = x[i] + 0.5 * h * k2[i];
            }
            for i in 0..n {
                tm[i] = m[i] + 0.5 * h * l2[i];
            }
            self.rhs(&tm, &tmp, &mut l3, &mut k3, &mut ax);
            for i in 0..nn {
                tmp[i] = x[i] + h * k3[i];
            }
            for i in 0..n {
                tm[i] = m[i] + h * l3[i];
            }
            self.rhs(&tm, &tmp, &mut l4, &mut k4, &mut ax);
            for i in 0..nn {
                x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            for i in 0..n {
                m[i] += h / 6.0 * (l1[i] + 2.0 * l2[i] + 2.0 * l3[i] + l4[i]);
            }
        }
        cov.as_mut_slice().copy_from_slice(&x);
        mean.as_mut_slice().copy_from_slice(&m);
    }
}

/// Piecewise evolution following the drive window: free rotation before
/// `tau_A`, drive plus bath inside the window, bare oscillator plus bath after
/// `tau_B`. `t_grid` is absolute time starting at 0.
pub fn evolve_charging(
    initial: &GaussianState,
    drive: &DriveSpec,
    bath: &BathSpec,
    t_grid: &[f64],
    method: Propagator,
) -> Result<Trajectory> {
    check_grid(t_grid)?;
    let (tau_a, tau_b) = drive.window;
    let free = drift_diffusion(drive, &BathSpec::closed(bath.n_a)?, false);
    let on = drift_diffusion(drive, bath, true);
    let off = drift_diffusion(drive, bath, false);
    let segment = |t: f64| -> (&DriftDiffusion, f64) {
        if t < tau_a {
            (&free, tau_a)
        } else if t < tau_b {
            (&on, tau_b)
        } else {
            (&off, f64::INFINITY)
        }
    };

    let (first, spectrum) = checked_state(initial.mean().clone(), initial.cov().clone(), 0.0)?;
    let mut live = first.clone();
    let mut out = Trajectory {
        times: vec![0.0],
        states: vec![first],
        spectra: vec![spectrum],
    };
    let mut now = 0.0;
    for &target in &t_grid[1..] {
        let mut last_spectrum = None;
        while now < target {
            let (dd, boundary) = segment(now);
            let next = boundary.min(target);
            let mut step = evolve(&live, dd, &[0.0, next - now], method)?;
            live = step.states.pop().unwrap();
            last_spectrum = step.spectra.pop();
            now = next;
        }
        out.times.push(target);
        out.states.push(live.clone());
        out.spectra.push(last_spectrum.unwrap());
    }
    Ok(out)
}

/// Closed-system energy gain `mu lambda^2 (1+2N_A) sinh^2(t k)/k^2`,
/// `k^2 = lambda^2 - mu^2`, continued through `k^2 <= 0`.
pub fn closed_energy_analytic(t: f64, drive: &DriveSpec, n_a: f64) -> f64 {
    let (mu, l) = (drive.mu, drive.lambda);
    let z = l * l - mu * mu;
    let zt2 = z * t * t;
    let shape = if zt2.abs() < 1e-4 {
        // sinh^2(sqrt(z) t)/z as a series in z t^2
        t * t * (1.0 + zt2 / 3.0 + 2.0 * zt2 * zt2 / 45.0)
    } else if z > 0.0 {
        (z.sqrt() * t).sinh().powi(2) / z
    } else {
        ((-z).sqrt() * t).sin().powi(2) / (-z)
    };
    mu * l * l * (1.0 + 2.0 * n_a) * shape
}
