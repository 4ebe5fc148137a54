//! Fidelity, Bures geometry and the speed-limit estimate of charging power.

use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gaussian::{max_abs, omega, symplectic_eigenvalues, GaussianState, TOL_PHYS};
use crate::lindblad::Trajectory;

/// States closer than this (relative, max-norm) are treated as identical.
const SAME_STATE_TOL: f64 = 1e-12;

/// Symplectic eigenvalues this close to 1 count as pure. Fidelity has a square
/// root singularity at the pure boundary, so roundoff-level mixedness would
/// otherwise show up at the 1e-8 level.
const PURE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityBreakdown {
    /// Root fidelity `tr sqrt(sqrt(rho_a) rho_b sqrt(rho_a))`.
    pub fidelity: f64,
    /// `det((sigma_a + sigma_b)/2)`
    pub delta_cap: f64,
    /// `4 det((sigma_a + i Omega)/2) det((sigma_b + i Omega)/2)`
    pub lambda_cap: f64,
}

fn check_pair(a: &GaussianState, b: &GaussianState) -> Result<()> {
    if a.n_modes() != b.n_modes() {
        return Err(Error::DimensionMismatch {
            expected: a.n_modes(),
            found: b.n_modes(),
        });
    }
    for s in [a, b] {
        if s.mean().amax() > 0.0 {
            return Err(Error::Unsupported("fidelity is implemented for zero-mean states only"));
        }
        let nu = symplectic_eigenvalues(s)?.min();
        if nu < 1.0 - TOL_PHYS {
            return Err(Error::Unphysical(nu));
        }
    }
    Ok(())
}

fn same_state(a: &GaussianState, b: &GaussianState) -> bool {
    max_abs(&(a.cov() - b.cov())) <= SAME_STATE_TOL * max_abs(a.cov()).max(1.0)
}

/// `det((sigma + i Omega)/2)`, real and non-negative for physical states.
fn mixedness_det(s: &GaussianState) -> Result<f64> {
    let spectrum = symplectic_eigenvalues(s)?;
    Ok(spectrum
        .values()
        .iter()
        .map(|nu| {
            if nu - 1.0 <= PURE_TOL {
                0.0
            } else {
                (nu * nu - 1.0) / 4.0
            }
        })
        .product())
}

fn lambda_cap(a: &GaussianState, b: &GaussianState) -> Result<f64> {
    Ok(4.0 * mixedness_det(a)? * mixedness_det(b)?)
}

pub fn fidelity_single_mode(sigma_a: &GaussianState, sigma_b: &GaussianState) -> Result<FidelityBreakdown> {
    check_pair(sigma_a, sigma_b)?;
    if sigma_a.n_modes() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: sigma_a.n_modes(),
        });
    }
    let delta_cap = ((sigma_a.cov() + sigma_b.cov()) / 2.0).determinant();
    let lambda_cap = lambda_cap(sigma_a, sigma_b)?;
    let fidelity = if same_state(sigma_a, sigma_b) {
        1.0
    } else {
        let f2 = 1.0 / ((delta_cap + lambda_cap).sqrt() - lambda_cap.sqrt());
        f2.sqrt().min(1.0)
    };
    Ok(FidelityBreakdown {
        fidelity,
        delta_cap,
        lambda_cap,
    })
}

/// Fidelity between `n`-mode states via the auxiliary matrix
/// `sigma_aux = Omega^T ((sigma_a + sigma_b)/2)^-1 (Omega/4 + sigma_a Omega sigma_b / 4)`.
///
/// `F_tot^4 = det(2 (sqrt(1 + (sigma_aux Omega)^-2 / 4) + 1) sigma_aux)` only
/// depends on the eigenvalues `+-i nu_k` of `sigma_aux Omega`, and collapses to
/// `prod_k (2 nu_k + sqrt(4 nu_k^2 - 1))^2`. The `nu_k` are read off the
/// similar matrix `H^-1 (Omega + sigma_a Omega sigma_b) / 4` with
/// `H = (sigma_a + sigma_b)/2`. This avoids a matrix square root and the
/// degenerate spectrum of `(sigma_aux Omega)^-2`, which loses several digits
/// on strongly squeezed inputs.
pub fn fidelity_multimode(sigma_a: &GaussianState, sigma_b: &GaussianState) -> Result<FidelityBreakdown> {
    check_pair(sigma_a, sigma_b)?;
    let n = sigma_a.n_modes();
    let om = omega(n);
    let half_sum = (sigma_a.cov() + sigma_b.cov()) / 2.0;
    let delta_cap = half_sum.determinant();
    let lambda_cap = lambda_cap(sigma_a, sigma_b)?;
    let breakdown = |fidelity: f64| FidelityBreakdown {
        fidelity,
        delta_cap,
        lambda_cap,
    };
    if same_state(sigma_a, sigma_b) {
        return Ok(breakdown(1.0));
    }
    if !(delta_cap > 0.0) {
        return Err(Error::SingularFidelity);
    }
    // overlap with a pure state: F^2 = <psi|rho|psi> = det((sigma_a + sigma_b)/2)^-1/2
    if symplectic_eigenvalues(sigma_a)?.is_pure(PURE_TOL) || symplectic_eigenvalues(sigma_b)?.is_pure(PURE_TOL) {
        return Ok(breakdown(delta_cap.powf(-0.25).min(1.0)));
    }

    // work in the frame where the half sum is in Williamson normal form, which
    // keeps strongly squeezed pairs well conditioned
    let (a, b) = match williamson_frame(&half_sum) {
        Some(s_inv) => (
            &s_inv * sigma_a.cov() * s_inv.transpose(),
            &s_inv * sigma_b.cov() * s_inv.transpose(),
        ),
        None => (sigma_a.cov().clone(), sigma_b.cov().clone()),
    };
    let frame_sum = (&a + &b) / 2.0;
    let k = frame_sum
        .clone()
        .lu()
        .solve(&((&om + &a * &om * &b) / 4.0))
        .ok_or(Error::SingularFidelity)?;
    // each nu_k appears twice, so this is F_tot^4 itself
    let f_tot4: f64 = k
        .complex_eigenvalues()
        .iter()
        .map(|z| {
            let nu = z.norm();
            2.0 * nu + (4.0 * nu * nu - 1.0).max(0.0).sqrt()
        })
        .product();
    if !f_tot4.is_finite() || f_tot4 <= 0.0 {
        return Err(Error::SingularFidelity);
    }
    Ok(breakdown((f_tot4 / frame_sum.determinant()).powf(0.25).min(1.0)))
}

/// Symplectic `S^-1` with `S^-1 h S^-T` diagonal, for symmetric positive `h`.
/// Built from the real Schur form of `h^-1/2 Omega h^-1/2`; `None` if that
/// form does not come out as 2x2 rotation blocks.
fn williamson_frame(h: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let dim = h.nrows();
    let eig = h.clone().symmetric_eigen();
    if !(eig.eigenvalues.min() > 0.0) {
        return None;
    }
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|w| 1.0 / w.sqrt()));
    let h_inv_sqrt = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose();
    let (mut q, t) = (&h_inv_sqrt * omega(dim / 2) * &h_inv_sqrt)
        .try_schur(f64::EPSILON, 10_000)?
        .unpack();
    let scale = max_abs(&t);
    let mut weights = Vec::with_capacity(dim);
    for k in (0..dim).step_by(2) {
        let (w, w_low) = (t[(k, k + 1)], t[(k + 1, k)]);
        if !((w + w_low).abs() <= 1e-8 * scale && w.abs() > 0.0) {
            return None;
        }
        if w < 0.0 {
            q.swap_columns(k, k + 1);
        }
        weights.extend([w.abs().sqrt().recip(); 2]);
    }
    Some(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(weights)) * q.transpose() * h_inv_sqrt)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuresDistance {
    /// `2 (1 - F)`, the quantity that enters the charging-time estimate.
    pub ds: f64,
    /// `sqrt(2 (1 - F))`, the Bures length itself.
    pub length: f64,
}

pub fn bures_ds(sigma_a: &GaussianState, sigma_b: &GaussianState) -> Result<BuresDistance> {
    let f = fidelity_multimode(sigma_a, sigma_b)?.fidelity;
    let ds = (2.0 * (1.0 - f)).clamp(0.0, 2.0);
    Ok(BuresDistance { ds, length: ds.sqrt() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SpeedFormula {
    /// `v^2 = 1/4 sum d_t nu / (nu^2 - 1)`; the speed is `sqrt(|v^2|)`.
    #[default]
    Paper,
    /// `v^2 = 1/4 sum (d_t nu)^2 / (nu^2 - 1)`
    SquaredDerivative,
}

impl SpeedFormula {
    pub fn name(self) -> &'static str {
        match self {
            SpeedFormula::Paper => "paper",
            SpeedFormula::SquaredDerivative => "squared_derivative",
        }
    }
}

impl FromStr for SpeedFormula {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "paper" => Ok(SpeedFormula::Paper),
            "squared_derivative" | "squared" => Ok(SpeedFormula::SquaredDerivative),
            other => Err(format!(
                "unknown speed formula `{other}` (expected paper or squared_derivative)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedOptions {
    pub formula: SpeedFormula,
    /// Relative distance to the steady state that ends the charging stroke.
    pub eps_ss: f64,
    /// Samples with `nu^2 - 1` below this are treated as pure.
    pub eps_nu: f64,
}

impl Default for SpeedOptions {
    fn default() -> Self {
        Self {
            formula: SpeedFormula::Paper,
            eps_ss: 1e-6,
            eps_nu: 1e-12,
        }
    }
}

/// Second-order derivative on a possibly non-uniform grid.
fn derivative(t: &[f64], y: &[f64], i: usize) -> f64 {
    let n = t.len();
    // three-point Lagrange stencil around (j-1, j, j+1), evaluated at t[i]
    let j = i.clamp(1, n - 2);
    let (t0, t1, t2) = (t[j - 1], t[j], t[j + 1]);
    let x = t[i];
    let l0 = ((x - t1) + (x - t2)) / ((t0 - t1) * (t0 - t2));
    let l1 = ((x - t0) + (x - t2)) / ((t1 - t0) * (t1 - t2));
    let l2 = ((x - t0) + (x - t1)) / ((t2 - t0) * (t2 - t1));
    l0 * y[j - 1] + l1 * y[j] + l2 * y[j + 1]
}

/// Speed samples `(t, v)` along a trajectory.
///
/// A sample where some mode is pure within `eps_nu` has infinite speed. An
/// isolated singular sample (e.g. charging out of the vacuum) is integrable;
/// two in a row mean the trajectory stays pure and the speed is undefined.
pub fn instantaneous_speed(traj: &Trajectory, formula: SpeedFormula, eps_nu: f64) -> Result<Vec<(f64, f64)>> {
    let n_pts = traj.len();
    if n_pts < 3 {
        return Err(Error::TrajectoryTooShort(n_pts));
    }
    let n_modes = traj.spectra[0].values().len();
    let mut v2 = vec![0.0; n_pts];
    let mut singular = vec![false; n_pts];
    for j in 0..n_modes {
        let nu: Vec<f64> = traj.spectra.iter().map(|s| s.values()[j]).collect();
        for i in 0..n_pts {
            let gap = nu[i] * nu[i] - 1.0;
            if gap < eps_nu {
                singular[i] = true;
                continue;
            }
            let d = derivative(&traj.times, &nu, i);
            v2[i] += match formula {
                SpeedFormula::Paper => d / gap,
                SpeedFormula::SquaredDerivative => d * d / gap,
            } / 4.0;
        }
    }
    if let Some(w) = singular.windows(2).position(|w| w[0] && w[1]) {
        return Err(Error::SingularSpeed(traj.times[w]));
    }
    Ok(traj
        .times
        .iter()
        .zip(v2.iter().zip(&singular))
        .map(|(&t, (&v2, &sing))| (t, if sing { f64::INFINITY } else { v2.abs().sqrt() }))
        .collect())
}

/// Trapezoidal integral of `v(t)`.
///
/// An interval with one infinite endpoint is integrated as a `1/sqrt(t)`
/// singularity matched to the finite endpoint, i.e. `2 v h`.
pub fn integral_velocity(v_samples: &[(f64, f64)]) -> Result<f64> {
    if v_samples.is_empty() {
        return Err(Error::TrajectoryTooShort(0));
    }
    let mut total = 0.0;
    for w in v_samples.windows(2) {
        let ((t0, v0), (t1, v1)) = (w[0], w[1]);
        let h = t1 - t0;
        total += match (v0.is_finite(), v1.is_finite()) {
            (true, true) => 0.5 * h * (v0 + v1),
            (false, true) => 2.0 * h * v1,
            (true, false) => 2.0 * h * v0,
            (false, false) => return Err(Error::SingularSpeed(t0)),
        };
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedReport {
    pub v_samples: Vec<(f64, f64)>,
    pub v_ab: f64,
    /// `2 (1 - F(sigma_A, sigma_B))`
    pub ds_ab: f64,
    /// `sqrt(ds_ab)`
    pub ds_len: f64,
    pub t_trunc: f64,
    pub delta_t: f64,
    pub power: f64,
}

/// Charging power `P = dF / dt` with `dt = ds * t_trunc / V`.
///
/// `traj` starts at the passive state and relaxes to `steady`. The stroke is
/// cut at `t_trunc`, the first time the trajectory is within `eps_ss`
/// (relative, max-norm) of `steady`, located by log-linear interpolation of
/// the distance between grid points.
pub fn charging_power(
    traj: &Trajectory,
    steady: &GaussianState,
    delta_f: f64,
    opts: &SpeedOptions,
) -> Result<SpeedReport> {
    if traj.len() < 3 {
        return Err(Error::TrajectoryTooShort(traj.len()));
    }
    let scale = max_abs(steady.cov());
    let threshold = opts.eps_ss * scale;
    let dist: Vec<f64> = traj.states.iter().map(|s| max_abs(&(s.cov() - steady.cov()))).collect();
    let k = dist.iter().position(|&d| d < threshold).ok_or(Error::NotConverged {
        eps_ss: opts.eps_ss,
        horizon: *traj.times.last().unwrap(),
    })?;

    let bures = bures_ds(&traj.states[0], steady)?;
    if k == 0 {
        return Ok(SpeedReport {
            v_samples: vec![(0.0, 0.0)],
            v_ab: 0.0,
            ds_ab: bures.ds,
            ds_len: bures.length,
            t_trunc: 0.0,
            delta_t: 0.0,
            power: 0.0,
        });
    }

    let (t0, t1) = (traj.times[k - 1], traj.times[k]);
    let (d0, d1) = (dist[k - 1], dist[k]);
    let t_trunc = if d1 > 0.0 {
        t0 + (t1 - t0) * (d0 / threshold).ln() / (d0 / d1).ln()
    } else {
        t0 + (t1 - t0) * (d0 - threshold) / d0
    };

    // keep one point past k so the stencil at k stays centred
    let end = (k + 2).min(traj.len()).max(3);
    let prefix = Trajectory {
        times: traj.times[..end].to_vec(),
        states: traj.states[..end].to_vec(),
        spectra: traj.spectra[..end].to_vec(),
    };
    let all = instantaneous_speed(&prefix, opts.formula, opts.eps_nu)?;
    let mut v_samples = all[..k].to_vec();
    let (va, vb) = (all[k - 1].1, all[k].1);
    let w = (t_trunc - t0) / (t1 - t0);
    let v_end = if va.is_finite() { va + w * (vb - va) } else { vb };
    v_samples.push((t_trunc, v_end));
    let v_ab = integral_velocity(&v_samples)?;

    let delta_t = if v_ab > 0.0 {
        bures.ds * t_trunc / v_ab
    } else if bures.ds == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    let power = if delta_f == 0.0 || delta_t.is_infinite() {
        0.0
    } else {
        delta_f / delta_t
    };
    Ok(SpeedReport {
        v_samples,
        v_ab,
        ds_ab: bures.ds,
        ds_len: bures.length,
        t_trunc,
        delta_t,
        power,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{apply_symplectic, rotation, squeezer, thermal_state};
    use crate::lindblad::{drift_diffusion, evolve, steady_state, uniform_grid, BathSpec, DriveSpec, Propagator};
    use approx::assert_abs_diff_eq;

    fn cov(m: &[f64]) -> GaussianState {
        GaussianState::from_cov(DMatrix::from_row_slice(2, 2, m)).unwrap()
    }

    fn fock_thermal_fidelity(n1: f64, n2: f64) -> f64 {
        let p = |n: f64, k: i32| n.powi(k) / (n + 1.0).powi(k + 1);
        (0..=60).map(|k| (p(n1, k) * p(n2, k)).sqrt()).sum()
    }

    #[test]
    fn identical_states() {
        let v = GaussianState::vacuum(1).unwrap();
        let f = fidelity_single_mode(&v, &v).unwrap();
        assert_eq!(f.fidelity, 1.0);
        assert_abs_diff_eq!(f.delta_cap, 1.0);
        assert_eq!(f.lambda_cap, 0.0);
        let th = thermal_state(1.3, 1).unwrap();
        assert_eq!(fidelity_single_mode(&th, &th).unwrap().fidelity, 1.0);
        assert_eq!(fidelity_multimode(&th, &th).unwrap().fidelity, 1.0);
    }

    #[test]
    fn thermal_pairs_match_fock_sum() {
        for (n1, n2) in [(0.0, 1.0), (0.5, 1.5), (1.0, 2.0), (0.2, 0.3)] {
            let a = thermal_state(n1, 1).unwrap();
            let b = thermal_state(n2, 1).unwrap();
            let oracle = fock_thermal_fidelity(n1, n2);
            assert_abs_diff_eq!(fidelity_single_mode(&a, &b).unwrap().fidelity, oracle, epsilon = 1e-8);
            assert_abs_diff_eq!(fidelity_multimode(&a, &b).unwrap().fidelity, oracle, epsilon = 1e-8);
        }
    }

    #[test]
    fn symmetric_in_arguments() {
        let a = cov(&[2.0, 0.3, 0.3, 1.5]);
        let b = apply_symplectic(&thermal_state(0.4, 1).unwrap(), &squeezer(0.6)).unwrap();
        let ab = fidelity_single_mode(&a, &b).unwrap().fidelity;
        let ba = fidelity_single_mode(&b, &a).unwrap().fidelity;
        assert_abs_diff_eq!(ab, ba, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity_multimode(&a, &b).unwrap().fidelity, ab, epsilon = 1e-10);
    }

    #[test]
    fn pure_squeezed_overlap() {
        // |<0|S(r)|0>| = 1/sqrt(cosh r)
        let r = 0.7_f64;
        let v = GaussianState::vacuum(1).unwrap();
        let sq = apply_symplectic(&v, &squeezer(r)).unwrap();
        let expect = 1.0 / r.cosh().sqrt();
        assert_abs_diff_eq!(fidelity_single_mode(&v, &sq).unwrap().fidelity, expect, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity_multimode(&v, &sq).unwrap().fidelity, expect, epsilon = 1e-10);
    }

    #[test]
    fn two_mode_products() {
        let a1 = thermal_state(0.5, 1).unwrap();
        let b1 = apply_symplectic(&thermal_state(0.2, 1).unwrap(), &(rotation(0.3) * squeezer(0.4))).unwrap();
        let a2 = thermal_state(1.5, 1).unwrap();
        let b2 = cov(&[2.0, -0.4, -0.4, 3.0]);
        let a = GaussianState::direct_sum(&[a1.clone(), a2.clone()]).unwrap();
        let b = GaussianState::direct_sum(&[b1.clone(), b2.clone()]).unwrap();
        let prod = fidelity_single_mode(&a1, &b1).unwrap().fidelity * fidelity_single_mode(&a2, &b2).unwrap().fidelity;
        assert_abs_diff_eq!(fidelity_multimode(&a, &b).unwrap().fidelity, prod, epsilon = 1e-10);
    }

    #[test]
    fn williamson_frame_normalises_squeezed_pairs() {
        let block = |x: &DMatrix<f64>, y: &DMatrix<f64>| {
            let mut m = DMatrix::zeros(4, 4);
            m.view_mut((0, 0), (2, 2)).copy_from(x);
            m.view_mut((2, 2), (2, 2)).copy_from(y);
            m
        };
        // 50:50 beam splitter between squeezers entangles the modes
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let mut bs = DMatrix::identity(4, 4) * c;
        for i in 0..2 {
            bs[(i, i + 2)] = c;
            bs[(i + 2, i)] = -c;
        }
        let s = block(&squeezer(1.1), &squeezer(-0.7)) * bs * block(&squeezer(0.8), &rotation(0.4));
        let th = GaussianState::direct_sum(&[thermal_state(0.3, 1).unwrap(), thermal_state(1.7, 1).unwrap()]).unwrap();
        let h = apply_symplectic(&th, &s).unwrap().cov().clone();
        let s_inv = williamson_frame(&h).unwrap();
        let om = omega(2);
        assert!(max_abs(&(&s_inv * &om * s_inv.transpose() - &om)) < 1e-12);
        let d = &s_inv * &h * s_inv.transpose();
        assert!(max_abs(&(&d - DMatrix::from_diagonal(&d.diagonal()))) < 1e-10);
        let mut nu: Vec<f64> = d.diagonal().iter().copied().collect();
        nu.sort_by(f64::total_cmp);
        for (got, want) in nu.iter().zip([1.6, 1.6, 4.4, 4.4]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-10);
        }
    }

    #[test]
    fn fidelity_rejects_bad_input() {
        let v = GaussianState::vacuum(1).unwrap();
        assert!(matches!(
            fidelity_single_mode(&v, &cov(&[0.5, 0.0, 0.0, 0.5])),
            Err(Error::Unphysical(_))
        ));
        assert!(fidelity_single_mode(&v, &GaussianState::vacuum(2).unwrap()).is_err());
        let v2 = GaussianState::vacuum(2).unwrap();
        assert!(fidelity_single_mode(&v2, &v2).is_err());
        let shifted = GaussianState::new(nalgebra::DVector::from_vec(vec![0.1, 0.0]), DMatrix::identity(2, 2)).unwrap();
        assert!(fidelity_single_mode(&v, &shifted).is_err());
    }

    #[test]
    fn bures_values() {
        let th = thermal_state(1.0, 1).unwrap();
        assert_eq!(bures_ds(&th, &th).unwrap().ds, 0.0);
        let a = thermal_state(0.0, 1).unwrap();
        let b = thermal_state(1.0, 1).unwrap();
        let f = fock_thermal_fidelity(0.0, 1.0);
        let d = bures_ds(&a, &b).unwrap();
        assert_abs_diff_eq!(d.ds, 2.0 * (1.0 - f), epsilon = 1e-10);
        assert_abs_diff_eq!(d.length * d.length, d.ds, epsilon = 1e-15);
        let mut prev = 0.0;
        for n in [0.5, 1.0, 2.0, 4.0] {
            let ds = bures_ds(&a, &thermal_state(n, 1).unwrap()).unwrap().ds;
            assert!(ds > prev);
            prev = ds;
        }
    }

    fn relaxation(n_a: f64, n_b: f64, horizon: f64, dt: f64) -> (Trajectory, GaussianState) {
        let drive = DriveSpec::constant(1.0, 0.0).unwrap();
        let bath = BathSpec::new(1.0, n_b, 0.0, 0.0, n_a).unwrap();
        let dd = drift_diffusion(&drive, &bath, true);
        let grid = uniform_grid(horizon, dt);
        let traj = evolve(&thermal_state(n_a, 1).unwrap(), &dd, &grid, Propagator::Exact).unwrap();
        (traj, steady_state(&dd).unwrap())
    }

    #[test]
    fn stationary_trajectory_has_zero_speed() {
        let th = thermal_state(1.0, 1).unwrap();
        let spectrum = symplectic_eigenvalues(&th).unwrap();
        let frozen = Trajectory {
            times: vec![0.0, 0.5, 1.0, 1.5],
            states: vec![th; 4],
            spectra: vec![spectrum; 4],
        };
        // an integrated fixed point only moves at roundoff level
        let (relaxed, _) = relaxation(1.0, 1.0, 2.0, 0.1);
        for formula in [SpeedFormula::Paper, SpeedFormula::SquaredDerivative] {
            let v = instantaneous_speed(&frozen, formula, 1e-12).unwrap();
            assert!(v.iter().all(|&(_, v)| v == 0.0));
            let v = instantaneous_speed(&relaxed, formula, 1e-12).unwrap();
            assert!(v.iter().all(|&(_, v)| v < 1e-6));
        }
    }

    #[test]
    fn pure_trajectory_is_singular() {
        let traj = evolve(
            &GaussianState::vacuum(1).unwrap(),
            &drift_diffusion(
                &DriveSpec::constant(1.0, 0.5).unwrap(),
                &BathSpec::closed(0.0).unwrap(),
                true,
            ),
            &uniform_grid(1.0, 0.1),
            Propagator::Exact,
        )
        .unwrap();
        assert!(matches!(
            instantaneous_speed(&traj, SpeedFormula::Paper, 1e-12),
            Err(Error::SingularSpeed(_))
        ));
    }

    #[test]
    fn speed_against_closed_form() {
        // thermal relaxation: nu(t) = nb + (na - nb) e^{-t}
        let (traj, _) = relaxation(0.5, 2.0, 3.0, 1e-3);
        let v = instantaneous_speed(&traj, SpeedFormula::SquaredDerivative, 1e-12).unwrap();
        let (na, nb) = (2.0, 5.0);
        for &(t, vt) in v.iter().step_by(250) {
            let nu: f64 = nb + (na - nb) * (-t).exp();
            let d = -(na - nb) * (-t).exp();
            let expect = (d * d / (nu * nu - 1.0) / 4.0).sqrt();
            assert_abs_diff_eq!(vt, expect, epsilon = 1e-6);
        }
        let p = instantaneous_speed(&traj, SpeedFormula::Paper, 1e-12).unwrap();
        for (a, b) in v.iter().zip(&p) {
            assert_eq!(a.1 == 0.0, b.1 == 0.0);
        }
    }

    #[test]
    fn trapezoid() {
        assert_eq!(integral_velocity(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]).unwrap(), 0.0);
        let samples: Vec<_> = (0..=37).map(|i| (i as f64 * 0.1, 2.5)).collect();
        assert_abs_diff_eq!(integral_velocity(&samples).unwrap(), 2.5 * 3.7, epsilon = 1e-12);
        // 1/(2 sqrt t) on [0, 1] integrates to 1
        let h = 1e-4;
        let s: Vec<_> = (0..=10_000)
            .map(|i| {
                let t = i as f64 * h;
                (t, if i == 0 { f64::INFINITY } else { 0.5 / t.sqrt() })
            })
            .collect();
        assert_abs_diff_eq!(integral_velocity(&s).unwrap(), 1.0, epsilon = 1e-3);
        assert!(integral_velocity(&[(0.0, f64::INFINITY), (1.0, f64::INFINITY)]).is_err());
    }

    #[test]
    fn power_for_relaxation() {
        let (traj, steady) = relaxation(0.5, 2.0, 40.0, 0.01);
        let rep = charging_power(&traj, &steady, 1.0, &SpeedOptions::default()).unwrap();
        assert!(rep.t_trunc > 0.0 && rep.t_trunc < 40.0);
        assert!(rep.v_ab > 0.0);
        assert_abs_diff_eq!(rep.delta_t, rep.ds_ab * rep.t_trunc / rep.v_ab, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.power, 1.0 / rep.delta_t, epsilon = 1e-12);
        assert_eq!(
            charging_power(&traj, &steady, 0.0, &SpeedOptions::default())
                .unwrap()
                .power,
            0.0
        );

        let (fine, _) = relaxation(0.5, 2.0, 40.0, 0.005);
        let rep_fine = charging_power(&fine, &steady, 1.0, &SpeedOptions::default()).unwrap();
        assert!((rep_fine.power / rep.power - 1.0).abs() < 1e-3);
        assert!((rep_fine.v_ab / rep.v_ab - 1.0).abs() < 1e-4);
    }

    #[test]
    fn power_needs_convergence() {
        let (traj, steady) = relaxation(0.5, 2.0, 2.0, 0.01);
        assert!(matches!(
            charging_power(&traj, &steady, 1.0, &SpeedOptions::default()),
            Err(Error::NotConverged { .. })
        ));
    }

    #[test]
    fn formula_names() {
        assert_eq!("paper".parse::<SpeedFormula>().unwrap(), SpeedFormula::Paper);
        assert_eq!(
            SpeedFormula::SquaredDerivative.name().parse::<SpeedFormula>().unwrap(),
            SpeedFormula::SquaredDerivative
        );
    }
}
