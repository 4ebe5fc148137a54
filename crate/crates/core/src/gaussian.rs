//! Gaussian states of bosonic modes in the quadrature picture.
//!
//! Quadratures are ordered `x1, p1, x2, p2, ...` and covariance matrices are
//! normalized so that the vacuum has `cov = identity`, i.e.
//! `cov_ij = <{dr_i, dr_j}>` for centered quadratures.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Default tolerance for physicality and symplecticity checks.
pub const TOL_PHYS: f64 = 1e-9;

/// Relative gap allowed between the two copies of each symplectic eigenvalue.
const PAIRING_TOL: f64 = 1e-8;

/// Symmetric part tolerance, scaled by the matrix magnitude.
const SYMMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticForm {
    n_modes: usize,
    matrix: DMatrix<f64>,
}

impl SymplecticForm {
    pub fn new(n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::InvalidModeCount(n_modes));
        }
        Ok(Self {
            n_modes,
            matrix: omega(n_modes),
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }
}

/// `Omega_n`: direct sum of `n` copies of `[[0, 1], [-1, 0]]`.
pub fn symplectic_form(n_modes: usize) -> Result<SymplecticForm> {
    SymplecticForm::new(n_modes)
}

/// Raw `Omega_n` for internal use where the mode count is already validated.
pub(crate) fn omega(n_modes: usize) -> DMatrix<f64> {
    let dim = 2 * n_modes;
    let mut m = DMatrix::zeros(dim, dim);
    for k in 0..n_modes {
        m[(2 * k, 2 * k + 1)] = 1.0;
        m[(2 * k + 1, 2 * k)] = -1.0;
    }
    m
}

pub(crate) fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

fn mode_count(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_multiple_of(2) {
        return Err(Error::DimensionMismatch {
            expected: 2 * (dim / 2).max(1),
            found: dim,
        });
    }
    Ok(dim / 2)
}

fn check_symmetric(cov: &DMatrix<f64>) -> Result<()> {
    let asym = max_abs(&(cov - cov.transpose()));
    if asym > SYMMETRY_TOL * max_abs(cov).max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

/// First moments and covariance matrix of an `n`-mode Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    /// Builds a state, symmetrizing `cov` after checking it is symmetric
    /// within tolerance. Physicality is not enforced here; see
    /// [`check_physicality`].
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if !cov.is_square() {
            return Err(Error::DimensionMismatch {
                expected: cov.nrows(),
                found: cov.ncols(),
            });
        }
        mode_count(cov.nrows())?;
        if mean.len() != cov.nrows() {
            return Err(Error::DimensionMismatch {
                expected: cov.nrows(),
                found: mean.len(),
            });
        }
        check_symmetric(&cov)?;
        let cov = (&cov + cov.transpose()) * 0.5;
        Ok(Self { mean, cov })
    }

    /// Zero-mean state with the given covariance matrix.
    pub fn from_cov(cov: DMatrix<f64>) -> Result<Self> {
        let dim = cov.nrows();
        Self::new(DVector::zeros(dim), cov)
    }

    pub fn vacuum(n_modes: usize) -> Result<Self> {
        thermal_state(0.0, n_modes)
    }

    pub fn n_modes(&self) -> usize {
        self.cov.nrows() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Reduced state of mode `k` (partial trace over the others).
    pub fn mode(&self, k: usize) -> Result<Self> {
        if k >= self.n_modes() {
            return Err(Error::DimensionMismatch {
                expected: self.n_modes(),
                found: k,
            });
        }
        Ok(Self {
            mean: self.mean.rows(2 * k, 2).into_owned(),
            cov: self.cov.view((2 * k, 2 * k), (2, 2)).into_owned(),
        })
    }

    /// Product state of independent subsystems.
    pub fn direct_sum(parts: &[GaussianState]) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidModeCount(0));
        }
        let dim: usize = parts.iter().map(|s| s.cov.nrows()).sum();
        let mut mean = DVector::zeros(dim);
        let mut cov = DMatrix::zeros(dim, dim);
        let mut at = 0;
        for s in parts {
            let d = s.cov.nrows();
            mean.rows_mut(at, d).copy_from(&s.mean);
            cov.view_mut((at, at), (d, d)).copy_from(&s.cov);
            at += d;
        }
        Ok(Self { mean, cov })
    }
}

/// Bose-Einstein occupation `(e^{beta mu} - 1)^{-1}`.
pub fn thermal_occupation(beta: f64, mu: f64) -> Result<f64> {
    let x = beta * mu;
    if !(x > 0.0) {
        return Err(Error::InvalidParameter {
            name: "beta*mu",
            value: x,
            reason: "must be positive",
        });
    }
    Ok(1.0 / x.exp_m1())
}

/// Thermal state with occupation `n_occ` in every mode: `cov = (1 + 2N) 1`.
pub fn thermal_state(n_occ: f64, n_modes: usize) -> Result<GaussianState> {
    if n_modes == 0 {
        return Err(Error::InvalidModeCount(0));
    }
    if !(n_occ >= 0.0) || !n_occ.is_finite() {
        return Err(Error::InvalidParameter {
            name: "N",
            value: n_occ,
            reason: "occupation must be finite and non-negative",
        });
    }
    let dim = 2 * n_modes;
    Ok(GaussianState {
        mean: DVector::zeros(dim),
        cov: DMatrix::identity(dim, dim) * (1.0 + 2.0 * n_occ),
    })
}

/// Symplectic eigenvalues, sorted ascending, one per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticSpectrum {
    values: Vec<f64>,
}

impl SymplecticSpectrum {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn is_pure(&self, tol: f64) -> bool {
        self.values.iter().all(|nu| (nu - 1.0).abs() <= tol)
    }
}

/// Symplectic spectrum of a covariance matrix: the moduli of the eigenvalues
/// of `Omega cov`, which come in pairs `+-i nu`.
///
/// For positive definite `cov = L L^T` the same pairs are the eigenvalues of
/// the antisymmetric `K = L^T Omega L`, so `nu^2` is read off the symmetric
/// `K^T K`. That stays accurate for strongly squeezed matrices where the
/// nonsymmetric eigenproblem of `Omega cov` loses digits.
pub fn symplectic_spectrum(cov: &DMatrix<f64>) -> Result<SymplecticSpectrum> {
    let n = mode_count(cov.nrows())?;
    check_symmetric(cov)?;
    if n == 1 {
        // closed form for one mode: |eig(Omega cov)| = sqrt(det cov)
        let det = cov[(0, 0)] * cov[(1, 1)] - cov[(0, 1)] * cov[(1, 0)];
        return Ok(SymplecticSpectrum {
            values: vec![det.abs().sqrt()],
        });
    }
    let mut moduli: Vec<f64> = match cov.clone().cholesky() {
        Some(chol) => {
            let l = chol.l();
            let k = l.transpose() * omega(n) * &l;
            (k.transpose() * &k)
                .symmetric_eigenvalues()
                .iter()
                .map(|v| v.max(0.0).sqrt())
                .collect()
        }
        None => (omega(n) * cov)
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .collect(),
    };
    moduli.sort_by(|a, b| a.total_cmp(b));
    let mut values = Vec::with_capacity(n);
    for pair in moduli.chunks(2) {
        let gap = (pair[0] - pair[1]).abs();
        if gap > PAIRING_TOL * pair[1].max(1.0) {
            return Err(Error::SpectrumPairing(gap));
        }
        values.push(0.5 * (pair[0] + pair[1]));
    }
    Ok(SymplecticSpectrum { values })
}

pub fn symplectic_eigenvalues(state: &GaussianState) -> Result<SymplecticSpectrum> {
    symplectic_spectrum(&state.cov)
}

/// True iff every symplectic eigenvalue is at least `1 - tol`.
pub fn check_physicality(state: &GaussianState, tol: f64) -> bool {
    match symplectic_eigenvalues(state) {
        Ok(spec) => spec.min() >= 1.0 - tol,
        Err(_) => false,
    }
}

/// Largest entry of `S Omega S^T - Omega`.
pub fn symplectic_deviation(s: &DMatrix<f64>) -> Result<f64> {
    if !s.is_square() {
        return Err(Error::DimensionMismatch {
            expected: s.nrows(),
            found: s.ncols(),
        });
    }
    let n = mode_count(s.nrows())?;
    let om = omega(n);
    Ok(max_abs(&(s * &om * s.transpose() - om)))
}

pub fn is_symplectic(s: &DMatrix<f64>, tol: f64) -> bool {
    symplectic_deviation(s).is_ok_and(|d| d <= tol)
}

/// Gaussian unitary: `mean -> S mean`, `cov -> S cov S^T`.
pub fn apply_symplectic(state: &GaussianState, s: &DMatrix<f64>) -> Result<GaussianState> {
    if s.nrows() != state.cov.nrows() {
        return Err(Error::DimensionMismatch {
            expected: state.cov.nrows(),
            found: s.nrows(),
        });
    }
    let dev = symplectic_deviation(s)?;
    if dev > TOL_PHYS * max_abs(s).powi(2).max(1.0) {
        return Err(Error::NotSymplectic(dev));
    }
    let cov = s * &state.cov * s.transpose();
    Ok(GaussianState {
        mean: s * &state.mean,
        cov: (&cov + cov.transpose()) * 0.5,
    })
}

/// Phase-space rotation `cos(theta) 1 + sin(theta) Omega`.
pub fn rotation(theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, s, -s, c])
}

/// Single-mode squeezer `exp(-r sigma_z)`; squeezes `x`, stretches `p`.
pub fn squeezer(r: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[(-r).exp(), 0.0, 0.0, r.exp()])
}

/// Closed charging channel `S = O(theta) K(r)` in Euler form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSpec {
    pub rotation_angle: f64,
    pub squeeze_r: f64,
}

impl ChannelSpec {
    pub fn new(rotation_angle: f64, squeeze_r: f64) -> Result<Self> {
        if !(squeeze_r >= 0.0) || !squeeze_r.is_finite() {
            return Err(Error::InvalidParameter {
                name: "r",
                value: squeeze_r,
                reason: "squeezing must be finite and non-negative",
            });
        }
        Ok(Self {
            rotation_angle,
            squeeze_r,
        })
    }

    pub fn symplectic(&self) -> DMatrix<f64> {
        rotation(self.rotation_angle) * squeezer(self.squeeze_r)
    }
}

/// Covariance matrix of a thermal state with occupation `n_a` after the
/// channel `O(theta) K(r)`, written out entry by entry.
pub fn euler_charged_cov(n_a: f64, channel: &ChannelSpec) -> Result<GaussianState> {
    if !(n_a >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "N_A",
            value: n_a,
            reason: "occupation must be non-negative",
        });
    }
    let r = channel.squeeze_r;
    let th = channel.rotation_angle;
    let (s, c) = th.sin_cos();
    let (em, ep) = ((-2.0 * r).exp(), (2.0 * r).exp());
    let scale = 1.0 + 2.0 * n_a;
    let off = (2.0 * th).sin() * (2.0 * r).sinh();
    let cov = DMatrix::from_row_slice(2, 2, &[em * c * c + ep * s * s, off, off, ep * c * c + em * s * s]) * scale;
    GaussianState::from_cov(cov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn omega_single_and_double_mode() {
        let w1 = symplectic_form(1).unwrap();
        assert_eq!(w1.matrix(), &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
        let w2 = symplectic_form(2).unwrap();
        assert_eq!(w2.matrix().view((0, 0), (2, 2)), w1.matrix().view((0, 0), (2, 2)));
        assert_eq!(w2.matrix().view((2, 2), (2, 2)), w1.matrix().view((0, 0), (2, 2)));
        assert_eq!(w2.matrix().view((0, 2), (2, 2)), DMatrix::<f64>::zeros(2, 2));
        assert!(symplectic_form(0).is_err());
    }

    #[test]
    fn omega_squares_to_minus_identity() {
        for n in 1..=3 {
            let w = symplectic_form(n).unwrap().into_matrix();
            assert_eq!(&w * &w, -DMatrix::<f64>::identity(2 * n, 2 * n));
            assert_eq!(&w + w.transpose(), DMatrix::<f64>::zeros(2 * n, 2 * n));
            assert_abs_diff_eq!(w.determinant(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn occupation_limits_and_identity() {
        assert_abs_diff_eq!(thermal_occupation(2.0_f64.ln(), 1.0).unwrap(), 1.0, epsilon = 1e-14);
        assert!(thermal_occupation(800.0, 1.0).unwrap() < 1e-300);
        for x in [0.1_f64, 1.0, 10.0] {
            let n = thermal_occupation(x, 1.0).unwrap();
            let coth = 1.0 / (x / 2.0).tanh();
            assert!((n - 0.5 * (coth - 1.0)).abs() < 1e-12);
        }
        assert!(thermal_occupation(0.0, 1.0).is_err());
        assert!(thermal_occupation(-1.0, 1.0).is_err());
    }

    #[test]
    fn thermal_states() {
        let vac = thermal_state(0.0, 1).unwrap();
        assert_eq!(vac.cov(), &DMatrix::<f64>::identity(2, 2));
        let th = thermal_state(1.0, 1).unwrap();
        assert_eq!(th.cov(), &(DMatrix::<f64>::identity(2, 2) * 3.0));
        let spec = symplectic_eigenvalues(&thermal_state(2.5, 3).unwrap()).unwrap();
        for nu in spec.values() {
            assert_abs_diff_eq!(*nu, 6.0, epsilon = 1e-12);
        }
        assert!(thermal_state(-0.1, 1).is_err());
    }

    #[test]
    fn spectra_of_simple_states() {
        let r = 0.7_f64;
        let sq = GaussianState::from_cov(DMatrix::from_diagonal(&DVector::from_vec(vec![
            (2.0 * r).exp(),
            (-2.0 * r).exp(),
        ])))
        .unwrap();
        assert_abs_diff_eq!(symplectic_eigenvalues(&sq).unwrap().min(), 1.0, epsilon = 1e-12);

        let th = thermal_state(1.0, 1).unwrap();
        assert_abs_diff_eq!(symplectic_eigenvalues(&th).unwrap().min(), 3.0, epsilon = 1e-12);

        let two = GaussianState::direct_sum(&[thermal_state(1.0, 1).unwrap(), thermal_state(0.0, 1).unwrap()]).unwrap();
        let vals = symplectic_eigenvalues(&two).unwrap();
        assert_abs_diff_eq!(vals.values()[0], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(vals.values()[1], 3.0, epsilon = 1e-10);
    }

    #[test]
    fn asymmetric_covariance_rejected() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(
            GaussianState::from_cov(cov.clone()),
            Err(Error::NotSymmetric(_))
        ));
        assert!(symplectic_spectrum(&cov).is_err());
    }

    #[test]
    fn physicality() {
        assert!(check_physicality(&GaussianState::vacuum(1).unwrap(), TOL_PHYS));
        let half = GaussianState::from_cov(DMatrix::identity(2, 2) * 0.5).unwrap();
        assert!(!check_physicality(&half, TOL_PHYS));
        for r in [0.0, 0.3, 1.5, 4.0] {
            let s = apply_symplectic(&GaussianState::vacuum(1).unwrap(), &squeezer(r)).unwrap();
            assert!(check_physicality(&s, TOL_PHYS), "r = {r}");
        }
    }

    #[test]
    fn symplectic_action() {
        let th = thermal_state(0.8, 1).unwrap();
        let same = apply_symplectic(&th, &DMatrix::identity(2, 2)).unwrap();
        assert_eq!(same, th);
        let rot = apply_symplectic(&th, &rotation(1.1)).unwrap();
        assert!(max_abs(&(rot.cov() - th.cov())) < 1e-14);

        // K(r) 1 K(r)^T = diag(e^{-2r}, e^{2r})
        let r = 0.4_f64;
        let sq = apply_symplectic(&GaussianState::vacuum(1).unwrap(), &squeezer(r)).unwrap();
        assert_abs_diff_eq!(sq.cov()[(0, 0)], (-2.0 * r).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(sq.cov()[(1, 1)], (2.0 * r).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(sq.cov()[(0, 1)], 0.0, epsilon = 1e-15);

        let shear = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 2.0]);
        assert!(matches!(apply_symplectic(&th, &shear), Err(Error::NotSymplectic(_))));
    }

    #[test]
    fn euler_form_matches_matrix_product() {
        for n_a in [0.0, 1.0, 2.5] {
            for i in 0..10 {
                for j in 0..10 {
                    let r = 0.15 * i as f64;
                    let theta = 0.6 * j as f64;
                    let ch = ChannelSpec::new(theta, r).unwrap();
                    let printed = euler_charged_cov(n_a, &ch).unwrap();
                    let composed = apply_symplectic(&thermal_state(n_a, 1).unwrap(), &ch.symplectic()).unwrap();
                    assert!(max_abs(&(printed.cov() - composed.cov())) < 1e-12 * (1.0 + 2.0 * n_a) * (2.0 * r).exp());
                }
            }
        }
    }

    #[test]
    fn euler_form_slices() {
        for theta in [0.0, 0.9, 2.0] {
            let c = euler_charged_cov(1.5, &ChannelSpec::new(theta, 0.0).unwrap()).unwrap();
            assert!(max_abs(&(c.cov() - DMatrix::identity(2, 2) * 4.0)) < 1e-14);
        }
        let r = 0.6_f64;
        let c = euler_charged_cov(1.0, &ChannelSpec::new(0.0, r).unwrap()).unwrap();
        assert_abs_diff_eq!(c.cov()[(0, 0)], 3.0 * (-2.0 * r).exp(), epsilon = 1e-14);
        assert_abs_diff_eq!(c.cov()[(1, 1)], 3.0 * (2.0 * r).exp(), epsilon = 1e-14);
        assert!(ChannelSpec::new(0.0, -0.1).is_err());
    }

    #[test]
    fn reduced_modes() {
        let a = thermal_state(1.0, 1).unwrap();
        let b = apply_symplectic(&thermal_state(0.5, 1).unwrap(), &squeezer(0.3)).unwrap();
        let ab = GaussianState::direct_sum(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(ab.mode(0).unwrap(), a);
        assert_eq!(ab.mode(1).unwrap(), b);
        assert!(ab.mode(2).is_err());
    }
}
