//! Energy bookkeeping on covariance matrices.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gaussian::{symplectic_eigenvalues, GaussianState, TOL_PHYS};

/// Symplectic eigenvalues closer to 1 than this contribute zero entropy.
const PURE_GUARD: f64 = 1e-12;

/// Temperature entering `dF = dE - T dS`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TemperatureConvention {
    /// `T = 1` in units of `mu`.
    Unit,
    /// Temperature of the charging bath at the battery frequency,
    /// `T = mu / ln(1 + 1/N_B)` (zero for `N_B = 0`).
    #[default]
    BathB,
}

impl TemperatureConvention {
    pub const ALL: [TemperatureConvention; 2] = [TemperatureConvention::Unit, TemperatureConvention::BathB];

    pub fn temperature(self, mu: f64, n_b: f64) -> f64 {
        match self {
            TemperatureConvention::Unit => 1.0,
            TemperatureConvention::BathB => {
                if n_b <= 0.0 {
                    0.0
                } else {
                    mu / (1.0 / n_b).ln_1p()
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TemperatureConvention::Unit => "unit",
            TemperatureConvention::BathB => "bath_b",
        }
    }
}

impl FromStr for TemperatureConvention {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "unit" => Ok(TemperatureConvention::Unit),
            "bath_b" | "bath-b" => Ok(TemperatureConvention::BathB),
            other => Err(format!(
                "unknown temperature convention `{other}` (expected unit or bath_b)"
            )),
        }
    }
}

fn same_shape(a: &GaussianState, b: &GaussianState) -> Result<()> {
    if a.n_modes() != b.n_modes() {
        return Err(Error::DimensionMismatch {
            expected: a.n_modes(),
            found: b.n_modes(),
        });
    }
    Ok(())
}

/// `<H0> = mu/4 tr(cov) + mu/2 |mean|^2`, summed over modes of frequency `mu`.
pub fn internal_energy(state: &GaussianState, mu: f64) -> f64 {
    mu / 4.0 * state.cov().trace() + mu / 2.0 * state.mean().norm_squared()
}

pub fn delta_e(sigma_a: &GaussianState, sigma_b: &GaussianState, mu: f64) -> Result<f64> {
    same_shape(sigma_a, sigma_b)?;
    Ok(internal_energy(sigma_b, mu) - internal_energy(sigma_a, mu))
}

/// Work done by switching the drive on at A and off at B, and the heat
/// `dQ = dE - dW` exchanged with the bath in between.
///
/// With `V = -(lambda/2)(xp + px)` and `cov_12 = <{x, p}>`, the switch-on
/// costs `<V>_A` and the switch-off returns `<V>_B`, so
/// `dW = (lambda/2)(cov_B,12 - cov_A,12)`.
pub fn work_heat(sigma_a: &GaussianState, sigma_b: &GaussianState, mu: f64, lambda: f64) -> Result<(f64, f64)> {
    same_shape(sigma_a, sigma_b)?;
    if sigma_a.n_modes() != 1 {
        return Err(Error::Unsupported("work/heat split is single-mode only"));
    }
    let d_e = delta_e(sigma_a, sigma_b, mu)?;
    let d_w = 0.5 * lambda * (sigma_b.cov()[(0, 1)] - sigma_a.cov()[(0, 1)]);
    Ok((d_w, d_e - d_w))
}

fn entropy_term(nu: f64) -> f64 {
    if nu < 1.0 + PURE_GUARD {
        return 0.0;
    }
    let (up, down) = ((nu + 1.0) / 2.0, (nu - 1.0) / 2.0);
    up * up.ln() - down * down.ln()
}

/// Von Neumann entropy in nats from the symplectic spectrum.
pub fn von_neumann_entropy(state: &GaussianState) -> Result<f64> {
    let spectrum = symplectic_eigenvalues(state)?;
    if spectrum.min() < 1.0 - TOL_PHYS {
        return Err(Error::Unphysical(spectrum.min()));
    }
    Ok(spectrum.values().iter().map(|&nu| entropy_term(nu)).sum())
}

pub fn free_energy_change(sigma_a: &GaussianState, sigma_b: &GaussianState, mu: f64, t_free: f64) -> Result<f64> {
    if !(t_free >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "T_free",
            value: t_free,
            reason: "temperature must be non-negative",
        });
    }
    let d_e = delta_e(sigma_a, sigma_b, mu)?;
    let d_s = von_neumann_entropy(sigma_b)? - von_neumann_entropy(sigma_a)?;
    Ok(d_e - t_free * d_s)
}

fn is_zero_change(d_e: f64, e_a: f64, e_b: f64) -> bool {
    d_e.abs() <= 4.0 * f64::EPSILON * (e_a.abs() + e_b.abs())
}

/// `eta = dF / dE`.
pub fn efficiency(sigma_a: &GaussianState, sigma_b: &GaussianState, mu: f64, t_free: f64) -> Result<f64> {
    let d_e = delta_e(sigma_a, sigma_b, mu)?;
    if is_zero_change(d_e, internal_energy(sigma_a, mu), internal_energy(sigma_b, mu)) {
        return Err(Error::ZeroEnergyChange);
    }
    Ok(free_energy_change(sigma_a, sigma_b, mu, t_free)? / d_e)
}

/// Energy injected into a thermal state by a unitary squeezer of strength
/// `r`: `mu (1 + 2 N_A) sinh^2 r`, independent of the rotation angle.
pub fn closed_delta_e(r: f64, n_a: f64, mu: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "r",
            value: r,
            reason: "squeezing must be non-negative",
        });
    }
    if !(n_a >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "N_A",
            value: n_a,
            reason: "occupation must be non-negative",
        });
    }
    Ok(mu * (1.0 + 2.0 * n_a) * r.sinh().powi(2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermoReport {
    pub e_a: f64,
    pub e_b: f64,
    pub delta_e: f64,
    pub delta_w: f64,
    pub delta_q: f64,
    pub s_a: f64,
    pub s_b: f64,
    pub delta_s: f64,
    pub t_free: f64,
    pub delta_f: f64,
    /// `None` when `delta_e` vanishes.
    pub eta: Option<f64>,
}

impl ThermoReport {
    /// Bookkeeping for a single-mode charging stroke `A -> B`.
    pub fn compute(
        sigma_a: &GaussianState,
        sigma_b: &GaussianState,
        mu: f64,
        lambda: f64,
        t_free: f64,
    ) -> Result<Self> {
        let (delta_w, delta_q) = work_heat(sigma_a, sigma_b, mu, lambda)?;
        let e_a = internal_energy(sigma_a, mu);
        let e_b = internal_energy(sigma_b, mu);
        let delta_e = delta_w + delta_q;
        let s_a = von_neumann_entropy(sigma_a)?;
        let s_b = von_neumann_entropy(sigma_b)?;
        let delta_s = s_b - s_a;
        let delta_f = free_energy_change(sigma_a, sigma_b, mu, t_free)?;
        let eta = (!is_zero_change(delta_e, e_a, e_b)).then(|| delta_f / delta_e);
        Ok(Self {
            e_a,
            e_b,
            delta_e,
            delta_w,
            delta_q,
            s_a,
            s_b,
            delta_s,
            t_free,
            delta_f,
            eta,
        })
    }
}
