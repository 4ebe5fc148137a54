//! Bath-phase optimisation: coarse grid over `[0, 2 pi)` then golden-section
//! refinement around the best grid point.

use std::f64::consts::TAU;

use rayon::prelude::*;

use crate::config::{Config, Scenario, Target};
use crate::error::{CliError, Result};
use crate::scenario::evaluate;
use crate::sweep::with_pool;

/// Refinement stops once the bracket is narrower than this (radians).
pub const THETA_TOL: f64 = 1e-3;

fn objective(cfg: &Config, target: Target, theta: f64) -> Result<Option<f64>> {
    let mut p = cfg.base_point();
    p.theta_b = theta;
    let row = evaluate(cfg, &p)?;
    Ok(match target {
        Target::Eta => row.derived.eta,
        Target::Power => row.derived.power,
    })
}

fn golden_max(f: impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}

/// Returns `(theta_star, value)` with `theta_star` in `[0, 2 pi)`.
pub fn optimize_theta(cfg: &Config, target: Target, grid_steps: usize, threads: Option<usize>) -> Result<(f64, f64)> {
    if !cfg.axes().is_empty() {
        return Err(CliError::Config(
            "optimize takes no axes; theta_b is scanned internally".into(),
        ));
    }
    if grid_steps < 2 {
        return Err(CliError::Config("grid_steps must be at least 2".into()));
    }
    let mut cfg = cfg.clone();
    cfg.scenario = match target {
        Target::Eta => Scenario::Thermo,
        Target::Power => Scenario::Power,
    };
    let cfg = &cfg;

    let thetas: Vec<f64> = (0..grid_steps).map(|k| TAU * k as f64 / grid_steps as f64).collect();
    let values: Vec<Option<f64>> = with_pool(threads, || {
        thetas
            .par_iter()
            .map(|&t| objective(cfg, target, t))
            .collect::<Result<Vec<_>>>()
    })??;

    let (best, best_val) = thetas
        .iter()
        .zip(&values)
        .filter_map(|(&t, v)| v.map(|v| (t, v)))
        .fold(None, |acc: Option<(f64, f64)>, (t, v)| match acc {
            Some((_, bv)) if bv >= v => acc,
            _ => Some((t, v)),
        })
        .ok_or_else(|| CliError::Config("objective undefined at every grid point (unstable or dE = 0)".into()))?;

    let h = TAU / grid_steps as f64;
    let f = |t: f64| Ok(objective(cfg, target, t)?.unwrap_or(f64::NEG_INFINITY));
    let (theta, value) = golden_max(f, best - h, best + h, THETA_TOL)?;
    Ok(if value >= best_val {
        (theta.rem_euclid(TAU), value)
    } else {
        (best, best_val)
    })
}
