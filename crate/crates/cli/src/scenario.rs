//! Evaluation of a single grid point.

use battery_core::lindblad::uniform_grid;
use battery_core::{
    charging_power, drift_diffusion, euler_charged_cov, evolve, stability_check, steady_state, thermal_state, BathSpec,
    ChannelSpec, DriveSpec, Error, GaussianState, Propagator, StabilityReport, ThermoReport,
};

use crate::config::{Config, Point, Scenario};
use crate::error::Result;

/// Derived quantities of one row; `None` is written as an empty field.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Derived {
    pub e_a: Option<f64>,
    pub e_b: Option<f64>,
    pub delta_e: Option<f64>,
    pub delta_w: Option<f64>,
    pub delta_q: Option<f64>,
    pub delta_s: Option<f64>,
    pub delta_f: Option<f64>,
    pub eta: Option<f64>,
    pub v_ab: Option<f64>,
    pub ds_ab: Option<f64>,
    pub ds_len: Option<f64>,
    pub delta_t: Option<f64>,
    pub power: Option<f64>,
    pub t_trunc: Option<f64>,
}

impl Derived {
    pub const COLUMNS: [&'static str; 14] = [
        "E_A", "E_B", "delta_E", "delta_W", "delta_Q", "delta_S", "delta_F", "eta", "V_AB", "ds_AB", "ds_len",
        "delta_t", "power", "t_trunc",
    ];

    pub fn values(&self) -> [Option<f64>; 14] {
        [
            self.e_a,
            self.e_b,
            self.delta_e,
            self.delta_w,
            self.delta_q,
            self.delta_s,
            self.delta_f,
            self.eta,
            self.v_ab,
            self.ds_ab,
            self.ds_len,
            self.delta_t,
            self.power,
            self.t_trunc,
        ]
    }

    fn with_thermo(rep: &ThermoReport) -> Self {
        Self {
            e_a: Some(rep.e_a),
            e_b: Some(rep.e_b),
            delta_e: Some(rep.delta_e),
            delta_w: Some(rep.delta_w),
            delta_q: Some(rep.delta_q),
            delta_s: Some(rep.delta_s),
            delta_f: Some(rep.delta_f),
            eta: rep.eta,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub point: Point,
    pub stable: bool,
    pub derived: Derived,
}

pub fn drive_and_bath(p: &Point) -> Result<(DriveSpec, BathSpec)> {
    Ok((
        DriveSpec::constant(p.mu, p.lambda)?,
        BathSpec::new(p.gamma, p.n_b, p.r_b, p.theta_b, p.n_a)?,
    ))
}

/// Integration horizon: `50/gamma`, stretched for slowly relaxing points
/// (30 e-folds of the slowest mode) but never past `1000/gamma`.
pub fn horizon(cfg: &Config, p: &Point, stability: &StabilityReport) -> f64 {
    cfg.horizon.unwrap_or_else(|| {
        let rate = -stability.max_re_eig;
        let base = 50.0 / p.gamma;
        if rate > 0.0 {
            base.max(30.0 / rate).min(1000.0 / p.gamma)
        } else {
            base
        }
    })
}

fn channel_row(cfg: &Config, p: &Point) -> Result<Row> {
    let sa = thermal_state(p.n_a, 1)?;
    let sc = euler_charged_cov(p.n_a, &ChannelSpec::new(p.theta, p.r)?)?;
    let t_free = cfg.t_free.temperature(p.mu, p.n_b);
    // unitary stroke: all energy is work, no heat
    let e_a = battery_core::internal_energy(&sa, p.mu);
    let e_b = battery_core::internal_energy(&sc, p.mu);
    let delta_e = e_b - e_a;
    let delta_s = battery_core::von_neumann_entropy(&sc)? - battery_core::von_neumann_entropy(&sa)?;
    let delta_f = battery_core::free_energy_change(&sa, &sc, p.mu, t_free)?;
    let eta = battery_core::efficiency(&sa, &sc, p.mu, t_free).ok();
    Ok(Row {
        point: *p,
        stable: true,
        derived: Derived {
            e_a: Some(e_a),
            e_b: Some(e_b),
            delta_e: Some(delta_e),
            delta_w: Some(delta_e),
            delta_q: Some(0.0),
            delta_s: Some(delta_s),
            delta_f: Some(delta_f),
            eta,
            ..Derived::default()
        },
    })
}

/// Evaluates `cfg.scenario` at `p`. Unstable points yield a row with
/// `stable = false` and no derived fields.
pub fn evaluate(cfg: &Config, p: &Point) -> Result<Row> {
    if cfg.scenario == Scenario::Channel {
        return channel_row(cfg, p);
    }
    let (drive, bath) = drive_and_bath(p)?;
    let stability = stability_check(&drive, &bath);
    let mut row = Row {
        point: *p,
        stable: stability.stable,
        derived: Derived::default(),
    };
    if !stability.stable {
        return Ok(row);
    }

    let dd = drift_diffusion(&drive, &bath, true);
    let sa = thermal_state(p.n_a, 1)?;
    let steady = steady_state(&dd)?;
    let t_free = cfg.t_free.temperature(p.mu, p.n_b);
    let horizon = horizon(cfg, p, &stability);

    match cfg.scenario {
        Scenario::Steady => {
            let (e_a, e_b) = (
                battery_core::internal_energy(&sa, p.mu),
                battery_core::internal_energy(&steady, p.mu),
            );
            row.derived = Derived {
                e_a: Some(e_a),
                e_b: Some(e_b),
                delta_e: Some(e_b - e_a),
                ..Derived::default()
            };
        }
        Scenario::Thermo => {
            let rep = ThermoReport::compute(&sa, &steady, p.mu, p.lambda, t_free)?;
            row.derived = Derived::with_thermo(&rep);
        }
        Scenario::Evolve => {
            let traj = evolve(&sa, &dd, &[0.0, horizon], Propagator::Exact)?;
            let sb: &GaussianState = traj.last().expect("two-point grid");
            let rep = ThermoReport::compute(&sa, sb, p.mu, p.lambda, t_free)?;
            row.derived = Derived::with_thermo(&rep);
        }
        Scenario::Power => {
            let rep = ThermoReport::compute(&sa, &steady, p.mu, p.lambda, t_free)?;
            row.derived = Derived::with_thermo(&rep);
            let traj = evolve(&sa, &dd, &uniform_grid(horizon, cfg.dt), Propagator::Exact)?;
            match charging_power(&traj, &steady, rep.delta_f, &cfg.speed_options()) {
                Ok(sp) => {
                    row.derived.v_ab = Some(sp.v_ab);
                    row.derived.ds_ab = Some(sp.ds_ab);
                    row.derived.ds_len = Some(sp.ds_len);
                    row.derived.delta_t = Some(sp.delta_t);
                    row.derived.power = Some(sp.power);
                    row.derived.t_trunc = Some(sp.t_trunc);
                }
                // left empty: the stroke did not settle within the horizon
                Err(Error::NotConverged { .. } | Error::SingularSpeed(_)) => {}
                Err(e) => return Err(e.into()),
            }
        }
        Scenario::Closed | Scenario::Channel => unreachable!("handled by dedicated reports"),
    }
    Ok(row)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub t: f64,
    pub cov_xx: f64,
    pub cov_xp: f64,
    pub cov_pp: f64,
    pub energy: f64,
    pub nu: f64,
}

/// Charging trajectory from the passive state at the base point.
pub fn trajectory(cfg: &Config) -> Result<Vec<TracePoint>> {
    let p = cfg.base_point();
    let (drive, bath) = drive_and_bath(&p)?;
    let stability = stability_check(&drive, &bath);
    let horizon = horizon(cfg, &p, &stability);
    let dd = drift_diffusion(&drive, &bath, true);
    let traj = evolve(
        &thermal_state(p.n_a, 1)?,
        &dd,
        &uniform_grid(horizon, cfg.dt),
        Propagator::Exact,
    )?;
    Ok(traj
        .times
        .iter()
        .zip(traj.states.iter().zip(&traj.spectra))
        .map(|(&t, (s, nu))| TracePoint {
            t,
            cov_xx: s.cov()[(0, 0)],
            cov_xp: s.cov()[(0, 1)],
            cov_pp: s.cov()[(1, 1)],
            energy: battery_core::internal_energy(s, p.mu),
            nu: nu.values()[0],
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedPoint {
    pub t: f64,
    pub delta_e_numeric: f64,
    pub delta_e_analytic: f64,
    pub abs_diff: f64,
}

/// Energy gained under the drive with the bath switched off, numerically and
/// from the closed form, on `steps` points over `[0, t_max]`.
pub fn closed_report(mu: f64, lambda: f64, n_a: f64, t_max: f64, steps: usize) -> Result<Vec<ClosedPoint>> {
    let drive = DriveSpec::constant(mu, lambda)?;
    let bath = BathSpec::closed(n_a)?;
    let dd = drift_diffusion(&drive, &bath, true);
    let sa = thermal_state(n_a, 1)?;
    let e_a = battery_core::internal_energy(&sa, mu);
    let grid: Vec<f64> = (0..steps).map(|k| t_max * k as f64 / (steps - 1) as f64).collect();
    let traj = evolve(&sa, &dd, &grid, Propagator::Exact)?;
    Ok(traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(&t, s)| {
            let numeric = battery_core::internal_energy(s, mu) - e_a;
            let analytic = battery_core::closed_energy_analytic(t, &drive, n_a);
            ClosedPoint {
                t,
                delta_e_numeric: numeric,
                delta_e_analytic: analytic,
                abs_diff: (numeric - analytic).abs(),
            }
        })
        .collect())
}
