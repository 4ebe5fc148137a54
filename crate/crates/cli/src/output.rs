//! CSV emission: header row, comma separated, LF line endings, floats in
//! `{:.16e}` so every value round-trips exactly.

use std::fmt::Write;

use crate::config::{Config, Target};
use crate::scenario::{ClosedPoint, Derived, Row, TracePoint};

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub const INPUT_COLUMNS: [&str; 10] = [
    "mu", "gamma", "n_a", "n_b", "r_b", "theta_b", "lambda", "r", "theta", "t_free",
];

pub fn rows_csv(cfg: &Config, rows: &[Row]) -> String {
    let mut out = String::new();
    let header: Vec<&str> = INPUT_COLUMNS
        .iter()
        .copied()
        .chain(["stable"])
        .chain(Derived::COLUMNS)
        .collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let p = &row.point;
        let mut fields: Vec<String> = [p.mu, p.gamma, p.n_a, p.n_b, p.r_b, p.theta_b, p.lambda, p.r, p.theta]
            .into_iter()
            .map(fmt_f64)
            .collect();
        fields.push(cfg.t_free.name().to_string());
        fields.push(row.stable.to_string());
        fields.extend(row.derived.values().into_iter().map(fmt_opt));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn trace_csv(points: &[TracePoint]) -> String {
    let mut out = String::from("t,cov_xx,cov_xp,cov_pp,energy,nu\n");
    for p in points {
        let fields = [p.t, p.cov_xx, p.cov_xp, p.cov_pp, p.energy, p.nu].map(fmt_f64);
        writeln!(out, "{}", fields.join(",")).unwrap();
    }
    out
}

pub fn closed_csv(points: &[ClosedPoint]) -> String {
    let mut out = String::from("t,delta_E_numeric,delta_E_analytic,abs_diff\n");
    for p in points {
        let fields = [p.t, p.delta_e_numeric, p.delta_e_analytic, p.abs_diff].map(fmt_f64);
        writeln!(out, "{}", fields.join(",")).unwrap();
    }
    out
}

pub fn optimum_csv(target: Target, theta: f64, value: f64) -> String {
    format!(
        "target,theta_star,value\n{},{},{}\n",
        target.name(),
        fmt_f64(theta),
        fmt_f64(value)
    )
}
