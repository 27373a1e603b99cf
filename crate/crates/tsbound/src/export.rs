//! CSV and JSON artifacts.
//!
//! CSV files carry a header row and write every float with nine
//! significant digits in scientific notation. Missing values are empty
//! fields.

use std::fmt::Write as _;

use serde::Serialize;
use tsbound_core::assess::SweepRow;
use tsbound_core::dynamics::{diameter, state_diameter, Trajectory};
use tsbound_core::gronwall::BoundCurve;

pub fn fmt_float(x: f64) -> String {
    format!("{x:.8e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

/// Quotes a field when it contains a separator, quote or line break.
fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn push_row(out: &mut String, fields: impl IntoIterator<Item = String>) {
    let row: Vec<String> = fields.into_iter().collect();
    out.push_str(&row.join(","));
    out.push_str("\r\n");
}

/// `t, θ_1..θ_n, θ̇_1..θ̇_n, D, Ḋ` for consecutive legs. A leg that starts
/// where the previous one ended does not repeat that row.
pub fn trajectory_csv(legs: &[&Trajectory]) -> String {
    let n = legs.first().map_or(0, |l| l.n);
    let mut out = String::new();
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("theta_{i}")));
    header.extend((1..=n).map(|i| format!("omega_{i}")));
    header.extend(["D".to_string(), "D_rate".to_string()]);
    push_row(&mut out, header);
    let mut last_t = f64::NEG_INFINITY;
    for leg in legs {
        for k in 0..leg.len() {
            let t = leg.time(k);
            if t <= last_t {
                continue;
            }
            last_t = t;
            let (theta, speed) = (leg.theta(k), leg.speed(k));
            let (d, rate, _, _) = state_diameter(theta, speed);
            let mut row = vec![fmt_float(t)];
            row.extend(theta.iter().chain(speed).map(|&v| fmt_float(v)));
            row.extend([fmt_float(d), fmt_float(rate)]);
            push_row(&mut out, row);
        }
    }
    out
}

/// Bound curve and numerical diameter on the post-fault grid. Times are
/// absolute; the bound is blank once it has crossed ζ.
pub fn bound_csv(curve: &BoundCurve, post_fault: &Trajectory) -> String {
    let series = diameter(post_fault);
    let mut out = String::new();
    push_row(&mut out, ["t".into(), "bound".into(), "D_numerical".into()]);
    for k in 0..post_fault.len() {
        let rel = k as f64 * post_fault.step;
        push_row(&mut out, [fmt_float(post_fault.time(k)), fmt_opt(curve.value(rel)), fmt_float(series.value[k])]);
    }
    out
}

pub fn sweep_csv(parameter: &str, rows: &[SweepRow]) -> String {
    let mut out = String::new();
    push_row(
        &mut out,
        [quote(parameter), "mu".into(), "cct_analytic".into(), "cct_numerical".into(), "error".into()],
    );
    for r in rows {
        push_row(
            &mut out,
            [
                fmt_float(r.value),
                fmt_opt(r.mu),
                fmt_opt(r.cct_analytic),
                fmt_opt(r.cct_numerical),
                quote(r.error.as_deref().unwrap_or("")),
            ],
        );
    }
    out
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    let _ = writeln!(s);
    Ok(s)
}
