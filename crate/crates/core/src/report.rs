//! File emitters: trajectory CSV, canonical metrics JSON, the linear-model
//! export, and the catalog motor sweep.

use std::io::Write;

use crate::catalog;
use crate::error::Error;
use crate::linear::{LinearModel, StabilityReport};
use crate::params::{validate_scenario, ScenarioConfig};
use crate::sim::{run_with_metrics, MetricsReport, Trajectory};

/// Column order of the trajectory CSV.
pub const TRAJECTORY_COLUMNS: &str = "t,phi_rad,theta_rad,psi_rad,wsx,wsy,wsz,beta_rad,beta_dot,h_rx,h_ry,v_em,tau_em,omega_em,i_em,m_ox,tau_rx,tau_ry,delta_ft_rad,dv_z";

fn fmt(v: f64) -> String {
    // 15 significant digits, enough to reconstruct the f64 time series.
    format!("{v:.14e}")
}

/// Stream a trajectory as CSV. The current channel is left empty when the
/// motor sheet carries no stall current.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{TRAJECTORY_COLUMNS}")?;
    for s in &traj.samples {
        let i_em = s.actuator.i_em.map(fmt).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt(s.t),
            fmt(s.state.phi),
            fmt(s.state.theta),
            fmt(s.state.psi),
            fmt(s.state.omega_s.x),
            fmt(s.state.omega_s.y),
            fmt(s.state.omega_s.z),
            fmt(s.state.beta),
            fmt(s.state.beta_dot),
            fmt(s.state.h_rx),
            fmt(s.state.h_ry),
            fmt(s.actuator.v_em),
            fmt(s.actuator.tau_em),
            fmt(s.actuator.omega_em),
            i_em,
            fmt(s.actuator.m_ox),
            fmt(s.input.tau_rx),
            fmt(s.input.tau_ry),
            fmt(s.delta_ft),
            fmt(s.state.dv_z),
        )?;
    }
    Ok(())
}

/// Render a trajectory CSV in memory.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut buf = Vec::new();
    write_trajectory_csv(traj, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CSV is ASCII")
}

/// Canonical metrics JSON: keys sorted, floats in shortest round-trip form,
/// so parsing and re-serializing reproduces the bytes exactly.
pub fn metrics_json(report: &MetricsReport) -> Result<String, Error> {
    let value = serde_json::to_value(report).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    let mut text =
        serde_json::to_string_pretty(&value).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    text.push('\n');
    Ok(text)
}

/// Re-serialize a parsed metrics JSON document canonically.
pub fn reserialize_metrics_json(text: &str) -> Result<String, Error> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    let mut out =
        serde_json::to_string_pretty(&value).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    out.push('\n');
    Ok(out)
}

/// Labeled CSV export of the linear model: matrices, the derived-inertia
/// block, both eigenvalue sets, and the controllability rank.
pub fn linear_model_csv(model: &LinearModel, stability: &StabilityReport) -> String {
    let mut out = String::new();
    out.push_str("section,A\n");
    for r in 0..6 {
        let row: Vec<String> = (0..6).map(|c| fmt(model.a[(r, c)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out.push_str("section,B\n");
    for r in 0..6 {
        out.push_str(&fmt(model.b[r]));
        out.push('\n');
    }
    out.push_str("section,derived_inertias\n");
    let di = &model.inertias;
    for (name, value) in [
        ("i_1", di.i_1),
        ("i_2", di.i_2),
        ("lambda", di.lambda),
        ("i_r", di.i_r),
        ("i_nz", di.i_nz),
        ("i_beta", di.i_beta),
        ("i_nm", di.i_nm),
        ("a_m2", di.a_m2),
        ("a_m3", di.a_m3),
        ("b_m", di.b_m),
        ("d_m1", di.d_m1),
        ("m_red", di.m_red),
    ] {
        out.push_str(&format!("{name},{}\n", fmt(value)));
    }
    out.push_str("section,eigenvalues_open_loop\nre,im\n");
    for e in &stability.open_loop_eigenvalues {
        out.push_str(&format!("{},{}\n", fmt(e.re), fmt(e.im)));
    }
    out.push_str("section,eigenvalues_closed_loop\nre,im\n");
    for e in &stability.closed_loop_eigenvalues {
        out.push_str(&format!("{},{}\n", fmt(e.re), fmt(e.im)));
    }
    out.push_str("section,controllability\n");
    out.push_str(&format!("rank,{}\n", stability.controllability_rank));
    out.push_str(&format!(
        "closed_loop_stable,{}\n",
        stability.closed_loop_stable
    ));
    out
}

/// One catalog motor evaluated under the scenario.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub name: String,
    pub metrics: Option<MetricsReport>,
    pub error: Option<String>,
    /// `v_em_max / v_max`.
    pub v_em_margin: Option<f64>,
    /// `omega_em_max / omega_max`.
    pub omega_em_margin: Option<f64>,
    /// `tau_em_max / tau_stall`.
    pub tau_em_margin: Option<f64>,
    /// All margin ratios below one and the run completed.
    pub feasible: bool,
}

/// Run the scenario once per embedded catalog motor, keeping the scenario's
/// gearbox ratio for every row so the comparison is uniform. Per-motor
/// failures are recorded in-row and the sweep continues.
pub fn run_motor_sweep(base: &ScenarioConfig) -> Vec<SweepRow> {
    catalog::catalog()
        .into_iter()
        .map(|mut motor| {
            motor.n_g = base.motor.n_g;
            let name = motor.name.clone();
            let mut cfg = base.clone();
            cfg.motor = motor;
            let outcome = validate_scenario(&cfg).and_then(|sc| run_with_metrics(&sc));
            match outcome {
                Ok((traj, metrics, _model)) => {
                    let v_margin = metrics.v_em_max_v / cfg.motor.v_max;
                    let w_margin = metrics.omega_em_max_rad_s / cfg.motor.omega_max;
                    let t_margin = metrics.tau_em_max_nm / cfg.motor.tau_stall;
                    let feasible = traj.abort.is_none()
                        && v_margin < 1.0
                        && w_margin < 1.0
                        && t_margin < 1.0;
                    SweepRow {
                        name,
                        error: traj.abort.map(|a| format!("aborted at t = {:.4} s: {}", a.t, a.reason)),
                        metrics: Some(metrics),
                        v_em_margin: Some(v_margin),
                        omega_em_margin: Some(w_margin),
                        tau_em_margin: Some(t_margin),
                        feasible,
                    }
                }
                Err(e) => SweepRow {
                    name,
                    metrics: None,
                    error: Some(e.to_string()),
                    v_em_margin: None,
                    omega_em_margin: None,
                    tau_em_margin: None,
                    feasible: false,
                },
            }
        })
        .collect()
}

fn opt_fmt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

/// Render sweep rows as CSV, one row per motor.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "name,feasible,error,phi_max_deg,theta_max_deg,beta_max_deg,beta_dot_max_deg_s,\
         delta_ft_max_deg,delta_ft_mean_deg,v_z_m_s,v_em_max_v,omega_em_max_rad_s,tau_em_max_nm,\
         i_em_max_a,clamp_count,ctrb_rank,closed_loop_stable,aborted,v_em_margin,omega_em_margin,tau_em_margin\n",
    );
    for row in rows {
        let error = row
            .error
            .as_deref()
            .unwrap_or("")
            .replace([',', '\n'], ";");
        match &row.metrics {
            Some(m) => {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                    row.name,
                    row.feasible,
                    error,
                    fmt(m.phi_max_deg),
                    fmt(m.theta_max_deg),
                    fmt(m.beta_max_deg),
                    fmt(m.beta_dot_max_deg_s),
                    fmt(m.delta_ft_max_deg),
                    fmt(m.delta_ft_mean_deg),
                    fmt(m.v_z_m_s),
                    fmt(m.v_em_max_v),
                    fmt(m.omega_em_max_rad_s),
                    fmt(m.tau_em_max_nm),
                    opt_fmt(m.i_em_max_a),
                    m.clamp_count,
                    m.ctrb_rank,
                    m.closed_loop_stable,
                    m.aborted,
                    opt_fmt(row.v_em_margin),
                    opt_fmt(row.omega_em_margin),
                    opt_fmt(row.tau_em_margin),
                ));
            }
            None => {
                out.push_str(&format!(
                    "{},{},{},,,,,,,,,,,,,,,,,,\n",
                    row.name, row.feasible, error
                ));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use crate::control::GainVector;
    use crate::linear::{build_state_space, stability_report};
    use crate::params::validate_scenario;
    use crate::sim::run_scenario;

    fn short_baseline() -> crate::params::Scenario {
        let mut cfg = parse_config(crate::PAPER_BASELINE_CONFIG).unwrap();
        cfg.duration = 0.1;
        validate_scenario(&cfg).unwrap()
    }

    #[test]
    fn csv_has_the_pinned_header_and_full_rows() {
        let sc = short_baseline();
        let traj = run_scenario(&sc).unwrap();
        let csv = trajectory_csv(&traj);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), TRAJECTORY_COLUMNS);
        let first = lines.next().unwrap();
        assert_eq!(first.split(',').count(), 20);
        assert_eq!(csv.lines().count(), traj.samples.len() + 1);
    }

    #[test]
    fn csv_values_carry_full_precision() {
        let sc = short_baseline();
        let traj = run_scenario(&sc).unwrap();
        let csv = trajectory_csv(&traj);
        let row: Vec<&str> = csv.lines().nth(5).unwrap().split(',').collect();
        let t: f64 = row[0].parse().unwrap();
        assert_eq!(t, traj.samples[4].t);
        let phi: f64 = row[1].parse().unwrap();
        assert_eq!(phi, traj.samples[4].state.phi);
    }

    #[test]
    fn metrics_json_round_trips_byte_identically() {
        let sc = short_baseline();
        let (_t, metrics, _m) = crate::sim::run_with_metrics(&sc).unwrap();
        let text = metrics_json(&metrics).unwrap();
        assert_eq!(reserialize_metrics_json(&text).unwrap(), text);
        assert!(text.contains("\"delta_ft_max_deg\""));
        // Keys come out sorted.
        let keys: Vec<&str> = text
            .lines()
            .filter_map(|l| l.trim().strip_prefix('"'))
            .filter_map(|l| l.split('"').next())
            .collect();
        let mut sorted = keys.clone();
        sorted.sort_unstable();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn linear_export_contains_all_sections() {
        let sc = short_baseline();
        let model = build_state_space(
            &sc.config.spacecraft,
            &sc.config.motor,
            &sc.motor_derived,
        )
        .unwrap();
        let stability = stability_report(&model, &sc.config.gain).unwrap();
        let csv = linear_model_csv(&model, &stability);
        for section in [
            "section,A",
            "section,B",
            "section,derived_inertias",
            "section,eigenvalues_open_loop",
            "section,eigenvalues_closed_loop",
            "section,controllability",
        ] {
            assert!(csv.contains(section), "missing {section}");
        }
        assert!(csv.contains("rank,6"));
    }

    #[test]
    fn zero_gain_export_keeps_open_loop_eigenvalues() {
        let sc = short_baseline();
        let model = build_state_space(
            &sc.config.spacecraft,
            &sc.config.motor,
            &sc.motor_derived,
        )
        .unwrap();
        let stability = stability_report(&model, &GainVector::zeros()).unwrap();
        assert_eq!(stability.open_loop_max_re, stability.closed_loop_max_re);
    }

    #[test]
    fn sweep_covers_the_catalog_and_continues_past_failures() {
        let mut cfg = parse_config(crate::PAPER_BASELINE_CONFIG).unwrap();
        cfg.duration = 0.05;
        let rows = run_motor_sweep(&cfg);
        assert_eq!(rows.len(), 6);
        let csv = sweep_csv(&rows);
        assert_eq!(csv.lines().count(), 7);
        for row in &rows {
            assert!(row.metrics.is_some() || row.error.is_some());
        }
    }
}
