//! Fixed-step closed-loop integration of the selected plant, scenario
//! execution, and extraction of the overshoot metrics.
//!
//! The integrator is classical RK4 at a fixed step. The feedback voltage
//! and the wheel feed-forward are re-evaluated at every stage state, so the
//! controller is the continuous-control idealization. Wheel momenta are
//! integrated alongside the plant states; the velocity change accumulates
//! by a left-rectangle rule on the step's starting sample.

use nalgebra::{SVector, Vector6};
use serde::{Deserialize, Serialize};

use crate::actuator::{clamp_voltage, gearbox_reflect, motor_current, motor_torque, ActuatorSample};
use crate::control::rw_feedforward;
use crate::dynamics::{
    accumulate_delta_v, coupled_accels, euler_rates, thrust_deviation, InputVector, StateVector,
};
use crate::error::{Error, ValidationIssue};
use crate::linear::{
    build_state_space, disturbance_torques, stability_report, DisturbanceInputs, DisturbancePair,
    LinearModel,
};
use crate::params::{PlantModel, Scenario};

type SimVec = SVector<f64, 10>;

const IDX_PHI: usize = 0;
const IDX_THETA: usize = 1;
const IDX_PSI: usize = 2;
const IDX_WX: usize = 3;
const IDX_WY: usize = 4;
const IDX_WZ: usize = 5;
const IDX_BETA: usize = 6;
const IDX_BETA_DOT: usize = 7;
const IDX_HRX: usize = 8;
const IDX_HRY: usize = 9;

fn pack(state: &StateVector) -> SimVec {
    SimVec::from_column_slice(&[
        state.phi,
        state.theta,
        state.psi,
        state.omega_s.x,
        state.omega_s.y,
        state.omega_s.z,
        state.beta,
        state.beta_dot,
        state.h_rx,
        state.h_ry,
    ])
}

fn unpack(y: &SimVec, dv_z: f64) -> StateVector {
    StateVector {
        phi: y[IDX_PHI],
        theta: y[IDX_THETA],
        psi: y[IDX_PSI],
        omega_s: nalgebra::Vector3::new(y[IDX_WX], y[IDX_WY], y[IDX_WZ]),
        beta: y[IDX_BETA],
        beta_dot: y[IDX_BETA_DOT],
        h_rx: y[IDX_HRX],
        h_ry: y[IDX_HRY],
        dv_z,
    }
}

/// Precomputed scenario context for stepping the closed loop.
#[derive(Debug, Clone)]
pub struct SimContext {
    pub scenario: Scenario,
    pub linear: LinearModel,
    /// Disturbance pair used by the linear plant's D(t) and the wheel
    /// feed-forward targets (override when configured, else the offset
    /// formula).
    pub dist: DisturbancePair,
    /// Disturbance pair injected into the nonlinear plant as an external
    /// body torque. With no override this is zero: real lateral offsets act
    /// through the pivot geometry itself, and injecting the formula value
    /// on top would count them twice.
    pub dist_nonlinear: DisturbancePair,
    gain: Vector6<f64>,
}

impl SimContext {
    pub fn new(scenario: &Scenario) -> Result<Self, Error> {
        let p = &scenario.config.spacecraft;
        if !(scenario.config.dt > 0.0) {
            return Err(Error::Validation(vec![ValidationIssue::new(
                "sim.dt",
                "dt must be positive",
            )]));
        }
        if p.spin_rate == 0.0 {
            return Err(Error::Validation(vec![ValidationIssue::new(
                "spacecraft.spin_rate",
                "reaction-wheel feed-forward is undefined at zero spin rate",
            )]));
        }
        let linear = build_state_space(p, &scenario.config.motor, &scenario.motor_derived)?;
        let dist = disturbance_torques(p);
        let dist_nonlinear = match p.disturbance_override {
            Some((tau_dx, tau_dy)) => DisturbancePair { tau_dx, tau_dy },
            None => DisturbancePair::zero(),
        };
        let gain = scenario.config.gain.as_vector6()?;
        Ok(SimContext {
            scenario: scenario.clone(),
            linear,
            dist,
            dist_nonlinear,
            gain,
        })
    }

    fn feedback(&self, y: &SimVec) -> (f64, bool) {
        let x = Vector6::new(
            y[IDX_PHI],
            y[IDX_THETA],
            y[IDX_WX],
            y[IDX_WY],
            y[IDX_BETA],
            y[IDX_BETA_DOT],
        );
        let command = -self.gain.dot(&x);
        clamp_voltage(command, self.scenario.config.motor.v_max)
    }

    fn wheel_torques(&self, y: &SimVec) -> Result<(f64, f64), Error> {
        let cmd = rw_feedforward(
            y[IDX_HRX],
            y[IDX_HRY],
            &self.dist,
            self.scenario.config.spacecraft.spin_rate,
            &self.scenario.config.rw,
        )?;
        Ok((cmd.tau_rx, cmd.tau_ry))
    }

    /// Closed-loop vector field at one stage state.
    fn vector_field(&self, y: &SimVec, t: f64) -> Result<SimVec, Error> {
        let cfg = &self.scenario.config;
        let (v_em, _) = self.feedback(y);
        let (tau_rx, tau_ry) = self.wheel_torques(y)?;
        let w_x = cfg.w_x.eval(t);
        let w_y = cfg.w_y.eval(t);

        let mut dy = SimVec::zeros();
        match cfg.model {
            PlantModel::Linear => {
                let x = Vector6::new(
                    y[IDX_PHI],
                    y[IDX_THETA],
                    y[IDX_WX],
                    y[IDX_WY],
                    y[IDX_BETA],
                    y[IDX_BETA_DOT],
                );
                let d = self.linear.d_template.compose(
                    &self.dist,
                    &DisturbanceInputs {
                        tau_rx,
                        tau_ry,
                        h_rx: y[IDX_HRX],
                        h_ry: y[IDX_HRY],
                        w_x,
                        w_y,
                    },
                );
                let xdot = self.linear.a * x + self.linear.b * v_em + d;
                dy[IDX_PHI] = xdot[0];
                dy[IDX_THETA] = xdot[1];
                dy[IDX_WX] = xdot[2];
                dy[IDX_WY] = xdot[3];
                dy[IDX_BETA] = xdot[4];
                dy[IDX_BETA_DOT] = xdot[5];
                // Bookkeeping only: nominal spin, constant spin rate.
                dy[IDX_PSI] = cfg.spacecraft.spin_rate;
                dy[IDX_WZ] = 0.0;
            }
            PlantModel::Nonlinear => {
                let state = unpack(y, 0.0);
                let rates = euler_rates(state.phi, state.theta, &state.omega_s)?;
                let input = InputVector {
                    v_em,
                    tau_rx,
                    tau_ry,
                    w_x,
                    w_y,
                };
                let accels = coupled_accels(
                    &state,
                    &input,
                    &cfg.spacecraft,
                    &cfg.motor,
                    &self.scenario.motor_derived,
                    &self.dist_nonlinear,
                )?;
                dy[IDX_PHI] = rates.x;
                dy[IDX_THETA] = rates.y;
                dy[IDX_PSI] = rates.z;
                dy[IDX_WX] = accels.omega_dot.x;
                dy[IDX_WY] = accels.omega_dot.y;
                dy[IDX_WZ] = accels.omega_dot.z;
                dy[IDX_BETA] = state.beta_dot;
                dy[IDX_BETA_DOT] = accels.beta_ddot;
            }
        }
        dy[IDX_HRX] = tau_rx;
        dy[IDX_HRY] = tau_ry;
        Ok(dy)
    }

    fn rk4_from(&self, y: &SimVec, t: f64, k1: &SimVec) -> Result<SimVec, Error> {
        let dt = self.scenario.config.dt;
        let half = 0.5 * dt;
        let k2 = self.vector_field(&(y + half * k1), t + half)?;
        let k3 = self.vector_field(&(y + half * k2), t + half)?;
        let k4 = self.vector_field(&(y + dt * k3), t + dt)?;
        Ok(y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
    }
}

/// Advance the closed loop by one RK4 step from `state` at time `t`.
/// The velocity change accrues from the starting sample.
pub fn integrate_step(ctx: &SimContext, state: &StateVector, t: f64) -> Result<StateVector, Error> {
    let y = pack(state);
    let k1 = ctx.vector_field(&y, t)?;
    let next = ctx.rk4_from(&y, t, &k1)?;
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { t });
    }
    let delta_ft = thrust_deviation(state.phi, state.theta, state.beta);
    let dv_z = accumulate_delta_v(state.dv_z, delta_ft, ctx.scenario.a_max, ctx.scenario.config.dt);
    Ok(unpack(&next, dv_z))
}

/// One recorded trajectory sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub state: StateVector,
    pub input: InputVector,
    pub actuator: ActuatorSample,
    /// Thrust-vector deviation (rad).
    pub delta_ft: f64,
    /// Whether the commanded voltage exceeded the supply at this sample.
    pub clamped: bool,
}

/// Why a run ended before its configured duration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbortInfo {
    pub t: f64,
    pub reason: String,
}

/// A uniformly sampled closed-loop run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub model: PlantModel,
    pub dt: f64,
    /// FNV-1a digest of the canonicalized configuration.
    pub config_digest: u64,
    pub abort: Option<AbortInfo>,
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn sample_count(duration: f64, dt: f64) -> usize {
    let q = duration / dt;
    // floor(duration/dt) + 1, tolerating floating-point noise at exact
    // multiples.
    let n = if (q - q.round()).abs() < 1e-9 {
        q.round()
    } else {
        q.floor()
    };
    n as usize + 1
}

/// Integrate the configured scenario over `[0, duration]`.
///
/// Starts from zero deviations plus any configured initial-state overrides,
/// at the nominal spin, with wheels empty. A guard-band or non-finite-state
/// event truncates the trajectory and sets the abort flag; everything
/// integrated so far is kept.
pub fn run_scenario(scenario: &Scenario) -> Result<Trajectory, Error> {
    let ctx = SimContext::new(scenario)?;
    run_with_context(&ctx)
}

/// As [`run_scenario`], reusing a prepared context.
pub fn run_with_context(ctx: &SimContext) -> Result<Trajectory, Error> {
    let cfg = &ctx.scenario.config;
    let n_samples = sample_count(cfg.duration, cfg.dt);
    let digest = fnv1a64(
        serde_json::to_string(cfg)
            .map_err(|e| Error::Io(std::io::Error::other(e)))?
            .as_bytes(),
    );

    let init = &cfg.initial;
    let mut state = StateVector::equilibrium(cfg.spacecraft.spin_rate);
    state.phi = init.phi;
    state.theta = init.theta;
    state.psi = init.psi;
    state.omega_s.x = init.w_sx;
    state.omega_s.y = init.w_sy;
    state.beta = init.beta;
    state.beta_dot = init.beta_dot;
    state.h_rx = init.h_rx;
    state.h_ry = init.h_ry;

    let mut samples: Vec<TrajectorySample> = Vec::with_capacity(n_samples);
    let mut abort = None;

    for k in 0..n_samples {
        let t = k as f64 * cfg.dt;
        if !state.is_finite() {
            abort = Some(AbortInfo {
                t,
                reason: Error::NonFinite { t }.to_string(),
            });
            break;
        }
        let y = pack(&state);
        let k1 = match ctx.vector_field(&y, t) {
            Ok(k1) => k1,
            Err(e) => {
                abort = Some(AbortInfo {
                    t,
                    reason: e.to_string(),
                });
                break;
            }
        };

        // Record the sample using the freshly evaluated field (the gimbal
        // acceleration feeds the motor-torque channel).
        let (v_applied, clamped) = ctx.feedback(&y);
        let (tau_rx, tau_ry) = (k1[IDX_HRX], k1[IDX_HRY]);
        let (m_ox_unit, omega_em) = gearbox_reflect(1.0, state.beta_dot, cfg.motor.n_g);
        let _ = m_ox_unit;
        let omega_dot_em = cfg.motor.n_g * k1[IDX_BETA_DOT];
        let tau_em = motor_torque(
            v_applied,
            omega_em,
            omega_dot_em,
            &cfg.motor,
            &ctx.scenario.motor_derived,
        );
        let (m_ox, _) = gearbox_reflect(tau_em, state.beta_dot, cfg.motor.n_g);
        let i_em = motor_current(v_applied, omega_em, &ctx.scenario.motor_derived).ok();
        let delta_ft = thrust_deviation(state.phi, state.theta, state.beta);
        samples.push(TrajectorySample {
            t,
            state,
            input: InputVector {
                v_em: v_applied,
                tau_rx,
                tau_ry,
                w_x: cfg.w_x.eval(t),
                w_y: cfg.w_y.eval(t),
            },
            actuator: ActuatorSample {
                tau_em,
                omega_em,
                i_em,
                v_em: v_applied,
                m_ox,
            },
            delta_ft,
            clamped,
        });

        if k + 1 == n_samples {
            break;
        }

        let dv_z = accumulate_delta_v(state.dv_z, delta_ft, ctx.scenario.a_max, cfg.dt);
        match ctx.rk4_from(&y, t, &k1) {
            Ok(next) if next.iter().all(|v| v.is_finite()) => {
                state = unpack(&next, dv_z);
            }
            Ok(_) => {
                abort = Some(AbortInfo {
                    t,
                    reason: Error::NonFinite { t }.to_string(),
                });
                break;
            }
            Err(e) => {
                abort = Some(AbortInfo {
                    t,
                    reason: e.to_string(),
                });
                break;
            }
        }
    }

    Ok(Trajectory {
        samples,
        model: cfg.model,
        dt: cfg.dt,
        config_digest: digest,
        abort,
    })
}

/// Overshoot summary of a run. Maxima are maxima of absolute values over
/// the trajectory; the mean deviation is the arithmetic time-average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub phi_max_deg: f64,
    pub theta_max_deg: f64,
    pub beta_max_deg: f64,
    pub beta_dot_max_deg_s: f64,
    pub delta_ft_max_deg: f64,
    pub delta_ft_mean_deg: f64,
    pub v_z_m_s: f64,
    pub v_em_max_v: f64,
    pub omega_em_max_rad_s: f64,
    pub tau_em_max_nm: f64,
    pub i_em_max_a: Option<f64>,
    pub clamp_count: u64,
    pub ctrb_rank: usize,
    pub open_loop_max_re: f64,
    pub closed_loop_max_re: f64,
    pub closed_loop_stable: bool,
    pub model: PlantModel,
    pub aborted: bool,
}

/// Reduce a trajectory to its overshoot metrics, attaching the stability
/// verdicts of the linear model under the scenario gain.
pub fn compute_metrics(
    traj: &Trajectory,
    model: &LinearModel,
    gain: &crate::control::GainVector,
) -> Result<MetricsReport, Error> {
    if traj.samples.is_empty() {
        return Err(Error::Validation(vec![ValidationIssue::new(
            "trajectory",
            "cannot compute metrics of an empty trajectory",
        )]));
    }
    let mut phi_max: f64 = 0.0;
    let mut theta_max: f64 = 0.0;
    let mut beta_max: f64 = 0.0;
    let mut beta_dot_max: f64 = 0.0;
    let mut delta_max: f64 = 0.0;
    let mut delta_sum = 0.0;
    let mut v_max: f64 = 0.0;
    let mut omega_em_max: f64 = 0.0;
    let mut tau_em_max: f64 = 0.0;
    let mut i_em_max: Option<f64> = None;
    let mut clamp_count = 0u64;
    for s in &traj.samples {
        phi_max = phi_max.max(s.state.phi.abs());
        theta_max = theta_max.max(s.state.theta.abs());
        beta_max = beta_max.max(s.state.beta.abs());
        beta_dot_max = beta_dot_max.max(s.state.beta_dot.abs());
        delta_max = delta_max.max(s.delta_ft);
        delta_sum += s.delta_ft;
        v_max = v_max.max(s.actuator.v_em.abs());
        omega_em_max = omega_em_max.max(s.actuator.omega_em.abs());
        tau_em_max = tau_em_max.max(s.actuator.tau_em.abs());
        if let Some(i) = s.actuator.i_em {
            i_em_max = Some(i_em_max.unwrap_or(0.0).max(i.abs()));
        }
        if s.clamped {
            clamp_count += 1;
        }
    }
    let stability = stability_report(model, gain)?;
    Ok(MetricsReport {
        phi_max_deg: phi_max.to_degrees(),
        theta_max_deg: theta_max.to_degrees(),
        beta_max_deg: beta_max.to_degrees(),
        beta_dot_max_deg_s: beta_dot_max.to_degrees(),
        delta_ft_max_deg: delta_max.to_degrees(),
        delta_ft_mean_deg: (delta_sum / traj.samples.len() as f64).to_degrees(),
        v_z_m_s: traj.samples.last().expect("non-empty").state.dv_z,
        v_em_max_v: v_max,
        omega_em_max_rad_s: omega_em_max,
        tau_em_max_nm: tau_em_max,
        i_em_max_a: i_em_max,
        clamp_count,
        ctrb_rank: stability.controllability_rank,
        open_loop_max_re: stability.open_loop_max_re,
        closed_loop_max_re: stability.closed_loop_max_re,
        closed_loop_stable: stability.closed_loop_stable,
        model: traj.model,
        aborted: traj.abort.is_some(),
    })
}

/// Run a validated scenario and summarize it in one call.
pub fn run_with_metrics(
    scenario: &Scenario,
) -> Result<(Trajectory, MetricsReport, LinearModel), Error> {
    let ctx = SimContext::new(scenario)?;
    let traj = run_with_context(&ctx)?;
    let metrics = compute_metrics(&traj, &ctx.linear, &scenario.config.gain)?;
    Ok((traj, metrics, ctx.linear))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use crate::params::validate_scenario;
    use approx::assert_relative_eq;

    fn baseline() -> Scenario {
        let cfg = parse_config(crate::PAPER_BASELINE_CONFIG).unwrap();
        validate_scenario(&cfg).unwrap()
    }

    #[test]
    fn sample_count_handles_exact_multiples() {
        assert_eq!(sample_count(50.0, 0.0005), 100_001);
        assert_eq!(sample_count(1.0, 0.0005), 2_001);
        assert_eq!(sample_count(0.0011, 0.0005), 3); // floor(2.2) + 1
    }

    #[test]
    fn equilibrium_is_a_fixed_point_of_the_step() {
        let mut sc = baseline();
        sc.config.spacecraft.disturbance_override = Some((0.0, 0.0));
        sc.config.model = PlantModel::Nonlinear;
        let ctx = SimContext::new(&sc).unwrap();
        let state = StateVector::equilibrium(6.0);
        let next = integrate_step(&ctx, &state, 0.0).unwrap();
        // Dynamic states stay put bit-for-bit; only the velocity change
        // accrues (aligned thrust, full rate).
        assert_eq!(next.phi, 0.0);
        assert_eq!(next.theta, 0.0);
        assert_eq!(next.omega_s, state.omega_s);
        assert_eq!(next.beta, 0.0);
        assert_eq!(next.beta_dot, 0.0);
        assert_eq!(next.h_rx, 0.0);
        assert_eq!(next.h_ry, 0.0);
        assert_relative_eq!(next.dv_z, sc.a_max * sc.config.dt, max_relative = 1e-15);
    }

    #[test]
    fn zero_dt_is_rejected_by_the_context() {
        let mut sc = baseline();
        sc.config.dt = 0.0;
        assert!(matches!(SimContext::new(&sc), Err(Error::Validation(_))));
    }

    #[test]
    fn trajectory_grid_is_uniform_and_complete() {
        let mut sc = baseline();
        sc.config.duration = 0.25;
        let traj = run_scenario(&sc).unwrap();
        assert!(traj.abort.is_none());
        assert_eq!(traj.samples.len(), 501);
        for (k, s) in traj.samples.iter().enumerate() {
            assert_relative_eq!(s.t, k as f64 * sc.config.dt, epsilon = 1e-12);
        }
    }

    #[test]
    fn rotor_speed_is_the_geared_gimbal_rate_on_every_sample() {
        let mut sc = baseline();
        sc.config.duration = 0.5;
        let traj = run_scenario(&sc).unwrap();
        for s in &traj.samples {
            assert_eq!(s.actuator.omega_em, sc.config.motor.n_g * s.state.beta_dot);
        }
    }

    #[test]
    fn undisturbed_run_stays_at_equilibrium() {
        let mut sc = baseline();
        sc.config.spacecraft.disturbance_override = Some((0.0, 0.0));
        sc.config.duration = 2.0;
        for model in [PlantModel::Linear, PlantModel::Nonlinear] {
            sc.config.model = model;
            let traj = run_scenario(&sc).unwrap();
            for s in &traj.samples {
                assert!(s.state.phi.abs() < 1e-9);
                assert!(s.state.theta.abs() < 1e-9);
                assert!(s.state.beta.abs() < 1e-9);
                assert!(s.state.omega_s.x.abs() < 1e-9);
                assert!(s.state.omega_s.y.abs() < 1e-9);
                assert!((s.state.omega_s.z - 6.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn runaway_pitch_aborts_with_diagnostics_not_nan() {
        let mut sc = baseline();
        // No feedback, tiny wheels, giant disturbance: the attitude runs
        // into the pitch guard.
        sc.config.gain = crate::control::GainVector::zeros();
        sc.config.rw.tau_rm = 1e-12;
        sc.config.spacecraft.disturbance_override = Some((400.0, 0.0));
        sc.config.model = PlantModel::Nonlinear;
        let traj = run_scenario(&sc).unwrap();
        let abort = traj.abort.expect("expected an abort");
        assert!(abort.reason.contains("singularity"), "{}", abort.reason);
        assert!(!traj.samples.is_empty());
        assert!(traj.samples.len() < sample_count(50.0, sc.config.dt));
        for s in &traj.samples {
            assert!(s.state.is_finite());
        }
    }

    #[test]
    fn metrics_of_a_constant_equilibrium_run_are_zero() {
        let mut sc = baseline();
        sc.config.spacecraft.disturbance_override = Some((0.0, 0.0));
        sc.config.duration = 1.0;
        let (traj, metrics, _model) = run_with_metrics(&sc).unwrap();
        assert!(traj.abort.is_none());
        assert_eq!(metrics.phi_max_deg, 0.0);
        assert_eq!(metrics.theta_max_deg, 0.0);
        assert_eq!(metrics.beta_max_deg, 0.0);
        assert_eq!(metrics.delta_ft_max_deg, 0.0);
        assert_eq!(metrics.v_em_max_v, 0.0);
        assert_eq!(metrics.clamp_count, 0);
        assert_relative_eq!(
            metrics.v_z_m_s,
            sc.a_max * (sc.config.duration - sc.config.dt),
            max_relative = 1e-12
        );
    }

    #[test]
    fn internal_radians_convert_to_degrees_only_at_the_report() {
        let mut sc = baseline();
        sc.config.duration = 0.2;
        let (traj, metrics, _model) = run_with_metrics(&sc).unwrap();
        let phi_max_rad = traj
            .samples
            .iter()
            .map(|s| s.state.phi.abs())
            .fold(0.0, f64::max);
        assert_relative_eq!(metrics.phi_max_deg.to_radians(), phi_max_rad, max_relative = 1e-12);
    }

    #[test]
    fn determinism_identical_runs_bitwise() {
        let mut sc = baseline();
        sc.config.duration = 0.5;
        let a = run_scenario(&sc).unwrap();
        let b = run_scenario(&sc).unwrap();
        assert_eq!(a.samples.len(), b.samples.len());
        for (x, y) in a.samples.iter().zip(b.samples.iter()) {
            assert_eq!(x, y);
        }
        assert_eq!(a.config_digest, b.config_digest);
    }
}
