//! Nonlinear two-body rotational dynamics of the spinning body plus the
//! gimbaled nozzle, Euler-angle kinematics, thrust-vector deviation, and
//! velocity-change accounting.
//!
//! Frames: the body equation is written in the body frame; the nozzle and
//! gimbal-axis equations in the nozzle frame, with `C = R_x(beta)` mapping
//! nozzle components to body components (the gimbal axis is the shared x
//! axis). The pivot constraint force is eliminated through the two-body
//! translational coupling, which carries the reduced mass, and the result
//! is a symmetric 4x4 solve for `(omega_dot, beta_ddot)`.

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::linear::DisturbancePair;
use crate::params::{MotorDerived, MotorSpec, SpacecraftParams};

/// Guard margin below the 90 deg pitch singularity (rad). Slightly wider
/// than 10 deg so that a pitch of exactly 80 deg is already rejected.
pub const THETA_GUARD_MARGIN: f64 = 0.175;

/// Largest |theta| the kinematics will evaluate (rad).
pub fn theta_guard() -> f64 {
    std::f64::consts::FRAC_PI_2 - THETA_GUARD_MARGIN
}

/// Full simulation state: attitude, body rates, gimbal coordinates, wheel
/// momenta, and the accumulated velocity change.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    /// Roll attitude (rad).
    pub phi: f64,
    /// Pitch attitude (rad).
    pub theta: f64,
    /// Spin attitude (rad); bookkeeping only, excluded from control.
    pub psi: f64,
    /// Body angular velocity in body axes (rad/s).
    pub omega_s: Vector3<f64>,
    /// Gimbal angle (rad).
    pub beta: f64,
    /// Gimbal rate (rad/s).
    pub beta_dot: f64,
    /// x-wheel momentum (N·m·s).
    pub h_rx: f64,
    /// y-wheel momentum (N·m·s).
    pub h_ry: f64,
    /// Accumulated velocity change along the target direction (m/s).
    pub dv_z: f64,
}

impl StateVector {
    /// The spin equilibrium: zero deviations at the nominal spin rate.
    pub fn equilibrium(spin_rate: f64) -> Self {
        StateVector {
            phi: 0.0,
            theta: 0.0,
            psi: 0.0,
            omega_s: Vector3::new(0.0, 0.0, spin_rate),
            beta: 0.0,
            beta_dot: 0.0,
            h_rx: 0.0,
            h_ry: 0.0,
            dv_z: 0.0,
        }
    }

    /// The six feedback states `[phi, theta, w_sx, w_sy, beta, beta_dot]`.
    pub fn feedback_states(&self) -> Vector6<f64> {
        Vector6::new(
            self.phi,
            self.theta,
            self.omega_s.x,
            self.omega_s.y,
            self.beta,
            self.beta_dot,
        )
    }

    pub fn is_finite(&self) -> bool {
        self.phi.is_finite()
            && self.theta.is_finite()
            && self.psi.is_finite()
            && self.omega_s.iter().all(|v| v.is_finite())
            && self.beta.is_finite()
            && self.beta_dot.is_finite()
            && self.h_rx.is_finite()
            && self.h_ry.is_finite()
            && self.dv_z.is_finite()
    }
}

/// Inputs acting on the plant at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InputVector {
    /// Gimbal motor voltage (V), already supply-clamped.
    pub v_em: f64,
    /// x reaction-wheel axial torque (N·m).
    pub tau_rx: f64,
    /// y reaction-wheel axial torque (N·m).
    pub tau_ry: f64,
    /// Exogenous body torque about x (N·m).
    pub w_x: f64,
    /// Exogenous body torque about y (N·m).
    pub w_y: f64,
}

/// Euler-angle rates `(phi_dot, theta_dot, psi_dot)` of the 3-2-1 attitude
/// sequence for body rates `omega_s`. Errors inside the pitch guard band
/// instead of evaluating near the singularity.
pub fn euler_rates(phi: f64, theta: f64, omega_s: &Vector3<f64>) -> Result<Vector3<f64>, Error> {
    let guard = theta_guard();
    if !(theta.abs() < guard) {
        return Err(Error::Singularity {
            theta,
            guard,
        });
    }
    let (sin_phi, cos_phi) = phi.sin_cos();
    let tan_theta = theta.tan();
    let cos_theta = theta.cos();
    Ok(Vector3::new(
        omega_s.x + sin_phi * tan_theta * omega_s.y + cos_phi * tan_theta * omega_s.z,
        cos_phi * omega_s.y - sin_phi * omega_s.z,
        sin_phi / cos_theta * omega_s.y + cos_phi / cos_theta * omega_s.z,
    ))
}

/// Thrust-vector deviation from the target inertial axis:
/// `acos(cos(theta)·cos(phi + beta))`, with the argument clamped to [-1, 1]
/// to absorb rounding at near-perfect alignment.
pub fn thrust_deviation(phi: f64, theta: f64, beta: f64) -> f64 {
    (theta.cos() * (phi + beta).cos()).clamp(-1.0, 1.0).acos()
}

/// Advance the accumulated velocity change by one left-rectangle step:
/// `dv' = dv + a_max·cos(delta_ft)·dt`.
pub fn accumulate_delta_v(dv_z: f64, delta_ft: f64, a_max: f64, dt: f64) -> f64 {
    dv_z + a_max * delta_ft.cos() * dt
}

/// Angular accelerations produced by one evaluation of the coupled
/// body/nozzle/motor dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Accels {
    /// Body angular acceleration in body axes (rad/s²).
    pub omega_dot: Vector3<f64>,
    /// Gimbal angular acceleration (rad/s²).
    pub beta_ddot: f64,
}

fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

fn rot_x(beta: f64) -> Matrix3<f64> {
    let (s, c) = beta.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

/// Simultaneous solution of the body Euler equation and the nozzle/motor
/// gimbal equation.
///
/// The pivot force is eliminated through the translational constraint,
/// which introduces the reduced mass; the gimbal-axis torque is
/// `n_g·tau_em` with the rotor speed locked to `n_g·beta_dot`, so the
/// reflected rotor inertia `j_em·n_g²` joins the gimbal channel. `dist` is
/// applied as an external body torque alongside the exogenous noise; the
/// reaction-wheel pair acts through its axial torques and the gyroscopic
/// coupling of the stored momenta.
pub fn coupled_accels(
    state: &StateVector,
    input: &InputVector,
    p: &SpacecraftParams,
    motor: &MotorSpec,
    md: &MotorDerived,
    dist: &DisturbancePair,
) -> Result<Accels, Error> {
    let e_x = Vector3::x();
    let m_red = p.reduced_mass();
    let i_s = Matrix3::from_diagonal(&Vector3::new(p.i_s2, p.i_s2, p.i_s1));
    let i_n_nozzle = Matrix3::from_diagonal(&Vector3::new(p.i_n2, p.i_n2, p.i_n1));

    let w_s = state.omega_s;
    let beta_dot = state.beta_dot;
    let c = rot_x(state.beta);

    // Geometry in body components. `rho_so`/`rho_no` run from each C.M to
    // the pivot; `rho_ns` from the nozzle C.M to the body C.M.
    let rho_so = Vector3::new(p.x_s, p.y_s, -p.z_s);
    let rho_no = c * Vector3::new(0.0, 0.0, p.z_n);
    let rho_ns = rho_no - rho_so;
    let thrust_body = c * Vector3::new(0.0, 0.0, p.thrust());

    let w_n = w_s + beta_dot * e_x;
    let i_n_body = c * i_n_nozzle * c.transpose();

    // Symmetric effective inertia of (omega_dot, beta_ddot).
    let gimbal_arm = e_x.cross(&rho_no);
    let mass_ww = i_s + i_n_body - m_red * skew(&rho_ns) * skew(&rho_ns);
    let mass_wb = i_n_body * e_x + m_red * rho_ns.cross(&gimbal_arm);
    let mass_bb =
        p.i_n2 + m_red * gimbal_arm.dot(&gimbal_arm) + motor.j_em * motor.n_g * motor.n_g;
    let mut mass = Matrix4::zeros();
    mass.fixed_view_mut::<3, 3>(0, 0).copy_from(&mass_ww);
    mass.fixed_view_mut::<3, 1>(0, 3).copy_from(&mass_wb);
    mass.fixed_view_mut::<1, 3>(3, 0)
        .copy_from(&mass_wb.transpose());
    mass[(3, 3)] = mass_bb;

    // Acceleration-independent part of the pivot constraint force.
    let f_known = m_red
        * (-beta_dot * (w_s.cross(&e_x)).cross(&rho_no) + w_s.cross(&w_s.cross(&rho_so))
            - w_n.cross(&w_n.cross(&rho_no)))
        - (m_red / p.m_n) * thrust_body;

    let w_n_nozzle = c.transpose() * w_s + beta_dot * e_x;
    let nozzle_gyro = w_n_nozzle.cross(&(i_n_nozzle * w_n_nozzle));
    let wheel_momentum = Vector3::new(state.h_rx, state.h_ry, 0.0);
    let external = Vector3::new(dist.tau_dx + input.w_x, dist.tau_dy + input.w_y, 0.0)
        + Vector3::new(input.tau_rx, input.tau_ry, 0.0);

    let rhs_w = external - w_s.cross(&(i_s * w_s + wheel_momentum)) - c * nozzle_gyro
        + beta_dot * (i_n_body * e_x.cross(&w_s))
        + rho_ns.cross(&f_known);

    let n_g = motor.n_g;
    let rhs_b = -nozzle_gyro.x + beta_dot * (c * (i_n_nozzle * e_x)).dot(&e_x.cross(&w_s))
        + rho_no.cross(&f_known).x
        + n_g * md.k2 * input.v_em
        - n_g * n_g * (md.k2 * md.k1 + md.c_f) * beta_dot;

    let rhs = Vector4::new(rhs_w.x, rhs_w.y, rhs_w.z, rhs_b);
    let solution = mass.lu().solve(&rhs).ok_or_else(|| Error::SingularInertia {
        state: Box::new(*state),
    })?;

    Ok(Accels {
        omega_dot: Vector3::new(solution[0], solution[1], solution[2]),
        beta_ddot: solution[3],
    })
}
