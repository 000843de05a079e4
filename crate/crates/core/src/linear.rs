//! Linearized state-space model of the spinning body/nozzle/motor loop
//! about the spin equilibrium, the constant disturbance torques created by
//! lateral C.M offsets, and closed-loop eigen/controllability analysis.
//!
//! State ordering is fixed as `X = [phi, theta, w_sx, w_sy, beta, beta_dot]`.

use nalgebra::{Complex, Matrix6, Vector6};
use serde::{Deserialize, Serialize};

use crate::control::GainVector;
use crate::error::Error;
use crate::params::{MotorDerived, MotorSpec, SpacecraftParams};

/// Singular values below `RANK_TOL_FACTOR · sigma_max` count as zero when
/// ranking the controllability matrix.
pub const RANK_TOL_FACTOR: f64 = 1e-9;

/// The derived inertia constants of the linearized model. Each field is
/// defined by its relation to the raw parameters; `residuals` in the tests
/// checks every relation directly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedInertias {
    /// Total axial inertia `i_n1 + i_s1` (kg·m²).
    pub i_1: f64,
    /// Total transverse inertia about the pivot line `i_n2 + i_s2 + m_red·(z_n+z_s)²` (kg·m²).
    pub i_2: f64,
    /// Spin coupling rate `(i_1 - i_2)·spin / i_2` (rad/s).
    pub lambda: f64,
    /// Nozzle/pivot coupling ratio: `i_n2 + m_red·(z_n+z_s)·z_n = i_r·i_2`.
    pub i_r: f64,
    /// Axial-transverse nozzle ratio: `i_n1 - i_n2 - m_red·(z_n+z_s)·z_n = i_nz·i_2`.
    pub i_nz: f64,
    /// Thrust/centrifugal gimbal stiffness: `thrust·m_red·z_s/m_n + i_nz·i_2·spin² = i_beta·i_2`.
    pub i_beta: f64,
    /// `i_nz - i_r`.
    pub i_nm: f64,
    /// Spin/precession coupling coefficient of the gimbal equation.
    pub a_m2: f64,
    /// Gimbal-angle stiffness coefficient of the gimbal equation.
    pub a_m3: f64,
    /// Effective gimbal-channel inertia (Schur complement), including the
    /// reflected rotor inertia `j_em·n_g²`; must be positive.
    pub b_m: f64,
    /// Disturbance split ratio `1 - (m_red·z_s² + m_red·z_n·z_s + i_s2)/i_2`.
    pub d_m1: f64,
    /// Two-body reduced mass `m_s·m_n/(m_s+m_n)` (kg).
    pub m_red: f64,
}

/// Evaluate the derived inertia block. Fails if the effective gimbal
/// inertia `b_m` is not positive.
pub fn derived_inertias(
    p: &SpacecraftParams,
    motor: &MotorSpec,
) -> Result<DerivedInertias, Error> {
    let m_red = p.reduced_mass();
    let lever = p.z_n + p.z_s;
    let i_1 = p.i_n1 + p.i_s1;
    let i_2 = p.i_n2 + p.i_s2 + m_red * lever * lever;
    let lambda = (i_1 - i_2) * p.spin_rate / i_2;
    let i_r = (p.i_n2 + m_red * lever * p.z_n) / i_2;
    let i_nz = (p.i_n1 - p.i_n2 - m_red * lever * p.z_n) / i_2;
    let thrust_stiffness = p.thrust() * m_red * p.z_s / p.m_n;
    let i_beta = (thrust_stiffness + i_nz * i_2 * p.spin_rate * p.spin_rate) / i_2;
    let i_nm = i_nz - i_r;
    let a_m2 = p.i_s2 * lambda
        + (p.i_s2 - p.i_s1) * p.spin_rate
        + m_red * p.z_s * (lambda + p.spin_rate) * lever;
    let a_m3 = i_beta * p.i_s2
        + m_red * p.z_s * (p.z_n * p.spin_rate * p.spin_rate + i_beta * lever)
        - thrust_stiffness;
    let b_m = i_r * p.i_s2 - m_red * p.z_s * (p.z_n - i_r * lever) + motor.j_em * motor.n_g * motor.n_g;
    let d_m1 = 1.0 - (m_red * p.z_s * p.z_s + m_red * p.z_n * p.z_s + p.i_s2) / i_2;

    if !(b_m > 0.0) || !b_m.is_finite() {
        return Err(Error::ModelDegeneracy {
            constant: "B_M",
            value: b_m,
        });
    }

    Ok(DerivedInertias {
        i_1,
        i_2,
        lambda,
        i_r,
        i_nz,
        i_beta,
        i_nm,
        a_m2,
        a_m3,
        b_m,
        d_m1,
        m_red,
    })
}

/// The constant disturbance torque pair acting on the body (N·m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisturbancePair {
    pub tau_dx: f64,
    pub tau_dy: f64,
}

impl DisturbancePair {
    pub fn zero() -> Self {
        DisturbancePair {
            tau_dx: 0.0,
            tau_dy: 0.0,
        }
    }
}

/// Constant disturbance torques. With an override configured the pair is
/// returned verbatim; otherwise it is evaluated from the C.M offsets as
/// `tau_dx = F_T·m_red·y_s/m_n`, `tau_dy = -F_T·m_red·x_s/m_n`.
pub fn disturbance_torques(p: &SpacecraftParams) -> DisturbancePair {
    if let Some((tau_dx, tau_dy)) = p.disturbance_override {
        return DisturbancePair { tau_dx, tau_dy };
    }
    let scale = p.thrust() * p.reduced_mass() / p.m_n;
    DisturbancePair {
        tau_dx: scale * p.y_s,
        tau_dy: -scale * p.x_s,
    }
}

/// Time-varying inputs composing the disturbance channel of the linear model.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DisturbanceInputs {
    pub tau_rx: f64,
    pub tau_ry: f64,
    pub h_rx: f64,
    pub h_ry: f64,
    pub w_x: f64,
    pub w_y: f64,
}

/// Structure of the disturbance channel `D(t)`: per-row gains multiplying
/// the two time-varying brackets. Kept separate from the constants so that
/// the simulator composes `D(t)` fresh at every step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceTemplate {
    /// Row-3 gain on the x bracket: `1/i_2 + i_r·d_m1/b_m`.
    pub gain_x_row3: f64,
    /// Row-4 gain on the y bracket: `1/i_2`.
    pub gain_y_row4: f64,
    /// Row-6 gain on the x bracket: `-d_m1/b_m`.
    pub gain_x_row6: f64,
    /// Nominal spin rate entering the momentum brackets (rad/s).
    pub spin_rate: f64,
}

impl DisturbanceTemplate {
    /// Bracketed x factor `tau_dx + tau_rx + spin·h_ry + w_x`.
    pub fn bracket_x(&self, dist: &DisturbancePair, u: &DisturbanceInputs) -> f64 {
        dist.tau_dx + u.tau_rx + self.spin_rate * u.h_ry + u.w_x
    }

    /// Bracketed y factor `tau_dy + tau_ry - spin·h_rx + w_y`.
    pub fn bracket_y(&self, dist: &DisturbancePair, u: &DisturbanceInputs) -> f64 {
        dist.tau_dy + u.tau_ry - self.spin_rate * u.h_rx + u.w_y
    }

    /// Compose the 6-entry disturbance vector for the current inputs.
    pub fn compose(&self, dist: &DisturbancePair, u: &DisturbanceInputs) -> Vector6<f64> {
        let bx = self.bracket_x(dist, u);
        let by = self.bracket_y(dist, u);
        let mut d = Vector6::zeros();
        d[2] = bx * self.gain_x_row3;
        d[3] = by * self.gain_y_row4;
        d[5] = bx * self.gain_x_row6;
        d
    }
}

/// The linearized model `X' = A·X + B·u + D(t)` with
/// `X = [phi, theta, w_sx, w_sy, beta, beta_dot]` and `u` the motor voltage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub a: Matrix6<f64>,
    pub b: Vector6<f64>,
    pub d_template: DisturbanceTemplate,
    pub inertias: DerivedInertias,
    pub spin_rate: f64,
}

/// Populate the state-space matrices entry by entry from the derived
/// inertia block and the motor constants.
pub fn build_state_space(
    p: &SpacecraftParams,
    motor: &MotorSpec,
    md: &MotorDerived,
) -> Result<LinearModel, Error> {
    let di = derived_inertias(p, motor)?;
    let spin = p.spin_rate;
    let n_g2 = motor.n_g * motor.n_g;
    let motor_damping = n_g2 * (md.c_f + md.k1 * md.k2) / di.b_m;

    let mut a = Matrix6::zeros();
    a[(0, 1)] = spin;
    a[(0, 2)] = 1.0;
    a[(1, 0)] = -spin;
    a[(1, 3)] = 1.0;
    a[(2, 3)] = di.i_r * di.a_m2 / di.b_m - di.lambda;
    a[(2, 4)] = di.i_r * di.a_m3 / di.b_m - di.i_beta;
    a[(2, 5)] = di.i_r * motor_damping;
    a[(3, 2)] = di.lambda;
    a[(3, 5)] = di.i_nm * spin;
    a[(4, 5)] = 1.0;
    a[(5, 3)] = -di.a_m2 / di.b_m;
    a[(5, 4)] = -di.a_m3 / di.b_m;
    a[(5, 5)] = -motor_damping;

    let mut b = Vector6::zeros();
    b[5] = md.k2 * motor.n_g / di.b_m;
    b[2] = -di.i_r * b[5];

    let d_template = DisturbanceTemplate {
        gain_x_row3: 1.0 / di.i_2 + di.i_r * di.d_m1 / di.b_m,
        gain_y_row4: 1.0 / di.i_2,
        gain_x_row6: -di.d_m1 / di.b_m,
        spin_rate: spin,
    };

    Ok(LinearModel {
        a,
        b,
        d_template,
        inertias: di,
        spin_rate: spin,
    })
}

/// Open/closed-loop eigenstructure and controllability summary.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub open_loop_eigenvalues: Vec<Complex<f64>>,
    pub closed_loop_eigenvalues: Vec<Complex<f64>>,
    pub open_loop_max_re: f64,
    pub closed_loop_max_re: f64,
    pub controllability_rank: usize,
    pub closed_loop_stable: bool,
}

/// Closed-loop matrix `A - B·K`. With `K = 0` this is exactly `A`.
pub fn closed_loop_matrix(model: &LinearModel, gain: &GainVector) -> Result<Matrix6<f64>, Error> {
    let k = gain.as_vector6()?;
    Ok(model.a - model.b * k.transpose())
}

fn eigenvalues(m: &Matrix6<f64>, label: &'static str) -> Result<Vec<Complex<f64>>, Error> {
    let schur = m
        .try_schur(1e-14, 10_000)
        .ok_or(Error::EigenSolver { matrix: label })?;
    let eigs = schur.complex_eigenvalues();
    if eigs.iter().any(|e| !e.re.is_finite() || !e.im.is_finite()) {
        return Err(Error::EigenSolver { matrix: label });
    }
    Ok(eigs.iter().copied().collect())
}

/// Rank of `[B, AB, ..., A^5·B]` by singular-value thresholding.
pub fn controllability_rank(model: &LinearModel) -> usize {
    let mut ctrb = Matrix6::zeros();
    let mut col = model.b;
    for j in 0..6 {
        ctrb.set_column(j, &col);
        col = model.a * col;
    }
    let svd = ctrb.svd(false, false);
    let sigma_max = svd.singular_values.max();
    if sigma_max == 0.0 {
        return 0;
    }
    svd.singular_values
        .iter()
        .filter(|&&s| s > RANK_TOL_FACTOR * sigma_max)
        .count()
}

/// Eigenvalues of `A` and of `A - B·K`, their spectral abscissas, and the
/// controllability rank of `(A, B)`.
pub fn stability_report(model: &LinearModel, gain: &GainVector) -> Result<StabilityReport, Error> {
    let open = eigenvalues(&model.a, "A")?;
    let closed = eigenvalues(&closed_loop_matrix(model, gain)?, "A - BK")?;
    let open_max = open.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max);
    let closed_max = closed.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max);
    Ok(StabilityReport {
        open_loop_eigenvalues: open,
        closed_loop_eigenvalues: closed,
        open_loop_max_re: open_max,
        closed_loop_max_re: closed_max,
        controllability_rank: controllability_rank(model),
        closed_loop_stable: closed_max < 0.0,
    })
}
