//! Physical parameters, motor specifications, and scenario validation.
//!
//! All quantities are SI: masses in kg, inertias in kg·m², lengths in m,
//! angles and rates in rad and rad/s, torques in N·m, voltages in V.

use serde::{Deserialize, Serialize};

use crate::control::GainVector;
use crate::error::{Error, ValidationIssue};

/// Spacecraft body + gimbaled nozzle mass/geometry set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacecraftParams {
    /// Body mass (kg).
    pub m_s: f64,
    /// Nozzle mass (kg).
    pub m_n: f64,
    /// Body axial inertia about the spin axis (kg·m²).
    pub i_s1: f64,
    /// Body transverse inertia (kg·m²).
    pub i_s2: f64,
    /// Nozzle axial inertia (kg·m²).
    pub i_n1: f64,
    /// Nozzle transverse inertia (kg·m²).
    pub i_n2: f64,
    /// Distance from the body C.M to the gimbal pivot (m).
    pub z_s: f64,
    /// Distance from the nozzle C.M to the gimbal pivot (m).
    pub z_n: f64,
    /// Lateral body C.M offset along x (m).
    pub x_s: f64,
    /// Lateral body C.M offset along y (m).
    pub y_s: f64,
    /// Nominal spin rate about the longitudinal axis (rad/s).
    pub spin_rate: f64,
    /// Desired velocity change of the burn (m/s).
    pub delta_v_d: f64,
    /// Burn time (s).
    pub t_b: f64,
    /// When present, replaces the C.M-offset evaluation of the constant
    /// disturbance torques (tau_dx, tau_dy) in N·m.
    pub disturbance_override: Option<(f64, f64)>,
}

impl SpacecraftParams {
    /// Commanded acceleration `delta_v_d / t_b` (m/s²).
    pub fn a_max(&self) -> f64 {
        self.delta_v_d / self.t_b
    }

    /// Constant thrust magnitude `(m_s + m_n) · a_max` (N).
    pub fn thrust(&self) -> f64 {
        (self.m_s + self.m_n) * self.a_max()
    }

    /// Two-body reduced mass `m_s·m_n / (m_s + m_n)` (kg), the effective
    /// mass in the pivot-coupled interaction terms.
    pub fn reduced_mass(&self) -> f64 {
        self.m_s * self.m_n / (self.m_s + self.m_n)
    }

    fn collect_issues(&self, issues: &mut Vec<ValidationIssue>) {
        let positives = [
            ("spacecraft.m_s", self.m_s),
            ("spacecraft.m_n", self.m_n),
            ("spacecraft.i_s1", self.i_s1),
            ("spacecraft.i_s2", self.i_s2),
            ("spacecraft.i_n1", self.i_n1),
            ("spacecraft.i_n2", self.i_n2),
            ("spacecraft.z_s", self.z_s),
            ("spacecraft.z_n", self.z_n),
            ("spacecraft.t_b", self.t_b),
            ("spacecraft.delta_v_d", self.delta_v_d),
        ];
        for (field, value) in positives {
            if !(value > 0.0) || !value.is_finite() {
                issues.push(ValidationIssue::new(
                    field,
                    format!("must be strictly positive, got {value}"),
                ));
            }
        }
        for (field, value) in [
            ("spacecraft.x_s", self.x_s),
            ("spacecraft.y_s", self.y_s),
            ("spacecraft.spin_rate", self.spin_rate),
        ] {
            if !value.is_finite() {
                issues.push(ValidationIssue::new(field, "must be finite"));
            }
        }
        if let Some((dx, dy)) = self.disturbance_override {
            if !dx.is_finite() || !dy.is_finite() {
                issues.push(ValidationIssue::new(
                    "spacecraft.disturbance_override",
                    "both torques must be finite",
                ));
            }
        }
        let a_max = self.a_max();
        if !a_max.is_finite() || !(a_max > 0.0) {
            issues.push(ValidationIssue::new(
                "spacecraft.delta_v_d/t_b",
                format!("derived a_max must be finite and positive, got {a_max}"),
            ));
        }
        let f_t = self.thrust();
        if !f_t.is_finite() || !(f_t > 0.0) {
            issues.push(ValidationIssue::new(
                "spacecraft.thrust",
                format!("derived F_T must be finite and positive, got {f_t}"),
            ));
        }
    }
}

/// Catalog-sheet values for a geared DC motor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotorSpec {
    pub name: String,
    /// Motor mass (kg).
    pub mass: f64,
    /// Stall torque (N·m).
    pub tau_stall: f64,
    /// No-load speed (rad/s).
    pub omega_max: f64,
    /// Rated voltage (V).
    pub v_max: f64,
    /// Stall current (A); not every sheet lists one.
    pub i_stall: Option<f64>,
    /// Rotor inertia (kg·m²).
    pub j_em: f64,
    /// Rated friction torque (N·m).
    pub tau_f: f64,
    /// Gearbox ratio between rotor and gimbal axis.
    pub n_g: f64,
}

impl MotorSpec {
    fn collect_issues(&self, issues: &mut Vec<ValidationIssue>) {
        for (field, value) in [
            ("motor.tau_stall", self.tau_stall),
            ("motor.omega_max", self.omega_max),
            ("motor.v_max", self.v_max),
            ("motor.n_g", self.n_g),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                issues.push(ValidationIssue::new(
                    field,
                    format!("must be strictly positive, got {value}"),
                ));
            }
        }
        for (field, value) in [("motor.j_em", self.j_em), ("motor.tau_f", self.tau_f)] {
            if !(value >= 0.0) || !value.is_finite() {
                issues.push(ValidationIssue::new(
                    field,
                    format!("must be non-negative, got {value}"),
                ));
            }
        }
        if let Some(i) = self.i_stall {
            if !(i > 0.0) || !i.is_finite() {
                issues.push(ValidationIssue::new(
                    "motor.i_stall",
                    format!("must be strictly positive when given, got {i}"),
                ));
            }
        }
        if !(self.mass > 0.0) || !self.mass.is_finite() {
            issues.push(ValidationIssue::new(
                "motor.mass",
                format!("must be strictly positive, got {}", self.mass),
            ));
        }
    }
}

/// Constants derived from a motor sheet: both torque-speed line endpoints
/// plus the resistance/friction closure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotorDerived {
    /// Back-EMF constant `v_max / omega_max` (V·s/rad).
    pub k1: f64,
    /// Torque-per-volt constant `tau_stall / v_max` (N·m/V).
    pub k2: f64,
    /// Armature resistance `v_max / i_stall` (Ω); absent without a stall current.
    pub r_em: Option<f64>,
    /// Viscous friction coefficient (N·m·s/rad). The rated friction torque
    /// is anchored at no-load speed: `c_f = tau_f / omega_max`, so friction
    /// equals the rated value at max speed and is smaller everywhere else.
    pub c_f: f64,
}

/// Compute the derived motor constants from the sheet values.
pub fn motor_constants(spec: &MotorSpec) -> Result<MotorDerived, Error> {
    let mut issues = Vec::new();
    if !(spec.omega_max > 0.0) || !spec.omega_max.is_finite() {
        issues.push(ValidationIssue::new(
            "motor.omega_max",
            format!("must be strictly positive, got {}", spec.omega_max),
        ));
    }
    if !(spec.v_max > 0.0) || !spec.v_max.is_finite() {
        issues.push(ValidationIssue::new(
            "motor.v_max",
            format!("must be strictly positive, got {}", spec.v_max),
        ));
    }
    if !issues.is_empty() {
        return Err(Error::Validation(issues));
    }
    Ok(MotorDerived {
        k1: spec.v_max / spec.omega_max,
        k2: spec.tau_stall / spec.v_max,
        r_em: spec.i_stall.map(|i| spec.v_max / i),
        c_f: spec.tau_f / spec.omega_max,
    })
}

/// Reaction-wheel pair parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RwParams {
    /// Maximum reaction torque per wheel (N·m).
    pub tau_rm: f64,
    /// Feed-forward sharpness (1/(N·m·s)).
    pub gamma: f64,
    /// Optional wheel momentum saturation (N·m·s); unlimited when absent.
    pub h_max: Option<f64>,
}

impl RwParams {
    fn collect_issues(&self, issues: &mut Vec<ValidationIssue>) {
        if !(self.tau_rm > 0.0) || !self.tau_rm.is_finite() {
            issues.push(ValidationIssue::new(
                "rw.tau_rm",
                format!("must be strictly positive, got {}", self.tau_rm),
            ));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            issues.push(ValidationIssue::new(
                "rw.gamma",
                format!("must be strictly positive, got {}", self.gamma),
            ));
        }
        if let Some(h) = self.h_max {
            if !(h > 0.0) || !h.is_finite() {
                issues.push(ValidationIssue::new(
                    "rw.h_max",
                    format!("must be strictly positive when given, got {h}"),
                ));
            }
        }
    }
}

/// Plant selector for a scenario run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlantModel {
    Linear,
    Nonlinear,
}

impl std::fmt::Display for PlantModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PlantModel::Linear => write!(f, "linear"),
            PlantModel::Nonlinear => write!(f, "nonlinear"),
        }
    }
}

/// Initial deviations from the spin equilibrium. All default to zero;
/// the body spin `omega_sz` always starts at the nominal spin rate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InitialState {
    pub phi: f64,
    pub theta: f64,
    pub psi: f64,
    pub w_sx: f64,
    pub w_sy: f64,
    pub beta: f64,
    pub beta_dot: f64,
    pub h_rx: f64,
    pub h_ry: f64,
}

impl InitialState {
    fn collect_issues(&self, issues: &mut Vec<ValidationIssue>) {
        let entries = [
            self.phi,
            self.theta,
            self.psi,
            self.w_sx,
            self.w_sy,
            self.beta,
            self.beta_dot,
            self.h_rx,
            self.h_ry,
        ];
        if entries.iter().any(|v| !v.is_finite()) {
            issues.push(ValidationIssue::new(
                "sim.initial",
                "all initial state entries must be finite",
            ));
        }
    }
}

/// Tabulated exogenous signal, linearly interpolated between knots and
/// held constant outside them. An empty table is identically zero.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Signal(pub Vec<(f64, f64)>);

impl Signal {
    pub fn zero() -> Self {
        Signal(Vec::new())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn eval(&self, t: f64) -> f64 {
        let knots = &self.0;
        if knots.is_empty() {
            return 0.0;
        }
        if t <= knots[0].0 {
            return knots[0].1;
        }
        if t >= knots[knots.len() - 1].0 {
            return knots[knots.len() - 1].1;
        }
        for pair in knots.windows(2) {
            let (t0, v0) = pair[0];
            let (t1, v1) = pair[1];
            if t >= t0 && t <= t1 {
                if t1 <= t0 {
                    return v0;
                }
                return v0 + (t - t0) / (t1 - t0) * (v1 - v0);
            }
        }
        knots[knots.len() - 1].1
    }

    fn collect_issues(&self, field: &str, issues: &mut Vec<ValidationIssue>) {
        if self
            .0
            .iter()
            .any(|(t, v)| !t.is_finite() || !v.is_finite())
        {
            issues.push(ValidationIssue::new(field, "all knots must be finite"));
        }
        if self.0.windows(2).any(|w| w[1].0 < w[0].0) {
            issues.push(ValidationIssue::new(
                field,
                "knot times must be non-decreasing",
            ));
        }
    }
}

/// Everything needed to run one closed-loop scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub spacecraft: SpacecraftParams,
    pub motor: MotorSpec,
    pub rw: RwParams,
    /// Full-state feedback gain; must have exactly six entries ordered as
    /// `[phi, theta, w_sx, w_sy, beta, beta_dot]`.
    pub gain: GainVector,
    pub model: PlantModel,
    /// Integration step (s).
    pub dt: f64,
    /// Simulated span (s).
    pub duration: f64,
    pub initial: InitialState,
    pub w_x: Signal,
    pub w_y: Signal,
}

/// Maximum admissible integration step (s).
pub const DT_MAX: f64 = 0.005;

/// A validated scenario with the derived quantities attached.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub motor_derived: MotorDerived,
    /// Commanded acceleration (m/s²).
    pub a_max: f64,
    /// Thrust magnitude (N).
    pub thrust: f64,
}

/// Check every invariant of a scenario configuration and attach the derived
/// values. On failure the complete list of violations is returned, not just
/// the first one.
pub fn validate_scenario(config: &ScenarioConfig) -> Result<Scenario, Error> {
    let mut issues = Vec::new();
    config.spacecraft.collect_issues(&mut issues);
    config.motor.collect_issues(&mut issues);
    config.rw.collect_issues(&mut issues);
    config.initial.collect_issues(&mut issues);
    config.w_x.collect_issues("sim.w_x", &mut issues);
    config.w_y.collect_issues("sim.w_y", &mut issues);

    if config.gain.0.len() != 6 {
        issues.push(ValidationIssue::new(
            "control.k",
            format!("gain K requires 6 entries, got {}", config.gain.0.len()),
        ));
    } else if config.gain.0.iter().any(|g| !g.is_finite()) {
        issues.push(ValidationIssue::new(
            "control.k",
            "all gain entries must be finite",
        ));
    }

    if !(config.dt > 0.0) || !config.dt.is_finite() {
        issues.push(ValidationIssue::new("sim.dt", "dt must be positive"));
    } else if config.dt > DT_MAX {
        issues.push(ValidationIssue::new(
            "sim.dt",
            format!("dt must be at most {DT_MAX} s, got {}", config.dt),
        ));
    }
    if !(config.duration > 0.0) || !config.duration.is_finite() {
        issues.push(ValidationIssue::new(
            "sim.duration",
            "duration must be positive",
        ));
    }

    let motor_derived = match motor_constants(&config.motor) {
        Ok(md) => Some(md),
        Err(Error::Validation(mut more)) => {
            for extra in more.drain(..) {
                if !issues.contains(&extra) {
                    issues.push(extra);
                }
            }
            None
        }
        Err(other) => return Err(other),
    };

    if !issues.is_empty() {
        return Err(Error::Validation(issues));
    }

    Ok(Scenario {
        config: config.clone(),
        motor_derived: motor_derived.expect("validated above"),
        a_max: config.spacecraft.a_max(),
        thrust: config.spacecraft.thrust(),
    })
}
