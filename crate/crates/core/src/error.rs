//! Error types shared across the crate.

use thiserror::Error;

/// A single violated invariant, identified by the field path that caused it.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationIssue {
    /// Dotted path of the offending field, e.g. `sim.dt`.
    pub field: String,
    /// Human-readable description of the violated bound.
    pub message: String,
}

impl ValidationIssue {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    /// One or more configuration invariants are violated. The list is
    /// complete: validation does not stop at the first failure.
    #[error("invalid configuration:\n{}", format_issues(.0))]
    Validation(Vec<ValidationIssue>),

    /// A derived model constant lost positivity, so the actuator-coupled
    /// dynamics are not invertible for these parameters.
    #[error("model degeneracy: {constant} = {value:.6e} must be positive")]
    ModelDegeneracy { constant: &'static str, value: f64 },

    /// Motor current was requested but the motor spec carries no stall
    /// current, so the armature resistance is unknown.
    #[error("motor current unavailable: motor spec has no stall current")]
    MissingResistance,

    /// Euler-angle kinematics evaluated too close to the pitch singularity.
    #[error("kinematic singularity: |theta| = {theta:.4} rad is inside the guard band (limit {guard:.4} rad)")]
    Singularity { theta: f64, guard: f64 },

    /// The coupled body/nozzle effective inertia could not be inverted.
    #[error("singular effective inertia; state snapshot: {state:?}")]
    SingularInertia {
        state: Box<crate::dynamics::StateVector>,
    },

    /// A state entry became non-finite during integration.
    #[error("non-finite state during integration at t = {t:.6} s")]
    NonFinite { t: f64 },

    /// The Schur eigenvalue iteration failed to converge.
    #[error("eigenvalue solver failed to converge on {matrix}")]
    EigenSolver { matrix: &'static str },

    /// The config document could not be parsed; every problem is listed.
    #[error("config error:\n{}", format_lines(.0))]
    Config(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_issues(issues: &[ValidationIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("  - {i}"))
        .collect::<Vec<_>>()
        .join("\n")
}

fn format_lines(lines: &[String]) -> String {
    lines
        .iter()
        .map(|l| format!("  - {l}"))
        .collect::<Vec<_>>()
        .join("\n")
}
