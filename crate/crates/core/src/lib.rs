//! Closed-loop simulation of a spin-stabilized spacecraft whose thrust
//! vector is held on target during an impulsive burn by a one-axis
//! gimbaled nozzle (driven by a geared DC motor under full-state voltage
//! feedback) and two reaction wheels (driven by a tanh momentum
//! feed-forward that cancels constant disturbance torques through the spin
//! gyroscopic coupling).
//!
//! The crate provides both plants — the full nonlinear two-body
//! body/nozzle dynamics and its linearization about the spin equilibrium —
//! plus an industrial-motor catalog, actuator feasibility margins, scenario
//! configuration, a fixed-step RK4 simulator, and CSV/JSON reporting.

pub mod actuator;
pub mod catalog;
pub mod config;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod linear;
pub mod params;
pub mod report;
pub mod sim;

pub use error::Error;

/// The bundled baseline scenario document.
pub const PAPER_BASELINE_CONFIG: &str = include_str!("../configs/paper_baseline.cfg");

/// Resolve a config argument: the literal name `paper_baseline` maps to the
/// bundled document, anything else is read as a file path.
pub fn load_config_text(path_or_name: &str) -> std::io::Result<String> {
    if path_or_name == "paper_baseline" {
        return Ok(PAPER_BASELINE_CONFIG.to_string());
    }
    std::fs::read_to_string(path_or_name)
}
