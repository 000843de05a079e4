//! The two control laws: full-state feedback on the gimbal motor voltage,
//! and the reaction-wheel momentum feed-forward that cancels the constant
//! disturbance torques through the spin gyroscopic coupling.

use nalgebra::Vector6;
use serde::{Deserialize, Serialize};

use crate::error::{Error, ValidationIssue};
use crate::linear::DisturbancePair;
use crate::params::RwParams;

/// Full-state feedback gain ordered as `[phi, theta, w_sx, w_sy, beta, beta_dot]`
/// coefficients (volts per state unit). Kept as a plain vector so that a
/// wrong-length gain is reported by validation rather than by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainVector(pub Vec<f64>);

impl GainVector {
    pub fn zeros() -> Self {
        GainVector(vec![0.0; 6])
    }

    /// View as a fixed-size vector; requires exactly six entries.
    pub fn as_vector6(&self) -> Result<Vector6<f64>, Error> {
        if self.0.len() != 6 {
            return Err(Error::Validation(vec![ValidationIssue::new(
                "control.k",
                format!("gain K requires 6 entries, got {}", self.0.len()),
            )]));
        }
        Ok(Vector6::from_column_slice(&self.0))
    }
}

/// Gimbal motor voltage command `v = -K·X`, before supply saturation
/// (clamping happens on the actuator side).
pub fn state_feedback_voltage(x: &Vector6<f64>, gain: &GainVector) -> Result<f64, Error> {
    let k = gain.as_vector6()?;
    Ok(-k.dot(x))
}

/// One evaluation of the wheel feed-forward law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RwCommand {
    /// Commanded x-wheel torque (N·m), saturated inside `±tau_rm`.
    pub tau_rx: f64,
    /// Commanded y-wheel torque (N·m), saturated inside `±tau_rm`.
    pub tau_ry: f64,
    /// Momentum tracking error on the x wheel (N·m·s).
    pub e_rx: f64,
    /// Momentum tracking error on the y wheel (N·m·s).
    pub e_ry: f64,
}

/// Wheel momentum targets `(tau_dy / spin, -tau_dx / spin)` whose gyroscopic
/// torque at the nominal spin cancels the constant disturbances.
pub fn momentum_targets(dist: &DisturbancePair, spin_rate: f64) -> (f64, f64) {
    (dist.tau_dy / spin_rate, -dist.tau_dx / spin_rate)
}

/// Reaction-wheel feed-forward.
///
/// Tracking errors are `e_rx = h_rx - tau_dy/spin` and
/// `e_ry = h_ry + tau_dx/spin`; the commanded torque is
/// `tau = -tau_rm·tanh(gamma·e)` so that the wheel momentum `h' = tau`
/// contracts onto the cancellation target. With a configured `h_max`, a
/// wheel already at saturation refuses torque that would push it further.
pub fn rw_feedforward(
    h_rx: f64,
    h_ry: f64,
    dist: &DisturbancePair,
    spin_rate: f64,
    rw: &RwParams,
) -> Result<RwCommand, Error> {
    if spin_rate == 0.0 || !spin_rate.is_finite() {
        return Err(Error::Validation(vec![ValidationIssue::new(
            "spacecraft.spin_rate",
            "reaction-wheel feed-forward is undefined at zero spin rate",
        )]));
    }
    let (h_rx_target, h_ry_target) = momentum_targets(dist, spin_rate);
    let e_rx = h_rx - h_rx_target;
    let e_ry = h_ry - h_ry_target;
    let mut tau_rx = -rw.tau_rm * (rw.gamma * e_rx).tanh();
    let mut tau_ry = -rw.tau_rm * (rw.gamma * e_ry).tanh();
    if let Some(h_max) = rw.h_max {
        if h_rx.abs() >= h_max && tau_rx * h_rx > 0.0 {
            tau_rx = 0.0;
        }
        if h_ry.abs() >= h_max && tau_ry * h_ry > 0.0 {
            tau_ry = 0.0;
        }
    }
    Ok(RwCommand {
        tau_rx,
        tau_ry,
        e_rx,
        e_ry,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rw() -> RwParams {
        RwParams {
            tau_rm: 0.2,
            gamma: 100.0,
            h_max: None,
        }
    }

    fn baseline_dist() -> DisturbancePair {
        DisturbancePair {
            tau_dx: 12.64,
            tau_dy: 0.0,
        }
    }

    #[test]
    fn zero_state_gives_zero_voltage() {
        let v = state_feedback_voltage(&Vector6::zeros(), &GainVector::zeros()).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn unit_gimbal_angle_reads_the_beta_gain() {
        let gain = GainVector(vec![31.82, -131.44, -65.24, 18.32, 217.39, -0.37]);
        let mut x = Vector6::zeros();
        x[4] = 1.0;
        let v = state_feedback_voltage(&x, &gain).unwrap();
        assert_relative_eq!(v, -217.39, max_relative = 1e-12);
    }

    #[test]
    fn feedforward_rests_at_its_fixed_point() {
        let dist = baseline_dist();
        let (hx, hy) = momentum_targets(&dist, 6.0);
        let cmd = rw_feedforward(hx, hy, &dist, 6.0, &rw()).unwrap();
        assert_eq!(cmd.e_rx, 0.0);
        assert_eq!(cmd.e_ry, 0.0);
        assert_eq!(cmd.tau_rx, 0.0);
        assert_eq!(cmd.tau_ry, 0.0);
        assert_relative_eq!(hy, -12.64 / 6.0, max_relative = 1e-12);
        assert_relative_eq!(hy, -2.1067, max_relative = 1e-4);
    }

    #[test]
    fn large_error_saturates_at_max_torque() {
        let dist = baseline_dist();
        let cmd = rw_feedforward(5.0, 5.0, &dist, 6.0, &rw()).unwrap();
        assert_relative_eq!(cmd.tau_rx, -0.2, max_relative = 1e-6);
        assert_relative_eq!(cmd.tau_ry, -0.2, max_relative = 1e-6);
    }

    #[test]
    fn zero_spin_is_a_configuration_error() {
        let err = rw_feedforward(0.0, 0.0, &baseline_dist(), 0.0, &rw()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn torque_saturation_bound_holds_everywhere() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let params = rw();
        for _ in 0..2000 {
            let dist = DisturbancePair {
                tau_dx: rng.gen_range(-50.0..50.0),
                tau_dy: rng.gen_range(-50.0..50.0),
            };
            let h_rx = rng.gen_range(-20.0..20.0);
            let h_ry = rng.gen_range(-20.0..20.0);
            let spin = rng.gen_range(0.5..20.0);
            let cmd = rw_feedforward(h_rx, h_ry, &dist, spin, &params).unwrap();
            assert!(cmd.tau_rx.abs() <= params.tau_rm);
            assert!(cmd.tau_ry.abs() <= params.tau_rm);
        }
    }

    #[test]
    fn negating_momentum_errors_negates_torques() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let params = rw();
        // Zero targets so that negating the momenta negates the errors.
        let dist = DisturbancePair {
            tau_dx: 0.0,
            tau_dy: 0.0,
        };
        for _ in 0..500 {
            let hx = rng.gen_range(-5.0..5.0);
            let hy = rng.gen_range(-5.0..5.0);
            let a = rw_feedforward(hx, hy, &dist, 6.0, &params).unwrap();
            let b = rw_feedforward(-hx, -hy, &dist, 6.0, &params).unwrap();
            assert_eq!(a.tau_rx, -b.tau_rx);
            assert_eq!(a.tau_ry, -b.tau_ry);
        }
    }

    #[test]
    fn momentum_error_contracts_under_the_closed_loop() {
        // Scalar closed loop h' = -tau_rm tanh(gamma (h - h*)); the distance
        // to the fixed point must shrink monotonically while nonzero.
        let dist = baseline_dist();
        let params = rw();
        let (_, h_star) = momentum_targets(&dist, 6.0);
        let dt = 1e-3;
        let mut h = 0.0_f64;
        let mut prev = (h - h_star).abs();
        for _ in 0..40_000 {
            let cmd = rw_feedforward(0.0, h, &dist, 6.0, &params).unwrap();
            h += dt * cmd.tau_ry;
            let now = (h - h_star).abs();
            assert!(now <= prev + 1e-15, "distance grew: {prev} -> {now}");
            prev = now;
        }
        assert!(prev < 1e-4, "did not converge, remaining {prev}");
    }

    #[test]
    fn momentum_saturation_blocks_outward_torque() {
        let params = RwParams {
            tau_rm: 0.2,
            gamma: 100.0,
            h_max: Some(1.0),
        };
        let dist = DisturbancePair {
            tau_dx: 12.64,
            tau_dy: 0.0,
        };
        // Target h_ry is -2.107, beyond the 1.0 saturation: once the wheel
        // reaches -1.0 the outward command must be zeroed.
        let cmd = rw_feedforward(0.0, -1.0, &dist, 6.0, &params).unwrap();
        assert_eq!(cmd.tau_ry, 0.0);
        // Torque back toward zero stays allowed.
        let cmd = rw_feedforward(0.0, -1.0, &DisturbancePair { tau_dx: -12.64, tau_dy: 0.0 }, 6.0, &params).unwrap();
        assert!(cmd.tau_ry > 0.0);
    }
}
