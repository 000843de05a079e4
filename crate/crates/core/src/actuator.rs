//! DC motor electromechanics and the lossless gearbox reflection onto the
//! gimbal axis.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::params::{MotorDerived, MotorSpec};

/// Motor/gearbox channels at one trajectory sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActuatorSample {
    /// Motor output torque (N·m).
    pub tau_em: f64,
    /// Rotor speed `n_g · beta_dot` (rad/s).
    pub omega_em: f64,
    /// Armature current (A); absent when the motor sheet has no stall current.
    pub i_em: Option<f64>,
    /// Applied voltage after supply clamping (V).
    pub v_em: f64,
    /// Torque delivered to the gimbal axis `n_g · tau_em` (N·m).
    pub m_ox: f64,
}

/// Motor output torque: electromagnetic term on the affine torque-speed
/// line, minus rotor inertia reaction, minus viscous friction.
pub fn motor_torque(
    v_em: f64,
    omega_em: f64,
    omega_dot_em: f64,
    spec: &MotorSpec,
    derived: &MotorDerived,
) -> f64 {
    derived.k2 * (v_em - derived.k1 * omega_em) - spec.j_em * omega_dot_em - derived.c_f * omega_em
}

/// First-order armature current `(v - k1·omega) / r_em`.
pub fn motor_current(v_em: f64, omega_em: f64, derived: &MotorDerived) -> Result<f64, Error> {
    match derived.r_em {
        Some(r) if r > 0.0 => Ok((v_em - derived.k1 * omega_em) / r),
        _ => Err(Error::MissingResistance),
    }
}

/// Lossless gearbox reflection: `(m_ox, omega_em) = (n_g·tau_em, n_g·beta_dot)`.
pub fn gearbox_reflect(tau_em: f64, beta_dot: f64, n_g: f64) -> (f64, f64) {
    (n_g * tau_em, n_g * beta_dot)
}

/// Clamp a commanded voltage to the supply limit. Returns the applied
/// voltage and whether clamping occurred.
pub fn clamp_voltage(v_command: f64, v_max: f64) -> (f64, bool) {
    if v_command > v_max {
        (v_max, true)
    } else if v_command < -v_max {
        (-v_max, true)
    } else {
        (v_command, false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::params::motor_constants;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn faulhaber_3890() -> (MotorSpec, MotorDerived) {
        let spec = catalog::find_motor("FAULHABER 3890_CR_DFF").unwrap();
        let md = motor_constants(&spec).unwrap();
        (spec, md)
    }

    #[test]
    fn all_zero_inputs_give_zero_torque() {
        let (spec, md) = faulhaber_3890();
        assert_eq!(motor_torque(0.0, 0.0, 0.0, &spec, &md), 0.0);
    }

    #[test]
    fn static_frictionless_stall_recovers_sheet_torque() {
        let (mut spec, mut md) = faulhaber_3890();
        spec.j_em = 0.0;
        md.c_f = 0.0;
        let tau = motor_torque(18.0, 0.0, 0.0, &spec, &md);
        assert_relative_eq!(tau, 2.65, max_relative = 1e-12);
    }

    #[test]
    fn no_load_point_zeroes_the_electromagnetic_term() {
        let (spec, mut md) = faulhaber_3890();
        md.c_f = 0.0;
        let tau = motor_torque(18.0, 540.0, 0.0, &spec, &md);
        assert_relative_eq!(tau, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn stall_current_is_recovered() {
        let (_, md) = faulhaber_3890();
        let i = motor_current(18.0, 0.0, &md).unwrap();
        assert_relative_eq!(i, 79.0, max_relative = 1e-12);
    }

    #[test]
    fn back_emf_balance_gives_zero_current() {
        let (_, md) = faulhaber_3890();
        let i = motor_current(md.k1 * 100.0, 100.0, &md).unwrap();
        assert_relative_eq!(i, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn peak_voltage_current_is_near_the_sheet_scale() {
        let (_, md) = faulhaber_3890();
        let i = motor_current(4.37, 0.0, &md).unwrap();
        assert_relative_eq!(i, 19.18, max_relative = 1e-3);
    }

    #[test]
    fn missing_resistance_is_reported() {
        let spec = catalog::find_motor("maxon motor").unwrap();
        let md = motor_constants(&spec).unwrap();
        assert!(matches!(
            motor_current(1.0, 0.0, &md),
            Err(Error::MissingResistance)
        ));
    }

    #[test]
    fn unit_gear_ratio_is_the_identity() {
        let (m_ox, w) = gearbox_reflect(0.37, -1.2, 1.0);
        assert_eq!(m_ox, 0.37);
        assert_eq!(w, -1.2);
    }

    #[test]
    fn gearbox_multiplies_torque_and_speed() {
        let (_, w) = gearbox_reflect(0.0, 0.2348, 10.0);
        assert_relative_eq!(w, 2.348, max_relative = 1e-12);
        let (m_ox, _) = gearbox_reflect(0.66, 0.0, 10.0);
        assert_relative_eq!(m_ox, 6.6, max_relative = 1e-12);
    }

    #[test]
    fn reflected_power_is_conserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..1000 {
            let tau = rng.gen_range(-3.0..3.0);
            let bd = rng.gen_range(-5.0..5.0);
            let n_g = rng.gen_range(0.5..50.0);
            let (m_ox, w_em) = gearbox_reflect(tau, bd, n_g);
            assert_relative_eq!(m_ox * bd, tau * w_em, max_relative = 1e-14, epsilon = 1e-300);
        }
    }

    #[test]
    fn torque_speed_line_is_affine_and_decreasing() {
        let (spec, md) = faulhaber_3890();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let v = rng.gen_range(-18.0..18.0);
            let w0 = rng.gen_range(-540.0..540.0);
            let dw = rng.gen_range(0.1..50.0);
            let t0 = motor_torque(v, w0, 0.0, &spec, &md);
            let t1 = motor_torque(v, w0 + dw, 0.0, &spec, &md);
            let slope = (t1 - t0) / dw;
            assert!(t1 < t0);
            assert_relative_eq!(slope, -(md.k2 * md.k1 + md.c_f), max_relative = 1e-9);
        }
    }

    #[test]
    fn torque_is_affine_in_voltage_with_slope_k2() {
        let (spec, md) = faulhaber_3890();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..500 {
            let w = rng.gen_range(-540.0..540.0);
            let wd = rng.gen_range(-100.0..100.0);
            let v0 = rng.gen_range(-18.0..18.0);
            let dv = rng.gen_range(0.1..5.0);
            let t0 = motor_torque(v0, w, wd, &spec, &md);
            let t1 = motor_torque(v0 + dv, w, wd, &spec, &md);
            assert_relative_eq!((t1 - t0) / dv, md.k2, max_relative = 1e-9);
        }
    }

    #[test]
    fn current_sign_follows_electromagnetic_torque() {
        let (mut spec, md) = faulhaber_3890();
        spec.j_em = 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let v = rng.gen_range(-18.0..18.0);
            let w = rng.gen_range(-540.0..540.0);
            let em = md.k2 * (v - md.k1 * w);
            let i = motor_current(v, w, &md).unwrap();
            if em != 0.0 && i != 0.0 {
                assert_eq!(em.signum(), i.signum());
            }
        }
    }

    #[test]
    fn clamping_reports_and_bounds() {
        assert_eq!(clamp_voltage(4.0, 18.0), (4.0, false));
        assert_eq!(clamp_voltage(20.0, 18.0), (18.0, true));
        assert_eq!(clamp_voltage(-25.0, 18.0), (-18.0, true));
    }
}
