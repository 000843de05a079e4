//! Embedded industrial DC-motor catalog.
//!
//! The sheet values carry stall torque, no-load speed, and rated voltage.
//! Rotor inertia, rated friction, and stall current are only published for
//! the FAULHABER 3890; the other rows carry zeros / no stall current, which
//! the rest of the crate treats as "not modeled". Every row ships with
//! `n_g = 1`; the scenario config chooses the gearbox ratio.

use crate::params::MotorSpec;

fn row(
    name: &str,
    mass: f64,
    tau_stall: f64,
    omega_max: f64,
    v_max: f64,
    i_stall: Option<f64>,
    j_em: f64,
    tau_f: f64,
) -> MotorSpec {
    MotorSpec {
        name: name.to_string(),
        mass,
        tau_stall,
        omega_max,
        v_max,
        i_stall,
        j_em,
        tau_f,
        n_g: 1.0,
    }
}

/// All catalog rows, in sheet order.
pub fn catalog() -> Vec<MotorSpec> {
    vec![
        row("FAULHABER 3272_CR_DFF", 0.32, 1.2, 540.0, 12.0, None, 0.0, 0.0),
        row(
            "FAULHABER 3890_CR_DFF",
            0.55,
            2.65,
            540.0,
            18.0,
            Some(79.0),
            164e-7,
            10e-3,
        ),
        row(
            "buehler EC-Motor_39x107_1.25.03_7.4XX",
            0.5,
            1.05,
            450.0,
            12.0,
            None,
            0.0,
            0.0,
        ),
        row(
            "buehler EC-Motor_62x112_1.25.05_8.2XX",
            1.4,
            3.8,
            400.0,
            24.0,
            None,
            0.0,
            0.0,
        ),
        row("bosch F_006_B20_092", 1.0, 27.0, 4.4, 12.0, None, 0.0, 0.0),
        row("maxon motor", 0.48, 1.72, 692.0, 12.0, None, 0.0, 0.0),
    ]
}

/// Look a motor up by name (case-insensitive).
pub fn find_motor(name: &str) -> Option<MotorSpec> {
    let wanted = name.trim().to_ascii_lowercase();
    catalog()
        .into_iter()
        .find(|m| m.name.to_ascii_lowercase() == wanted)
}

/// Render the catalog sheet columns as CSV.
pub fn catalog_csv() -> String {
    let mut out = String::from("name,mass_kg,tau_stall_Nm,omega_max_rad_s,v_max_V\n");
    for m in catalog() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            m.name, m.mass, m.tau_stall, m.omega_max, m.v_max
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_rows_with_unique_names() {
        let rows = catalog();
        assert_eq!(rows.len(), 6);
        let mut names: Vec<_> = rows.iter().map(|m| m.name.clone()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), 6);
    }

    #[test]
    fn lookup_is_case_insensitive() {
        assert!(find_motor("faulhaber 3890_cr_dff").is_some());
        assert!(find_motor("no such motor").is_none());
    }

    #[test]
    fn csv_has_header_and_all_rows() {
        let csv = catalog_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "name,mass_kg,tau_stall_Nm,omega_max_rad_s,v_max_V");
        assert_eq!(lines.len(), 7);
        assert!(lines.iter().any(|l| l.starts_with("FAULHABER 3890_CR_DFF,0.55,2.65,540,18")));
    }
}
