//! Sectioned plain-text configuration documents.
//!
//! Grammar: `[section]` headers, `key = value` assignments, `#` comment
//! lines, blank lines ignored. Sections are `[spacecraft]`, `[motor]`,
//! `[rw]`, `[control]`, `[sim]`. Unknown sections and keys are rejected,
//! and all problems in a document are reported together.
//!
//! Angles carry their unit in the key suffix: `phi0_rad` or `phi0_deg`.
//! Pairs are comma-separated (`disturbance_override = 12.64, 0.0`), the
//! gain is a comma-separated list, and tabulated signals are
//! semicolon-separated `time:value` knots (`w_x = 0:0.0; 25:0.1`).

use std::collections::BTreeMap;

use crate::catalog;
use crate::control::GainVector;
use crate::error::Error;
use crate::params::{
    InitialState, MotorSpec, PlantModel, RwParams, ScenarioConfig, Signal, SpacecraftParams,
};

const SECTIONS: [&str; 5] = ["spacecraft", "motor", "rw", "control", "sim"];

const SPACECRAFT_KEYS: [&str; 14] = [
    "m_s", "m_n", "i_s1", "i_s2", "i_n1", "i_n2", "z_s", "z_n", "x_s", "y_s", "spin_rate",
    "delta_v_d", "t_b", "disturbance_override",
];
const MOTOR_KEYS: [&str; 10] = [
    "catalog", "name", "mass", "tau_stall", "omega_max", "v_max", "i_stall", "j_em", "tau_f",
    "n_g",
];
const RW_KEYS: [&str; 3] = ["tau_rm", "gamma", "h_max"];
const CONTROL_KEYS: [&str; 1] = ["k"];
const SIM_KEYS: [&str; 17] = [
    "model",
    "dt",
    "duration",
    "phi0_rad",
    "phi0_deg",
    "theta0_rad",
    "theta0_deg",
    "psi0_rad",
    "psi0_deg",
    "beta0_rad",
    "beta0_deg",
    "beta_dot0",
    "wsx0",
    "wsy0",
    "h_rx0",
    "h_ry0",
    "w_x",
];
// w_y shares the table below; listed separately to keep the array sizes
// honest.
const SIM_EXTRA_KEYS: [&str; 1] = ["w_y"];

type Section = BTreeMap<String, (String, usize)>;

struct Parser {
    errors: Vec<String>,
}

impl Parser {
    fn err(&mut self, line: usize, message: impl std::fmt::Display) {
        self.errors.push(format!("line {line}: {message}"));
    }

    fn err_key(&mut self, section: &str, key: &str, message: impl std::fmt::Display) {
        self.errors.push(format!("{section}.{key}: {message}"));
    }

    fn f64(&mut self, section: &str, sec: &Section, key: &str) -> Option<f64> {
        let (raw, _line) = sec.get(key)?;
        match raw.parse::<f64>() {
            Ok(v) => Some(v),
            Err(_) => {
                self.err_key(section, key, format!("expected a number, got `{raw}`"));
                None
            }
        }
    }

    fn required_f64(&mut self, section: &str, sec: &Section, key: &str) -> Option<f64> {
        if !sec.contains_key(key) {
            self.err_key(section, key, "missing required key");
            return None;
        }
        self.f64(section, sec, key)
    }

    fn pair(&mut self, section: &str, sec: &Section, key: &str) -> Option<(f64, f64)> {
        let (raw, _line) = sec.get(key)?;
        let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
        if parts.len() != 2 {
            self.err_key(section, key, "expected two comma-separated numbers");
            return None;
        }
        match (parts[0].parse::<f64>(), parts[1].parse::<f64>()) {
            (Ok(a), Ok(b)) => Some((a, b)),
            _ => {
                self.err_key(section, key, format!("expected two numbers, got `{raw}`"));
                None
            }
        }
    }

    fn float_list(&mut self, section: &str, sec: &Section, key: &str) -> Option<Vec<f64>> {
        let (raw, _line) = sec.get(key)?;
        let mut values = Vec::new();
        for part in raw.split(',') {
            match part.trim().parse::<f64>() {
                Ok(v) => values.push(v),
                Err(_) => {
                    self.err_key(section, key, format!("`{}` is not a number", part.trim()));
                    return None;
                }
            }
        }
        Some(values)
    }

    fn signal(&mut self, section: &str, sec: &Section, key: &str) -> Option<Signal> {
        let (raw, _line) = sec.get(key)?;
        let mut knots = Vec::new();
        for chunk in raw.split(';') {
            let chunk = chunk.trim();
            if chunk.is_empty() {
                continue;
            }
            let Some((t, v)) = chunk.split_once(':') else {
                self.err_key(section, key, format!("knot `{chunk}` is not `time:value`"));
                return None;
            };
            match (t.trim().parse::<f64>(), v.trim().parse::<f64>()) {
                (Ok(t), Ok(v)) => knots.push((t, v)),
                _ => {
                    self.err_key(section, key, format!("knot `{chunk}` is not numeric"));
                    return None;
                }
            }
        }
        Some(Signal(knots))
    }

    /// Angle in radians from either a `_rad` or `_deg` suffixed key.
    fn angle(&mut self, section: &str, sec: &Section, base: &str) -> Option<f64> {
        let rad_key = format!("{base}_rad");
        let deg_key = format!("{base}_deg");
        let has_rad = sec.contains_key(rad_key.as_str());
        let has_deg = sec.contains_key(deg_key.as_str());
        if has_rad && has_deg {
            self.err_key(
                section,
                base,
                format!("give either {rad_key} or {deg_key}, not both"),
            );
            return None;
        }
        if has_rad {
            self.f64(section, sec, &rad_key)
        } else if has_deg {
            self.f64(section, sec, &deg_key).map(f64::to_radians)
        } else {
            None
        }
    }
}

fn split_sections(text: &str, errors: &mut Vec<String>) -> BTreeMap<String, Section> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim().to_ascii_lowercase();
            if !SECTIONS.contains(&name.as_str()) {
                errors.push(format!("line {line_no}: unknown section [{name}]"));
                current = None;
                continue;
            }
            sections.entry(name.clone()).or_default();
            current = Some(name);
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            errors.push(format!("line {line_no}: expected `key = value`, got `{line}`"));
            continue;
        };
        let Some(section) = current.clone() else {
            errors.push(format!("line {line_no}: `{}` appears before any section", key.trim()));
            continue;
        };
        let key = key.trim().to_ascii_lowercase();
        let allowed: &[&str] = match section.as_str() {
            "spacecraft" => &SPACECRAFT_KEYS,
            "motor" => &MOTOR_KEYS,
            "rw" => &RW_KEYS,
            "control" => &CONTROL_KEYS,
            "sim" => &SIM_KEYS,
            _ => unreachable!(),
        };
        let allowed_extra = section == "sim" && SIM_EXTRA_KEYS.contains(&key.as_str());
        if !allowed.contains(&key.as_str()) && !allowed_extra {
            errors.push(format!("line {line_no}: unknown key `{section}.{key}`"));
            continue;
        }
        let entry = sections.entry(section.clone()).or_default();
        if entry.contains_key(&key) {
            errors.push(format!("line {line_no}: duplicate key `{section}.{key}`"));
            continue;
        }
        entry.insert(key, (value.trim().to_string(), line_no));
    }
    sections
}

/// Parse a configuration document. All parse problems are collected and
/// returned together.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, Error> {
    let mut errors = Vec::new();
    let sections = split_sections(text, &mut errors);
    let mut p = Parser { errors };
    let empty = Section::new();

    for required in ["spacecraft", "motor", "rw", "control"] {
        if !sections.contains_key(required) {
            p.errors.push(format!("missing required section [{required}]"));
        }
    }

    let sec = sections.get("spacecraft").unwrap_or(&empty);
    let spacecraft = SpacecraftParams {
        m_s: p.required_f64("spacecraft", sec, "m_s").unwrap_or(f64::NAN),
        m_n: p.required_f64("spacecraft", sec, "m_n").unwrap_or(f64::NAN),
        i_s1: p.required_f64("spacecraft", sec, "i_s1").unwrap_or(f64::NAN),
        i_s2: p.required_f64("spacecraft", sec, "i_s2").unwrap_or(f64::NAN),
        i_n1: p.required_f64("spacecraft", sec, "i_n1").unwrap_or(f64::NAN),
        i_n2: p.required_f64("spacecraft", sec, "i_n2").unwrap_or(f64::NAN),
        z_s: p.required_f64("spacecraft", sec, "z_s").unwrap_or(f64::NAN),
        z_n: p.required_f64("spacecraft", sec, "z_n").unwrap_or(f64::NAN),
        x_s: p.f64("spacecraft", sec, "x_s").unwrap_or(0.0),
        y_s: p.f64("spacecraft", sec, "y_s").unwrap_or(0.0),
        spin_rate: p
            .required_f64("spacecraft", sec, "spin_rate")
            .unwrap_or(f64::NAN),
        delta_v_d: p
            .required_f64("spacecraft", sec, "delta_v_d")
            .unwrap_or(f64::NAN),
        t_b: p.required_f64("spacecraft", sec, "t_b").unwrap_or(f64::NAN),
        disturbance_override: p.pair("spacecraft", sec, "disturbance_override"),
    };

    let sec = sections.get("motor").unwrap_or(&empty);
    let motor = build_motor(&mut p, sec);

    let sec = sections.get("rw").unwrap_or(&empty);
    let rw = RwParams {
        tau_rm: p.required_f64("rw", sec, "tau_rm").unwrap_or(f64::NAN),
        gamma: p.required_f64("rw", sec, "gamma").unwrap_or(f64::NAN),
        h_max: p.f64("rw", sec, "h_max"),
    };

    let sec = sections.get("control").unwrap_or(&empty);
    let gain = if sec.contains_key("k") {
        GainVector(p.float_list("control", sec, "k").unwrap_or_default())
    } else {
        if sections.contains_key("control") {
            p.err_key("control", "k", "missing required key");
        }
        GainVector(Vec::new())
    };

    let sec = sections.get("sim").unwrap_or(&empty);
    let model = match sec.get("model") {
        Some((raw, line)) => match raw.to_ascii_lowercase().as_str() {
            "linear" => PlantModel::Linear,
            "nonlinear" => PlantModel::Nonlinear,
            other => {
                p.err(*line, format!("sim.model must be `linear` or `nonlinear`, got `{other}`"));
                PlantModel::Nonlinear
            }
        },
        None => PlantModel::Nonlinear,
    };
    let dt = p.f64("sim", sec, "dt").unwrap_or(5e-4);
    let duration = p.f64("sim", sec, "duration").unwrap_or(spacecraft.t_b);
    let initial = InitialState {
        phi: p.angle("sim", sec, "phi0").unwrap_or(0.0),
        theta: p.angle("sim", sec, "theta0").unwrap_or(0.0),
        psi: p.angle("sim", sec, "psi0").unwrap_or(0.0),
        beta: p.angle("sim", sec, "beta0").unwrap_or(0.0),
        beta_dot: p.f64("sim", sec, "beta_dot0").unwrap_or(0.0),
        w_sx: p.f64("sim", sec, "wsx0").unwrap_or(0.0),
        w_sy: p.f64("sim", sec, "wsy0").unwrap_or(0.0),
        h_rx: p.f64("sim", sec, "h_rx0").unwrap_or(0.0),
        h_ry: p.f64("sim", sec, "h_ry0").unwrap_or(0.0),
    };
    let w_x = p.signal("sim", sec, "w_x").unwrap_or_else(Signal::zero);
    let w_y = p.signal("sim", sec, "w_y").unwrap_or_else(Signal::zero);

    if !p.errors.is_empty() {
        return Err(Error::Config(p.errors));
    }

    Ok(ScenarioConfig {
        spacecraft,
        motor,
        rw,
        gain,
        model,
        dt,
        duration,
        initial,
        w_x,
        w_y,
    })
}

fn build_motor(p: &mut Parser, sec: &Section) -> MotorSpec {
    let mut motor = match sec.get("catalog") {
        Some((name, line)) => match catalog::find_motor(name) {
            Some(m) => m,
            None => {
                let names: Vec<String> =
                    catalog::catalog().into_iter().map(|m| m.name).collect();
                p.err(
                    *line,
                    format!(
                        "unknown catalog motor `{name}`; available: {}",
                        names.join(", ")
                    ),
                );
                return placeholder_motor();
            }
        },
        None => {
            // Fully manual motor definition.
            for key in ["name", "mass", "tau_stall", "omega_max", "v_max", "n_g"] {
                if !sec.contains_key(key) {
                    p.err_key("motor", key, "missing required key (or use `catalog = <name>`)");
                }
            }
            MotorSpec {
                name: sec
                    .get("name")
                    .map(|(v, _)| v.clone())
                    .unwrap_or_default(),
                mass: f64::NAN,
                tau_stall: f64::NAN,
                omega_max: f64::NAN,
                v_max: f64::NAN,
                i_stall: None,
                j_em: 0.0,
                tau_f: 0.0,
                n_g: f64::NAN,
            }
        }
    };
    if let Some((name, _)) = sec.get("name") {
        motor.name = name.clone();
    }
    if let Some(v) = p.f64("motor", sec, "mass") {
        motor.mass = v;
    }
    if let Some(v) = p.f64("motor", sec, "tau_stall") {
        motor.tau_stall = v;
    }
    if let Some(v) = p.f64("motor", sec, "omega_max") {
        motor.omega_max = v;
    }
    if let Some(v) = p.f64("motor", sec, "v_max") {
        motor.v_max = v;
    }
    if let Some(v) = p.f64("motor", sec, "i_stall") {
        motor.i_stall = Some(v);
    }
    if let Some(v) = p.f64("motor", sec, "j_em") {
        motor.j_em = v;
    }
    if let Some(v) = p.f64("motor", sec, "tau_f") {
        motor.tau_f = v;
    }
    if let Some(v) = p.f64("motor", sec, "n_g") {
        motor.n_g = v;
    }
    motor
}

fn placeholder_motor() -> MotorSpec {
    MotorSpec {
        name: String::new(),
        mass: f64::NAN,
        tau_stall: f64::NAN,
        omega_max: f64::NAN,
        v_max: f64::NAN,
        i_stall: None,
        j_em: 0.0,
        tau_f: 0.0,
        n_g: f64::NAN,
    }
}
