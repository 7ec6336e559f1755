//! Shared domain types and parameter derivation/validation.
//!
//! Angle conventions follow the model throughout: the thigh angle is
//! measured from the horizontal, the shank angle from the vertical.

use thiserror::Error;

/// Inertial and geometric parameters of the thigh-shank chain.
///
/// Subscript 1 refers to the thigh, subscript 2 to the shank. COM offsets
/// `a1`/`a2` are measured from the hip and knee joints respectively.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentParams {
    /// Thigh mass \[kg\].
    pub m1: f64,
    /// Shank mass \[kg\].
    pub m2: f64,
    /// Thigh COM distance from the hip \[m\].
    pub a1: f64,
    /// Shank COM distance from the knee \[m\].
    pub a2: f64,
    /// Thigh moment of inertia \[kg m^2\].
    pub i1: f64,
    /// Shank moment of inertia \[kg m^2\].
    pub i2: f64,
    /// Thigh length \[m\].
    pub l1: f64,
    /// Shank length \[m\].
    pub l2: f64,
    /// Gravitational acceleration \[m/s^2\].
    pub g: f64,
}

/// Geometry of the hydraulic knee damper attachment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DamperGeometry {
    /// Knee centre to thigh-side piston attachment \[m\].
    pub s: f64,
    /// Knee centre to shank-side damper attachment \[m\].
    pub b: f64,
    /// Damper orientation angle \[rad\].
    pub beta: f64,
    /// Damper length \[m\].
    pub ld: f64,
}

/// Instantaneous joint configuration with first and second derivatives.
///
/// `theta_t` is the absolute thigh angle from the horizontal, `theta_s` the
/// absolute shank angle from the vertical.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JointState {
    pub theta_t: f64,
    pub theta_s: f64,
    pub dtheta_t: f64,
    pub dtheta_s: f64,
    pub ddtheta_t: f64,
    pub ddtheta_s: f64,
}

impl JointState {
    /// State with only angles set; derivatives zero.
    pub fn static_pose(theta_t: f64, theta_s: f64) -> Self {
        Self {
            theta_t,
            theta_s,
            ..Self::default()
        }
    }

    pub fn is_finite(&self) -> bool {
        [
            self.theta_t,
            self.theta_s,
            self.dtheta_t,
            self.dtheta_s,
            self.ddtheta_t,
            self.ddtheta_s,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Generalized forces on the (hip, knee) coordinates: hip torque input plus
/// the damper force mapped through its attachment geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralizedForces {
    /// First component of the generalized force vector \[N m\].
    pub gamma_hip: f64,
    /// Second component of the generalized force vector \[N m\].
    pub gamma_knee: f64,
    /// Hip torque input \[N m\].
    pub t1: f64,
    /// Damper force, exogenous input \[N\].
    pub fa: f64,
}

/// Result of a parameter validation pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub ok: bool,
    /// (field name, description) per violated invariant.
    pub violations: Vec<(String, String)>,
}

impl ValidationReport {
    fn from_violations(violations: Vec<(String, String)>) -> Self {
        Self {
            ok: violations.is_empty(),
            violations,
        }
    }
}

/// Shank-side parameter subset recoverable from the anthropometric torque
/// coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShankSideParams {
    pub m2: f64,
    pub a2: f64,
    pub l1: f64,
    pub i2: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("params: coefficient {name} must be strictly positive, got {value}")]
    NonPositiveCoefficient { name: &'static str, value: f64 },
    #[error("params: line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("params: line {line}: malformed line (expected `key = value`)")]
    MalformedLine { line: usize },
    #[error("params: line {line}: value for `{key}` is not a finite number")]
    BadValue { line: usize, key: String },
    #[error("params: line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("params: missing required key `{key}`")]
    MissingKey { key: &'static str },
    #[error("params: damper keys must be given together (s, b, ld; beta optional)")]
    PartialDamper,
    #[error("params: invalid parameters: {0}")]
    Invalid(String),
}

/// Inverts the coefficient structure of the anthropometric knee-torque
/// equation: c1 = m2 a2^2, c2 = m2 l1 a2, c3 = I2, c4 = m2 g a2.
pub fn derive_params_from_coefficients(
    c1: f64,
    c2: f64,
    c3: f64,
    c4: f64,
    g: f64,
) -> Result<ShankSideParams, ParamError> {
    for (name, value) in [("c1", c1), ("c2", c2), ("c4", c4), ("g", g)] {
        if !(value > 0.0) {
            return Err(ParamError::NonPositiveCoefficient { name, value });
        }
    }
    if !(c3 >= 0.0) {
        return Err(ParamError::NonPositiveCoefficient {
            name: "c3",
            value: c3,
        });
    }
    let a2 = c1 * g / c4;
    let m2 = (c4 / g) / a2;
    let l1 = c2 / (c4 / g);
    Ok(ShankSideParams { m2, a2, l1, i2: c3 })
}

/// The printed anthropometric torque coefficients: (c1, c2, c3, c4).
pub const ANTHRO_COEFFS: (f64, f64, f64, f64) = (0.0804, 0.2553, 0.032, 4.57168);

impl SegmentParams {
    /// Canonical parameter set "ANTHRO-1": shank-side values derived from
    /// the printed torque coefficients at g = 9.81, thigh-side values filled
    /// with documented defaults (m1 = 7 kg, a1 = 0.25 m, I1 = 0.15 kg m^2,
    /// l2 = 0.45 m). The defaults are configuration, not ground truth.
    pub fn anthro1() -> Self {
        let (c1, c2, c3, c4) = ANTHRO_COEFFS;
        let shank = derive_params_from_coefficients(c1, c2, c3, c4, 9.81)
            .expect("printed coefficients are positive");
        Self {
            m1: 7.0,
            m2: shank.m2,
            a1: 0.25,
            a2: shank.a2,
            i1: 0.15,
            i2: shank.i2,
            l1: shank.l1,
            l2: 0.45,
            g: 9.81,
        }
    }
}

/// Checks every `SegmentParams` invariant and reports all violations.
pub fn validate_params(p: &SegmentParams) -> ValidationReport {
    let mut violations = Vec::new();
    let positive = [
        ("m1", p.m1),
        ("m2", p.m2),
        ("a1", p.a1),
        ("a2", p.a2),
        ("l1", p.l1),
        ("l2", p.l2),
        ("g", p.g),
    ];
    for (name, value) in positive {
        if !(value > 0.0) || !value.is_finite() {
            violations.push((
                name.to_string(),
                format!("must be strictly positive, got {value}"),
            ));
        }
    }
    for (name, value) in [("I1", p.i1), ("I2", p.i2)] {
        if !(value > 0.0) || !value.is_finite() {
            violations.push((
                name.to_string(),
                format!("must be strictly positive, got {value}"),
            ));
        }
    }
    if p.a1 > p.l1 {
        violations.push((
            "a1".to_string(),
            format!("COM beyond segment: a1 = {} > l1 = {}", p.a1, p.l1),
        ));
    }
    if p.a2 > p.l2 {
        violations.push((
            "a2".to_string(),
            format!("COM beyond segment: a2 = {} > l2 = {}", p.a2, p.l2),
        ));
    }
    ValidationReport::from_violations(violations)
}

/// Parsed contents of a flat `key = value` parameter file.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamFile {
    pub segment: SegmentParams,
    pub damper: Option<DamperGeometry>,
}

/// Parses a flat `key = value` parameter file.
///
/// Keys: m1, m2, a1, a2, I1, I2, l1, l2, g (default 9.81) plus the optional
/// damper group s, b, beta, ld. `#` starts a comment; unknown keys are
/// rejected. The parsed segment parameters are validated before returning.
pub fn parse_param_file(text: &str) -> Result<ParamFile, ParamError> {
    const SEGMENT_KEYS: [&str; 9] = ["m1", "m2", "a1", "a2", "I1", "I2", "l1", "l2", "g"];
    const DAMPER_KEYS: [&str; 4] = ["s", "b", "beta", "ld"];

    let mut values: Vec<(String, f64)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ParamError::MalformedLine { line });
        };
        let key = key.trim();
        if !SEGMENT_KEYS.contains(&key) && !DAMPER_KEYS.contains(&key) {
            return Err(ParamError::UnknownKey {
                line,
                key: key.to_string(),
            });
        }
        if values.iter().any(|(k, _)| k == key) {
            return Err(ParamError::DuplicateKey {
                line,
                key: key.to_string(),
            });
        }
        let parsed: f64 = value.trim().parse().map_err(|_| ParamError::BadValue {
            line,
            key: key.to_string(),
        })?;
        if !parsed.is_finite() {
            return Err(ParamError::BadValue {
                line,
                key: key.to_string(),
            });
        }
        values.push((key.to_string(), parsed));
    }

    let get = |key: &str| values.iter().find(|(k, _)| k == key).map(|(_, v)| *v);
    let require = |key: &'static str| get(key).ok_or(ParamError::MissingKey { key });

    let segment = SegmentParams {
        m1: require("m1")?,
        m2: require("m2")?,
        a1: require("a1")?,
        a2: require("a2")?,
        i1: require("I1")?,
        i2: require("I2")?,
        l1: require("l1")?,
        l2: require("l2")?,
        g: get("g").unwrap_or(9.81),
    };
    let report = validate_params(&segment);
    if !report.ok {
        let detail = report
            .violations
            .iter()
            .map(|(field, msg)| format!("{field}: {msg}"))
            .collect::<Vec<_>>()
            .join("; ");
        return Err(ParamError::Invalid(detail));
    }

    let damper_present: Vec<&str> = ["s", "b", "ld"]
        .into_iter()
        .filter(|k| get(k).is_some())
        .collect();
    let damper = match damper_present.len() {
        0 => {
            if get("beta").is_some() {
                return Err(ParamError::PartialDamper);
            }
            None
        }
        3 => {
            let d = DamperGeometry {
                s: get("s").unwrap(),
                b: get("b").unwrap(),
                beta: get("beta").unwrap_or(0.0),
                ld: get("ld").unwrap(),
            };
            if !(d.s > 0.0 && d.b > 0.0 && d.ld > 0.0) {
                return Err(ParamError::Invalid(
                    "damper lengths s, b, ld must be strictly positive".to_string(),
                ));
            }
            Some(d)
        }
        _ => return Err(ParamError::PartialDamper),
    };

    Ok(ParamFile { segment, damper })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn coefficient_inversion_matches_derived_values() {
        let (c1, c2, c3, c4) = ANTHRO_COEFFS;
        let s = derive_params_from_coefficients(c1, c2, c3, c4, 9.81).unwrap();
        assert_relative_eq!(s.m2, 2.7012, max_relative = 1e-4);
        assert_relative_eq!(s.a2, 0.17252, max_relative = 1e-4);
        assert_relative_eq!(s.l1, 0.54783, max_relative = 1e-4);
        assert_eq!(s.i2, 0.032);
    }

    #[test]
    fn coefficient_round_trip_is_exact() {
        let (c1, c2, c3, c4) = ANTHRO_COEFFS;
        let g = 9.81;
        let s = derive_params_from_coefficients(c1, c2, c3, c4, g).unwrap();
        assert_relative_eq!(s.m2 * s.a2 * s.a2, c1, max_relative = 1e-12);
        assert_relative_eq!(s.m2 * s.l1 * s.a2, c2, max_relative = 1e-12);
        assert_relative_eq!(s.i2, c3, max_relative = 1e-12);
        assert_relative_eq!(s.m2 * g * s.a2, c4, max_relative = 1e-12);
    }

    #[test]
    fn identity_products() {
        let g = 9.81;
        let s = derive_params_from_coefficients(1.0, 1.0, 0.0, g, g).unwrap();
        assert_relative_eq!(s.m2, 1.0, max_relative = 1e-14);
        assert_relative_eq!(s.a2, 1.0, max_relative = 1e-14);
        assert_relative_eq!(s.l1, 1.0, max_relative = 1e-14);
        assert_eq!(s.i2, 0.0);
    }

    #[test]
    fn negative_coefficient_names_offender() {
        let err = derive_params_from_coefficients(0.0804, 0.2553, 0.032, -1.0, 9.81).unwrap_err();
        assert_eq!(
            err,
            ParamError::NonPositiveCoefficient {
                name: "c4",
                value: -1.0
            }
        );
    }

    #[test]
    fn anthro1_validates() {
        let report = validate_params(&SegmentParams::anthro1());
        assert!(report.ok, "{:?}", report.violations);
        assert!(report.violations.is_empty());
    }

    #[test]
    fn negative_mass_reported() {
        let p = SegmentParams {
            m2: -1.0,
            ..SegmentParams::anthro1()
        };
        let report = validate_params(&p);
        assert!(!report.ok);
        assert!(report.violations.iter().any(|(f, _)| f == "m2"));
    }

    #[test]
    fn com_beyond_segment_reported() {
        let mut p = SegmentParams::anthro1();
        p.a1 = 2.0 * p.l1;
        let report = validate_params(&p);
        assert!(!report.ok);
        assert!(report
            .violations
            .iter()
            .any(|(f, msg)| f == "a1" && msg.contains("COM beyond segment")));
    }

    #[test]
    fn param_file_round_trip() {
        let text = "\
# ANTHRO-1 with thigh defaults
m1 = 7.0
m2 = 2.70122
a1 = 0.25
a2 = 0.172523
I1 = 0.15
I2 = 0.032
l1 = 0.547827
l2 = 0.45
g = 9.81
s = 0.05
b = 0.04
beta = 0.1
ld = 0.2
";
        let file = parse_param_file(text).unwrap();
        assert_eq!(file.segment.m1, 7.0);
        assert_eq!(file.damper.unwrap().b, 0.04);
    }

    #[test]
    fn unknown_key_rejected_with_line() {
        let text = "m1 = 7.0\nbogus = 1\n";
        assert_eq!(
            parse_param_file(text).unwrap_err(),
            ParamError::UnknownKey {
                line: 2,
                key: "bogus".to_string()
            }
        );
    }

    #[test]
    fn missing_key_rejected() {
        let text = "m1 = 7.0\n";
        assert!(matches!(
            parse_param_file(text).unwrap_err(),
            ParamError::MissingKey { key: "m2" }
        ));
    }
}
