//! Domain-constrained relations among thigh, shank, knee and leg angles,
//! and the swing-phase flexion torque controller.
//!
//! The controller is a three-phase finite state machine. Only the first
//! phase (passive flexion) is fully specified by the model; the active
//! assist and hold phases use explicit, documented transition predicates:
//! the assist phase triggers when the leg stops swinging forward while
//! ground clearance is at risk, and the hold phase is the zero-torque
//! terminal state before stance.

use std::f64::consts::FRAC_PI_2;
use thiserror::Error;

/// Shank length and overall leg length used by the constrained relations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricLeg {
    /// Shank length \[m\].
    pub ls: f64,
    /// Length of the leg \[m\].
    pub l: f64,
}

impl GeometricLeg {
    pub fn new(ls: f64, l: f64) -> Self {
        Self { ls, l }
    }
}

/// Phase of the swing-phase knee controller.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerPhase {
    /// Knee flexes passively under the hip moment; no torque.
    PassiveFlex,
    /// Active flexion assist while ground clearance is at risk.
    ActiveFlexAssist,
    /// Zero-torque terminal phase before stance.
    Hold,
}

/// Controller state carried between steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerState {
    pub phase: ControllerPhase,
    /// Flexion gain \[N m s/rad\], non-negative.
    pub k_flex: f64,
}

impl ControllerState {
    pub fn new(k_flex: f64) -> Self {
        Self {
            phase: ControllerPhase::PassiveFlex,
            k_flex,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("geometry: constraint argument {value} outside (-1, 1)")]
    ConstraintDomain { value: f64 },
    #[error("geometry: asin argument {value} outside [-1, 1]")]
    AsinDomain { value: f64 },
    #[error("geometry: derivative singular at |theta_k| = pi/2 (theta_k = {theta_k})")]
    DerivativeSingular { theta_k: f64 },
}

/// Knee angle from the thigh and leg angles: theta_k = theta_th - theta_lg.
pub fn knee_from_thigh_shank(theta_th: f64, theta_lg: f64) -> f64 {
    theta_th - theta_lg
}

/// Shank angle from the knee angle through the domain-constrained relation
/// arccos(-sin theta_k / (ls l)); the argument must lie strictly in (-1, 1).
pub fn shank_from_knee(theta_k: f64, leg: &GeometricLeg) -> Result<f64, GeometryError> {
    let arg = -theta_k.sin() / (leg.ls * leg.l);
    if arg.abs() >= 1.0 {
        return Err(GeometryError::ConstraintDomain { value: arg });
    }
    Ok(arg.acos())
}

/// Angle between the hip line and the hip-ankle line:
/// alpha = pi/2 - theta_k + asin(ls sin theta_k / l).
pub fn leg_angle(theta_k: f64, leg: &GeometricLeg) -> Result<f64, GeometryError> {
    let arg = leg.ls * theta_k.sin() / leg.l;
    if arg.abs() > 1.0 {
        return Err(GeometryError::AsinDomain { value: arg });
    }
    Ok(FRAC_PI_2 - theta_k + arg.asin())
}

/// Flexion torque proportional to the rate of forward leg motion: zero while
/// the leg swings forward (alpha_dot > 0), -k_flex alpha_dot otherwise.
pub fn flexion_torque_rate(alpha_dot: f64, k_flex: f64) -> f64 {
    if alpha_dot > 0.0 {
        0.0
    } else {
        -k_flex * alpha_dot
    }
}

/// Flexion torque in terms of the knee rate: zero while the leg swings
/// forward, 2 k_flex theta_k_dot / (ls l) otherwise.
pub fn flexion_torque_knee_rate(
    theta_k_dot: f64,
    k_flex: f64,
    leg: &GeometricLeg,
    alpha_dot: f64,
) -> f64 {
    if alpha_dot > 0.0 {
        0.0
    } else {
        2.0 * k_flex * theta_k_dot / (leg.ls * leg.l)
    }
}

/// One deterministic transition of the swing-phase controller.
///
/// Transition rules:
/// - `PassiveFlex` while the leg swings forward; once forward motion stops,
///   go to `ActiveFlexAssist` if clearance is at risk, else to `Hold`.
/// - `ActiveFlexAssist` emits the knee-rate flexion torque until clearance
///   is recovered, then goes to `Hold`.
/// - `Hold` is terminal and emits no torque.
pub fn fsm_step(
    cs: &ControllerState,
    alpha_dot: f64,
    theta_k_dot: f64,
    leg: &GeometricLeg,
    ground_clearance_ok: bool,
) -> (ControllerState, f64) {
    let next_phase = match cs.phase {
        ControllerPhase::PassiveFlex => {
            if alpha_dot > 0.0 {
                ControllerPhase::PassiveFlex
            } else if ground_clearance_ok {
                ControllerPhase::Hold
            } else {
                ControllerPhase::ActiveFlexAssist
            }
        }
        ControllerPhase::ActiveFlexAssist => {
            if ground_clearance_ok {
                ControllerPhase::Hold
            } else {
                ControllerPhase::ActiveFlexAssist
            }
        }
        ControllerPhase::Hold => ControllerPhase::Hold,
    };
    let torque = match next_phase {
        ControllerPhase::ActiveFlexAssist => {
            flexion_torque_knee_rate(theta_k_dot, cs.k_flex, leg, alpha_dot)
        }
        _ => 0.0,
    };
    (
        ControllerState {
            phase: next_phase,
            k_flex: cs.k_flex,
        },
        torque,
    )
}

/// Evaluates d/dt arccos(sin theta_k) both analytically and via the
/// simplified identity -theta_k_dot; the two agree on (-pi/2, pi/2).
pub fn arccos_sin_derivative_check(
    theta_k: f64,
    theta_k_dot: f64,
) -> Result<(f64, f64), GeometryError> {
    if theta_k.abs() >= FRAC_PI_2 {
        return Err(GeometryError::DerivativeSingular { theta_k });
    }
    let s = theta_k.sin();
    let analytic = -theta_k.cos() / (1.0 - s * s).sqrt() * theta_k_dot;
    Ok((analytic, -theta_k_dot))
}
