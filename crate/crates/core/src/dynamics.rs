//! Closed-form Lagrangian dynamics of the thigh-shank chain.
//!
//! The plant is `D(theta) theta_dd + C(theta, theta_d) + G(theta) = Gamma`
//! on the (thigh, shank) coordinates, with the Coriolis term taken as a
//! 2-vector already containing the squared angular rates (the only reading
//! that is dimensionally consistent and passes the power-balance check).
//!
//! [`lagrangian_oracle`] re-derives the generalized forces from the
//! Lagrangian `L = T - V` by central finite differences and serves as the
//! independent check on the closed forms.

use crate::params::{DamperGeometry, GeneralizedForces, JointState, SegmentParams};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Default finite-difference step of the Euler-Lagrange oracle.
pub const DEFAULT_ORACLE_STEP: f64 = 1e-5;

/// Symmetric 2x2 configuration-dependent inertia matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InertiaMatrix {
    pub d11: f64,
    pub d12: f64,
    pub d21: f64,
    pub d22: f64,
}

impl InertiaMatrix {
    pub fn det(&self) -> f64 {
        self.d11 * self.d22 - self.d12 * self.d21
    }
}

/// 2-component vector on the (hip, knee) generalized coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DynVector {
    pub v1: f64,
    pub v2: f64,
}

impl DynVector {
    pub fn new(v1: f64, v2: f64) -> Self {
        Self { v1, v2 }
    }
}

/// Configuration-dependent inertia matrix D(theta).
///
/// d11 = m1 a1^2 + I1 + m2 l1^2, d22 = m2 a2^2 + I2, off-diagonals
/// -m2 l1 a2 cos(theta_t + theta_s).
pub fn inertia_matrix(p: &SegmentParams, st: &JointState) -> InertiaMatrix {
    let coupling = -p.m2 * p.l1 * p.a2 * (st.theta_t + st.theta_s).cos();
    InertiaMatrix {
        d11: p.m1 * p.a1 * p.a1 + p.i1 + p.m2 * p.l1 * p.l1,
        d12: coupling,
        d21: coupling,
        d22: p.m2 * p.a2 * p.a2 + p.i2,
    }
}

/// Coriolis/centrifugal vector: both rows carry m2 l1 a2 sin(theta_t + theta_s)
/// times the opposite coordinate's squared rate.
pub fn coriolis_vector(p: &SegmentParams, st: &JointState) -> DynVector {
    let h = p.m2 * p.l1 * p.a2 * (st.theta_t + st.theta_s).sin();
    DynVector::new(
        h * st.dtheta_s * st.dtheta_s,
        h * st.dtheta_t * st.dtheta_t,
    )
}

/// Gravity vector G(theta).
pub fn gravity_vector(p: &SegmentParams, st: &JointState) -> DynVector {
    DynVector::new(
        (p.m1 * p.g * p.a1 + p.m2 * p.g * p.l1) * st.theta_t.sin(),
        p.m2 * p.g * p.a2 * st.theta_s.sin(),
    )
}

/// Maps the hip torque input and the exogenous damper force onto the
/// generalized coordinates through the damper attachment geometry.
pub fn generalized_forces(
    d: &DamperGeometry,
    st: &JointState,
    t1: f64,
    fa: f64,
) -> GeneralizedForces {
    let lever = fa * d.b * (st.theta_s - d.beta).sin();
    GeneralizedForces {
        gamma_hip: t1 + lever,
        gamma_knee: -lever,
        t1,
        fa,
    }
}

/// Generalized torques required to realize the state's accelerations:
/// Gamma = D(theta) theta_dd + C(theta, theta_d) + G(theta).
pub fn inverse_dynamics(p: &SegmentParams, st: &JointState) -> DynVector {
    let d = inertia_matrix(p, st);
    let c = coriolis_vector(p, st);
    let g = gravity_vector(p, st);
    DynVector::new(
        d.d11 * st.ddtheta_t + d.d12 * st.ddtheta_s + c.v1 + g.v1,
        d.d21 * st.ddtheta_t + d.d22 * st.ddtheta_s + c.v2 + g.v2,
    )
}

/// Accelerations produced by the applied generalized forces:
/// theta_dd = D(theta)^-1 (Gamma - C - G).
pub fn forward_dynamics(p: &SegmentParams, st: &JointState, gamma: &DynVector) -> (f64, f64) {
    let d = inertia_matrix(p, st);
    let c = coriolis_vector(p, st);
    let g = gravity_vector(p, st);
    let r1 = gamma.v1 - c.v1 - g.v1;
    let r2 = gamma.v2 - c.v2 - g.v2;
    let det = d.det();
    (
        (d.d22 * r1 - d.d12 * r2) / det,
        (d.d11 * r2 - d.d21 * r1) / det,
    )
}

/// Knee torque during swing; algebraically identical to the knee row of
/// [`inverse_dynamics`].
pub fn swing_knee_torque(p: &SegmentParams, st: &JointState) -> f64 {
    let m2l1a2 = p.m2 * p.l1 * p.a2;
    let sum = st.theta_t + st.theta_s;
    p.m2 * p.a2 * p.a2 * st.ddtheta_s - m2l1a2 * st.ddtheta_t * sum.cos()
        + m2l1a2 * st.dtheta_t * st.dtheta_t * sum.sin()
        + p.i2 * st.ddtheta_s
        + p.m2 * p.g * p.a2 * st.theta_s.sin()
}

/// Kinetic energy T = 1/2 theta_d^T D(theta) theta_d.
pub fn kinetic_energy(p: &SegmentParams, st: &JointState) -> f64 {
    let d = inertia_matrix(p, st);
    0.5 * (d.d11 * st.dtheta_t * st.dtheta_t
        + 2.0 * d.d12 * st.dtheta_t * st.dtheta_s
        + d.d22 * st.dtheta_s * st.dtheta_s)
}

/// Potential energy with gradient equal to the gravity vector; the datum is
/// fixed so the hanging configuration sits at the stated minimum.
pub fn potential_energy(p: &SegmentParams, st: &JointState) -> f64 {
    -(p.m1 * p.g * p.a1 + p.m2 * p.g * p.l1) * st.theta_t.cos()
        - p.m2 * p.g * p.a2 * st.theta_s.cos()
}

/// Total mechanical energy T + V; conserved under unforced motion.
pub fn total_energy(p: &SegmentParams, st: &JointState) -> f64 {
    kinetic_energy(p, st) + potential_energy(p, st)
}

fn lagrangian(p: &SegmentParams, theta: [f64; 2], dtheta: [f64; 2]) -> f64 {
    let st = JointState {
        theta_t: theta[0],
        theta_s: theta[1],
        dtheta_t: dtheta[0],
        dtheta_s: dtheta[1],
        ..JointState::default()
    };
    kinetic_energy(p, &st) - potential_energy(p, &st)
}

// dL/d(theta_d_i) by central difference. L is quadratic in the rates, so
// this is exact up to rounding for any step; a fixed moderate step keeps the
// rounding term small.
fn momentum(p: &SegmentParams, theta: [f64; 2], dtheta: [f64; 2], i: usize) -> f64 {
    const VEL_STEP: f64 = 1e-3;
    let mut hi = dtheta;
    let mut lo = dtheta;
    hi[i] += VEL_STEP;
    lo[i] -= VEL_STEP;
    (lagrangian(p, theta, hi) - lagrangian(p, theta, lo)) / (2.0 * VEL_STEP)
}

/// Independent Euler-Lagrange evaluation of the generalized forces:
/// d/dt(dL/dtheta_d) - dL/dtheta via central finite differences over the
/// angles and a time-perturbed state, step [`DEFAULT_ORACLE_STEP`].
pub fn lagrangian_oracle(p: &SegmentParams, st: &JointState) -> DynVector {
    lagrangian_oracle_with_step(p, st, DEFAULT_ORACLE_STEP)
}

/// [`lagrangian_oracle`] with an explicit finite-difference step.
pub fn lagrangian_oracle_with_step(p: &SegmentParams, st: &JointState, h: f64) -> DynVector {
    let theta = [st.theta_t, st.theta_s];
    let dtheta = [st.dtheta_t, st.dtheta_s];
    let ddtheta = [st.ddtheta_t, st.ddtheta_s];

    // State advanced/retarded along its own trajectory to second order.
    let shift = |sign: f64| -> ([f64; 2], [f64; 2]) {
        let t = sign * h;
        (
            [
                theta[0] + t * dtheta[0] + 0.5 * t * t * ddtheta[0],
                theta[1] + t * dtheta[1] + 0.5 * t * t * ddtheta[1],
            ],
            [dtheta[0] + t * ddtheta[0], dtheta[1] + t * ddtheta[1]],
        )
    };
    let (theta_plus, dtheta_plus) = shift(1.0);
    let (theta_minus, dtheta_minus) = shift(-1.0);

    let mut out = [0.0; 2];
    for i in 0..2 {
        let dp_dt = (momentum(p, theta_plus, dtheta_plus, i)
            - momentum(p, theta_minus, dtheta_minus, i))
            / (2.0 * h);
        let mut hi = theta;
        let mut lo = theta;
        hi[i] += h;
        lo[i] -= h;
        let dl_dtheta = (lagrangian(p, hi, dtheta) - lagrangian(p, lo, dtheta)) / (2.0 * h);
        out[i] = dp_dt - dl_dtheta;
    }
    DynVector::new(out[0], out[1])
}

/// Inverse dynamics over a batch of states. Runs data-parallel when the
/// `parallel` feature is enabled; see [`batch_inverse_dynamics_seq`] for the
/// always-sequential variant.
pub fn batch_inverse_dynamics(p: &SegmentParams, states: &[JointState]) -> Vec<DynVector> {
    #[cfg(feature = "parallel")]
    {
        states
            .par_iter()
            .map(|st| inverse_dynamics(p, st))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        batch_inverse_dynamics_seq(p, states)
    }
}

/// Sequential batch inverse dynamics.
pub fn batch_inverse_dynamics_seq(p: &SegmentParams, states: &[JointState]) -> Vec<DynVector> {
    states.iter().map(|st| inverse_dynamics(p, st)).collect()
}
