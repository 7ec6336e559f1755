//! Planar lower-limb gait dynamics toolkit.
//!
//! Models the thigh-shank chain of one leg as a two-link planar pendulum in
//! the sagittal plane and builds the surrounding analysis machinery:
//!
//! - [`params`]: shared domain types, parameter derivation and validation
//! - [`dynamics`]: closed-form Lagrangian dynamics (inertia matrix, Coriolis
//!   and gravity vectors, inverse/forward dynamics, swing knee torque) plus
//!   an independent finite-difference Euler-Lagrange oracle
//! - [`geometry`]: domain-constrained relations among thigh, shank, knee and
//!   leg angles, and the swing-phase flexion controller state machine
//! - [`estimation`]: sine-rule elimination of one joint angle given the
//!   other, and the anthropometric-coefficient knee torque
//! - [`spatial`]: stride length, stride velocity and sagittal swing/stance
//!   areas from segment angular-rate signals integrated over gait events
//! - [`signal`]: CSV ingestion, numerical differentiation, gait-event
//!   detection and synthetic gait generation
//! - [`sim`]: fixed-step RK4 forward integration of the plant, optionally
//!   closed-loop with the flexion controller
//!
//! All angles are radians, all times seconds, SI units throughout. Every
//! operation is a pure function over immutable values; batch entry points
//! run data-parallel when the `parallel` feature (default) is enabled and
//! fall back to sequential iteration otherwise.

pub mod dynamics;
pub mod estimation;
pub mod geometry;
pub mod params;
pub mod signal;
pub mod sim;
pub mod spatial;

pub use params::{DamperGeometry, GeneralizedForces, JointState, SegmentParams};
