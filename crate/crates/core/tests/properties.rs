//! Property-based invariants across randomly generated inputs.

use gait_core::dynamics::{
    forward_dynamics, inertia_matrix, inverse_dynamics, kinetic_energy, swing_knee_torque,
};
use gait_core::estimation::{sine_rule_residual, solve_theta1, LinkPair};
use gait_core::params::JointState;
use gait_core::spatial::{chord_length, heron_area, integrate_rotation, Mode, RateSignal, SegmentLabel};
use proptest::prelude::*;
use std::f64::consts::PI;

fn joint_state() -> impl Strategy<Value = JointState> {
    (
        -PI..PI,
        -PI..PI,
        -10.0..10.0,
        -10.0..10.0,
        -50.0..50.0,
        -50.0..50.0,
    )
        .prop_map(|(theta_t, theta_s, dtheta_t, dtheta_s, ddtheta_t, ddtheta_s)| JointState {
            theta_t,
            theta_s,
            dtheta_t,
            dtheta_s,
            ddtheta_t,
            ddtheta_s,
        })
}

proptest! {
    #[test]
    fn inverse_then_forward_recovers_accelerations(st in joint_state()) {
        let p = gait_core::params::SegmentParams::anthro1();
        let gamma = inverse_dynamics(&p, &st);
        let (ddt, dds) = forward_dynamics(&p, &st, &gamma);
        prop_assert!((ddt - st.ddtheta_t).abs() < 1e-8);
        prop_assert!((dds - st.ddtheta_s).abs() < 1e-8);
    }

    #[test]
    fn inertia_positive_definite_and_energy_nonnegative(st in joint_state()) {
        let p = gait_core::params::SegmentParams::anthro1();
        let d = inertia_matrix(&p, &st);
        prop_assert!(d.d11 > 0.0);
        prop_assert!(d.det() > 0.0);
        prop_assert!(kinetic_energy(&p, &st) >= 0.0);
    }

    #[test]
    fn knee_torque_equals_second_row(st in joint_state()) {
        let p = gait_core::params::SegmentParams::anthro1();
        let row2 = inverse_dynamics(&p, &st).v2;
        prop_assert!((swing_knee_torque(&p, &st) - row2).abs() < 1e-10);
    }

    #[test]
    fn sine_rule_solution_annihilates_residual(
        theta2 in -3.0..3.0f64,
        l1 in 0.1..1.0f64,
        l2 in 0.1..1.0f64,
    ) {
        let links = LinkPair::new(l1, l2);
        let theta1 = solve_theta1(theta2, &links).unwrap();
        prop_assert!(sine_rule_residual(theta1, theta2, &links).abs() < 1e-12);
        // The solution always lies between zero and the input angle.
        prop_assert!(theta1.abs() <= theta2.abs() + 1e-12);
        prop_assert!(theta1 * theta2 >= 0.0);
    }

    #[test]
    fn geometric_chord_bounded_by_diameter(l in 0.01..2.0f64, angle in -PI..PI) {
        let chord = chord_length(l, angle, Mode::GeometricOracle);
        prop_assert!(chord >= 0.0);
        prop_assert!(chord <= 2.0 * l + 1e-12);
        // Small-angle limit: chord ~ l * |angle|.
        if angle.abs() < 1e-3 {
            prop_assert!((chord - l * angle.abs()).abs() < 1e-6);
        }
    }

    #[test]
    fn heron_area_nonnegative_and_bounded(
        l1 in 0.1..3.0f64,
        l2 in 0.1..3.0f64,
        angle in -PI..PI,
    ) {
        let area = heron_area(l1, l2, angle).unwrap();
        prop_assert!(area >= 0.0);
        // Half-product bound: area <= l1 l2 / 2.
        prop_assert!(area <= 0.5 * l1 * l2 + 1e-12);
    }

    #[test]
    fn rotation_integral_additive(
        split in 0.1..0.9f64,
        amp in 0.1..3.0f64,
        freq in 0.5..4.0f64,
    ) {
        let samples: Vec<(f64, f64)> = (0..=1000)
            .map(|i| {
                let t = i as f64 * 1e-3;
                (t, amp * (freq * t).sin())
            })
            .collect();
        let sig = RateSignal::new(samples, SegmentLabel::Thigh);
        let whole = integrate_rotation(&sig, 0.0, 1.0).unwrap();
        let left = integrate_rotation(&sig, 0.0, split).unwrap();
        let right = integrate_rotation(&sig, split, 1.0).unwrap();
        prop_assert!((whole - (left + right)).abs() < 1e-12);
    }
}
