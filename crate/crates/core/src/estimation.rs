//! Sine-rule elimination of one joint angle given the other, and the
//! anthropometric-coefficient knee torque.
//!
//! The elimination solves sin(theta2 - theta1)/l1 = sin(theta1)/l2 for
//! theta1 in closed form; the relation involves no vertical length, so the
//! estimate cannot depend on one by construction.

use crate::params::JointState;
use thiserror::Error;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// The two link lengths of the elimination triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkPair {
    pub l1: f64,
    pub l2: f64,
}

impl LinkPair {
    pub fn new(l1: f64, l2: f64) -> Self {
        Self { l1, l2 }
    }
}

/// Numeric coefficients of the anthropometric knee-torque equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnthroCoefficients {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

impl AnthroCoefficients {
    /// The printed coefficient values.
    pub fn printed() -> Self {
        let (c1, c2, c3, c4) = crate::params::ANTHRO_COEFFS;
        Self { c1, c2, c3, c4 }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum EstimationError {
    #[error("estimation: degenerate configuration, atan2(0, 0) at theta2 = {theta2}")]
    Degenerate { theta2: f64 },
    #[error("estimation: degenerate configuration at t = {t}: {source}")]
    DegenerateAt {
        t: f64,
        source: Box<EstimationError>,
    },
    #[error("estimation: timestamps must be strictly increasing (violated at t = {t})")]
    NonMonotoneTime { t: f64 },
}

/// Principal solution of the sine-rule relation:
/// theta1 = atan2(l2 sin theta2, l1 + l2 cos theta2).
pub fn solve_theta1(theta2: f64, links: &LinkPair) -> Result<f64, EstimationError> {
    let y = links.l2 * theta2.sin();
    let x = links.l1 + links.l2 * theta2.cos();
    if y == 0.0 && x == 0.0 {
        return Err(EstimationError::Degenerate { theta2 });
    }
    Ok(y.atan2(x))
}

/// Residual of the sine-rule relation for a candidate theta1; zero at a
/// solution.
pub fn sine_rule_residual(theta1: f64, theta2: f64, links: &LinkPair) -> f64 {
    links.l2 * (theta2 - theta1).sin() - links.l1 * theta1.sin()
}

/// Per-sample application of [`solve_theta1`] over a timestamped series.
///
/// Runs data-parallel when the `parallel` feature is enabled; the output
/// order always matches the input order.
pub fn estimate_series(
    theta2_series: &[(f64, f64)],
    links: &LinkPair,
) -> Result<Vec<(f64, f64)>, EstimationError> {
    for pair in theta2_series.windows(2) {
        if pair[1].0 <= pair[0].0 {
            return Err(EstimationError::NonMonotoneTime { t: pair[1].0 });
        }
    }
    let solve = |&(t, theta2): &(f64, f64)| {
        solve_theta1(theta2, links)
            .map(|theta1| (t, theta1))
            .map_err(|e| EstimationError::DegenerateAt {
                t,
                source: Box::new(e),
            })
    };
    #[cfg(feature = "parallel")]
    {
        theta2_series.par_iter().map(solve).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        theta2_series.iter().map(solve).collect()
    }
}

/// Knee torque from the anthropometric coefficients, with hip mapped to the
/// thigh coordinate and knee to the shank coordinate.
pub fn knee_torque_anthro(coeffs: &AnthroCoefficients, st: &JointState) -> f64 {
    let sum = st.theta_t + st.theta_s;
    coeffs.c1 * st.ddtheta_s - coeffs.c2 * st.ddtheta_t * sum.cos()
        + coeffs.c2 * st.dtheta_t * st.dtheta_t * sum.sin()
        + coeffs.c3 * st.ddtheta_s
        + coeffs.c4 * st.theta_s.sin()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::swing_knee_torque;
    use crate::params::SegmentParams;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    /// Independent oracle: bisection on the sine-rule residual.
    fn bisect_theta1(theta2: f64, links: &LinkPair) -> f64 {
        // The closed-form solution lies strictly between 0 and theta2 for
        // theta2 in (-pi, pi) \ {0}; bracket accordingly.
        let (mut lo, mut hi) = if theta2 >= 0.0 {
            (0.0, theta2)
        } else {
            (theta2, 0.0)
        };
        let f = |t: f64| sine_rule_residual(t, theta2, links);
        assert!(f(lo) * f(hi) <= 0.0, "residual does not bracket a root");
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn zero_maps_to_zero() {
        let links = LinkPair::new(0.5, 0.4);
        assert_eq!(solve_theta1(0.0, &links).unwrap(), 0.0);
    }

    #[test]
    fn equal_links_halve_the_angle() {
        let links = LinkPair::new(0.7, 0.7);
        let theta2 = 60f64.to_radians();
        assert_relative_eq!(
            solve_theta1(theta2, &links).unwrap(),
            30f64.to_radians(),
            max_relative = 1e-14
        );
        for i in -31..=31 {
            let theta2 = i as f64 * 0.1;
            assert_abs_diff_eq!(
                solve_theta1(theta2, &links).unwrap(),
                theta2 / 2.0,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn residual_vanishes_at_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        for _ in 0..1000 {
            let links = LinkPair::new(rng.gen_range(0.1..1.0), rng.gen_range(0.1..1.0));
            let theta2 = rng.gen_range(-PI..PI);
            let theta1 = solve_theta1(theta2, &links).unwrap();
            assert_abs_diff_eq!(sine_rule_residual(theta1, theta2, &links), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn bisection_oracle_agrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let links = LinkPair::new(rng.gen_range(0.1..1.0), rng.gen_range(0.1..1.0));
            let theta2 = rng.gen_range(-3.0..3.0);
            let closed = solve_theta1(theta2, &links).unwrap();
            let oracle = bisect_theta1(theta2, &links);
            assert_abs_diff_eq!(closed, oracle, epsilon = 1e-10);
        }
    }

    #[test]
    fn near_degenerate_configuration_stays_finite() {
        // With equal links at theta2 = pi the numerator rounds to a tiny
        // nonzero value while the denominator is exactly zero; atan2 still
        // yields a finite angle. The exact atan2(0, 0) guard is
        // unreachable through f64 trigonometry and exists as a safety net.
        let links = LinkPair::new(0.5, 0.5);
        let out = solve_theta1(PI, &links).unwrap();
        assert!(out.is_finite());
        assert_abs_diff_eq!(out, PI / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn series_is_elementwise_and_stateless() {
        let links = LinkPair::new(0.6, 0.6);
        assert_eq!(estimate_series(&[], &links).unwrap(), vec![]);

        let constant: Vec<_> = (0..10).map(|i| (i as f64 * 0.01, 0.4)).collect();
        let out = estimate_series(&constant, &links).unwrap();
        assert!(out.iter().all(|&(_, th)| th == out[0].1));

        // Sinusoidal series, equal links: theta1 = theta2 / 2 per sample.
        let series: Vec<_> = (0..200)
            .map(|i| {
                let t = i as f64 * 0.005;
                (t, 0.6 * (2.0 * PI * t).sin())
            })
            .collect();
        let out = estimate_series(&series, &links).unwrap();
        for (&(t, theta2), &(t_out, theta1)) in series.iter().zip(&out) {
            assert_eq!(t, t_out);
            assert_abs_diff_eq!(theta1, theta2 / 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn series_rejects_non_monotone_time() {
        let links = LinkPair::new(0.6, 0.6);
        let series = [(0.0, 0.1), (0.0, 0.2)];
        assert_eq!(
            estimate_series(&series, &links).unwrap_err(),
            EstimationError::NonMonotoneTime { t: 0.0 }
        );
    }

    #[test]
    fn anthro_torque_static_values() {
        let coeffs = AnthroCoefficients::printed();
        assert_eq!(knee_torque_anthro(&coeffs, &JointState::default()), 0.0);
        let st = JointState::static_pose(0.0, PI / 6.0);
        assert_relative_eq!(knee_torque_anthro(&coeffs, &st), 2.28584, max_relative = 1e-12);
    }

    #[test]
    fn anthro_torque_matches_lagrangian_form() {
        let coeffs = AnthroCoefficients::printed();
        let p = SegmentParams::anthro1();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..1000 {
            let st = JointState {
                theta_t: rng.gen_range(-PI..PI),
                theta_s: rng.gen_range(-PI..PI),
                dtheta_t: rng.gen_range(-10.0..10.0),
                dtheta_s: rng.gen_range(-10.0..10.0),
                ddtheta_t: rng.gen_range(-50.0..50.0),
                ddtheta_s: rng.gen_range(-50.0..50.0),
            };
            assert_abs_diff_eq!(
                knee_torque_anthro(&coeffs, &st),
                swing_knee_torque(&p, &st),
                epsilon = 1e-3
            );
        }
    }
}
