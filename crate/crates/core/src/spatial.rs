//! Stride length, stride velocity, swing/stance distances and sagittal
//! areas from segment angular-rate signals integrated over gait events.
//!
//! Two evaluation modes are first-class. `PaperFormula` transcribes the
//! printed chord/distance equations (including their unconventional cosine
//! chord and sign); `GeometricOracle` computes exact planar double-pendulum
//! kinematics for the same quantities. Neither mode silently "corrects" the
//! other.

use thiserror::Error;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Which body segment a rate signal belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentLabel {
    Thigh,
    Shank,
}

/// Timestamped angular-rate signal of one segment.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSignal {
    /// (t \[s\], rate \[rad/s\]) with strictly increasing timestamps.
    pub samples: Vec<(f64, f64)>,
    pub label: SegmentLabel,
}

impl RateSignal {
    pub fn new(samples: Vec<(f64, f64)>, label: SegmentLabel) -> Self {
        Self { samples, label }
    }

    fn span(&self) -> Option<(f64, f64)> {
        match (self.samples.first(), self.samples.last()) {
            (Some(&(t0, _)), Some(&(t1, _))) => Some((t0, t1)),
            _ => None,
        }
    }
}

/// One gait cycle: toe-off, heel-strike, end of cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaitCycle {
    pub to_time: f64,
    pub hs_time: f64,
    pub cycle_end: f64,
}

/// Ordered, non-overlapping gait cycles.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GaitEvents {
    pub cycles: Vec<GaitCycle>,
}

impl GaitEvents {
    /// Validates per-cycle ordering and cycle disjointness.
    pub fn validate(&self) -> Result<(), SpatialError> {
        for (i, c) in self.cycles.iter().enumerate() {
            if !(c.to_time < c.hs_time && c.hs_time < c.cycle_end) {
                return Err(SpatialError::EventOrder { cycle: i });
            }
            if i > 0 && c.to_time < self.cycles[i - 1].cycle_end {
                return Err(SpatialError::EventOverlap { cycle: i });
            }
        }
        Ok(())
    }
}

/// Triangle solution of one phase: the two solved side lengths, the two
/// derived angles and the chord.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleSolution {
    pub x1: f64,
    pub x2: f64,
    pub gamma: f64,
    pub phi: f64,
    pub d: f64,
}

/// Evaluation mode of the spatial formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// The printed equations, as printed.
    PaperFormula,
    /// Exact planar double-pendulum kinematics.
    GeometricOracle,
}

/// Configuration of the spatial pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialConfig {
    pub mode: Mode,
    /// Height parameter of the area formulas \[m\]; defaults to l1 + l2.
    pub h_l: f64,
    /// Thigh length \[m\].
    pub l1: f64,
    /// Shank length \[m\].
    pub l2: f64,
}

impl SpatialConfig {
    /// Config with the height parameter defaulted to standing hip height
    /// l1 + l2 (a documented guess; the model leaves h_L undefined).
    pub fn with_default_height(mode: Mode, l1: f64, l2: f64) -> Self {
        Self {
            mode,
            h_l: l1 + l2,
            l1,
            l2,
        }
    }
}

/// Per-cycle spatial gait metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialMetrics {
    pub stride_length: f64,
    pub stride_velocity: f64,
    pub a_swing: f64,
    pub a_stance: f64,
    pub area_swing: f64,
    pub area_stance: f64,
    /// Swing-phase thigh rotation magnitude \[rad\].
    pub alpha: f64,
    /// Swing-phase shank rotation magnitude \[rad\].
    pub beta: f64,
}

/// Closed-form and quadrature evaluations of an area formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwingAreaResult {
    /// Closed form h_L a1 - A_triangle.
    pub closed_form: f64,
    /// Piecewise-integral value by adaptive quadrature.
    pub quadrature: f64,
}

/// Inputs of the swing-area integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwingAreaInputs {
    pub gamma: f64,
    /// The combined angle beta + phi of the second integration bound.
    pub beta_plus_phi: f64,
    /// Area of the included isosceles triangle.
    pub triangle_area: f64,
}

/// Inputs of the stance-area integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StanceAreaInputs {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub phi: f64,
    /// Lower integration bound (the first swing sub-distance).
    pub a1: f64,
    /// Area of the included isosceles triangle.
    pub triangle_area: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum SpatialError {
    #[error("spatial: integration window [{t0}, {t1}] outside signal span [{lo}, {hi}]")]
    WindowOutOfRange {
        t0: f64,
        t1: f64,
        lo: f64,
        hi: f64,
    },
    #[error("spatial: empty integration window [{t0}, {t1}]")]
    EmptyWindow { t0: f64, t1: f64 },
    #[error("spatial: empty rate signal")]
    EmptySignal,
    #[error("spatial: degenerate triangle (sin alpha = 0 or angle outside (0, pi))")]
    DegenerateTriangle,
    #[error("spatial: negative radicand {value} in printed distance formula")]
    NegativeRadicand { value: f64 },
    #[error("spatial: triangle inequality violated for sides ({l1}, {l2}, {c})")]
    TriangleInequality { l1: f64, l2: f64, c: f64 },
    #[error("spatial: quadrature bounds inverted ({lo} > {hi})")]
    QuadratureBounds { lo: f64, hi: f64 },
    #[error("spatial: events out of order in cycle {cycle}")]
    EventOrder { cycle: usize },
    #[error("spatial: cycle {cycle} overlaps the previous cycle")]
    EventOverlap { cycle: usize },
    #[error("spatial: cycle {cycle}: {source}")]
    Cycle {
        cycle: usize,
        source: Box<SpatialError>,
    },
}

/// Trapezoidal integral of the rate over [t0, t1], with linear interpolation
/// at window endpoints that fall between samples.
pub fn integrate_rotation(sig: &RateSignal, t0: f64, t1: f64) -> Result<f64, SpatialError> {
    if t0 >= t1 {
        return Err(SpatialError::EmptyWindow { t0, t1 });
    }
    let (lo, hi) = sig.span().ok_or(SpatialError::EmptySignal)?;
    if t0 < lo || t1 > hi {
        return Err(SpatialError::WindowOutOfRange { t0, t1, lo, hi });
    }
    let samples = &sig.samples;
    let value_at = |t: f64| -> f64 {
        // Binary search for the bracketing segment; t is within span.
        let idx = samples.partition_point(|&(ts, _)| ts < t);
        if idx == 0 {
            return samples[0].1;
        }
        if idx == samples.len() {
            return samples[samples.len() - 1].1;
        }
        let (ta, va) = samples[idx - 1];
        let (tb, vb) = samples[idx];
        if tb == ta {
            va
        } else {
            va + (vb - va) * (t - ta) / (tb - ta)
        }
    };

    let mut total = 0.0;
    let mut prev_t = t0;
    let mut prev_v = value_at(t0);
    let start = samples.partition_point(|&(ts, _)| ts <= t0);
    for &(ts, vs) in &samples[start..] {
        if ts >= t1 {
            break;
        }
        total += 0.5 * (prev_v + vs) * (ts - prev_t);
        prev_t = ts;
        prev_v = vs;
    }
    let end_v = value_at(t1);
    total += 0.5 * (prev_v + end_v) * (t1 - prev_t);
    Ok(total)
}

/// Chord of a segment of length `l` rotated by `angle`.
///
/// `PaperFormula` evaluates the printed 2 l cos(angle/2); `GeometricOracle`
/// the exact endpoint chord 2 l sin(angle/2).
pub fn chord_length(l: f64, angle: f64, mode: Mode) -> f64 {
    match mode {
        Mode::PaperFormula => (2.0 * l * (angle / 2.0).cos()).abs(),
        Mode::GeometricOracle => (2.0 * l * (angle / 2.0).sin()).abs(),
    }
}

fn check_triangle_angles(gamma: f64, phi: f64) -> Result<(), SpatialError> {
    if gamma <= 0.0
        || gamma >= std::f64::consts::PI
        || phi <= 0.0
        || phi >= std::f64::consts::PI
    {
        return Err(SpatialError::DegenerateTriangle);
    }
    Ok(())
}

/// Swing-phase triangle: phi = (pi - beta)/2, gamma = (pi - 2 alpha + beta)/2,
/// sides by the sine rule against the chord `d`.
pub fn solve_swing_triangle(d: f64, alpha: f64, beta: f64) -> Result<TriangleSolution, SpatialError> {
    let sin_alpha = alpha.sin();
    if sin_alpha == 0.0 {
        return Err(SpatialError::DegenerateTriangle);
    }
    let phi = (std::f64::consts::PI - beta) / 2.0;
    let gamma = (std::f64::consts::PI - 2.0 * alpha + beta) / 2.0;
    check_triangle_angles(gamma, phi)?;
    Ok(TriangleSolution {
        x1: d * gamma.sin() / sin_alpha,
        x2: d * phi.sin() / sin_alpha,
        gamma,
        phi,
        d,
    })
}

/// Stance-phase triangle: phi = (pi - alpha)/2, gamma = (pi - 2 beta + alpha)/2.
pub fn solve_stance_triangle(
    d: f64,
    alpha: f64,
    beta: f64,
) -> Result<TriangleSolution, SpatialError> {
    let sin_alpha = alpha.sin();
    if sin_alpha == 0.0 {
        return Err(SpatialError::DegenerateTriangle);
    }
    let phi = (std::f64::consts::PI - alpha) / 2.0;
    let gamma = (std::f64::consts::PI - 2.0 * beta + alpha) / 2.0;
    check_triangle_angles(gamma, phi)?;
    Ok(TriangleSolution {
        x1: d * gamma.sin() / sin_alpha,
        x2: d * phi.sin() / sin_alpha,
        gamma,
        phi,
        d,
    })
}

fn printed_distance(r1: f64, r2: f64, angle: f64) -> Result<f64, SpatialError> {
    // The printed form adds the cross term where the law of cosines would
    // subtract twice; kept verbatim.
    let radicand = r1 * r1 + r2 * r2 + r1 * r2 * angle.cos();
    if radicand < 0.0 {
        return Err(SpatialError::NegativeRadicand { value: radicand });
    }
    Ok(radicand.sqrt())
}

fn geometric_displacement(r1: f64, r2: f64, angle: f64) -> f64 {
    // Euclidean distance between points at radii r1 and r2 separated by
    // `angle` about a common pivot.
    (r1 * r1 + r2 * r2 - 2.0 * r1 * r2 * angle.cos()).sqrt()
}

/// Swing-phase distance from the solved side lengths.
///
/// `PaperFormula`: the printed radical over the L-terms (l2 + x1, l2 + x2)
/// and cos alpha. `GeometricOracle`: the planar displacement of the ankle
/// point between the two poses.
pub fn swing_distance(
    x1: f64,
    x2: f64,
    alpha: f64,
    cfg: &SpatialConfig,
) -> Result<f64, SpatialError> {
    let r1 = cfg.l2 + x1;
    let r2 = cfg.l2 + x2;
    match cfg.mode {
        Mode::PaperFormula => printed_distance(r1, r2, alpha),
        Mode::GeometricOracle => Ok(geometric_displacement(r1, r2, alpha)),
    }
}

/// Stance-phase distance; mirrors [`swing_distance`] with the l1-based
/// L-terms and cos beta.
pub fn stance_distance(
    x1: f64,
    x2: f64,
    beta: f64,
    cfg: &SpatialConfig,
) -> Result<f64, SpatialError> {
    let r1 = cfg.l1 + x1;
    let r2 = cfg.l1 + x2;
    match cfg.mode {
        Mode::PaperFormula => printed_distance(r2, r1, beta),
        Mode::GeometricOracle => Ok(geometric_displacement(r1, r2, beta)),
    }
}

/// Heron area of the triangle with sides l1, l2 and the printed third side
/// c = sqrt(l1^2 + l2^2 - l1 l2 cos(included_angle)).
pub fn heron_area(l1: f64, l2: f64, included_angle: f64) -> Result<f64, SpatialError> {
    let c = (l1 * l1 + l2 * l2 - l1 * l2 * included_angle.cos()).sqrt();
    if c > l1 + l2 || l1 > l2 + c || l2 > l1 + c {
        return Err(SpatialError::TriangleInequality { l1, l2, c });
    }
    let s = 0.5 * (l1 + l2 + c);
    Ok((s * (s - l1) * (s - l2) * (s - c)).max(0.0).sqrt())
}

/// Adaptive trapezoidal quadrature: interval count doubles until successive
/// estimates differ by less than `tol`, capped at 2^20 intervals.
pub fn adaptive_trapezoid<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let mut n: u64 = 1;
    let mut estimate = 0.5 * (b - a) * (f(a) + f(b));
    while n < (1 << 20) {
        n *= 2;
        let h = (b - a) / n as f64;
        // Refine by adding the new midpoints only.
        let mut new_sum = 0.0;
        let mut i = 1;
        while i < n {
            new_sum += f(a + i as f64 * h);
            i += 2;
        }
        let refined = 0.5 * estimate + h * new_sum;
        if (refined - estimate).abs() < tol {
            return refined;
        }
        estimate = refined;
    }
    estimate
}

const AREA_QUAD_TOL: f64 = 1e-8;

/// Swing area: closed form h_L a1 - A_triangle, alongside the printed
/// piecewise integral evaluated by adaptive quadrature.
pub fn swing_area(
    cfg: &SpatialConfig,
    a1: f64,
    inputs: &SwingAreaInputs,
) -> Result<SwingAreaResult, SpatialError> {
    let closed_form = cfg.h_l * a1 - inputs.triangle_area;

    let mid = cfg.l2 * inputs.gamma.cos();
    let upper = cfg.l1 * inputs.beta_plus_phi;
    if mid < 0.0 {
        return Err(SpatialError::QuadratureBounds { lo: 0.0, hi: mid });
    }
    if upper < mid {
        return Err(SpatialError::QuadratureBounds { lo: mid, hi: upper });
    }
    let tan_gamma = inputs.gamma.tan();
    let first = adaptive_trapezoid(|x| tan_gamma * x, 0.0, mid, AREA_QUAD_TOL);

    let rise = cfg.l2 * inputs.gamma.sin();
    let slope = (rise + cfg.l1 * inputs.beta_plus_phi.cos())
        / (mid - cfg.l1 * inputs.beta_plus_phi.sin());
    let second = adaptive_trapezoid(|x| slope * (x - mid) + rise, mid, upper, AREA_QUAD_TOL);

    Ok(SwingAreaResult {
        closed_form,
        quadrature: first + second,
    })
}

/// Stance area: the printed integral plus 1/2 a1 h_L - A_triangle.
///
/// The integration bounds are treated as oriented (an inverted pair
/// contributes with negative sign) so that per-cycle evaluation stays total
/// for configurations where the printed bounds cross.
pub fn stance_area(cfg: &SpatialConfig, inputs: &StanceAreaInputs) -> Result<f64, SpatialError> {
    let lower = inputs.a1;
    let upper = (inputs.beta / 2.0).sin() * (cfg.l1 + cfg.l2);
    let denom = cfg.l1 * (inputs.beta + inputs.phi).cos()
        - (inputs.alpha / 2.0).sin() * (cfg.l1 + cfg.l2);
    let k = cfg.l1 * (inputs.beta + inputs.gamma).sin() / denom;
    let offset = -cfg.l1 * (inputs.beta + inputs.phi).cos() + cfg.l1 * (inputs.beta + inputs.gamma).sin();
    let integrand = |x: f64| k * (x + offset);
    let integral = if upper >= lower {
        adaptive_trapezoid(integrand, lower, upper, AREA_QUAD_TOL)
    } else {
        -adaptive_trapezoid(integrand, upper, lower, AREA_QUAD_TOL)
    };
    Ok(integral + 0.5 * inputs.a1 * cfg.h_l - inputs.triangle_area)
}

/// Per-cycle spatial metrics from the two rate signals and the gait events.
///
/// Swing rotations come from integrating the shank rate (beta) and thigh
/// rate (alpha) over [TO, HS]; stance rotations swap the segments over
/// [HS, cycle end], following the printed integral limits. Rotation
/// magnitudes feed the chord/triangle/distance chain. Cycles are processed
/// in parallel when the `parallel` feature is enabled; output order follows
/// the cycle index, and each failure is tagged with its cycle.
pub fn stride_metrics(
    thigh: &RateSignal,
    shank: &RateSignal,
    events: &GaitEvents,
    cfg: &SpatialConfig,
) -> Result<Vec<Result<SpatialMetrics, SpatialError>>, SpatialError> {
    events.validate()?;
    let one = |(index, cycle): (usize, &GaitCycle)| -> Result<SpatialMetrics, SpatialError> {
        cycle_metrics(thigh, shank, cycle, cfg).map_err(|e| SpatialError::Cycle {
            cycle: index,
            source: Box::new(e),
        })
    };
    #[cfg(feature = "parallel")]
    {
        Ok(events.cycles.par_iter().enumerate().map(one).collect())
    }
    #[cfg(not(feature = "parallel"))]
    {
        Ok(events.cycles.iter().enumerate().map(one).collect())
    }
}

fn cycle_metrics(
    thigh: &RateSignal,
    shank: &RateSignal,
    cycle: &GaitCycle,
    cfg: &SpatialConfig,
) -> Result<SpatialMetrics, SpatialError> {
    // Swing window rotations (thigh -> alpha, shank -> beta), magnitudes.
    let alpha_sw = integrate_rotation(thigh, cycle.to_time, cycle.hs_time)?.abs();
    let beta_sw = integrate_rotation(shank, cycle.to_time, cycle.hs_time)?.abs();
    // Stance window rotations with the printed segment swap.
    let beta_st = integrate_rotation(thigh, cycle.hs_time, cycle.cycle_end)?.abs();
    let alpha_st = integrate_rotation(shank, cycle.hs_time, cycle.cycle_end)?.abs();

    let a_swing = match cfg.mode {
        Mode::PaperFormula => {
            let d = chord_length(cfg.l1, beta_sw, cfg.mode);
            let tri = solve_swing_triangle(d, alpha_sw, beta_sw)?;
            swing_distance(tri.x1, tri.x2, alpha_sw, cfg)?
        }
        Mode::GeometricOracle => {
            chord_length(cfg.l1, alpha_sw, cfg.mode) + chord_length(cfg.l2, beta_sw, cfg.mode)
        }
    };
    let a_stance = match cfg.mode {
        Mode::PaperFormula => {
            let d = chord_length(cfg.l2, alpha_st, cfg.mode);
            let tri = solve_stance_triangle(d, alpha_st, beta_st)?;
            stance_distance(tri.x1, tri.x2, beta_st, cfg)?
        }
        Mode::GeometricOracle => {
            chord_length(cfg.l2, alpha_st, cfg.mode) + chord_length(cfg.l1, beta_st, cfg.mode)
        }
    };

    // Areas are mode-independent functions of the rotations and lengths.
    // a1 is read as the thigh's geometric swing contribution.
    let a1_area = 2.0 * cfg.l1 * (alpha_sw / 2.0).sin();
    let triangle_area = heron_area(cfg.l1, cfg.l2, 2.0 * alpha_sw - beta_sw)?;
    let d_area = chord_length(cfg.l1, beta_sw, Mode::GeometricOracle);
    let swing_tri = solve_swing_triangle(d_area.max(f64::MIN_POSITIVE), alpha_sw, beta_sw)?;
    let area_swing = swing_area(
        cfg,
        a1_area,
        &SwingAreaInputs {
            gamma: swing_tri.gamma,
            beta_plus_phi: beta_sw + swing_tri.phi,
            triangle_area,
        },
    )?
    .closed_form;
    let stance_tri = solve_stance_triangle(
        chord_length(cfg.l2, alpha_st, Mode::GeometricOracle).max(f64::MIN_POSITIVE),
        alpha_st,
        beta_st,
    )?;
    let area_stance = stance_area(
        cfg,
        &StanceAreaInputs {
            alpha: alpha_st,
            beta: beta_st,
            gamma: stance_tri.gamma,
            phi: stance_tri.phi,
            a1: a1_area,
            triangle_area,
        },
    )?;

    let stride_length = a_swing + a_stance;
    let duration = cycle.cycle_end - cycle.to_time;
    Ok(SpatialMetrics {
        stride_length,
        stride_velocity: stride_length / duration,
        a_swing,
        a_stance,
        area_swing,
        area_stance,
        alpha: alpha_sw,
        beta: beta_sw,
    })
}
