//! Ingestion, numerical differentiation, gait-event handling and synthetic
//! gait generation.
//!
//! CSV schemas are comma-separated, `.` decimal, UTF-8, header mandatory,
//! no quoting. All file access lives with the caller; everything here
//! operates on in-memory text and values.

use crate::params::JointState;
use crate::spatial::{GaitCycle, GaitEvents, RateSignal, SegmentLabel};
use std::f64::consts::PI;
use thiserror::Error;

/// Provenance of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectorySource {
    Measured,
    Synthetic,
}

/// Time-indexed joint states.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub rows: Vec<(f64, JointState)>,
    pub source: TrajectorySource,
}

/// Specification of the synthetic gait generator.
///
/// Swing occupies the leading `swing_fraction` of each cycle (default 0.40);
/// segment angles follow half-cosine ramps so the rates are zero at the
/// phase boundaries and the per-phase rotations equal the amplitudes
/// exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthGaitSpec {
    pub cycle_duration: f64,
    pub n_cycles: usize,
    /// Thigh rotation per phase \[rad\].
    pub hip_amplitude: f64,
    /// Shank rotation per phase \[rad\].
    pub knee_amplitude: f64,
    pub swing_fraction: f64,
    pub sample_rate: f64,
    /// Constant baseline offset added to both angle profiles \[rad\].
    pub phase_offset: f64,
}

impl Default for SynthGaitSpec {
    fn default() -> Self {
        Self {
            cycle_duration: 1.0,
            n_cycles: 10,
            hip_amplitude: 0.6,
            knee_amplitude: 0.35,
            swing_fraction: 0.40,
            sample_rate: 1000.0,
            phase_offset: 0.0,
        }
    }
}

/// Output bundle of [`synth_gait`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthGait {
    pub trajectory: Trajectory,
    pub thigh_rate: RateSignal,
    pub shank_rate: RateSignal,
    pub events: GaitEvents,
}

#[derive(Debug, Error, PartialEq)]
pub enum SignalError {
    #[error("signal: line {line}: malformed row: {detail}")]
    MalformedRow { line: usize, detail: String },
    #[error("signal: line {line}: non-monotone time {t}")]
    NonMonotoneTime { line: usize, t: f64 },
    #[error("signal: missing required column `{column}`")]
    MissingColumn { column: String },
    #[error("signal: unexpected columns {columns:?}")]
    UnexpectedColumns { columns: Vec<String> },
    #[error("signal: empty data section")]
    Empty,
    #[error("signal: need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("signal: invalid generator spec: {detail}")]
    InvalidSpec { detail: String },
}

fn read_rows(text: &str, header: &[&str]) -> Result<Vec<Vec<f64>>, SignalError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let found: Vec<String> = reader
        .headers()
        .map_err(|e| SignalError::MalformedRow {
            line: 1,
            detail: e.to_string(),
        })?
        .iter()
        .map(|s| s.to_string())
        .collect();
    for col in header {
        if !found.iter().any(|f| f == col) {
            return Err(SignalError::MissingColumn {
                column: col.to_string(),
            });
        }
    }
    let extras: Vec<String> = found
        .iter()
        .filter(|f| !header.contains(&f.as_str()))
        .cloned()
        .collect();
    if !extras.is_empty() {
        return Err(SignalError::UnexpectedColumns { columns: extras });
    }
    // Column order in the file may differ from the requested order.
    let index: Vec<usize> = header
        .iter()
        .map(|col| found.iter().position(|f| f == col).unwrap())
        .collect();

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| SignalError::MalformedRow {
            line,
            detail: e.to_string(),
        })?;
        if record.len() != found.len() {
            return Err(SignalError::MalformedRow {
                line,
                detail: format!("expected {} fields, got {}", found.len(), record.len()),
            });
        }
        let mut row = Vec::with_capacity(header.len());
        for &col in &index {
            let field = &record[col];
            let value: f64 = field.parse().map_err(|_| SignalError::MalformedRow {
                line,
                detail: format!("not a number: `{field}`"),
            })?;
            if !value.is_finite() {
                return Err(SignalError::MalformedRow {
                    line,
                    detail: format!("non-finite value `{field}`"),
                });
            }
            row.push(value);
        }
        rows.push(row);
    }
    Ok(rows)
}

fn check_monotone(rows: &[Vec<f64>]) -> Result<(), SignalError> {
    for (i, pair) in rows.windows(2).enumerate() {
        if pair[1][0] <= pair[0][0] {
            return Err(SignalError::NonMonotoneTime {
                line: i + 3,
                t: pair[1][0],
            });
        }
    }
    Ok(())
}

/// Parses a trajectory CSV. Required columns `t,theta_t,theta_s`; when the
/// four derivative columns are present they are taken verbatim, otherwise
/// derivatives are filled by [`central_difference`] (needs at least 3 rows).
pub fn parse_trajectory_csv(text: &str) -> Result<Trajectory, SignalError> {
    const FULL: [&str; 7] = [
        "t",
        "theta_t",
        "theta_s",
        "dtheta_t",
        "dtheta_s",
        "ddtheta_t",
        "ddtheta_s",
    ];
    let with_derivatives = text
        .lines()
        .next()
        .map(|h| h.contains("dtheta_t"))
        .unwrap_or(false);
    let rows = if with_derivatives {
        read_rows(text, &FULL)?
    } else {
        read_rows(text, &FULL[..3].iter().copied().collect::<Vec<_>>())?
    };
    if rows.is_empty() {
        return Err(SignalError::Empty);
    }
    check_monotone(&rows)?;

    if with_derivatives {
        let rows = rows
            .into_iter()
            .map(|r| {
                (
                    r[0],
                    JointState {
                        theta_t: r[1],
                        theta_s: r[2],
                        dtheta_t: r[3],
                        dtheta_s: r[4],
                        ddtheta_t: r[5],
                        ddtheta_s: r[6],
                    },
                )
            })
            .collect();
        return Ok(Trajectory {
            rows,
            source: TrajectorySource::Measured,
        });
    }

    let t_series: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let theta_t: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
    let theta_s: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[2])).collect();
    let dtheta_t = central_difference(&theta_t)?;
    let dtheta_s = central_difference(&theta_s)?;
    let ddtheta_t = central_difference(&dtheta_t)?;
    let ddtheta_s = central_difference(&dtheta_s)?;
    let rows = t_series
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            (
                t,
                JointState {
                    theta_t: theta_t[i].1,
                    theta_s: theta_s[i].1,
                    dtheta_t: dtheta_t[i].1,
                    dtheta_s: dtheta_s[i].1,
                    ddtheta_t: ddtheta_t[i].1,
                    ddtheta_s: ddtheta_s[i].1,
                },
            )
        })
        .collect();
    Ok(Trajectory {
        rows,
        source: TrajectorySource::Measured,
    })
}

/// Parses a rate CSV with header `t,rate_thigh,rate_shank` into the two
/// aligned rate signals.
pub fn parse_rate_csv(text: &str) -> Result<(RateSignal, RateSignal), SignalError> {
    let rows = read_rows(text, &["t", "rate_thigh", "rate_shank"])?;
    if rows.is_empty() {
        return Err(SignalError::Empty);
    }
    check_monotone(&rows)?;
    let thigh = rows.iter().map(|r| (r[0], r[1])).collect();
    let shank = rows.iter().map(|r| (r[0], r[2])).collect();
    Ok((
        RateSignal::new(thigh, SegmentLabel::Thigh),
        RateSignal::new(shank, SegmentLabel::Shank),
    ))
}

/// Parses an events CSV with header `cycle,to_time,hs_time,cycle_end`,
/// validating ordering and disjointness.
pub fn parse_events_csv(text: &str) -> Result<GaitEvents, SignalError> {
    let rows = read_rows(text, &["cycle", "to_time", "hs_time", "cycle_end"])?;
    let events = GaitEvents {
        cycles: rows
            .iter()
            .map(|r| GaitCycle {
                to_time: r[1],
                hs_time: r[2],
                cycle_end: r[3],
            })
            .collect(),
    };
    events.validate().map_err(|e| SignalError::MalformedRow {
        line: 0,
        detail: e.to_string(),
    })?;
    Ok(events)
}

/// Second-order central difference of a timestamped series; first-order
/// one-sided at the endpoints. Needs at least 3 samples.
pub fn central_difference(series: &[(f64, f64)]) -> Result<Vec<(f64, f64)>, SignalError> {
    let n = series.len();
    if n < 3 {
        return Err(SignalError::TooFewSamples { needed: 3, got: n });
    }
    let mut out = Vec::with_capacity(n);
    out.push((
        series[0].0,
        (series[1].1 - series[0].1) / (series[1].0 - series[0].0),
    ));
    for i in 1..n - 1 {
        let (t_prev, v_prev) = series[i - 1];
        let (t_next, v_next) = series[i + 1];
        out.push((series[i].0, (v_next - v_prev) / (t_next - t_prev)));
    }
    out.push((
        series[n - 1].0,
        (series[n - 1].1 - series[n - 2].1) / (series[n - 1].0 - series[n - 2].0),
    ));
    Ok(out)
}

/// Heuristic gait-event detection from the thigh rate.
///
/// Toe-off is the onset of a positive excursion reaching `threshold`
/// (armed only after the rate has been at or below zero), heel-strike the
/// subsequent positive-to-negative zero crossing, cycle end the next
/// toe-off. Onsets closer than `min_gap` to the previous accepted toe-off
/// are ignored. Deterministic; an empty result is valid.
pub fn detect_events(thigh: &RateSignal, threshold: f64, min_gap: f64) -> GaitEvents {
    let samples = &thigh.samples;
    let mut toe_offs: Vec<f64> = Vec::new();
    let mut heel_strikes: Vec<f64> = Vec::new();
    let mut armed = true;
    let mut in_excursion = false;
    for &(t, rate) in samples {
        if in_excursion {
            if rate <= 0.0 {
                heel_strikes.push(t);
                in_excursion = false;
                armed = true;
            }
        } else if rate <= 0.0 {
            armed = true;
        } else if armed && rate >= threshold {
            let accept = toe_offs
                .last()
                .map(|&prev| t - prev >= min_gap)
                .unwrap_or(true);
            if accept {
                toe_offs.push(t);
                in_excursion = true;
            }
            armed = false;
        }
    }
    let mut cycles = Vec::new();
    for (i, (&to, &hs)) in toe_offs.iter().zip(&heel_strikes).enumerate() {
        if let Some(&next_to) = toe_offs.get(i + 1) {
            if to < hs && hs < next_to {
                cycles.push(GaitCycle {
                    to_time: to,
                    hs_time: hs,
                    cycle_end: next_to,
                });
            }
        }
    }
    GaitEvents { cycles }
}

/// Default detection threshold \[rad/s\].
pub const DETECT_THRESHOLD: f64 = 0.3;
/// Default minimum toe-off separation \[s\].
pub const DETECT_MIN_GAP: f64 = 0.4;

// Half-cosine ramp profile of one segment: rises by `amp` over the swing
// window, falls back over the stance window. Rates vanish at the phase
// boundaries, so the profile is C1 across cycles.
fn profile(amp: f64, swing_len: f64, stance_len: f64, phase_t: f64) -> (f64, f64, f64) {
    if phase_t < swing_len {
        let u = phase_t / swing_len;
        let omega = PI / swing_len;
        (
            -(amp / 2.0) * (PI * u).cos(),
            (amp / 2.0) * omega * (PI * u).sin(),
            (amp / 2.0) * omega * omega * (PI * u).cos(),
        )
    } else {
        let v = (phase_t - swing_len) / stance_len;
        let omega = PI / stance_len;
        (
            (amp / 2.0) * (PI * v).cos(),
            -(amp / 2.0) * omega * (PI * v).sin(),
            -(amp / 2.0) * omega * omega * (PI * v).cos(),
        )
    }
}

/// Generates a mutually consistent synthetic gait: trajectory, exact
/// analytic rate signals and the generator's own phase boundaries as
/// events. Per swing window the thigh rotates by exactly `hip_amplitude`
/// and the shank by `knee_amplitude`; stance reverses both.
pub fn synth_gait(spec: &SynthGaitSpec) -> Result<SynthGait, SignalError> {
    if !(spec.swing_fraction > 0.0 && spec.swing_fraction < 1.0) {
        return Err(SignalError::InvalidSpec {
            detail: format!("swing_fraction must be in (0, 1), got {}", spec.swing_fraction),
        });
    }
    if !(spec.cycle_duration > 0.0) || !(spec.sample_rate > 0.0) {
        return Err(SignalError::InvalidSpec {
            detail: "cycle_duration and sample_rate must be positive".to_string(),
        });
    }

    let period = spec.cycle_duration;
    let swing_len = spec.swing_fraction * period;
    let stance_len = period - swing_len;
    let duration = spec.n_cycles as f64 * period;

    let mut rows = Vec::new();
    let mut thigh = Vec::new();
    let mut shank = Vec::new();
    if spec.n_cycles > 0 {
        let n = (duration * spec.sample_rate).ceil() as usize;
        for i in 0..=n {
            let t = (i as f64 / spec.sample_rate).min(duration);
            let phase_t = (t % period + period) % period;
            // The final sample belongs to the end of the last cycle, not
            // the start of a new one.
            let phase_t = if t >= duration { period - f64::EPSILON * period } else { phase_t };
            let (ht, hd, hdd) = profile(spec.hip_amplitude, swing_len, stance_len, phase_t);
            let (st, sd, sdd) = profile(spec.knee_amplitude, swing_len, stance_len, phase_t);
            rows.push((
                t,
                JointState {
                    theta_t: spec.phase_offset + ht,
                    theta_s: spec.phase_offset + st,
                    dtheta_t: hd,
                    dtheta_s: sd,
                    ddtheta_t: hdd,
                    ddtheta_s: sdd,
                },
            ));
            thigh.push((t, hd));
            shank.push((t, sd));
        }
    }

    let events = GaitEvents {
        cycles: (0..spec.n_cycles)
            .map(|k| {
                let start = k as f64 * period;
                GaitCycle {
                    to_time: start,
                    hs_time: start + swing_len,
                    cycle_end: start + period,
                }
            })
            .collect(),
    };

    Ok(SynthGait {
        trajectory: Trajectory {
            rows,
            source: TrajectorySource::Synthetic,
        },
        thigh_rate: RateSignal::new(thigh, SegmentLabel::Thigh),
        shank_rate: RateSignal::new(shank, SegmentLabel::Shank),
        events,
    })
}
