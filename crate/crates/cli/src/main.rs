//! Command-line frontend: parses inputs, dispatches to the core modules
//! and writes CSV/JSON results.
//!
//! Exit codes: 0 on success, 1 on domain errors (module-qualified message
//! on stderr), 2 on usage errors. All output files are written atomically
//! (temp file in the target directory, then rename). Numbers are printed
//! with 9 significant digits, `.` decimal, locale-independent.

use clap::{Parser, Subcommand, ValueEnum};
use gait_core::dynamics::{inverse_dynamics, lagrangian_oracle, swing_knee_torque};
use gait_core::estimation::{estimate_series, LinkPair};
use gait_core::params::{parse_param_file, validate_params, JointState, ParamFile, SegmentParams};
use gait_core::signal::{parse_events_csv, parse_rate_csv, parse_trajectory_csv, synth_gait, SynthGaitSpec, Trajectory};
use gait_core::sim::{simulate_swing, SimConfig, TorqueProfile};
use gait_core::spatial::{stride_metrics, GaitEvents, Mode, RateSignal, SpatialConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "gait", about = "Planar lower-limb gait dynamics toolkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Paper,
    Geometric,
}

#[derive(Subcommand)]
enum Command {
    /// Inverse dynamics over a trajectory CSV: per-row hip and knee torques.
    Torque {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        trajectory: PathBuf,
        /// Interpret input angles (and rates) as degrees.
        #[arg(long)]
        degrees: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Thigh-angle estimate from the shank-angle series via the sine rule.
    Estimate {
        #[arg(long)]
        params: PathBuf,
        /// Trajectory CSV; the theta_s column is the input angle series.
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long)]
        degrees: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-cycle stride metrics from rate and event CSVs, as JSON.
    Spatial {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        rates: PathBuf,
        #[arg(long)]
        events: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        degrees: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Forward swing simulation from a fixed release pose.
    Simulate {
        #[arg(long)]
        params: PathBuf,
        #[arg(long, default_value_t = 1e-4)]
        dt: f64,
        #[arg(long, default_value_t = 2.0)]
        duration: f64,
        /// Enable the flexion controller with this gain.
        #[arg(long)]
        k_flex: Option<f64>,
        #[arg(long)]
        degrees: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic gait: trajectory, rate and event files.
    Synth {
        /// Output prefix; writes <out>.trajectory.csv, <out>.rates.csv,
        /// <out>.events.csv.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10.0)]
        duration: f64,
        /// Seed for the amplitude draw; same seed, same files.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Parameter and oracle self-checks.
    Validate {
        #[arg(long)]
        params: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<(), String> {
    match command {
        Command::Torque { params, trajectory, degrees, out } => {
            let p = load_params(&params)?.segment;
            let traj = load_trajectory(&trajectory, degrees)?;
            let mut text = String::from("t,gamma_hip,gamma_knee,knee_closed_form\n");
            for &(t, st) in &traj.rows {
                let gamma = inverse_dynamics(&p, &st);
                let knee = swing_knee_torque(&p, &st);
                writeln!(text, "{},{},{},{}", sig9(t), sig9(gamma.v1), sig9(gamma.v2), sig9(knee)).unwrap();
            }
            write_atomic(&out, &text)
        }
        Command::Estimate { params, trajectory, degrees, out } => {
            let p = load_params(&params)?.segment;
            let traj = load_trajectory(&trajectory, degrees)?;
            let links = LinkPair::new(p.l1, p.l2);
            let series: Vec<(f64, f64)> =
                traj.rows.iter().map(|&(t, st)| (t, st.theta_s)).collect();
            let estimates = estimate_series(&series, &links).map_err(|e| e.to_string())?;
            let mut text = String::from("t,theta1,theta2\n");
            for (&(t, theta1), &(_, theta2)) in estimates.iter().zip(&series) {
                let (o1, o2) = if degrees {
                    (theta1.to_degrees(), theta2.to_degrees())
                } else {
                    (theta1, theta2)
                };
                writeln!(text, "{},{},{}", sig9(t), sig9(o1), sig9(o2)).unwrap();
            }
            write_atomic(&out, &text)
        }
        Command::Spatial { params, rates, events, mode, degrees, out } => {
            let p = load_params(&params)?.segment;
            let (thigh, shank) = load_rates(&rates, degrees)?;
            let events = load_events(&events)?;
            let mode = match mode {
                ModeArg::Paper => Mode::PaperFormula,
                ModeArg::Geometric => Mode::GeometricOracle,
            };
            let cfg = SpatialConfig::with_default_height(mode, p.l1, p.l2);
            let per_cycle =
                stride_metrics(&thigh, &shank, &events, &cfg).map_err(|e| e.to_string())?;
            let mut cycles = Vec::new();
            for (n, result) in per_cycle.into_iter().enumerate() {
                let m = result.map_err(|e| e.to_string())?;
                cycles.push(serde_json::json!({
                    "n": n,
                    "stride_length_m": num9(m.stride_length),
                    "stride_velocity_mps": num9(m.stride_velocity),
                    "a_swing_m": num9(m.a_swing),
                    "a_stance_m": num9(m.a_stance),
                    "area_swing_m2": num9(m.area_swing),
                    "area_stance_m2": num9(m.area_stance),
                    "alpha_rad": num9(m.alpha),
                    "beta_rad": num9(m.beta),
                }));
            }
            let doc = serde_json::json!({ "cycles": cycles });
            let mut text = serde_json::to_string_pretty(&doc).map_err(|e| e.to_string())?;
            text.push('\n');
            write_atomic(&out, &text)
        }
        Command::Simulate { params, dt, duration, k_flex, degrees, out } => {
            let p = load_params(&params)?.segment;
            let mut cfg = SimConfig::passive(dt, duration, JointState::static_pose(0.3, -0.2));
            cfg.hip_torque = TorqueProfile::Zero;
            if let Some(gain) = k_flex {
                cfg.controller_enabled = true;
                cfg.controller = gait_core::geometry::ControllerState::new(gain);
            }
            let result = simulate_swing(&p, &cfg).map_err(|e| e.to_string())?;
            let text = trajectory_csv(&result.trajectory, degrees);
            write_atomic(&out, &text)
        }
        Command::Synth { out, duration, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let spec = SynthGaitSpec {
                n_cycles: (duration / 1.0).ceil() as usize,
                hip_amplitude: rng.gen_range(0.5..0.7),
                knee_amplitude: rng.gen_range(0.3..0.4),
                ..SynthGaitSpec::default()
            };
            let gait = synth_gait(&spec).map_err(|e| e.to_string())?;
            let prefix = out.as_os_str().to_string_lossy();
            write_atomic(
                Path::new(&format!("{prefix}.trajectory.csv")),
                &trajectory_csv(&gait.trajectory, false),
            )?;
            write_atomic(
                Path::new(&format!("{prefix}.rates.csv")),
                &rates_csv(&gait.thigh_rate, &gait.shank_rate),
            )?;
            write_atomic(
                Path::new(&format!("{prefix}.events.csv")),
                &events_csv(&gait.events),
            )
        }
        Command::Validate { params } => {
            let file = load_params(&params)?;
            let report = validate_params(&file.segment);
            if !report.ok {
                let detail: Vec<String> = report
                    .violations
                    .iter()
                    .map(|(field, why)| format!("{field}: {why}"))
                    .collect();
                return Err(format!("params: invalid parameter file: {}", detail.join("; ")));
            }
            oracle_self_check(&file.segment)?;
            println!("validate: parameters ok, dynamics oracle sweep ok");
            Ok(())
        }
    }
}

// Dynamics self-check: the closed-form inverse dynamics must match the
// finite-difference Euler-Lagrange oracle on a deterministic random sweep.
fn oracle_self_check(p: &SegmentParams) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..100 {
        let st = JointState {
            theta_t: rng.gen_range(-3.0..3.0),
            theta_s: rng.gen_range(-3.0..3.0),
            dtheta_t: rng.gen_range(-10.0..10.0),
            dtheta_s: rng.gen_range(-10.0..10.0),
            ddtheta_t: rng.gen_range(-50.0..50.0),
            ddtheta_s: rng.gen_range(-50.0..50.0),
        };
        let direct = inverse_dynamics(p, &st);
        let oracle = lagrangian_oracle(p, &st);
        let err = (direct.v1 - oracle.v1)
            .abs()
            .max((direct.v2 - oracle.v2).abs())
            / direct.v1.abs().max(direct.v2.abs()).max(1.0);
        if err > 1e-6 {
            return Err(format!(
                "dynamics: oracle sweep failed, relative error {err:.3e} exceeds 1e-6"
            ));
        }
    }
    Ok(())
}

/// 9-significant-digit rendering, locale-independent.
fn sig9(x: f64) -> String {
    format!("{:.8e}", x)
}

/// The value rounded to 9 significant digits, as a JSON number.
fn num9(x: f64) -> serde_json::Value {
    let rounded: f64 = sig9(x).parse().unwrap();
    serde_json::Value::from(rounded)
}

fn read_file(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("io: cannot read {}: {e}", path.display()))
}

fn load_params(path: &Path) -> Result<ParamFile, String> {
    parse_param_file(&read_file(path)?).map_err(|e| e.to_string())
}

fn load_trajectory(path: &Path, degrees: bool) -> Result<Trajectory, String> {
    let mut traj = parse_trajectory_csv(&read_file(path)?).map_err(|e| e.to_string())?;
    if degrees {
        for (_, st) in &mut traj.rows {
            st.theta_t = st.theta_t.to_radians();
            st.theta_s = st.theta_s.to_radians();
            st.dtheta_t = st.dtheta_t.to_radians();
            st.dtheta_s = st.dtheta_s.to_radians();
            st.ddtheta_t = st.ddtheta_t.to_radians();
            st.ddtheta_s = st.ddtheta_s.to_radians();
        }
    }
    Ok(traj)
}

fn load_rates(path: &Path, degrees: bool) -> Result<(RateSignal, RateSignal), String> {
    let (mut thigh, mut shank) = parse_rate_csv(&read_file(path)?).map_err(|e| e.to_string())?;
    if degrees {
        for (_, v) in thigh.samples.iter_mut().chain(shank.samples.iter_mut()) {
            *v = v.to_radians();
        }
    }
    Ok((thigh, shank))
}

fn load_events(path: &Path) -> Result<GaitEvents, String> {
    parse_events_csv(&read_file(path)?).map_err(|e| e.to_string())
}

fn trajectory_csv(traj: &Trajectory, degrees: bool) -> String {
    let mut text = String::from("t,theta_t,theta_s,dtheta_t,dtheta_s,ddtheta_t,ddtheta_s\n");
    let conv = |v: f64| if degrees { v.to_degrees() } else { v };
    for &(t, st) in &traj.rows {
        writeln!(
            text,
            "{},{},{},{},{},{},{}",
            sig9(t),
            sig9(conv(st.theta_t)),
            sig9(conv(st.theta_s)),
            sig9(conv(st.dtheta_t)),
            sig9(conv(st.dtheta_s)),
            sig9(conv(st.ddtheta_t)),
            sig9(conv(st.ddtheta_s)),
        )
        .unwrap();
    }
    text
}

fn rates_csv(thigh: &RateSignal, shank: &RateSignal) -> String {
    let mut text = String::from("t,rate_thigh,rate_shank\n");
    for (&(t, rt), &(_, rs)) in thigh.samples.iter().zip(&shank.samples) {
        writeln!(text, "{},{},{}", sig9(t), sig9(rt), sig9(rs)).unwrap();
    }
    text
}

fn events_csv(events: &GaitEvents) -> String {
    let mut text = String::from("cycle,to_time,hs_time,cycle_end\n");
    for (i, c) in events.cycles.iter().enumerate() {
        writeln!(
            text,
            "{},{},{},{}",
            i,
            sig9(c.to_time),
            sig9(c.hs_time),
            sig9(c.cycle_end)
        )
        .unwrap();
    }
    text
}

/// Writes via a temp file in the destination directory plus an atomic
/// rename, so readers never observe a partial file.
fn write_atomic(path: &Path, contents: &str) -> Result<(), String> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => tempfile::NamedTempFile::new_in(d),
        None => tempfile::NamedTempFile::new_in("."),
    }
    .map_err(|e| format!("io: cannot create temp file near {}: {e}", path.display()))?;
    std::fs::write(tmp.path(), contents)
        .map_err(|e| format!("io: cannot write {}: {e}", path.display()))?;
    tmp.persist(path)
        .map_err(|e| format!("io: cannot persist {}: {e}", path.display()))?;
    Ok(())
}
