use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use cmdp_core::constrained::{build_stage_lp, rule_value, synthesize_with};
use cmdp_core::density::{monte_carlo, propagate, stage_rewards};
use cmdp_core::gridworld::{build_grid, swarm_spec, GridSpec};
use cmdp_core::io::{
    cumulative, model_from_json, model_to_json, write_reward_csv, write_trajectory_csv, LowerBoundAt, PolicyFile,
    PolicyMetadata, RewardCurves, SimulationSummary,
};
use cmdp_core::lp::{self, SolverOptions};
use cmdp_core::unconstrained::backward_induction;
use cmdp_core::{ConstraintSpec, Error, MdpModel, Policy, PolicyKind};

use crate::{GridArgs, Mode, SimulateArgs, StartArgs, SynthArgs};

pub const INVALID_MODEL: u8 = 1;
pub const USAGE: u8 = 2;
pub const INFEASIBLE: u8 = 3;
pub const INCOMPATIBLE: u8 = 4;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidModel(_) | Error::InvalidConstraint(_) => INVALID_MODEL,
            Error::InvalidGrid(_) | Error::Json(_) | Error::Io(_) | Error::InstanceTooLarge { .. } => USAGE,
            Error::InfeasibleStage { .. }
            | Error::UnboundedStage { .. }
            | Error::SolverStalled { .. }
            | Error::Projection { .. } => INFEASIBLE,
            Error::InvalidPolicy(_)
            | Error::DimensionMismatch(_)
            | Error::NotADensity(_)
            | Error::OutsideSafeSet(_)
            | Error::MissingConstraint => INCOMPATIBLE,
        };
        Failure::new(code, e.to_string())
    }
}

type Outcome<T = ()> = Result<T, Failure>;

fn read_text(path: &Path) -> Outcome<String> {
    fs::read_to_string(path).map_err(|e| Failure::new(USAGE, format!("cannot read {}: {e}", path.display())))
}

fn read_model(path: &Path) -> Outcome<MdpModel> {
    model_from_json(&read_text(path)?).map_err(|e| Failure::new(USAGE, format!("{}: {e}", path.display())))
}

fn read_valid_model(path: &Path) -> Outcome<MdpModel> {
    let model = read_model(path)?;
    let report = model.validate();
    if report.is_valid() {
        Ok(model)
    } else {
        Err(Failure::new(INVALID_MODEL, format!("{} is not a valid model:\n{report}", path.display())))
    }
}

fn create(path: &Path) -> Outcome<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::new(USAGE, format!("cannot write {}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Outcome {
    let mut out = create(path)?;
    writeln!(out, "{text}").and_then(|_| out.flush()).map_err(|e| Error::Io(e).into())
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (fs::canonicalize(a), fs::canonicalize(b)) {
        (Ok(a), Ok(b)) => a == b,
        _ => a == b,
    }
}

fn ensure_distinct(inputs: &[&Path], outputs: &[&Path]) -> Outcome {
    for (i, out) in outputs.iter().enumerate() {
        if inputs.iter().any(|input| same_file(input, out)) || outputs[..i].iter().any(|o| same_file(o, out)) {
            return Err(Failure::new(USAGE, format!("output path {} clashes with another path", out.display())));
        }
    }
    Ok(())
}

/// The start density, if one was requested.
fn start_density(start: &StartArgs, n: usize) -> Outcome<Option<Vec<f64>>> {
    if let Some(s) = start.start_state {
        if s >= n {
            return Err(Failure::new(INCOMPATIBLE, format!("start state {s} is out of range for {n} states")));
        }
        let mut x = vec![0.0; n];
        x[s] = 1.0;
        return Ok(Some(x));
    }
    let Some(path) = &start.start_file else { return Ok(None) };
    let x: Vec<f64> = serde_json::from_str(&read_text(path)?)
        .map_err(|e| Failure::new(USAGE, format!("{}: {e}", path.display())))?;
    Ok(Some(x))
}

pub fn validate(path: &Path) -> Outcome {
    let model = read_model(path)?;
    let report = model.validate();
    if report.is_valid() {
        println!(
            "valid: {} states, {} actions, horizon {}{}",
            model.n(),
            model.p(),
            model.horizon(),
            if model.caps().is_some() { ", density caps present" } else { "" }
        );
        Ok(())
    } else {
        println!("{}", report.to_string().trim_end());
        Err(Failure::new(INVALID_MODEL, format!("{} has {} problem(s)", path.display(), report.issues.len())))
    }
}

fn required_caps(model: &MdpModel) -> Outcome<ConstraintSpec> {
    let caps = model.caps().ok_or(Error::MissingConstraint)?;
    Ok(ConstraintSpec::new(caps.as_slice().to_vec())?)
}

pub fn synth(args: &SynthArgs) -> Outcome {
    let mut outputs = vec![args.out.as_path()];
    if let Some(trace) = &args.lp_trace {
        outputs.push(trace);
    }
    ensure_distinct(&[&args.model], &outputs)?;
    let model = read_valid_model(&args.model)?;
    let x1 = start_density(&args.start, model.n())?;
    if let Some(x1) = &x1 {
        model.check_density(x1)?;
    }
    let options = args.solver.options();

    let (policy, metadata) = match args.mode {
        Mode::Unconstrained => {
            let (policy, vf) = backward_induction(&model)?;
            if let Some(x1) = &x1 {
                println!("optimal expected reward from the start: {}", vf.value_at(x1));
            }
            let metadata = PolicyMetadata {
                mode: Some(args.mode.name().into()),
                u: vf.v,
                ..PolicyMetadata::default()
            };
            (policy, metadata)
        }
        Mode::Constrained | Mode::Projected => {
            let caps = required_caps(&model)?;
            let (policy, values) = synthesize_with(&model, &caps, args.mode == Mode::Projected, &options)?;
            if let Some(path) = &args.lp_trace {
                write_lp_trace(path, &model, &caps, &values.u, &options)?;
            }
            let lower_bound_at = match &x1 {
                Some(x1) if caps.contains(x1, 1e-9) => {
                    let value = dot(x1, &values.u[0]);
                    println!("certified reward from the start: {value}");
                    Some(LowerBoundAt { x1: x1.clone(), value })
                }
                Some(_) => {
                    eprintln!("warning: the start density is outside the safe set, no certificate recorded");
                    None
                }
                None => None,
            };
            let metadata = PolicyMetadata {
                mode: Some(args.mode.name().into()),
                u: values.u,
                maximin_objectives: values.maximin_objectives,
                lower_bound_at,
            };
            (policy, metadata)
        }
    };
    write_text(&args.out, &PolicyFile::new(&policy, metadata).to_json()?)?;
    println!("wrote {} policy with {} decision epochs to {}", args.mode.name(), policy.stages.len(), args.out.display());
    Ok(())
}

/// Re-solves each stage LP with tracing on.
fn write_lp_trace(
    path: &Path,
    model: &MdpModel,
    caps: &ConstraintSpec,
    u: &[Vec<f64>],
    options: &SolverOptions,
) -> Outcome {
    let model = model.undiscounted();
    let mut out = create(path)?;
    for t in (0..model.epochs()).rev() {
        writeln!(out, "# stage LP, epoch {t}").map_err(Error::Io)?;
        let (program, _) = build_stage_lp(&model, caps, t, &u[t + 1])?;
        lp::solve_with(&program, options, Some(&mut out)).map_err(|e| Failure::new(INFEASIBLE, e.to_string()))?;
    }
    out.flush().map_err(|e| Error::Io(e).into())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn policy_mode(file: &PolicyFile) -> Mode {
    match file.metadata.mode.as_deref() {
        Some("unconstrained") => Mode::Unconstrained,
        Some("projected") => Mode::Projected,
        Some("constrained") => Mode::Constrained,
        _ if file.kind == PolicyKind::Deterministic => Mode::Unconstrained,
        _ => Mode::Constrained,
    }
}

/// `x1ᵀU_1` for the policy's own reward-to-go.
fn own_value(model: &MdpModel, policy: &Policy, x1: &[f64]) -> Outcome<f64> {
    let model = model.undiscounted();
    let mut u = model.terminal_reward().to_vec();
    for (t, q) in policy.stages.iter().enumerate().rev() {
        u = rule_value(&model, t, q, &u)?;
    }
    Ok(dot(x1, &u))
}

pub fn simulate(args: &SimulateArgs) -> Outcome {
    let prefix = args.out_prefix.to_string_lossy().into_owned();
    let paths: Vec<PathBuf> = ["_trajectory.csv", "_reward.csv", "_summary.json"]
        .iter()
        .map(|suffix| PathBuf::from(format!("{prefix}{suffix}")))
        .collect();
    let outputs: Vec<&Path> = paths.iter().map(PathBuf::as_path).collect();
    let mut inputs = vec![args.model.as_path(), args.policy.as_path()];
    if let Some(f) = &args.start.start_file {
        inputs.push(f);
    }
    ensure_distinct(&inputs, &outputs)?;

    let model = read_valid_model(&args.model)?;
    let file = PolicyFile::from_json(&read_text(&args.policy)?)
        .map_err(|e| Failure::new(USAGE, format!("{}: {e}", args.policy.display())))?;
    let policy = file.policy();
    policy.check(&model)?;
    let x1 = start_density(&args.start, model.n())?
        .ok_or_else(|| Failure::new(USAGE, "simulate needs --start-state or --start-file"))?;
    model.check_density(&x1)?;
    let options = args.solver.options();
    let mode = policy_mode(&file);
    let caps = model.caps().map(|c| ConstraintSpec::new(c.as_slice().to_vec())).transpose()?;
    let safe_start = caps.as_ref().is_some_and(|c| c.contains(&x1, 1e-9));

    let trajectory = propagate(&model, &policy, &x1)?;
    let own = stage_rewards(&model, &policy, &x1)?;
    let expected_reward: f64 = own.iter().sum();

    let curve = |m: Mode| -> Outcome<Option<Vec<f64>>> {
        if m == mode {
            return Ok(Some(cumulative(&own)));
        }
        let other = match m {
            Mode::Unconstrained => backward_induction(&model)?.0,
            _ => match &caps {
                Some(caps) => match synthesize_with(&model, caps, m == Mode::Projected, &options) {
                    Ok((p, _)) => p,
                    Err(_) => return Ok(None),
                },
                None => return Ok(None),
            },
        };
        Ok(Some(cumulative(&stage_rewards(&model, &other, &x1)?)))
    };

    let lower_bound = match (&caps, mode) {
        (Some(_), Mode::Constrained | Mode::Projected) if safe_start => Some(own_value(&model, &policy, &x1)?),
        (Some(caps), Mode::Unconstrained) if safe_start => synthesize_with(&model, caps, false, &options)
            .ok()
            .map(|(_, values)| dot(&x1, &values.u[0])),
        _ => None,
    };
    let curves = RewardCurves {
        unconstrained: curve(Mode::Unconstrained)?.expect("the unconstrained curve always exists"),
        constrained: curve(Mode::Constrained)?,
        projected: curve(Mode::Projected)?,
        lower_bound,
    };

    let estimate = if args.rollouts > 0 {
        Some(monte_carlo(&model, &policy, &x1, args.rollouts, args.seed)?)
    } else {
        None
    };
    let summary = SimulationSummary {
        expected_reward,
        lower_bound,
        mc_mean: estimate.map(|e| e.mean),
        mc_stderr: estimate.map(|e| e.stderr),
        violations: trajectory.violations.len(),
    };

    let mut out = create(&paths[0])?;
    write_trajectory_csv(&mut out, &trajectory)?;
    out.flush().map_err(Error::Io)?;
    let mut out = create(&paths[1])?;
    write_reward_csv(&mut out, &curves)?;
    out.flush().map_err(Error::Io)?;
    write_text(&paths[2], &serde_json::to_string_pretty(&summary).map_err(Error::Json)?)?;

    println!("expected reward ({}): {expected_reward}", mode.name());
    if let Some(b) = lower_bound {
        println!("lower bound: {b}");
    }
    if let Some(e) = estimate {
        println!("Monte Carlo: {} ± {} over {} rollouts", e.mean, e.stderr, e.rollouts);
    }
    println!("violations: {}", summary.violations);
    for v in &trajectory.violations {
        println!("  epoch {} state {}: {} > {}", v.epoch, v.state, v.density, v.cap);
    }
    Ok(())
}

pub fn grid(args: &GridArgs) -> Outcome {
    let spec = if args.paper {
        swarm_spec(args.epsilon, args.horizon)
    } else {
        let (rows, cols) = (args.rows.unwrap_or(0), args.cols.unwrap_or(0));
        let mut spec = GridSpec::plain(rows, cols, args.epsilon, args.horizon);
        if let Some(v) = &args.stage_rewards {
            spec.stage_rewards = v.clone();
        }
        if let Some(v) = &args.terminal_rewards {
            spec.terminal_rewards = v.clone();
        }
        if let Some(v) = &args.caps {
            spec.caps = v.clone();
        }
        spec
    };
    let (model, _) = build_grid(&spec).map_err(|e| Failure::new(USAGE, e.to_string()))?;
    write_text(&args.out, &model_to_json(&model)?)?;
    println!("wrote {}x{} grid ({} states, horizon {}) to {}", spec.rows, spec.cols, model.n(), model.horizon(), args.out.display());
    Ok(())
}
