//! Policy evaluation: exact density propagation and Monte Carlo rollouts.

use crate::constrained::{closed_loop_transition, policy_reward};
use crate::error::{Error, Result};
use crate::matrix::dot;
use crate::model::{ConstraintSpec, MdpModel, Policy};
use crate::par::{map_indexed, Execution};
use crate::rng::StreamRng;

/// Slack on the caps before a density counts as a violation.
pub const VIOLATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub epoch: usize,
    pub state: usize,
    pub density: f64,
    pub cap: f64,
}

/// Densities `x[t]` for `t = 0..N` under a policy.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityTrajectory {
    pub x: Vec<Vec<f64>>,
    pub violations: Vec<Violation>,
}

impl DensityTrajectory {
    pub fn violation_count_at(&self, epoch: usize) -> usize {
        self.violations.iter().filter(|v| v.epoch == epoch).count()
    }

    pub fn violates(&self, state: usize) -> bool {
        self.violations.iter().any(|v| v.state == state)
    }
}

/// Propagates `x1` through the policy, auditing against the model's caps if it has any.
pub fn propagate(model: &MdpModel, policy: &Policy, x1: &[f64]) -> Result<DensityTrajectory> {
    propagate_against(model, policy, x1, model.caps())
}

pub fn propagate_against(
    model: &MdpModel,
    policy: &Policy,
    x1: &[f64],
    caps: Option<&ConstraintSpec>,
) -> Result<DensityTrajectory> {
    policy.check(model)?;
    model.check_density(x1)?;
    if let Some(caps) = caps {
        if caps.len() != model.n() {
            return Err(Error::DimensionMismatch(format!(
                "caps have length {}, model has {} states",
                caps.len(),
                model.n()
            )));
        }
    }
    let mut x = vec![x1.to_vec()];
    for (t, q) in policy.stages.iter().enumerate() {
        let m = closed_loop_transition(model, t, q)?;
        let next = m.mul_vec(&x[t]);
        x.push(next);
    }
    let mut violations = Vec::new();
    if let Some(caps) = caps {
        for (t, xt) in x.iter().enumerate() {
            for (s, (&v, &c)) in xt.iter().zip(caps.as_slice()).enumerate() {
                if v > c + VIOLATION_TOL {
                    violations.push(Violation {
                        epoch: t,
                        state: s,
                        density: v,
                        cap: c,
                    });
                }
            }
        }
    }
    Ok(DensityTrajectory { x, violations })
}

/// Expected (discounted) reward collected at each stage `t = 0..N`; the last
/// entry is the terminal reward.
pub fn stage_rewards(model: &MdpModel, policy: &Policy, x1: &[f64]) -> Result<Vec<f64>> {
    let model = &*model.undiscounted();
    let traj = propagate_against(model, policy, x1, None)?;
    let mut out = Vec::with_capacity(traj.x.len());
    for (t, q) in policy.stages.iter().enumerate() {
        out.push(dot(&traj.x[t], &policy_reward(model, t, q)?));
    }
    out.push(dot(traj.x.last().expect("trajectory is never empty"), model.terminal_reward()));
    Ok(out)
}

/// `Σ_t x_tᵀ r_t(Q_t) + x_Nᵀ r_N`.
pub fn expected_reward(model: &MdpModel, policy: &Policy, x1: &[f64]) -> Result<f64> {
    Ok(stage_rewards(model, policy, x1)?.iter().sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    /// Standard error of the mean (sample standard deviation over `√rollouts`).
    pub stderr: f64,
    pub rollouts: usize,
}

pub fn monte_carlo(model: &MdpModel, policy: &Policy, x1: &[f64], rollouts: usize, seed: u64) -> Result<MonteCarloEstimate> {
    monte_carlo_with(model, policy, x1, rollouts, seed, Execution::default())
}

/// Simulates `rollouts` independent trajectories. Rollout `i` draws from stream
/// `(seed, i)` of [`StreamRng`], so the result does not depend on `exec`.
pub fn monte_carlo_with(
    model: &MdpModel,
    policy: &Policy,
    x1: &[f64],
    rollouts: usize,
    seed: u64,
    exec: Execution,
) -> Result<MonteCarloEstimate> {
    policy.check(model)?;
    model.check_density(x1)?;
    if rollouts == 0 {
        return Err(Error::DimensionMismatch("at least one rollout is required".into()));
    }
    let model = &*model.undiscounted();
    let totals = map_indexed(rollouts, exec, |i| rollout(model, policy, x1, &mut StreamRng::new(seed, i as u64)));
    let count = rollouts as f64;
    let mean = totals.iter().sum::<f64>() / count;
    let stderr = if rollouts > 1 {
        let var = totals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0);
        (var / count).sqrt()
    } else {
        0.0
    };
    Ok(MonteCarloEstimate { mean, stderr, rollouts })
}

fn rollout(model: &MdpModel, policy: &Policy, x1: &[f64], rng: &mut StreamRng) -> f64 {
    let mut state = rng.sample_index(x1.iter().copied());
    let mut total = 0.0;
    for (t, q) in policy.stages.iter().enumerate() {
        let action = rng.sample_index(q.row(state).iter().copied());
        total += model.reward(t)[(state, action)];
        state = rng.sample_index(model.transition(t, action).column(state));
    }
    total + model.terminal_reward()[state]
}

/// Random density inside the safe set.
///
/// Draws a uniform point of the simplex (normalized exponential spacings), then
/// clips every coordinate above its cap and hands the clipped mass to the
/// coordinates below their caps in proportion to their remaining headroom.
pub fn sample_feasible_density(caps: &ConstraintSpec, seed: u64) -> Vec<f64> {
    let mut rng = StreamRng::new(seed, u64::MAX);
    let n = caps.len();
    let d = caps.as_slice();
    let draws: Vec<f64> = (0..n).map(|_| -(1.0 - rng.next_f64()).ln()).collect();
    let total: f64 = draws.iter().sum();
    let mut x: Vec<f64> = draws.iter().map(|v| v / total).collect();

    for _ in 0..n + 1 {
        let excess: f64 = x.iter().zip(d).map(|(v, c)| (v - c).max(0.0)).sum();
        let headroom: f64 = x.iter().zip(d).map(|(v, c)| (c - v).max(0.0)).sum();
        if excess <= 0.0 || headroom <= 0.0 {
            break;
        }
        for (v, &c) in x.iter_mut().zip(d) {
            if *v > c {
                *v = c;
            } else {
                *v += excess * (c - *v) / headroom;
            }
        }
    }
    for (v, &c) in x.iter_mut().zip(d) {
        *v = v.clamp(0.0, c);
    }
    // Put the last rounding error on the coordinate with the most room for it.
    let delta = 1.0 - x.iter().sum::<f64>();
    if delta != 0.0 {
        let room = |i: usize| if delta > 0.0 { d[i] - x[i] } else { x[i] };
        let best = (0..n).fold(0, |b, i| if room(i) > room(b) { i } else { b });
        if room(best) >= delta.abs() {
            x[best] += delta;
        }
    }
    x
}
