//! Optimal policies when the density caps are ignored.

use crate::error::{Error, Result};
use crate::model::{MdpModel, Policy};
use crate::par::{map_indexed, Execution};

/// Optimal reward-to-go `v[t][s]` for `t = 0..N` and the maximizing actions.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction {
    pub v: Vec<Vec<f64>>,
    pub argmax_actions: Vec<Vec<usize>>,
}

impl ValueFunction {
    /// Optimal expected total reward from the initial density `x1`.
    pub fn value_at(&self, x1: &[f64]) -> f64 {
        crate::matrix::dot(x1, &self.v[0])
    }
}

/// `r_t(s, a) + Σ_j p_t(j | s, a) next[j]`.
pub fn action_value(model: &MdpModel, epoch: usize, state: usize, action: usize, next: &[f64]) -> f64 {
    let g = model.transition(epoch, action);
    model.reward(epoch)[(state, action)] + g.column(state).zip(next).map(|(p, v)| p * v).sum::<f64>()
}

/// Backward induction on the discount-scaled model. Ties go to the lowest
/// action index; masked actions are never considered.
pub fn backward_induction(model: &MdpModel) -> Result<(Policy, ValueFunction)> {
    ensure_valid(model)?;
    let model = &*model.undiscounted();
    let (n, epochs) = (model.n(), model.epochs());
    let mut v = vec![Vec::new(); epochs + 1];
    let mut argmax_actions = vec![Vec::new(); epochs];
    v[epochs] = model.terminal_reward().to_vec();
    for t in (0..epochs).rev() {
        let mut values = Vec::with_capacity(n);
        let mut actions = Vec::with_capacity(n);
        for s in 0..n {
            let mut best: Option<(usize, f64)> = None;
            for a in model.available_actions(s) {
                let q = action_value(model, t, s, a, &v[t + 1]);
                if best.is_none_or(|(_, b)| q > b) {
                    best = Some((a, q));
                }
            }
            let (a, q) = best.expect("validated models have an available action in every state");
            values.push(q);
            actions.push(a);
        }
        v[t] = values;
        argmax_actions[t] = actions;
    }
    let policy = Policy::deterministic(&argmax_actions, model.p());
    Ok((policy, ValueFunction { v, argmax_actions }))
}

/// Upper limit on the number of deterministic policies [`brute_force_optimal`] enumerates
/// (masked actions do not count).
pub const BRUTE_FORCE_LIMIT: f64 = 1e6;

pub fn brute_force_optimal(model: &MdpModel, x1: &[f64]) -> Result<(Policy, f64)> {
    brute_force_optimal_with(model, x1, Execution::default())
}

/// Exhaustive search over deterministic Markov policies, each scored by exact
/// density propagation. Returns the lowest-numbered maximizer.
pub fn brute_force_optimal_with(model: &MdpModel, x1: &[f64], exec: Execution) -> Result<(Policy, f64)> {
    ensure_valid(model)?;
    model.check_density(x1)?;
    let model = &*model.undiscounted();
    let (n, p, epochs) = (model.n(), model.p(), model.epochs());

    // One mixed-radix digit per (epoch, state) slot, over its available actions.
    let choices: Vec<Vec<usize>> = (0..epochs)
        .flat_map(|_| (0..n).map(|s| model.available_actions(s).collect()))
        .collect();
    let count: f64 = choices.iter().map(|c| c.len() as f64).product();
    if count > BRUTE_FORCE_LIMIT {
        return Err(Error::InstanceTooLarge {
            policies: count,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let total = count as usize;

    let decode = |mut index: usize| -> Vec<Vec<usize>> {
        let mut actions = vec![vec![0; n]; epochs];
        for (slot, options) in choices.iter().enumerate() {
            actions[slot / n][slot % n] = options[index % options.len()];
            index /= options.len();
        }
        actions
    };

    let values = map_indexed(total, exec, |index| evaluate_deterministic(model, &decode(index), x1));
    let mut best = 0;
    for (i, &value) in values.iter().enumerate() {
        if value > values[best] {
            best = i;
        }
    }
    Ok((Policy::deterministic(&decode(best), p), values[best]))
}

/// `Σ_t x_tᵀ r_t + x_Nᵀ r_N` for a deterministic policy, propagating densities directly.
fn evaluate_deterministic(model: &MdpModel, actions: &[Vec<usize>], x1: &[f64]) -> f64 {
    let n = model.n();
    let mut x = x1.to_vec();
    let mut total = 0.0;
    for (t, chosen) in actions.iter().enumerate() {
        let reward = model.reward(t);
        let mut next = vec![0.0; n];
        for j in 0..n {
            let a = chosen[j];
            total += x[j] * reward[(j, a)];
            let g = model.transition(t, a);
            for (i, nx) in next.iter_mut().enumerate() {
                *nx += g[(i, j)] * x[j];
            }
        }
        x = next;
    }
    total + x.iter().zip(model.terminal_reward()).map(|(a, b)| a * b).sum::<f64>()
}

pub(crate) fn ensure_valid(model: &MdpModel) -> Result<()> {
    let report = model.validate();
    if report.is_valid() {
        Ok(())
    } else {
        Err(Error::InvalidModel(report))
    }
}
