//! File formats.
//!
//! Model JSON keys: `n`, `p`, `horizon`, `stationary`, `transitions`
//! (`[k][i][j]` when stationary, else `[t][k][i][j]`, column-stochastic: entry
//! `[i][j]` is the probability of `j -> i`), `rewards` (`[s][a]` or `[t][s][a]`),
//! `terminal_reward` (`[s]`), optional `action_mask` (`[s][a]` of 0/1, default all
//! 1), optional `discount` (default 1.0) and optional `d` (`[s]`). All indices
//! are zero-based.
//!
//! Floats are written in shortest round-trip form, which reproduces every
//! `f64` bit-exactly on read. CSV files use 17 significant digits.

use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::density::DensityTrajectory;
use crate::error::Result;
use crate::matrix::Matrix;
use crate::model::{ConstraintSpec, MdpModel, ModelParts, Policy, PolicyKind, Stagewise};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelFile {
    n: usize,
    p: usize,
    horizon: usize,
    stationary: bool,
    transitions: Value,
    rewards: Value,
    terminal_reward: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    action_mask: Option<Vec<Vec<u8>>>,
    #[serde(default = "unit_discount")]
    discount: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    d: Option<Vec<f64>>,
}

fn unit_discount() -> f64 {
    1.0
}

/// Parses a model file. The result is not validated; call [`MdpModel::validate`].
pub fn model_from_json(text: &str) -> Result<MdpModel> {
    let file: ModelFile = serde_json::from_str(text)?;
    let (transitions, rewards) = if file.stationary {
        (
            Stagewise::Stationary(serde_json::from_value::<Vec<Matrix>>(file.transitions)?),
            Stagewise::Stationary(serde_json::from_value::<Matrix>(file.rewards)?),
        )
    } else {
        (
            Stagewise::PerEpoch(serde_json::from_value::<Vec<Vec<Matrix>>>(file.transitions)?),
            Stagewise::PerEpoch(serde_json::from_value::<Vec<Matrix>>(file.rewards)?),
        )
    };
    if let Some(mask) = &file.action_mask {
        if mask.iter().flatten().any(|&v| v > 1) {
            return Err(serde::de::Error::custom("action_mask entries must be 0 or 1"))
                .map_err(|e: serde_json::Error| e.into());
        }
    }
    Ok(MdpModel::from_parts(ModelParts {
        n: file.n,
        p: file.p,
        horizon: file.horizon,
        transitions,
        rewards,
        terminal_reward: file.terminal_reward,
        action_mask: file
            .action_mask
            .map(|m| m.into_iter().map(|row| row.into_iter().map(|v| v == 1).collect()).collect()),
        discount: file.discount,
        caps: file.d.map(ConstraintSpec::unchecked),
    }))
}

pub fn model_to_json(model: &MdpModel) -> Result<String> {
    let stationary = model.transitions().is_stationary() && model.rewards().is_stationary();
    let epochs = model.epochs();
    let (transitions, rewards) = if stationary {
        (serde_json::to_value(model.transitions().at(0))?, serde_json::to_value(model.reward(0))?)
    } else {
        let g: Vec<&Vec<Matrix>> = (0..epochs).map(|t| model.transitions().at(t)).collect();
        let r: Vec<&Matrix> = (0..epochs).map(|t| model.reward(t)).collect();
        (serde_json::to_value(g)?, serde_json::to_value(r)?)
    };
    let file = ModelFile {
        n: model.n(),
        p: model.p(),
        horizon: model.horizon(),
        stationary,
        transitions,
        rewards,
        terminal_reward: model.terminal_reward().to_vec(),
        action_mask: Some(
            model
                .action_mask()
                .iter()
                .map(|row| row.iter().map(|&m| u8::from(m)).collect())
                .collect(),
        ),
        discount: model.discount(),
        d: model.caps().map(|c| c.as_slice().to_vec()),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundAt {
    pub x1: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PolicyMetadata {
    /// `unconstrained`, `constrained` or `projected`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    /// Reward-to-go vectors per stage (the optimal values for unconstrained policies).
    #[serde(default)]
    pub u: Vec<Vec<f64>>,
    #[serde(default)]
    pub maximin_objectives: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower_bound_at: Option<LowerBoundAt>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyFile {
    pub kind: PolicyKind,
    pub stages: Vec<Matrix>,
    #[serde(default)]
    pub metadata: PolicyMetadata,
}

impl PolicyFile {
    pub fn new(policy: &Policy, metadata: PolicyMetadata) -> Self {
        Self {
            kind: policy.kind,
            stages: policy.stages.clone(),
            metadata,
        }
    }

    pub fn policy(&self) -> Policy {
        Policy {
            stages: self.stages.clone(),
            kind: self.kind,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// `t,x1,…,xn,violation_count`, one row per stage with one-based `t`.
pub fn write_trajectory_csv(out: &mut impl Write, traj: &DensityTrajectory) -> Result<()> {
    let n = traj.x.first().map_or(0, Vec::len);
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain((1..=n).map(|i| format!("x{i}")))
        .chain(std::iter::once("violation_count".to_string()))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for (t, x) in traj.x.iter().enumerate() {
        let cells: Vec<String> = x.iter().map(|&v| fmt17(v)).collect();
        writeln!(out, "{},{},{}", t + 1, cells.join(","), traj.violation_count_at(t))?;
    }
    Ok(())
}

/// Cumulative expected reward curves, one entry per stage.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RewardCurves {
    pub unconstrained: Vec<f64>,
    pub constrained: Option<Vec<f64>>,
    pub projected: Option<Vec<f64>>,
    pub lower_bound: Option<f64>,
}

/// `t,cum_reward_unconstrained,cum_reward_constrained,cum_reward_projected,lower_bound`.
/// Missing curves are left as empty cells.
pub fn write_reward_csv(out: &mut impl Write, curves: &RewardCurves) -> Result<()> {
    writeln!(out, "t,cum_reward_unconstrained,cum_reward_constrained,cum_reward_projected,lower_bound")?;
    let cell = |v: Option<f64>| v.map(fmt17).unwrap_or_default();
    for (t, &u) in curves.unconstrained.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{}",
            t + 1,
            fmt17(u),
            cell(curves.constrained.as_ref().map(|c| c[t])),
            cell(curves.projected.as_ref().map(|c| c[t])),
            cell(curves.lower_bound)
        )?;
    }
    Ok(())
}

/// Running sums of per-stage rewards.
pub fn cumulative(stage_rewards: &[f64]) -> Vec<f64> {
    stage_rewards
        .iter()
        .scan(0.0, |acc, &r| {
            *acc += r;
            Some(*acc)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub expected_reward: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_stderr: Option<f64>,
    pub violations: usize,
}
