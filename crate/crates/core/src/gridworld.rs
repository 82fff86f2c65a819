//! Grid navigation instances.
//!
//! States are cells numbered row-major from the top-left corner. Every cell has
//! the actions up, down, left, right and stay (in that order); moves that would
//! leave the grid are masked. Under an available action the agent ends up in the
//! intended cell with probability `1 - ε`, and the remaining `ε` is split evenly
//! over the cells reached by the cell's other available actions (stay included).

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{ConstraintSpec, MdpModel, ModelParts, Stagewise};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    Up,
    Down,
    Left,
    Right,
    Stay,
}

impl Move {
    pub const ALL: [Move; 5] = [Move::Up, Move::Down, Move::Left, Move::Right, Move::Stay];

    pub fn name(self) -> &'static str {
        match self {
            Move::Up => "up",
            Move::Down => "down",
            Move::Left => "left",
            Move::Right => "right",
            Move::Stay => "stay",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    pub epsilon: f64,
    /// Reward per cell, collected at every decision epoch whatever the action.
    pub stage_rewards: Vec<f64>,
    pub terminal_rewards: Vec<f64>,
    pub caps: Vec<f64>,
    pub horizon: usize,
}

impl GridSpec {
    /// Grid with zero rewards and no effective caps.
    pub fn plain(rows: usize, cols: usize, epsilon: f64, horizon: usize) -> Self {
        let n = rows * cols;
        Self {
            rows,
            cols,
            epsilon,
            stage_rewards: vec![0.0; n],
            terminal_rewards: vec![0.0; n],
            caps: vec![1.0; n],
            horizon,
        }
    }

    fn target(&self, cell: usize, mv: Move) -> Option<usize> {
        let (r, c) = (cell / self.cols, cell % self.cols);
        match mv {
            Move::Up if r > 0 => Some(cell - self.cols),
            Move::Down if r + 1 < self.rows => Some(cell + self.cols),
            Move::Left if c > 0 => Some(cell - 1),
            Move::Right if c + 1 < self.cols => Some(cell + 1),
            Move::Stay => Some(cell),
            _ => None,
        }
    }
}

pub fn build_grid(spec: &GridSpec) -> Result<(MdpModel, ConstraintSpec)> {
    let n = spec.rows * spec.cols;
    if n == 0 {
        return Err(Error::InvalidGrid("rows and cols must be at least 1".into()));
    }
    if !(0.0..1.0).contains(&spec.epsilon) {
        return Err(Error::InvalidGrid(format!("epsilon {} is outside [0, 1)", spec.epsilon)));
    }
    if spec.horizon == 0 {
        return Err(Error::InvalidGrid("horizon must be at least 1".into()));
    }
    for (name, v) in [
        ("stage_rewards", &spec.stage_rewards),
        ("terminal_rewards", &spec.terminal_rewards),
        ("caps", &spec.caps),
    ] {
        if v.len() != n {
            return Err(Error::InvalidGrid(format!("{name} has length {}, grid has {n} cells", v.len())));
        }
    }
    let caps = ConstraintSpec::new(spec.caps.clone())?;

    let p = Move::ALL.len();
    let mask: Vec<Vec<bool>> = (0..n)
        .map(|cell| Move::ALL.iter().map(|&mv| spec.target(cell, mv).is_some()).collect())
        .collect();
    let mut transitions = vec![Matrix::zeros(n, n); p];
    for cell in 0..n {
        let targets: Vec<(usize, usize)> = Move::ALL
            .iter()
            .enumerate()
            .filter_map(|(k, &mv)| spec.target(cell, mv).map(|to| (k, to)))
            .collect();
        let others = targets.len() - 1;
        for &(k, intended) in &targets {
            let g = &mut transitions[k];
            if others == 0 {
                g[(intended, cell)] = 1.0;
                continue;
            }
            g[(intended, cell)] += 1.0 - spec.epsilon;
            let share = spec.epsilon / others as f64;
            for &(k2, to) in &targets {
                if k2 != k {
                    g[(to, cell)] += share;
                }
            }
        }
        // Masked actions still need a valid column; they can never be selected.
        for (k, &mv) in Move::ALL.iter().enumerate() {
            if spec.target(cell, mv).is_none() {
                transitions[k][(cell, cell)] = 1.0;
            }
        }
    }
    let rewards = Matrix::from_fn(n, p, |s, _| spec.stage_rewards[s]);
    let model = MdpModel::new(ModelParts {
        n,
        p,
        horizon: spec.horizon,
        transitions: Stagewise::Stationary(transitions),
        rewards: Stagewise::Stationary(rewards),
        terminal_reward: spec.terminal_rewards.clone(),
        action_mask: Some(mask),
        discount: 1.0,
        caps: Some(caps.clone()),
    })?;
    Ok((model, caps))
}

/// Stage rewards of the 3×3 swarm instance; cell 3 (middle-left) pays the most.
pub const SWARM_STAGE_REWARDS: [f64; 9] = [1.0, 1.0, 1.0, 10.0, 5.0, 0.0, 3.0, 3.0, 3.0];
pub const SWARM_TERMINAL_REWARDS: [f64; 9] = [0.0, 0.0, 0.0, 10.0, 0.0, 0.0, 0.0, 0.0, 0.0];
pub const SWARM_CAPS: [f64; 9] = [0.4, 0.4, 0.4, 0.5, 0.05, 1.0, 0.2, 0.2, 0.2];
pub const SWARM_EPSILON: f64 = 0.1;
pub const SWARM_HORIZON: usize = 20;
/// Zero-based start cell (the middle-right cell, whose cap is 1).
pub const SWARM_START: usize = 5;

pub fn swarm_spec(epsilon: f64, horizon: usize) -> GridSpec {
    GridSpec {
        rows: 3,
        cols: 3,
        epsilon,
        stage_rewards: SWARM_STAGE_REWARDS.to_vec(),
        terminal_rewards: SWARM_TERMINAL_REWARDS.to_vec(),
        caps: SWARM_CAPS.to_vec(),
        horizon,
    }
}

/// The 3×3 swarm-coordination instance.
pub fn paper_instance(epsilon: f64, horizon: usize) -> Result<(MdpModel, ConstraintSpec)> {
    build_grid(&swarm_spec(epsilon, horizon))
}
