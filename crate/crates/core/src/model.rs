//! Problem data for finite-horizon constrained MDPs.
//!
//! Conventions used throughout the crate:
//!
//! * **Transition matrices are column-stochastic.** `transition(t, k)[(i, j)]` is the
//!   probability of moving to state `i` from state `j` under action `k`, so a
//!   density evolves as `x_{t+1} = M_t x_t`. Most MDP texts use the row-stochastic
//!   transpose; conversions from such sources must transpose.
//! * **Epochs are zero-based.** A model with horizon `N` has `N` reward stages and
//!   `N - 1` decision epochs `0..N-1`. Stage `N - 1` only collects the terminal reward.
//! * States and actions are zero-based as well.

use std::borrow::Cow;
use std::fmt;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Tolerance on input transition column sums.
pub const TRANSITION_TOL: f64 = 1e-12;
/// Tolerance on policy row sums (policies come out of LP solves).
pub const POLICY_ROW_TOL: f64 = 1e-9;

/// Data that is either shared by every decision epoch or given per epoch.
#[derive(Debug, Clone, PartialEq)]
pub enum Stagewise<T> {
    Stationary(T),
    PerEpoch(Vec<T>),
}

impl<T> Stagewise<T> {
    pub fn at(&self, epoch: usize) -> &T {
        match self {
            Stagewise::Stationary(v) => v,
            Stagewise::PerEpoch(v) => &v[epoch],
        }
    }

    pub fn is_stationary(&self) -> bool {
        matches!(self, Stagewise::Stationary(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MdpModel {
    n: usize,
    p: usize,
    horizon: usize,
    transitions: Stagewise<Vec<Matrix>>,
    rewards: Stagewise<Matrix>,
    terminal_reward: Vec<f64>,
    action_mask: Vec<Vec<bool>>,
    discount: f64,
    caps: Option<ConstraintSpec>,
}

/// Raw parts of a model. Nothing is checked until [`MdpModel::validate`].
#[derive(Debug, Clone)]
pub struct ModelParts {
    pub n: usize,
    pub p: usize,
    pub horizon: usize,
    /// `[k]` of n×n column-stochastic matrices, or one such vector per epoch.
    pub transitions: Stagewise<Vec<Matrix>>,
    /// n×p reward matrix `r_t(s, a)`.
    pub rewards: Stagewise<Matrix>,
    pub terminal_reward: Vec<f64>,
    /// `None` means every action is available everywhere.
    pub action_mask: Option<Vec<Vec<bool>>>,
    pub discount: f64,
    pub caps: Option<ConstraintSpec>,
}

impl MdpModel {
    /// Assembles a model without checking it. Use [`MdpModel::new`] for a checked build.
    pub fn from_parts(parts: ModelParts) -> Self {
        let action_mask = parts
            .action_mask
            .unwrap_or_else(|| vec![vec![true; parts.p]; parts.n]);
        Self {
            n: parts.n,
            p: parts.p,
            horizon: parts.horizon,
            transitions: parts.transitions,
            rewards: parts.rewards,
            terminal_reward: parts.terminal_reward,
            action_mask,
            discount: parts.discount,
            caps: parts.caps,
        }
    }

    pub fn new(parts: ModelParts) -> Result<Self> {
        let model = Self::from_parts(parts);
        let report = model.validate();
        if report.is_valid() {
            Ok(model)
        } else {
            Err(Error::InvalidModel(report))
        }
    }

    pub fn to_parts(&self) -> ModelParts {
        ModelParts {
            n: self.n,
            p: self.p,
            horizon: self.horizon,
            transitions: self.transitions.clone(),
            rewards: self.rewards.clone(),
            terminal_reward: self.terminal_reward.clone(),
            action_mask: Some(self.action_mask.clone()),
            discount: self.discount,
            caps: self.caps.clone(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Number of decision epochs, `horizon - 1`.
    pub fn epochs(&self) -> usize {
        self.horizon.saturating_sub(1)
    }

    pub fn transition(&self, epoch: usize, action: usize) -> &Matrix {
        &self.transitions.at(epoch)[action]
    }

    pub fn transitions(&self) -> &Stagewise<Vec<Matrix>> {
        &self.transitions
    }

    pub fn reward(&self, epoch: usize) -> &Matrix {
        self.rewards.at(epoch)
    }

    pub fn rewards(&self) -> &Stagewise<Matrix> {
        &self.rewards
    }

    pub fn terminal_reward(&self) -> &[f64] {
        &self.terminal_reward
    }

    pub fn is_available(&self, state: usize, action: usize) -> bool {
        self.action_mask[state][action]
    }

    pub fn action_mask(&self) -> &[Vec<bool>] {
        &self.action_mask
    }

    pub fn available_actions(&self, state: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.p).filter(move |&a| self.action_mask[state][a])
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn caps(&self) -> Option<&ConstraintSpec> {
        self.caps.as_ref()
    }

    pub fn with_caps(mut self, caps: Option<ConstraintSpec>) -> Self {
        self.caps = caps;
        self
    }

    /// Checks every structural invariant and collects all violations.
    pub fn validate(&self) -> ValidationReport {
        let mut issues = Vec::new();
        if self.n == 0 {
            issues.push(Issue::EmptyDimension("n"));
        }
        if self.p == 0 {
            issues.push(Issue::EmptyDimension("p"));
        }
        if self.horizon == 0 {
            issues.push(Issue::EmptyDimension("horizon"));
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            issues.push(Issue::Discount(self.discount));
        }
        if !issues.is_empty() {
            return ValidationReport { issues };
        }
        let (n, p) = (self.n, self.p);

        let transition_sets: Vec<(Option<usize>, &Vec<Matrix>)> = match &self.transitions {
            Stagewise::Stationary(g) => vec![(None, g)],
            Stagewise::PerEpoch(gs) => {
                if gs.len() != self.epochs() {
                    issues.push(Issue::Shape(format!(
                        "transitions has {} epochs, expected {}",
                        gs.len(),
                        self.epochs()
                    )));
                }
                gs.iter().enumerate().map(|(t, g)| (Some(t), g)).collect()
            }
        };
        for (epoch, set) in transition_sets {
            if set.len() != p {
                issues.push(Issue::Shape(format!(
                    "transitions{} has {} actions, expected {p}",
                    epoch_label(epoch),
                    set.len()
                )));
                continue;
            }
            for (k, g) in set.iter().enumerate() {
                if g.rows() != n || g.cols() != n {
                    issues.push(Issue::Shape(format!(
                        "transition{} action {k} is {}x{}, expected {n}x{n}",
                        epoch_label(epoch),
                        g.rows(),
                        g.cols()
                    )));
                    continue;
                }
                for j in 0..n {
                    for i in 0..n {
                        let v = g[(i, j)];
                        if !v.is_finite() || v < 0.0 {
                            issues.push(Issue::TransitionEntry { epoch, action: k, row: i, col: j, value: v });
                        }
                    }
                    let sum = g.column_sum(j);
                    if sum.is_nan() || (sum - 1.0).abs() > TRANSITION_TOL {
                        issues.push(Issue::TransitionColumnSum { epoch, action: k, col: j, sum });
                    }
                }
            }
        }

        let reward_sets: Vec<(Option<usize>, &Matrix)> = match &self.rewards {
            Stagewise::Stationary(r) => vec![(None, r)],
            Stagewise::PerEpoch(rs) => {
                if rs.len() != self.epochs() {
                    issues.push(Issue::Shape(format!(
                        "rewards has {} epochs, expected {}",
                        rs.len(),
                        self.epochs()
                    )));
                }
                rs.iter().enumerate().map(|(t, r)| (Some(t), r)).collect()
            }
        };
        for (epoch, r) in reward_sets {
            if r.rows() != n || r.cols() != p {
                issues.push(Issue::Shape(format!(
                    "rewards{} is {}x{}, expected {n}x{p}",
                    epoch_label(epoch),
                    r.rows(),
                    r.cols()
                )));
                continue;
            }
            for s in 0..n {
                for a in 0..p {
                    if !r[(s, a)].is_finite() {
                        issues.push(Issue::NonFiniteReward { epoch, state: s, action: a });
                    }
                }
            }
        }

        if self.terminal_reward.len() != n {
            issues.push(Issue::Shape(format!(
                "terminal_reward has length {}, expected {n}",
                self.terminal_reward.len()
            )));
        } else {
            for (s, v) in self.terminal_reward.iter().enumerate() {
                if !v.is_finite() {
                    issues.push(Issue::NonFiniteTerminal { state: s });
                }
            }
        }

        if self.action_mask.len() != n || self.action_mask.iter().any(|row| row.len() != p) {
            issues.push(Issue::Shape(format!("action_mask must be {n}x{p}")));
        } else {
            for (s, row) in self.action_mask.iter().enumerate() {
                if !row.iter().any(|&m| m) {
                    issues.push(Issue::NoAvailableAction { state: s });
                }
            }
        }

        if let Some(caps) = &self.caps {
            if caps.len() != n {
                issues.push(Issue::Shape(format!("d has length {}, expected {n}", caps.len())));
            } else if let Err(Error::InvalidConstraint(msg)) = ConstraintSpec::new(caps.as_slice().to_vec()) {
                issues.push(Issue::Caps(msg));
            }
        }

        ValidationReport { issues }
    }

    /// Folds the discount factor into the rewards.
    ///
    /// Stage `t` (zero-based) rewards are multiplied by `γ^t` and the terminal
    /// reward by `γ^(N-1)`; the returned model has `γ = 1` and the same undiscounted
    /// total reward as the discounted original.
    pub fn apply_discount(&self) -> MdpModel {
        if self.discount == 1.0 {
            return self.clone();
        }
        let g = self.discount;
        let rewards = (0..self.epochs())
            .map(|t| self.reward(t).map(|v| v * g.powi(t as i32)))
            .collect();
        let scale_n = g.powi(self.epochs() as i32);
        MdpModel {
            rewards: Stagewise::PerEpoch(rewards),
            terminal_reward: self.terminal_reward.iter().map(|v| v * scale_n).collect(),
            discount: 1.0,
            ..self.clone()
        }
    }

    /// The model itself when `γ = 1`, otherwise [`MdpModel::apply_discount`].
    pub fn undiscounted(&self) -> Cow<'_, MdpModel> {
        if self.discount == 1.0 {
            Cow::Borrowed(self)
        } else {
            Cow::Owned(self.apply_discount())
        }
    }

    /// Checks that `x` is a probability vector of the right length.
    pub fn check_density(&self, x: &[f64]) -> Result<()> {
        check_density(x, self.n)
    }
}

fn epoch_label(epoch: Option<usize>) -> String {
    epoch.map(|t| format!("[t={t}]")).unwrap_or_default()
}

pub(crate) fn check_density(x: &[f64], n: usize) -> Result<()> {
    if x.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "density has length {}, model has {n} states",
            x.len()
        )));
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite() || *v < -1e-12) {
        return Err(Error::NotADensity(format!("entry {i} is {}", x[i])));
    }
    let sum: f64 = x.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::NotADensity(format!("entries sum to {sum}")));
    }
    Ok(())
}

/// A single invariant violation found by [`MdpModel::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Issue {
    EmptyDimension(&'static str),
    Discount(f64),
    Shape(String),
    TransitionEntry { epoch: Option<usize>, action: usize, row: usize, col: usize, value: f64 },
    TransitionColumnSum { epoch: Option<usize>, action: usize, col: usize, sum: f64 },
    NonFiniteReward { epoch: Option<usize>, state: usize, action: usize },
    NonFiniteTerminal { state: usize },
    NoAvailableAction { state: usize },
    Caps(String),
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::EmptyDimension(name) => write!(f, "{name} must be at least 1"),
            Issue::Discount(g) => write!(f, "discount {g} is outside (0, 1]"),
            Issue::Shape(msg) => f.write_str(msg),
            Issue::TransitionEntry { epoch, action, row, col, value } => write!(
                f,
                "transition{} action {action} entry ({row}, {col}) = {value} is not a probability",
                epoch_label(*epoch)
            ),
            Issue::TransitionColumnSum { epoch, action, col, sum } => write!(
                f,
                "transition{} action {action} column {col} sums to {sum}, expected 1",
                epoch_label(*epoch)
            ),
            Issue::NonFiniteReward { epoch, state, action } => write!(
                f,
                "reward{} at state {state} action {action} is not finite",
                epoch_label(*epoch)
            ),
            Issue::NonFiniteTerminal { state } => write!(f, "terminal reward at state {state} is not finite"),
            Issue::NoAvailableAction { state } => write!(f, "state {state} has no available action"),
            Issue::Caps(msg) => write!(f, "density caps: {msg}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.issues.is_empty() {
            return f.write_str("model is valid");
        }
        for issue in &self.issues {
            writeln!(f, "- {issue}")?;
        }
        Ok(())
    }
}

/// Per-state density caps `d`; the safe set is `{x : 0 <= x <= d, sum(x) = 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSpec {
    caps: Vec<f64>,
}

impl ConstraintSpec {
    pub fn new(caps: Vec<f64>) -> Result<Self> {
        if caps.is_empty() {
            return Err(Error::InvalidConstraint("no caps given".into()));
        }
        if let Some(i) = caps.iter().position(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::InvalidConstraint(format!("d[{i}] = {} is outside [0, 1]", caps[i])));
        }
        let total: f64 = caps.iter().sum();
        if total < 1.0 - 1e-12 {
            return Err(Error::InvalidConstraint(format!(
                "caps sum to {total} < 1, the safe density set is empty"
            )));
        }
        Ok(Self { caps })
    }

    /// Wraps caps without checking them; [`MdpModel::validate`] reports bad caps.
    pub fn unchecked(caps: Vec<f64>) -> Self {
        Self { caps }
    }

    /// Caps of 1 everywhere; the safe set is the whole simplex.
    pub fn vacuous(n: usize) -> Self {
        Self { caps: vec![1.0; n] }
    }

    pub fn len(&self) -> usize {
        self.caps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.caps.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.caps
    }

    /// Membership in the safe set, with `tol` slack on the caps and normalization.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.caps.len()
            && x.iter().zip(&self.caps).all(|(&v, &c)| v >= -tol && v <= c + tol)
            && (x.iter().sum::<f64>() - 1.0).abs() <= tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Deterministic,
    Randomized,
}

/// Randomized Markov policy: one n×p row-stochastic matrix per decision epoch,
/// `stages[t][(s, a)]` being the probability of action `a` in state `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub stages: Vec<Matrix>,
    pub kind: PolicyKind,
}

impl Policy {
    /// Deterministic policy from chosen actions `actions[t][s]`.
    pub fn deterministic(actions: &[Vec<usize>], p: usize) -> Self {
        let stages = actions
            .iter()
            .map(|row| Matrix::from_fn(row.len(), p, |s, a| if row[s] == a { 1.0 } else { 0.0 }))
            .collect();
        Self {
            stages,
            kind: PolicyKind::Deterministic,
        }
    }

    pub fn randomized(stages: Vec<Matrix>) -> Self {
        Self {
            stages,
            kind: PolicyKind::Randomized,
        }
    }

    /// Checks shape, row-stochasticity, masking and the deterministic tag against `model`.
    pub fn check(&self, model: &MdpModel) -> Result<()> {
        if self.stages.len() != model.epochs() {
            return Err(Error::DimensionMismatch(format!(
                "policy has {} stages, model has {} decision epochs",
                self.stages.len(),
                model.epochs()
            )));
        }
        for (t, q) in self.stages.iter().enumerate() {
            if q.rows() != model.n() || q.cols() != model.p() {
                return Err(Error::DimensionMismatch(format!(
                    "policy stage {t} is {}x{}, model is {}x{}",
                    q.rows(),
                    q.cols(),
                    model.n(),
                    model.p()
                )));
            }
            for s in 0..model.n() {
                let row = q.row(s);
                if row.iter().any(|v| !v.is_finite() || *v < -POLICY_ROW_TOL) {
                    return Err(Error::InvalidPolicy(format!("stage {t} state {s} has a negative entry")));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > POLICY_ROW_TOL {
                    return Err(Error::InvalidPolicy(format!("stage {t} state {s} row sums to {sum}")));
                }
                for (a, &v) in row.iter().enumerate() {
                    if !model.is_available(s, a) && v != 0.0 {
                        return Err(Error::InvalidPolicy(format!(
                            "stage {t} state {s} puts mass {v} on masked action {a}"
                        )));
                    }
                }
                if self.kind == PolicyKind::Deterministic && !row.iter().all(|&v| v == 0.0 || v == 1.0) {
                    return Err(Error::InvalidPolicy(format!(
                        "stage {t} state {s} is randomized in a deterministic policy"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Reward-to-go vectors of a synthesized policy, `u[t]` for `t = 0..N`, with
/// `u[N-1]` equal to the terminal reward.
#[derive(Debug, Clone, PartialEq)]
pub struct StageValues {
    pub u: Vec<Vec<f64>>,
    /// Optimal stage-LP objective per decision epoch.
    pub maximin_objectives: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn two_state_parts() -> ModelParts {
        ModelParts {
            n: 2,
            p: 2,
            horizon: 3,
            transitions: Stagewise::Stationary(vec![
                Matrix::identity(2),
                Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap(),
            ]),
            rewards: Stagewise::Stationary(Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap()),
            terminal_reward: vec![0.0, 1.0],
            action_mask: None,
            discount: 1.0,
            caps: None,
        }
    }

    #[test]
    fn identity_model_is_valid() {
        let mut parts = two_state_parts();
        parts.transitions = Stagewise::Stationary(vec![Matrix::identity(2), Matrix::identity(2)]);
        assert!(MdpModel::from_parts(parts).validate().is_valid());
    }

    #[test]
    fn bad_column_sum_is_located() {
        let mut parts = two_state_parts();
        parts.transitions = Stagewise::PerEpoch(vec![
            vec![Matrix::identity(2), Matrix::identity(2)],
            vec![
                Matrix::identity(2),
                Matrix::from_rows(&[vec![1.0, 0.4], vec![0.0, 0.5]]).unwrap(),
            ],
        ]);
        let report = MdpModel::from_parts(parts).validate();
        assert_eq!(report.issues.len(), 1);
        match &report.issues[0] {
            Issue::TransitionColumnSum { epoch, action, col, sum } => {
                assert_eq!((*epoch, *action, *col), (Some(1), 1, 1));
                assert!((sum - 0.9).abs() < 1e-15);
            }
            other => panic!("unexpected issue {other:?}"),
        }
    }

    #[test]
    fn fully_masked_state_is_reported() {
        let mut parts = two_state_parts();
        parts.n = 4;
        parts.transitions = Stagewise::Stationary(vec![Matrix::identity(4), Matrix::identity(4)]);
        parts.rewards = Stagewise::Stationary(Matrix::zeros(4, 2));
        parts.terminal_reward = vec![0.0; 4];
        let mut mask = vec![vec![true; 2]; 4];
        mask[3] = vec![false, false];
        parts.action_mask = Some(mask);
        let report = MdpModel::from_parts(parts).validate();
        assert_eq!(report.issues, vec![Issue::NoAvailableAction { state: 3 }]);
        assert!(report.to_string().contains("state 3 has no available action"));
    }

    #[test]
    fn discount_of_one_is_identity() {
        let model = MdpModel::new(two_state_parts()).unwrap();
        assert_eq!(model.apply_discount(), model);
    }

    #[test]
    fn discount_scales_by_epoch() {
        let mut parts = two_state_parts();
        parts.rewards = Stagewise::Stationary(Matrix::from_rows(&[vec![4.0, 4.0], vec![4.0, 4.0]]).unwrap());
        parts.discount = 0.5;
        let scaled = MdpModel::new(parts).unwrap().apply_discount();
        // second decision epoch (one-based t = 2): 0.5^1 * 4
        assert_eq!(scaled.reward(1)[(0, 0)], 2.0);
        assert_eq!(scaled.reward(0)[(0, 0)], 4.0);
        assert_eq!(scaled.terminal_reward(), &[0.0, 0.25]);
        assert_eq!(scaled.discount(), 1.0);
    }

    #[test]
    fn caps_must_cover_a_density() {
        assert!(ConstraintSpec::new(vec![0.3, 0.3]).is_err());
        assert!(ConstraintSpec::new(vec![1.2, 0.3]).is_err());
        assert!(ConstraintSpec::new(vec![0.5, 0.5]).is_ok());
    }
}
