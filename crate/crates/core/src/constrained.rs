//! Constrained backward induction.
//!
//! At every decision epoch `t` (last to first) the synthesizer picks the
//! randomized decision rule `Q` that maximizes the worst-case reward-to-go
//! `min_{x ∈ X} xᵀ(r_t(Q) + M_t(Q)ᵀ U_{t+1})` over the safe set
//! `X = {x : 0 <= x <= d, 1ᵀx = 1}`, restricted to rules whose closed-loop matrix
//! maps all of `X` back under the caps. The inner minimum is replaced by its LP
//! dual and the invariance condition by its linear certificate
//! (`K = M + S + s1ᵀ`, `s + d >= Kd`, `S, K >= 0`), which makes each stage a
//! single LP. `U_t` is then the chosen rule's own reward-to-go, so `x1ᵀU_1` is
//! both a lower bound on the constrained optimum and the exact value of the
//! returned policy from `x1`.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, LowerBound, LpStatus, Sense, SolverOptions};
use crate::matrix::{dot, Matrix};
use crate::model::{ConstraintSpec, MdpModel, Policy, StageValues};
use crate::unconstrained::{backward_induction, ensure_valid};

/// Closed-loop transition matrix `M_t(Q)[i][j] = Σ_k G_{t,k}[i][j] Q[j][k]`.
pub fn closed_loop_transition(model: &MdpModel, epoch: usize, q: &Matrix) -> Result<Matrix> {
    check_rule_shape(model, q)?;
    let n = model.n();
    let mut m = Matrix::zeros(n, n);
    for k in 0..model.p() {
        let g = model.transition(epoch, k);
        for j in 0..n {
            let w = q[(j, k)];
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                m[(i, j)] += g[(i, j)] * w;
            }
        }
    }
    Ok(m)
}

/// Expected stage reward per state, `r_t(Q)[s] = Σ_a R_t[s][a] Q[s][a]`.
pub fn policy_reward(model: &MdpModel, epoch: usize, q: &Matrix) -> Result<Vec<f64>> {
    check_rule_shape(model, q)?;
    let r = model.reward(epoch);
    Ok((0..model.n()).map(|s| dot(r.row(s), q.row(s))).collect())
}

/// Reward-to-go of decision rule `q` at `epoch`: `r_t(Q) + M_t(Q)ᵀ next`.
pub fn rule_value(model: &MdpModel, epoch: usize, q: &Matrix, next: &[f64]) -> Result<Vec<f64>> {
    let m = closed_loop_transition(model, epoch, q)?;
    let r = policy_reward(model, epoch, q)?;
    Ok(r.iter().zip(m.tr_mul_vec(next)).map(|(a, b)| a + b).collect())
}

fn check_rule_shape(model: &MdpModel, q: &Matrix) -> Result<()> {
    if q.rows() != model.n() || q.cols() != model.p() {
        return Err(Error::DimensionMismatch(format!(
            "decision rule is {}x{}, model is {}x{}",
            q.rows(),
            q.cols(),
            model.n(),
            model.p()
        )));
    }
    Ok(())
}

/// Variable and row positions inside a stage LP.
///
/// Variables: `Q` (n·p, >= 0), `y` (n, >= 0), `z` (free), `r` (n, free),
/// `M` (n², free), `S` (n², >= 0), `s` (n, free), `K` (n², >= 0); matrices row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageLpLayout {
    pub n: usize,
    pub p: usize,
    pub q: Range<usize>,
    pub y: Range<usize>,
    pub z: usize,
    pub r: Range<usize>,
    pub m: Range<usize>,
    pub slack_matrix: Range<usize>,
    pub shift: Range<usize>,
    pub k: Range<usize>,
    /// Equality rows `M = Σ_k G_k ⊙ (1 (Q e_k)ᵀ)`.
    pub rows_m_def: Range<usize>,
    /// Equality rows `r = (R ⊙ Q) 1`.
    pub rows_r_def: Range<usize>,
    /// Equality rows `K = M + S + s1ᵀ`.
    pub rows_k_def: Range<usize>,
    /// Equality rows `Q1 = 1`.
    pub rows_stochastic: Range<usize>,
    /// Equality rows `Q[s][a] = 0` for masked actions.
    pub rows_mask: Range<usize>,
    /// Inequality rows `-y + z1 <= r + MᵀU`.
    pub rows_dual: Range<usize>,
    /// Inequality rows `Kd <= s + d`.
    pub rows_safety: Range<usize>,
}

impl StageLpLayout {
    fn new(n: usize, p: usize) -> Self {
        let mut next = 0;
        let mut block = |len: usize| {
            let r = next..next + len;
            next += len;
            r
        };
        let q = block(n * p);
        let y = block(n);
        let z = block(1).start;
        let r = block(n);
        let m = block(n * n);
        let slack_matrix = block(n * n);
        let shift = block(n);
        let k = block(n * n);
        let empty = 0..0;
        Self {
            n,
            p,
            q,
            y,
            z,
            r,
            m,
            slack_matrix,
            shift,
            k,
            rows_m_def: empty.clone(),
            rows_r_def: empty.clone(),
            rows_k_def: empty.clone(),
            rows_stochastic: empty.clone(),
            rows_mask: empty.clone(),
            rows_dual: empty.clone(),
            rows_safety: empty,
        }
    }

    pub fn width(&self) -> usize {
        self.k.end
    }

    pub fn q_var(&self, s: usize, a: usize) -> usize {
        self.q.start + s * self.p + a
    }

    pub fn m_var(&self, i: usize, j: usize) -> usize {
        self.m.start + i * self.n + j
    }

    pub fn slack_var(&self, i: usize, j: usize) -> usize {
        self.slack_matrix.start + i * self.n + j
    }

    pub fn k_var(&self, i: usize, j: usize) -> usize {
        self.k.start + i * self.n + j
    }

    /// Reads the decision rule out of an LP point, clipping round-off so that
    /// every row is an exact distribution over available actions.
    pub fn extract_rule(&self, model: &MdpModel, x: &[f64]) -> Matrix {
        let mut q = Matrix::from_fn(self.n, self.p, |s, a| {
            if model.is_available(s, a) {
                x[self.q_var(s, a)].max(0.0)
            } else {
                0.0
            }
        });
        for s in 0..self.n {
            let row = q.row_mut(s);
            let sum: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= sum);
        }
        q
    }
}

/// Stage LP whose optimum is `max_{Q ∈ C} min_{x ∈ X} xᵀ(r_t(Q) + M_t(Q)ᵀ next)`.
/// Rewards are used as stored; the synthesis drivers apply the discount.
pub fn build_stage_lp(
    model: &MdpModel,
    caps: &ConstraintSpec,
    epoch: usize,
    next: &[f64],
) -> Result<(LinearProgram, StageLpLayout)> {
    let (n, p) = (model.n(), model.p());
    if caps.len() != n || next.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "stage LP needs caps and reward-to-go of length {n}"
        )));
    }
    let d = caps.as_slice();
    let mut layout = StageLpLayout::new(n, p);
    let mut lp = LinearProgram::new(Sense::Maximize);
    let free = |block: &Range<usize>, j: usize| block.contains(&j);
    for j in 0..layout.width() {
        let is_free = j == layout.z || free(&layout.r, j) || free(&layout.m, j) || free(&layout.shift, j);
        let lower = if is_free { LowerBound::Free } else { LowerBound::Zero };
        let name = variable_name(&layout, j);
        lp.add_named_var(name, lower, None);
    }
    for (i, &cap) in d.iter().enumerate() {
        lp.set_cost(layout.y.start + i, -cap);
    }
    lp.set_cost(layout.z, 1.0);

    let g: Vec<&Matrix> = (0..p).map(|k| model.transition(epoch, k)).collect();
    let reward = model.reward(epoch);

    let start = lp.eq.len();
    for i in 0..n {
        for j in 0..n {
            let mut row = vec![(layout.m_var(i, j), 1.0)];
            for (k, gk) in g.iter().enumerate() {
                if gk[(i, j)] != 0.0 {
                    row.push((layout.q_var(j, k), -gk[(i, j)]));
                }
            }
            lp.add_eq(row, 0.0);
        }
    }
    layout.rows_m_def = start..lp.eq.len();

    let start = lp.eq.len();
    for s in 0..n {
        let mut row = vec![(layout.r.start + s, 1.0)];
        for a in 0..p {
            if reward[(s, a)] != 0.0 {
                row.push((layout.q_var(s, a), -reward[(s, a)]));
            }
        }
        lp.add_eq(row, 0.0);
    }
    layout.rows_r_def = start..lp.eq.len();

    let start = lp.eq.len();
    for i in 0..n {
        for j in 0..n {
            lp.add_eq(
                vec![
                    (layout.k_var(i, j), 1.0),
                    (layout.m_var(i, j), -1.0),
                    (layout.slack_var(i, j), -1.0),
                    (layout.shift.start + i, -1.0),
                ],
                0.0,
            );
        }
    }
    layout.rows_k_def = start..lp.eq.len();

    let start = lp.eq.len();
    for s in 0..n {
        lp.add_eq((0..p).map(|a| (layout.q_var(s, a), 1.0)).collect(), 1.0);
    }
    layout.rows_stochastic = start..lp.eq.len();

    let start = lp.eq.len();
    for s in 0..n {
        for a in 0..p {
            if !model.is_available(s, a) {
                lp.add_eq(vec![(layout.q_var(s, a), 1.0)], 0.0);
            }
        }
    }
    layout.rows_mask = start..lp.eq.len();

    // -y_i + z - r_i - Σ_j M[j][i] next[j] <= 0
    let start = lp.ub.len();
    for i in 0..n {
        let mut row = vec![(layout.y.start + i, -1.0), (layout.z, 1.0), (layout.r.start + i, -1.0)];
        for (j, &u) in next.iter().enumerate() {
            if u != 0.0 {
                row.push((layout.m_var(j, i), -u));
            }
        }
        lp.add_le(row, 0.0);
    }
    layout.rows_dual = start..lp.ub.len();

    // Σ_j K[i][j] d_j - s_i <= d_i
    let start = lp.ub.len();
    for i in 0..n {
        let mut row: Vec<(usize, f64)> = (0..n)
            .filter(|&j| d[j] != 0.0)
            .map(|j| (layout.k_var(i, j), d[j]))
            .collect();
        row.push((layout.shift.start + i, -1.0));
        lp.add_le(row, d[i]);
    }
    layout.rows_safety = start..lp.ub.len();

    Ok((lp, layout))
}

fn variable_name(layout: &StageLpLayout, j: usize) -> String {
    let (n, p) = (layout.n, layout.p);
    if layout.q.contains(&j) {
        let o = j - layout.q.start;
        format!("Q[{}][{}]", o / p, o % p)
    } else if layout.y.contains(&j) {
        format!("y[{}]", j - layout.y.start)
    } else if j == layout.z {
        "z".to_string()
    } else if layout.r.contains(&j) {
        format!("r[{}]", j - layout.r.start)
    } else if layout.m.contains(&j) {
        let o = j - layout.m.start;
        format!("M[{}][{}]", o / n, o % n)
    } else if layout.slack_matrix.contains(&j) {
        let o = j - layout.slack_matrix.start;
        format!("S[{}][{}]", o / n, o % n)
    } else if layout.shift.contains(&j) {
        format!("s[{}]", j - layout.shift.start)
    } else {
        let o = j - layout.k.start;
        format!("K[{}][{}]", o / n, o % n)
    }
}

/// Optimal decision rule of one stage LP.
#[derive(Debug, Clone, PartialEq)]
pub struct StageSolution {
    pub rule: Matrix,
    /// Optimal maximin value `-dᵀy + z`.
    pub objective: f64,
    pub iterations: usize,
}

/// Solves the stage LP and extracts its decision rule.
pub fn solve_stage(
    model: &MdpModel,
    caps: &ConstraintSpec,
    epoch: usize,
    next: &[f64],
    options: &SolverOptions,
) -> Result<StageSolution> {
    let (lp, layout) = build_stage_lp(model, caps, epoch, next)?;
    let sol = lp::solve_with(&lp, options, None).map_err(|e| Error::DimensionMismatch(e.to_string()))?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(Error::InfeasibleStage {
                epoch,
                phase_one_residual: sol.phase_one_residual,
            })
        }
        LpStatus::Unbounded => return Err(Error::UnboundedStage { epoch }),
        LpStatus::Stalled => {
            return Err(Error::SolverStalled {
                epoch,
                iterations: sol.iterations,
            })
        }
    }
    let x = sol.x.expect("optimal solutions carry a point");
    Ok(StageSolution {
        rule: layout.extract_rule(model, &x),
        objective: sol.objective.expect("optimal solutions carry an objective"),
        iterations: sol.iterations,
    })
}

/// Slack allowed below the maximin value when projecting: `1e-7 · (1 + |value|)`.
pub fn optimal_set_tolerance(maximin_value: f64) -> f64 {
    1e-7 * (1.0 + maximin_value.abs())
}

/// Among stage-LP solutions within [`optimal_set_tolerance`] of `maximin_value`,
/// returns the decision rule closest to `target` in entrywise L1 distance.
pub fn project_stage(
    model: &MdpModel,
    caps: &ConstraintSpec,
    epoch: usize,
    next: &[f64],
    maximin_value: f64,
    target: &Matrix,
) -> Result<Matrix> {
    project_stage_with(model, caps, epoch, next, maximin_value, target, &SolverOptions::default())
}

pub fn project_stage_with(
    model: &MdpModel,
    caps: &ConstraintSpec,
    epoch: usize,
    next: &[f64],
    maximin_value: f64,
    target: &Matrix,
    options: &SolverOptions,
) -> Result<Matrix> {
    check_rule_shape(model, target)?;
    let (mut lp, layout) = build_stage_lp(model, caps, epoch, next)?;
    let d = caps.as_slice();

    // -dᵀy + z >= value - ε
    let mut objective_row: Vec<(usize, f64)> = (0..model.n()).map(|i| (layout.y.start + i, -d[i])).collect();
    objective_row.push((layout.z, 1.0));
    lp.add_ge(objective_row, maximin_value - optimal_set_tolerance(maximin_value));

    lp.clear_objective();
    lp.sense = Sense::Minimize;
    // |Q - target| <= e entrywise, minimize Σ e.
    for s in 0..model.n() {
        for a in 0..model.p() {
            let e = lp.add_named_var(format!("e[{s}][{a}]"), LowerBound::Zero, None);
            lp.set_cost(e, 1.0);
            let q = layout.q_var(s, a);
            lp.add_le(vec![(q, 1.0), (e, -1.0)], target[(s, a)]);
            lp.add_le(vec![(q, -1.0), (e, -1.0)], -target[(s, a)]);
        }
    }

    let sol = lp::solve_with(&lp, options, None).map_err(|e| Error::Projection {
        epoch,
        reason: e.to_string(),
    })?;
    match sol.status {
        LpStatus::Optimal => Ok(layout.extract_rule(model, sol.x.as_deref().expect("optimal point"))),
        other => Err(Error::Projection {
            epoch,
            reason: format!("solver returned {other:?}"),
        }),
    }
}

/// Constrained backward induction with the decision rule the simplex lands on.
pub fn synthesize(model: &MdpModel, caps: &ConstraintSpec) -> Result<(Policy, StageValues)> {
    run(model, caps, None, &SolverOptions::default())
}

/// Constrained backward induction where each stage's rule is projected toward
/// the unconstrained optimal rule within the maximin-optimal set.
pub fn synthesize_projected(model: &MdpModel, caps: &ConstraintSpec) -> Result<(Policy, StageValues)> {
    let (targets, _) = backward_induction(model)?;
    run(model, caps, Some(&targets.stages), &SolverOptions::default())
}

pub fn synthesize_with(
    model: &MdpModel,
    caps: &ConstraintSpec,
    projected: bool,
    options: &SolverOptions,
) -> Result<(Policy, StageValues)> {
    if projected {
        let (targets, _) = backward_induction(model)?;
        run(model, caps, Some(&targets.stages), options)
    } else {
        run(model, caps, None, options)
    }
}

fn run(
    model: &MdpModel,
    caps: &ConstraintSpec,
    targets: Option<&[Matrix]>,
    options: &SolverOptions,
) -> Result<(Policy, StageValues)> {
    ensure_valid(model)?;
    if caps.len() != model.n() {
        return Err(Error::DimensionMismatch(format!(
            "caps have length {}, model has {} states",
            caps.len(),
            model.n()
        )));
    }
    let model = &*model.undiscounted();
    let epochs = model.epochs();
    let mut u = vec![Vec::new(); epochs + 1];
    u[epochs] = model.terminal_reward().to_vec();
    let mut stages = vec![Matrix::zeros(0, 0); epochs];
    let mut objectives = vec![0.0; epochs];
    for t in (0..epochs).rev() {
        let stage = solve_stage(model, caps, t, &u[t + 1], options)?;
        let rule = match targets {
            Some(targets) => {
                project_stage_with(model, caps, t, &u[t + 1], stage.objective, &targets[t], options)?
            }
            None => stage.rule,
        };
        u[t] = rule_value(model, t, &rule, &u[t + 1])?;
        stages[t] = rule;
        objectives[t] = stage.objective;
    }
    Ok((
        Policy::randomized(stages),
        StageValues {
            u,
            maximin_objectives: objectives,
        },
    ))
}

/// Certified reward `x1ᵀU_1` for a start density inside the safe set.
pub fn lower_bound(values: &StageValues, caps: &ConstraintSpec, x1: &[f64]) -> Result<f64> {
    if x1.len() != caps.len() || values.u.first().is_none_or(|u| u.len() != x1.len()) {
        return Err(Error::DimensionMismatch("start density length".into()));
    }
    if !caps.contains(x1, 1e-9) {
        return Err(Error::OutsideSafeSet(format!("{x1:?} violates 0 <= x <= d or 1ᵀx = 1")));
    }
    Ok(dot(x1, &values.u[0]))
}
