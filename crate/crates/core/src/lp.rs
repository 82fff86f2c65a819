//! Dense two-phase primal simplex.
//!
//! Problems are stated with [`LinearProgram`] (sparse rows, `=` and `<=`
//! constraints, variables either nonnegative or free with an optional finite
//! upper bound), brought to `min cᵀx, Ax = b, x >= 0` by [`standardize`], and
//! solved on a dense tableau with Bland's rule. Artificial columns are never
//! stored: they start basic, and once one leaves the basis it cannot re-enter.
//!
//! After phase 2 the final basis is refactored from the original standard-form
//! columns.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("LP dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("LP data is not finite: {0}")]
    NonFinite(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LowerBound {
    Zero,
    Free,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: Option<String>,
    pub lower: LowerBound,
    pub upper: Option<f64>,
}

/// One sparse row `Σ coeffs[i].1 · x[coeffs[i].0]  (= or <=)  rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub c: Vec<f64>,
    pub variables: Vec<Variable>,
    pub eq: Vec<Row>,
    pub ub: Vec<Row>,
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        Self {
            sense,
            c: Vec::new(),
            variables: Vec::new(),
            eq: Vec::new(),
            ub: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn add_var(&mut self, lower: LowerBound, upper: Option<f64>) -> usize {
        self.variables.push(Variable { name: None, lower, upper });
        self.c.push(0.0);
        self.variables.len() - 1
    }

    pub fn add_named_var(&mut self, name: impl Into<String>, lower: LowerBound, upper: Option<f64>) -> usize {
        let j = self.add_var(lower, upper);
        self.variables[j].name = Some(name.into());
        j
    }

    /// Adds `count` variables with the same bounds and returns the first index.
    pub fn add_vars(&mut self, count: usize, lower: LowerBound) -> usize {
        let first = self.variables.len();
        for _ in 0..count {
            self.add_var(lower, None);
        }
        first
    }

    pub fn set_cost(&mut self, var: usize, cost: f64) {
        self.c[var] = cost;
    }

    pub fn clear_objective(&mut self) {
        self.c.iter_mut().for_each(|c| *c = 0.0);
    }

    pub fn add_eq(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.eq.push(Row { coeffs, rhs });
    }

    pub fn add_le(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.ub.push(Row { coeffs, rhs });
    }

    pub fn add_ge(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        let coeffs = coeffs.into_iter().map(|(j, v)| (j, -v)).collect();
        self.ub.push(Row { coeffs, rhs: -rhs });
    }

    pub fn check(&self) -> Result<(), LpError> {
        let nv = self.variables.len();
        if self.c.len() != nv {
            return Err(LpError::DimensionMismatch(format!(
                "{} costs for {nv} variables",
                self.c.len()
            )));
        }
        if let Some(j) = self.c.iter().position(|v| !v.is_finite()) {
            return Err(LpError::NonFinite(format!("cost of variable {j}")));
        }
        for (kind, rows) in [("equality", &self.eq), ("inequality", &self.ub)] {
            for (i, row) in rows.iter().enumerate() {
                if !row.rhs.is_finite() {
                    return Err(LpError::NonFinite(format!("{kind} row {i} right-hand side")));
                }
                for &(j, v) in &row.coeffs {
                    if j >= nv {
                        return Err(LpError::DimensionMismatch(format!(
                            "{kind} row {i} references variable {j} of {nv}"
                        )));
                    }
                    if !v.is_finite() {
                        return Err(LpError::NonFinite(format!("{kind} row {i} coefficient of {j}")));
                    }
                }
            }
        }
        for (j, v) in self.variables.iter().enumerate() {
            if let Some(u) = v.upper {
                if !u.is_finite() {
                    return Err(LpError::NonFinite(format!("upper bound of variable {j}")));
                }
            }
        }
        Ok(())
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of any constraint or bound at `x`.
    pub fn max_residual(&self, x: &[f64]) -> f64 {
        let row_value = |row: &Row| row.coeffs.iter().map(|&(j, v)| v * x[j]).sum::<f64>();
        let eq = self.eq.iter().map(|r| (row_value(r) - r.rhs).abs());
        let ub = self.ub.iter().map(|r| (row_value(r) - r.rhs).max(0.0));
        let bounds = self.variables.iter().zip(x).map(|(v, &xj)| {
            let lo = match v.lower {
                LowerBound::Zero => (-xj).max(0.0),
                LowerBound::Free => 0.0,
            };
            let hi = v.upper.map_or(0.0, |u| (xj - u).max(0.0));
            lo.max(hi)
        });
        eq.chain(ub).chain(bounds).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Option<Vec<f64>>,
    pub objective: Option<f64>,
    pub iterations: usize,
    /// Phase-1 optimum: the total artificial mass left when phase 1 stopped.
    pub phase_one_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Smallest tableau entry accepted as a pivot.
    pub pivot_tol: f64,
    /// Phase-1 optimum above this means infeasible.
    pub feasibility_tol: f64,
    /// Reduced costs above `-optimality_tol` count as nonnegative.
    pub optimality_tol: f64,
    /// Defaults to `50 * (rows + cols)` of the standard form.
    pub max_iterations: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            pivot_tol: 1e-9,
            feasibility_tol: 1e-8,
            optimality_tol: 1e-9,
            max_iterations: None,
        }
    }
}

/// How an original variable maps onto standard-form columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColumnMap {
    pub positive: usize,
    /// Set for free variables, which are split as `x = x⁺ - x⁻`.
    pub negative: Option<usize>,
}

/// `min cᵀx, Ax = b, x >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardForm {
    pub rows: usize,
    pub cols: usize,
    /// Row-major `rows × cols`.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub columns: Vec<ColumnMap>,
    /// `+1` if the original problem minimizes, `-1` if it maximizes.
    pub objective_sign: f64,
    pub slack_count: usize,
    /// An empty row with a nonzero right-hand side was found.
    pub trivially_infeasible: bool,
}

impl StandardForm {
    /// Maps a standard-form point back onto the original variables.
    pub fn recover(&self, xs: &[f64]) -> Vec<f64> {
        self.columns
            .iter()
            .map(|m| xs[m.positive] - m.negative.map_or(0.0, |k| xs[k]))
            .collect()
    }
}

pub fn standardize(lp: &LinearProgram) -> Result<StandardForm, LpError> {
    lp.check()?;
    const EMPTY_TOL: f64 = 1e-12;

    let mut columns = Vec::with_capacity(lp.num_vars());
    let mut cols = 0;
    for v in &lp.variables {
        let positive = cols;
        cols += 1;
        let negative = match v.lower {
            LowerBound::Zero => None,
            LowerBound::Free => {
                cols += 1;
                Some(cols - 1)
            }
        };
        columns.push(ColumnMap { positive, negative });
    }

    let mut trivially_infeasible = false;
    let mut dense_rows: Vec<(Vec<f64>, f64, bool)> = Vec::new();
    let expand = |coeffs: &[(usize, f64)], width: usize| {
        let mut row = vec![0.0; width];
        for &(j, v) in coeffs {
            let m = columns[j];
            row[m.positive] += v;
            if let Some(k) = m.negative {
                row[k] -= v;
            }
        }
        row
    };
    for row in &lp.eq {
        let dense = expand(&row.coeffs, cols);
        if dense.iter().all(|v| v.abs() <= EMPTY_TOL) {
            trivially_infeasible |= row.rhs.abs() > EMPTY_TOL;
            continue;
        }
        dense_rows.push((dense, row.rhs, false));
    }
    for row in &lp.ub {
        let dense = expand(&row.coeffs, cols);
        if dense.iter().all(|v| v.abs() <= EMPTY_TOL) {
            trivially_infeasible |= row.rhs < -EMPTY_TOL;
            continue;
        }
        dense_rows.push((dense, row.rhs, true));
    }
    for (j, v) in lp.variables.iter().enumerate() {
        if let Some(u) = v.upper {
            let mut coeffs = vec![0.0; cols];
            let m = columns[j];
            coeffs[m.positive] = 1.0;
            if let Some(k) = m.negative {
                coeffs[k] = -1.0;
            }
            dense_rows.push((coeffs, u, true));
        }
    }

    let slack_count = dense_rows.iter().filter(|r| r.2).count();
    let total = cols + slack_count;
    let rows = dense_rows.len();
    let mut a = vec![0.0; rows * total];
    let mut b = Vec::with_capacity(rows);
    let mut next_slack = cols;
    for (i, (dense, rhs, has_slack)) in dense_rows.into_iter().enumerate() {
        a[i * total..i * total + cols].copy_from_slice(&dense);
        if has_slack {
            a[i * total + next_slack] = 1.0;
            next_slack += 1;
        }
        b.push(rhs);
    }

    let objective_sign = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut c = vec![0.0; total];
    for (j, m) in columns.iter().enumerate() {
        c[m.positive] = objective_sign * lp.c[j];
        if let Some(k) = m.negative {
            c[k] = -objective_sign * lp.c[j];
        }
    }

    Ok(StandardForm {
        rows,
        cols: total,
        a,
        b,
        c,
        columns,
        objective_sign,
        slack_count,
        trivially_infeasible,
    })
}

pub fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    solve_with(lp, &SolverOptions::default(), None)
}

/// Solves `lp`; when `trace` is given, every pivot and the tableau after it is
/// written there.
pub fn solve_with(
    lp: &LinearProgram,
    options: &SolverOptions,
    trace: Option<&mut dyn Write>,
) -> Result<LpSolution, LpError> {
    let sf = standardize(lp)?;
    if sf.trivially_infeasible {
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            x: None,
            objective: None,
            iterations: 0,
            phase_one_residual: f64::INFINITY,
        });
    }
    let mut tableau = Tableau::new(&sf, *options, trace);
    let outcome = tableau.run(&sf);
    let iterations = tableau.iterations;
    let phase_one_residual = tableau.phase_one_residual;
    let not_optimal = |status| LpSolution {
        status,
        x: None,
        objective: None,
        iterations,
        phase_one_residual,
    };
    match outcome {
        Outcome::Optimal => {}
        Outcome::Infeasible => return Ok(not_optimal(LpStatus::Infeasible)),
        Outcome::Unbounded => return Ok(not_optimal(LpStatus::Unbounded)),
        Outcome::Stalled => return Ok(not_optimal(LpStatus::Stalled)),
    }
    let xs = tableau.refined_point(&sf);
    let x = sf.recover(&xs);
    let objective = lp.objective_at(&x);
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x: Some(x),
        objective: Some(objective),
        iterations,
        phase_one_residual,
    })
}

enum Outcome {
    Optimal,
    Infeasible,
    Unbounded,
    Stalled,
}

enum Phase {
    One,
    Two,
}

struct Tableau<'w> {
    opts: SolverOptions,
    /// Structural column count (artificials are implicit).
    width: usize,
    /// Row-major rows × width, holding `B⁻¹A`.
    t: Vec<f64>,
    rhs: Vec<f64>,
    /// Basic variable per row; values `>= width` are artificial.
    basis: Vec<usize>,
    /// Original standard-form row index of each tableau row.
    row_origin: Vec<usize>,
    is_basic: Vec<bool>,
    reduced: Vec<f64>,
    neg_objective: f64,
    iterations: usize,
    max_iterations: usize,
    phase_one_residual: f64,
    trace: Option<&'w mut dyn Write>,
}

impl<'w> Tableau<'w> {
    fn new(sf: &StandardForm, opts: SolverOptions, trace: Option<&'w mut dyn Write>) -> Self {
        let (m, w) = (sf.rows, sf.cols);
        let mut t = sf.a.clone();
        let mut rhs = sf.b.clone();
        for i in 0..m {
            if rhs[i] < 0.0 {
                rhs[i] = -rhs[i];
                t[i * w..(i + 1) * w].iter_mut().for_each(|v| *v = -*v);
            }
        }
        Self {
            opts,
            width: w,
            t,
            rhs,
            basis: (w..w + m).collect(),
            row_origin: (0..m).collect(),
            is_basic: vec![false; w],
            reduced: vec![0.0; w],
            neg_objective: 0.0,
            iterations: 0,
            max_iterations: opts.max_iterations.unwrap_or(50 * (m + w)),
            phase_one_residual: 0.0,
            trace,
        }
    }

    fn rows(&self) -> usize {
        self.rhs.len()
    }

    fn run(&mut self, sf: &StandardForm) -> Outcome {
        // Phase 1: minimize the sum of artificials.
        let w = self.width;
        self.reduced = vec![0.0; w];
        for i in 0..self.rows() {
            for j in 0..w {
                self.reduced[j] -= self.t[i * w + j];
            }
        }
        self.neg_objective = -self.rhs.iter().sum::<f64>();
        match self.iterate(Phase::One) {
            Outcome::Optimal => {}
            Outcome::Unbounded => unreachable!("phase 1 objective is bounded below by zero"),
            other => return other,
        }
        self.phase_one_residual = self
            .basis
            .iter()
            .zip(&self.rhs)
            .filter(|(&b, _)| b >= w)
            .map(|(_, &v)| v.max(0.0))
            .sum();
        if self.phase_one_residual > self.opts.feasibility_tol {
            return Outcome::Infeasible;
        }
        self.drive_out_artificials();

        // Phase 2: original costs.
        for j in 0..w {
            let mut d = sf.c[j];
            for i in 0..self.rows() {
                d -= sf.c[self.basis[i]] * self.t[i * w + j];
            }
            self.reduced[j] = d;
        }
        self.neg_objective = -(0..self.rows()).map(|i| sf.c[self.basis[i]] * self.rhs[i]).sum::<f64>();
        self.iterate(Phase::Two)
    }

    fn iterate(&mut self, phase: Phase) -> Outcome {
        let w = self.width;
        loop {
            // Bland: lowest-index improving column.
            let Some(enter) = (0..w).find(|&j| !self.is_basic[j] && self.reduced[j] < -self.opts.optimality_tol)
            else {
                return Outcome::Optimal;
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows() {
                let a = self.t[i * w + enter];
                if a <= self.opts.pivot_tol {
                    continue;
                }
                let ratio = self.rhs[i].max(0.0) / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((r, best)) => {
                        let tie = (ratio - best).abs() <= 1e-12 * best.abs().max(1.0);
                        if (ratio < best && !tie) || (tie && self.basis[i] < self.basis[r]) {
                            Some((i, ratio))
                        } else {
                            Some((r, best))
                        }
                    }
                };
            }
            let Some((row, _)) = leave else {
                return match phase {
                    Phase::One => unreachable!("phase 1 ratio test always finds a row"),
                    Phase::Two => Outcome::Unbounded,
                };
            };
            if self.iterations >= self.max_iterations {
                return Outcome::Stalled;
            }
            self.pivot(row, enter);
            self.iterations += 1;
            if self.trace.is_some() {
                let label = match phase {
                    Phase::One => 1,
                    Phase::Two => 2,
                };
                self.dump(label, row, enter);
            }
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let w = self.width;
        let piv = self.t[row * w + col];
        let inv = 1.0 / piv;
        for v in &mut self.t[row * w..(row + 1) * w] {
            *v *= inv;
        }
        self.rhs[row] *= inv;
        self.t[row * w + col] = 1.0;

        let pivot_row: Vec<f64> = self.t[row * w..(row + 1) * w].to_vec();
        let pivot_rhs = self.rhs[row];
        for i in 0..self.rows() {
            if i == row {
                continue;
            }
            let factor = self.t[i * w + col];
            if factor == 0.0 {
                continue;
            }
            let target = &mut self.t[i * w..(i + 1) * w];
            for (tv, &pv) in target.iter_mut().zip(&pivot_row) {
                if pv != 0.0 {
                    *tv -= factor * pv;
                }
            }
            target[col] = 0.0;
            self.rhs[i] -= factor * pivot_rhs;
            if self.rhs[i] < 0.0 && self.rhs[i] > -self.opts.feasibility_tol {
                self.rhs[i] = 0.0;
            }
        }
        let factor = self.reduced[col];
        if factor != 0.0 {
            for (d, &pv) in self.reduced.iter_mut().zip(&pivot_row) {
                *d -= factor * pv;
            }
            self.reduced[col] = 0.0;
            self.neg_objective -= factor * pivot_rhs;
        }

        let old = self.basis[row];
        if old < w {
            self.is_basic[old] = false;
        }
        self.basis[row] = col;
        self.is_basic[col] = true;
    }

    /// Pivots zero-level artificials out of the basis; rows where that is
    /// impossible are linearly dependent on the others and get dropped.
    fn drive_out_artificials(&mut self) {
        let w = self.width;
        let mut i = 0;
        while i < self.rows() {
            if self.basis[i] < w {
                i += 1;
                continue;
            }
            let col = (0..w).find(|&j| !self.is_basic[j] && self.t[i * w + j].abs() > self.opts.pivot_tol);
            match col {
                Some(j) => {
                    self.pivot(i, j);
                    i += 1;
                }
                None => {
                    self.t.drain(i * w..(i + 1) * w);
                    self.rhs.remove(i);
                    self.basis.remove(i);
                    self.row_origin.remove(i);
                }
            }
        }
    }

    /// Basic solution recomputed from the original columns of the final basis.
    fn refined_point(&self, sf: &StandardForm) -> Vec<f64> {
        let m = self.rows();
        let mut xs = vec![0.0; sf.cols];
        for (i, &b) in self.basis.iter().enumerate() {
            xs[b] = self.rhs[i];
        }
        if m == 0 {
            return xs;
        }
        let basis_matrix = DMatrix::from_fn(m, m, |r, k| sf.a[self.row_origin[r] * sf.cols + self.basis[k]]);
        let rhs = DVector::from_fn(m, |r, _| sf.b[self.row_origin[r]]);
        if let Some(sol) = basis_matrix.lu().solve(&rhs) {
            if sol.iter().all(|v| v.is_finite() && *v > -self.opts.feasibility_tol) {
                for (k, &b) in self.basis.iter().enumerate() {
                    xs[b] = sol[k].max(0.0);
                }
            }
        }
        xs
    }

    fn dump(&mut self, phase: u8, row: usize, col: usize) {
        let w = self.width;
        let objective = -self.neg_objective;
        let Some(out) = self.trace.as_mut() else { return };
        let _ = writeln!(
            out,
            "phase {phase} iter {} enter x{col} at row {row} objective {objective:.12e}",
            self.iterations
        );
        for i in 0..self.rhs.len() {
            let cells: Vec<String> = self.t[i * w..(i + 1) * w].iter().map(|v| format!("{v:.6}")).collect();
            let _ = writeln!(out, "  [b={:>4}] {} | {:.9}", self.basis[i], cells.join(" "), self.rhs[i]);
        }
        let cells: Vec<String> = self.reduced.iter().map(|v| format!("{v:.6}")).collect();
        let _ = writeln!(out, "  [  d   ] {}", cells.join(" "));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_slack_standard_form() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_var(LowerBound::Zero, None);
        lp.set_cost(x, 1.0);
        lp.add_le(vec![(x, 1.0)], 3.0);
        let sf = standardize(&lp).unwrap();
        assert_eq!((sf.rows, sf.cols, sf.slack_count), (1, 2, 1));
        assert_eq!(sf.a, vec![1.0, 1.0]);
        assert_eq!(sf.b, vec![3.0]);
        assert_eq!(sf.c, vec![-1.0, 0.0]);
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective.unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn free_variable_split_round_trips() {
        let mut lp = LinearProgram::new(Sense::Minimize);
        let _ = lp.add_var(LowerBound::Zero, None);
        let z = lp.add_var(LowerBound::Free, None);
        let sf = standardize(&lp).unwrap();
        let m = sf.columns[z];
        let neg = m.negative.expect("free variable is split");
        let mut xs = vec![0.0; sf.cols];
        xs[m.positive] = 1.25;
        xs[neg] = 4.0;
        assert_eq!(sf.recover(&xs)[z], -2.75);
    }

    #[test]
    fn upper_bounds_become_rows() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_var(LowerBound::Zero, Some(2.5));
        lp.set_cost(x, 1.0);
        let sol = solve(&lp).unwrap();
        assert!((sol.objective.unwrap() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn empty_infeasible_row_is_caught_in_presolve() {
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_var(LowerBound::Zero, None);
        lp.add_eq(vec![(x, 0.0)], 1.0);
        let sf = standardize(&lp).unwrap();
        assert!(sf.trivially_infeasible);
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn redundant_equalities_are_dropped() {
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_var(LowerBound::Zero, None);
        let y = lp.add_var(LowerBound::Zero, None);
        lp.set_cost(x, 1.0);
        lp.set_cost(y, 2.0);
        lp.add_eq(vec![(x, 1.0), (y, 1.0)], 1.0);
        lp.add_eq(vec![(x, 2.0), (y, 2.0)], 2.0);
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn iteration_cap_reports_stalled() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_var(LowerBound::Zero, None);
        let y = lp.add_var(LowerBound::Zero, None);
        lp.set_cost(x, 1.0);
        lp.set_cost(y, 1.0);
        lp.add_le(vec![(x, 1.0), (y, 2.0)], 4.0);
        lp.add_le(vec![(x, 3.0), (y, 1.0)], 6.0);
        let opts = SolverOptions {
            max_iterations: Some(1),
            ..SolverOptions::default()
        };
        assert_eq!(solve_with(&lp, &opts, None).unwrap().status, LpStatus::Stalled);
    }

    #[test]
    fn trace_lists_pivots() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_var(LowerBound::Zero, None);
        let y = lp.add_var(LowerBound::Zero, None);
        lp.set_cost(y, 1.0);
        lp.add_le(vec![(x, 1.0), (y, 1.0)], 3.0);
        let mut buf = Vec::new();
        solve_with(&lp, &SolverOptions::default(), Some(&mut buf)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("phase 1 iter 1"));
        assert!(text.contains("phase 2"));
    }

    #[test]
    fn bad_variable_reference_is_a_dimension_error() {
        let mut lp = LinearProgram::new(Sense::Minimize);
        lp.add_var(LowerBound::Zero, None);
        lp.add_le(vec![(3, 1.0)], 1.0);
        assert!(matches!(solve(&lp), Err(LpError::DimensionMismatch(_))));
    }
}
