//! Dense revised simplex for small linear programs.
//!
//! Problems are maximizations over variables with finite lower bounds and
//! optional upper bounds, subject to equality and `≤` rows. The solver keeps
//! an explicit dense basis inverse, updated by elementary row operations and
//! refactored periodically, and runs a two-phase bounded primal simplex.
//! Pricing is Dantzig's rule, falling back to Bland's rule while the
//! objective stalls on degenerate pivots; `Pricing::Bland` uses Bland's rule
//! throughout.

use log::warn;

use crate::error::{Error, Result};

/// Minimum magnitude of a pivot element.
pub const PIVOT_TOL: f64 = 1e-10;
/// Primal feasibility tolerance.
pub const FEASIBILITY_TOL: f64 = 1e-8;
/// Reduced-cost tolerance for optimality.
pub const OPTIMALITY_TOL: f64 = 1e-9;
/// Iteration cap is this many times `(variables + constraints)`.
pub const ITERATION_FACTOR: usize = 50;

const REFACTOR_EVERY: usize = 100;
const STALL_LIMIT: usize = 30;
/// Bound relaxation and minimum pivot of the two-pass ratio test.
const HARRIS_TOL: f64 = 1e-9;
const HARRIS_PIVOT_TOL: f64 = 1e-7;

/// Sparse row or column: `(index, coefficient)` pairs.
pub type SparseVec = Vec<(usize, f64)>;

/// A linear program `max c·x` s.t. `A_eq x = b_eq`, `A_le x ≤ b_le`, `l ≤ x ≤ u`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    num_vars: usize,
    objective: Vec<f64>,
    eq_rows: Vec<SparseVec>,
    eq_rhs: Vec<f64>,
    le_rows: Vec<SparseVec>,
    le_rhs: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl LpProblem {
    /// Problem with `num_vars` variables in `[0, ∞)`, zero objective and no rows.
    pub fn new(num_vars: usize) -> Self {
        LpProblem {
            num_vars,
            objective: vec![0.0; num_vars],
            eq_rows: Vec::new(),
            eq_rhs: Vec::new(),
            le_rows: Vec::new(),
            le_rhs: Vec::new(),
            lower: vec![0.0; num_vars],
            upper: vec![f64::INFINITY; num_vars],
        }
    }

    /// Builds a problem from dense matrices (rows of `a_eq` / `a_le`).
    pub fn from_dense(
        objective: Vec<f64>,
        a_eq: &[Vec<f64>],
        b_eq: &[f64],
        a_le: &[Vec<f64>],
        b_le: &[f64],
    ) -> Result<Self> {
        let n = objective.len();
        if a_eq.len() != b_eq.len() || a_le.len() != b_le.len() {
            return Err(Error::Dimension("row count and right-hand side length differ".into()));
        }
        let mut lp = LpProblem::new(n);
        lp.objective = objective;
        let sparse = |row: &Vec<f64>| -> Result<SparseVec> {
            if row.len() != n {
                return Err(Error::Dimension(format!("row has {} entries, expected {n}", row.len())));
            }
            Ok(row.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect())
        };
        for (row, &b) in a_eq.iter().zip(b_eq) {
            lp.add_eq(sparse(row)?, b);
        }
        for (row, &b) in a_le.iter().zip(b_le) {
            lp.add_le(sparse(row)?, b);
        }
        Ok(lp)
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_eq(&self) -> usize {
        self.eq_rows.len()
    }

    pub fn num_le(&self) -> usize {
        self.le_rows.len()
    }

    pub fn set_objective(&mut self, var: usize, coef: f64) {
        self.objective[var] = coef;
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    /// Adds `Σ coef·x = rhs` and returns its row index among equalities.
    pub fn add_eq(&mut self, row: SparseVec, rhs: f64) -> usize {
        self.eq_rows.push(row);
        self.eq_rhs.push(rhs);
        self.eq_rows.len() - 1
    }

    /// Adds `Σ coef·x ≤ rhs` and returns its row index among inequalities.
    pub fn add_le(&mut self, row: SparseVec, rhs: f64) -> usize {
        self.le_rows.push(row);
        self.le_rhs.push(rhs);
        self.le_rows.len() - 1
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    fn check(&self) -> Result<()> {
        let n = self.num_vars;
        if self.objective.len() != n || self.lower.len() != n || self.upper.len() != n {
            return Err(Error::Dimension("objective or bound length differs from variable count".into()));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("objective coefficients must be finite".into()));
        }
        for rows in [&self.eq_rows, &self.le_rows] {
            for row in rows {
                for &(j, v) in row {
                    if j >= n {
                        return Err(Error::Dimension(format!("column {j} out of range ({n} variables)")));
                    }
                    if !v.is_finite() {
                        return Err(Error::InvalidArgument("constraint coefficients must be finite".into()));
                    }
                }
            }
        }
        if self.eq_rhs.iter().chain(&self.le_rhs).any(|b| !b.is_finite()) {
            return Err(Error::InvalidArgument("right-hand sides must be finite".into()));
        }
        for j in 0..n {
            if !self.lower[j].is_finite() || self.upper[j].is_nan() || self.lower[j] > self.upper[j] {
                return Err(Error::InvalidArgument(format!("bad bounds on variable {j}")));
            }
        }
        Ok(())
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let dot = |row: &SparseVec| row.iter().map(|&(j, v)| v * x[j]).sum::<f64>();
        let mut worst: f64 = 0.0;
        for (row, b) in self.eq_rows.iter().zip(&self.eq_rhs) {
            worst = worst.max((dot(row) - b).abs());
        }
        for (row, b) in self.le_rows.iter().zip(&self.le_rhs) {
            worst = worst.max(dot(row) - b);
        }
        for j in 0..self.num_vars {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Present iff `status == Optimal`.
    pub x: Option<Vec<f64>>,
    /// `c·x` when optimal; NaN otherwise.
    pub objective: f64,
    /// Row prices, equalities first then inequalities, when optimal.
    pub duals: Option<Vec<f64>>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pricing {
    /// Dantzig's rule with a switch to Bland's rule during degenerate stalls.
    #[default]
    Hybrid,
    /// Bland's smallest-index rule for every pivot.
    Bland,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SolverOptions {
    pub pricing: Pricing,
    /// Overrides the default iteration cap.
    pub max_iterations: Option<usize>,
}

/// Solves `problem` with default options.
pub fn solve(problem: &LpProblem) -> Result<LpSolution> {
    solve_with(problem, SolverOptions::default())
}

pub fn solve_with(problem: &LpProblem, options: SolverOptions) -> Result<LpSolution> {
    problem.check()?;
    let mut simplex = Simplex::new(problem, options);
    simplex.run()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic,
    AtLower,
    AtUpper,
}

/// Working state. Columns are laid out as structurals, then one logical per
/// row (slack for `≤`, fixed at zero for `=`), then artificials.
struct Simplex<'a> {
    problem: &'a LpProblem,
    options: SolverOptions,
    m: usize,
    n: usize,
    /// Structural columns, indexed by row over the stacked eq/le rows.
    columns: Vec<SparseVec>,
    /// For artificial `k` (column `n + m + k`): its row and sign.
    artificials: Vec<(usize, f64)>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    rhs: Vec<f64>,
    x: Vec<f64>,
    state: Vec<VarState>,
    basis: Vec<usize>,
    binv: Vec<f64>,
    iterations: usize,
    limit: usize,
    since_refactor: usize,
}

impl<'a> Simplex<'a> {
    fn new(problem: &'a LpProblem, options: SolverOptions) -> Self {
        let n = problem.num_vars;
        let m = problem.eq_rows.len() + problem.le_rows.len();
        let mut columns = vec![Vec::new(); n];
        for (i, row) in problem.eq_rows.iter().chain(&problem.le_rows).enumerate() {
            for &(j, v) in row {
                if v != 0.0 {
                    columns[j].push((i, v));
                }
            }
        }
        let rhs: Vec<f64> = problem.eq_rhs.iter().chain(&problem.le_rhs).copied().collect();
        let limit = options
            .max_iterations
            .unwrap_or(ITERATION_FACTOR * (n + m).max(1));
        Simplex {
            problem,
            options,
            m,
            n,
            columns,
            artificials: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            cost: Vec::new(),
            rhs,
            x: Vec::new(),
            state: Vec::new(),
            basis: Vec::new(),
            binv: Vec::new(),
            iterations: 0,
            limit,
            since_refactor: 0,
        }
    }

    fn num_cols(&self) -> usize {
        self.n + self.m + self.artificials.len()
    }

    /// Calls `f(row, coef)` for each nonzero of column `j`.
    #[inline]
    fn for_column(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        if j < self.n {
            for &(i, v) in &self.columns[j] {
                f(i, v);
            }
        } else if j < self.n + self.m {
            f(j - self.n, 1.0);
        } else {
            let (i, sign) = self.artificials[j - self.n - self.m];
            f(i, sign);
        }
    }

    fn setup(&mut self) {
        let (n, m) = (self.n, self.m);
        let neq = self.problem.eq_rows.len();
        self.lower = self.problem.lower.clone();
        self.upper = self.problem.upper.clone();
        self.x = self.lower.clone();
        self.state = vec![VarState::AtLower; n];
        for i in 0..m {
            self.lower.push(0.0);
            self.upper.push(if i < neq { 0.0 } else { f64::INFINITY });
            self.x.push(0.0);
            self.state.push(VarState::AtLower);
        }
        let mut residual = self.rhs.clone();
        for j in 0..n {
            let xj = self.x[j];
            if xj != 0.0 {
                for &(i, v) in &self.columns[j] {
                    residual[i] -= v * xj;
                }
            }
        }
        self.basis = vec![usize::MAX; m];
        for i in 0..m {
            if i >= neq && residual[i] >= 0.0 {
                self.basis[i] = n + i;
                self.x[n + i] = residual[i];
                self.state[n + i] = VarState::Basic;
            } else {
                let sign = if residual[i] >= 0.0 { 1.0 } else { -1.0 };
                let col = n + m + self.artificials.len();
                self.artificials.push((i, sign));
                self.lower.push(0.0);
                self.upper.push(f64::INFINITY);
                self.x.push(residual[i].abs());
                self.state.push(VarState::Basic);
                self.basis[i] = col;
            }
        }
        // The initial basis is diagonal with ±1 entries.
        self.binv = vec![0.0; m * m];
        for i in 0..m {
            let j = self.basis[i];
            let mut d = 1.0;
            self.for_column(j, |_, v| d = v);
            self.binv[i * m + i] = 1.0 / d;
        }
    }

    fn run(&mut self) -> Result<LpSolution> {
        self.setup();
        let total = self.num_cols();
        if !self.artificials.is_empty() {
            self.cost = vec![0.0; total];
            for k in 0..self.artificials.len() {
                self.cost[self.n + self.m + k] = -1.0;
            }
            match self.optimize()? {
                LpStatus::Optimal => {}
                _ => unreachable!("phase one is bounded"),
            }
            let infeasibility: f64 = (0..self.artificials.len())
                .map(|k| self.x[self.n + self.m + k])
                .sum();
            let scale = 1.0 + self.rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            if infeasibility > FEASIBILITY_TOL * scale {
                return Ok(LpSolution {
                    status: LpStatus::Infeasible,
                    x: None,
                    objective: f64::NAN,
                    duals: None,
                    iterations: self.iterations,
                });
            }
            for k in 0..self.artificials.len() {
                let j = self.n + self.m + k;
                self.upper[j] = 0.0;
                if self.state[j] != VarState::Basic {
                    self.x[j] = 0.0;
                }
            }
        }
        self.cost = vec![0.0; total];
        self.cost[..self.n].copy_from_slice(&self.problem.objective);
        let status = self.optimize()?;
        if status == LpStatus::Unbounded {
            return Ok(LpSolution {
                status,
                x: None,
                objective: f64::NAN,
                duals: None,
                iterations: self.iterations,
            });
        }
        self.refactor();
        let x: Vec<f64> = self.x[..self.n].to_vec();
        let objective = self.problem.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        let violation = self.problem.max_violation(&x);
        if violation > FEASIBILITY_TOL {
            warn!("simplex solution violates constraints by {violation:e}");
        }
        let duals = self.duals();
        Ok(LpSolution {
            status: LpStatus::Optimal,
            x: Some(x),
            objective,
            duals: Some(duals),
            iterations: self.iterations,
        })
    }

    /// `y = c_B B⁻¹`.
    fn duals(&self) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (i, &j) in self.basis.iter().enumerate() {
            let cb = self.cost[j];
            if cb != 0.0 {
                let row = &self.binv[i * m..(i + 1) * m];
                for (yk, b) in y.iter_mut().zip(row) {
                    *yk += cb * b;
                }
            }
        }
        y
    }

    fn reduced_cost(&self, j: usize, y: &[f64]) -> f64 {
        let mut d = self.cost[j];
        self.for_column(j, |i, v| d -= y[i] * v);
        d
    }

    /// `B⁻¹ a_j`.
    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut alpha = vec![0.0; m];
        self.for_column(j, |k, v| {
            for (i, a) in alpha.iter_mut().enumerate() {
                *a += self.binv[i * m + k] * v;
            }
        });
        alpha
    }

    fn optimize(&mut self) -> Result<LpStatus> {
        let total = self.num_cols();
        let mut stall = 0usize;
        loop {
            if self.iterations >= self.limit {
                return Err(Error::IterationLimit { limit: self.limit });
            }
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor();
            }
            let bland = self.options.pricing == Pricing::Bland || stall >= STALL_LIMIT;
            let y = self.duals();
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..total {
                let st = self.state[j];
                if st == VarState::Basic || self.upper[j] <= self.lower[j] {
                    continue;
                }
                let d = self.reduced_cost(j, &y);
                let eligible = match st {
                    VarState::AtLower => d > OPTIMALITY_TOL,
                    VarState::AtUpper => d < -OPTIMALITY_TOL,
                    VarState::Basic => false,
                };
                if !eligible {
                    continue;
                }
                if bland {
                    entering = Some((j, d));
                    break;
                }
                if entering.map_or(true, |(_, best)| d.abs() > best.abs()) {
                    entering = Some((j, d));
                }
            }
            let Some((q, _)) = entering else {
                return Ok(LpStatus::Optimal);
            };
            let dir = if self.state[q] == VarState::AtLower { 1.0 } else { -1.0 };
            let alpha = self.ftran(q);

            // Ratio test; `theta` is the step length of the entering variable.
            let (theta, leave) = if self.options.pricing == Pricing::Bland {
                self.ratio_test_strict(&alpha, dir, self.upper[q] - self.lower[q])
            } else {
                self.ratio_test_harris(&alpha, dir, self.upper[q] - self.lower[q])
            };
            if !theta.is_finite() {
                return Ok(LpStatus::Unbounded);
            }
            self.iterations += 1;
            if theta > 1e-12 {
                stall = 0;
            } else {
                stall += 1;
            }
            let step = dir * theta;
            for i in 0..self.m {
                if alpha[i] != 0.0 {
                    let j = self.basis[i];
                    self.x[j] -= step * alpha[i];
                }
            }
            match leave {
                None => {
                    // Bound flip.
                    if dir > 0.0 {
                        self.x[q] = self.upper[q];
                        self.state[q] = VarState::AtUpper;
                    } else {
                        self.x[q] = self.lower[q];
                        self.state[q] = VarState::AtLower;
                    }
                }
                Some(r) => {
                    self.x[q] += step;
                    let out = self.basis[r];
                    let rate = -dir * alpha[r];
                    if rate < 0.0 {
                        self.x[out] = self.lower[out];
                        self.state[out] = VarState::AtLower;
                    } else {
                        self.x[out] = self.upper[out];
                        self.state[out] = VarState::AtUpper;
                    }
                    self.state[q] = VarState::Basic;
                    self.basis[r] = q;
                    self.pivot(r, &alpha);
                }
            }
        }
    }

    /// Step limit imposed by basic row `i`, or `None` if the row does not block.
    #[inline]
    fn row_limit(&self, i: usize, a: f64, dir: f64, slack: f64) -> Option<f64> {
        let j = self.basis[i];
        let rate = -dir * a;
        if rate < 0.0 {
            Some(((self.x[j] - self.lower[j]).max(0.0) + slack) / -rate)
        } else if self.upper[j].is_finite() {
            Some(((self.upper[j] - self.x[j]).max(0.0) + slack) / rate)
        } else {
            None
        }
    }

    /// Textbook ratio test with smallest-index tie breaking. Rows with
    /// pivots below the Harris tolerance are only considered if no other row
    /// blocks.
    fn ratio_test_strict(&self, alpha: &[f64], dir: f64, range: f64) -> (f64, Option<usize>) {
        let found = self.ratio_test_min(alpha, dir, range, HARRIS_PIVOT_TOL);
        if found.1.is_some() || found.0.is_finite() {
            return found;
        }
        self.ratio_test_min(alpha, dir, range, PIVOT_TOL)
    }

    fn ratio_test_min(&self, alpha: &[f64], dir: f64, range: f64, tol: f64) -> (f64, Option<usize>) {
        let mut theta = range;
        let mut leave: Option<usize> = None;
        for (i, &a) in alpha.iter().enumerate() {
            if a.abs() <= tol {
                continue;
            }
            let Some(limit) = self.row_limit(i, a, dir, 0.0) else { continue };
            let better = match leave {
                None => limit < theta,
                Some(r) => limit < theta || (limit <= theta && self.basis[i] < self.basis[r]),
            };
            if better {
                theta = limit;
                leave = Some(i);
            }
        }
        (theta, leave)
    }

    /// Two-pass ratio test: among rows that block within a small bound
    /// relaxation, pivot on the largest element.
    fn ratio_test_harris(&self, alpha: &[f64], dir: f64, range: f64) -> (f64, Option<usize>) {
        let mut relaxed = f64::INFINITY;
        for (i, &a) in alpha.iter().enumerate() {
            if a.abs() > HARRIS_PIVOT_TOL {
                if let Some(limit) = self.row_limit(i, a, dir, HARRIS_TOL) {
                    relaxed = relaxed.min(limit);
                }
            }
        }
        if range <= relaxed {
            return (range, None);
        }
        let mut leave: Option<usize> = None;
        let mut theta = f64::INFINITY;
        for (i, &a) in alpha.iter().enumerate() {
            if a.abs() <= HARRIS_PIVOT_TOL {
                continue;
            }
            let Some(limit) = self.row_limit(i, a, dir, 0.0) else { continue };
            if limit <= relaxed && leave.map_or(true, |r| a.abs() > alpha[r].abs()) {
                leave = Some(i);
                theta = limit;
            }
        }
        if leave.is_none() {
            // Only tiny pivots block.
            return self.ratio_test_min(alpha, dir, range, PIVOT_TOL);
        }
        (theta, leave)
    }

    fn pivot(&mut self, r: usize, alpha: &[f64]) {
        let m = self.m;
        let pr = alpha[r];
        let (head, tail) = self.binv.split_at_mut(r * m);
        let (row_r, tail) = tail.split_at_mut(m);
        for v in row_r.iter_mut() {
            *v /= pr;
        }
        for (i, chunk) in head.chunks_mut(m).enumerate() {
            let f = alpha[i];
            if f != 0.0 {
                for (v, rr) in chunk.iter_mut().zip(row_r.iter()) {
                    *v -= f * rr;
                }
            }
        }
        for (k, chunk) in tail.chunks_mut(m).enumerate() {
            let f = alpha[r + 1 + k];
            if f != 0.0 {
                for (v, rr) in chunk.iter_mut().zip(row_r.iter()) {
                    *v -= f * rr;
                }
            }
        }
        self.since_refactor += 1;
    }

    /// Recomputes `B⁻¹` by Gauss-Jordan elimination and the basic values from scratch.
    fn refactor(&mut self) {
        let m = self.m;
        self.since_refactor = 0;
        if m == 0 {
            return;
        }
        let mut a = vec![0.0; m * m];
        for (c, &j) in self.basis.iter().enumerate() {
            self.for_column(j, |i, v| a[i * m + c] = v);
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for col in 0..m {
            let piv = (col..m)
                .max_by(|&p, &q| a[p * m + col].abs().total_cmp(&a[q * m + col].abs()))
                .unwrap();
            if a[piv * m + col].abs() < 1e-13 {
                warn!("basis refactorization found a near-singular basis; keeping updated inverse");
                return;
            }
            if piv != col {
                for k in 0..m {
                    a.swap(piv * m + k, col * m + k);
                    inv.swap(piv * m + k, col * m + k);
                }
            }
            let d = a[col * m + col];
            for k in 0..m {
                a[col * m + k] /= d;
                inv[col * m + k] /= d;
            }
            for i in 0..m {
                if i == col {
                    continue;
                }
                let f = a[i * m + col];
                if f != 0.0 {
                    for k in 0..m {
                        a[i * m + k] -= f * a[col * m + k];
                        inv[i * m + k] -= f * inv[col * m + k];
                    }
                }
            }
        }
        // `inv` is the inverse of the column-ordered basis: row i gives basic variable i.
        self.binv = inv;
        let mut residual = self.rhs.clone();
        for j in 0..self.num_cols() {
            if self.state[j] != VarState::Basic && self.x[j] != 0.0 {
                let xj = self.x[j];
                self.for_column(j, |i, v| residual[i] -= v * xj);
            }
        }
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            self.x[self.basis[i]] = row.iter().zip(&residual).map(|(b, r)| b * r).sum();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn one_variable_box() {
        let mut lp = LpProblem::new(1);
        lp.set_objective(0, 1.0);
        lp.add_le(vec![(0, 1.0)], 1.0);
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_abs_diff_eq!(sol.x.unwrap()[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.objective, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_face_objective() {
        let lp = LpProblem::from_dense(vec![1.0, 1.0], &[], &[], &[vec![1.0, 1.0]], &[1.0]).unwrap();
        let sol = solve(&lp).unwrap();
        assert_abs_diff_eq!(sol.objective, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn empty_feasible_set() {
        let mut lp = LpProblem::new(1);
        lp.set_objective(0, 1.0);
        lp.add_le(vec![(0, 1.0)], -1.0);
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
        assert!(sol.x.is_none());
    }

    #[test]
    fn unbounded_ray() {
        let mut lp = LpProblem::new(2);
        lp.set_objective(0, 1.0);
        lp.add_le(vec![(0, 1.0), (1, -1.0)], 1.0);
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn equalities_with_negative_rhs_and_upper_bounds() {
        // max 2x + y, x - y = -1, x + y ≤ 5, x ≤ 1.5 → x = 1.5, y = 2.5.
        let mut lp = LpProblem::new(2);
        lp.set_objective(0, 2.0);
        lp.set_objective(1, 1.0);
        lp.add_eq(vec![(0, 1.0), (1, -1.0)], -1.0);
        lp.add_le(vec![(0, 1.0), (1, 1.0)], 5.0);
        lp.set_bounds(0, 0.0, 1.5);
        let sol = solve(&lp).unwrap();
        let x = sol.x.unwrap();
        assert_abs_diff_eq!(x[0], 1.5, epsilon = 1e-10);
        assert_abs_diff_eq!(x[1], 2.5, epsilon = 1e-10);
        assert_abs_diff_eq!(sol.objective, 5.5, epsilon = 1e-10);
    }

    #[test]
    fn shifted_lower_bounds() {
        // min x + y (max −x − y) with x ≥ 2, y ≥ −3, x + y ≥ 0.
        let mut lp = LpProblem::new(2);
        lp.set_objective(0, -1.0);
        lp.set_objective(1, -1.0);
        lp.set_bounds(0, 2.0, f64::INFINITY);
        lp.set_bounds(1, -3.0, f64::INFINITY);
        lp.add_le(vec![(0, -1.0), (1, -1.0)], 0.0);
        let sol = solve(&lp).unwrap();
        assert_abs_diff_eq!(sol.objective, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn duals_certify_optimality() {
        // max 3x + 2y, x + y ≤ 4, x + 3y ≤ 6, x ≤ 3 (as a row).
        let lp = LpProblem::from_dense(
            vec![3.0, 2.0],
            &[],
            &[],
            &[vec![1.0, 1.0], vec![1.0, 3.0], vec![1.0, 0.0]],
            &[4.0, 6.0, 3.0],
        )
        .unwrap();
        let sol = solve(&lp).unwrap();
        assert_abs_diff_eq!(sol.objective, 11.0, epsilon = 1e-10);
        let y = sol.duals.unwrap();
        let dual_obj = 4.0 * y[0] + 6.0 * y[1] + 3.0 * y[2];
        assert_abs_diff_eq!(dual_obj, 11.0, epsilon = 1e-10);
        assert!(y.iter().all(|&v| v >= -1e-12));
    }

    #[test]
    fn malformed_dimensions() {
        assert!(matches!(
            LpProblem::from_dense(vec![1.0], &[vec![1.0, 2.0]], &[1.0], &[], &[]),
            Err(Error::Dimension(_))
        ));
        let mut lp = LpProblem::new(1);
        lp.add_le(vec![(3, 1.0)], 1.0);
        assert!(matches!(solve(&lp), Err(Error::Dimension(_))));
    }

    #[test]
    fn iteration_limit_is_distinct() {
        let lp = LpProblem::from_dense(
            vec![1.0, 1.0],
            &[],
            &[],
            &[vec![1.0, 0.0], vec![0.0, 1.0]],
            &[1.0, 1.0],
        )
        .unwrap();
        let opts = SolverOptions { max_iterations: Some(1), ..Default::default() };
        assert!(matches!(solve_with(&lp, opts), Err(Error::IterationLimit { limit: 1 })));
    }

    #[test]
    fn bland_and_hybrid_agree() {
        // Beale's cycling example; optimum 1/20 at x = (1/25, 0, 1, 0).
        let lp = LpProblem::from_dense(
            vec![0.75, -150.0, 0.02, -6.0],
            &[],
            &[],
            &[
                vec![0.25, -60.0, -0.04, 9.0],
                vec![0.5, -90.0, -0.02, 3.0],
                vec![0.0, 0.0, 1.0, 0.0],
            ],
            &[0.0, 0.0, 1.0],
        )
        .unwrap();
        for pricing in [Pricing::Bland, Pricing::Hybrid] {
            let sol = solve_with(&lp, SolverOptions { pricing, max_iterations: None }).unwrap();
            assert_abs_diff_eq!(sol.objective, 0.05, epsilon = 1e-10);
        }
    }
}
