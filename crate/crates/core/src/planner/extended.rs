//! The extended LP over `q(s,a,s',h)`.
//!
//! Two routes solve the same program. [`ElpMethod::Direct`] assembles it
//! literally: one variable per `(s,a,s',h)` and two interval rows per
//! variable. That is only practical for small models, since the row count
//! grows like `2·H·|S|²·|A|`.
//!
//! [`ElpMethod::ColumnGeneration`] uses the fact that the interval rows say
//! exactly that `q(s,a,·,h) / μ(s,a,h)` lies in the polytope
//! `B(s,a) = {p ≥ 0 : Σp = 1, p̂ − β ≤ p ≤ p̂ + β}`. Writing each block as a
//! nonnegative combination of points of `B(s,a)` leaves a master LP with
//! only the flow and cost rows. New points are priced in by maximizing a
//! linear function over `B(s,a)`, which a greedy fill solves exactly, so the
//! loop ends at an optimum of the full program.

use std::collections::HashMap;

use crate::confidence::ConfidenceModel;
use crate::error::{Error, Result};
use crate::lp::{self, LpProblem, LpStatus, SparseVec};
use crate::model::ModelStub;

use super::{extract_kernel, extract_policy, ExtendedOccupancy, PlanOccupancy, PlanResult, PLAN_FEASIBILITY_TOL};

/// A column is priced in when its reduced cost exceeds this.
const PRICING_TOL: f64 = 1e-8;
const MAX_ROUNDS: usize = 2000;
/// Box bounds this close to 0 or 1 are snapped, and points this close are merged.
const SNAP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ElpMethod {
    #[default]
    ColumnGeneration,
    Direct,
}

/// Solves the extended LP by column generation.
pub fn solve_extended_lp(cm: &ConfidenceModel, stub: &ModelStub) -> Result<PlanResult> {
    solve_extended_lp_with(cm, stub, ElpMethod::ColumnGeneration)
}

pub fn solve_extended_lp_with(cm: &ConfidenceModel, stub: &ModelStub, method: ElpMethod) -> Result<PlanResult> {
    match method {
        ElpMethod::ColumnGeneration => ExtendedLpSolver::new().solve(cm, stub),
        ElpMethod::Direct => solve_direct(cm, stub),
    }
}

fn check_dims(cm: &ConfidenceModel, stub: &ModelStub) -> Result<()> {
    let (ns, na) = (stub.num_states, stub.num_actions);
    if cm.num_states != ns
        || cm.num_actions != na
        || cm.p_hat.len() != ns * na * ns
        || cm.beta.len() != ns * na * ns
        || stub.reward.len() != ns * na
        || stub.costs.len() != stub.bounds.len() * ns * na
        || stub.initial_state >= ns
        || stub.horizon == 0
    {
        return Err(Error::Dimension("confidence model does not match the model stub".into()));
    }
    Ok(())
}

/// Assembles the extended LP literally, with variable `((h·|S| + s)·|A| + a)·|S| + s'`.
pub fn build_direct_extended_lp(cm: &ConfidenceModel, stub: &ModelStub) -> Result<LpProblem> {
    check_dims(cm, stub)?;
    let (ns, na, hz) = (stub.num_states, stub.num_actions, stub.horizon);
    let var = |h: usize, s: usize, a: usize, sn: usize| ((h * ns + s) * na + a) * ns + sn;
    let mut lp = LpProblem::new(hz * ns * na * ns);
    for h in 0..hz {
        for s in 0..ns {
            for a in 0..na {
                for sn in 0..ns {
                    lp.set_objective(var(h, s, a, sn), stub.reward(s, a));
                }
            }
        }
    }
    for i in 0..stub.num_constraints() {
        let mut row = Vec::new();
        for h in 0..hz {
            for s in 0..ns {
                for a in 0..na {
                    let c = stub.cost(i, s, a);
                    if c != 0.0 {
                        row.extend((0..ns).map(|sn| (var(h, s, a, sn), c)));
                    }
                }
            }
        }
        lp.add_le(row, stub.bounds[i]);
    }
    for h in 1..hz {
        for s in 0..ns {
            let mut row: SparseVec = Vec::new();
            for a in 0..na {
                row.extend((0..ns).map(|sn| (var(h, s, a, sn), 1.0)));
            }
            for sp in 0..ns {
                for ap in 0..na {
                    row.push((var(h - 1, sp, ap, s), -1.0));
                }
            }
            lp.add_eq(row, 0.0);
        }
    }
    for s in 0..ns {
        let mut row: SparseVec = Vec::new();
        for a in 0..na {
            row.extend((0..ns).map(|sn| (var(0, s, a, sn), 1.0)));
        }
        lp.add_eq(row, if s == stub.initial_state { 1.0 } else { 0.0 });
    }
    for h in 0..hz {
        for s in 0..ns {
            for a in 0..na {
                for sn in 0..ns {
                    let k = cm.index(s, a, sn);
                    let (hi, lo) = (cm.p_hat[k] + cm.beta[k], cm.p_hat[k] - cm.beta[k]);
                    let upper = (0..ns)
                        .map(|y| (var(h, s, a, y), if y == sn { 1.0 - hi } else { -hi }))
                        .collect();
                    lp.add_le(upper, 0.0);
                    let lower = (0..ns)
                        .map(|y| (var(h, s, a, y), if y == sn { lo - 1.0 } else { lo }))
                        .collect();
                    lp.add_le(lower, 0.0);
                }
            }
        }
    }
    Ok(lp)
}

fn solve_direct(cm: &ConfidenceModel, stub: &ModelStub) -> Result<PlanResult> {
    let lp = build_direct_extended_lp(cm, stub)?;
    let sol = lp::solve(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(Error::Infeasible("no kernel in the confidence set admits a feasible policy".into()))
        }
        LpStatus::Unbounded => return Err(Error::Unbounded),
    }
    let (ns, na, hz) = (stub.num_states, stub.num_actions, stub.horizon);
    let q = ExtendedOccupancy {
        num_states: ns,
        num_actions: na,
        horizon: hz,
        q: sol.x.expect("optimal").into_iter().map(|v| v.max(0.0)).collect(),
    };
    Ok(finish(q, cm, stub, sol.objective, sol.iterations, 1))
}

fn finish(
    q: ExtendedOccupancy,
    cm: &ConfidenceModel,
    stub: &ModelStub,
    objective: f64,
    lp_iterations: usize,
    lp_solves: usize,
) -> PlanResult {
    let occ = q.to_occupancy();
    let constraint_values = (0..stub.num_constraints())
        .map(|i| occ.integrate(|s, a| stub.cost(i, s, a)))
        .collect();
    PlanResult {
        policy: extract_policy(&q),
        objective,
        constraint_values,
        optimistic_kernel: Some(extract_kernel(&q, cm)),
        occupancy: PlanOccupancy::Extended(q),
        lp_iterations,
        lp_solves,
    }
}

/// A point of `B(s,a)` used for block `(h, s, a)`.
#[derive(Debug, Clone, PartialEq)]
struct Column {
    h: usize,
    s: usize,
    a: usize,
    /// Nonzero entries of the successor distribution.
    dist: SparseVec,
}

/// Interval polytope `B(s,a)` for every pair, clipped to `[0, 1]`.
struct Boxes {
    ns: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Boxes {
    fn new(cm: &ConfidenceModel) -> Self {
        // Bounds within SNAP_TOL of 0 or 1 are snapped, which only enlarges the set.
        let snap_lo = |v: f64| if v < SNAP_TOL { 0.0 } else { v };
        let snap_hi = |v: f64| if v > 1.0 - SNAP_TOL { 1.0 } else { v };
        let lo = cm.p_hat.iter().zip(&cm.beta).map(|(p, b)| snap_lo(p - b)).collect();
        let hi = cm.p_hat.iter().zip(&cm.beta).map(|(p, b)| snap_hi(p + b)).collect();
        Boxes { ns: cm.num_states, lo, hi }
    }

    /// The point of `B(pair)` maximizing `Σ p(s') score(s')`, given successors
    /// sorted by decreasing score.
    fn greedy(&self, pair: usize, order: &[usize]) -> SparseVec {
        let ns = self.ns;
        let lo = &self.lo[pair * ns..(pair + 1) * ns];
        let hi = &self.hi[pair * ns..(pair + 1) * ns];
        let mut p = lo.to_vec();
        let mut rem = 1.0 - lo.iter().sum::<f64>();
        let mut last = None;
        for &k in order {
            if rem <= SNAP_TOL {
                break;
            }
            let add = (hi[k] - lo[k]).max(0.0).min(rem);
            if add > 0.0 {
                p[k] += add;
                rem -= add;
                last = Some(k);
            }
        }
        // Rounding residue goes to the last filled entry.
        if let Some(k) = last {
            p[k] += rem;
        }
        p.into_iter().enumerate().filter(|(_, v)| *v > 0.0).collect()
    }
}

fn sparse_row(row: &[f64]) -> SparseVec {
    row.iter().copied().enumerate().filter(|(_, v)| *v > 0.0).collect()
}

/// Column-generation solver for the extended LP.
///
/// The solver remembers the row prices of its last solve and uses them to
/// seed the next one, which pays off when successive confidence models
/// differ only slightly.
#[derive(Debug, Clone, Default)]
pub struct ExtendedLpSolver {
    last_duals: Option<Vec<f64>>,
}

impl ExtendedLpSolver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Forgets the remembered prices.
    pub fn reset(&mut self) {
        self.last_duals = None;
    }

    pub fn solve(&mut self, cm: &ConfidenceModel, stub: &ModelStub) -> Result<PlanResult> {
        check_dims(cm, stub)?;
        let (ns, na, hz, n) = (stub.num_states, stub.num_actions, stub.horizon, stub.num_constraints());
        let boxes = Boxes::new(cm);
        let mut master = Master::new(stub);

        for h in 0..hz {
            for s in 0..ns {
                for a in 0..na {
                    master.add(Column { h, s, a, dist: sparse_row(cm.row(s, a)) });
                }
            }
        }
        if let Some(y) = self.last_duals.as_ref().filter(|y| y.len() == hz * ns + n) {
            for h in 0..hz.saturating_sub(1) {
                let order = successor_order(&y[(h + 1) * ns..(h + 2) * ns]);
                for s in 0..ns {
                    for a in 0..na {
                        master.add(Column { h, s, a, dist: boxes.greedy(s * na + a, &order) });
                    }
                }
            }
        }

        let mut phase_one = false;
        let mut elastic_caps: Option<Vec<f64>> = None;
        let mut iterations = 0;
        let mut solves = 0;
        for _ in 0..MAX_ROUNDS {
            let lp = master.assemble(phase_one, elastic_caps.as_deref());
            let sol = lp::solve(&lp)?;
            iterations += sol.iterations;
            solves += 1;
            match sol.status {
                LpStatus::Optimal => {}
                LpStatus::Infeasible if !phase_one => {
                    phase_one = true;
                    continue;
                }
                LpStatus::Infeasible => unreachable!("the elastic master is always feasible"),
                LpStatus::Unbounded => return Err(Error::Unbounded),
            }
            let y = sol.duals.as_ref().expect("optimal solution carries duals");
            let added = master.price(&boxes, y, phase_one);
            if added > 0 {
                continue;
            }
            let x = sol.x.as_ref().expect("optimal solution carries a point");
            if phase_one {
                let slack: Vec<f64> = x[master.columns.len()..].to_vec();
                let total: f64 = slack.iter().sum();
                if total > PLAN_FEASIBILITY_TOL {
                    self.last_duals = None;
                    return Err(Error::Infeasible(format!(
                        "no kernel in the confidence set admits a feasible policy (excess cost {total:.3e})"
                    )));
                }
                phase_one = false;
                elastic_caps = Some(slack);
                continue;
            }
            self.last_duals = Some(y.clone());
            let q = master.occupancy(x);
            return Ok(finish(q, cm, stub, sol.objective, iterations, solves));
        }
        Err(Error::IterationLimit { limit: MAX_ROUNDS })
    }
}

fn same_point(a: &SparseVec, b: &SparseVec) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let (ka, va) = a.get(i).copied().unwrap_or((usize::MAX, 0.0));
        let (kb, vb) = b.get(j).copied().unwrap_or((usize::MAX, 0.0));
        let diff = if ka == kb {
            i += 1;
            j += 1;
            va - vb
        } else if ka < kb {
            i += 1;
            va
        } else {
            j += 1;
            vb
        };
        if diff.abs() > SNAP_TOL {
            return false;
        }
    }
    true
}

fn successor_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]).then(i.cmp(&j)));
    order
}

struct Master<'a> {
    stub: &'a ModelStub,
    columns: Vec<Column>,
    by_block: HashMap<(usize, usize, usize), Vec<usize>>,
}

impl<'a> Master<'a> {
    fn new(stub: &'a ModelStub) -> Self {
        Master { stub, columns: Vec::new(), by_block: HashMap::new() }
    }

    /// Adds a column unless the block already holds the same point.
    fn add(&mut self, col: Column) -> bool {
        let key = (col.h, col.s, col.a);
        let existing = self.by_block.entry(key).or_default();
        if existing.iter().any(|&k| same_point(&self.columns[k].dist, &col.dist)) {
            return false;
        }
        existing.push(self.columns.len());
        self.columns.push(col);
        true
    }

    /// Rows: flow `(h, s)` at `h·|S| + s` (equalities), then one `≤` row per constraint.
    /// In phase one each cost row gets an elastic variable priced at −1; in
    /// phase two those elastics are capped by their phase-one values.
    fn assemble(&self, phase_one: bool, elastic_caps: Option<&[f64]>) -> LpProblem {
        let stub = self.stub;
        let (ns, hz, n) = (stub.num_states, stub.horizon, stub.num_constraints());
        let nc = self.columns.len();
        let with_elastic = phase_one || elastic_caps.is_some();
        let mut lp = LpProblem::new(nc + if with_elastic { n } else { 0 });
        let mut flow: Vec<SparseVec> = vec![Vec::new(); hz * ns];
        let mut cost: Vec<SparseVec> = vec![Vec::new(); n];
        for (j, col) in self.columns.iter().enumerate() {
            if !phase_one {
                lp.set_objective(j, stub.reward(col.s, col.a));
            }
            flow[col.h * ns + col.s].push((j, 1.0));
            if col.h + 1 < hz {
                for &(sn, p) in &col.dist {
                    flow[(col.h + 1) * ns + sn].push((j, -p));
                }
            }
            for (i, row) in cost.iter_mut().enumerate() {
                let c = stub.cost(i, col.s, col.a);
                if c != 0.0 {
                    row.push((j, c));
                }
            }
        }
        if with_elastic {
            for (i, row) in cost.iter_mut().enumerate() {
                row.push((nc + i, -1.0));
                if phase_one {
                    lp.set_objective(nc + i, -1.0);
                } else if let Some(caps) = elastic_caps {
                    lp.set_bounds(nc + i, 0.0, caps[i].max(0.0));
                }
            }
        }
        for (k, row) in flow.into_iter().enumerate() {
            let rhs = if k == stub.initial_state { 1.0 } else { 0.0 };
            lp.add_eq(row, rhs);
        }
        for (i, row) in cost.into_iter().enumerate() {
            lp.add_le(row, stub.bounds[i]);
        }
        lp
    }

    /// Adds the best point of every block whose reduced cost is positive.
    fn price(&mut self, boxes: &Boxes, y: &[f64], phase_one: bool) -> usize {
        let stub = self.stub;
        let (ns, na, hz, n) = (stub.num_states, stub.num_actions, stub.horizon, stub.num_constraints());
        let cost_prices = &y[hz * ns..hz * ns + n];
        let mut added = 0;
        for h in 0..hz.saturating_sub(1) {
            let next = &y[(h + 1) * ns..(h + 2) * ns];
            let order = successor_order(next);
            for s in 0..ns {
                for a in 0..na {
                    let mut rc = if phase_one { 0.0 } else { stub.reward(s, a) };
                    rc -= y[h * ns + s];
                    for (i, price) in cost_prices.iter().enumerate() {
                        rc -= price * stub.cost(i, s, a);
                    }
                    let dist = boxes.greedy(s * na + a, &order);
                    rc += dist.iter().map(|&(sn, p)| p * next[sn]).sum::<f64>();
                    if rc > PRICING_TOL && self.add(Column { h, s, a, dist }) {
                        added += 1;
                    }
                }
            }
        }
        added
    }

    fn occupancy(&self, x: &[f64]) -> ExtendedOccupancy {
        let stub = self.stub;
        let mut q = ExtendedOccupancy::zeros(stub.num_states, stub.num_actions, stub.horizon);
        for (col, &w) in self.columns.iter().zip(x) {
            if w <= 0.0 {
                continue;
            }
            for &(sn, p) in &col.dist {
                let k = q.index(col.h, col.s, col.a, sn);
                q.q[k] += w * p;
            }
        }
        q
    }
}
