//! Exact and optimistic CMDP planning through occupancy-measure linear programs.
//!
//! [`solve_cmdp_lp`] solves the classical LP over `μ(s,a,h)` for a known
//! model. [`solve_extended_lp`] solves the extended LP over
//! `q(s,a,s',h) = P(s'|s,a) μ(s,a,h)` that optimizes jointly over policies and
//! over every kernel inside a [`ConfidenceModel`].

mod extended;

pub use extended::{
    build_direct_extended_lp, solve_extended_lp, solve_extended_lp_with, ElpMethod, ExtendedLpSolver,
};

use crate::confidence::ConfidenceModel;
use crate::error::{Error, Result};
use crate::lp::{self, LpProblem, LpStatus};
use crate::model::{CmdpModel, ModelStub, OccupancyMeasure, Policy};

/// Mass below which a state-action row counts as never visited.
pub const MASS_EPS: f64 = 1e-12;
/// Slack allowed on constraint values reported by a plan.
pub const PLAN_FEASIBILITY_TOL: f64 = 1e-7;

/// Extended occupancy `q(s,a,s',h)`, stored at `((h * |S| + s) * |A| + a) * |S| + s'`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedOccupancy {
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: usize,
    pub q: Vec<f64>,
}

impl ExtendedOccupancy {
    pub fn zeros(num_states: usize, num_actions: usize, horizon: usize) -> Self {
        ExtendedOccupancy {
            num_states,
            num_actions,
            horizon,
            q: vec![0.0; horizon * num_states * num_actions * num_states],
        }
    }

    #[inline]
    pub fn index(&self, h: usize, s: usize, a: usize, next: usize) -> usize {
        ((h * self.num_states + s) * self.num_actions + a) * self.num_states + next
    }

    #[inline]
    pub fn get(&self, h: usize, s: usize, a: usize, next: usize) -> f64 {
        self.q[self.index(h, s, a, next)]
    }

    /// `q(s,a,·,h)`.
    pub fn row(&self, h: usize, s: usize, a: usize) -> &[f64] {
        let k = self.index(h, s, a, 0);
        &self.q[k..k + self.num_states]
    }

    /// `μ(s,a,h) = Σ_{s'} q(s,a,s',h)`.
    pub fn mu(&self, h: usize, s: usize, a: usize) -> f64 {
        self.row(h, s, a).iter().sum()
    }

    pub fn step_mass(&self, h: usize) -> f64 {
        let w = self.num_states * self.num_actions * self.num_states;
        self.q[h * w..(h + 1) * w].iter().sum()
    }

    /// The state-action occupancy obtained by summing out the successor.
    pub fn to_occupancy(&self) -> OccupancyMeasure {
        let (ns, na, hz) = (self.num_states, self.num_actions, self.horizon);
        let mut mu = vec![0.0; hz * ns * na];
        for h in 0..hz {
            for s in 0..ns {
                for a in 0..na {
                    mu[(h * ns + s) * na + a] = self.mu(h, s, a);
                }
            }
        }
        OccupancyMeasure { num_states: ns, num_actions: na, horizon: hz, mu }
    }

    /// Kernel implied by `q` at step `h`; rows without mass at `h` are taken from `fallback`.
    pub fn kernel_at(&self, h: usize, fallback: &[f64]) -> Vec<f64> {
        let ns = self.num_states;
        let mut kernel = fallback.to_vec();
        for s in 0..ns {
            for a in 0..self.num_actions {
                let row = self.row(h, s, a);
                let mass: f64 = row.iter().sum();
                if mass > MASS_EPS {
                    let start = (s * self.num_actions + a) * ns;
                    for (k, v) in row.iter().enumerate() {
                        kernel[start + k] = v / mass;
                    }
                }
            }
        }
        kernel
    }

    /// The kernel family `P̃_h` for every step.
    pub fn kernel_family(&self, fallback: &[f64]) -> Vec<Vec<f64>> {
        (0..self.horizon).map(|h| self.kernel_at(h, fallback)).collect()
    }
}

/// Anything that assigns a mass to each `(h, s, a)`.
pub trait ActionMass {
    fn shape(&self) -> (usize, usize, usize);
    fn action_mass(&self, h: usize, s: usize, a: usize) -> f64;
}

impl ActionMass for OccupancyMeasure {
    fn shape(&self) -> (usize, usize, usize) {
        (self.horizon, self.num_states, self.num_actions)
    }

    fn action_mass(&self, h: usize, s: usize, a: usize) -> f64 {
        self.get(h, s, a)
    }
}

impl ActionMass for ExtendedOccupancy {
    fn shape(&self) -> (usize, usize, usize) {
        (self.horizon, self.num_states, self.num_actions)
    }

    fn action_mass(&self, h: usize, s: usize, a: usize) -> f64 {
        self.mu(h, s, a)
    }
}

/// `π(s,a,h) = m(s,a,h) / Σ_b m(s,b,h)`; rows without mass get the uniform distribution.
pub fn extract_policy(occupancy: &impl ActionMass) -> Policy {
    let (hz, ns, na) = occupancy.shape();
    let mut probs = vec![0.0; hz * ns * na];
    for h in 0..hz {
        for s in 0..ns {
            let masses: Vec<f64> = (0..na).map(|a| occupancy.action_mass(h, s, a).max(0.0)).collect();
            let total: f64 = masses.iter().sum();
            let row = &mut probs[(h * ns + s) * na..(h * ns + s + 1) * na];
            if total > MASS_EPS {
                for (p, m) in row.iter_mut().zip(&masses) {
                    *p = m / total;
                }
            } else {
                row.fill(1.0 / na as f64);
            }
        }
    }
    Policy { num_states: ns, num_actions: na, horizon: hz, probs }
}

/// Optimistic kernel `P̃(s'|s,a) = q(s,a,s',h) / Σ_b q(s,a,b,h)` at the earliest
/// step `h` where the row carries mass; rows never visited keep `p̂`.
pub fn extract_kernel(q: &ExtendedOccupancy, cm: &ConfidenceModel) -> Vec<f64> {
    let ns = q.num_states;
    let mut kernel = cm.p_hat.clone();
    for s in 0..ns {
        for a in 0..q.num_actions {
            for h in 0..q.horizon {
                let row = q.row(h, s, a);
                let mass: f64 = row.iter().sum();
                if mass > MASS_EPS {
                    let start = (s * q.num_actions + a) * ns;
                    for (k, v) in row.iter().enumerate() {
                        kernel[start + k] = v.max(0.0) / mass;
                    }
                    break;
                }
            }
        }
    }
    kernel
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlanOccupancy {
    Standard(OccupancyMeasure),
    Extended(ExtendedOccupancy),
}

impl PlanOccupancy {
    pub fn state_action(&self) -> OccupancyMeasure {
        match self {
            PlanOccupancy::Standard(o) => o.clone(),
            PlanOccupancy::Extended(q) => q.to_occupancy(),
        }
    }
}

/// Result of a planning LP.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub policy: Policy,
    /// Optimal LP value, i.e. `V_0(s0)` under the planning model.
    pub objective: f64,
    /// `C_{i,0}(s0)` under the planning model.
    pub constraint_values: Vec<f64>,
    /// Extended LP only.
    pub optimistic_kernel: Option<Vec<f64>>,
    pub occupancy: PlanOccupancy,
    /// Simplex pivots summed over every LP solved for this plan.
    pub lp_iterations: usize,
    /// Number of LPs solved (one, or the column-generation rounds).
    pub lp_solves: usize,
}

/// Solves the occupancy-measure LP for a fully known model.
pub fn solve_cmdp_lp(model: &CmdpModel) -> Result<PlanResult> {
    model.ensure_valid()?;
    let (ns, na, hz, n) = (model.num_states, model.num_actions, model.horizon, model.num_constraints());
    let var = |h: usize, s: usize, a: usize| (h * ns + s) * na + a;
    let mut lp = LpProblem::new(hz * ns * na);
    for h in 0..hz {
        for s in 0..ns {
            for a in 0..na {
                lp.set_objective(var(h, s, a), model.reward(s, a));
            }
        }
    }
    for i in 0..n {
        let mut row = Vec::new();
        for h in 0..hz {
            for s in 0..ns {
                for a in 0..na {
                    let c = model.cost(i, s, a);
                    if c != 0.0 {
                        row.push((var(h, s, a), c));
                    }
                }
            }
        }
        lp.add_le(row, model.bounds[i]);
    }
    for s in 0..ns {
        let row = (0..na).map(|a| (var(0, s, a), 1.0)).collect();
        lp.add_eq(row, if s == model.initial_state { 1.0 } else { 0.0 });
    }
    for h in 1..hz {
        for s in 0..ns {
            let mut row: Vec<(usize, f64)> = (0..na).map(|a| (var(h, s, a), 1.0)).collect();
            for sp in 0..ns {
                for ap in 0..na {
                    let p = model.prob(sp, ap, s);
                    if p != 0.0 {
                        row.push((var(h - 1, sp, ap), -p));
                    }
                }
            }
            lp.add_eq(row, 0.0);
        }
    }
    let sol = lp::solve(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(Error::Infeasible("no policy satisfies the constraints".into()))
        }
        LpStatus::Unbounded => return Err(Error::Unbounded),
    }
    let x = sol.x.expect("optimal solution carries a point");
    let occ = OccupancyMeasure {
        num_states: ns,
        num_actions: na,
        horizon: hz,
        mu: x.iter().map(|v| v.max(0.0)).collect(),
    };
    let constraint_values = (0..n).map(|i| occ.integrate(|s, a| model.cost(i, s, a))).collect();
    Ok(PlanResult {
        policy: extract_policy(&occ),
        objective: sol.objective,
        constraint_values,
        optimistic_kernel: None,
        occupancy: PlanOccupancy::Standard(occ),
        lp_iterations: sol.iterations,
        lp_solves: 1,
    })
}

/// How an optimistic plan was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElpStatus {
    Optimal,
    /// The confidence set was infeasible and the plan comes from full-width intervals.
    Widened,
    Failed,
}

impl ElpStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            ElpStatus::Optimal => "optimal",
            ElpStatus::Widened => "widened",
            ElpStatus::Failed => "failed",
        }
    }
}

/// Solves the extended LP, retrying once with every radius widened to 1 if
/// the confidence set admits no feasible policy.
pub fn plan_optimistic(
    solver: &mut ExtendedLpSolver,
    cm: &ConfidenceModel,
    stub: &ModelStub,
) -> Result<(PlanResult, ElpStatus)> {
    match solver.solve(cm, stub) {
        Ok(plan) => Ok((plan, ElpStatus::Optimal)),
        Err(Error::Infeasible(_)) => {
            log::warn!("extended LP infeasible; retrying with full-width intervals");
            let plan = solver.solve(&cm.widened(), stub)?;
            Ok((plan, ElpStatus::Widened))
        }
        Err(e) => Err(e),
    }
}
