//! Finite-horizon constrained MDPs and time-dependent stochastic policies.
//!
//! Tables are stored as flat row-major vectors. The kernel entry
//! `P(s'|s,a)` lives at `(s * |A| + a) * |S| + s'`, rewards at `s * |A| + a`
//! and cost `c(i,s,a)` at `(i * |S| + s) * |A| + a`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when checking that probability rows sum to one.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// A finite-horizon CMDP `<S, A, P, r, c, C̄, s0, H>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmdpModel {
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: usize,
    pub initial_state: usize,
    pub kernel: Vec<f64>,
    pub reward: Vec<f64>,
    pub costs: Vec<f64>,
    pub bounds: Vec<f64>,
}

/// One violated model invariant, as reported by [`validate_model`].
#[derive(Debug, Clone, PartialEq)]
pub enum ModelViolation {
    EmptySpace { what: &'static str },
    TableSize { table: &'static str, expected: usize, found: usize },
    InitialState { state: usize },
    KernelRowSum { state: usize, action: usize, sum: f64 },
    KernelEntry { state: usize, action: usize, next: usize, value: f64 },
    RewardRange { state: usize, action: usize, value: f64 },
    CostRange { constraint: usize, state: usize, action: usize, value: f64 },
    NegativeBound { constraint: usize, value: f64 },
}

impl fmt::Display for ModelViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelViolation::EmptySpace { what } => write!(f, "{what} must be positive"),
            ModelViolation::TableSize { table, expected, found } => {
                write!(f, "{table} has {found} entries, expected {expected}")
            }
            ModelViolation::InitialState { state } => {
                write!(f, "initial state {state} is out of range")
            }
            ModelViolation::KernelRowSum { state, action, sum } => {
                write!(f, "kernel row (s={state}, a={action}) sums to {sum}")
            }
            ModelViolation::KernelEntry { state, action, next, value } => write!(
                f,
                "kernel entry P({next}|{state},{action}) = {value} is outside [0,1]"
            ),
            ModelViolation::RewardRange { state, action, value } => {
                write!(f, "reward r({state},{action}) = {value} is outside [0,1]")
            }
            ModelViolation::CostRange { constraint, state, action, value } => write!(
                f,
                "cost c({constraint},{state},{action}) = {value} is outside [0,1]"
            ),
            ModelViolation::NegativeBound { constraint, value } => {
                write!(f, "bound {constraint} = {value} is negative")
            }
        }
    }
}

/// Lists every violated invariant of `model`; an empty list means the model is valid.
pub fn validate_model(model: &CmdpModel) -> Vec<ModelViolation> {
    let mut out = Vec::new();
    let (ns, na) = (model.num_states, model.num_actions);
    if ns == 0 {
        out.push(ModelViolation::EmptySpace { what: "num_states" });
    }
    if na == 0 {
        out.push(ModelViolation::EmptySpace { what: "num_actions" });
    }
    if model.horizon == 0 {
        out.push(ModelViolation::EmptySpace { what: "horizon" });
    }
    if model.initial_state >= ns {
        out.push(ModelViolation::InitialState { state: model.initial_state });
    }
    let n = model.bounds.len();
    let sizes = [
        ("kernel", ns * na * ns, model.kernel.len()),
        ("reward", ns * na, model.reward.len()),
        ("costs", n * ns * na, model.costs.len()),
    ];
    let mut sized = true;
    for (table, expected, found) in sizes {
        if expected != found {
            sized = false;
            out.push(ModelViolation::TableSize { table, expected, found });
        }
    }
    if !sized {
        return out;
    }
    for s in 0..ns {
        for a in 0..na {
            let row = &model.kernel[(s * na + a) * ns..(s * na + a + 1) * ns];
            for (next, &p) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&p) {
                    out.push(ModelViolation::KernelEntry { state: s, action: a, next, value: p });
                }
            }
            let sum: f64 = row.iter().sum();
            if !((sum - 1.0).abs() <= ROW_SUM_TOL) {
                out.push(ModelViolation::KernelRowSum { state: s, action: a, sum });
            }
            let r = model.reward[s * na + a];
            if !(0.0..=1.0).contains(&r) {
                out.push(ModelViolation::RewardRange { state: s, action: a, value: r });
            }
            for i in 0..n {
                let c = model.costs[(i * ns + s) * na + a];
                if !(0.0..=1.0).contains(&c) {
                    out.push(ModelViolation::CostRange { constraint: i, state: s, action: a, value: c });
                }
            }
        }
    }
    for (i, &b) in model.bounds.iter().enumerate() {
        if !(b >= 0.0 && b.is_finite()) {
            out.push(ModelViolation::NegativeBound { constraint: i, value: b });
        }
    }
    out
}

impl CmdpModel {
    /// Builds a model and rejects it if any invariant is violated.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        num_states: usize,
        num_actions: usize,
        horizon: usize,
        initial_state: usize,
        kernel: Vec<f64>,
        reward: Vec<f64>,
        costs: Vec<f64>,
        bounds: Vec<f64>,
    ) -> Result<Self> {
        let model = CmdpModel {
            num_states,
            num_actions,
            horizon,
            initial_state,
            kernel,
            reward,
            costs,
            bounds,
        };
        model.ensure_valid()?;
        Ok(model)
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let report = validate_model(self);
        if report.is_empty() {
            Ok(())
        } else {
            let msg: Vec<String> = report.iter().map(|v| v.to_string()).collect();
            Err(Error::InvalidModel(msg.join("; ")))
        }
    }

    /// Number of constraints `N`.
    pub fn num_constraints(&self) -> usize {
        self.bounds.len()
    }

    pub fn num_pairs(&self) -> usize {
        self.num_states * self.num_actions
    }

    #[inline]
    pub fn pair(&self, s: usize, a: usize) -> usize {
        s * self.num_actions + a
    }

    /// `P(·|s,a)` as a slice of length `|S|`.
    #[inline]
    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let ns = self.num_states;
        let start = self.pair(s, a) * ns;
        &self.kernel[start..start + ns]
    }

    #[inline]
    pub fn prob(&self, s: usize, a: usize, next: usize) -> f64 {
        self.kernel[self.pair(s, a) * self.num_states + next]
    }

    #[inline]
    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward[self.pair(s, a)]
    }

    #[inline]
    pub fn cost(&self, i: usize, s: usize, a: usize) -> f64 {
        self.costs[(i * self.num_states + s) * self.num_actions + a]
    }

    /// Same model with a different transition kernel.
    pub fn with_kernel(&self, kernel: Vec<f64>) -> Result<Self> {
        if kernel.len() != self.kernel.len() {
            return Err(Error::Dimension(format!(
                "kernel has {} entries, expected {}",
                kernel.len(),
                self.kernel.len()
            )));
        }
        let m = CmdpModel { kernel, ..self.clone() };
        m.ensure_valid()?;
        Ok(m)
    }

    /// The reward, cost, bound, horizon and initial-state data, without a kernel.
    pub fn stub(&self) -> ModelStub {
        ModelStub {
            num_states: self.num_states,
            num_actions: self.num_actions,
            horizon: self.horizon,
            initial_state: self.initial_state,
            reward: self.reward.clone(),
            costs: self.costs.clone(),
            bounds: self.bounds.clone(),
        }
    }
}

/// Everything about a CMDP except its transition kernel: what a learner
/// is told up front.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelStub {
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: usize,
    pub initial_state: usize,
    pub reward: Vec<f64>,
    pub costs: Vec<f64>,
    pub bounds: Vec<f64>,
}

impl ModelStub {
    pub fn num_constraints(&self) -> usize {
        self.bounds.len()
    }

    #[inline]
    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.num_actions + a]
    }

    #[inline]
    pub fn cost(&self, i: usize, s: usize, a: usize) -> f64 {
        self.costs[(i * self.num_states + s) * self.num_actions + a]
    }

    /// Completes the stub into a model with the given kernel.
    pub fn with_kernel(&self, kernel: Vec<f64>) -> Result<CmdpModel> {
        CmdpModel::new(
            self.num_states,
            self.num_actions,
            self.horizon,
            self.initial_state,
            kernel,
            self.reward.clone(),
            self.costs.clone(),
            self.bounds.clone(),
        )
    }
}

/// Time-dependent stochastic policy `π(s, a, h)`, stored at `(h * |S| + s) * |A| + a`.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: usize,
    pub probs: Vec<f64>,
}

impl Policy {
    pub fn uniform(num_states: usize, num_actions: usize, horizon: usize) -> Self {
        Policy {
            num_states,
            num_actions,
            horizon,
            probs: vec![1.0 / num_actions as f64; horizon * num_states * num_actions],
        }
    }

    /// Deterministic policy choosing `choose(h, s)` at every step.
    pub fn deterministic(
        num_states: usize,
        num_actions: usize,
        horizon: usize,
        choose: impl Fn(usize, usize) -> usize,
    ) -> Self {
        let mut probs = vec![0.0; horizon * num_states * num_actions];
        for h in 0..horizon {
            for s in 0..num_states {
                let a = choose(h, s);
                assert!(a < num_actions, "action {a} out of range");
                probs[(h * num_states + s) * num_actions + a] = 1.0;
            }
        }
        Policy { num_states, num_actions, horizon, probs }
    }

    pub fn from_probs(
        num_states: usize,
        num_actions: usize,
        horizon: usize,
        probs: Vec<f64>,
    ) -> Result<Self> {
        let p = Policy { num_states, num_actions, horizon, probs };
        p.ensure_valid()?;
        Ok(p)
    }

    #[inline]
    pub fn prob(&self, h: usize, s: usize, a: usize) -> f64 {
        self.probs[(h * self.num_states + s) * self.num_actions + a]
    }

    /// `π(s, ·, h)`.
    #[inline]
    pub fn dist(&self, h: usize, s: usize) -> &[f64] {
        let start = (h * self.num_states + s) * self.num_actions;
        &self.probs[start..start + self.num_actions]
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let len = self.horizon * self.num_states * self.num_actions;
        if self.probs.len() != len {
            return Err(Error::Dimension(format!(
                "policy has {} entries, expected {len}",
                self.probs.len()
            )));
        }
        for h in 0..self.horizon {
            for s in 0..self.num_states {
                let d = self.dist(h, s);
                let sum: f64 = d.iter().sum();
                if d.iter().any(|p| !(0.0..=1.0).contains(p)) || (sum - 1.0).abs() > ROW_SUM_TOL {
                    return Err(Error::InvalidArgument(format!(
                        "policy row (h={h}, s={s}) is not a distribution (sum {sum})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub(crate) fn check_matches(&self, model: &CmdpModel) -> Result<()> {
        if self.num_states != model.num_states
            || self.num_actions != model.num_actions
            || self.horizon != model.horizon
        {
            return Err(Error::Dimension(format!(
                "policy is {}x{}x{} (H x S x A) but model is {}x{}x{}",
                self.horizon,
                self.num_states,
                self.num_actions,
                model.horizon,
                model.num_states,
                model.num_actions
            )));
        }
        if self.probs.len() != self.horizon * self.num_states * self.num_actions {
            return Err(Error::Dimension("policy table size".into()));
        }
        Ok(())
    }
}

/// Value `V_t(s)` and constraint values `C_{i,t}(s)` of a policy.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTables {
    pub num_states: usize,
    pub horizon: usize,
    /// `V_t(s)` at `t * |S| + s`.
    pub value: Vec<f64>,
    /// `C_{i,t}(s)` at `(i * H + t) * |S| + s`.
    pub constraint_values: Vec<f64>,
}

impl ValueTables {
    #[inline]
    pub fn v(&self, t: usize, s: usize) -> f64 {
        self.value[t * self.num_states + s]
    }

    #[inline]
    pub fn c(&self, i: usize, t: usize, s: usize) -> f64 {
        self.constraint_values[(i * self.horizon + t) * self.num_states + s]
    }

    pub fn num_constraints(&self) -> usize {
        self.constraint_values.len() / (self.horizon * self.num_states).max(1)
    }
}

/// State-action occupancy `μ(s, a, h)` stored at `(h * |S| + s) * |A| + a`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyMeasure {
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: usize,
    pub mu: Vec<f64>,
}

impl OccupancyMeasure {
    #[inline]
    pub fn get(&self, h: usize, s: usize, a: usize) -> f64 {
        self.mu[(h * self.num_states + s) * self.num_actions + a]
    }

    /// Probability mass of state `s` at step `h`.
    pub fn state_mass(&self, h: usize, s: usize) -> f64 {
        (0..self.num_actions).map(|a| self.get(h, s, a)).sum()
    }

    /// Total mass at step `h`; one for a proper occupancy measure.
    pub fn step_mass(&self, h: usize) -> f64 {
        let w = self.num_states * self.num_actions;
        self.mu[h * w..(h + 1) * w].iter().sum()
    }

    /// `Σ_{s,a,h} μ(s,a,h) f(s,a)`.
    pub fn integrate(&self, f: impl Fn(usize, usize) -> f64) -> f64 {
        let mut acc = 0.0;
        for h in 0..self.horizon {
            for s in 0..self.num_states {
                for a in 0..self.num_actions {
                    let m = self.get(h, s, a);
                    if m != 0.0 {
                        acc += m * f(s, a);
                    }
                }
            }
        }
        acc
    }
}

/// One step of an episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub state: usize,
    pub action: usize,
    pub next_state: usize,
    pub reward: f64,
    pub costs: Vec<f64>,
}

/// A length-`H` episode starting at `s0`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub steps: Vec<Step>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }

    pub fn total_cost(&self, i: usize) -> f64 {
        self.steps.iter().map(|s| s.costs[i]).sum()
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valid_chain_has_empty_report() {
        assert!(validate_model(&fixtures::chain(3, Some(2.0))).is_empty());
    }

    #[test]
    fn short_row_is_reported() {
        let mut m = fixtures::chain(3, None);
        m.kernel[1] = 0.9;
        let report = validate_model(&m);
        assert_eq!(report.len(), 1);
        match &report[0] {
            ModelViolation::KernelRowSum { state, action, sum } => {
                assert_eq!((*state, *action), (0, 0));
                assert!((sum - 0.9).abs() < 1e-15);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(report[0].to_string().contains("(s=0, a=0)"));
    }

    #[test]
    fn reward_out_of_range_is_reported() {
        let mut m = fixtures::chain(3, None);
        m.reward[1] = 1.5;
        let report = validate_model(&m);
        assert_eq!(report, vec![ModelViolation::RewardRange { state: 1, action: 0, value: 1.5 }]);
    }

    #[test]
    fn other_violations() {
        let mut m = fixtures::chain(3, Some(1.0));
        m.bounds[0] = -0.5;
        m.costs[0] = 2.0;
        m.initial_state = 7;
        let report = validate_model(&m);
        assert_eq!(report.len(), 3);
        m.kernel.pop();
        assert!(matches!(validate_model(&m)[1], ModelViolation::TableSize { table: "kernel", .. }));
    }

    #[test]
    fn policy_validation() {
        assert!(Policy::uniform(3, 4, 2).ensure_valid().is_ok());
        let bad = Policy { num_states: 1, num_actions: 2, horizon: 1, probs: vec![0.5, 0.6] };
        assert!(bad.ensure_valid().is_err());
        let p = Policy::deterministic(2, 3, 2, |h, s| (h + s) % 3);
        assert_eq!(p.dist(1, 1), &[0.0, 0.0, 1.0]);
    }
}
