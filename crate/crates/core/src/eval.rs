//! Exact policy evaluation: backward induction, forward occupancy and
//! variance diagnostics.

use crate::error::{Error, Result};
use crate::model::{CmdpModel, OccupancyMeasure, Policy, ValueTables};

/// Backward induction for `V` and every `C_i` under `model`'s kernel.
pub fn evaluate_policy(model: &CmdpModel, policy: &Policy) -> Result<ValueTables> {
    model.ensure_valid()?;
    policy.check_matches(model)?;
    Ok(backward(model, policy, |_| &model.kernel))
}

/// Backward induction where step `h` transitions with `kernels[h]`.
///
/// Used for kernels that change over time, such as the family implied by an
/// extended-LP solution.
pub fn evaluate_policy_time_varying(
    model: &CmdpModel,
    policy: &Policy,
    kernels: &[Vec<f64>],
) -> Result<ValueTables> {
    policy.check_matches(model)?;
    if kernels.len() != model.horizon || kernels.iter().any(|k| k.len() != model.kernel.len()) {
        return Err(Error::Dimension("one kernel per step is required".into()));
    }
    Ok(backward(model, policy, |h| &kernels[h]))
}

fn backward<'k>(
    model: &CmdpModel,
    policy: &Policy,
    kernel_at: impl Fn(usize) -> &'k [f64],
) -> ValueTables {
    let (ns, na, hz, n) = (model.num_states, model.num_actions, model.horizon, model.num_constraints());
    let mut value = vec![0.0; hz * ns];
    let mut cvals = vec![0.0; n * hz * ns];
    for t in (0..hz).rev() {
        let kernel = kernel_at(t);
        for s in 0..ns {
            let mut v = 0.0;
            let mut c = vec![0.0; n];
            for a in 0..na {
                let pi = policy.prob(t, s, a);
                if pi == 0.0 {
                    continue;
                }
                let row = &kernel[(s * na + a) * ns..(s * na + a + 1) * ns];
                let mut q = model.reward(s, a);
                if t + 1 < hz {
                    q += dot(row, &value[(t + 1) * ns..(t + 2) * ns]);
                }
                v += pi * q;
                for (i, ci) in c.iter_mut().enumerate() {
                    let mut qc = model.cost(i, s, a);
                    if t + 1 < hz {
                        let base = (i * hz + t + 1) * ns;
                        qc += dot(row, &cvals[base..base + ns]);
                    }
                    *ci += pi * qc;
                }
            }
            value[t * ns + s] = v;
            for (i, ci) in c.into_iter().enumerate() {
                cvals[(i * hz + t) * ns + s] = ci;
            }
        }
    }
    ValueTables { num_states: ns, horizon: hz, value, constraint_values: cvals }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Forward recursion for `μ(s,a,h) = P(s_h = s, a_h = a | s_0)`.
pub fn occupancy(model: &CmdpModel, policy: &Policy) -> Result<OccupancyMeasure> {
    model.ensure_valid()?;
    policy.check_matches(model)?;
    let (ns, na, hz) = (model.num_states, model.num_actions, model.horizon);
    let mut mu = vec![0.0; hz * ns * na];
    let mut state = vec![0.0; ns];
    state[model.initial_state] = 1.0;
    for h in 0..hz {
        let mut next = vec![0.0; ns];
        for s in 0..ns {
            if state[s] == 0.0 {
                continue;
            }
            for a in 0..na {
                let m = state[s] * policy.prob(h, s, a);
                mu[(h * ns + s) * na + a] = m;
                if m == 0.0 {
                    continue;
                }
                for (sn, p) in model.row(s, a).iter().enumerate() {
                    next[sn] += m * p;
                }
            }
        }
        state = next;
    }
    Ok(OccupancyMeasure { num_states: ns, num_actions: na, horizon: hz, mu })
}

/// Per-step variance tables for the value function and each constraint function.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceTables {
    pub num_states: usize,
    pub horizon: usize,
    /// Indexed `h * |S| + s`.
    pub value: Vec<f64>,
    /// Indexed `(i * H + h) * |S| + s`.
    pub constraints: Vec<f64>,
}

impl VarianceTables {
    #[inline]
    pub fn v(&self, h: usize, s: usize) -> f64 {
        self.value[h * self.num_states + s]
    }

    #[inline]
    pub fn c(&self, i: usize, h: usize, s: usize) -> f64 {
        self.constraints[(i * self.horizon + h) * self.num_states + s]
    }
}

/// Policy-induced kernel `P_π(s'|s)` at step `h`.
fn chain_row(model: &CmdpModel, policy: &Policy, h: usize, s: usize) -> Vec<f64> {
    let mut row = vec![0.0; model.num_states];
    for a in 0..model.num_actions {
        let pi = policy.prob(h, s, a);
        if pi != 0.0 {
            for (sn, p) in model.row(s, a).iter().enumerate() {
                row[sn] += pi * p;
            }
        }
    }
    row
}

/// Local variance `σ_h²(s) = Σ_{s'} P_π(s'|s) (V_{h+1}(s') − P_π V_{h+1}(s))²`,
/// and the same for every constraint function. Zero at the last step.
pub fn local_variance(
    model: &CmdpModel,
    policy: &Policy,
    values: &ValueTables,
) -> Result<VarianceTables> {
    policy.check_matches(model)?;
    let (ns, hz, n) = (model.num_states, model.horizon, model.num_constraints());
    if values.num_states != ns
        || values.horizon != hz
        || values.value.len() != ns * hz
        || values.constraint_values.len() != n * ns * hz
    {
        return Err(Error::Dimension("value tables do not match the model".into()));
    }
    let mut var = vec![0.0; hz * ns];
    let mut cvar = vec![0.0; n * hz * ns];
    for h in 0..hz.saturating_sub(1) {
        for s in 0..ns {
            let row = chain_row(model, policy, h, s);
            var[h * ns + s] = one_step_variance(&row, |sn| values.v(h + 1, sn));
            for i in 0..n {
                cvar[(i * hz + h) * ns + s] = one_step_variance(&row, |sn| values.c(i, h + 1, sn));
            }
        }
    }
    Ok(VarianceTables { num_states: ns, horizon: hz, value: var, constraints: cvar })
}

fn one_step_variance(row: &[f64], f: impl Fn(usize) -> f64) -> f64 {
    let mean: f64 = row.iter().enumerate().map(|(sn, p)| p * f(sn)).sum();
    row.iter()
        .enumerate()
        .map(|(sn, p)| {
            let d = f(sn) - mean;
            p * d * d
        })
        .sum()
}

/// Variance `Σ_t(s)` of the remaining return from step `t`, computed from
/// first and second moments of the return.
///
/// The per-step reward is the policy-averaged `r_π(s) = Σ_a π(s,a,t) r(s,a)`,
/// the reward of the Markov chain `P_π`; constraint functions are treated the
/// same way.
pub fn return_variance(model: &CmdpModel, policy: &Policy) -> Result<VarianceTables> {
    model.ensure_valid()?;
    policy.check_matches(model)?;
    let (ns, na, hz, n) = (model.num_states, model.num_actions, model.horizon, model.num_constraints());
    let moments = |signal: &dyn Fn(usize, usize) -> f64| -> Vec<f64> {
        let mut first = vec![0.0; ns];
        let mut second = vec![0.0; ns];
        let mut var = vec![0.0; hz * ns];
        for t in (0..hz).rev() {
            let mut f = vec![0.0; ns];
            let mut m = vec![0.0; ns];
            for s in 0..ns {
                let r: f64 = (0..na).map(|a| policy.prob(t, s, a) * signal(s, a)).sum();
                let (pf, pm) = if t + 1 < hz {
                    let row = chain_row(model, policy, t, s);
                    (dot(&row, &first), dot(&row, &second))
                } else {
                    (0.0, 0.0)
                };
                f[s] = r + pf;
                m[s] = r * r + 2.0 * r * pf + pm;
                var[t * ns + s] = (m[s] - f[s] * f[s]).max(0.0);
            }
            first = f;
            second = m;
        }
        var
    };
    let value = moments(&|s, a| model.reward(s, a));
    let mut constraints = Vec::with_capacity(n * hz * ns);
    for i in 0..n {
        constraints.extend(moments(&|s, a| model.cost(i, s, a)));
    }
    let _ = na;
    Ok(VarianceTables { num_states: ns, horizon: hz, value, constraints })
}

/// `Σ_{h ≥ t} (P_π^{h−t} σ_h²)(s)` for `t = 0`, i.e. the accumulated local
/// variance propagated back to step 0.
pub fn accumulated_local_variance(
    model: &CmdpModel,
    policy: &Policy,
    local: &VarianceTables,
) -> Result<Vec<f64>> {
    policy.check_matches(model)?;
    let (ns, hz) = (model.num_states, model.horizon);
    let mut acc = vec![0.0; ns];
    for t in (0..hz).rev() {
        let mut next = vec![0.0; ns];
        for s in 0..ns {
            let prop = if t + 1 < hz { dot(&chain_row(model, policy, t, s), &acc) } else { 0.0 };
            next[s] = local.v(t, s) + prop;
        }
        acc = next;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::chain;
    use approx::assert_abs_diff_eq;

    fn coin_model() -> CmdpModel {
        // Fair coin between two states; reward 1 in state 1.
        CmdpModel::new(2, 1, 3, 0, vec![0.5; 4], vec![0.0, 1.0], vec![], vec![]).unwrap()
    }

    #[test]
    fn single_step_value_is_immediate_reward() {
        let m = CmdpModel::new(2, 2, 1, 0, vec![1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0], vec![0.3, 0.7, 0.1, 0.2], vec![], vec![])
            .unwrap();
        let p = Policy::deterministic(2, 2, 1, |_, _| 1);
        assert_eq!(evaluate_policy(&m, &p).unwrap().v(0, 0), 0.7);
    }

    #[test]
    fn chain_value_and_cost() {
        let m = chain(3, Some(2.0));
        let p = Policy::uniform(2, 1, 3);
        let vt = evaluate_policy(&m, &p).unwrap();
        assert_eq!(vt.v(0, 0), 2.0);
        assert_eq!(vt.c(0, 0, 0), 2.0);
        assert_eq!(vt.v(2, 1), 1.0);
    }

    #[test]
    fn chain_occupancy() {
        let m = chain(3, None);
        let p = Policy::uniform(2, 1, 3);
        let occ = occupancy(&m, &p).unwrap();
        assert_eq!(occ.get(1, 1, 0), 1.0);
        assert_eq!(occ.get(1, 0, 0), 0.0);
        for h in 0..3 {
            assert_abs_diff_eq!(occ.step_mass(h), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn uniform_kernel_uniform_policy_occupancy() {
        let m = CmdpModel::new(2, 2, 2, 0, vec![0.5; 8], vec![0.0; 4], vec![], vec![]).unwrap();
        let occ = occupancy(&m, &Policy::uniform(2, 2, 2)).unwrap();
        for s in 0..2 {
            for a in 0..2 {
                assert_abs_diff_eq!(occ.get(1, s, a), 0.25, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn deterministic_kernel_has_zero_local_variance() {
        let m = chain(4, Some(1.0));
        let p = Policy::uniform(2, 1, 4);
        let vt = evaluate_policy(&m, &p).unwrap();
        let lv = local_variance(&m, &p, &vt).unwrap();
        assert!(lv.value.iter().chain(&lv.constraints).all(|&x| x == 0.0));
    }

    #[test]
    fn coin_flip_local_variance_is_a_quarter() {
        // H = 2: V_1 = (0, 1), so the step-0 local variance is that of a fair Bernoulli.
        let mut m = coin_model();
        m.horizon = 2;
        let p = Policy::uniform(2, 1, 2);
        let vt = evaluate_policy(&m, &p).unwrap();
        assert_eq!((vt.v(1, 0), vt.v(1, 1)), (0.0, 1.0));
        let lv = local_variance(&m, &p, &vt).unwrap();
        assert_abs_diff_eq!(lv.v(0, 0), 0.25, epsilon = 1e-15);
        assert_eq!(lv.v(1, 0), 0.0);
    }

    #[test]
    fn accumulated_variance_matches_return_variance() {
        let m = coin_model();
        let p = Policy::uniform(2, 1, 3);
        let vt = evaluate_policy(&m, &p).unwrap();
        let lv = local_variance(&m, &p, &vt).unwrap();
        let acc = accumulated_local_variance(&m, &p, &lv).unwrap();
        let rv = return_variance(&m, &p).unwrap();
        for s in 0..2 {
            assert_abs_diff_eq!(acc[s], rv.v(0, s), epsilon = 1e-12);
            assert!(acc[s] <= 9.0);
        }
    }

    #[test]
    fn time_varying_with_constant_family_matches() {
        let m = coin_model();
        let p = Policy::uniform(2, 1, 3);
        let fam = vec![m.kernel.clone(); 3];
        assert_eq!(
            evaluate_policy(&m, &p).unwrap(),
            evaluate_policy_time_varying(&m, &p, &fam).unwrap()
        );
    }

    #[test]
    fn dimension_mismatch() {
        let m = chain(3, None);
        assert!(matches!(evaluate_policy(&m, &Policy::uniform(2, 2, 3)), Err(Error::Dimension(_))));
        assert!(matches!(occupancy(&m, &Policy::uniform(3, 1, 3)), Err(Error::Dimension(_))));
    }
}
