#![allow(dead_code)]

use cmdp_lab::{CmdpModel, Policy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random distribution over `n` outcomes, with roughly `sparsity` of the entries zeroed.
pub fn random_dist(rng: &mut impl Rng, n: usize, sparsity: f64) -> Vec<f64> {
    loop {
        let mut row: Vec<f64> = (0..n)
            .map(|_| if rng.gen::<f64>() < sparsity { 0.0 } else { -rng.gen::<f64>().max(1e-12).ln() })
            .collect();
        let total: f64 = row.iter().sum();
        if total <= 0.0 {
            continue;
        }
        row.iter_mut().for_each(|p| *p /= total);
        // Push rounding residue onto the largest entry so the row sums to one.
        let residue = 1.0 - row.iter().sum::<f64>();
        let big = (0..n).max_by(|&i, &j| row[i].total_cmp(&row[j])).unwrap();
        row[big] += residue;
        return row;
    }
}

pub fn random_kernel(rng: &mut impl Rng, ns: usize, na: usize, sparsity: f64) -> Vec<f64> {
    (0..ns * na).flat_map(|_| random_dist(rng, ns, sparsity)).collect()
}

/// Random model with jointly feasible constraints: each bound lies between
/// the cost of the policy minimising total cost and that of the reward-greedy policy.
pub fn random_model(rng: &mut impl Rng, ns: usize, na: usize, hz: usize, nc: usize) -> CmdpModel {
    let kernel = random_kernel(rng, ns, na, 0.3);
    let reward: Vec<f64> = (0..ns * na).map(|_| rng.gen()).collect();
    let costs: Vec<f64> = (0..nc * ns * na).map(|_| rng.gen()).collect();
    let s0 = rng.gen_range(0..ns);
    let mut m = CmdpModel::new(ns, na, hz, s0, kernel, reward, costs, vec![f64::MAX / 4.0; nc]).unwrap();
    let greedy = greedy_policy(&m, |s, a| m.reward(s, a));
    let frugal = greedy_policy(&m, |s, a| -(0..nc).map(|i| m.cost(i, s, a)).sum::<f64>());
    for i in 0..nc {
        let lo = eval_policy(&m, &frugal, |s, a| m.cost(i, s, a));
        let hi = eval_policy(&m, &greedy, |s, a| m.cost(i, s, a));
        let t: f64 = rng.gen_range(0.1..0.9);
        m.bounds[i] = lo + t * (hi - lo).max(0.0) + 1e-9;
    }
    m.ensure_valid().unwrap();
    m
}

pub fn random_policy(rng: &mut impl Rng, ns: usize, na: usize, hz: usize) -> Policy {
    let probs = (0..hz * ns).flat_map(|_| random_dist(rng, na, 0.2)).collect();
    Policy::from_probs(ns, na, hz, probs).unwrap()
}

fn row(m: &CmdpModel, s: usize, a: usize) -> &[f64] {
    &m.kernel[(s * m.num_actions + a) * m.num_states..(s * m.num_actions + a + 1) * m.num_states]
}

/// `max_π V_0(s0)` for the per-step signal `f` by plain backward induction.
pub fn dp_optimum(m: &CmdpModel, f: impl Fn(usize, usize) -> f64) -> f64 {
    let mut v = vec![0.0; m.num_states];
    for _ in 0..m.horizon {
        v = (0..m.num_states)
            .map(|s| {
                (0..m.num_actions)
                    .map(|a| f(s, a) + row(m, s, a).iter().zip(&v).map(|(p, x)| p * x).sum::<f64>())
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
    }
    v[m.initial_state]
}

pub fn greedy_policy(m: &CmdpModel, f: impl Fn(usize, usize) -> f64) -> Policy {
    let (ns, na, hz) = (m.num_states, m.num_actions, m.horizon);
    let mut choice = vec![0; hz * ns];
    let mut v = vec![0.0; ns];
    for h in (0..hz).rev() {
        let mut next = vec![0.0; ns];
        for s in 0..ns {
            let mut best = (f64::NEG_INFINITY, 0);
            for a in 0..na {
                let q = f(s, a) + row(m, s, a).iter().zip(&v).map(|(p, x)| p * x).sum::<f64>();
                if q > best.0 {
                    best = (q, a);
                }
            }
            next[s] = best.0;
            choice[h * ns + s] = best.1;
        }
        v = next;
    }
    Policy::deterministic(ns, na, hz, |h, s| choice[h * ns + s])
}

/// Expected total of `f` from `s0` under `policy`, by forward state distributions.
pub fn eval_policy(m: &CmdpModel, policy: &Policy, f: impl Fn(usize, usize) -> f64) -> f64 {
    let (ns, na) = (m.num_states, m.num_actions);
    let mut dist = vec![0.0; ns];
    dist[m.initial_state] = 1.0;
    let mut total = 0.0;
    for h in 0..m.horizon {
        let mut next = vec![0.0; ns];
        for s in 0..ns {
            for a in 0..na {
                let w = dist[s] * policy.probs[(h * ns + s) * na + a];
                total += w * f(s, a);
                for (sn, p) in row(m, s, a).iter().enumerate() {
                    next[sn] += w * p;
                }
            }
        }
        dist = next;
    }
    total
}

/// Best value over two-action policies whose probability of action 0 lies on
/// a grid of `levels` points in [0, 1], subject to every constraint.
/// Returns `None` if no gridded policy is feasible.
pub fn gridded_best(m: &CmdpModel, levels: usize) -> Option<f64> {
    assert_eq!(m.num_actions, 2);
    let (ns, hz) = (m.num_states, m.horizon);
    let slots = ns * hz;
    let total = levels.pow(slots as u32);
    let grid: Vec<f64> = (0..levels).map(|k| k as f64 / (levels - 1) as f64).collect();
    let mut probs = vec![0.0; slots * 2];
    let mut best: Option<f64> = None;
    for code in 0..total {
        let mut c = code;
        for k in 0..slots {
            let p = grid[c % levels];
            c /= levels;
            probs[2 * k] = p;
            probs[2 * k + 1] = 1.0 - p;
        }
        let policy = Policy { num_states: ns, num_actions: 2, horizon: hz, probs: probs.clone() };
        let feasible = (0..m.num_constraints()).all(|i| eval_policy(m, &policy, |s, a| m.cost(i, s, a)) <= m.bounds[i]);
        if feasible {
            let v = eval_policy(m, &policy, |s, a| m.reward(s, a));
            best = Some(best.map_or(v, |b: f64| b.max(v)));
        }
    }
    best
}

pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    assert!(n > 0, "median of no values");
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
