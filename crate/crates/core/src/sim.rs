//! Seeded sampling from a model: single transitions and whole episodes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{CmdpModel, Policy, Step, Trajectory};

/// Independent, reproducible random streams derived from one seed.
///
/// Every stream id selects a separate ChaCha stream, so e.g. the samples
/// drawn for one state-action pair do not depend on how many were drawn for
/// another.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStreams {
    seed: u64,
}

impl RngStreams {
    pub fn new(seed: u64) -> Self {
        RngStreams { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self, id: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(id);
        rng
    }
}

/// Inverse-CDF draw from a probability row.
fn draw(row: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in row.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    // u landed in the rounding gap above the cumulative sum.
    last
}

/// Draws `s' ~ P(·|s,a)`.
pub fn sample_transition<R: Rng + ?Sized>(
    model: &CmdpModel,
    s: usize,
    a: usize,
    rng: &mut R,
) -> Result<usize> {
    if s >= model.num_states || a >= model.num_actions {
        return Err(Error::InvalidArgument(format!("pair ({s}, {a}) is out of range")));
    }
    Ok(draw(model.row(s, a), rng.gen::<f64>()))
}

/// Draws `a ~ π(s, ·, h)`.
pub fn sample_action<R: Rng + ?Sized>(policy: &Policy, h: usize, s: usize, rng: &mut R) -> usize {
    draw(policy.dist(h, s), rng.gen::<f64>())
}

/// Runs one length-`H` episode from `s0`.
pub fn rollout_episode<R: Rng + ?Sized>(
    model: &CmdpModel,
    policy: &Policy,
    rng: &mut R,
) -> Result<Trajectory> {
    policy.check_matches(model)?;
    let n = model.num_constraints();
    let mut state = model.initial_state;
    let mut steps = Vec::with_capacity(model.horizon);
    for h in 0..model.horizon {
        let action = sample_action(policy, h, state, rng);
        let next_state = sample_transition(model, state, action, rng)?;
        steps.push(Step {
            state,
            action,
            next_state,
            reward: model.reward(state, action),
            costs: (0..n).map(|i| model.cost(i, state, action)).collect(),
        });
        state = next_state;
    }
    Ok(Trajectory { steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::evaluate_policy;
    use crate::model::fixtures::chain;

    fn three_way() -> CmdpModel {
        // One state-action row with mass (0.2, 0.5, 0.3); other rows self-loops.
        let mut kernel = vec![0.0; 9];
        kernel[..3].copy_from_slice(&[0.2, 0.5, 0.3]);
        kernel[4] = 1.0;
        kernel[8] = 1.0;
        CmdpModel::new(3, 1, 4, 0, kernel, vec![0.1, 0.6, 1.0], vec![], vec![]).unwrap()
    }

    #[test]
    fn point_mass_row_always_hits_successor() {
        let m = chain(3, None);
        let mut rng = RngStreams::new(1).stream(0);
        for _ in 0..100 {
            assert_eq!(sample_transition(&m, 0, 0, &mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn empirical_frequencies_within_three_sigma() {
        let m = three_way();
        let mut rng = RngStreams::new(7).stream(3);
        let n = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[sample_transition(&m, 0, 0, &mut rng).unwrap()] += 1;
        }
        for (k, &p) in [0.2, 0.5, 0.3].iter().enumerate() {
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            let freq = counts[k] as f64 / n as f64;
            assert!((freq - p).abs() <= 3.0 * sigma, "successor {k}: {freq} vs {p}");
        }
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let m = three_way();
        let a: Vec<usize> = {
            let mut rng = RngStreams::new(11).stream(2);
            (0..50).map(|_| sample_transition(&m, 0, 0, &mut rng).unwrap()).collect()
        };
        let b: Vec<usize> = {
            let mut rng = RngStreams::new(11).stream(2);
            (0..50).map(|_| sample_transition(&m, 0, 0, &mut rng).unwrap()).collect()
        };
        assert_eq!(a, b);
        let c: Vec<usize> = {
            let mut rng = RngStreams::new(11).stream(3);
            (0..50).map(|_| sample_transition(&m, 0, 0, &mut rng).unwrap()).collect()
        };
        assert_ne!(a, c);
    }

    #[test]
    fn out_of_range_pair_is_rejected() {
        let m = chain(2, None);
        let mut rng = RngStreams::new(0).stream(0);
        assert!(sample_transition(&m, 2, 0, &mut rng).is_err());
        assert!(sample_transition(&m, 0, 1, &mut rng).is_err());
    }

    #[test]
    fn deterministic_rollout_is_the_unique_path() {
        let m = chain(4, Some(3.0));
        let p = Policy::uniform(2, 1, 4);
        let t = rollout_episode(&m, &p, &mut RngStreams::new(5).stream(0)).unwrap();
        let states: Vec<usize> = t.steps.iter().map(|s| s.state).collect();
        assert_eq!(states, vec![0, 1, 1, 1]);
        assert_eq!(t.total_reward(), 3.0);
        assert_eq!(t.total_cost(0), 3.0);
    }

    #[test]
    fn rollout_mean_matches_exact_value() {
        let m = three_way();
        let p = Policy::uniform(3, 1, 4);
        let exact = evaluate_policy(&m, &p).unwrap().v(0, 0);
        let streams = RngStreams::new(99);
        let n = 100_000;
        let returns: Vec<f64> = (0..n)
            .map(|k| rollout_episode(&m, &p, &mut streams.stream(k)).unwrap().total_reward())
            .collect();
        let mean = returns.iter().sum::<f64>() / n as f64;
        let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((mean - exact).abs() <= 3.0 * se, "mean {mean} vs exact {exact} (se {se})");
    }

    #[test]
    fn rollout_is_reproducible() {
        let m = three_way();
        let p = Policy::uniform(3, 1, 4);
        let a = rollout_episode(&m, &p, &mut RngStreams::new(3).stream(8)).unwrap();
        let b = rollout_episode(&m, &p, &mut RngStreams::new(3).stream(8)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
    }
}
