//! Online-CRL: episodic exploration that replans optimistically from the
//! counts gathered so far, plus the weight / importance / knownness
//! diagnostics used to reason about it.

use std::collections::BTreeMap;

use crate::confidence::{build_confidence_model, TransitionCounts};
use crate::error::{Error, Result};
use crate::eval::occupancy;
use crate::gmbl::{check_delta, check_sizes};
use crate::model::{CmdpModel, Policy};
use crate::planner::{plan_optimistic, ElpStatus, ExtendedLpSolver, PlanResult};
use crate::sim::{rollout_episode, RngStreams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnlineParams {
    /// Smallest weight that counts as relevant, `ε / (4 H |S|)`.
    pub w_min: f64,
    /// `|S|² |A| m`.
    pub u_max: f64,
    /// Per-entry failure probability, `δ / (4 (N+1) |S| U_max)`.
    pub delta_1: f64,
}

pub fn online_params(
    epsilon: f64,
    delta: f64,
    num_constraints: usize,
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    m: f64,
) -> Result<OnlineParams> {
    check_delta(delta)?;
    check_sizes(num_states, num_actions, horizon)?;
    if !(epsilon > 0.0) || !(m > 0.0) {
        return Err(Error::InvalidArgument("epsilon and m must be positive".into()));
    }
    let s = num_states as f64;
    let u_max = s * s * num_actions as f64 * m;
    Ok(OnlineParams {
        w_min: epsilon / (4.0 * horizon as f64 * s),
        u_max,
        delta_1: delta / (4.0 * (num_constraints as f64 + 1.0) * s * u_max),
    })
}

/// The count target `m` and the two requirements it has to meet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoreticalM {
    /// Closed-form choice, rounded up.
    pub m: f64,
    /// Requirement bounding the number of episodes with too many barely-known pairs.
    pub episode_bound: f64,
    /// Requirement bounding the optimistic mismatch, evaluated at `m`.
    pub mismatch_bound: f64,
    /// Set when `H < 4`, where `log₂ log₂ H ≤ 0` and the factor is replaced by 1.
    pub clamped: bool,
}

fn loglog_factor(horizon: usize) -> (f64, bool) {
    if horizon < 4 {
        (1.0, true)
    } else {
        ((horizon as f64).log2().log2(), false)
    }
}

/// `log₂ |S| · log₂(4 |S| H² / ε)`, the number of (importance, knownness) classes.
pub fn max_class_count(epsilon: f64, num_states: usize, horizon: usize) -> f64 {
    let (s, h) = (num_states as f64, horizon as f64);
    s.log2() * (4.0 * s * h * h / epsilon).log2()
}

/// `6 H² / ε · ln(2 (N+1) E_max / δ)`; zero when `E_max ≤ 0`.
pub fn episode_count_bound(epsilon: f64, delta: f64, num_constraints: usize, horizon: usize, e_max: f64) -> f64 {
    if e_max <= 0.0 {
        return 0.0;
    }
    let h = horizon as f64;
    6.0 * h * h / epsilon * (2.0 * (num_constraints as f64 + 1.0) * e_max / delta).ln()
}

/// Closed-form `m` together with both requirements it dominates.
pub fn theoretical_m(
    epsilon: f64,
    delta: f64,
    num_constraints: usize,
    num_states: usize,
    num_actions: usize,
    horizon: usize,
) -> Result<TheoreticalM> {
    check_delta(delta)?;
    check_sizes(num_states, num_actions, horizon)?;
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon} is outside (0, 1]")));
    }
    let (s, a, h, n1) = (num_states as f64, num_actions as f64, horizon as f64, num_constraints as f64 + 1.0);
    let (ll, clamped) = loglog_factor(horizon);
    if clamped {
        log::warn!("horizon {horizon} < 4: log2 log2 H replaced by 1");
    }
    let l2 = (8.0 * h * h * s * s / epsilon).log2().powi(2);
    let shared = s * h * h / (epsilon * epsilon) * ll * ll * l2;
    let inner = 2048.0 * n1 * s.powi(4) * a * h * h / (epsilon * epsilon * delta) * ll * ll * l2;
    let m = (2560.0 * shared * inner.ln()).ceil();
    let mismatch_bound = 1280.0 * shared * (4.0 * n1 * s * s * a * m / delta).ln();
    let episode_bound = episode_count_bound(epsilon, delta, num_constraints, horizon, max_class_count(epsilon, num_states, horizon));
    Ok(TheoreticalM { m, episode_bound, mismatch_bound, clamped })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OnlineConfig {
    pub epsilon: f64,
    pub delta: f64,
    /// Replaces the theoretical `m`.
    pub m: Option<u64>,
    pub max_episodes: u64,
    /// Evaluate every this many episodes, unless `checkpoints` is nonempty.
    pub eval_every: u64,
    /// Episode counts at which to evaluate.
    pub checkpoints: Vec<u64>,
    /// Replan every this many episodes.
    pub rebuild_every: u64,
    /// Record whether each confidence model contains the true kernel.
    pub track_containment: bool,
}

impl OnlineConfig {
    pub fn new(epsilon: f64, delta: f64, max_episodes: u64) -> Self {
        OnlineConfig {
            epsilon,
            delta,
            m: None,
            max_episodes,
            eval_every: max_episodes.max(1),
            checkpoints: Vec::new(),
            rebuild_every: 1,
            track_containment: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_delta(self.delta)?;
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument("epsilon must be positive".into()));
        }
        if self.m == Some(0) || self.eval_every == 0 || self.rebuild_every == 0 {
            return Err(Error::InvalidArgument("m, eval_every and rebuild_every must be positive".into()));
        }
        Ok(())
    }

    fn is_checkpoint(&self, k: u64) -> bool {
        if self.checkpoints.is_empty() {
            k > 0 && k % self.eval_every == 0
        } else {
            self.checkpoints.contains(&k)
        }
    }
}

/// One entry of the per-episode update log.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub episode: u64,
    /// Optimistic value of the policy played in this episode.
    pub objective: f64,
    pub status: ElpStatus,
    /// Whether the policy was replanned at the start of this episode.
    pub replanned: bool,
    pub counts_hash: u64,
    pub contains_truth: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct OnlineState {
    pub counts: TransitionCounts,
    /// Completed episodes.
    pub episode: u64,
    pub policy: Policy,
    pub log: Vec<EpisodeLog>,
}

/// The policy planned after `episode` episodes.
#[derive(Debug, Clone)]
pub struct OnlineCheckpoint {
    pub episode: u64,
    /// Samples seen so far, `episode · H`.
    pub samples: u64,
    pub policy: Policy,
    pub objective: f64,
    pub status: ElpStatus,
}

#[derive(Debug, Clone)]
pub struct OnlineRun {
    pub params: OnlineParams,
    pub m: f64,
    pub checkpoints: Vec<OnlineCheckpoint>,
    pub state: OnlineState,
    /// True if every pair reached `|S| m H` visits before `max_episodes`.
    pub stopped_by_rule: bool,
}

/// Runs Online-CRL with `model` as the hidden environment.
///
/// Episode `k` uses random stream `k`, so a run is reproducible from its seed.
pub fn run_online(model: &CmdpModel, config: &OnlineConfig, streams: &RngStreams) -> Result<OnlineRun> {
    config.validate()?;
    model.ensure_valid()?;
    let (ns, na, hz, nc) = (model.num_states, model.num_actions, model.horizon, model.num_constraints());
    let m = match config.m {
        Some(m) => m as f64,
        None => theoretical_m(config.epsilon, config.delta, nc, ns, na, hz)?.m,
    };
    let params = online_params(config.epsilon, config.delta, nc, ns, na, hz, m)?;
    let target = ns as f64 * m * hz as f64;
    let stub = model.stub();
    let mut solver = ExtendedLpSolver::new();
    let mut counts = TransitionCounts::new(ns, na);
    let mut log = Vec::new();
    let mut checkpoints = Vec::new();
    let mut current: Option<(PlanResult, ElpStatus)> = None;
    let stopped_by_rule;
    let mut k = 0u64;
    loop {
        let stop = (0..ns).all(|s| (0..na).all(|a| counts.visits(s, a) as f64 >= target));
        let last = stop || k >= config.max_episodes;
        // Stopping early adds a final checkpoint.
        let checkpoint = config.is_checkpoint(k) || stop;
        let replan = current.is_none() || checkpoint || (!last && k % config.rebuild_every == 0);
        let mut contains_truth = None;
        if replan {
            let cm = build_confidence_model(&counts, params.delta_1)?;
            if config.track_containment {
                contains_truth = Some(cm.contains(&model.kernel)?);
            }
            current = Some(plan_optimistic(&mut solver, &cm, &stub)?);
        }
        let (plan, status) = current.as_ref().expect("planned above");
        if checkpoint {
            checkpoints.push(OnlineCheckpoint {
                episode: k,
                samples: k * hz as u64,
                policy: plan.policy.clone(),
                objective: plan.objective,
                status: *status,
            });
        }
        if last {
            stopped_by_rule = stop;
            break;
        }
        log.push(EpisodeLog {
            episode: k,
            objective: plan.objective,
            status: *status,
            replanned: replan,
            counts_hash: counts.fingerprint(),
            contains_truth,
        });
        let trajectory = rollout_episode(model, &plan.policy, &mut streams.stream(k))?;
        for step in &trajectory.steps {
            counts.record(step.state, step.action, step.next_state);
        }
        k += 1;
    }
    let policy = current.expect("at least one plan").0.policy;
    Ok(OnlineRun {
        params,
        m,
        checkpoints,
        state: OnlineState { counts, episode: k, policy, log },
        stopped_by_rule,
    })
}

/// Knownness of a pair; undefined for pairs the policy never visits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Knownness {
    Inactive,
    Level(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairKnownness {
    pub state: usize,
    pub action: usize,
    /// Expected visits per episode.
    pub weight: f64,
    pub importance: u64,
    pub knownness: Knownness,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnownnessReport {
    pub pairs: Vec<PairKnownness>,
    /// Number of active pairs in each `(knownness, importance)` class.
    pub partition: BTreeMap<(u64, u64), usize>,
    /// Some class holds more pairs than its knownness level.
    pub violation: bool,
}

/// Smallest `z ∈ {0, 1, 2, 4, ...}` with `z ≥ ratio`.
pub fn importance_level(ratio: f64) -> u64 {
    if ratio <= 0.0 {
        return 0;
    }
    let mut z = 1u64;
    while (z as f64) < ratio && z < 1 << 62 {
        z *= 2;
    }
    z
}

/// Largest `z ∈ {0, 1, 2, 4, ...}` with `z ≤ ratio`.
pub fn knownness_level(ratio: f64) -> u64 {
    if !(ratio >= 1.0) {
        return 0;
    }
    let mut z = 1u64;
    while ((2 * z) as f64) <= ratio && z < 1 << 62 {
        z *= 2;
    }
    z
}

/// Weight, importance and knownness of every pair under `policy` on the true model.
pub fn knownness_report(
    model: &CmdpModel,
    policy: &Policy,
    counts: &TransitionCounts,
    m: f64,
    w_min: f64,
) -> Result<KnownnessReport> {
    if !(m > 0.0 && w_min > 0.0) {
        return Err(Error::InvalidArgument("m and w_min must be positive".into()));
    }
    if counts.num_states != model.num_states || counts.num_actions != model.num_actions {
        return Err(Error::Dimension("counts do not match the model".into()));
    }
    let occ = occupancy(model, policy)?;
    let mut pairs = Vec::with_capacity(model.num_pairs());
    let mut partition = BTreeMap::new();
    for s in 0..model.num_states {
        for a in 0..model.num_actions {
            let weight: f64 = (0..model.horizon).map(|h| occ.get(h, s, a)).sum();
            let importance = importance_level(weight / w_min);
            let knownness = if importance == 0 {
                Knownness::Inactive
            } else {
                let level = knownness_level(counts.visits(s, a) as f64 / (m * weight));
                *partition.entry((level, importance)).or_insert(0) += 1;
                Knownness::Level(level)
            };
            pairs.push(PairKnownness { state: s, action: a, weight, importance, knownness });
        }
    }
    let violation = partition.iter().any(|(&(kappa, _), &size)| size as u64 > kappa);
    Ok(KnownnessReport { pairs, partition, violation })
}
