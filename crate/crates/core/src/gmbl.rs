//! Optimistic-GMBL: sample every state-action pair the same number of times
//! from a generative model, then plan once over the resulting confidence set.

use crate::confidence::{build_confidence_model, ConfidenceModel, TransitionCounts};
use crate::error::{Error, Result};
use crate::model::{CmdpModel, Policy};
use crate::planner::{plan_optimistic, ElpStatus, ExtendedLpSolver, PlanResult};
use crate::sim::{sample_transition, RngStreams};

#[derive(Debug, Clone, PartialEq)]
pub struct GmblConfig {
    pub epsilon: f64,
    pub delta: f64,
    /// Replaces the theoretical per-pair sample count.
    pub per_pair_samples: Option<u64>,
}

impl GmblConfig {
    pub fn new(epsilon: f64, delta: f64) -> Self {
        GmblConfig { epsilon, delta, per_pair_samples: None }
    }

    pub fn with_samples(mut self, n: u64) -> Self {
        self.per_pair_samples = Some(n);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!("epsilon {} must be positive", self.epsilon)));
        }
        check_delta(self.delta)?;
        if self.per_pair_samples == Some(0) {
            return Err(Error::InvalidArgument("per-pair sample override must be positive".into()));
        }
        Ok(())
    }
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("delta {delta} is outside (0, 1)")))
    }
}

pub(crate) fn check_sizes(num_states: usize, num_actions: usize, horizon: usize) -> Result<()> {
    if num_states == 0 || num_actions == 0 || horizon == 0 {
        return Err(Error::InvalidArgument("state, action and horizon sizes must be positive".into()));
    }
    Ok(())
}

/// Upper end of the accuracy range the sample bound is stated for, `(2/9)√(H/|S|)`.
pub fn epsilon_upper_bound(num_states: usize, horizon: usize) -> f64 {
    2.0 / 9.0 * (horizon as f64 / num_states as f64).sqrt()
}

/// Per-entry failure probability `δ / (12 (N+2) |S|² |A| H)`.
pub fn gmbl_delta_p(
    delta: f64,
    num_constraints: usize,
    num_states: usize,
    num_actions: usize,
    horizon: usize,
) -> Result<f64> {
    check_delta(delta)?;
    check_sizes(num_states, num_actions, horizon)?;
    let s = num_states as f64;
    Ok(delta / (12.0 * (num_constraints as f64 + 2.0) * s * s * num_actions as f64 * horizon as f64))
}

/// Per-pair sample count `⌈256/ε² · |S| H³ · ln(12 (N+2) |S||A| H / δ)⌉`.
///
/// Accuracies above [`epsilon_upper_bound`] only produce a warning.
pub fn gmbl_budget(
    epsilon: f64,
    delta: f64,
    num_constraints: usize,
    num_states: usize,
    num_actions: usize,
    horizon: usize,
) -> Result<u64> {
    GmblConfig::new(epsilon, delta).validate()?;
    check_sizes(num_states, num_actions, horizon)?;
    let upper = epsilon_upper_bound(num_states, horizon);
    if epsilon >= upper {
        log::warn!("epsilon {epsilon} is outside the guaranteed range (0, {upper:.4})");
    }
    let (s, a, h) = (num_states as f64, num_actions as f64, horizon as f64);
    let log_term = (12.0 * (num_constraints as f64 + 2.0) * s * a * h / delta).ln();
    let n = (256.0 / (epsilon * epsilon) * s * h.powi(3) * log_term).ceil();
    if n >= u64::MAX as f64 {
        return Err(Error::InvalidArgument("sample budget overflows".into()));
    }
    Ok(n as u64)
}

/// Everything a GMBL run observed besides the returned policy.
#[derive(Debug, Clone)]
pub struct GmblDiagnostics {
    pub samples_per_pair: u64,
    pub total_samples: u64,
    pub delta_p: f64,
    pub counts: TransitionCounts,
    pub confidence: ConfidenceModel,
    pub max_beta: f64,
    pub mean_beta: f64,
    /// Optimistic value of the returned policy.
    pub objective: f64,
    pub plan: PlanResult,
    pub status: ElpStatus,
}

/// Draws `n` successors of every pair, pair-major, each pair on its own stream.
///
/// The kernel of `model` is only read through [`sample_transition`].
pub fn sample_uniformly(model: &CmdpModel, n: u64, streams: &RngStreams) -> Result<TransitionCounts> {
    let mut counts = TransitionCounts::new(model.num_states, model.num_actions);
    for s in 0..model.num_states {
        for a in 0..model.num_actions {
            let mut rng = streams.stream(model.pair(s, a) as u64);
            for _ in 0..n {
                let next = sample_transition(model, s, a, &mut rng)?;
                counts.record(s, a, next);
            }
        }
    }
    Ok(counts)
}

/// Runs Optimistic-GMBL against `model` used as a generative sampler.
pub fn run_gmbl(model: &CmdpModel, config: &GmblConfig, streams: &RngStreams) -> Result<(Policy, GmblDiagnostics)> {
    config.validate()?;
    model.ensure_valid()?;
    let (ns, na, hz, nc) = (model.num_states, model.num_actions, model.horizon, model.num_constraints());
    let delta_p = gmbl_delta_p(config.delta, nc, ns, na, hz)?;
    let n = match config.per_pair_samples {
        Some(n) => n,
        None => gmbl_budget(config.epsilon, config.delta, nc, ns, na, hz)?,
    };
    let counts = sample_uniformly(model, n, streams)?;
    let confidence = build_confidence_model(&counts, delta_p)?;
    let (plan, status) = plan_optimistic(&mut ExtendedLpSolver::new(), &confidence, &model.stub())?;
    let diagnostics = GmblDiagnostics {
        samples_per_pair: n,
        total_samples: counts.total(),
        delta_p,
        max_beta: confidence.max_beta(),
        mean_beta: confidence.mean_beta(),
        objective: plan.objective,
        counts,
        confidence,
        status,
        plan: plan.clone(),
    };
    Ok((plan.policy, diagnostics))
}
