//! Confidence sets of transition kernels built from observed transitions.
//!
//! Every kernel entry gets an interval `p̂ ± β` whose radius is the smaller
//! of an empirical-Bernstein and a Hoeffding radius at the row's visit count.

use crate::error::{Error, Result};

/// Slack used by [`ConfidenceModel::contains`] to absorb rounding in `p̂ ± β`.
pub const CONTAINS_TOL: f64 = 1e-12;

/// Visit counts `n(s,a)` and successor counts `n(s',s,a)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionCounts {
    pub num_states: usize,
    pub num_actions: usize,
    visits: Vec<u64>,
    successors: Vec<u64>,
}

impl TransitionCounts {
    pub fn new(num_states: usize, num_actions: usize) -> Self {
        TransitionCounts {
            num_states,
            num_actions,
            visits: vec![0; num_states * num_actions],
            successors: vec![0; num_states * num_actions * num_states],
        }
    }

    /// Builds counts from successor tallies, deriving the visit counts.
    pub fn from_successors(num_states: usize, num_actions: usize, successors: Vec<u64>) -> Result<Self> {
        if successors.len() != num_states * num_actions * num_states {
            return Err(Error::Dimension("successor table size".into()));
        }
        let visits = successors.chunks(num_states).map(|row| row.iter().sum()).collect();
        Ok(TransitionCounts { num_states, num_actions, visits, successors })
    }

    /// Records one observed transition `(s, a) -> next`.
    pub fn record(&mut self, s: usize, a: usize, next: usize) {
        let p = s * self.num_actions + a;
        self.visits[p] += 1;
        self.successors[p * self.num_states + next] += 1;
    }

    #[inline]
    pub fn visits(&self, s: usize, a: usize) -> u64 {
        self.visits[s * self.num_actions + a]
    }

    #[inline]
    pub fn successor(&self, s: usize, a: usize, next: usize) -> u64 {
        self.successors[(s * self.num_actions + a) * self.num_states + next]
    }

    pub fn visit_table(&self) -> &[u64] {
        &self.visits
    }

    pub fn total(&self) -> u64 {
        self.visits.iter().sum()
    }

    pub fn min_visits(&self) -> u64 {
        self.visits.iter().copied().min().unwrap_or(0)
    }

    /// Checks `Σ_{s'} n(s',s,a) = n(s,a)` for every pair.
    pub fn check(&self) -> Result<()> {
        let ns = self.num_states;
        if self.visits.len() != ns * self.num_actions || self.successors.len() != self.visits.len() * ns {
            return Err(Error::Dimension("count tables have inconsistent sizes".into()));
        }
        for (p, &n) in self.visits.iter().enumerate() {
            let sum: u64 = self.successors[p * ns..(p + 1) * ns].iter().sum();
            if sum != n {
                return Err(Error::InvalidArgument(format!(
                    "pair {p}: successor counts sum to {sum} but visits are {n}"
                )));
            }
        }
        Ok(())
    }

    /// Stable FNV-1a hash of the count tables, for logging.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for &v in self.visits.iter().chain(&self.successors) {
            for b in v.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }
}

fn check_args(n: u64, delta: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("radius is undefined for zero samples".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta {delta} is outside (0, 1)")));
    }
    Ok(())
}

/// `√(log(4/δ) / (2n))`.
pub fn hoeffding_radius(n: u64, delta: f64) -> Result<f64> {
    check_args(n, delta)?;
    Ok(((4.0 / delta).ln() / (2.0 * n as f64)).sqrt())
}

/// `√(2 p̂(1−p̂) log(4/δ) / n) + 2 log(4/δ) / (3n)`.
pub fn bernstein_radius(p_hat: f64, n: u64, delta: f64) -> Result<f64> {
    check_args(n, delta)?;
    if !(0.0..=1.0).contains(&p_hat) {
        return Err(Error::InvalidArgument(format!("p_hat {p_hat} is outside [0, 1]")));
    }
    let log_term = (4.0 / delta).ln();
    let n = n as f64;
    Ok((2.0 * p_hat * (1.0 - p_hat) * log_term / n).sqrt() + 2.0 * log_term / (3.0 * n))
}

/// Empirical kernel with per-entry radii; the set of kernels `P'` with
/// `|P'(s'|s,a) − p̂(s'|s,a)| ≤ β(s,a,s')` everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceModel {
    pub num_states: usize,
    pub num_actions: usize,
    /// Indexed like a model kernel: `(s * |A| + a) * |S| + s'`.
    pub p_hat: Vec<f64>,
    pub beta: Vec<f64>,
    /// `false` for rows with no visits (uniform `p̂`, `β = 1`).
    pub known: Vec<bool>,
    pub delta: f64,
    pub counts: TransitionCounts,
}

/// Builds the confidence model from counts with per-entry failure probability `delta`.
pub fn build_confidence_model(counts: &TransitionCounts, delta: f64) -> Result<ConfidenceModel> {
    counts.check()?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta {delta} is outside (0, 1)")));
    }
    let (ns, na) = (counts.num_states, counts.num_actions);
    let mut p_hat = vec![0.0; ns * na * ns];
    let mut beta = vec![1.0; ns * na * ns];
    let mut known = vec![false; ns * na];
    for s in 0..ns {
        for a in 0..na {
            let p = s * na + a;
            let row = p * ns;
            let n = counts.visits(s, a);
            if n == 0 {
                p_hat[row..row + ns].fill(1.0 / ns as f64);
                continue;
            }
            known[p] = true;
            let hoeffding = hoeffding_radius(n, delta)?;
            for next in 0..ns {
                let ph = counts.successor(s, a, next) as f64 / n as f64;
                p_hat[row + next] = ph;
                beta[row + next] = bernstein_radius(ph, n, delta)?.min(hoeffding);
            }
        }
    }
    Ok(ConfidenceModel {
        num_states: ns,
        num_actions: na,
        p_hat,
        beta,
        known,
        delta,
        counts: counts.clone(),
    })
}

impl ConfidenceModel {
    /// A model with the given centre and radii, with no count history attached.
    pub fn from_parts(num_states: usize, num_actions: usize, p_hat: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        let len = num_states * num_actions * num_states;
        if p_hat.len() != len || beta.len() != len {
            return Err(Error::Dimension(format!("expected {len} kernel entries")));
        }
        if beta.iter().any(|b| !(*b >= 0.0)) {
            return Err(Error::InvalidArgument("radii must be nonnegative".into()));
        }
        Ok(ConfidenceModel {
            num_states,
            num_actions,
            p_hat,
            beta,
            known: vec![true; num_states * num_actions],
            delta: f64::NAN,
            counts: TransitionCounts::new(num_states, num_actions),
        })
    }

    /// Zero-radius model pinned to `kernel`.
    pub fn exact(num_states: usize, num_actions: usize, kernel: &[f64]) -> Result<Self> {
        Self::from_parts(num_states, num_actions, kernel.to_vec(), vec![0.0; kernel.len()])
    }

    /// Copy with every radius set to one, which admits every kernel.
    pub fn widened(&self) -> Self {
        ConfidenceModel { beta: vec![1.0; self.beta.len()], ..self.clone() }
    }

    #[inline]
    pub fn index(&self, s: usize, a: usize, next: usize) -> usize {
        (s * self.num_actions + a) * self.num_states + next
    }

    /// Lower end of the interval, clipped to `[0, 1]`.
    #[inline]
    pub fn lower(&self, s: usize, a: usize, next: usize) -> f64 {
        let k = self.index(s, a, next);
        (self.p_hat[k] - self.beta[k]).clamp(0.0, 1.0)
    }

    /// Upper end of the interval, clipped to `[0, 1]`.
    #[inline]
    pub fn upper(&self, s: usize, a: usize, next: usize) -> f64 {
        let k = self.index(s, a, next);
        (self.p_hat[k] + self.beta[k]).clamp(0.0, 1.0)
    }

    /// `p̂(·|s,a)`.
    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let k = self.index(s, a, 0);
        &self.p_hat[k..k + self.num_states]
    }

    /// Whether `kernel` lies inside every interval.
    pub fn contains(&self, kernel: &[f64]) -> Result<bool> {
        if kernel.len() != self.p_hat.len() {
            return Err(Error::Dimension(format!(
                "kernel has {} entries, expected {}",
                kernel.len(),
                self.p_hat.len()
            )));
        }
        Ok(kernel
            .iter()
            .zip(&self.p_hat)
            .zip(&self.beta)
            .all(|((p, ph), b)| (p - ph).abs() <= b + CONTAINS_TOL))
    }

    /// Number of kernel entries falling outside their intervals.
    pub fn count_outside(&self, kernel: &[f64]) -> usize {
        kernel
            .iter()
            .zip(&self.p_hat)
            .zip(&self.beta)
            .filter(|((p, ph), b)| (*p - *ph).abs() > *b + CONTAINS_TOL)
            .count()
    }

    pub fn max_beta(&self) -> f64 {
        self.beta.iter().fold(0.0, |a, &b| a.max(b))
    }

    pub fn mean_beta(&self) -> f64 {
        self.beta.iter().sum::<f64>() / self.beta.len().max(1) as f64
    }
}
