//! Experiment sweeps: run a learner over seeds and budgets, score each
//! learned policy against the exact optimum, and read and write the results
//! as CSV.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::eval::evaluate_policy;
use crate::format::read_model;
use crate::gmbl::{run_gmbl, GmblConfig};
use crate::gridworld::make_scenario;
use crate::model::{CmdpModel, Policy};
use crate::online::{run_online, OnlineConfig};
use crate::planner::{solve_cmdp_lp, ElpStatus, PlanResult};
use crate::sim::RngStreams;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "CMDP_LAB_OUT_DIR";
pub const DEFAULT_SEED_COUNT: u64 = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    Gmbl,
    Online,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Gmbl => "gmbl",
            Algorithm::Online => "online",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gmbl" => Ok(Algorithm::Gmbl),
            "online" => Ok(Algorithm::Online),
            _ => Err(Error::InvalidArgument(format!("unknown algorithm {s:?}"))),
        }
    }
}

/// Where the true model comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelSource {
    Scenario(String),
    File(PathBuf),
}

impl ModelSource {
    /// Scenario id, or the file stem of a model file.
    pub fn label(&self) -> String {
        match self {
            ModelSource::Scenario(id) => id.clone(),
            ModelSource::File(p) => p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned()),
        }
    }

    pub fn load(&self) -> Result<CmdpModel> {
        match self {
            ModelSource::Scenario(id) => make_scenario(id),
            ModelSource::File(p) => Ok(read_model(p)?.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub source: ModelSource,
    pub algorithm: Algorithm,
    /// Per-pair sample counts for GMBL, episode checkpoints for Online-CRL.
    pub budgets: Vec<u64>,
    pub seeds: Vec<u64>,
    pub epsilon: f64,
    pub delta: f64,
    /// Online-CRL count target override.
    pub m: Option<u64>,
    pub rebuild_every: u64,
    /// Prepend a row scoring the exact optimum against itself.
    pub baseline: bool,
    /// Record wall-clock times; off by default so output is reproducible byte for byte.
    pub timing: bool,
    /// Worker threads; 0 uses rayon's default.
    pub jobs: usize,
}

impl ExperimentConfig {
    pub fn new(source: ModelSource, algorithm: Algorithm, budgets: Vec<u64>) -> Self {
        ExperimentConfig {
            source,
            algorithm,
            budgets,
            seeds: (0..DEFAULT_SEED_COUNT).collect(),
            epsilon: 0.1,
            delta: 0.1,
            m: None,
            rebuild_every: 1,
            baseline: false,
            timing: false,
            jobs: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.budgets.is_empty() || self.seeds.is_empty() {
            return Err(Error::InvalidArgument("budgets and seeds must be nonempty".into()));
        }
        if self.budgets.contains(&0) {
            return Err(Error::InvalidArgument("budgets must be positive".into()));
        }
        if let ModelSource::Scenario(id) = &self.source {
            crate::gridworld::GridConfig::scenario(id)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Budget {
    /// The exact optimum, scored against itself.
    Exact,
    /// Total samples drawn.
    Samples(u64),
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Budget::Exact => f.write_str("exact"),
            Budget::Samples(n) => write!(f, "{n}"),
        }
    }
}

impl FromStr for Budget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "exact" {
            return Ok(Budget::Exact);
        }
        s.parse().map(Budget::Samples).map_err(|_| Error::Format(format!("bad budget {s:?}")))
    }
}

/// One scored policy.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub scenario: String,
    pub algorithm: String,
    /// `None` for the baseline row.
    pub seed: Option<u64>,
    pub budget: Budget,
    /// `V*_0(s0) − V_0(s0)` of the learned policy; NaN if the run failed.
    pub value_diff: f64,
    /// `max(C_i,0(s0) − C̄_i, 0)` per constraint.
    pub violations: Vec<f64>,
    pub wall_time_ms: f64,
    pub elp_status: String,
}

/// Scores `learned` on the true model against the exact optimum.
pub fn compute_metrics(true_model: &CmdpModel, true_optimum: &PlanResult, learned: &Policy) -> Result<(f64, Vec<f64>)> {
    let s0 = true_model.initial_state;
    let best = evaluate_policy(true_model, &true_optimum.policy)?.v(0, s0);
    let values = evaluate_policy(true_model, learned)?;
    let violations = (0..true_model.num_constraints())
        .map(|i| (values.c(i, 0, s0) - true_model.bounds[i]).max(0.0))
        .collect();
    Ok((best - values.v(0, s0), violations))
}

struct Scorer<'a> {
    model: &'a CmdpModel,
    optimum: &'a PlanResult,
    scenario: String,
    algorithm: Algorithm,
    timing: bool,
}

impl Scorer<'_> {
    fn record(&self, seed: u64, budget: u64, policy: &Policy, status: ElpStatus, started: Instant) -> Result<RunRecord> {
        let (value_diff, violations) = compute_metrics(self.model, self.optimum, policy)?;
        Ok(RunRecord {
            scenario: self.scenario.clone(),
            algorithm: self.algorithm.to_string(),
            seed: Some(seed),
            budget: Budget::Samples(budget),
            value_diff,
            violations,
            wall_time_ms: self.elapsed(started),
            elp_status: status.as_str().to_string(),
        })
    }

    fn failure(&self, seed: u64, budget: u64, err: &Error, started: Instant) -> RunRecord {
        log::warn!("{} seed {seed} budget {budget} failed: {err}", self.algorithm);
        RunRecord {
            scenario: self.scenario.clone(),
            algorithm: self.algorithm.to_string(),
            seed: Some(seed),
            budget: Budget::Samples(budget),
            value_diff: f64::NAN,
            violations: vec![f64::NAN; self.model.num_constraints()],
            wall_time_ms: self.elapsed(started),
            elp_status: ElpStatus::Failed.as_str().to_string(),
        }
    }

    fn elapsed(&self, started: Instant) -> f64 {
        if self.timing {
            (started.elapsed().as_secs_f64() * 1e6).round() / 1e3
        } else {
            0.0
        }
    }

    fn gmbl_cell(&self, config: &ExperimentConfig, seed: u64, n: u64) -> Result<RunRecord> {
        let started = Instant::now();
        let pairs = self.model.num_pairs() as u64;
        let gcfg = GmblConfig::new(config.epsilon, config.delta).with_samples(n);
        match run_gmbl(self.model, &gcfg, &RngStreams::new(seed)) {
            Ok((policy, diag)) => self.record(seed, diag.total_samples, &policy, diag.status, started),
            Err(e @ (Error::Infeasible(_) | Error::Unbounded | Error::IterationLimit { .. })) => {
                Ok(self.failure(seed, n * pairs, &e, started))
            }
            Err(e) => Err(e),
        }
    }

    fn online_seed(&self, config: &ExperimentConfig, seed: u64) -> Result<Vec<RunRecord>> {
        let started = Instant::now();
        let horizon = self.model.horizon as u64;
        let mut ocfg = OnlineConfig::new(config.epsilon, config.delta, *config.budgets.iter().max().expect("nonempty"));
        ocfg.m = config.m;
        ocfg.checkpoints = config.budgets.clone();
        ocfg.rebuild_every = config.rebuild_every;
        match run_online(self.model, &ocfg, &RngStreams::new(seed)) {
            Ok(run) => {
                let by_episode: BTreeMap<u64, _> = run.checkpoints.iter().map(|c| (c.episode, c)).collect();
                // A run that stopped early answers later checkpoints with its final policy.
                config
                    .budgets
                    .iter()
                    .map(|&k| match by_episode.range(..=k).next_back() {
                        Some((_, c)) => self.record(seed, c.samples, &c.policy, c.status, started),
                        None => Err(Error::InvalidArgument(format!("no checkpoint at or before episode {k}"))),
                    })
                    .collect()
            }
            Err(e @ (Error::Infeasible(_) | Error::Unbounded | Error::IterationLimit { .. })) => {
                Ok(config.budgets.iter().map(|&k| self.failure(seed, k * horizon, &e, started)).collect())
            }
            Err(e) => Err(e),
        }
    }
}

/// Runs every `(seed, budget)` cell of `config` and returns the records in
/// seed-list order, budgets in list order, regardless of scheduling.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    let model = config.source.load()?;
    let optimum = solve_cmdp_lp(&model)?;
    run_experiment_on(config, &model, &optimum)
}

/// As [`run_experiment`], with the model and its exact optimum supplied.
pub fn run_experiment_on(config: &ExperimentConfig, model: &CmdpModel, optimum: &PlanResult) -> Result<Vec<RunRecord>> {
    config.validate()?;
    let scorer = Scorer {
        model,
        optimum,
        scenario: config.source.label(),
        algorithm: config.algorithm,
        timing: config.timing,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    let groups: Vec<Result<Vec<RunRecord>>> = pool.install(|| match config.algorithm {
        Algorithm::Gmbl => config
            .seeds
            .par_iter()
            .map(|&seed| config.budgets.iter().map(|&n| scorer.gmbl_cell(config, seed, n)).collect())
            .collect(),
        Algorithm::Online => config.seeds.par_iter().map(|&seed| scorer.online_seed(config, seed)).collect(),
    });
    let mut records = Vec::new();
    if config.baseline {
        let (value_diff, violations) = compute_metrics(model, optimum, &optimum.policy)?;
        records.push(RunRecord {
            scenario: scorer.scenario.clone(),
            algorithm: config.algorithm.to_string(),
            seed: None,
            budget: Budget::Exact,
            value_diff,
            violations,
            wall_time_ms: 0.0,
            elp_status: ElpStatus::Optimal.as_str().to_string(),
        });
    }
    for g in groups {
        records.extend(g?);
    }
    Ok(records)
}

/// `scenario,algorithm,seed,budget,value_diff,violation_1..violation_N,wall_time_ms,elp_status`.
pub fn csv_header(num_constraints: usize) -> Vec<String> {
    let mut h: Vec<String> = ["scenario", "algorithm", "seed", "budget", "value_diff"].map(String::from).into();
    h.extend((1..=num_constraints).map(|i| format!("violation_{i}")));
    h.push("wall_time_ms".into());
    h.push("elp_status".into());
    h
}

pub fn write_records<W: Write>(writer: W, records: &[RunRecord], num_constraints: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(csv_header(num_constraints))?;
    for r in records {
        if r.violations.len() != num_constraints {
            return Err(Error::Dimension(format!(
                "record has {} violations, header has {num_constraints}",
                r.violations.len()
            )));
        }
        let mut row = vec![
            r.scenario.clone(),
            r.algorithm.clone(),
            r.seed.map_or_else(String::new, |s| s.to_string()),
            r.budget.to_string(),
            r.value_diff.to_string(),
        ];
        row.extend(r.violations.iter().map(f64::to_string));
        row.push(r.wall_time_ms.to_string());
        row.push(r.elp_status.clone());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_records_to(path: impl AsRef<Path>, records: &[RunRecord], num_constraints: usize) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_records(std::fs::File::create(path)?, records, num_constraints)
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::Format(format!("bad {what} value {s:?}")))
}

/// Reads records written by [`write_records`]; returns them with the constraint count.
pub fn read_records<R: Read>(reader: R) -> Result<(Vec<RunRecord>, usize)> {
    let mut r = csv::Reader::from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    let n = header.len().checked_sub(7).ok_or_else(|| Error::Format("header is too short".into()))?;
    if header != csv_header(n) {
        return Err(Error::Format(format!("unexpected header {}", header.join(","))));
    }
    let mut records = Vec::new();
    for row in r.records() {
        let row = row?;
        let seed = match &row[2] {
            "" => None,
            s => Some(s.parse().map_err(|_| Error::Format(format!("bad seed {s:?}")))?),
        };
        records.push(RunRecord {
            scenario: row[0].to_string(),
            algorithm: row[1].to_string(),
            seed,
            budget: row[3].parse()?,
            value_diff: parse_f64(&row[4], "value_diff")?,
            violations: (0..n).map(|i| parse_f64(&row[5 + i], "violation")).collect::<Result<_>>()?,
            wall_time_ms: parse_f64(&row[5 + n], "wall_time_ms")?,
            elp_status: row[6 + n].to_string(),
        });
    }
    Ok((records, n))
}

pub fn read_records_from(path: impl AsRef<Path>) -> Result<(Vec<RunRecord>, usize)> {
    read_records(std::fs::File::open(path)?)
}

/// Mean, median and interquartile range of one metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

impl Stats {
    /// `None` for an empty sample. Quantiles interpolate linearly between order statistics.
    pub fn of(values: &[f64]) -> Option<Stats> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let pos = p * (v.len() - 1) as f64;
            let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
            v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
        };
        Some(Stats {
            mean: v.iter().sum::<f64>() / v.len() as f64,
            median: q(0.5),
            q1: q(0.25),
            q3: q(0.75),
        })
    }

    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

/// Aggregates of one `(scenario, algorithm, budget)` group.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scenario: String,
    pub algorithm: String,
    pub budget: Budget,
    /// Rows in the group, failed ones included.
    pub runs: usize,
    /// Rows with finite metrics.
    pub valid: usize,
    pub value_diff: Option<Stats>,
    pub violations: Vec<Option<Stats>>,
    /// Set when the group has no valid rows.
    pub warning: Option<String>,
}

/// Groups records by scenario, algorithm and budget, in that sort order.
pub fn summarize_records(records: &[RunRecord], num_constraints: usize) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(String, String, Budget), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.scenario.clone(), r.algorithm.clone(), r.budget)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((scenario, algorithm, budget), rows)| {
            let valid: Vec<&&RunRecord> = rows
                .iter()
                .filter(|r| r.value_diff.is_finite() && r.violations.iter().all(|v| v.is_finite()))
                .collect();
            let value_diff = Stats::of(&valid.iter().map(|r| r.value_diff).collect::<Vec<_>>());
            let violations = (0..num_constraints)
                .map(|i| Stats::of(&valid.iter().map(|r| r.violations[i]).collect::<Vec<_>>()))
                .collect();
            let warning = valid.is_empty().then(|| format!("no valid runs among {}", rows.len()));
            SummaryRow {
                scenario,
                algorithm,
                budget,
                runs: rows.len(),
                valid: valid.len(),
                value_diff,
                violations,
                warning,
            }
        })
        .collect()
}

/// Writes the summary as CSV; a group without valid rows becomes a warning row.
pub fn write_summary<W: Write>(writer: W, rows: &[SummaryRow], num_constraints: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = ["scenario", "algorithm", "budget", "runs", "valid"].map(String::from).into();
    let metrics: Vec<String> =
        std::iter::once("value_diff".to_string()).chain((1..=num_constraints).map(|i| format!("violation_{i}"))).collect();
    for m in &metrics {
        for stat in ["mean", "median", "q1", "q3", "iqr"] {
            header.push(format!("{m}_{stat}"));
        }
    }
    header.push("warning".into());
    w.write_record(&header)?;
    for r in rows {
        let mut row = vec![
            r.scenario.clone(),
            r.algorithm.clone(),
            r.budget.to_string(),
            r.runs.to_string(),
            r.valid.to_string(),
        ];
        for s in std::iter::once(&r.value_diff).chain(&r.violations) {
            match s {
                Some(s) => row.extend([s.mean, s.median, s.q1, s.q3, s.iqr()].map(|v| v.to_string())),
                None => row.extend(std::iter::repeat(String::new()).take(5)),
            }
        }
        row.push(r.warning.clone().unwrap_or_default());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Summarizes a results CSV file.
pub fn summarize(path: impl AsRef<Path>) -> Result<(Vec<SummaryRow>, usize)> {
    let (records, n) = read_records_from(path)?;
    Ok((summarize_records(&records, n), n))
}

/// Directory for outputs without an explicit path.
pub fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from("results"), PathBuf::from)
}
