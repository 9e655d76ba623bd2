use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cmdp_lab::harness::{
    default_out_dir, read_records_from, summarize_records, write_records_to, write_summary, Algorithm, ExperimentConfig,
    ModelSource, RunRecord, OUT_DIR_ENV,
};
use cmdp_lab::{solve_cmdp_lp, write_model, CmdpModel, Error, GridConfig, Result};

#[derive(Parser)]
#[command(name = "cmdp-lab", version, about = "Planning and PAC learning experiments on tabular constrained MDPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a model exactly and print the optimal value and costs.
    Solve {
        #[command(flatten)]
        model: ModelArgs,
        /// Also write the baseline row as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the model in the TOML text format.
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Optimistic generative-model learning over per-pair sample budgets.
    Gmbl {
        #[command(flatten)]
        run: RunArgs,
        /// Per-pair sample counts.
        #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
        budgets: Vec<u64>,
    },
    /// Online episodic learning, evaluated at episode checkpoints.
    Online {
        #[command(flatten)]
        run: RunArgs,
        /// Episode checkpoints.
        #[arg(long, value_delimiter = ',', default_value = "10,100,1000,2000")]
        episodes: Vec<u64>,
    },
    /// Both learners on one or more scenarios, into one CSV.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
        budgets: Vec<u64>,
        #[arg(long, value_delimiter = ',', default_value = "10,100,1000,2000")]
        episodes: Vec<u64>,
    },
    /// Aggregate a results CSV per scenario, algorithm and budget.
    Summarize {
        /// Results CSV.
        #[arg(long)]
        csv: PathBuf,
        /// Summary CSV; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ModelArgs {
    /// Preset scenario id (1a, 1b, 2); comma-separated for sweep.
    #[arg(long, value_delimiter = ',', conflicts_with = "model")]
    scenario: Vec<String>,
    /// Model file in the TOML text format.
    #[arg(long)]
    model: Option<PathBuf>,
}

impl ModelArgs {
    fn sources(&self) -> Result<Vec<ModelSource>> {
        match (&self.model, self.scenario.as_slice()) {
            (Some(p), _) => Ok(vec![ModelSource::File(p.clone())]),
            (None, []) => Err(Error::InvalidArgument("pass --scenario or --model".into())),
            (None, ids) => Ok(ids.iter().map(|id| ModelSource::Scenario(id.clone())).collect()),
        }
    }

    fn single(&self) -> Result<ModelSource> {
        let mut s = self.sources()?;
        if s.len() != 1 {
            return Err(Error::InvalidArgument("this command takes a single scenario".into()));
        }
        Ok(s.remove(0))
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Online count target override.
    #[arg(long)]
    m: Option<u64>,
    /// Online replanning stride in episodes.
    #[arg(long, default_value_t = 1)]
    rebuild_every: u64,
    /// A seed count (seeds 0..n) or a comma-separated seed list such as `3,7` or `5,`.
    #[arg(long, default_value = "25")]
    seeds: String,
    /// Output CSV; defaults to a file in $CMDP_LAB_OUT_DIR or ./results.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 means one per core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Record wall-clock times, which makes output differ between runs.
    #[arg(long)]
    timing: bool,
    /// Prepend a row for the exact optimum.
    #[arg(long)]
    baseline: bool,
}

fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let bad = || Error::InvalidArgument(format!("bad --seeds value {text:?}"));
    if text.contains(',') {
        text.split(',').filter(|s| !s.trim().is_empty()).map(|s| s.trim().parse().map_err(|_| bad())).collect()
    } else {
        let n: u64 = text.trim().parse().map_err(|_| bad())?;
        Ok((0..n).collect())
    }
}

impl RunArgs {
    fn config(&self, source: ModelSource, algorithm: Algorithm, budgets: &[u64]) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::new(source, algorithm, budgets.to_vec());
        cfg.seeds = parse_seeds(&self.seeds)?;
        cfg.epsilon = self.epsilon;
        cfg.delta = self.delta;
        cfg.m = self.m;
        cfg.rebuild_every = self.rebuild_every;
        cfg.jobs = self.jobs;
        cfg.timing = self.timing;
        cfg.baseline = self.baseline;
        Ok(cfg)
    }

    fn out_path(&self, name: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| default_out_dir().join(format!("{name}.csv")))
    }
}

fn num_constraints(records: &[RunRecord], fallback: &CmdpModel) -> Result<usize> {
    let n = records.first().map_or(fallback.num_constraints(), |r| r.violations.len());
    if records.iter().any(|r| r.violations.len() != n) {
        return Err(Error::Dimension("models in one CSV must share the constraint count".into()));
    }
    Ok(n)
}

fn run_experiments(configs: Vec<ExperimentConfig>, out: PathBuf) -> Result<()> {
    let mut records = Vec::new();
    let mut model = None;
    for cfg in &configs {
        log::info!("running {} on {}", cfg.algorithm, cfg.source.label());
        let m = cfg.source.load()?;
        let optimum = solve_cmdp_lp(&m)?;
        records.extend(cmdp_lab::harness::run_experiment_on(cfg, &m, &optimum)?);
        model.get_or_insert(m);
    }
    let n = num_constraints(&records, model.as_ref().expect("at least one config"))?;
    write_records_to(&out, &records, n)?;
    println!("wrote {} rows to {}", records.len(), out.display());
    Ok(())
}

fn solve(model: &ModelArgs, out: Option<PathBuf>, export: Option<PathBuf>) -> Result<()> {
    let source = model.single()?;
    let m = source.load()?;
    let plan = solve_cmdp_lp(&m)?;
    println!("model: {} (|S|={}, |A|={}, H={}, N={})", source.label(), m.num_states, m.num_actions, m.horizon, m.num_constraints());
    if let ModelSource::Scenario(id) = &source {
        print!("{}", GridConfig::scenario(id)?.render());
    }
    println!("optimal value: {:.9}", plan.objective);
    for (i, (c, b)) in plan.constraint_values.iter().zip(&m.bounds).enumerate() {
        println!("constraint {}: {:.9} (bound {})", i + 1, c, b);
    }
    if let Some(path) = export {
        let meta = match &source {
            ModelSource::Scenario(id) => Some(GridConfig::scenario(id)?),
            ModelSource::File(_) => None,
        };
        write_model(&path, &m, meta.as_ref())?;
        println!("wrote model to {}", path.display());
    }
    if let Some(path) = out {
        let (value_diff, violations) = cmdp_lab::compute_metrics(&m, &plan, &plan.policy)?;
        let row = RunRecord {
            scenario: source.label(),
            algorithm: "exact".into(),
            seed: None,
            budget: cmdp_lab::Budget::Exact,
            value_diff,
            violations,
            wall_time_ms: 0.0,
            elp_status: "optimal".into(),
        };
        write_records_to(&path, &[row], m.num_constraints())?;
        println!("wrote baseline to {}", path.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve { model, out, export } => solve(&model, out, export),
        Command::Gmbl { run, budgets } => {
            let cfg = run.config(run.model.single()?, Algorithm::Gmbl, &budgets)?;
            run_experiments(vec![cfg], run.out_path("gmbl"))
        }
        Command::Online { run, episodes } => {
            let cfg = run.config(run.model.single()?, Algorithm::Online, &episodes)?;
            run_experiments(vec![cfg], run.out_path("online"))
        }
        Command::Sweep { run, budgets, episodes } => {
            let mut configs = Vec::new();
            for source in run.model.sources()? {
                configs.push(run.config(source.clone(), Algorithm::Gmbl, &budgets)?);
                configs.push(run.config(source, Algorithm::Online, &episodes)?);
            }
            run_experiments(configs, run.out_path("sweep"))
        }
        Command::Summarize { csv, out } => {
            let (records, n) = read_records_from(&csv)?;
            let rows = summarize_records(&records, n);
            for r in rows.iter().filter(|r| r.warning.is_some()) {
                log::warn!("{} {} {}: {}", r.scenario, r.algorithm, r.budget, r.warning.as_deref().unwrap_or(""));
            }
            match out {
                Some(path) => {
                    write_summary(std::fs::File::create(&path)?, &rows, n)?;
                    println!("wrote {} groups to {}", rows.len(), path.display());
                }
                None => write_summary(std::io::stdout().lock(), &rows, n)?,
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::Io(_)) {
                eprintln!("(default output directory comes from {OUT_DIR_ENV})");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
