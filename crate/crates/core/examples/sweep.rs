//! A small seeded sweep written as CSV and summarized per budget.

use cmdp_lab::harness::{summarize_records, write_records, write_summary};
use cmdp_lab::{run_experiment, Algorithm, ExperimentConfig, ModelSource};

fn main() -> cmdp_lab::Result<()> {
    let mut cfg = ExperimentConfig::new(ModelSource::Scenario("1a".into()), Algorithm::Gmbl, vec![100, 1000]);
    cfg.seeds = (0..5).collect();
    cfg.baseline = true;
    let records = run_experiment(&cfg)?;

    let stdout = std::io::stdout();
    write_records(stdout.lock(), &records, 1)?;
    println!();
    write_summary(stdout.lock(), &summarize_records(&records, 1), 1)?;
    Ok(())
}
