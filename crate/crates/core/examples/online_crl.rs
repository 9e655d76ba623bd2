//! Online-CRL on scenario 2 with a small count target, plus the knownness
//! diagnostics of the final policy.

use cmdp_lab::online::{Knownness, OnlineConfig};
use cmdp_lab::{compute_metrics, knownness_report, make_scenario_2, run_online, solve_cmdp_lp, RngStreams};

fn main() -> cmdp_lab::Result<()> {
    let model = make_scenario_2()?;
    let optimum = solve_cmdp_lp(&model)?;
    let mut cfg = OnlineConfig::new(0.1, 0.1, 300);
    cfg.m = Some(5);
    cfg.checkpoints = vec![10, 50, 100, 200, 300];
    let run = run_online(&model, &cfg, &RngStreams::new(7))?;

    println!("w_min {:.3e}, U_max {}, delta_1 {:.3e}", run.params.w_min, run.params.u_max, run.params.delta_1);
    println!("{:>8} {:>9} {:>10} {:>11} {:>10}", "episode", "samples", "objective", "value_diff", "violation");
    for c in &run.checkpoints {
        let (vd, viol) = compute_metrics(&model, &optimum, &c.policy)?;
        println!("{:>8} {:>9} {:>10.4} {vd:>11.4} {:>10.4}", c.episode, c.samples, c.objective, viol[0]);
    }

    let report = knownness_report(&model, &run.state.policy, &run.state.counts, run.m, run.params.w_min)?;
    let active = report.pairs.iter().filter(|p| p.knownness != Knownness::Inactive).count();
    println!("{active} active pairs; classes (knownness, importance) -> size:");
    for ((kappa, iota), size) in &report.partition {
        println!("  ({kappa}, {iota}) -> {size}");
    }
    println!("some class larger than its knownness: {}", report.violation);
    Ok(())
}
