//! Optimistic-GMBL on scenario 1a across per-pair sample budgets.

use cmdp_lab::{compute_metrics, gmbl_budget, make_scenario_1a, run_gmbl, solve_cmdp_lp, GmblConfig, RngStreams};

fn main() -> cmdp_lab::Result<()> {
    let model = make_scenario_1a()?;
    let optimum = solve_cmdp_lp(&model)?;
    let (eps, delta) = (0.1, 0.1);
    let theory = gmbl_budget(eps, delta, 1, model.num_states, model.num_actions, model.horizon)?;
    println!("theoretical per-pair budget at eps={eps}: {theory}");

    println!("{:>8} {:>10} {:>10} {:>11} {:>10}", "n", "max beta", "objective", "value_diff", "violation");
    for n in [30, 100, 1000, 10000] {
        let cfg = GmblConfig::new(eps, delta).with_samples(n);
        let (policy, diag) = run_gmbl(&model, &cfg, &RngStreams::new(0))?;
        let (vd, viol) = compute_metrics(&model, &optimum, &policy)?;
        println!("{n:>8} {:>10.4} {:>10.4} {vd:>11.4} {:>10.4}", diag.max_beta, diag.objective, viol[0]);
    }
    Ok(())
}
