//! Theoretical sample sizes and parameters for the preset grids.

use cmdp_lab::gridworld::NUM_ACTIONS;
use cmdp_lab::{gmbl_budget, gmbl_delta_p, online_params, theoretical_m, GridConfig};

fn main() -> cmdp_lab::Result<()> {
    let (eps, delta) = (0.1, 0.1);
    for id in ["1a", "1b", "2"] {
        let g = GridConfig::scenario(id)?;
        let (s, h) = (g.num_states(), g.resolved_horizon());
        let n = gmbl_budget(eps, delta, 1, s, NUM_ACTIONS, h)?;
        let dp = gmbl_delta_p(delta, 1, s, NUM_ACTIONS, h)?;
        let tm = theoretical_m(eps, delta, 1, s, NUM_ACTIONS, h)?;
        let op = online_params(eps, delta, 1, s, NUM_ACTIONS, h, tm.m)?;
        println!("scenario {id}: |S|={s}, H={h}");
        println!("  GMBL: n = {n} per pair, {} in total, delta_P = {dp:.3e}", n as u128 * (s * NUM_ACTIONS) as u128);
        println!(
            "  Online: m = {:.4e} (episode bound {:.4e}, mismatch bound {:.4e}), w_min = {:.3e}, delta_1 = {:.3e}",
            tm.m, tm.episode_bound, tm.mismatch_bound, op.w_min, op.delta_1
        );
    }
    Ok(())
}
