//! Exact planning on a preset grid: optimal policy, its values, occupancy and return variance.

use cmdp_lab::gridworld::ACTION_NAMES;
use cmdp_lab::{evaluate_policy, make_scenario, occupancy, return_variance, solve_cmdp_lp, GridConfig};

fn main() -> cmdp_lab::Result<()> {
    let id = std::env::args().nth(1).unwrap_or_else(|| "1a".into());
    let grid = GridConfig::scenario(&id)?;
    let model = make_scenario(&id)?;
    print!("{}", grid.render());

    let plan = solve_cmdp_lp(&model)?;
    let values = evaluate_policy(&model, &plan.policy)?;
    let s0 = model.initial_state;
    println!("V*_0(s0) = {:.6}", values.v(0, s0));
    for (i, bound) in model.bounds.iter().enumerate() {
        println!("C_{}(s0) = {:.6} (bound {bound})", i + 1, values.c(i, 0, s0));
    }

    let occ = occupancy(&model, &plan.policy)?;
    println!("expected visits per cell:");
    for y in (0..grid.height).rev() {
        let row: Vec<String> = (0..grid.width)
            .map(|x| {
                let s = grid.state(x, y);
                format!("{:6.3}", (0..model.horizon).map(|h| occ.state_mass(h, s)).sum::<f64>())
            })
            .collect();
        println!("  {}", row.join(" "));
    }

    println!("first-step action distribution at the start:");
    for (a, name) in ACTION_NAMES.iter().enumerate() {
        println!("  {name:>5}: {:.3}", plan.policy.prob(0, s0, a));
    }

    let var = return_variance(&model, &plan.policy)?;
    println!("return variance from s0: {:.6} (H^2 = {})", var.v(0, s0), model.horizon * model.horizon);
    Ok(())
}
