//! Extended LP over a confidence set: optimism and the two solution routes.

use std::time::Instant;

use cmdp_lab::gmbl::sample_uniformly;
use cmdp_lab::planner::solve_extended_lp_with;
use cmdp_lab::{
    build_confidence_model, evaluate_policy, make_grid_cmdp, make_scenario_2, plan_optimistic, solve_cmdp_lp, ElpMethod,
    ExtendedLpSolver, GridConfig, RngStreams, ScenarioKind,
};

fn main() -> cmdp_lab::Result<()> {
    let model = make_scenario_2()?;
    let truth = solve_cmdp_lp(&model)?;
    println!("true optimum {:.6}", truth.objective);

    let counts = sample_uniformly(&model, 200, &RngStreams::new(1))?;
    let cm = build_confidence_model(&counts, 1e-3)?;
    println!("confidence set contains the true kernel: {}", cm.contains(&model.kernel)?);

    // The direct program grows as H|S|^2|A|, so the two routes are compared on a small grid.
    let mut small = GridConfig::new(3, 2);
    small.horizon = Some(5);
    small.scenario = ScenarioKind::BadState { cell: (1, 1), exit_boost: None };
    let tiny = make_grid_cmdp(&small)?;
    let tiny_cm = build_confidence_model(&sample_uniformly(&tiny, 100, &RngStreams::new(1))?, 1e-3)?;
    for method in [ElpMethod::ColumnGeneration, ElpMethod::Direct] {
        let start = Instant::now();
        let plan = solve_extended_lp_with(&tiny_cm, &tiny.stub(), method)?;
        println!(
            "3x2 grid, {method:?}: optimistic value {:.6}, {} LP solves, {} pivots, {:.1?}",
            plan.objective,
            plan.lp_solves,
            plan.lp_iterations,
            start.elapsed()
        );
    }

    let mut solver = ExtendedLpSolver::new();
    let (plan, status) = plan_optimistic(&mut solver, &cm, &model.stub())?;
    let vals = evaluate_policy(&model, &plan.policy)?;
    println!(
        "{} plan on the true model: V = {:.6}, C = {:.6}",
        status.as_str(),
        vals.v(0, model.initial_state),
        vals.c(0, 0, model.initial_state)
    );
    Ok(())
}
