//! A custom grid world, written to and read back from the TOML model format.

use cmdp_lab::{make_grid_cmdp, read_model, solve_cmdp_lp, write_model, GridConfig, ScenarioKind};

fn main() -> cmdp_lab::Result<()> {
    let mut grid = GridConfig::new(4, 3);
    grid.goal = (3, 2);
    grid.slip = 0.1;
    grid.scenario = ScenarioKind::RightBudget { budget: Some(3.5) };
    let model = make_grid_cmdp(&grid)?;
    print!("{}", grid.render());
    println!("|S| = {}, H = {}", model.num_states, model.horizon);

    let path = std::env::temp_dir().join("cmdp_lab_custom_grid.toml");
    write_model(&path, &model, Some(&grid))?;
    let (back, meta) = read_model(&path)?;
    assert_eq!(back, model);
    println!("round trip through {} ok, metadata kept: {}", path.display(), meta.is_some());

    let plan = solve_cmdp_lp(&back)?;
    println!("optimal value {:.6}, right moves {:.6}", plan.objective, plan.constraint_values[0]);
    Ok(())
}
