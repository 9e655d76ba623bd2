//! The bounded simplex on a small production-planning LP.

use cmdp_lab::lp::{solve, solve_with, LpProblem, Pricing, SolverOptions};

fn main() -> cmdp_lab::Result<()> {
    // max 3x + 5y  s.t.  x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18, x + y = z, z ≤ 7.
    let mut lp = LpProblem::new(3);
    lp.set_objective(0, 3.0);
    lp.set_objective(1, 5.0);
    lp.set_bounds(0, 0.0, 4.0);
    lp.add_le(vec![(1, 2.0)], 12.0);
    lp.add_le(vec![(0, 3.0), (1, 2.0)], 18.0);
    lp.add_eq(vec![(0, 1.0), (1, 1.0), (2, -1.0)], 0.0);
    lp.set_bounds(2, 0.0, 7.0);

    let sol = solve(&lp)?;
    println!("status {:?}, objective {:.6}, {} pivots", sol.status, sol.objective, sol.iterations);
    println!("x = {:?}", sol.x.as_deref().unwrap_or_default());
    println!("row prices = {:?}", sol.duals.as_deref().unwrap_or_default());

    let bland = solve_with(&lp, SolverOptions { pricing: Pricing::Bland, max_iterations: None })?;
    println!("Bland's rule: objective {:.6}, {} pivots", bland.objective, bland.iterations);
    Ok(())
}
