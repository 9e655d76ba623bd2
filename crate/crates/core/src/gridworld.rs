//! Grid-world CMDPs: a parametric builder and the three preset scenarios.
//!
//! Cell `(x, y)` is state `y * width + x`. Actions are `0` up (`y + 1`),
//! `1` down, `2` left and `3` right. The goal is absorbing and pays reward 1
//! per step spent there, under every action.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::CmdpModel;
use crate::planner::solve_cmdp_lp;

pub const UP: usize = 0;
pub const DOWN: usize = 1;
pub const LEFT: usize = 2;
pub const RIGHT: usize = 3;
pub const NUM_ACTIONS: usize = 4;
pub const ACTION_NAMES: [&str; NUM_ACTIONS] = ["up", "down", "left", "right"];

/// Stable scenario identifiers.
pub const SCENARIOS: [&str; 3] = ["1a", "1b", "2"];

/// What the single constraint of a grid measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScenarioKind {
    Unconstrained,
    /// Cost 1 for every right move. Without an explicit budget the bound is
    /// the number of right moves on a shortest path plus one half.
    RightBudget { budget: Option<f64> },
    /// Cost 1 for every step spent in `cell`, bound 0. Slips never enter the
    /// cell, and its stick probability is lowered by `exit_boost` (default:
    /// all of it).
    BadState { cell: (usize, usize), exit_boost: Option<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub width: usize,
    pub height: usize,
    pub start: (usize, usize),
    pub goal: (usize, usize),
    /// Total probability of moving in one of the three unintended directions.
    pub slip: f64,
    /// Probability of staying put.
    pub self_stick: f64,
    /// Defaults to `2 * (width + height)`.
    pub horizon: Option<usize>,
    pub scenario: ScenarioKind,
}

impl GridConfig {
    /// A corner-to-corner grid with default slip and no constraint.
    pub fn new(width: usize, height: usize) -> Self {
        GridConfig {
            width,
            height,
            start: (0, 0),
            goal: (width.saturating_sub(1), height.saturating_sub(1)),
            slip: 0.1,
            self_stick: 0.1,
            horizon: None,
            scenario: ScenarioKind::Unconstrained,
        }
    }

    pub fn scenario_1a() -> Self {
        GridConfig { scenario: ScenarioKind::RightBudget { budget: None }, ..GridConfig::new(3, 3) }
    }

    pub fn scenario_1b() -> Self {
        GridConfig { scenario: ScenarioKind::RightBudget { budget: None }, ..GridConfig::new(5, 5) }
    }

    pub fn scenario_2() -> Self {
        GridConfig {
            scenario: ScenarioKind::BadState { cell: (1, 1), exit_boost: None },
            ..GridConfig::new(3, 3)
        }
    }

    /// Looks up a preset by its identifier.
    pub fn scenario(id: &str) -> Result<Self> {
        match id {
            "1a" => Ok(Self::scenario_1a()),
            "1b" => Ok(Self::scenario_1b()),
            "2" => Ok(Self::scenario_2()),
            _ => Err(Error::InvalidArgument(format!(
                "unknown scenario {id:?}; expected one of {}",
                SCENARIOS.join(", ")
            ))),
        }
    }

    pub fn num_states(&self) -> usize {
        self.width * self.height
    }

    pub fn state(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn cell(&self, s: usize) -> (usize, usize) {
        (s % self.width, s / self.width)
    }

    pub fn resolved_horizon(&self) -> usize {
        self.horizon.unwrap_or(2 * (self.width + self.height))
    }

    /// The constraint bound, if the scenario has one.
    pub fn bound(&self) -> Option<f64> {
        match &self.scenario {
            ScenarioKind::Unconstrained => None,
            ScenarioKind::RightBudget { budget } => {
                Some(budget.unwrap_or(self.goal.0.saturating_sub(self.start.0) as f64 + 0.5))
            }
            ScenarioKind::BadState { .. } => Some(0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.width == 0 || self.height == 0 {
            return bad("grid dimensions must be positive".into());
        }
        let in_grid = |(x, y): (usize, usize)| x < self.width && y < self.height;
        if !in_grid(self.start) || !in_grid(self.goal) {
            return bad("start and goal must lie on the grid".into());
        }
        if self.start == self.goal {
            return bad("start and goal must differ".into());
        }
        if !(0.0..1.0).contains(&self.slip) || !(0.0..1.0).contains(&self.self_stick) {
            return bad("slip and self_stick must lie in [0, 1)".into());
        }
        if self.slip + self.self_stick >= 1.0 {
            return bad(format!("slip + self_stick = {} must be below 1", self.slip + self.self_stick));
        }
        if self.horizon == Some(0) {
            return bad("horizon must be positive".into());
        }
        match &self.scenario {
            ScenarioKind::Unconstrained => {}
            ScenarioKind::RightBudget { budget } => {
                if budget.is_some_and(|b| !(b >= 0.0)) {
                    return bad("right-move budget must be nonnegative".into());
                }
            }
            ScenarioKind::BadState { cell, exit_boost } => {
                if !in_grid(*cell) || *cell == self.start || *cell == self.goal {
                    return bad("bad cell must lie on the grid away from start and goal".into());
                }
                if exit_boost.is_some_and(|b| !(b >= 0.0)) {
                    return bad("exit boost must be nonnegative".into());
                }
            }
        }
        Ok(())
    }

    /// Cell reached by moving in direction `a`, or `None` at a wall.
    fn neighbor(&self, s: usize, a: usize) -> Option<usize> {
        let (x, y) = self.cell(s);
        let (nx, ny) = match a {
            UP => (x, y + 1),
            DOWN => (x, y.checked_sub(1)?),
            LEFT => (x.checked_sub(1)?, y),
            _ => (x + 1, y),
        };
        (nx < self.width && ny < self.height).then(|| self.state(nx, ny))
    }

    /// Draws the grid top row first: `S` start, `G` goal, `X` bad cell.
    pub fn render(&self) -> String {
        let bad = match &self.scenario {
            ScenarioKind::BadState { cell, .. } => Some(*cell),
            _ => None,
        };
        let mut out = String::new();
        for y in (0..self.height).rev() {
            for x in 0..self.width {
                let c = if (x, y) == self.start {
                    'S'
                } else if (x, y) == self.goal {
                    'G'
                } else if Some((x, y)) == bad {
                    'X'
                } else {
                    '.'
                };
                out.push(c);
            }
            out.push('\n');
        }
        out
    }
}

/// Builds the CMDP of a grid. Constrained scenarios are checked for
/// feasibility with the exact LP.
pub fn make_grid_cmdp(config: &GridConfig) -> Result<CmdpModel> {
    config.validate()?;
    let ns = config.num_states();
    let goal = config.state(config.goal.0, config.goal.1);
    let (bad, exit_boost) = match &config.scenario {
        ScenarioKind::BadState { cell, exit_boost } => {
            (Some(config.state(cell.0, cell.1)), exit_boost.unwrap_or(config.self_stick))
        }
        _ => (None, 0.0),
    };

    let mut kernel = vec![0.0; ns * NUM_ACTIONS * ns];
    for s in 0..ns {
        for a in 0..NUM_ACTIONS {
            let row = &mut kernel[(s * NUM_ACTIONS + a) * ns..(s * NUM_ACTIONS + a + 1) * ns];
            if s == goal {
                row[goal] = 1.0;
                continue;
            }
            let stick = if Some(s) == bad { (config.self_stick - exit_boost).max(0.0) } else { config.self_stick };
            let target = |d: usize| config.neighbor(s, d).unwrap_or(s);
            row[target(a)] += 1.0 - config.slip - stick;
            row[s] += stick;
            let others: Vec<usize> = (0..NUM_ACTIONS)
                .filter(|&d| d != a)
                .filter(|&d| bad.is_none() || Some(target(d)) != bad)
                .collect();
            if others.is_empty() {
                row[s] += config.slip;
            } else {
                let share = config.slip / others.len() as f64;
                for d in others {
                    row[target(d)] += share;
                }
            }
        }
    }

    let mut reward = vec![0.0; ns * NUM_ACTIONS];
    reward[goal * NUM_ACTIONS..(goal + 1) * NUM_ACTIONS].fill(1.0);
    let mut costs = Vec::new();
    match &config.scenario {
        ScenarioKind::Unconstrained => {}
        ScenarioKind::RightBudget { .. } => {
            costs = vec![0.0; ns * NUM_ACTIONS];
            for s in 0..ns {
                costs[s * NUM_ACTIONS + RIGHT] = 1.0;
            }
        }
        ScenarioKind::BadState { .. } => {
            costs = vec![0.0; ns * NUM_ACTIONS];
            let b = bad.expect("bad-state scenario has a bad cell");
            costs[b * NUM_ACTIONS..(b + 1) * NUM_ACTIONS].fill(1.0);
        }
    }
    let bounds: Vec<f64> = config.bound().into_iter().collect();
    let start = config.state(config.start.0, config.start.1);
    let model = CmdpModel::new(ns, NUM_ACTIONS, config.resolved_horizon(), start, kernel, reward, costs, bounds)?;
    if !model.bounds.is_empty() {
        solve_cmdp_lp(&model).map_err(|e| match e {
            Error::Infeasible(msg) => Error::Infeasible(format!("grid scenario is infeasible: {msg}")),
            other => other,
        })?;
    }
    Ok(model)
}

/// 3×3 grid with a budget on right moves.
pub fn make_scenario_1a() -> Result<CmdpModel> {
    make_grid_cmdp(&GridConfig::scenario_1a())
}

/// 5×5 grid with a budget on right moves.
pub fn make_scenario_1b() -> Result<CmdpModel> {
    make_grid_cmdp(&GridConfig::scenario_1b())
}

/// 3×3 grid with a bad centre cell that must never be visited.
pub fn make_scenario_2() -> Result<CmdpModel> {
    make_grid_cmdp(&GridConfig::scenario_2())
}

/// Builds a preset scenario by identifier.
pub fn make_scenario(id: &str) -> Result<CmdpModel> {
    make_grid_cmdp(&GridConfig::scenario(id)?)
}
