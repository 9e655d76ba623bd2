//! Tabular finite-horizon constrained MDPs: exact planning through
//! occupancy-measure linear programs, optimistic planning over confidence
//! sets of transition kernels, and two PAC learners built on top of it
//! (uniform generative sampling and online episodic exploration).

pub mod confidence;
pub mod error;
pub mod eval;
pub mod format;
pub mod gmbl;
pub mod gridworld;
pub mod harness;
pub mod lp;
pub mod model;
pub mod online;
pub mod planner;
pub mod sim;

pub use error::{Error, Result};
pub use eval::{evaluate_policy, local_variance, occupancy, return_variance};
pub use model::{validate_model, CmdpModel, ModelStub, OccupancyMeasure, Policy, Trajectory, ValueTables};
pub use sim::{rollout_episode, sample_transition, RngStreams};
pub use confidence::{build_confidence_model, ConfidenceModel, TransitionCounts};
pub use planner::{plan_optimistic, solve_cmdp_lp, ElpStatus, solve_extended_lp, ElpMethod, ExtendedLpSolver, PlanResult};
pub use format::{model_from_str, model_to_string, read_model, write_model};
pub use gridworld::{make_grid_cmdp, make_scenario, make_scenario_1a, make_scenario_1b, make_scenario_2, GridConfig, ScenarioKind};
pub use gmbl::{gmbl_budget, gmbl_delta_p, run_gmbl, GmblConfig, GmblDiagnostics};
pub use online::{knownness_report, online_params, run_online, theoretical_m, KnownnessReport, OnlineConfig, OnlineRun};
pub use harness::{compute_metrics, run_experiment, summarize, Algorithm, Budget, ExperimentConfig, ModelSource, RunRecord};
