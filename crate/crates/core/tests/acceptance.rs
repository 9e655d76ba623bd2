//! Acceptance checks. Runs as a plain binary so every line is printed:
//! one `PASS` or `FAIL` line per criterion, then a nonzero exit if any failed.

mod common;

use std::collections::BTreeMap;
use std::process::Command;
use std::time::{Duration, Instant};

use cmdp_lab::confidence::ConfidenceModel;
use cmdp_lab::gmbl::sample_uniformly;
use cmdp_lab::harness::run_experiment_on;
use cmdp_lab::{
    build_confidence_model, evaluate_policy, gmbl_budget, gmbl_delta_p, local_variance, make_scenario, online_params,
    return_variance, solve_cmdp_lp, solve_extended_lp, theoretical_m, Algorithm, Budget, CmdpModel, ExperimentConfig,
    ModelSource, RngStreams,
};
use common::{dp_optimum, eval_policy, gridded_best, median, random_dist, random_model, random_policy, rng};
use rand::Rng;

const LP_DP_TOL: f64 = 1e-6;
const LP_DP_TIME: Duration = Duration::from_secs(10);
const BRUTE_SLACK: f64 = 2e-2;
const BRUTE_FEAS_TOL: f64 = 1e-7;
const BRUTE_TIME: Duration = Duration::from_secs(120);
const ELP_ZERO_TOL: f64 = 1e-6;
const OPTIMISM_TOL: f64 = 1e-6;
const COVERAGE_REPS: u64 = 2000;
const COVERAGE_DELTA: f64 = 0.05;
const COVERAGE_TIME: Duration = Duration::from_secs(60);
const VARIANCE_TOL: f64 = 1e-9;
const SCENARIO2_TOL: f64 = 1e-9;
const TREND_RATIO: f64 = 0.25;
const TREND_FINAL_VIOLATION: f64 = 0.05;
const TREND_SEEDS: u64 = 25;
const TREND_ONLINE_M: u64 = 5;
const FORMULA_REL_TOL: f64 = 1e-6;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn lp_dp_equivalence() -> Outcome {
    let start = Instant::now();
    let mut r = rng(101);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (ns, na, hz) = (r.gen_range(1..=4), r.gen_range(1..=3), r.gen_range(1..=4));
        let m = random_model(&mut r, ns, na, hz, 0);
        let lp = solve_cmdp_lp(&m).map(|p| p.objective).unwrap_or(f64::NAN);
        worst = worst.max((lp - dp_optimum(&m, |s, a| m.reward(s, a))).abs());
    }
    let took = start.elapsed();
    outcome(worst <= LP_DP_TOL && took < LP_DP_TIME, format!("100 models, max |LP - DP| = {worst:.2e}, {took:.2?}"))
}

fn brute_force_equivalence() -> Outcome {
    let start = Instant::now();
    let mut r = rng(202);
    let (mut worst_gap, mut worst_feas, mut compared) = (f64::NEG_INFINITY, 0.0f64, 0);
    let mut errors = 0;
    for _ in 0..20 {
        let (ns, hz) = (r.gen_range(1..=3), r.gen_range(1..=3));
        let m = random_model(&mut r, ns, 2, hz, 1);
        let plan = match solve_cmdp_lp(&m) {
            Ok(p) => p,
            Err(_) => {
                errors += 1;
                continue;
            }
        };
        let cost = eval_policy(&m, &plan.policy, |s, a| m.cost(0, s, a));
        worst_feas = worst_feas.max(cost - m.bounds[0]);
        let slots = (ns * hz) as u32;
        let levels = (2..=21).rev().find(|l: &usize| l.pow(slots) <= 2_000_000).unwrap_or(2);
        if let Some(best) = gridded_best(&m, levels) {
            compared += 1;
            worst_gap = worst_gap.max(best - plan.objective);
        }
    }
    let took = start.elapsed();
    let pass = errors == 0 && worst_gap <= BRUTE_SLACK && worst_feas <= BRUTE_FEAS_TOL && took < BRUTE_TIME;
    outcome(
        pass,
        format!(
            "20 models ({compared} with a feasible grid point, {errors} solver errors), \
             max(grid - LP) = {worst_gap:.2e}, max cost excess = {worst_feas:.2e}, {took:.2?}"
        ),
    )
}

fn elp_degeneracy() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for id in ["1a", "1b", "2"] {
        let m = make_scenario(id).unwrap();
        let exact = solve_cmdp_lp(&m).unwrap().objective;
        let cm = ConfidenceModel::exact(m.num_states, m.num_actions, &m.kernel).unwrap();
        let diff = match solve_extended_lp(&cm, &m.stub()) {
            Ok(p) => (p.objective - exact).abs(),
            Err(_) => f64::INFINITY,
        };
        pass &= diff <= ELP_ZERO_TOL;
        parts.push(format!("{id}: {diff:.2e}"));
    }
    outcome(pass, format!("|ELP - LP| with zero radii: {}", parts.join(", ")))
}

fn optimism() -> Outcome {
    let mut r = rng(404);
    let (mut exceptions, mut worst) = (0, f64::INFINITY);
    for _ in 0..200 {
        let (ns, na, hz, nc) = (r.gen_range(2..=4), r.gen_range(2..=3), r.gen_range(2..=4), r.gen_range(0..=1));
        let m = random_model(&mut r, ns, na, hz, nc);
        let truth = solve_cmdp_lp(&m).unwrap().objective;
        let lam: f64 = r.gen_range(0.0..0.5);
        let mut p_hat = Vec::with_capacity(m.kernel.len());
        for row in m.kernel.chunks(ns) {
            let q = random_dist(&mut r, ns, 0.3);
            p_hat.extend(row.iter().zip(&q).map(|(p, q)| (1.0 - lam) * p + lam * q));
        }
        let beta: Vec<f64> =
            m.kernel.iter().zip(&p_hat).map(|(p, ph)| (p - ph).abs() + r.gen_range(0.0..0.15)).collect();
        let cm = ConfidenceModel::from_parts(ns, na, p_hat, beta).unwrap();
        assert!(cm.contains(&m.kernel).unwrap());
        match solve_extended_lp(&cm, &m.stub()) {
            Ok(p) => {
                let gap = p.objective - truth;
                worst = worst.min(gap);
                if gap < -OPTIMISM_TOL {
                    exceptions += 1;
                }
            }
            Err(_) => exceptions += 1,
        }
    }
    outcome(exceptions == 0, format!("200 confidence models, {exceptions} exceptions, min(ELP - V*) = {worst:.2e}"))
}

fn coverage() -> Outcome {
    let start = Instant::now();
    let kernel = vec![
        0.7, 0.2, 0.1, 0.0, //
        0.25, 0.25, 0.25, 0.25, //
        0.0, 0.5, 0.5, 0.0, //
        0.1, 0.0, 0.0, 0.9, //
        0.4, 0.3, 0.2, 0.1, //
        0.0, 0.0, 1.0, 0.0, //
        0.05, 0.15, 0.3, 0.5, //
        0.6, 0.0, 0.4, 0.0,
    ];
    let (ns, na) = (4, 2);
    let m = CmdpModel::new(ns, na, 1, 0, kernel.clone(), vec![0.0; ns * na], vec![], vec![]).unwrap();
    let allowed = ((ns * ns * na) as f64 * COVERAGE_DELTA).min(1.0);
    let reps = COVERAGE_REPS as f64;
    let slack = 3.0 * (allowed * (1.0 - allowed) / reps).sqrt();
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [50u64, 200] {
        let (mut failures, mut entry_failures) = (0u64, 0usize);
        for rep in 0..COVERAGE_REPS {
            let counts = sample_uniformly(&m, n, &RngStreams::new(rep * 7919 + n)).unwrap();
            let cm = build_confidence_model(&counts, COVERAGE_DELTA).unwrap();
            let outside = cm.count_outside(&kernel);
            entry_failures += outside;
            failures += (outside > 0) as u64;
        }
        let rate = failures as f64 / reps;
        let entry_rate = entry_failures as f64 / (reps * kernel.len() as f64);
        pass &= rate <= allowed + slack;
        parts.push(format!("n={n}: set failure rate {rate:.4}, per-entry rate {entry_rate:.5}"));
    }
    let took = start.elapsed();
    pass &= took < COVERAGE_TIME;
    outcome(pass, format!("{} (allowed {allowed:.3} + {slack:.3}), {took:.2?}", parts.join("; ")))
}

fn variance_identity() -> Outcome {
    let mut r = rng(606);
    let (mut worst, mut bound_ok) = (0.0f64, true);
    for _ in 0..50 {
        let (ns, na, hz) = (r.gen_range(1..=5), r.gen_range(1..=3), r.gen_range(1..=6));
        let m = random_model(&mut r, ns, na, hz, 1);
        let pi = random_policy(&mut r, ns, na, hz);
        let values = evaluate_policy(&m, &pi).unwrap();
        let local = local_variance(&m, &pi, &values).unwrap();
        let total = return_variance(&m, &pi).unwrap();
        for t in 0..hz {
            for s in 0..ns {
                let mut chain = vec![0.0; ns];
                for a in 0..na {
                    for (sn, p) in m.row(s, a).iter().enumerate() {
                        chain[sn] += pi.prob(t, s, a) * p;
                    }
                }
                let prop = |f: &dyn Fn(usize) -> f64| -> f64 {
                    if t + 1 < hz {
                        chain.iter().enumerate().map(|(sn, p)| p * f(sn)).sum()
                    } else {
                        0.0
                    }
                };
                let rhs_v = local.v(t, s) + prop(&|sn| total.v(t + 1, sn));
                let rhs_c = local.c(0, t, s) + prop(&|sn| total.c(0, t + 1, sn));
                worst = worst.max((total.v(t, s) - rhs_v).abs()).max((total.c(0, t, s) - rhs_c).abs());
            }
        }
        let h2 = (hz * hz) as f64;
        bound_ok &= (0..ns).all(|s| total.v(0, s) <= h2 && total.c(0, 0, s) <= h2);
    }
    outcome(worst <= VARIANCE_TOL && bound_ok, format!("50 pairs, max residual {worst:.2e}, Sigma_0 <= H^2: {bound_ok}"))
}

fn scenario2_exact() -> Outcome {
    let m = make_scenario("2").unwrap();
    let plan = solve_cmdp_lp(&m).unwrap();
    let c = plan.constraint_values[0];
    let true_c = evaluate_policy(&m, &plan.policy).unwrap().c(0, 0, m.initial_state);
    outcome(
        c.abs() <= SCENARIO2_TOL && true_c.abs() <= SCENARIO2_TOL,
        format!("LP C = {c:.2e}, evaluated C = {true_c:.2e}, V* = {:.6}", plan.objective),
    )
}

/// Per budget (in list order): median value_diff and median violation over seeds.
fn trend(scenario: &str, algorithm: Algorithm, budgets: Vec<u64>, m: Option<u64>) -> Vec<(u64, f64, f64)> {
    let model = make_scenario(scenario).unwrap();
    let optimum = solve_cmdp_lp(&model).unwrap();
    let mut cfg = ExperimentConfig::new(ModelSource::Scenario(scenario.into()), algorithm, budgets.clone());
    cfg.seeds = (0..TREND_SEEDS).collect();
    cfg.m = m;
    let records = run_experiment_on(&cfg, &model, &optimum).unwrap();
    let mut groups: BTreeMap<usize, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (k, rec) in records.iter().enumerate() {
        assert!(matches!(rec.budget, Budget::Samples(_)));
        let g = groups.entry(k % budgets.len()).or_default();
        g.0.push(rec.value_diff);
        g.1.push(rec.violations.iter().copied().fold(0.0, f64::max));
    }
    groups.into_iter().map(|(k, (vd, viol))| (budgets[k], median(&vd), median(&viol))).collect()
}

fn learning_trends() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for scenario in ["1a", "2"] {
        for (algorithm, budgets, m) in [
            (Algorithm::Gmbl, vec![100, 1000, 10000], None),
            (Algorithm::Online, vec![10, 100, 1000, 2000], Some(TREND_ONLINE_M)),
        ] {
            let rows = trend(scenario, algorithm, budgets, m);
            let (first, last) = (rows[0], rows[rows.len() - 1]);
            let ok = last.1 <= TREND_RATIO * first.1
                && last.2 <= TREND_RATIO * first.2
                && last.2 <= TREND_FINAL_VIOLATION;
            pass &= ok;
            let series: Vec<String> = rows.iter().map(|(b, vd, v)| format!("{b}:{vd:.4}/{v:.4}")).collect();
            parts.push(format!("{scenario} {algorithm} [{}] {}", series.join(" "), if ok { "ok" } else { "off" }));
        }
    }
    outcome(pass, format!("median value_diff/violation per budget: {}; {:.1?}", parts.join("; "), start.elapsed()))
}

fn rel_close(got: f64, want: f64) -> bool {
    (got - want).abs() <= FORMULA_REL_TOL * want.abs()
}

fn budget_formulas() -> Outcome {
    type Tuple = (f64, f64, usize, usize, usize, usize);
    let gmbl: [(Tuple, f64, f64); 5] = [
        ((0.1, 0.1, 1, 9, 4, 12), 4759471223.0, 7.144490169e-7),
        ((0.5, 0.1, 1, 2, 2, 2), 130508.0, 1.736111111e-4),
        ((0.5, 0.2, 2, 4, 3, 5), 4902392.0, 1.736111111e-5),
        ((0.2, 0.01, 1, 25, 4, 20), 20210677228.0, 5.555555556e-9),
        ((1.0, 0.5, 3, 3, 2, 3), 159209.0, 1.543209877e-4),
    ];
    let online: [((f64, f64, usize, usize, usize, usize, f64), [f64; 3]); 5] = [
        ((0.1, 0.1, 1, 9, 4, 12, 5.0), [2.314814815e-4, 1620.0, 8.573388203e-7]),
        ((0.4, 0.1, 0, 2, 2, 5, 10.0), [0.01, 80.0, 1.5625e-4]),
        ((0.05, 0.05, 2, 3, 2, 4, 100.0), [1.041666667e-3, 1800.0, 7.716049383e-7]),
        ((0.2, 0.3, 1, 25, 4, 20, 1.0), [1e-4, 2500.0, 6e-7]),
        ((1.0, 0.01, 3, 4, 3, 8, 1000.0), [7.8125e-3, 48000.0, 3.255208333e-9]),
    ];
    let m_cases: [(Tuple, f64); 5] = [
        ((0.1, 0.1, 1, 9, 4, 12), 16631371629630.0),
        ((0.5, 0.1, 0, 2, 2, 4), 726040355.0),
        ((1.0, 0.05, 1, 3, 2, 8), 4842360652.0),
        ((0.2, 0.2, 2, 4, 3, 16), 2582338846669.0),
        ((0.1, 0.1, 1, 2, 2, 2), 5399558481.0),
    ];
    let mut misses = Vec::new();
    for ((e, d, n, s, a, h), want_n, want_dp) in gmbl {
        if !gmbl_budget(e, d, n, s, a, h).is_ok_and(|x| rel_close(x as f64, want_n)) {
            misses.push(format!("gmbl_budget{:?}", (e, d, n, s, a, h)));
        }
        if !gmbl_delta_p(d, n, s, a, h).is_ok_and(|x| rel_close(x, want_dp)) {
            misses.push(format!("gmbl_delta_p{:?}", (d, n, s, a, h)));
        }
    }
    for ((e, d, n, s, a, h, m), want) in online {
        let ok = online_params(e, d, n, s, a, h, m)
            .is_ok_and(|p| rel_close(p.w_min, want[0]) && rel_close(p.u_max, want[1]) && rel_close(p.delta_1, want[2]));
        if !ok {
            misses.push(format!("online_params{:?}", (e, d, n, s, a, h, m)));
        }
    }
    for ((e, d, n, s, a, h), want) in m_cases {
        if !theoretical_m(e, d, n, s, a, h).is_ok_and(|t| rel_close(t.m, want)) {
            misses.push(format!("theoretical_m{:?}", (e, d, n, s, a, h)));
        }
    }
    let detail = if misses.is_empty() {
        "4 formulas x 5 tuples within 1e-6 relative".to_string()
    } else {
        format!("mismatches: {}", misses.join(", "))
    };
    outcome(misses.is_empty(), detail)
}

fn cli_determinism() -> Outcome {
    let exe = env!("CARGO_BIN_EXE_cmdp-lab");
    let dir = tempfile::tempdir().unwrap();
    let invocations: [&[&str]; 5] = [
        &["solve", "--scenario", "1b"],
        &["gmbl", "--scenario", "1a", "--budgets", "30,300", "--seeds", "4"],
        &["online", "--scenario", "2", "--episodes", "5,40", "--m", "5", "--seeds", "3"],
        &["sweep", "--scenario", "1a,2", "--budgets", "50", "--episodes", "10", "--m", "3", "--seeds", "2,9"],
        &["gmbl", "--scenario", "2", "--budgets", "80", "--seeds", "3", "--baseline"],
    ];
    let mut differing = Vec::new();
    for (k, args) in invocations.iter().enumerate() {
        let mut outputs = Vec::new();
        for (run, jobs) in ["1", "2"].iter().enumerate() {
            let path = dir.path().join(format!("{k}_{run}.csv"));
            let mut cmd = Command::new(exe);
            cmd.args(*args).arg("--out").arg(&path);
            if args[0] != "solve" {
                cmd.args(["--jobs", jobs]);
            }
            let status = cmd.output().unwrap().status;
            outputs.push(if status.success() { std::fs::read(&path).ok() } else { None });
        }
        if outputs[0].is_none() || outputs[0] != outputs[1] {
            differing.push(args.join(" "));
        }
    }
    let detail = if differing.is_empty() {
        format!("{} invocations, each run twice, byte-identical CSV", invocations.len())
    } else {
        format!("differs or failed: {}", differing.join(" | "))
    };
    outcome(differing.is_empty(), detail)
}

fn main() {
    let checks: [(&str, fn() -> Outcome); 10] = [
        ("LP/DP equivalence", lp_dp_equivalence),
        ("CMDP brute-force equivalence", brute_force_equivalence),
        ("ELP degeneracy", elp_degeneracy),
        ("Optimism", optimism),
        ("Confidence coverage", coverage),
        ("Variance Bellman identity", variance_identity),
        ("Scenario-2 exact solution", scenario2_exact),
        ("Learning trends", learning_trends),
        ("Budget formulas", budget_formulas),
        ("Determinism", cli_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in checks {
        if !filter.is_empty() && !filter.iter().any(|f| name.to_lowercase().contains(&f.to_lowercase())) {
            continue;
        }
        let result = check();
        println!("{} {name}: {}", if result.pass { "PASS" } else { "FAIL" }, result.detail);
        failed += (!result.pass) as usize;
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
