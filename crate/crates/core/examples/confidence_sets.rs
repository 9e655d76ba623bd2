//! Empirical coverage of the per-entry confidence intervals.

use cmdp_lab::gmbl::sample_uniformly;
use cmdp_lab::{build_confidence_model, make_scenario_1a, RngStreams};

fn main() -> cmdp_lab::Result<()> {
    let model = make_scenario_1a()?;
    let delta = 0.05;
    let reps = 500;
    println!("{:>6} {:>10} {:>10} {:>10} {:>11}", "n", "max beta", "mean beta", "set miss", "entry miss");
    for n in [10, 50, 200, 1000] {
        let (mut misses, mut entries) = (0, 0);
        let mut last = None;
        for rep in 0..reps {
            let counts = sample_uniformly(&model, n, &RngStreams::new(rep))?;
            let cm = build_confidence_model(&counts, delta)?;
            let outside = cm.count_outside(&model.kernel);
            misses += (outside > 0) as u32;
            entries += outside;
            last = Some(cm);
        }
        let cm = last.expect("at least one repetition");
        let set_rate = misses as f64 / reps as f64;
        let entry_rate = entries as f64 / (reps as f64 * model.kernel.len() as f64);
        println!("{n:>6} {:>10.4} {:>10.4} {set_rate:>10.4} {entry_rate:>11.5}", cm.max_beta(), cm.mean_beta());
    }
    Ok(())
}
