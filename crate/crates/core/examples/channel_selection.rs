//! Sequential forward selection of channels, driven by Leaked EER and by
//! rank-1 error.

use semg_auth::dataset::{synth_dataset, SynthSpec};
use semg_auth::eval::{EvalConfig, Scenario};
use semg_auth::selection::{sfs, Criterion, SfsMetric};

fn main() -> semg_auth::Result<()> {
    let spec = SynthSpec {
        users: 4,
        gestures: 3,
        trials: 3,
        channels: 4,
        duration_s: 2.0,
        separation: 0.5,
        seed: 3,
        ..SynthSpec::default()
    };
    let dataset = synth_dataset(&spec)?;
    let config = EvalConfig::default();
    for metric in [SfsMetric::Eer(Scenario::Leaked), SfsMetric::R1e] {
        let trace = sfs(&dataset, &config, metric, Criterion::Median)?;
        println!("{metric}: order {:?}", trace.order());
        for (j, it) in trace.iterations.iter().enumerate() {
            println!(
                "  iteration {}: +ch{} error {:.3} range {:.3}",
                j + 1,
                it.selected,
                it.selected_error,
                it.range
            );
        }
    }
    Ok(())
}
