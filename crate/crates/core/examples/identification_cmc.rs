//! Full leave-one-trial-out evaluation and the resulting CMC curve.

use semg_auth::dataset::{synth_dataset, SynthSpec};
use semg_auth::eval::{evaluate, EvalConfig};

fn main() -> semg_auth::Result<()> {
    for separation in [0.0, 1.0, 10.0] {
        let spec = SynthSpec {
            users: 5,
            gestures: 3,
            trials: 3,
            channels: 4,
            duration_s: 2.0,
            separation,
            ..SynthSpec::default()
        };
        let report = evaluate(&synth_dataset(&spec)?, &EvalConfig::default())?;
        let id = report.identification.as_ref().expect("ranks requested");
        let cmc: Vec<String> = id
            .cmc
            .rank_errors
            .iter()
            .map(|e| format!("{e:.3}"))
            .collect();
        println!(
            "separation {separation:>4}: median R1E {:.3}, CMC [{}]",
            report.rank_quartiles(1).unwrap().med,
            cmc.join(", ")
        );
    }
    Ok(())
}
