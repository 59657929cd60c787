//! Fit gesture-user models on some trials, score held-out trials and compare
//! the three threat scenarios for one claimed identity.

use semg_auth::dataset::{synth_dataset, SynthSpec};
use semg_auth::eval::{
    build_verification_scores, det_curve, FeatureTable, NormalPool, Scenario, ScoreUnit,
};
use semg_auth::features::{FeatureSpec, WindowSpec};
use semg_auth::model::{fit_class_model, DEFAULT_LAMBDA};

fn main() -> semg_auth::Result<()> {
    let spec = SynthSpec {
        users: 4,
        gestures: 3,
        trials: 4,
        channels: 4,
        duration_s: 2.0,
        separation: 0.2,
        ..SynthSpec::default()
    };
    let dataset = synth_dataset(&spec)?;
    let table = FeatureTable::extract(
        &dataset,
        None,
        &FeatureSpec::default(),
        &WindowSpec::default(),
    )?;

    // train on trials 0..3, hold out trial 3
    let mut models = Vec::new();
    for (g, gesture) in table.gestures.iter().enumerate() {
        for (u, user) in table.participants.iter().enumerate() {
            let rows: Vec<&[f64]> = (0..3)
                .flat_map(|t| table.get(u, g, t).iter_rows())
                .collect();
            models.push(fit_class_model(gesture, user, &rows, DEFAULT_LAMBDA)?);
        }
    }
    let probes: Vec<_> = table
        .matrices()
        .iter()
        .filter(|m| m.provenance.trial_index == 3)
        .collect();

    let (gesture, user) = (&table.gestures[0], &table.participants[1]);
    for scenario in Scenario::ALL {
        let set = build_verification_scores(
            &models,
            &probes,
            scenario,
            gesture,
            user,
            NormalPool::default(),
            ScoreUnit::Window,
        )?;
        let curve = det_curve(&set)?;
        println!(
            "{scenario:<7} genuine {:>3} impostor {:>4}  EER {:.3}  AUC {:.4}",
            set.genuine.len(),
            set.impostor.len(),
            curve.eer,
            curve.auc
        );
    }
    Ok(())
}
