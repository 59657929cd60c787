//! Window one recording and print its TD features per channel.

use semg_auth::dataset::{synth_dataset, SynthSpec};
use semg_auth::features::{
    extract_features, td, window_signal, FeatureKind, FeatureSpec, WindowSpec,
};

fn main() -> semg_auth::Result<()> {
    let spec = SynthSpec {
        users: 2,
        gestures: 2,
        trials: 2,
        channels: 3,
        duration_s: 1.0,
        ..SynthSpec::default()
    };
    let dataset = synth_dataset(&spec)?;
    let rec = dataset.get(0, 0, 0);
    let window = WindowSpec::default();
    let (w, s) = window.in_samples(rec.sampling_rate_hz)?;
    let windows = window_signal(rec, &window)?;
    println!(
        "{} samples -> {} windows of {w} samples, step {s}",
        rec.n_samples(),
        windows.len()
    );

    let first = &windows[0];
    for c in 0..first.channel_count() {
        let x = first.channel(c);
        println!(
            "ch{c}: mav {:.4} zc {} ssc {} wl {:.3}",
            td::mav(x),
            td::zc(x, 0.0),
            td::ssc(x, 0.0),
            td::wl(x)
        );
    }

    let m = extract_features(rec, &FeatureSpec::new(FeatureKind::Td), &window)?;
    println!("feature matrix: {} rows x {} columns", m.rows(), m.dim());
    println!("row 0: {:?}", m.row(0));
    Ok(())
}
