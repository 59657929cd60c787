//! Generate a small synthetic dataset, write it to disk, validate it, then
//! break it and validate again.

use semg_auth::dataset::{
    load_dataset, load_dataset_lenient, synth_dataset, validate_dataset, write_dataset, DataFormat,
    SynthSpec,
};

fn main() -> semg_auth::Result<()> {
    let spec = SynthSpec {
        users: 4,
        gestures: 3,
        trials: 3,
        channels: 4,
        duration_s: 1.0,
        seed: 7,
        ..SynthSpec::default()
    };
    let dataset = synth_dataset(&spec)?;
    let dir = std::env::temp_dir().join(format!("semg-example-{}", std::process::id()));
    write_dataset(&dir, &dataset, DataFormat::F32le)?;
    println!("wrote {}", dir.display());

    let back = load_dataset(&dir)?;
    assert_eq!(back.recordings(), dataset.recordings());
    println!(
        "round trip ok: {} recordings, gestures {:?}",
        back.recordings().len(),
        back.meta.gesture_ids
    );

    let (meta, recs, _) = load_dataset_lenient(&dir)?;
    println!("clean dataset: {}", validate_dataset(&meta, &recs));

    let victim = dir
        .join("data")
        .join("P03")
        .join(&meta.gesture_ids[1])
        .join("2.f32");
    std::fs::remove_file(&victim).expect("trial file exists");
    let (meta, recs, _) = load_dataset_lenient(&dir)?;
    println!(
        "after deleting a trial:\n{}",
        validate_dataset(&meta, &recs)
    );

    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}
