//! Fit one model, score a few points, save it and load it back.

use semg_auth::model::{fit_class_model, load_model, mahalanobis_score, save_models};

fn main() -> semg_auth::Result<()> {
    let rows: Vec<Vec<f64>> = (0..50)
        .map(|i| {
            let t = i as f64 * 0.37;
            vec![t.sin() * 2.0, t.cos() + 0.5 * t.sin(), (3.0 * t).sin()]
        })
        .collect();
    let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    let model = fit_class_model("HC", "P01", &refs, 1e-3)?;
    println!("centroid {:.3?}", model.centroid.as_slice());
    for p in [[0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 0.0, 3.0]] {
        println!("score {p:?} = {:.4}", mahalanobis_score(&model, &p)?);
    }

    let dir = std::env::temp_dir().join(format!("semg-models-{}", std::process::id()));
    save_models(&dir, [&model])?;
    let path = dir.join(semg_auth::model::model_file_name("HC", "P01"));
    let back = load_model(&path)?;
    assert_eq!(
        back.score(&[1.0, 1.0, 1.0])?,
        model.score(&[1.0, 1.0, 1.0])?
    );
    println!(
        "reloaded {} bytes from {}",
        std::fs::metadata(&path).unwrap().len(),
        path.display()
    );
    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}
