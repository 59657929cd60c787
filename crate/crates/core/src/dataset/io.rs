//! On-disk canonical layout:
//!
//! ```text
//! <root>/meta.json
//! <root>/pairing.json                         (optional)
//! <root>/data/<participant>/<gesture>/<trial>.csv | .f32
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{derive_bipolar, BipolarPairing, Dataset, DatasetMeta, Finding, TrialRecording};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    #[default]
    Csv,
    F32le,
}

impl DataFormat {
    fn extension(self) -> &'static str {
        match self {
            DataFormat::Csv => "csv",
            DataFormat::F32le => "f32",
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetaFile {
    sampling_rate_hz: f64,
    participants: Vec<String>,
    gestures: Vec<String>,
    trials_per_gesture: usize,
    channels: usize,
    #[serde(default = "default_units")]
    units: String,
    #[serde(default)]
    format: DataFormat,
}

fn default_units() -> String {
    "mV".into()
}

fn trial_path(root: &Path, p: &str, g: &str, t: usize, format: DataFormat) -> PathBuf {
    root.join("data")
        .join(p)
        .join(g)
        .join(format!("{t}.{}", format.extension()))
}

fn read_meta(root: &Path) -> Result<(DatasetMeta, DataFormat)> {
    let path = root.join("meta.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let file: MetaFile = serde_json::from_str(&text).map_err(|e| Error::Metadata {
        path: path.clone(),
        reason: e.to_string(),
    })?;
    let meta = DatasetMeta {
        sampling_rate_hz: file.sampling_rate_hz,
        participant_ids: file.participants,
        gesture_ids: file.gestures,
        trials_per_gesture: file.trials_per_gesture,
        channel_count: file.channels,
        signal_units: file.units,
    };
    meta.validate().map_err(|e| Error::Metadata {
        path,
        reason: e.to_string(),
    })?;
    Ok((meta, file.format))
}

/// Reads `<root>/pairing.json` if present.
pub fn load_pairing(root: &Path) -> Result<Option<BipolarPairing>> {
    let path = root.join("pairing.json");
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let pairs: Vec<[usize; 2]> = serde_json::from_str(&text).map_err(|e| Error::Metadata {
        path: path.clone(),
        reason: e.to_string(),
    })?;
    BipolarPairing::new(pairs.into_iter().map(|[p, d]| (p, d)).collect())
        .map(Some)
        .map_err(|e| Error::Metadata {
            path,
            reason: e.to_string(),
        })
}

/// Parsed trial samples, row-major. Non-finite values are kept so the
/// caller decides whether they are fatal.
fn read_trial(path: &Path, channels: usize, format: DataFormat) -> Result<Vec<f64>> {
    match format {
        DataFormat::Csv => read_csv(path, channels),
        DataFormat::F32le => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            if bytes.len() % (4 * channels) != 0 {
                return Err(Error::CorruptTrial {
                    path: path.into(),
                    reason: format!(
                        "size {} is not a multiple of 4 × {channels} channels",
                        bytes.len()
                    ),
                });
            }
            Ok(bytes
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
                .collect())
        }
    }
}

fn read_csv(path: &Path, channels: usize) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::CorruptTrial {
        path: path.into(),
        reason: "empty file".into(),
    })?;
    let found = header.split(',').count();
    if found != channels {
        return Err(Error::ColumnMismatch {
            path: path.into(),
            row: 0,
            expected: channels,
            found,
        });
    }
    let mut out = Vec::new();
    for (row, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let before = out.len();
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| Error::CorruptTrial {
                path: path.into(),
                reason: format!("row {row}: cannot parse {field:?} as a number"),
            })?;
            out.push(v);
        }
        if out.len() - before != channels {
            return Err(Error::ColumnMismatch {
                path: path.into(),
                row: row + 1,
                expected: channels,
                found: out.len() - before,
            });
        }
    }
    Ok(out)
}

/// Loads a canonical dataset directory. Every declared trial must exist,
/// match the declared channel count and contain only finite samples. If a
/// `pairing.json` is present the returned recordings are bipolar.
pub fn load_dataset(root: impl AsRef<Path>) -> Result<Dataset> {
    let root = root.as_ref();
    let (meta, format) = read_meta(root)?;
    let pairing = load_pairing(root)?;
    let mut recordings = Vec::new();
    for p in &meta.participant_ids {
        for g in &meta.gesture_ids {
            for t in 0..meta.trials_per_gesture {
                let path = trial_path(root, p, g, t, format);
                if !path.exists() {
                    return Err(Error::MissingTrial {
                        participant: p.clone(),
                        gesture: g.clone(),
                        trial: t,
                        path,
                    });
                }
                let rows = read_trial(&path, meta.channel_count, format)?;
                let rec = TrialRecording::from_rows(
                    p.as_str(),
                    g.as_str(),
                    t,
                    meta.sampling_rate_hz,
                    meta.channel_count,
                    &rows,
                )?;
                if let Some((row, channel)) = rec.first_non_finite() {
                    return Err(Error::NonFinite { path, row, channel });
                }
                recordings.push(rec);
            }
        }
    }
    let dataset = Dataset::new(meta, recordings)?;
    match pairing {
        Some(pairing) => dataset.derive_bipolar(&pairing),
        None => Ok(dataset),
    }
}

/// Loads whatever can be read, turning per-trial problems into findings.
/// Metadata problems are still fatal.
pub fn load_dataset_lenient(
    root: impl AsRef<Path>,
) -> Result<(DatasetMeta, Vec<TrialRecording>, Vec<Finding>)> {
    let root = root.as_ref();
    let (mut meta, format) = read_meta(root)?;
    let pairing = load_pairing(root)?;
    let mut recordings = Vec::new();
    let mut findings = Vec::new();
    for p in &meta.participant_ids {
        for g in &meta.gesture_ids {
            for t in 0..meta.trials_per_gesture {
                let path = trial_path(root, p, g, t, format);
                if !path.exists() {
                    // reported by validate_dataset as a missing trial
                    continue;
                }
                let loaded = read_trial(&path, meta.channel_count, format).and_then(|rows| {
                    TrialRecording::from_rows(
                        p.as_str(),
                        g.as_str(),
                        t,
                        meta.sampling_rate_hz,
                        meta.channel_count,
                        &rows,
                    )
                });
                match loaded {
                    Ok(rec) => recordings.push(rec),
                    Err(e) => findings.push(Finding::Unreadable {
                        path: path.clone(),
                        reason: e.to_string(),
                    }),
                }
            }
        }
    }
    if let Some(pairing) = pairing {
        let mut bipolar = Vec::with_capacity(recordings.len());
        for rec in &recordings {
            match derive_bipolar(rec, &pairing) {
                Ok(b) => bipolar.push(b),
                Err(e) => findings.push(Finding::Unreadable {
                    path: root.join("pairing.json"),
                    reason: e.to_string(),
                }),
            }
        }
        recordings = bipolar;
        meta.channel_count = pairing.pairs.len();
    }
    Ok((meta, recordings, findings))
}

/// Writes a dataset in canonical layout. The `f32le` format stores samples
/// as 32-bit floats, so values that are not exactly representable lose
/// precision.
pub fn write_dataset(root: impl AsRef<Path>, dataset: &Dataset, format: DataFormat) -> Result<()> {
    let root = root.as_ref();
    let meta = &dataset.meta;
    fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    let file = MetaFile {
        sampling_rate_hz: meta.sampling_rate_hz,
        participants: meta.participant_ids.clone(),
        gestures: meta.gesture_ids.clone(),
        trials_per_gesture: meta.trials_per_gesture,
        channels: meta.channel_count,
        units: meta.signal_units.clone(),
        format,
    };
    let meta_path = root.join("meta.json");
    let text = serde_json::to_string_pretty(&file).expect("metadata serializes");
    fs::write(&meta_path, text + "\n").map_err(|e| Error::io(&meta_path, e))?;

    for rec in dataset.recordings() {
        let path = trial_path(
            root,
            &rec.participant,
            &rec.gesture,
            rec.trial_index,
            format,
        );
        let dir = path.parent().expect("trial path has a parent");
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let bytes = match format {
            DataFormat::Csv => encode_csv(rec),
            DataFormat::F32le => rec
                .to_rows()
                .into_iter()
                .flat_map(|v| (v as f32).to_le_bytes())
                .collect(),
        };
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

fn encode_csv(rec: &TrialRecording) -> Vec<u8> {
    let c_count = rec.channel_count();
    let mut out = Vec::with_capacity(rec.n_samples() * c_count * 12);
    let header: Vec<String> = (0..c_count).map(|c| format!("ch{c}")).collect();
    writeln!(out, "{}", header.join(",")).unwrap();
    for i in 0..rec.n_samples() {
        for c in 0..c_count {
            if c > 0 {
                out.push(b',');
            }
            write!(out, "{}", rec.sample(i, c)).unwrap();
        }
        out.push(b'\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Dataset {
        let meta = DatasetMeta {
            sampling_rate_hz: 100.0,
            participant_ids: vec!["a".into(), "b".into()],
            gesture_ids: vec!["LP".into(), "TA".into()],
            trials_per_gesture: 2,
            channel_count: 2,
            signal_units: "mV".into(),
        };
        let mut recs = Vec::new();
        for (pi, p) in meta.participant_ids.iter().enumerate() {
            for (gi, g) in meta.gesture_ids.iter().enumerate() {
                for t in 0..2 {
                    let base = (pi * 100 + gi * 10 + t) as f64;
                    let rows: Vec<f64> = (0..6).map(|i| base + 0.125 * i as f64).collect();
                    recs.push(
                        TrialRecording::from_rows(p.as_str(), g.as_str(), t, 100.0, 2, &rows)
                            .unwrap(),
                    );
                }
            }
        }
        Dataset::new(meta, recs).unwrap()
    }

    #[test]
    fn csv_tree_loads_every_trial() {
        let dir = tempfile::tempdir().unwrap();
        let ds = tiny();
        write_dataset(dir.path(), &ds, DataFormat::Csv).unwrap();
        let back = load_dataset(dir.path()).unwrap();
        assert_eq!(back.recordings().len(), 8);
        assert_eq!(back.meta, ds.meta);
        assert_eq!(back, ds);
    }

    #[test]
    fn missing_trial_is_named() {
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), &tiny(), DataFormat::Csv).unwrap();
        fs::remove_file(dir.path().join("data/b/TA/1.csv")).unwrap();
        match load_dataset(dir.path()) {
            Err(Error::MissingTrial {
                participant,
                gesture,
                trial,
                ..
            }) => assert_eq!(
                (participant.as_str(), gesture.as_str(), trial),
                ("b", "TA", 1)
            ),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn column_mismatch_and_nan_are_reported_with_path() {
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), &tiny(), DataFormat::Csv).unwrap();
        let p = dir.path().join("data/a/LP/0.csv");
        fs::write(&p, "ch0,ch1\n1,2\n3\n").unwrap();
        let err = load_dataset(dir.path()).unwrap_err();
        assert!(matches!(err, Error::ColumnMismatch { row: 2, .. }), "{err}");
        assert!(err.to_string().contains("0.csv"));

        fs::write(&p, "ch0,ch1\n1,2\n3,NaN\n").unwrap();
        let err = load_dataset(dir.path()).unwrap_err();
        assert!(
            matches!(
                err,
                Error::NonFinite {
                    row: 1,
                    channel: 1,
                    ..
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn corrupt_meta_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), &tiny(), DataFormat::Csv).unwrap();
        fs::write(dir.path().join("meta.json"), "{\"sampling_rate_hz\": 1").unwrap();
        assert!(matches!(
            load_dataset(dir.path()),
            Err(Error::Metadata { .. })
        ));
    }

    #[test]
    fn pairing_file_applies_bipolar_derivation() {
        let dir = tempfile::tempdir().unwrap();
        let ds = tiny();
        write_dataset(dir.path(), &ds, DataFormat::F32le).unwrap();
        fs::write(dir.path().join("pairing.json"), "[[1, 0]]").unwrap();
        let back = load_dataset(dir.path()).unwrap();
        assert_eq!(back.meta.channel_count, 1);
        let r = back.get(1, 0, 1);
        let src = ds.get(1, 0, 1);
        for i in 0..r.n_samples() {
            assert_eq!(r.sample(i, 0), src.sample(i, 1) - src.sample(i, 0));
        }
    }
}
