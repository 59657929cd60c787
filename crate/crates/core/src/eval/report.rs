//! Plot-ready report files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{det_curve, EvalReport, Quartiles, Scenario};
use crate::error::{Error, Result};

#[derive(Serialize)]
struct VerificationBlock {
    eer: Quartiles,
    auc: Quartiles,
}

#[derive(Serialize)]
struct Summary<'a> {
    feature_set: &'static str,
    channels: &'a [usize],
    lambda: f64,
    dim: usize,
    window_ms: f64,
    step_ms: f64,
    participants: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    normal: Option<VerificationBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    leaked: Option<VerificationBlock>,
    #[serde(rename = "self", skip_serializing_if = "Option::is_none")]
    self_test: Option<VerificationBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    identification: Option<BTreeMap<String, Quartiles>>,
    warnings: &'a [String],
}

/// Paths written by [`write_report`].
#[derive(Debug, Clone, Default)]
pub struct ReportFiles {
    pub summary: PathBuf,
    pub det: Vec<PathBuf>,
    pub cmc: Option<PathBuf>,
    pub folds: PathBuf,
    pub participants: PathBuf,
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

impl EvalReport {
    pub fn summary_json(&self) -> String {
        let block = |s: Scenario| {
            self.scenario(s).map(|x| VerificationBlock {
                eer: x.eer,
                auc: x.auc,
            })
        };
        let identification = self.identification.as_ref().map(|id| {
            id.ranks
                .iter()
                .zip(&id.quartiles)
                .map(|(k, q)| (format!("r{k}e"), *q))
                .collect()
        });
        let summary = Summary {
            feature_set: self.feature_spec.kind.name(),
            channels: &self.channels,
            lambda: self.lambda,
            dim: self.dim,
            window_ms: self.window_spec.window_len_ms,
            step_ms: self.window_spec.step_ms,
            participants: self.participants.len(),
            normal: block(Scenario::Normal),
            leaked: block(Scenario::Leaked),
            self_test: block(Scenario::SelfTest),
            identification,
            warnings: &self.warnings,
        };
        serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n"
    }

    pub fn participants_csv(&self) -> String {
        let mut out = String::from("participant,metric,value\n");
        for (p, name) in self.participants.iter().enumerate() {
            for s in &self.scenarios {
                let m = s.per_participant[p];
                writeln!(out, "{name},{}_eer,{}", s.scenario, m.eer).unwrap();
                writeln!(out, "{name},{}_auc,{}", s.scenario, m.auc).unwrap();
            }
            if let Some(id) = &self.identification {
                for (k, v) in id.ranks.iter().zip(&id.per_participant[p]) {
                    writeln!(out, "{name},r{k}e,{v}").unwrap();
                }
            }
        }
        out
    }

    pub fn folds_csv(&self) -> String {
        let mut out = String::from("fold,participant,metric,value\n");
        for r in &self.folds {
            writeln!(out, "{},{},{},{}", r.fold, r.participant, r.metric, r.value).unwrap();
        }
        out
    }

    pub fn cmc_csv(&self) -> Option<String> {
        let id = self.identification.as_ref()?;
        let mut out = String::from("rank,error\n");
        for (i, e) in id.cmc.rank_errors.iter().enumerate() {
            writeln!(out, "{},{e}", i + 1).unwrap();
        }
        Some(out)
    }

    /// DET curve of the scores pooled over all participants.
    pub fn det_csv(&self, scenario: Scenario) -> Option<Result<String>> {
        let s = self.scenario(scenario)?;
        Some(det_curve(&s.pooled).map(|c| {
            let mut out = String::from("threshold,far,frr\n");
            for p in &c.points {
                writeln!(out, "{},{},{}", p.threshold, p.far, p.frr).unwrap();
            }
            out
        }))
    }
}

/// Writes `summary.json`, `det_<scenario>.csv`, `cmc.csv`, `folds.csv` and
/// `participants.csv` into `dir`.
pub fn write_report(dir: &Path, report: &EvalReport) -> Result<ReportFiles> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = ReportFiles {
        summary: dir.join("summary.json"),
        folds: dir.join("folds.csv"),
        participants: dir.join("participants.csv"),
        ..Default::default()
    };
    write(&files.summary, &report.summary_json())?;
    write(&files.folds, &report.folds_csv())?;
    write(&files.participants, &report.participants_csv())?;
    for s in &report.scenarios {
        let path = dir.join(format!("det_{}.csv", s.scenario));
        let text = report.det_csv(s.scenario).expect("scenario present")?;
        write(&path, &text)?;
        files.det.push(path);
    }
    if let Some(text) = report.cmc_csv() {
        let path = dir.join("cmc.csv");
        write(&path, &text)?;
        files.cmc = Some(path);
    }
    Ok(files)
}
