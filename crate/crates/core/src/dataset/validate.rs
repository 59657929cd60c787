use std::collections::HashSet;
use std::fmt;
use std::path::PathBuf;

use super::{DatasetMeta, TrialRecording};

/// Relative deviation from the median trial length that triggers a finding.
pub const LENGTH_TOLERANCE: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub enum Finding {
    MissingTrial {
        participant: String,
        gesture: String,
        trial: usize,
    },
    Duplicate {
        participant: String,
        gesture: String,
        trial: usize,
    },
    Undeclared {
        participant: String,
        gesture: String,
        trial: usize,
    },
    ChannelMismatch {
        participant: String,
        gesture: String,
        trial: usize,
        expected: usize,
        found: usize,
    },
    LengthOutlier {
        participant: String,
        gesture: String,
        trial: usize,
        samples: usize,
        median: f64,
    },
    NonFinite {
        participant: String,
        gesture: String,
        trial: usize,
        sample: usize,
        channel: usize,
    },
    Unreadable {
        path: PathBuf,
        reason: String,
    },
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::MissingTrial {
                participant,
                gesture,
                trial,
            } => write!(f, "missing trial: {participant}/{gesture}/{trial}"),
            Finding::Duplicate {
                participant,
                gesture,
                trial,
            } => write!(f, "duplicate trial: {participant}/{gesture}/{trial}"),
            Finding::Undeclared {
                participant,
                gesture,
                trial,
            } => write!(f, "undeclared trial: {participant}/{gesture}/{trial}"),
            Finding::ChannelMismatch {
                participant,
                gesture,
                trial,
                expected,
                found,
            } => write!(
                f,
                "channel mismatch: {participant}/{gesture}/{trial} has {found} channels, expected {expected}"
            ),
            Finding::LengthOutlier {
                participant,
                gesture,
                trial,
                samples,
                median,
            } => write!(
                f,
                "length outlier: {participant}/{gesture}/{trial} has {samples} samples, median {median}"
            ),
            Finding::NonFinite {
                participant,
                gesture,
                trial,
                sample,
                channel,
            } => write!(
                f,
                "non-finite value: {participant}/{gesture}/{trial} at sample {sample}, channel {channel}"
            ),
            Finding::Unreadable { path, reason } => {
                write!(f, "unreadable: {}: {reason}", path.display())
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for finding in &self.findings {
            writeln!(f, "{finding}")?;
        }
        write!(f, "{} issues", self.findings.len())
    }
}

/// Lists every problem that would make the pipeline unsafe. Never fails.
pub fn validate_dataset(meta: &DatasetMeta, recordings: &[TrialRecording]) -> ValidationReport {
    let mut findings = Vec::new();
    let mut seen = HashSet::new();
    for r in recordings {
        let key = (r.participant.clone(), r.gesture.clone(), r.trial_index);
        let declared = meta.participant_index(&r.participant).is_some()
            && meta.gesture_index(&r.gesture).is_some()
            && r.trial_index < meta.trials_per_gesture;
        if !declared {
            findings.push(Finding::Undeclared {
                participant: key.0.clone(),
                gesture: key.1.clone(),
                trial: key.2,
            });
        }
        if !seen.insert(key.clone()) {
            findings.push(Finding::Duplicate {
                participant: key.0,
                gesture: key.1,
                trial: key.2,
            });
        }
    }
    for p in &meta.participant_ids {
        for g in &meta.gesture_ids {
            for t in 0..meta.trials_per_gesture {
                if !seen.contains(&(p.clone(), g.clone(), t)) {
                    findings.push(Finding::MissingTrial {
                        participant: p.clone(),
                        gesture: g.clone(),
                        trial: t,
                    });
                }
            }
        }
    }

    let mut lengths: Vec<usize> = recordings.iter().map(TrialRecording::n_samples).collect();
    lengths.sort_unstable();
    let median = match lengths.len() {
        0 => 0.0,
        n if n % 2 == 1 => lengths[n / 2] as f64,
        n => (lengths[n / 2 - 1] + lengths[n / 2]) as f64 / 2.0,
    };

    for r in recordings {
        if r.channel_count() != meta.channel_count {
            findings.push(Finding::ChannelMismatch {
                participant: r.participant.clone(),
                gesture: r.gesture.clone(),
                trial: r.trial_index,
                expected: meta.channel_count,
                found: r.channel_count(),
            });
        }
        if median > 0.0 && (r.n_samples() as f64 - median).abs() > LENGTH_TOLERANCE * median {
            findings.push(Finding::LengthOutlier {
                participant: r.participant.clone(),
                gesture: r.gesture.clone(),
                trial: r.trial_index,
                samples: r.n_samples(),
                median,
            });
        }
        if let Some((sample, channel)) = r.first_non_finite() {
            findings.push(Finding::NonFinite {
                participant: r.participant.clone(),
                gesture: r.gesture.clone(),
                trial: r.trial_index,
                sample,
                channel,
            });
        }
    }
    ValidationReport { findings }
}
