//! Sequential forward channel selection.
//!
//! Starting from an empty applied set, each iteration evaluates the full
//! pipeline on the applied set plus each remaining channel, keeps the channel
//! with the smallest error (lowest index on ties) and records the spread of
//! candidate errors.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::eval::{evaluate_table, stats, EvalConfig, EvalReport, FeatureTable, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SfsMetric {
    Eer(Scenario),
    R1e,
    R5e,
}

impl SfsMetric {
    pub fn rank(self) -> Option<usize> {
        match self {
            SfsMetric::Eer(_) => None,
            SfsMetric::R1e => Some(1),
            SfsMetric::R5e => Some(5),
        }
    }

    /// Narrows an evaluation config to what this metric needs.
    fn eval_config(self, base: &EvalConfig) -> EvalConfig {
        let mut cfg = base.clone();
        cfg.channels = None;
        match self {
            SfsMetric::Eer(sc) => {
                cfg.scenarios = vec![sc];
                cfg.ranks = Vec::new();
            }
            SfsMetric::R1e | SfsMetric::R5e => {
                cfg.scenarios = Vec::new();
                cfg.ranks = vec![self.rank().unwrap()];
            }
        }
        cfg
    }

    /// Per-participant values of this metric in a report.
    pub fn participant_values(self, report: &EvalReport) -> Option<Vec<f64>> {
        match self {
            SfsMetric::Eer(sc) => report
                .scenario(sc)
                .map(|s| s.per_participant.iter().map(|p| p.eer).collect()),
            SfsMetric::R1e | SfsMetric::R5e => report.rank_errors(self.rank().unwrap()),
        }
    }
}

impl fmt::Display for SfsMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SfsMetric::Eer(sc) => write!(f, "eer:{sc}"),
            SfsMetric::R1e => f.write_str("r1e"),
            SfsMetric::R5e => f.write_str("r5e"),
        }
    }
}

impl FromStr for SfsMetric {
    type Err = Error;

    /// `r1e`, `r5e`, `eer` (Leaked) or `eer:<scenario>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "r1e" => Ok(SfsMetric::R1e),
            "r5e" => Ok(SfsMetric::R5e),
            "eer" => Ok(SfsMetric::Eer(Scenario::Leaked)),
            other => match other.strip_prefix("eer:") {
                Some(sc) => Ok(SfsMetric::Eer(sc.parse()?)),
                None => Err(Error::InvalidSpec(format!(
                    "unknown selection metric {s:?}"
                ))),
            },
        }
    }
}

/// How participant values collapse into one selection criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    #[default]
    Median,
    Mean,
}

impl Criterion {
    pub fn apply(self, values: &[f64]) -> f64 {
        match self {
            Criterion::Median => stats::median(values),
            Criterion::Mean => stats::mean(values),
        }
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "median" => Ok(Criterion::Median),
            "mean" => Ok(Criterion::Mean),
            _ => Err(Error::InvalidSpec(format!("unknown criterion {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SfsIteration {
    /// `(candidate channel, error of applied ∪ {candidate})`, ascending by channel.
    pub candidates: Vec<(usize, f64)>,
    pub selected: usize,
    pub selected_error: f64,
    pub range: f64,
    /// Applied set after this iteration, ascending.
    pub applied: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SfsTrace {
    pub metric: SfsMetric,
    pub criterion: Criterion,
    pub iterations: Vec<SfsIteration>,
}

impl SfsTrace {
    /// Channels in the order they were selected.
    pub fn order(&self) -> Vec<usize> {
        self.iterations.iter().map(|it| it.selected).collect()
    }

    /// One row per candidate per iteration.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,candidate_channel,error,selected,range\n");
        for (j, it) in self.iterations.iter().enumerate() {
            for &(c, e) in &it.candidates {
                writeln!(
                    out,
                    "{},{c},{e},{},{}",
                    j + 1,
                    u8::from(c == it.selected),
                    it.range
                )
                .unwrap();
            }
        }
        out
    }

    pub fn summary_json(&self) -> String {
        #[derive(Serialize)]
        struct Step {
            iteration: usize,
            channel: usize,
            error: f64,
            range: f64,
        }
        #[derive(Serialize)]
        struct Summary {
            metric: String,
            criterion: Criterion,
            order: Vec<usize>,
            steps: Vec<Step>,
        }
        let summary = Summary {
            metric: self.metric.to_string(),
            criterion: self.criterion,
            order: self.order(),
            steps: self
                .iterations
                .iter()
                .enumerate()
                .map(|(j, it)| Step {
                    iteration: j + 1,
                    channel: it.selected,
                    error: it.selected_error,
                    range: it.range,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n"
    }
}

/// `max − min` of the candidate errors.
pub fn error_range(candidate_errors: &[f64]) -> Result<f64> {
    if candidate_errors.is_empty() {
        return Err(Error::TooFew {
            what: "candidate errors",
            needed: 1,
            found: 0,
        });
    }
    let max = candidate_errors
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let min = candidate_errors
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    Ok(max - min)
}

/// Greedy forward selection over `n_channels` with an arbitrary subset
/// error. `error_of` receives ascending channel sets and may run
/// concurrently for the candidates of one iteration.
pub fn greedy_forward<F>(n_channels: usize, error_of: F) -> Result<Vec<SfsIteration>>
where
    F: Fn(&[usize]) -> Result<f64> + Sync,
{
    if n_channels == 0 {
        return Err(Error::EmptySelection);
    }
    let mut applied: Vec<usize> = Vec::new();
    let mut remaining: Vec<usize> = (0..n_channels).collect();
    let mut iterations = Vec::with_capacity(n_channels);
    while !remaining.is_empty() {
        let candidates = remaining
            .par_iter()
            .map(|&r| {
                let mut set = applied.clone();
                set.push(r);
                set.sort_unstable();
                let e = error_of(&set)?;
                if e.is_nan() {
                    return Err(Error::NoUsableParticipants {
                        metric: format!("channel set {set:?}"),
                    });
                }
                Ok((r, e))
            })
            .collect::<Result<Vec<_>>>()?;
        let &(selected, selected_error) = candidates
            .iter()
            .fold(None, |best: Option<&(usize, f64)>, c| match best {
                Some(b) if b.1 <= c.1 => Some(b),
                _ => Some(c),
            })
            .expect("at least one candidate");
        let errors: Vec<f64> = candidates.iter().map(|c| c.1).collect();
        let range = error_range(&errors)?;
        applied.push(selected);
        applied.sort_unstable();
        remaining.retain(|&r| r != selected);
        iterations.push(SfsIteration {
            candidates,
            selected,
            selected_error,
            range,
            applied: applied.clone(),
        });
    }
    Ok(iterations)
}

/// Runs forward selection over every channel of `dataset`. Features are
/// extracted once and channel subsets are taken block-wise.
pub fn sfs(
    dataset: &Dataset,
    config: &EvalConfig,
    metric: SfsMetric,
    criterion: Criterion,
) -> Result<SfsTrace> {
    let table = FeatureTable::extract(dataset, None, &config.feature_spec, &config.window_spec)?;
    sfs_table(&table, config, metric, criterion)
}

pub fn sfs_table(
    table: &FeatureTable,
    config: &EvalConfig,
    metric: SfsMetric,
    criterion: Criterion,
) -> Result<SfsTrace> {
    let cfg = metric.eval_config(config);
    let iterations = greedy_forward(table.channels.len(), |set| {
        let sub = table.select_channels(set)?;
        let report = evaluate_table(&sub, &cfg)?;
        let values =
            metric
                .participant_values(&report)
                .ok_or_else(|| Error::NoUsableParticipants {
                    metric: metric.to_string(),
                })?;
        Ok(criterion.apply(&values))
    })?;
    Ok(SfsTrace {
        metric,
        criterion,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_cases() {
        assert!((error_range(&[0.3, 0.1, 0.2]).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(error_range(&[0.7]).unwrap(), 0.0);
        assert!(error_range(&[]).is_err());
    }

    #[test]
    fn first_iteration_picks_minimum() {
        let single = [0.3, 0.1, 0.2];
        let its =
            greedy_forward(3, |set| Ok(set.iter().map(|&c| single[c]).product::<f64>())).unwrap();
        assert_eq!(its[0].selected, 1);
        assert!((its[0].range - 0.2).abs() < 1e-15);
        assert_eq!(its[0].candidates.len(), 3);
        assert_eq!(its[1].candidates.len(), 2);
        assert_eq!(its[2].applied, vec![0, 1, 2]);
    }

    #[test]
    fn single_channel() {
        let its = greedy_forward(1, |_| Ok(0.4)).unwrap();
        assert_eq!(its.len(), 1);
        assert_eq!(its[0].range, 0.0);
        assert_eq!(its[0].selected, 0);
    }

    #[test]
    fn ties_take_lowest_channel() {
        let its = greedy_forward(4, |_| Ok(0.5)).unwrap();
        let order: Vec<usize> = its.iter().map(|i| i.selected).collect();
        assert_eq!(order, vec![0, 1, 2, 3]);
    }

    #[test]
    fn metric_parsing() {
        assert_eq!(
            "eer".parse::<SfsMetric>().unwrap(),
            SfsMetric::Eer(Scenario::Leaked)
        );
        assert_eq!(
            "eer:self".parse::<SfsMetric>().unwrap(),
            SfsMetric::Eer(Scenario::SelfTest)
        );
        assert_eq!("R1E".parse::<SfsMetric>().unwrap(), SfsMetric::R1e);
        assert!("auc".parse::<SfsMetric>().is_err());
        assert!("eer:bogus".parse::<SfsMetric>().is_err());
    }
}
