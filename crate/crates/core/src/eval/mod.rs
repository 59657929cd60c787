//! Leave-one-trial-out evaluation of verification and identification.
//!
//! For every fold, one model per (gesture, user) is fitted on the training
//! trials and every window of the held-out trial is scored. Scores are pooled
//! per participant across folds and authentication gestures; the summary
//! reports median and quartiles across participants.

pub mod identification;
mod report;
pub mod stats;
pub mod verification;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use identification::{
    cmc, gesture_models, identify, rank_k_error, rank_users, CmcCurve, IdentificationResult,
    RankedProbe,
};
pub use report::{write_report, ReportFiles};
pub use stats::Quartiles;
pub use verification::{
    auc, build_verification_scores, det_curve, eer, DetCurve, DetPoint, NormalPool, Scenario,
    ScoreSet,
};

use crate::dataset::{check_channel_set, select_channels, Dataset};
use crate::error::{Error, Result};
use crate::features::{extract_features, FeatureKind, FeatureMatrix, FeatureSpec, WindowSpec};
use crate::model::{fit_class_model, loo_schedule, ClassModel, Fold, DEFAULT_LAMBDA};
use identification::rank_error_from_ranks;

/// What one score describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreUnit {
    /// Every window is its own attempt.
    #[default]
    Window,
    /// One attempt per trial, scored by the median window score.
    TrialMedian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub feature_spec: FeatureSpec,
    pub window_spec: WindowSpec,
    /// Source channels to use; `None` means all.
    pub channels: Option<Vec<usize>>,
    pub lambda: f64,
    pub scenarios: Vec<Scenario>,
    /// Rank-k errors to report. Empty skips identification.
    pub ranks: Vec<usize>,
    pub normal_pool: NormalPool,
    pub unit: ScoreUnit,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            feature_spec: FeatureSpec::default(),
            window_spec: WindowSpec::default(),
            channels: None,
            lambda: DEFAULT_LAMBDA,
            scenarios: Scenario::ALL.to_vec(),
            ranks: vec![1, 5],
            normal_pool: NormalPool::default(),
            unit: ScoreUnit::default(),
        }
    }
}

/// Feature matrices for every (participant, gesture, trial) of a dataset.
#[derive(Debug, Clone)]
pub struct FeatureTable {
    pub participants: Vec<String>,
    pub gestures: Vec<String>,
    pub trials: usize,
    /// Source channel indices the columns describe.
    pub channels: Vec<usize>,
    pub feature_spec: FeatureSpec,
    pub window_spec: WindowSpec,
    matrices: Vec<FeatureMatrix>,
}

impl FeatureTable {
    /// Extracts features from `channel_set` (all channels when `None`).
    pub fn extract(
        dataset: &Dataset,
        channel_set: Option<&[usize]>,
        spec: &FeatureSpec,
        window: &WindowSpec,
    ) -> Result<Self> {
        let all: Vec<usize> = (0..dataset.meta.channel_count).collect();
        let set = channel_set.unwrap_or(&all);
        check_channel_set(set, dataset.meta.channel_count)?;
        let matrices = dataset
            .recordings()
            .par_iter()
            .map(|r| {
                if set.len() == r.channel_count() {
                    extract_features(r, spec, window)
                } else {
                    extract_features(&select_channels(r, set)?, spec, window)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let channels = matrices[0].provenance.channels.clone();
        Ok(Self {
            participants: dataset.meta.participant_ids.clone(),
            gestures: dataset.meta.gesture_ids.clone(),
            trials: dataset.meta.trials_per_gesture,
            channels,
            feature_spec: spec.clone(),
            window_spec: *window,
            matrices,
        })
    }

    /// Keeps the channel blocks at `positions` (indices into `self.channels`).
    pub fn select_channels(&self, positions: &[usize]) -> Result<Self> {
        let matrices = self
            .matrices
            .iter()
            .map(|m| m.select_channel_blocks(positions))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            channels: positions.iter().map(|&p| self.channels[p]).collect(),
            matrices,
            ..self.clone_meta()
        })
    }

    fn clone_meta(&self) -> Self {
        Self {
            participants: self.participants.clone(),
            gestures: self.gestures.clone(),
            trials: self.trials,
            channels: self.channels.clone(),
            feature_spec: self.feature_spec.clone(),
            window_spec: self.window_spec,
            matrices: Vec::new(),
        }
    }

    pub fn get(&self, p: usize, g: usize, t: usize) -> &FeatureMatrix {
        &self.matrices[(p * self.gestures.len() + g) * self.trials + t]
    }

    pub fn matrices(&self) -> &[FeatureMatrix] {
        &self.matrices
    }

    pub fn dim(&self) -> usize {
        self.matrices.first().map_or(0, FeatureMatrix::dim)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParticipantVerification {
    pub eer: f64,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSummary {
    pub scenario: Scenario,
    /// Indexed like [`EvalReport::participants`].
    pub per_participant: Vec<ParticipantVerification>,
    pub eer: Quartiles,
    pub auc: Quartiles,
    /// All participants' scores, for plotting a DET curve.
    pub pooled: ScoreSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentificationSummary {
    /// Requested ranks.
    pub ranks: Vec<usize>,
    /// `per_participant[p][i]` is the error at `ranks[i]` (clamped to the
    /// number of enrolled users).
    pub per_participant: Vec<Vec<f64>>,
    pub quartiles: Vec<Quartiles>,
    /// Over every probe of every participant.
    pub cmc: CmcCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldRow {
    pub fold: usize,
    pub participant: String,
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub feature_spec: FeatureSpec,
    pub window_spec: WindowSpec,
    pub channels: Vec<usize>,
    pub dim: usize,
    pub lambda: f64,
    pub participants: Vec<String>,
    pub scenarios: Vec<ScenarioSummary>,
    pub identification: Option<IdentificationSummary>,
    pub folds: Vec<FoldRow>,
    pub warnings: Vec<String>,
}

impl EvalReport {
    pub fn feature_set(&self) -> FeatureKind {
        self.feature_spec.kind
    }

    pub fn scenario(&self, s: Scenario) -> Option<&ScenarioSummary> {
        self.scenarios.iter().find(|x| x.scenario == s)
    }

    /// Per-participant rank-k error for a requested `k`.
    pub fn rank_errors(&self, k: usize) -> Option<Vec<f64>> {
        let id = self.identification.as_ref()?;
        let i = id.ranks.iter().position(|&r| r == k)?;
        Some(id.per_participant.iter().map(|v| v[i]).collect())
    }

    pub fn rank_quartiles(&self, k: usize) -> Option<Quartiles> {
        let id = self.identification.as_ref()?;
        let i = id.ranks.iter().position(|&r| r == k)?;
        Some(id.quartiles[i])
    }
}

/// Extracts features for `config.channels` and evaluates.
pub fn evaluate(dataset: &Dataset, config: &EvalConfig) -> Result<EvalReport> {
    let table = FeatureTable::extract(
        dataset,
        config.channels.as_deref(),
        &config.feature_spec,
        &config.window_spec,
    )?;
    evaluate_table(&table, config)
}

struct ParticipantFold {
    sets: Vec<Option<ScoreSet>>,
    ranks: Vec<usize>,
}

fn fit_fold_models(table: &FeatureTable, fold: &Fold, lambda: f64) -> Result<Vec<ClassModel>> {
    let n_u = table.participants.len();
    (0..table.gestures.len() * n_u)
        .into_par_iter()
        .map(|i| {
            let (g, u) = (i / n_u, i % n_u);
            let rows: Vec<&[f64]> = fold
                .train
                .iter()
                .flat_map(|&t| table.get(u, g, t).iter_rows())
                .collect();
            fit_class_model(&table.gestures[g], &table.participants[u], &rows, lambda)
        })
        .collect()
}

fn run_fold(
    table: &FeatureTable,
    fold: &Fold,
    config: &EvalConfig,
    scenarios: &[Scenario],
    ranks_wanted: bool,
) -> Result<Vec<ParticipantFold>> {
    let models = fit_fold_models(table, fold, config.lambda)?;
    let n_u = table.participants.len();
    let n_g = table.gestures.len();
    let probes: Vec<&FeatureMatrix> = (0..n_u)
        .flat_map(|u| (0..n_g).map(move |g| (u, g)))
        .map(|(u, g)| table.get(u, g, fold.test))
        .collect();

    (0..n_u)
        .into_par_iter()
        .map(|u| {
            let user = &table.participants[u];
            let sets = config
                .scenarios
                .iter()
                .map(|&sc| {
                    if !scenarios.contains(&sc) {
                        return Ok(None);
                    }
                    let mut pooled = ScoreSet::empty(sc);
                    for gesture in &table.gestures {
                        let s = build_verification_scores(
                            &models,
                            &probes,
                            sc,
                            gesture,
                            user,
                            config.normal_pool,
                            config.unit,
                        )?;
                        pooled.absorb(&s);
                    }
                    Ok(Some(pooled))
                })
                .collect::<Result<Vec<_>>>()?;

            let mut ranks = Vec::new();
            if ranks_wanted {
                for (g, gesture) in table.gestures.iter().enumerate() {
                    let chosen = gesture_models(&models, gesture, &table.participants)?;
                    let probe = table.get(u, g, fold.test);
                    match config.unit {
                        ScoreUnit::Window => {
                            for row in probe.iter_rows() {
                                let scores: Vec<f64> =
                                    chosen.iter().map(|m| m.score_unchecked(row)).collect();
                                ranks.push(true_rank(&rank_users(&table.participants, &scores), u));
                            }
                        }
                        ScoreUnit::TrialMedian => {
                            let scores: Vec<f64> = chosen
                                .iter()
                                .map(|m| {
                                    let s: Vec<f64> =
                                        probe.iter_rows().map(|r| m.score_unchecked(r)).collect();
                                    stats::median(&s)
                                })
                                .collect();
                            ranks.push(true_rank(&rank_users(&table.participants, &scores), u));
                        }
                    }
                }
            }
            Ok(ParticipantFold { sets, ranks })
        })
        .collect()
}

fn true_rank(ranking: &[(usize, f64)], user: usize) -> usize {
    ranking
        .iter()
        .position(|&(u, _)| u == user)
        .map_or(usize::MAX, |p| p + 1)
}

/// Evaluates precomputed features.
pub fn evaluate_table(table: &FeatureTable, config: &EvalConfig) -> Result<EvalReport> {
    let n_u = table.participants.len();
    let n_g = table.gestures.len();
    if n_u < 2 {
        return Err(Error::TooFew {
            what: "participants",
            needed: 2,
            found: n_u,
        });
    }
    if !(config.lambda >= 0.0) {
        return Err(Error::InvalidSpec("lambda must be >= 0".into()));
    }
    if config.ranks.contains(&0) {
        return Err(Error::RankOutOfRange { k: 0, users: n_u });
    }
    let mut dedup = config.scenarios.clone();
    dedup.sort();
    dedup.dedup();
    if dedup.len() != config.scenarios.len() {
        return Err(Error::InvalidSpec("scenarios listed more than once".into()));
    }

    let mut warnings = Vec::new();
    let feasible: Vec<Scenario> = config
        .scenarios
        .iter()
        .copied()
        .filter(|&sc| {
            let ok = match sc {
                Scenario::Leaked => true,
                Scenario::SelfTest => n_g >= 2,
                Scenario::Normal => {
                    n_g >= 2 || config.normal_pool == NormalPool::IncludeAuthGesture
                }
            };
            if !ok {
                warnings.push(format!(
                    "{sc} scenario needs at least two gestures; every participant excluded"
                ));
            }
            ok
        })
        .collect();
    for &k in &config.ranks {
        if k > n_u {
            warnings.push(format!(
                "rank {k} exceeds {n_u} enrolled users; reporting rank {n_u} instead"
            ));
        }
    }

    let schedule = loo_schedule(table.trials)?;
    let folds: Vec<Vec<ParticipantFold>> = schedule
        .folds
        .par_iter()
        .map(|fold| run_fold(table, fold, config, &feasible, !config.ranks.is_empty()))
        .collect::<Result<Vec<_>>>()?;

    let mut fold_rows = Vec::new();
    let mut scenarios = Vec::new();
    for (si, &sc) in config.scenarios.iter().enumerate() {
        if !feasible.contains(&sc) {
            continue;
        }
        let mut pooled_all = ScoreSet::empty(sc);
        let mut per_participant = Vec::with_capacity(n_u);
        for u in 0..n_u {
            let mut pooled = ScoreSet::empty(sc);
            for (f, fold) in folds.iter().enumerate() {
                let set = fold[u].sets[si]
                    .as_ref()
                    .expect("feasible scenario was scored");
                let c = det_curve(set)?;
                for (metric, value) in [("eer", c.eer), ("auc", c.auc)] {
                    fold_rows.push(FoldRow {
                        fold: f,
                        participant: table.participants[u].clone(),
                        metric: format!("{sc}_{metric}"),
                        value,
                    });
                }
                pooled.absorb(set);
            }
            let c = det_curve(&pooled)?;
            per_participant.push(ParticipantVerification {
                eer: c.eer,
                auc: c.auc,
            });
            pooled_all.absorb(&pooled);
        }
        let eers: Vec<f64> = per_participant.iter().map(|p| p.eer).collect();
        let aucs: Vec<f64> = per_participant.iter().map(|p| p.auc).collect();
        scenarios.push(ScenarioSummary {
            scenario: sc,
            eer: Quartiles::of(&eers).expect("at least two participants"),
            auc: Quartiles::of(&aucs).expect("at least two participants"),
            per_participant,
            pooled: pooled_all,
        });
    }

    let identification = if config.ranks.is_empty() {
        None
    } else {
        let mut all_ranks = Vec::new();
        let mut per_participant = Vec::with_capacity(n_u);
        for u in 0..n_u {
            let mut ranks = Vec::new();
            for (f, fold) in folds.iter().enumerate() {
                let r = &fold[u].ranks;
                for &k in &config.ranks {
                    fold_rows.push(FoldRow {
                        fold: f,
                        participant: table.participants[u].clone(),
                        metric: format!("r{k}e"),
                        value: rank_error_from_ranks(r, k.min(n_u))?,
                    });
                }
                ranks.extend_from_slice(r);
            }
            per_participant.push(
                config
                    .ranks
                    .iter()
                    .map(|&k| rank_error_from_ranks(&ranks, k.min(n_u)))
                    .collect::<Result<Vec<_>>>()?,
            );
            all_ranks.extend(ranks);
        }
        let quartiles = (0..config.ranks.len())
            .map(|i| {
                let v: Vec<f64> = per_participant.iter().map(|p: &Vec<f64>| p[i]).collect();
                Quartiles::of(&v).expect("at least two participants")
            })
            .collect();
        Some(IdentificationSummary {
            ranks: config.ranks.clone(),
            per_participant,
            quartiles,
            cmc: CmcCurve::from_true_ranks(&all_ranks, n_u)?,
        })
    };

    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(EvalReport {
        feature_spec: table.feature_spec.clone(),
        window_spec: table.window_spec,
        channels: table.channels.clone(),
        dim: table.dim(),
        lambda: config.lambda,
        participants: table.participants.clone(),
        scenarios,
        identification,
        folds: fold_rows,
        warnings,
    })
}
