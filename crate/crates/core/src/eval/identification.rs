//! Closed-set identification within one gesture: rank every enrolled user by
//! Mahalanobis score (smallest first) and measure rank-k errors.

use crate::error::{Error, Result};
use crate::model::ClassModel;

#[derive(Debug, Clone, PartialEq)]
pub struct RankedProbe {
    /// Index into [`IdentificationResult::users`].
    pub true_user: usize,
    /// `(user index, score)`, best match first.
    pub ranking: Vec<(usize, f64)>,
}

impl RankedProbe {
    /// 1-based position of the true user.
    pub fn true_rank(&self) -> usize {
        self.ranking
            .iter()
            .position(|&(u, _)| u == self.true_user)
            .map_or(usize::MAX, |p| p + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IdentificationResult {
    pub users: Vec<String>,
    pub probes: Vec<RankedProbe>,
}

/// Orders users ascending by score; ties go to the lexicographically smaller
/// identifier.
pub fn rank_users(enrolled: &[String], scores: &[f64]) -> Vec<(usize, f64)> {
    let mut ranking: Vec<(usize, f64)> = scores.iter().copied().enumerate().collect();
    ranking.sort_by(|a, b| {
        a.1.total_cmp(&b.1)
            .then_with(|| enrolled[a.0].cmp(&enrolled[b.0]))
    });
    ranking
}

/// Looks up the `(gesture, user)` model of every enrolled user.
pub fn gesture_models<'m>(
    models: &'m [ClassModel],
    gesture: &str,
    enrolled: &[String],
) -> Result<Vec<&'m ClassModel>> {
    if enrolled.len() < 2 {
        return Err(Error::TooFew {
            what: "enrolled users",
            needed: 2,
            found: enrolled.len(),
        });
    }
    enrolled
        .iter()
        .map(|u| {
            models
                .iter()
                .find(|m| m.gesture == gesture && &m.user == u)
                .ok_or_else(|| Error::MissingModel {
                    gesture: gesture.to_string(),
                    user: u.clone(),
                })
        })
        .collect()
}

/// Ranks enrolled users for one probe window of gesture `gesture`.
pub fn identify(
    models: &[ClassModel],
    gesture: &str,
    enrolled: &[String],
    probe: &[f64],
) -> Result<Vec<(usize, f64)>> {
    let chosen = gesture_models(models, gesture, enrolled)?;
    let scores = chosen
        .iter()
        .map(|m| m.score(probe))
        .collect::<Result<Vec<_>>>()?;
    Ok(rank_users(enrolled, &scores))
}

fn check_k(k: usize, users: usize) -> Result<()> {
    if k == 0 || k > users {
        return Err(Error::RankOutOfRange { k, users });
    }
    Ok(())
}

/// Fraction of probes whose true user is outside the top `k`.
pub fn rank_k_error(res: &IdentificationResult, k: usize) -> Result<f64> {
    check_k(k, res.users.len())?;
    let ranks: Vec<usize> = res.probes.iter().map(RankedProbe::true_rank).collect();
    rank_error_from_ranks(&ranks, k)
}

pub(crate) fn rank_error_from_ranks(ranks: &[usize], k: usize) -> Result<f64> {
    if ranks.is_empty() {
        return Err(Error::TooFew {
            what: "identification probes",
            needed: 1,
            found: 0,
        });
    }
    Ok(ranks.iter().filter(|&&r| r > k).count() as f64 / ranks.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CmcCurve {
    /// `rank_errors[k - 1]` is the rank-k error, `k = 1..=U`.
    pub rank_errors: Vec<f64>,
}

impl CmcCurve {
    pub fn from_true_ranks(ranks: &[usize], users: usize) -> Result<Self> {
        let rank_errors = (1..=users)
            .map(|k| rank_error_from_ranks(ranks, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { rank_errors })
    }

    pub fn at(&self, k: usize) -> Option<f64> {
        k.checked_sub(1)
            .and_then(|i| self.rank_errors.get(i).copied())
    }
}

pub fn cmc(res: &IdentificationResult) -> Result<CmcCurve> {
    let ranks: Vec<usize> = res.probes.iter().map(RankedProbe::true_rank).collect();
    CmcCurve::from_true_ranks(&ranks, res.users.len())
}
