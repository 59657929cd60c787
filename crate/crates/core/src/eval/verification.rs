//! Verification: genuine/impostor score pools per threat scenario, the DET
//! curve, EER and AUC.
//!
//! A claim is accepted when its Mahalanobis score is at most the threshold.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ScoreUnit;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::model::ClassModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scenario {
    /// The authentication gesture is secret; impostors guess another gesture.
    #[serde(rename = "normal")]
    Normal,
    /// The authentication gesture is known to impostors.
    #[serde(rename = "leaked")]
    Leaked,
    /// The genuine user performs their other gestures.
    #[serde(rename = "self")]
    SelfTest,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Normal, Scenario::Leaked, Scenario::SelfTest];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Normal => "normal",
            Scenario::Leaked => "leaked",
            Scenario::SelfTest => "self",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidSpec(format!("unknown scenario {s:?}")))
    }
}

/// Which impostor windows the Normal scenario draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalPool {
    /// Other users, every gesture except the authentication gesture.
    #[default]
    ExcludeAuthGesture,
    /// Other users, every gesture.
    IncludeAuthGesture,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSet {
    pub scenario: Scenario,
    /// `None` when pooled over gestures.
    pub auth_gesture: Option<String>,
    /// `None` when pooled over users.
    pub claimed_user: Option<String>,
    pub genuine: Vec<f64>,
    pub impostor: Vec<f64>,
}

impl ScoreSet {
    pub fn empty(scenario: Scenario) -> Self {
        Self {
            scenario,
            auth_gesture: None,
            claimed_user: None,
            genuine: Vec::new(),
            impostor: Vec::new(),
        }
    }

    /// Appends another set's scores, dropping labels that no longer agree.
    pub fn absorb(&mut self, other: &ScoreSet) {
        if self.genuine.is_empty() && self.impostor.is_empty() {
            self.auth_gesture = other.auth_gesture.clone();
            self.claimed_user = other.claimed_user.clone();
        } else {
            if self.auth_gesture != other.auth_gesture {
                self.auth_gesture = None;
            }
            if self.claimed_user != other.claimed_user {
                self.claimed_user = None;
            }
        }
        self.genuine.extend_from_slice(&other.genuine);
        self.impostor.extend_from_slice(&other.impostor);
    }

    pub fn is_usable(&self) -> bool {
        !self.genuine.is_empty() && !self.impostor.is_empty()
    }
}

fn score_probe(
    model: &ClassModel,
    probe: &FeatureMatrix,
    unit: ScoreUnit,
    out: &mut Vec<f64>,
) -> Result<()> {
    if probe.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: probe.dim(),
        });
    }
    match unit {
        ScoreUnit::Window => out.extend(probe.iter_rows().map(|r| model.score_unchecked(r))),
        ScoreUnit::TrialMedian => {
            let scores: Vec<f64> = probe
                .iter_rows()
                .map(|r| model.score_unchecked(r))
                .collect();
            out.push(super::stats::median(&scores));
        }
    }
    Ok(())
}

/// Scores held-out probe matrices against the `(auth_gesture, claimed_user)`
/// model and splits them into genuine and scenario-specific impostor pools.
pub fn build_verification_scores(
    models: &[ClassModel],
    probes: &[&FeatureMatrix],
    scenario: Scenario,
    auth_gesture: &str,
    claimed_user: &str,
    normal_pool: NormalPool,
    unit: ScoreUnit,
) -> Result<ScoreSet> {
    let model = models
        .iter()
        .find(|m| m.gesture == auth_gesture && m.user == claimed_user)
        .ok_or_else(|| Error::MissingModel {
            gesture: auth_gesture.to_string(),
            user: claimed_user.to_string(),
        })?;
    let mut set = ScoreSet {
        scenario,
        auth_gesture: Some(auth_gesture.to_string()),
        claimed_user: Some(claimed_user.to_string()),
        genuine: Vec::new(),
        impostor: Vec::new(),
    };
    for probe in probes {
        let same_user = probe.provenance.participant == claimed_user;
        let same_gesture = probe.provenance.gesture == auth_gesture;
        if same_user && same_gesture {
            score_probe(model, probe, unit, &mut set.genuine)?;
            continue;
        }
        let impostor = match scenario {
            Scenario::Normal => {
                !same_user && (!same_gesture || normal_pool == NormalPool::IncludeAuthGesture)
            }
            Scenario::Leaked => !same_user && same_gesture,
            Scenario::SelfTest => same_user && !same_gesture,
        };
        if impostor {
            score_probe(model, probe, unit, &mut set.impostor)?;
        }
    }
    if set.genuine.is_empty() {
        return Err(Error::EmptyPool {
            pool: "genuine",
            user: claimed_user.to_string(),
        });
    }
    if set.impostor.is_empty() {
        return Err(Error::EmptyPool {
            pool: "impostor",
            user: claimed_user.to_string(),
        });
    }
    Ok(set)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetPoint {
    pub threshold: f64,
    pub far: f64,
    pub frr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetCurve {
    /// Ordered by threshold, from `-∞` to `+∞`.
    pub points: Vec<DetPoint>,
    pub eer: f64,
    pub auc: f64,
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Sweeps every distinct score as a threshold, plus `±∞` sentinels.
pub fn det_curve(s: &ScoreSet) -> Result<DetCurve> {
    if s.genuine.is_empty() || s.impostor.is_empty() {
        return Err(Error::EmptyPool {
            pool: if s.genuine.is_empty() {
                "genuine"
            } else {
                "impostor"
            },
            user: s.claimed_user.clone().unwrap_or_else(|| "*".into()),
        });
    }
    if s.genuine.iter().chain(&s.impostor).any(|v| !v.is_finite()) {
        return Err(Error::InvalidSpec("score sets must be finite".into()));
    }
    let gen = sorted(&s.genuine);
    let imp = sorted(&s.impostor);
    let (n_g, n_i) = (gen.len() as f64, imp.len() as f64);

    let mut points = Vec::with_capacity(gen.len() + imp.len() + 2);
    points.push(DetPoint {
        threshold: f64::NEG_INFINITY,
        far: 0.0,
        frr: 1.0,
    });
    let (mut gi, mut ii) = (0usize, 0usize);
    while gi < gen.len() || ii < imp.len() {
        let t = match (gen.get(gi), imp.get(ii)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => unreachable!(),
        };
        while gi < gen.len() && gen[gi] <= t {
            gi += 1;
        }
        while ii < imp.len() && imp[ii] <= t {
            ii += 1;
        }
        points.push(DetPoint {
            threshold: t,
            far: ii as f64 / n_i,
            frr: (gen.len() - gi) as f64 / n_g,
        });
    }
    points.push(DetPoint {
        threshold: f64::INFINITY,
        far: 1.0,
        frr: 0.0,
    });
    let mut curve = DetCurve {
        points,
        eer: 0.0,
        auc: 0.0,
    };
    curve.eer = eer(&curve);
    curve.auc = auc(&curve);
    Ok(curve)
}

/// FAR = FRR crossing; linear interpolation between the breakpoints where
/// `FAR − FRR` changes sign when no breakpoint hits it exactly.
pub fn eer(c: &DetCurve) -> f64 {
    let pts = &c.points;
    if let Some(p) = pts.iter().find(|p| p.far == p.frr) {
        return p.far;
    }
    for w in pts.windows(2) {
        let (d0, d1) = (w[0].far - w[0].frr, w[1].far - w[1].frr);
        if d0 < 0.0 && d1 > 0.0 {
            let alpha = -d0 / (d1 - d0);
            return w[0].far + alpha * (w[1].far - w[0].far);
        }
    }
    // unreachable for curves from det_curve: the sentinels give -1 and +1
    f64::NAN
}

/// Trapezoidal area under FRR as a function of FAR over `[0, 1]`.
pub fn auc(c: &DetCurve) -> f64 {
    let mut pts: Vec<(f64, f64)> = c.points.iter().map(|p| (p.far, p.frr)).collect();
    pts.sort_by(|a, b| match a.0.total_cmp(&b.0) {
        Ordering::Equal => b.1.total_cmp(&a.1),
        o => o,
    });
    pts.dedup();
    pts.windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum()
}
