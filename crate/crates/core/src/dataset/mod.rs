//! Canonical dataset model: recordings, metadata, bipolar derivation and
//! channel projection.
//!
//! A [`TrialRecording`] stores its samples channel-major so that per-channel
//! feature code can borrow contiguous slices. Row/column accessors expose the
//! conventional `n_samples × channels` view.

mod io;
pub(crate) mod synth;
mod validate;

pub use io::{load_dataset, load_dataset_lenient, load_pairing, write_dataset, DataFormat};
pub use synth::{synth_dataset, SynthSpec};
pub use validate::{validate_dataset, Finding, ValidationReport};

use std::collections::HashSet;

use crate::error::{Error, Result};

/// The sixteen gesture labels of the reference protocol, in presentation order.
pub const DEFAULT_GESTURES: [&str; 16] = [
    "LP", "TA", "TLFO", "TIFO", "TLFE", "TIFE", "IMFE", "LFE", "IFE", "TE", "WF", "WE", "FS", "FP",
    "HO", "HC",
];

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetMeta {
    pub sampling_rate_hz: f64,
    pub participant_ids: Vec<String>,
    pub gesture_ids: Vec<String>,
    pub trials_per_gesture: usize,
    pub channel_count: usize,
    pub signal_units: String,
}

impl DatasetMeta {
    pub fn validate(&self) -> Result<()> {
        if !(self.sampling_rate_hz.is_finite() && self.sampling_rate_hz > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "sampling rate must be positive, got {}",
                self.sampling_rate_hz
            )));
        }
        if self.channel_count == 0 {
            return Err(Error::InvalidSpec(
                "channel count must be at least 1".into(),
            ));
        }
        if self.trials_per_gesture < 2 {
            return Err(Error::TooFew {
                what: "trials per gesture",
                needed: 2,
                found: self.trials_per_gesture,
            });
        }
        if self.participant_ids.is_empty() || self.gesture_ids.is_empty() {
            return Err(Error::InvalidSpec(
                "participant and gesture lists must be non-empty".into(),
            ));
        }
        check_unique("participant", &self.participant_ids)?;
        check_unique("gesture", &self.gesture_ids)?;
        Ok(())
    }

    pub fn participant_index(&self, id: &str) -> Option<usize> {
        self.participant_ids.iter().position(|p| p == id)
    }

    pub fn gesture_index(&self, id: &str) -> Option<usize> {
        self.gesture_ids.iter().position(|g| g == id)
    }
}

fn check_unique(kind: &str, ids: &[String]) -> Result<()> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::InvalidSpec(format!("duplicate {kind} id {id:?}")));
        }
    }
    Ok(())
}

/// One participant/gesture/trial recording.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecording {
    pub participant: String,
    pub gesture: String,
    pub trial_index: usize,
    pub sampling_rate_hz: f64,
    /// Indices of the source channels these columns came from.
    pub channels: Vec<usize>,
    n_samples: usize,
    data: Vec<f64>,
}

impl TrialRecording {
    /// Builds a recording from per-channel sample vectors of equal length.
    pub fn from_channels(
        participant: impl Into<String>,
        gesture: impl Into<String>,
        trial_index: usize,
        sampling_rate_hz: f64,
        channels: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n_samples = channels.first().map_or(0, Vec::len);
        if channels.is_empty() {
            return Err(Error::EmptySelection);
        }
        if let Some(bad) = channels.iter().find(|c| c.len() != n_samples) {
            return Err(Error::DimensionMismatch {
                expected: n_samples,
                found: bad.len(),
            });
        }
        let count = channels.len();
        Ok(Self {
            participant: participant.into(),
            gesture: gesture.into(),
            trial_index,
            sampling_rate_hz,
            channels: (0..count).collect(),
            n_samples,
            data: channels.into_iter().flatten().collect(),
        })
    }

    /// Builds a recording from sample rows (`n_samples × channels`).
    pub fn from_rows(
        participant: impl Into<String>,
        gesture: impl Into<String>,
        trial_index: usize,
        sampling_rate_hz: f64,
        channel_count: usize,
        rows: &[f64],
    ) -> Result<Self> {
        if channel_count == 0 {
            return Err(Error::EmptySelection);
        }
        if !rows.len().is_multiple_of(channel_count) {
            return Err(Error::DimensionMismatch {
                expected: channel_count,
                found: rows.len() % channel_count,
            });
        }
        let n_samples = rows.len() / channel_count;
        let mut data = vec![0.0; rows.len()];
        for (i, row) in rows.chunks_exact(channel_count).enumerate() {
            for (c, &v) in row.iter().enumerate() {
                data[c * n_samples + i] = v;
            }
        }
        Ok(Self {
            participant: participant.into(),
            gesture: gesture.into(),
            trial_index,
            sampling_rate_hz,
            channels: (0..channel_count).collect(),
            n_samples,
            data,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.data[c * self.n_samples..(c + 1) * self.n_samples]
    }

    pub fn sample(&self, row: usize, c: usize) -> f64 {
        self.data[c * self.n_samples + row]
    }

    /// Samples in row-major order (sample-major, channel-minor).
    pub fn to_rows(&self) -> Vec<f64> {
        let c_count = self.channel_count();
        let mut out = Vec::with_capacity(self.data.len());
        for i in 0..self.n_samples {
            for c in 0..c_count {
                out.push(self.sample(i, c));
            }
        }
        out
    }

    /// First non-finite sample as `(row, channel)`.
    pub fn first_non_finite(&self) -> Option<(usize, usize)> {
        let pos = self.data.iter().position(|v| !v.is_finite())?;
        Some((pos % self.n_samples.max(1), pos / self.n_samples.max(1)))
    }

    /// Same metadata, different samples. Internal helper for projections.
    fn with_channels(&self, channels: Vec<usize>, columns: Vec<&[f64]>) -> Self {
        Self {
            participant: self.participant.clone(),
            gesture: self.gesture.clone(),
            trial_index: self.trial_index,
            sampling_rate_hz: self.sampling_rate_hz,
            channels,
            n_samples: self.n_samples,
            data: columns.into_iter().flatten().copied().collect(),
        }
    }

    pub fn truncated(&self, n_samples: usize) -> Self {
        let n = n_samples.min(self.n_samples);
        let columns = (0..self.channel_count())
            .map(|c| &self.channel(c)[..n])
            .collect();
        let mut out = self.with_channels(self.channels.clone(), columns);
        out.n_samples = n;
        out
    }

    pub fn map_samples(&self, f: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v = f(*v));
        out
    }
}

/// Ordered `(proximal, distal)` electrode pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipolarPairing {
    pub pairs: Vec<(usize, usize)>,
}

impl BipolarPairing {
    pub fn new(pairs: Vec<(usize, usize)>) -> Result<Self> {
        let mut used = HashSet::new();
        for &(p, d) in &pairs {
            for idx in [p, d] {
                if !used.insert(idx) {
                    return Err(Error::InvalidSpec(format!(
                        "electrode {idx} used by more than one pair"
                    )));
                }
            }
        }
        if pairs.is_empty() {
            return Err(Error::EmptySelection);
        }
        Ok(Self { pairs })
    }

    /// Two rings of `per_ring` electrodes: electrode `i` pairs with `i + per_ring`.
    pub fn two_rings(per_ring: usize) -> Self {
        Self {
            pairs: (0..per_ring).map(|i| (i, i + per_ring)).collect(),
        }
    }

    pub fn max_index(&self) -> usize {
        self.pairs.iter().map(|&(p, d)| p.max(d)).max().unwrap_or(0)
    }
}

/// Column `k` of the output is `proximal_k − distal_k`.
pub fn derive_bipolar(
    monopolar: &TrialRecording,
    pairing: &BipolarPairing,
) -> Result<TrialRecording> {
    let available = monopolar.channel_count();
    if pairing.max_index() >= available {
        return Err(Error::ChannelOutOfRange {
            index: pairing.max_index(),
            available,
        });
    }
    let n = monopolar.n_samples();
    let mut data = Vec::with_capacity(n * pairing.pairs.len());
    for &(p, d) in &pairing.pairs {
        let (a, b) = (monopolar.channel(p), monopolar.channel(d));
        data.extend(a.iter().zip(b).map(|(x, y)| x - y));
    }
    Ok(TrialRecording {
        participant: monopolar.participant.clone(),
        gesture: monopolar.gesture.clone(),
        trial_index: monopolar.trial_index,
        sampling_rate_hz: monopolar.sampling_rate_hz,
        channels: (0..pairing.pairs.len()).collect(),
        n_samples: n,
        data,
    })
}

/// Restricts a recording to the given strictly increasing column indices.
/// The output's `channels` provenance maps back to the original source channels.
pub fn select_channels(rec: &TrialRecording, channel_set: &[usize]) -> Result<TrialRecording> {
    check_channel_set(channel_set, rec.channel_count())?;
    let provenance = channel_set.iter().map(|&c| rec.channels[c]).collect();
    let columns = channel_set.iter().map(|&c| rec.channel(c)).collect();
    Ok(rec.with_channels(provenance, columns))
}

pub(crate) fn check_channel_set(channel_set: &[usize], available: usize) -> Result<()> {
    if channel_set.is_empty() {
        return Err(Error::EmptySelection);
    }
    for &c in channel_set {
        if c >= available {
            return Err(Error::ChannelOutOfRange {
                index: c,
                available,
            });
        }
    }
    if channel_set.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidSpec(format!(
            "channel set {channel_set:?} must be strictly increasing"
        )));
    }
    Ok(())
}

/// A complete, canonically ordered dataset: recordings sorted by
/// (participant, gesture, trial) in metadata order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub meta: DatasetMeta,
    recordings: Vec<TrialRecording>,
}

impl Dataset {
    /// Checks that every declared trial is present exactly once with the
    /// declared channel count and finite samples.
    pub fn new(meta: DatasetMeta, recordings: Vec<TrialRecording>) -> Result<Self> {
        meta.validate()?;
        let (p_n, g_n, t_n) = (
            meta.participant_ids.len(),
            meta.gesture_ids.len(),
            meta.trials_per_gesture,
        );
        let mut slots: Vec<Option<TrialRecording>> = vec![None; p_n * g_n * t_n];
        for rec in recordings {
            let p = meta.participant_index(&rec.participant).ok_or_else(|| {
                Error::InvalidSpec(format!("unknown participant {:?}", rec.participant))
            })?;
            let g = meta
                .gesture_index(&rec.gesture)
                .ok_or_else(|| Error::InvalidSpec(format!("unknown gesture {:?}", rec.gesture)))?;
            if rec.trial_index >= t_n {
                return Err(Error::InvalidSpec(format!(
                    "trial index {} exceeds declared {} trials",
                    rec.trial_index, t_n
                )));
            }
            if rec.channel_count() != meta.channel_count {
                return Err(Error::DimensionMismatch {
                    expected: meta.channel_count,
                    found: rec.channel_count(),
                });
            }
            let slot = &mut slots[(p * g_n + g) * t_n + rec.trial_index];
            if slot.is_some() {
                return Err(Error::InvalidSpec(format!(
                    "duplicate recording {}/{}/{}",
                    rec.participant, rec.gesture, rec.trial_index
                )));
            }
            *slot = Some(rec);
        }
        let mut out = Vec::with_capacity(slots.len());
        for (i, slot) in slots.into_iter().enumerate() {
            let (p, g, t) = (i / (g_n * t_n), (i / t_n) % g_n, i % t_n);
            match slot {
                Some(rec) => out.push(rec),
                None => {
                    return Err(Error::MissingTrial {
                        participant: meta.participant_ids[p].clone(),
                        gesture: meta.gesture_ids[g].clone(),
                        trial: t,
                        path: Default::default(),
                    })
                }
            }
        }
        Ok(Self {
            meta,
            recordings: out,
        })
    }

    pub fn recordings(&self) -> &[TrialRecording] {
        &self.recordings
    }

    pub fn into_parts(self) -> (DatasetMeta, Vec<TrialRecording>) {
        (self.meta, self.recordings)
    }

    /// Recording for participant index `p`, gesture index `g`, trial `t`.
    pub fn get(&self, p: usize, g: usize, t: usize) -> &TrialRecording {
        let g_n = self.meta.gesture_ids.len();
        let t_n = self.meta.trials_per_gesture;
        &self.recordings[(p * g_n + g) * t_n + t]
    }

    /// Applies `f` to every recording and rebuilds the dataset with the new
    /// channel count.
    pub fn map_recordings(
        &self,
        f: impl Fn(&TrialRecording) -> Result<TrialRecording>,
    ) -> Result<Self> {
        let recordings = self.recordings.iter().map(f).collect::<Result<Vec<_>>>()?;
        let mut meta = self.meta.clone();
        meta.channel_count = recordings.first().map_or(0, |r| r.channel_count());
        Ok(Self { meta, recordings })
    }

    pub fn select_channels(&self, channel_set: &[usize]) -> Result<Self> {
        self.map_recordings(|r| select_channels(r, channel_set))
    }

    pub fn derive_bipolar(&self, pairing: &BipolarPairing) -> Result<Self> {
        self.map_recordings(|r| derive_bipolar(r, pairing))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(cols: Vec<Vec<f64>>) -> TrialRecording {
        TrialRecording::from_channels("p", "g", 0, 2048.0, cols).unwrap()
    }

    #[test]
    fn rows_and_channels_agree() {
        let r = TrialRecording::from_rows("p", "g", 0, 10.0, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
            .unwrap();
        assert_eq!(r.n_samples(), 3);
        assert_eq!(r.channel(0), &[1.0, 3.0, 5.0]);
        assert_eq!(r.channel(1), &[2.0, 4.0, 6.0]);
        assert_eq!(r.to_rows(), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn sixteen_monopolar_give_eight_bipolar() {
        let cols: Vec<Vec<f64>> = (0..16).map(|c| vec![c as f64; 5]).collect();
        let out = derive_bipolar(&rec(cols), &BipolarPairing::two_rings(8)).unwrap();
        assert_eq!(out.channel_count(), 8);
        assert_eq!(out.n_samples(), 5);
        for c in 0..8 {
            assert!(out.channel(c).iter().all(|&v| v == -8.0));
        }
    }

    #[test]
    fn identical_pair_is_zero() {
        let x = vec![1.5, -2.0, 3.25];
        let r = rec(vec![x.clone(), x]);
        let out = derive_bipolar(&r, &BipolarPairing::new(vec![(0, 1)]).unwrap()).unwrap();
        assert!(out.channel(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pairing_rejects_out_of_range_and_reuse() {
        let r = rec(vec![vec![0.0; 3]; 4]);
        let p = BipolarPairing::new(vec![(0, 4)]).unwrap();
        assert!(matches!(
            derive_bipolar(&r, &p),
            Err(Error::ChannelOutOfRange { index: 4, .. })
        ));
        assert!(BipolarPairing::new(vec![(0, 1), (1, 2)]).is_err());
    }

    #[test]
    fn select_projection_and_identity() {
        let cols: Vec<Vec<f64>> = (0..8).map(|c| vec![c as f64, 10.0 + c as f64]).collect();
        let r = rec(cols);
        let all: Vec<usize> = (0..8).collect();
        let same = select_channels(&r, &all).unwrap();
        assert_eq!(same, r);
        let one = select_channels(&r, &[2]).unwrap();
        assert_eq!(one.channel_count(), 1);
        assert_eq!(one.channel(0), r.channel(2));
        assert_eq!(one.channels, vec![2]);
    }

    #[test]
    fn select_errors() {
        let r = rec(vec![vec![0.0; 3]; 3]);
        assert!(matches!(
            select_channels(&r, &[]),
            Err(Error::EmptySelection)
        ));
        assert!(matches!(
            select_channels(&r, &[3]),
            Err(Error::ChannelOutOfRange { .. })
        ));
        assert!(select_channels(&r, &[1, 0]).is_err());
    }

    #[test]
    fn meta_invariants() {
        let mut meta = DatasetMeta {
            sampling_rate_hz: 2048.0,
            participant_ids: vec!["a".into(), "b".into()],
            gesture_ids: vec!["LP".into()],
            trials_per_gesture: 2,
            channel_count: 1,
            signal_units: "mV".into(),
        };
        assert!(meta.validate().is_ok());
        meta.trials_per_gesture = 1;
        assert!(meta.validate().is_err());
        meta.trials_per_gesture = 2;
        meta.participant_ids.push("a".into());
        assert!(meta.validate().is_err());
    }
}
