//! Seeded synthetic sEMG-like datasets.
//!
//! Every (user, gesture, channel) gets an amplitude gain and a stable AR(6)
//! spectrum. Users blend from a shared per-gesture signature towards their own
//! draw with weight `separation / (1 + separation)`, and each user also gets a
//! global level offset on the same weight, so `separation = 0` makes all users
//! identically distributed. Trials differ by a log-normal gain jitter whose
//! spread shrinks as `1 / (1 + separation)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{Dataset, DatasetMeta, TrialRecording, DEFAULT_GESTURES};
use crate::error::{Error, Result};
use crate::features::ar::{is_stable, reflection_to_ar};

const AR_ORDER: usize = 6;
const MAX_REFLECTION: f64 = 0.75;
const MAX_ATTEMPTS: usize = 32;
const BURN_IN: usize = 256;
const TRIAL_JITTER: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub users: usize,
    pub gestures: usize,
    pub trials: usize,
    pub channels: usize,
    pub duration_s: f64,
    pub sampling_rate_hz: f64,
    pub seed: u64,
    pub separation: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            users: 6,
            gestures: 16,
            trials: 7,
            channels: 8,
            duration_s: 5.0,
            sampling_rate_hz: 2048.0,
            seed: 0,
            separation: 1.0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("users", self.users),
            ("gestures", self.gestures),
            ("trials", self.trials),
            ("channels", self.channels),
        ] {
            if v == 0 {
                return Err(Error::InvalidSpec(format!("{name} must be at least 1")));
            }
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(Error::InvalidSpec("duration must be positive".into()));
        }
        if !(self.sampling_rate_hz.is_finite() && self.sampling_rate_hz > 0.0) {
            return Err(Error::InvalidSpec("sampling rate must be positive".into()));
        }
        if !(self.separation.is_finite() && self.separation >= 0.0) {
            return Err(Error::InvalidSpec("separation must be >= 0".into()));
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        (self.duration_s * self.sampling_rate_hz).round() as usize
    }

    pub fn meta(&self) -> DatasetMeta {
        DatasetMeta {
            sampling_rate_hz: self.sampling_rate_hz,
            participant_ids: (1..=self.users).map(|u| format!("P{u:02}")).collect(),
            gesture_ids: gesture_labels(self.gestures),
            trials_per_gesture: self.trials,
            channel_count: self.channels,
            signal_units: "mV".into(),
        }
    }
}

fn gesture_labels(n: usize) -> Vec<String> {
    if n <= DEFAULT_GESTURES.len() {
        DEFAULT_GESTURES[..n]
            .iter()
            .map(|s| s.to_string())
            .collect()
    } else {
        (1..=n).map(|g| format!("G{g:02}")).collect()
    }
}

#[derive(Debug, Clone)]
struct Signature {
    gain: f64,
    ar: Vec<f64>,
    innovation_sd: f64,
}

fn draw_reflection(rng: &mut impl Rng) -> [f64; AR_ORDER] {
    std::array::from_fn(|_| rng.random_range(-MAX_REFLECTION..MAX_REFLECTION))
}

fn draw_log_gain(rng: &mut impl Rng) -> f64 {
    rng.random_range(0.5f64.ln()..=2.0f64.ln())
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn trial_seed(seed: u64, u: usize, g: usize, t: usize) -> u64 {
    [u as u64, g as u64, t as u64]
        .iter()
        .fold(splitmix(seed), |acc, &k| splitmix(acc ^ k))
}

/// Generates a complete dataset. Pure function of `spec`.
pub fn synth_dataset(spec: &SynthSpec) -> Result<Dataset> {
    spec.validate()?;
    let meta = spec.meta();
    let mut master = ChaCha8Rng::seed_from_u64(spec.seed);
    let weight = spec.separation / (1.0 + spec.separation);
    let (n_u, n_g, n_c) = (spec.users, spec.gestures, spec.channels);

    let base: Vec<(f64, [f64; AR_ORDER])> = (0..n_g * n_c)
        .map(|_| (draw_log_gain(&mut master), draw_reflection(&mut master)))
        .collect();

    let mut signatures = Vec::with_capacity(n_u * n_g * n_c);
    for u in 0..n_u {
        let offset = if n_u > 1 {
            weight * 4.0f64.ln() * (u as f64 / (n_u - 1) as f64 - 0.5)
        } else {
            0.0
        };
        for g in 0..n_g {
            for c in 0..n_c {
                let (base_gain, base_k) = base[g * n_c + c];
                let user_gain = draw_log_gain(&mut master);
                let mut attempt = 0;
                let sig = loop {
                    if attempt == MAX_ATTEMPTS {
                        return Err(Error::UnstableSignature {
                            attempts: MAX_ATTEMPTS,
                        });
                    }
                    attempt += 1;
                    let user_k = draw_reflection(&mut master);
                    let k: Vec<f64> = base_k
                        .iter()
                        .zip(&user_k)
                        .map(|(b, s)| (1.0 - weight) * b + weight * s)
                        .collect();
                    let ar = reflection_to_ar(&k);
                    if !is_stable(&ar) {
                        continue;
                    }
                    let innovation_sd = k.iter().map(|k| 1.0 - k * k).product::<f64>().sqrt();
                    break Signature {
                        gain: ((1.0 - weight) * base_gain + weight * user_gain + offset).exp(),
                        ar,
                        innovation_sd,
                    };
                };
                signatures.push(sig);
            }
        }
    }

    let n = spec.n_samples();
    let jitter = TRIAL_JITTER / (1.0 + spec.separation);
    let jobs: Vec<(usize, usize, usize)> = (0..n_u)
        .flat_map(|u| (0..n_g).flat_map(move |g| (0..spec.trials).map(move |t| (u, g, t))))
        .collect();
    let recordings = jobs
        .into_par_iter()
        .map(|(u, g, t)| {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(spec.seed, u, g, t));
            let channels = (0..n_c)
                .map(|c| {
                    let sig = &signatures[(u * n_g + g) * n_c + c];
                    let z: f64 = StandardNormal.sample(&mut rng);
                    let gain = sig.gain * (jitter * z).exp();
                    ar_process(&sig.ar, sig.innovation_sd, n, &mut rng)
                        .into_iter()
                        .map(|v| (gain * v) as f32 as f64)
                        .collect()
                })
                .collect();
            TrialRecording::from_channels(
                meta.participant_ids[u].as_str(),
                meta.gesture_ids[g].as_str(),
                t,
                spec.sampling_rate_hz,
                channels,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(meta, recordings)
}

/// `x_i = Σ a_p x_{i−p} + w_i` with Gaussian innovations, after a burn-in.
pub(crate) fn ar_process(ar: &[f64], innovation_sd: f64, n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut x = vec![0.0; n + BURN_IN];
    for i in 0..x.len() {
        let w: f64 = StandardNormal.sample(rng);
        let mut v = innovation_sd * w;
        for (p, a) in ar.iter().enumerate() {
            if i > p {
                v += a * x[i - p - 1];
            }
        }
        x[i] = v;
    }
    x.split_off(BURN_IN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::td::mav;

    fn small(separation: f64, users: usize) -> SynthSpec {
        SynthSpec {
            users,
            gestures: 3,
            trials: 3,
            channels: 4,
            duration_s: 2.0,
            sampling_rate_hz: 1024.0,
            seed: 7,
            separation,
        }
    }

    #[test]
    fn deterministic() {
        let spec = small(2.0, 3);
        assert_eq!(synth_dataset(&spec).unwrap(), synth_dataset(&spec).unwrap());
        let mut other = spec.clone();
        other.seed = 8;
        assert_ne!(
            synth_dataset(&spec).unwrap(),
            synth_dataset(&other).unwrap()
        );
    }

    #[test]
    fn shape_matches_spec() {
        let spec = small(1.0, 2);
        let ds = synth_dataset(&spec).unwrap();
        assert_eq!(ds.recordings().len(), 2 * 3 * 3);
        assert!(ds.recordings().iter().all(|r| r.n_samples() == 2048
            && r.channel_count() == 4
            && r.first_non_finite().is_none()));
        assert_eq!(ds.meta.gesture_ids, vec!["LP", "TA", "TLFO"]);
    }

    fn per_user(ds: &Dataset, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        let meta = &ds.meta;
        (0..meta.participant_ids.len())
            .map(|p| {
                let mut acc = 0.0;
                let mut n = 0.0;
                for g in 0..meta.gesture_ids.len() {
                    for t in 0..meta.trials_per_gesture {
                        let r = ds.get(p, g, t);
                        for c in 0..r.channel_count() {
                            acc += f(r.channel(c));
                            n += 1.0;
                        }
                    }
                }
                acc / n
            })
            .collect()
    }

    #[test]
    fn zero_separation_users_share_rms() {
        let mut spec = small(0.0, 4);
        spec.duration_s = 10.0;
        let ds = synth_dataset(&spec).unwrap();
        // long-run mean square per user, Monte-Carlo over all trials and channels
        let ms = per_user(&ds, |x| {
            x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
        });
        let rms: Vec<f64> = ms.iter().map(|m| m.sqrt()).collect();
        let lo = rms.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = rms.iter().cloned().fold(0.0, f64::max);
        assert!(hi / lo < 1.05, "{rms:?}");
    }

    #[test]
    fn high_separation_spreads_user_amplitude() {
        let ds = synth_dataset(&small(10.0, 2)).unwrap();
        let m = per_user(&ds, mav);
        let ratio = m[0].max(m[1]) / m[0].min(m[1]);
        assert!(ratio > 2.0, "{m:?}");
    }

    #[test]
    fn rejects_invalid_spec() {
        let mut spec = small(1.0, 2);
        spec.separation = -1.0;
        assert!(synth_dataset(&spec).is_err());
        spec.separation = 1.0;
        spec.trials = 1;
        assert!(synth_dataset(&spec).is_err());
    }
}
