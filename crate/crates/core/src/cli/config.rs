use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dataset::{check_channel_set, DatasetMeta};
use crate::error::{Error, Result};
use crate::eval::{EvalConfig, NormalPool, Scenario, ScoreUnit};
use crate::features::{equal_bands, Band, FeatureKind, FeatureSpec, TdStat, WindowSpec};
use crate::model::DEFAULT_LAMBDA;
use crate::selection::{Criterion, SfsMetric};

/// Lower edge used when bands are given as a count.
const BAND_LOW_HZ: f64 = 10.0;
/// Upper edge used when bands are given as a count, capped at Nyquist.
const BAND_HIGH_HZ: f64 = 500.0;

#[derive(Debug, Clone, PartialEq, Default)]
pub enum ChannelSet {
    #[default]
    All,
    List(Vec<usize>),
}

impl FromStr for ChannelSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("all") {
            return Ok(ChannelSet::All);
        }
        s.split(',')
            .map(|x| {
                x.trim()
                    .parse()
                    .map_err(|_| Error::InvalidSpec(format!("invalid channel {x:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(ChannelSet::List)
    }
}

impl Serialize for ChannelSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ChannelSet::All => s.serialize_str("all"),
            ChannelSet::List(v) => v.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for ChannelSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Word(String),
            List(Vec<usize>),
        }
        match Raw::deserialize(d)? {
            Raw::List(v) => Ok(ChannelSet::List(v)),
            Raw::Word(w) => w.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// FDT bands as a count of equal bands or explicit ascending edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FdtBands {
    Count(usize),
    Edges(Vec<f64>),
}

impl Default for FdtBands {
    fn default() -> Self {
        FdtBands::Count(6)
    }
}

impl FromStr for FdtBands {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Ok(n) = s.trim().parse::<usize>() {
            return Ok(FdtBands::Count(n));
        }
        let edges = s
            .split(',')
            .map(|x| {
                x.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidSpec(format!("invalid band edge {x:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if edges.len() < 2 {
            return Err(Error::InvalidSpec(
                "band edges need at least two values".into(),
            ));
        }
        Ok(FdtBands::Edges(edges))
    }
}

impl FdtBands {
    pub fn resolve(&self, fs: f64) -> Vec<Band> {
        match self {
            FdtBands::Count(n) => equal_bands(*n, BAND_LOW_HZ, BAND_HIGH_HZ.min(fs / 2.0)),
            FdtBands::Edges(e) => e.windows(2).map(|w| Band::new(w[0], w[1])).collect(),
        }
    }
}

fn metric_ser<S: Serializer>(m: &Option<SfsMetric>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match m {
        Some(m) => s.serialize_str(&m.to_string()),
        None => s.serialize_none(),
    }
}

fn metric_de<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<SfsMetric>, D::Error> {
    Option::<String>::deserialize(d)?
        .map(|s| s.parse().map_err(serde::de::Error::custom))
        .transpose()
}

/// Everything a run depends on. Serialized as the `config.json` provenance file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset_root: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub feature_set: FeatureKind,
    pub td_stat: TdStat,
    pub td_threshold: f64,
    pub fdt_bands: FdtBands,
    pub ar_order: usize,
    pub window_ms: f64,
    pub step_ms: f64,
    pub channels: ChannelSet,
    pub lambda: f64,
    pub scenarios: Vec<Scenario>,
    pub ranks: Vec<usize>,
    pub normal_pool: NormalPool,
    pub unit: ScoreUnit,
    #[serde(serialize_with = "metric_ser", deserialize_with = "metric_de")]
    pub metric: Option<SfsMetric>,
    pub criterion: Criterion,
}

impl Default for RunConfig {
    fn default() -> Self {
        let w = WindowSpec::default();
        Self {
            dataset_root: None,
            output_dir: None,
            feature_set: FeatureKind::Td,
            td_stat: TdStat::Mav,
            td_threshold: 0.0,
            fdt_bands: FdtBands::default(),
            ar_order: 6,
            window_ms: w.window_len_ms,
            step_ms: w.step_ms,
            channels: ChannelSet::All,
            lambda: DEFAULT_LAMBDA,
            scenarios: Scenario::ALL.to_vec(),
            ranks: vec![1, 5],
            normal_pool: NormalPool::default(),
            unit: ScoreUnit::default(),
            metric: None,
            criterion: Criterion::default(),
        }
    }
}

impl RunConfig {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::InvalidSpec(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    /// Validates every setting against the dataset and builds the evaluation
    /// config.
    pub fn eval_config(&self, meta: &DatasetMeta) -> Result<EvalConfig> {
        let fs = meta.sampling_rate_hz;
        let window_spec = WindowSpec {
            window_len_ms: self.window_ms,
            step_ms: self.step_ms,
        };
        let (w, _) = window_spec.in_samples(fs)?;
        let feature_spec = FeatureSpec {
            kind: self.feature_set,
            td_stat: self.td_stat,
            td_threshold: self.td_threshold,
            fdt_bands: self.fdt_bands.resolve(fs),
            ar_order: self.ar_order,
            ..FeatureSpec::new(self.feature_set)
        };
        feature_spec.validate(fs, w)?;
        let channels = match &self.channels {
            ChannelSet::All => None,
            ChannelSet::List(v) => {
                check_channel_set(v, meta.channel_count)?;
                Some(v.clone())
            }
        };
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "lambda must be finite and >= 0, got {}",
                self.lambda
            )));
        }
        if let Some(&k) = self.ranks.iter().find(|&&k| k == 0) {
            return Err(Error::RankOutOfRange {
                k,
                users: meta.participant_ids.len(),
            });
        }
        Ok(EvalConfig {
            feature_spec,
            window_spec,
            channels,
            lambda: self.lambda,
            scenarios: self.scenarios.clone(),
            ranks: self.ranks.clone(),
            normal_pool: self.normal_pool,
            unit: self.unit,
        })
    }
}

impl fmt::Display for ChannelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelSet::All => f.write_str("all"),
            ChannelSet::List(v) => {
                let s: Vec<String> = v.iter().map(usize::to_string).collect();
                f.write_str(&s.join(","))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_set_forms() {
        assert_eq!("all".parse::<ChannelSet>().unwrap(), ChannelSet::All);
        assert_eq!(
            "0, 2,3".parse::<ChannelSet>().unwrap(),
            ChannelSet::List(vec![0, 2, 3])
        );
        assert!("0,x".parse::<ChannelSet>().is_err());
        let j: ChannelSet = serde_json::from_str("\"all\"").unwrap();
        assert_eq!(j, ChannelSet::All);
        let j: ChannelSet = serde_json::from_str("[1,4]").unwrap();
        assert_eq!(j.to_string(), "1,4");
    }

    #[test]
    fn band_forms() {
        assert_eq!("6".parse::<FdtBands>().unwrap(), FdtBands::Count(6));
        let e: FdtBands = "20,100,300".parse().unwrap();
        let bands = e.resolve(2048.0);
        assert_eq!(bands, vec![Band::new(20.0, 100.0), Band::new(100.0, 300.0)]);
        assert!("20"
            .parse::<FdtBands>()
            .map(|b| b == FdtBands::Count(20))
            .unwrap());
        assert!("20.5".parse::<FdtBands>().is_err());
        // count shorthand stays below Nyquist
        let low_rate = FdtBands::Count(4).resolve(400.0);
        assert_eq!(low_rate.last().unwrap().high_hz, 200.0);
    }

    #[test]
    fn round_trip() {
        let cfg = RunConfig {
            dataset_root: Some("data".into()),
            channels: ChannelSet::List(vec![0, 1, 2, 3]),
            metric: Some(SfsMetric::Eer(Scenario::SelfTest)),
            fdt_bands: FdtBands::Edges(vec![10.0, 50.0, 90.0]),
            ..RunConfig::default()
        };
        let back: RunConfig = serde_json::from_str(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        let partial: RunConfig = serde_json::from_str(r#"{"feature_set":"td+fdt"}"#).unwrap();
        assert_eq!(partial.feature_set, FeatureKind::TdFdt);
        assert_eq!(partial.window_ms, 200.0);
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus":1}"#).is_err());
    }

    #[test]
    fn dim_for_td_fdt_on_four_channels() {
        let meta = DatasetMeta {
            sampling_rate_hz: 2048.0,
            participant_ids: vec!["P01".into(), "P02".into()],
            gesture_ids: vec!["G01".into()],
            trials_per_gesture: 2,
            channel_count: 8,
            signal_units: "au".into(),
        };
        let cfg = RunConfig {
            feature_set: FeatureKind::TdFdt,
            channels: ChannelSet::List(vec![0, 1, 2, 3]),
            ..RunConfig::default()
        };
        let e = cfg.eval_config(&meta).unwrap();
        assert_eq!(e.feature_spec.dim(4), 40);
        let bad = RunConfig {
            channels: ChannelSet::List(vec![9]),
            ..RunConfig::default()
        };
        assert!(bad.eval_config(&meta).is_err());
    }
}
