//! Sliding-window feature extraction.
//!
//! Each window yields one feature vector: a per-channel block concatenated in
//! channel order. The TD block is `[MAV|RMS, ZC, SSC, WL]`; combined kinds put
//! the TD block first and the spectral block second.

pub mod ar;
pub mod fdt;
pub mod td;

use std::io::Write;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::dataset::TrialRecording;
use crate::error::{Error, Result};
pub use ar::{ar_coeffs, ArEstimate};
pub use fdt::{equal_bands, fdt, Band, FdtPlan};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub window_len_ms: f64,
    pub step_ms: f64,
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self {
            window_len_ms: 200.0,
            step_ms: 50.0,
        }
    }
}

impl WindowSpec {
    /// `(window, step)` in samples, rounded half away from zero.
    pub fn in_samples(&self, fs: f64) -> Result<(usize, usize)> {
        if !(self.window_len_ms > 0.0 && self.step_ms > 0.0) {
            return Err(Error::InvalidSpec(
                "window and step must be positive".into(),
            ));
        }
        if self.window_len_ms < self.step_ms {
            return Err(Error::InvalidSpec(format!(
                "window {} ms is shorter than step {} ms",
                self.window_len_ms, self.step_ms
            )));
        }
        let w = (self.window_len_ms * fs / 1000.0).round();
        let s = (self.step_ms * fs / 1000.0).round();
        if w < 1.0 || s < 1.0 {
            return Err(Error::InvalidSpec(format!(
                "window/step round to zero samples at {fs} Hz"
            )));
        }
        Ok((w as usize, s as usize))
    }

    /// Sample ranges of every complete window over `n` samples.
    pub fn ranges(&self, n: usize, fs: f64) -> Result<Vec<Range<usize>>> {
        let (w, s) = self.in_samples(fs)?;
        if n < w {
            return Err(Error::RecordingTooShort {
                samples: n,
                window: w,
            });
        }
        let count = (n - w) / s + 1;
        Ok((0..count).map(|k| k * s..k * s + w).collect())
    }
}

/// A borrowed window over all channels of a recording.
#[derive(Debug, Clone)]
pub struct Window<'a> {
    rec: &'a TrialRecording,
    pub range: Range<usize>,
}

impl<'a> Window<'a> {
    pub fn channel(&self, c: usize) -> &'a [f64] {
        &self.rec.channel(c)[self.range.clone()]
    }

    pub fn channel_count(&self) -> usize {
        self.rec.channel_count()
    }

    pub fn len(&self) -> usize {
        self.range.len()
    }

    pub fn is_empty(&self) -> bool {
        self.range.is_empty()
    }
}

pub fn window_signal<'a>(rec: &'a TrialRecording, w: &WindowSpec) -> Result<Vec<Window<'a>>> {
    Ok(w.ranges(rec.n_samples(), rec.sampling_rate_hz)?
        .into_iter()
        .map(|range| Window { rec, range })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureKind {
    #[serde(rename = "td")]
    Td,
    #[serde(rename = "fdt")]
    Fdt,
    #[serde(rename = "ar")]
    Ar,
    #[serde(rename = "td+fdt")]
    TdFdt,
    #[serde(rename = "td+ar")]
    TdAr,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 5] = [
        FeatureKind::Td,
        FeatureKind::Fdt,
        FeatureKind::Ar,
        FeatureKind::TdFdt,
        FeatureKind::TdAr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Td => "td",
            FeatureKind::Fdt => "fdt",
            FeatureKind::Ar => "ar",
            FeatureKind::TdFdt => "td+fdt",
            FeatureKind::TdAr => "td+ar",
        }
    }

    fn has_td(self) -> bool {
        matches!(
            self,
            FeatureKind::Td | FeatureKind::TdFdt | FeatureKind::TdAr
        )
    }

    fn has_fdt(self) -> bool {
        matches!(self, FeatureKind::Fdt | FeatureKind::TdFdt)
    }

    fn has_ar(self) -> bool {
        matches!(self, FeatureKind::Ar | FeatureKind::TdAr)
    }
}

impl std::str::FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidSpec(format!("unknown feature set {s:?}")))
    }
}

/// Amplitude statistic in the first slot of the TD block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TdStat {
    #[default]
    Mav,
    Rms,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub kind: FeatureKind,
    pub td_stat: TdStat,
    /// Threshold for ZC and SSC, in signal units.
    pub td_threshold: f64,
    pub fdt_bands: Vec<Band>,
    pub fdt_floor: f64,
    pub ar_order: usize,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        Self::new(FeatureKind::Td)
    }
}

impl FeatureSpec {
    pub fn new(kind: FeatureKind) -> Self {
        Self {
            kind,
            td_stat: TdStat::Mav,
            td_threshold: 0.0,
            fdt_bands: equal_bands(6, 10.0, 500.0),
            fdt_floor: 1e-12,
            ar_order: 6,
        }
    }

    pub fn per_channel_dim(&self) -> usize {
        let mut d = 0;
        if self.kind.has_td() {
            d += 4;
        }
        if self.kind.has_fdt() {
            d += self.fdt_bands.len();
        }
        if self.kind.has_ar() {
            d += self.ar_order;
        }
        d
    }

    pub fn dim(&self, channels: usize) -> usize {
        self.per_channel_dim() * channels
    }

    /// Checks the parts of the spec this kind actually uses.
    pub fn validate(&self, fs: f64, window_samples: usize) -> Result<()> {
        if self.kind.has_td() && !(self.td_threshold >= 0.0) {
            return Err(Error::InvalidSpec("TD threshold must be >= 0".into()));
        }
        if self.kind.has_td() && window_samples < 3 {
            return Err(Error::InvalidSpec(
                "TD features need windows of >= 3 samples".into(),
            ));
        }
        if self.kind.has_fdt() {
            fdt::check_bands(&self.fdt_bands, fs)?;
            if !(self.fdt_floor > 0.0) {
                return Err(Error::InvalidSpec("FDT floor must be positive".into()));
            }
        }
        if self.kind.has_ar() && (self.ar_order == 0 || window_samples <= 2 * self.ar_order) {
            return Err(Error::InvalidSpec(format!(
                "AR order {} needs windows longer than {} samples, got {window_samples}",
                self.ar_order,
                2 * self.ar_order
            )));
        }
        Ok(())
    }
}

/// Where a feature matrix came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub participant: String,
    pub gesture: String,
    pub trial_index: usize,
    pub channels: Vec<usize>,
    pub feature_spec: FeatureSpec,
    pub window_spec: WindowSpec,
}

/// One row per window, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub provenance: Provenance,
    pub degenerate_ar_windows: usize,
    rows: usize,
    dim: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn from_rows(provenance: Provenance, dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: data.len(),
            });
        }
        Ok(Self {
            provenance,
            degenerate_ar_windows: 0,
            rows: data.len() / dim,
            dim,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    /// Keeps the channel blocks at the given positions (indices into
    /// `provenance.channels`). Equivalent to extracting from the
    /// channel-selected recording.
    pub fn select_channel_blocks(&self, positions: &[usize]) -> Result<Self> {
        let n_ch = self.provenance.channels.len();
        crate::dataset::check_channel_set(positions, n_ch)?;
        let block = self.dim / n_ch;
        let dim = block * positions.len();
        let mut data = Vec::with_capacity(self.rows * dim);
        for row in self.iter_rows() {
            for &p in positions {
                data.extend_from_slice(&row[p * block..(p + 1) * block]);
            }
        }
        let mut provenance = self.provenance.clone();
        provenance.channels = positions
            .iter()
            .map(|&p| self.provenance.channels[p])
            .collect();
        Ok(Self {
            provenance,
            degenerate_ar_windows: self.degenerate_ar_windows,
            rows: self.rows,
            dim,
            data,
        })
    }
}

/// Windows a recording and computes `spec`'s feature vector per window.
pub fn extract_features(
    rec: &TrialRecording,
    spec: &FeatureSpec,
    window: &WindowSpec,
) -> Result<FeatureMatrix> {
    let fs = rec.sampling_rate_hz;
    let windows = window_signal(rec, window)?;
    let w_len = windows[0].len();
    spec.validate(fs, w_len)?;
    let plan = if spec.kind.has_fdt() {
        Some(FdtPlan::new(w_len, &spec.fdt_bands, spec.fdt_floor, fs)?)
    } else {
        None
    };
    let dim = spec.dim(rec.channel_count());
    let mut data = Vec::with_capacity(windows.len() * dim);
    let mut degenerate = 0;
    for win in &windows {
        for c in 0..win.channel_count() {
            let x = win.channel(c);
            if spec.kind.has_td() {
                data.push(match spec.td_stat {
                    TdStat::Mav => td::mav(x),
                    TdStat::Rms => td::rms(x),
                });
                data.push(td::zc(x, spec.td_threshold) as f64);
                data.push(td::ssc(x, spec.td_threshold) as f64);
                data.push(td::wl(x));
            }
            if let Some(plan) = &plan {
                plan.compute_into(x, &mut data);
            }
            if spec.kind.has_ar() {
                let est = ar_coeffs(x, spec.ar_order)?;
                degenerate += usize::from(est.degenerate);
                data.extend(est.coeffs);
            }
        }
    }
    if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidSpec(format!(
            "non-finite feature in {}/{}/{} at window {}",
            rec.participant,
            rec.gesture,
            rec.trial_index,
            pos / dim
        )));
    }
    if degenerate > 0 {
        log::warn!(
            "{}/{}/{}: {degenerate} constant channel windows gave zero AR coefficients",
            rec.participant,
            rec.gesture,
            rec.trial_index
        );
    }
    let provenance = Provenance {
        participant: rec.participant.clone(),
        gesture: rec.gesture.clone(),
        trial_index: rec.trial_index,
        channels: rec.channels.clone(),
        feature_spec: spec.clone(),
        window_spec: *window,
    };
    let mut out = FeatureMatrix::from_rows(provenance, dim, data)?;
    out.degenerate_ar_windows = degenerate;
    Ok(out)
}

/// Writes matrices as CSV with header `participant,gesture,trial,window,f0..`.
/// All matrices must share one dimension.
pub fn write_features_csv<'a>(
    mut out: impl Write,
    matrices: impl IntoIterator<Item = &'a FeatureMatrix>,
) -> std::io::Result<()> {
    let mut header_dim = None;
    for m in matrices {
        if header_dim.is_none() {
            let cols: Vec<String> = (0..m.dim()).map(|i| format!("f{i}")).collect();
            writeln!(out, "participant,gesture,trial,window,{}", cols.join(","))?;
            header_dim = Some(m.dim());
        }
        if header_dim != Some(m.dim()) {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidInput,
                "feature matrices differ in dimension",
            ));
        }
        let p = &m.provenance;
        for (w, row) in m.iter_rows().enumerate() {
            write!(out, "{},{},{},{w}", p.participant, p.gesture, p.trial_index)?;
            for v in row {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}
