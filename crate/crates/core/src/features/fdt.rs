//! Frequency-division features: log of summed one-sided DFT magnitudes per
//! frequency band.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-open frequency interval `[low_hz, high_hz)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub low_hz: f64,
    pub high_hz: f64,
}

impl Band {
    pub fn new(low_hz: f64, high_hz: f64) -> Self {
        Self { low_hz, high_hz }
    }
}

/// `count` equal-width bands covering `[low_hz, high_hz)`.
pub fn equal_bands(count: usize, low_hz: f64, high_hz: f64) -> Vec<Band> {
    let width = (high_hz - low_hz) / count as f64;
    (0..count)
        .map(|i| {
            let hi = if i + 1 == count {
                high_hz
            } else {
                low_hz + width * (i + 1) as f64
            };
            Band::new(low_hz + width * i as f64, hi)
        })
        .collect()
}

/// Bands must be non-empty, ascending, non-overlapping and inside `(0, fs/2]`.
pub fn check_bands(bands: &[Band], fs: f64) -> Result<()> {
    if bands.is_empty() {
        return Err(Error::InvalidSpec(
            "at least one FDT band is required".into(),
        ));
    }
    let nyquist = fs / 2.0;
    for b in bands {
        if !(b.low_hz > 0.0 && b.low_hz < b.high_hz && b.high_hz <= nyquist) {
            return Err(Error::BandOutOfRange {
                low: b.low_hz,
                high: b.high_hz,
                nyquist,
            });
        }
    }
    if bands.windows(2).any(|w| w[1].low_hz < w[0].high_hz) {
        return Err(Error::InvalidSpec(
            "FDT bands must be ascending and non-overlapping".into(),
        ));
    }
    Ok(())
}

/// A reusable transform for a fixed window length, band layout and rate.
pub struct FdtPlan {
    fft: Arc<dyn Fft<f64>>,
    len: usize,
    /// Inclusive-exclusive DFT bin range per band.
    bins: Vec<(usize, usize)>,
    floor: f64,
}

impl FdtPlan {
    pub fn new(len: usize, bands: &[Band], floor: f64, fs: f64) -> Result<Self> {
        check_bands(bands, fs)?;
        if !(floor > 0.0) {
            return Err(Error::InvalidSpec("FDT floor must be positive".into()));
        }
        if len == 0 {
            return Err(Error::InvalidSpec("FDT window must be non-empty".into()));
        }
        let resolution = fs / len as f64;
        let last_bin = len / 2;
        let bins = bands
            .iter()
            .map(|b| {
                let in_band = |k: usize| {
                    let f = k as f64 * resolution;
                    f >= b.low_hz && f < b.high_hz
                };
                let start = (0..=last_bin).find(|&k| in_band(k)).unwrap_or(last_bin + 1);
                let end = (start..=last_bin)
                    .find(|&k| !in_band(k))
                    .unwrap_or(last_bin + 1);
                (start, end)
            })
            .collect();
        Ok(Self {
            fft: FftPlanner::new().plan_fft_forward(len),
            len,
            bins,
            floor,
        })
    }

    pub fn band_count(&self) -> usize {
        self.bins.len()
    }

    pub fn compute(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.bins.len());
        self.compute_into(x, &mut out);
        out
    }

    pub fn compute_into(&self, x: &[f64], out: &mut Vec<f64>) {
        assert_eq!(x.len(), self.len, "window length does not match the plan");
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft.process(&mut buf);
        for &(start, end) in &self.bins {
            let sum: f64 = buf[start..end].iter().map(|z| z.norm()).sum();
            out.push((self.floor + sum).ln());
        }
    }
}

/// One-shot convenience around [`FdtPlan`].
pub fn fdt(x: &[f64], bands: &[Band], floor: f64, fs: f64) -> Result<Vec<f64>> {
    Ok(FdtPlan::new(x.len(), bands, floor, fs)?.compute(x))
}
