//! Hudgins time-domain statistics over one single-channel window.

pub fn mav(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum::<f64>() / x.len() as f64
}

pub fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// Interior points whose slope product `(x_i − x_{i−1})(x_i − x_{i+1})`
/// reaches `th`.
pub fn ssc(x: &[f64], th: f64) -> usize {
    x.windows(3)
        .filter(|w| (w[1] - w[0]) * (w[1] - w[2]) >= th)
        .count()
}

pub fn wl(x: &[f64]) -> f64 {
    x.windows(2).map(|w| (w[0] - w[1]).abs()).sum()
}

/// Sign changes between consecutive samples whose amplitude step reaches `th`.
pub fn zc(x: &[f64], th: f64) -> usize {
    x.windows(2)
        .filter(|w| w[0] * w[1] < 0.0 && (w[0] - w[1]).abs() >= th)
        .count()
}
