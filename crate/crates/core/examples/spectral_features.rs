//! FDT band log-magnitudes and Burg AR coefficients on a pure tone and on an
//! AR(2) process.

use semg_auth::features::ar::{ar_coeffs, is_stable};
use semg_auth::features::{equal_bands, fdt, FeatureKind, FeatureSpec};

fn main() -> semg_auth::Result<()> {
    let fs = 2048.0;
    let n = 410;
    let tone: Vec<f64> = (0..n)
        .map(|i| (2.0 * std::f64::consts::PI * 120.0 * i as f64 / fs).sin())
        .collect();
    let bands = equal_bands(6, 10.0, 500.0);
    let f = fdt(&tone, &bands, 1e-12, fs)?;
    for (b, v) in bands.iter().zip(&f) {
        println!("{:>6.1}-{:<6.1} Hz  {v:8.3}", b.low_hz, b.high_hz);
    }

    // x_t = 1.2 x_{t-1} - 0.5 x_{t-2} + e_t, driven by a fixed pseudo-random sequence
    let mut x = vec![0.0f64; 4000];
    let mut state = 12345u64;
    for t in 2..x.len() {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        let e = (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
        x[t] = 1.2 * x[t - 1] - 0.5 * x[t - 2] + e;
    }
    let est = ar_coeffs(&x, 6)?;
    println!("AR(6) fit of an AR(2) process: {:.3?}", est.coeffs);
    println!("stable: {}", is_stable(&est.coeffs));

    for kind in FeatureKind::ALL {
        println!(
            "{:<7} {:>3} features per channel",
            kind.name(),
            FeatureSpec::new(kind).per_channel_dim()
        );
    }
    Ok(())
}
