//! Autoregressive coefficients by the Burg recursion.
//!
//! Coefficients follow the predictor convention `x_i = Σ a_p x_{i−p} + w_i`,
//! i.e. `a_p` is the negated coefficient of the prediction-error filter
//! `1 + Σ c_p z^{-p}`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ArEstimate {
    pub coeffs: Vec<f64>,
    /// Set when the window is constant and no predictor can be estimated;
    /// `coeffs` is all zeros then.
    pub degenerate: bool,
}

/// Burg estimate of order `order`. Every reflection coefficient satisfies
/// `|k| ≤ 1`, so the predictor is stable.
pub fn ar_coeffs(x: &[f64], order: usize) -> Result<ArEstimate> {
    if order == 0 || x.len() <= 2 * order {
        return Err(Error::TooFew {
            what: "samples (more than twice the AR order)",
            needed: 2 * order + 1,
            found: x.len(),
        });
    }
    if x.iter().all(|&v| v == x[0]) {
        return Ok(ArEstimate {
            coeffs: vec![0.0; order],
            degenerate: true,
        });
    }

    let n = x.len();
    let mut fwd = x.to_vec();
    let mut bwd = x.to_vec();
    let mut c = vec![0.0; order];
    let mut prev = vec![0.0; order];
    for m in 1..=order {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in m..n {
            num += fwd[i] * bwd[i - 1];
            den += fwd[i] * fwd[i] + bwd[i - 1] * bwd[i - 1];
        }
        // den == 0 means the residual is already exactly zero
        let k = if den > 0.0 { -2.0 * num / den } else { 0.0 };

        prev[..m - 1].copy_from_slice(&c[..m - 1]);
        for i in 1..m {
            c[i - 1] = prev[i - 1] + k * prev[m - i - 1];
        }
        c[m - 1] = k;

        for i in (m..n).rev() {
            let f = fwd[i];
            fwd[i] = f + k * bwd[i - 1];
            bwd[i] = bwd[i - 1] + k * f;
        }
    }
    Ok(ArEstimate {
        coeffs: c.into_iter().map(|v| -v).collect(),
        degenerate: false,
    })
}

/// Step-up recursion: reflection coefficients to predictor coefficients.
pub fn reflection_to_ar(k: &[f64]) -> Vec<f64> {
    let mut c: Vec<f64> = Vec::with_capacity(k.len());
    for (m, &km) in k.iter().enumerate() {
        let prev = c.clone();
        for i in 0..m {
            c[i] = prev[i] + km * prev[m - 1 - i];
        }
        c.push(km);
    }
    c.into_iter().map(|v| -v).collect()
}

/// Step-down (Schur–Cohn) test: all reflection coefficients strictly inside
/// the unit interval.
pub fn is_stable(ar: &[f64]) -> bool {
    let mut c: Vec<f64> = ar.iter().map(|v| -v).collect();
    while let Some(&k) = c.last() {
        if !(k.abs() < 1.0) {
            return false;
        }
        let m = c.len();
        let scale = 1.0 - k * k;
        let stepped: Vec<f64> = (0..m - 1)
            .map(|i| (c[i] - k * c[m - 2 - i]) / scale)
            .collect();
        c = stepped;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::synth::ar_process;
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Largest root modulus of `z^P − a_1 z^{P−1} − … − a_P` via companion eigenvalues.
    fn max_root(ar: &[f64]) -> f64 {
        let p = ar.len();
        let mut m = DMatrix::<f64>::zeros(p, p);
        for (j, a) in ar.iter().enumerate() {
            m[(0, j)] = *a;
        }
        for i in 1..p {
            m[(i, i - 1)] = 1.0;
        }
        m.complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn recovers_ar1() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = ar_process(&[0.5], 1.0, 100_000, &mut rng);
        let est = ar_coeffs(&x, 6).unwrap();
        assert!(!est.degenerate);
        assert!((est.coeffs[0] - 0.5).abs() < 0.05, "{:?}", est.coeffs);
        assert!(est.coeffs[1..].iter().all(|a| a.abs() <= 0.05));
    }

    #[test]
    fn white_noise_is_flat() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = ar_process(&[], 1.0, 100_000, &mut rng);
        let est = ar_coeffs(&x, 6).unwrap();
        assert!(
            est.coeffs.iter().all(|a| a.abs() <= 0.05),
            "{:?}",
            est.coeffs
        );
    }

    #[test]
    fn degenerate_windows() {
        let est = ar_coeffs(&[0.0; 50], 6).unwrap();
        assert!(est.degenerate);
        assert_eq!(est.coeffs, vec![0.0; 6]);
        assert!(ar_coeffs(&[3.0; 50], 6).unwrap().degenerate);
        assert!(ar_coeffs(&[1.0; 12], 6).is_err());
    }

    #[test]
    fn estimates_are_stable_on_short_windows() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let x = ar_process(&[1.6, -0.9], 1.0, 40, &mut rng);
            let est = ar_coeffs(&x, 6).unwrap();
            assert!(max_root(&est.coeffs) < 1.0 + 1e-9);
            assert!(is_stable(&est.coeffs));
        }
    }

    #[test]
    fn step_up_matches_roots() {
        let ar = reflection_to_ar(&[0.5, -0.3]);
        // c = [0.5 + (-0.3)(0.5), -0.3] = [0.35, -0.3]
        assert!((ar[0] + 0.35).abs() < 1e-15 && (ar[1] - 0.3).abs() < 1e-15);
        assert!(is_stable(&ar));
        assert!(max_root(&ar) < 1.0);
        assert!(!is_stable(&[1.5]));
        assert!(!is_stable(&[0.5, 0.6]));
        assert!(max_root(&[0.5, 0.6]) > 1.0);
    }
}
