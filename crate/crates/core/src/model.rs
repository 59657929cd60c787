//! Per-(gesture, user) Gaussian class models and Mahalanobis scoring.

use std::cmp::Ordering;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Diagonal load used instead of the trace-scaled one when the sample
/// covariance has zero trace.
pub const ABSOLUTE_FLOOR: f64 = 1e-12;

/// Default relative regularization strength.
pub const DEFAULT_LAMBDA: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassModel {
    pub gesture: String,
    pub user: String,
    pub centroid: DVector<f64>,
    /// Unbiased sample covariance.
    pub covariance: DMatrix<f64>,
    /// `covariance + λ·(trace/D)·I`.
    pub regularized: DMatrix<f64>,
    pub precision: DMatrix<f64>,
    pub training_window_count: usize,
    pub regularization_lambda: f64,
    /// Inverse Cholesky factor `L⁻¹` of `regularized`, packed lower triangle
    /// row by row.
    whitening: Vec<f64>,
}

impl ClassModel {
    pub fn dim(&self) -> usize {
        self.centroid.len()
    }

    fn from_parts(
        gesture: &str,
        user: &str,
        centroid: DVector<f64>,
        covariance: DMatrix<f64>,
        regularized: DMatrix<f64>,
        lambda: f64,
        count: usize,
    ) -> Result<Self> {
        let singular = || Error::SingularCovariance {
            gesture: gesture.to_string(),
            user: user.to_string(),
        };
        let d = centroid.len();
        let chol = regularized.clone().cholesky().ok_or_else(singular)?;
        let l = chol.l();
        let diag: Vec<f64> = (0..d).map(|i| l[(i, i)]).collect();
        let max = diag.iter().cloned().fold(0.0, f64::max);
        let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(min > 0.0) || (min / max).powi(2) < f64::EPSILON {
            return Err(singular());
        }
        let inv_l = l
            .solve_lower_triangular(&DMatrix::identity(d, d))
            .ok_or_else(singular)?;
        let mut precision = inv_l.tr_mul(&inv_l);
        symmetrize(&mut precision);
        let mut whitening = Vec::with_capacity(d * (d + 1) / 2);
        for i in 0..d {
            for j in 0..=i {
                whitening.push(inv_l[(i, j)]);
            }
        }
        Ok(Self {
            gesture: gesture.to_string(),
            user: user.to_string(),
            centroid,
            covariance,
            regularized,
            precision,
            training_window_count: count,
            regularization_lambda: lambda,
            whitening,
        })
    }

    /// Mahalanobis distance from `p` to the centroid.
    pub fn score(&self, p: &[f64]) -> Result<f64> {
        if p.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: p.len(),
            });
        }
        Ok(self.score_unchecked(p))
    }

    pub(crate) fn score_unchecked(&self, p: &[f64]) -> f64 {
        let d = self.dim();
        let diff: Vec<f64> = p
            .iter()
            .zip(self.centroid.iter())
            .map(|(a, b)| a - b)
            .collect();
        let mut acc = 0.0;
        let mut k = 0;
        for i in 0..d {
            let row = &self.whitening[k..k + i + 1];
            let y: f64 = row.iter().zip(&diff[..=i]).map(|(w, x)| w * x).sum();
            acc += y * y;
            k += i + 1;
        }
        acc.sqrt()
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let d = m.nrows();
    for i in 0..d {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Fits centroid and unbiased covariance, then regularizes as
/// `Σ + λ·(trace(Σ)/D)·I` (or `Σ + 1e-12·I` when the trace is zero and
/// `λ > 0`).
///
/// Rows are summed in a canonical (sorted) order, so the result does not
/// depend on the order rows are supplied in.
pub fn fit_class_model(
    gesture: &str,
    user: &str,
    rows: &[&[f64]],
    lambda: f64,
) -> Result<ClassModel> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidSpec(format!(
            "lambda must be >= 0, got {lambda}"
        )));
    }
    let n = rows.len();
    if n < 2 {
        return Err(Error::TooFew {
            what: "training windows",
            needed: 2,
            found: n,
        });
    }
    let d = rows[0].len();
    if let Some(bad) = rows.iter().find(|r| r.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: bad.len(),
        });
    }
    let mut sorted: Vec<&[f64]> = rows.to_vec();
    sorted.sort_by(|a, b| lexicographic(a, b));

    let mut mean = DVector::<f64>::zeros(d);
    for r in &sorted {
        for (m, v) in mean.iter_mut().zip(r.iter()) {
            *m += v;
        }
    }
    mean /= n as f64;

    let centered = DMatrix::from_fn(n, d, |i, j| sorted[i][j] - mean[j]);
    let mut cov = centered.tr_mul(&centered) / (n as f64 - 1.0);
    symmetrize(&mut cov);

    let mut reg = cov.clone();
    if lambda > 0.0 {
        let load = match cov.trace() / d as f64 {
            t if t > 0.0 => lambda * t,
            _ => ABSOLUTE_FLOOR,
        };
        for i in 0..d {
            reg[(i, i)] += load;
        }
    }
    ClassModel::from_parts(gesture, user, mean, cov, reg, lambda, n)
}

/// Fits on all rows of the given matrices; the class labels come from the
/// first matrix's provenance.
pub fn fit_from_matrices(training: &[&FeatureMatrix], lambda: f64) -> Result<ClassModel> {
    let first = training.first().ok_or(Error::TooFew {
        what: "training matrices",
        needed: 1,
        found: 0,
    })?;
    let rows: Vec<&[f64]> = training.iter().flat_map(|m| m.iter_rows()).collect();
    fit_class_model(
        &first.provenance.gesture,
        &first.provenance.participant,
        &rows,
        lambda,
    )
}

pub fn mahalanobis_score(model: &ClassModel, p: &[f64]) -> Result<f64> {
    model.score(p)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LooSchedule {
    pub folds: Vec<Fold>,
}

/// Leave-one-trial-out folds ordered by test index.
pub fn loo_schedule(trial_count: usize) -> Result<LooSchedule> {
    if trial_count < 2 {
        return Err(Error::TooFew {
            what: "trials for leave-one-out",
            needed: 2,
            found: trial_count,
        });
    }
    let folds = (0..trial_count)
        .map(|test| Fold {
            train: (0..trial_count).filter(|&t| t != test).collect(),
            test,
        })
        .collect();
    Ok(LooSchedule { folds })
}

const MAGIC: &[u8; 8] = b"SEMGMDL1";

/// Binary model file: magic, length-prefixed gesture and user labels, then
/// little-endian f64 values `D, μ, Σ, Σ_reg, λ, count`.
pub fn encode_model(model: &ClassModel) -> Vec<u8> {
    let d = model.dim();
    let mut out = Vec::with_capacity(64 + 8 * (3 + d + 2 * d * d));
    out.extend_from_slice(MAGIC);
    for label in [&model.gesture, &model.user] {
        out.extend_from_slice(&(label.len() as u32).to_le_bytes());
        out.extend_from_slice(label.as_bytes());
    }
    let mut push = |v: f64| out.extend_from_slice(&v.to_le_bytes());
    push(d as f64);
    model.centroid.iter().for_each(|&v| push(v));
    for m in [&model.covariance, &model.regularized] {
        for i in 0..d {
            for j in 0..d {
                push(m[(i, j)]);
            }
        }
    }
    push(model.regularization_lambda);
    push(model.training_window_count as f64);
    out
}

pub fn decode_model(bytes: &[u8]) -> Result<ClassModel> {
    let corrupt = |why: &str| Error::CorruptTrial {
        path: PathBuf::from("<model>"),
        reason: why.to_string(),
    };
    let mut rest = bytes
        .strip_prefix(MAGIC.as_slice())
        .ok_or_else(|| corrupt("bad magic"))?;
    let mut labels = Vec::new();
    for _ in 0..2 {
        if rest.len() < 4 {
            return Err(corrupt("truncated header"));
        }
        let len = u32::from_le_bytes(rest[..4].try_into().unwrap()) as usize;
        rest = &rest[4..];
        if rest.len() < len {
            return Err(corrupt("truncated label"));
        }
        labels.push(
            String::from_utf8(rest[..len].to_vec()).map_err(|_| corrupt("label is not UTF-8"))?,
        );
        rest = &rest[len..];
    }
    if rest.len() % 8 != 0 {
        return Err(corrupt("payload is not a whole number of f64 values"));
    }
    let values: Vec<f64> = rest
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect();
    let d = *values.first().ok_or_else(|| corrupt("empty payload"))? as usize;
    if values.len() != 3 + d + 2 * d * d {
        return Err(corrupt("payload length does not match dimension"));
    }
    let centroid = DVector::from_column_slice(&values[1..1 + d]);
    let cov_at = 1 + d;
    let reg_at = cov_at + d * d;
    let covariance = DMatrix::from_row_slice(d, d, &values[cov_at..reg_at]);
    let regularized = DMatrix::from_row_slice(d, d, &values[reg_at..reg_at + d * d]);
    let lambda = values[reg_at + d * d];
    let count = values[reg_at + d * d + 1] as usize;
    ClassModel::from_parts(
        &labels[0],
        &labels[1],
        centroid,
        covariance,
        regularized,
        lambda,
        count,
    )
}

pub fn model_file_name(gesture: &str, user: &str) -> String {
    format!("{gesture}__{user}.model")
}

/// Writes one file per model into `dir`.
pub fn save_models<'a>(dir: &Path, models: impl IntoIterator<Item = &'a ClassModel>) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for m in models {
        let path = dir.join(model_file_name(&m.gesture, &m.user));
        fs::write(&path, encode_model(m)).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

pub fn load_model(path: &Path) -> Result<ClassModel> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes).map_err(|e| match e {
        Error::CorruptTrial { reason, .. } => Error::CorruptTrial {
            path: path.into(),
            reason,
        },
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fit(rows: &[Vec<f64>], lambda: f64) -> Result<ClassModel> {
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        fit_class_model("g", "u", &refs, lambda)
    }

    /// Model with a prescribed centroid and covariance, bypassing fitting.
    fn fixed(mu: &[f64], cov: DMatrix<f64>) -> ClassModel {
        ClassModel::from_parts(
            "g",
            "u",
            DVector::from_column_slice(mu),
            cov.clone(),
            cov,
            0.0,
            2,
        )
        .unwrap()
    }

    #[test]
    fn one_dimensional_hand_case() {
        let m = fit(&[vec![1.0], vec![3.0]], 0.0).unwrap();
        assert_eq!(m.centroid[0], 2.0);
        assert_eq!(m.covariance[(0, 0)], 2.0);
        assert_eq!(m.training_window_count, 2);
    }

    #[test]
    fn constant_rows_fall_back_to_absolute_floor() {
        let rows = vec![vec![1.0, -2.0, 0.5]; 10];
        let m = fit(&rows, 0.001).unwrap();
        assert_eq!(m.centroid.as_slice(), &[1.0, -2.0, 0.5]);
        assert_eq!(m.regularized, DMatrix::identity(3, 3) * ABSOLUTE_FLOOR);
        assert!(m.precision.iter().all(|v| v.is_finite()));
        assert!(matches!(
            fit(&rows, 0.0),
            Err(Error::SingularCovariance { .. })
        ));
    }

    #[test]
    fn analytic_scores() {
        let m = fixed(&[0.0, 0.0], DMatrix::identity(2, 2));
        assert_eq!(m.score(&[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(m.score(&[0.0, 0.0]).unwrap(), 0.0);
        let m = fixed(
            &[0.0, 0.0],
            DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0])),
        );
        assert_relative_eq!(
            m.score(&[2.0, 3.0]).unwrap(),
            10f64.sqrt(),
            max_relative = 1e-12
        );
        assert!(matches!(
            m.score(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 1
            })
        ));
    }

    #[test]
    fn precision_inverts_regularized_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..6).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let m = fit(&rows, DEFAULT_LAMBDA).unwrap();
        let prod = &m.precision * &m.regularized;
        let err = (prod - DMatrix::<f64>::identity(6, 6)).abs().max();
        assert!(err < 1e-6, "{err}");
        let t = m.covariance.trace() / 6.0;
        assert_relative_eq!(
            m.regularized[(0, 0)],
            m.covariance[(0, 0)] + DEFAULT_LAMBDA * t,
            max_relative = 1e-15
        );
        for p in &rows {
            let direct = {
                let d = DVector::from_column_slice(p) - &m.centroid;
                (d.transpose() * &m.precision * &d)[(0, 0)].sqrt()
            };
            assert_relative_eq!(m.score(p).unwrap(), direct, max_relative = 1e-9);
        }
    }

    #[test]
    fn training_order_is_irrelevant_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut rows: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..4).map(|_| rng.random_range(-10.0..10.0)).collect())
            .collect();
        let a = fit(&rows, 0.0).unwrap();
        rows.reverse();
        rows.swap(3, 17);
        let b = fit(&rows, 0.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn too_few_rows_and_bad_lambda() {
        assert!(matches!(fit(&[vec![1.0]], 0.0), Err(Error::TooFew { .. })));
        assert!(fit(&[vec![1.0], vec![2.0]], -1.0).is_err());
        assert!(fit(&[vec![1.0], vec![2.0, 3.0]], 0.0).is_err());
    }

    #[test]
    fn loo() {
        let s = loo_schedule(7).unwrap();
        assert_eq!(s.folds.len(), 7);
        assert_eq!(s.folds[0].test, 0);
        assert_eq!(s.folds[0].train, vec![1, 2, 3, 4, 5, 6]);
        assert_eq!(loo_schedule(2).unwrap().folds.len(), 2);
        assert!(loo_schedule(1).is_err());
        for n in 2..10 {
            let s = loo_schedule(n).unwrap();
            let tests: Vec<usize> = s.folds.iter().map(|f| f.test).collect();
            assert_eq!(tests, (0..n).collect::<Vec<_>>());
            assert!(s
                .folds
                .iter()
                .all(|f| f.train.len() == n - 1 && !f.train.contains(&f.test)));
        }
    }

    #[test]
    fn store_round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..5).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let m = fit_class_model("WF", "P07", &refs, 0.01).unwrap();
        let back = decode_model(&encode_model(&m)).unwrap();
        assert_eq!(back, m);

        let dir = tempfile::tempdir().unwrap();
        save_models(dir.path(), [&m]).unwrap();
        let loaded = load_model(&dir.path().join(model_file_name("WF", "P07"))).unwrap();
        assert_eq!(loaded, m);

        let mut bad = encode_model(&m);
        bad.truncate(bad.len() - 3);
        assert!(decode_model(&bad).is_err());
    }
}
