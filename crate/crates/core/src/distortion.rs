//! Distortion measures and log-domain reductions.
//!
//! Every membership and weight formula in the crate is evaluated through
//! [`log_kernel`]: the log of the unnormalized membership kernel
//! `exp(-d/t1)` (squared kind) or `d^(-1/t1)` (log kind). Normalizers are
//! then log-sum-exps over rows or columns of that matrix, so nothing is
//! exponentiated until the very end.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::types::{Centers, Dataset, DistortionKind};

/// Lower clamp applied to squared distances before taking logarithms.
pub const LOG_DISTANCE_FLOOR: f64 = 1e-12;

/// `N × C` squared distances between data points and centers.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionMatrix(Array2<f64>);

impl DistortionMatrix {
    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn n_points(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_clusters(&self) -> usize {
        self.0.ncols()
    }

    /// Builds from raw squared distances (tests and callers holding precomputed values).
    pub fn from_raw(d: Array2<f64>) -> Result<Self> {
        if let Some(((row, col), _)) = d
            .indexed_iter()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::NonFinite { row, col });
        }
        Ok(Self(d))
    }

    pub(crate) fn new_unchecked(d: Array2<f64>) -> Self {
        Self(d)
    }

    /// The distortion the model actually charges: `d` or `ln max(d, ε)`.
    pub fn effective(&self, kind: DistortionKind) -> Array2<f64> {
        match kind {
            DistortionKind::SquaredEuclidean => self.0.clone(),
            DistortionKind::LogSquaredEuclidean => self.0.mapv(clamped_ln),
        }
    }
}

pub(crate) fn clamped_ln(d: f64) -> f64 {
    d.max(LOG_DISTANCE_FLOOR).ln()
}

pub fn squared_distance(x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    Ok(x.iter().zip(y.iter()).map(|(a, b)| (a - b) * (a - b)).sum())
}

pub fn distortion_matrix(dataset: &Dataset, centers: &Centers) -> Result<DistortionMatrix> {
    if dataset.dim() != centers.dim() {
        return Err(Error::DimensionMismatch {
            expected: dataset.dim(),
            got: centers.dim(),
        });
    }
    Ok(DistortionMatrix(squared_distances(
        dataset.points(),
        centers.view(),
    )))
}

pub(crate) fn squared_distances(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut d = Array2::zeros((x.nrows(), y.nrows()));
    for (i, xi) in x.axis_iter(Axis(0)).enumerate() {
        for (j, yj) in y.axis_iter(Axis(0)).enumerate() {
            d[[i, j]] = xi
                .iter()
                .zip(yj.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
        }
    }
    d
}

/// `ln Σ exp(v_k)` with max-shift. An empty slice or all-`−∞` input yields `−∞`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    log_sum_exp_iter(values.iter().copied())
}

pub(crate) fn log_sum_exp_iter<I>(values: I) -> f64
where
    I: Iterator<Item = f64> + Clone,
{
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_infinite() || max.is_nan() {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Soft-min cost `−t1 ln Σ_j exp(−d_j/t1)` of representing one point.
pub fn certainty_equivalence(distortion_row: &[f64], t1: f64) -> f64 {
    -t1 * log_sum_exp_iter(distortion_row.iter().map(|d| -d / t1))
}

/// Log of the unnormalized membership kernel, `−e_ij / t1`, where `e` is
/// the effective distortion of `kind`.
pub fn log_kernel(dm: &DistortionMatrix, t1: f64, kind: DistortionKind) -> Array2<f64> {
    match kind {
        DistortionKind::SquaredEuclidean => dm.0.mapv(|d| -d / t1),
        DistortionKind::LogSquaredEuclidean => dm.0.mapv(|d| -clamped_ln(d) / t1),
    }
}

/// Row-wise log-sum-exp of a matrix.
pub(crate) fn row_log_sum_exp(m: ArrayView2<'_, f64>) -> Vec<f64> {
    m.axis_iter(Axis(0))
        .map(|row| log_sum_exp_iter(row.iter().copied()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn squared_distance_examples() {
        let x = array![1.0, 2.0];
        assert_eq!(squared_distance(x.view(), x.view()).unwrap(), 0.0);
        assert_eq!(
            squared_distance(array![0.0, 0.0].view(), array![3.0, 4.0].view()).unwrap(),
            25.0
        );
        assert_eq!(
            squared_distance(array![0.0].view(), array![1.0].view()).unwrap(),
            1.0
        );
        assert!(squared_distance(array![0.0].view(), array![1.0, 2.0].view()).is_err());
    }

    #[test]
    fn distortion_matrix_examples() {
        let one = Dataset::new(array![[2.0, 3.0]]).unwrap();
        let c = Centers::new(array![[2.0, 3.0]]).unwrap();
        assert_eq!(distortion_matrix(&one, &c).unwrap().view(), array![[0.0]]);

        let data = Dataset::new(array![[0.0], [1.0]]).unwrap();
        let c = Centers::new(array![[0.0], [1.0]]).unwrap();
        assert_eq!(
            distortion_matrix(&data, &c).unwrap().view(),
            array![[0.0, 1.0], [1.0, 0.0]]
        );

        let c3 = Centers::new(array![[0.0, 1.0]]).unwrap();
        assert!(distortion_matrix(&data, &c3).is_err());
    }

    #[test]
    fn distortion_matrix_matches_brute_force() {
        let mut rng = crate::Rng::seed_from_u64(17);
        let data = Dataset::new(Array2::from_shape_fn((13, 3), |_| rng.standard_normal())).unwrap();
        let c = Centers::new(Array2::from_shape_fn((4, 3), |_| rng.standard_normal())).unwrap();
        let dm = distortion_matrix(&data, &c).unwrap();
        for i in 0..13 {
            for j in 0..4 {
                let mut s = 0.0;
                for k in 0..3 {
                    let diff = data.points()[[i, k]] - c.view()[[j, k]];
                    s += diff * diff;
                }
                assert_eq!(dm.view()[[i, j]], s);
            }
        }
    }

    #[test]
    fn log_sum_exp_examples() {
        assert!((log_sum_exp(&[0.0, 0.0]) - 2f64.ln()).abs() < 1e-15);
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[-3.5]), -3.5);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY, 2.0]), 2.0);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }

    #[test]
    fn certainty_equivalence_examples() {
        assert!((certainty_equivalence(&[5.0], 0.3) - 5.0).abs() < 1e-12);
        assert!((certainty_equivalence(&[0.0, 0.0], 1.0) + 2f64.ln()).abs() < 1e-15);
        assert!((certainty_equivalence(&[1.0, 4.0], 1e-3) - 1.0).abs() < 1e-2);
    }

    proptest! {
        #[test]
        fn lse_shift_identity(v in prop::collection::vec(-50.0f64..50.0, 1..20), c in -1e3f64..1e3) {
            let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
            let lhs = log_sum_exp(&shifted);
            let rhs = log_sum_exp(&v) + c;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }

        #[test]
        fn certainty_equivalence_bounds(d in prop::collection::vec(0.0f64..20.0, 1..10), t1 in 0.05f64..5.0) {
            let ce = certainty_equivalence(&d, t1);
            let min = d.iter().copied().fold(f64::INFINITY, f64::min);
            let c = d.len() as f64;
            prop_assert!(ce <= min + 1e-12);
            prop_assert!(ce >= min - t1 * c.ln() - 1e-12);
        }

        #[test]
        fn distortion_translation_invariant(
            pts in prop::collection::vec(-10.0f64..10.0, 6),
            cs in prop::collection::vec(-10.0f64..10.0, 4),
            shift in prop::collection::vec(-100.0f64..100.0, 2),
        ) {
            let data = Dataset::new(Array2::from_shape_vec((3, 2), pts.clone()).unwrap()).unwrap();
            let c = Centers::new(Array2::from_shape_vec((2, 2), cs.clone()).unwrap()).unwrap();
            let moved_pts: Vec<f64> = pts.iter().enumerate().map(|(k, v)| v + shift[k % 2]).collect();
            let moved_cs: Vec<f64> = cs.iter().enumerate().map(|(k, v)| v + shift[k % 2]).collect();
            let data2 = Dataset::new(Array2::from_shape_vec((3, 2), moved_pts).unwrap()).unwrap();
            let c2 = Centers::new(Array2::from_shape_vec((2, 2), moved_cs).unwrap()).unwrap();
            let a = distortion_matrix(&data, &c).unwrap();
            let b = distortion_matrix(&data2, &c2).unwrap();
            for (x, y) in a.view().iter().zip(b.view().iter()) {
                prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
            }
        }
    }
}
