//! Boundary distances, within-cluster distances, Gaussian KL divergence and
//! weight diagnostics.

use nalgebra::{Cholesky, DMatrix, DVector};
use ndarray::{Array1, Axis};

use crate::error::{Error, Result};
use crate::types::{Centers, Dataset, ImportanceWeights, Membership};

/// Tolerance on `|Σ_ij − Σ_ji|` accepted as symmetric.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// How each point is attributed to a cluster.
#[derive(Debug, Clone, Copy)]
pub enum Assignment<'a> {
    /// Hard labels, as produced by k-means or hierarchical clustering.
    Labels(&'a [usize]),
    /// Soft memberships; a point goes to its highest-membership cluster.
    Membership(&'a Membership),
}

impl Assignment<'_> {
    fn resolve(&self, n: usize, c: usize) -> Result<Vec<usize>> {
        let labels = match self {
            Assignment::Labels(l) => l.to_vec(),
            Assignment::Membership(u) => {
                if u.n_clusters() != c {
                    return Err(Error::LengthMismatch {
                        left: c,
                        right: u.n_clusters(),
                    });
                }
                u.labels()
            }
        };
        if labels.len() != n {
            return Err(Error::LengthMismatch {
                left: n,
                right: labels.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= c) {
            return Err(Error::InvalidParameter(format!(
                "label {bad} out of range for {c} clusters"
            )));
        }
        Ok(labels)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryReport {
    pub m: usize,
    /// Boundary points, farthest from the centroid first.
    pub boundary_indices: Vec<usize>,
    /// Sum of squared distances from the boundary points to their assigned centers.
    pub value: f64,
}

pub fn dataset_centroid(dataset: &Dataset) -> Array1<f64> {
    dataset
        .points()
        .mean_axis(Axis(0))
        .expect("datasets are never empty")
}

fn sq(a: impl IntoIterator<Item = f64>, b: impl IntoIterator<Item = f64>) -> f64 {
    a.into_iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

/// Indices of the `m` points with the largest squared distance to the
/// dataset centroid, farthest first; ties go to the lower index.
pub fn boundary_points(dataset: &Dataset, m: usize) -> Result<Vec<usize>> {
    if m == 0 || m > dataset.n() {
        return Err(Error::InvalidParameter(format!(
            "boundary size {m} outside 1..={}",
            dataset.n()
        )));
    }
    let centroid = dataset_centroid(dataset);
    let dist: Vec<f64> = (0..dataset.n())
        .map(|i| sq(dataset.row(i).iter().copied(), centroid.iter().copied()))
        .collect();
    let mut idx: Vec<usize> = (0..dataset.n()).collect();
    // stable sort keeps lower indices first among equal distances
    idx.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]));
    idx.truncate(m);
    Ok(idx)
}

fn assigned_distance(dataset: &Dataset, centers: &Centers, labels: &[usize], i: usize) -> f64 {
    sq(
        dataset.row(i).iter().copied(),
        centers.row(labels[i]).iter().copied(),
    )
}

fn check_centers(dataset: &Dataset, centers: &Centers) -> Result<()> {
    if dataset.dim() != centers.dim() {
        return Err(Error::DimensionMismatch {
            expected: dataset.dim(),
            got: centers.dim(),
        });
    }
    Ok(())
}

/// Sum over the `m` boundary points of the squared distance to the center
/// of the cluster each one is assigned to. `m = 1` gives the max-boundary
/// distance.
pub fn m_boundary_dist(
    dataset: &Dataset,
    assignment: Assignment<'_>,
    centers: &Centers,
    m: usize,
) -> Result<BoundaryReport> {
    check_centers(dataset, centers)?;
    let labels = assignment.resolve(dataset.n(), centers.n_clusters())?;
    let boundary_indices = boundary_points(dataset, m)?;
    let value = boundary_indices
        .iter()
        .map(|&i| assigned_distance(dataset, centers, &labels, i))
        .sum();
    Ok(BoundaryReport {
        m,
        boundary_indices,
        value,
    })
}

/// Sum over all points of the squared distance to the assigned center.
pub fn within_cluster_dist(
    dataset: &Dataset,
    assignment: Assignment<'_>,
    centers: &Centers,
) -> Result<f64> {
    check_centers(dataset, centers)?;
    let labels = assignment.resolve(dataset.n(), centers.n_clusters())?;
    Ok((0..dataset.n())
        .map(|i| assigned_distance(dataset, centers, &labels, i))
        .sum())
}

/// A multivariate normal with a symmetric positive-definite covariance.
#[derive(Debug, Clone)]
pub struct GaussianSpec {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    chol: Cholesky<f64, nalgebra::Dyn>,
}

impl PartialEq for GaussianSpec {
    fn eq(&self, other: &Self) -> bool {
        self.mean == other.mean && self.cov == other.cov
    }
}

impl GaussianSpec {
    pub fn new(mean: Vec<f64>, cov: Vec<Vec<f64>>) -> Result<Self> {
        let n = mean.len();
        if n == 0 {
            return Err(Error::InvalidParameter(
                "gaussian with zero dimensions".into(),
            ));
        }
        if cov.len() != n || cov.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: cov.len(),
            });
        }
        let cov = DMatrix::from_fn(n, n, |i, j| cov[i][j]);
        Self::from_parts(DVector::from_vec(mean), cov)
    }

    pub fn from_parts(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        if cov.nrows() != n || cov.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: cov.nrows(),
            });
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "non-finite gaussian parameter".into(),
            ));
        }
        for i in 0..n {
            for j in 0..i {
                if (cov[(i, j)] - cov[(j, i)]).abs() > SYMMETRY_TOLERANCE {
                    return Err(Error::NotPositiveDefinite(format!(
                        "covariance is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let chol = Cholesky::new(cov.clone())
            .ok_or_else(|| Error::NotPositiveDefinite("Cholesky factorization failed".into()))?;
        Ok(Self { mean, cov, chol })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Lower-triangular `L` with `L Lᵀ = Σ`.
    pub fn cholesky_factor(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    fn log_det(&self) -> f64 {
        2.0 * self
            .chol
            .l_dirty()
            .diagonal()
            .iter()
            .map(|v| v.ln())
            .sum::<f64>()
    }

    pub fn with_mean(&self, mean: DVector<f64>) -> Result<Self> {
        Self::from_parts(mean, self.cov.clone())
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "covariance scale must be positive, got {factor}"
            )));
        }
        Self::from_parts(self.mean.clone(), &self.cov * factor)
    }
}

/// `KL(g1 ‖ g2)` between two multivariate normals.
pub fn gaussian_kl(g1: &GaussianSpec, g2: &GaussianSpec) -> Result<f64> {
    if g1.dim() != g2.dim() {
        return Err(Error::DimensionMismatch {
            expected: g1.dim(),
            got: g2.dim(),
        });
    }
    let n = g1.dim() as f64;
    let trace = g2.chol.solve(&g1.cov).trace();
    let diff = &g2.mean - &g1.mean;
    let maha = diff.dot(&g2.chol.solve(&diff));
    Ok(0.5 * (g2.log_det() - g1.log_det() - n + trace + maha))
}

/// Sum of component-wise KL divergences between two paired mixtures.
pub fn mixture_kl(specs1: &[GaussianSpec], specs2: &[GaussianSpec]) -> Result<f64> {
    if specs1.len() != specs2.len() {
        return Err(Error::LengthMismatch {
            left: specs1.len(),
            right: specs2.len(),
        });
    }
    specs1
        .iter()
        .zip(specs2)
        .map(|(a, b)| gaussian_kl(a, b))
        .sum()
}

/// `Σ w_i ln w_i + ln N`: KL divergence of the weights from uniform.
pub fn weight_kl_uniform(w: &ImportanceWeights) -> f64 {
    let n = w.len() as f64;
    w.view()
        .iter()
        .map(|&v| if v > 0.0 { v * v.ln() } else { 0.0 })
        .sum::<f64>()
        + n.ln()
}
