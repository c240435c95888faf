use std::fmt;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Row-sum / total-sum tolerance used by the membership and weight checks.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// `N × S` matrix of finite observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Array2<f64>,
}

impl Dataset {
    pub fn new(points: Array2<f64>) -> Result<Self> {
        if points.nrows() == 0 || points.ncols() == 0 {
            return Err(Error::EmptyDataset);
        }
        if let Some(((row, col), _)) = points.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { row, col });
        }
        Ok(Self { points })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let s = rows.first().map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(n * s);
        for r in rows {
            if r.len() != s {
                return Err(Error::DimensionMismatch {
                    expected: s,
                    got: r.len(),
                });
            }
            flat.extend_from_slice(r);
        }
        let points = Array2::from_shape_vec((n, s), flat)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Self::new(points)
    }

    pub fn n(&self) -> usize {
        self.points.nrows()
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> ArrayView2<'_, f64> {
        self.points.view()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.points.row(i)
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.points
    }
}

/// Fuzziness temperature `t1` and deviation temperature `t2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Temperatures {
    t1: f64,
    t2: f64,
}

impl Temperatures {
    pub fn new(t1: f64, t2: f64) -> Result<Self> {
        if !(t1 > 0.0 && t2 > 0.0 && t1.is_finite() && t2.is_finite()) {
            return Err(Error::InvalidTemperature { t1, t2 });
        }
        Ok(Self { t1, t2 })
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn t2(&self) -> f64 {
        self.t2
    }

    /// The Fuzzy-ITISC setting that reproduces fuzzy c-means with fuzzifier `m`.
    pub fn from_fuzzifier(m: f64) -> Result<Self> {
        Self::new(m - 1.0, 1.0)
    }
}

/// Which distortion the model minimizes: `d(x, y) = ‖x − y‖²` or its logarithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistortionKind {
    SquaredEuclidean,
    LogSquaredEuclidean,
}

impl DistortionKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DistortionKind::SquaredEuclidean => "squared-euclidean",
            DistortionKind::LogSquaredEuclidean => "log-squared-euclidean",
        }
    }
}

impl std::str::FromStr for DistortionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squared-euclidean" | "sq" => Ok(DistortionKind::SquaredEuclidean),
            "log-squared-euclidean" | "log" => Ok(DistortionKind::LogSquaredEuclidean),
            other => Err(Error::InvalidParameter(format!(
                "unknown distortion kind `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// Offending row (membership) or entry (weights); `None` for a total-sum violation.
    pub index: Option<usize>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViolationReport {
    pub violations: Vec<Violation>,
}

impl fmt::Display for ViolationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.violations.iter().take(5).enumerate() {
            if k > 0 {
                write!(f, "; ")?;
            }
            match v.index {
                Some(i) => write!(f, "index {i} residual {:.3e}", v.residual)?,
                None => write!(f, "total residual {:.3e}", v.residual)?,
            }
        }
        if self.violations.len() > 5 {
            write!(f, "; ... ({} total)", self.violations.len())?;
        }
        Ok(())
    }
}

fn range_excess(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else if v < 0.0 {
        -v
    } else if v > 1.0 {
        v - 1.0
    } else {
        0.0
    }
}

/// Checks that `u` is row-stochastic with entries in `[0, 1]`.
///
/// Each offending row is reported with the larger of its row-sum residual and
/// its worst out-of-range excursion.
pub fn validate_membership(u: ArrayView2<'_, f64>) -> std::result::Result<(), ViolationReport> {
    let mut violations = Vec::new();
    if u.is_empty() {
        violations.push(Violation {
            index: None,
            residual: f64::INFINITY,
        });
    }
    for (i, row) in u.axis_iter(Axis(0)).enumerate() {
        let sum_residual = (row.sum() - 1.0).abs();
        let excess = row.iter().copied().map(range_excess).fold(0.0, f64::max);
        let residual = if sum_residual > ROW_SUM_TOLERANCE || sum_residual.is_nan() {
            sum_residual.max(excess)
        } else {
            excess
        };
        if residual > 0.0 || residual.is_nan() {
            violations.push(Violation {
                index: Some(i),
                residual,
            });
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(ViolationReport { violations })
    }
}

/// Checks that `w` lies on the probability simplex.
pub fn validate_weights(w: ArrayView1<'_, f64>) -> std::result::Result<(), ViolationReport> {
    let mut violations = Vec::new();
    if w.is_empty() {
        violations.push(Violation {
            index: None,
            residual: f64::INFINITY,
        });
    }
    for (i, &v) in w.iter().enumerate() {
        let e = range_excess(v);
        if e > 0.0 {
            violations.push(Violation {
                index: Some(i),
                residual: e,
            });
        }
    }
    let residual = (w.sum() - 1.0).abs();
    if !w.is_empty() && (residual.is_nan() || residual > ROW_SUM_TOLERANCE) {
        violations.push(Violation {
            index: None,
            residual,
        });
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(ViolationReport { violations })
    }
}

/// `N × C` fuzzy membership matrix; rows sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Membership(Array2<f64>);

impl Membership {
    pub fn new(u: Array2<f64>) -> Result<Self> {
        validate_membership(u.view()).map_err(Error::InvalidMembership)?;
        Ok(Self(u))
    }

    pub(crate) fn new_unchecked(u: Array2<f64>) -> Self {
        debug_assert!(validate_membership(u.view()).is_ok());
        Self(u)
    }

    /// Crisp membership from hard labels.
    pub fn from_labels(labels: &[usize], n_clusters: usize) -> Result<Self> {
        let mut u = Array2::zeros((labels.len(), n_clusters));
        for (i, &l) in labels.iter().enumerate() {
            if l >= n_clusters {
                return Err(Error::InvalidParameter(format!(
                    "label {l} out of range for {n_clusters} clusters"
                )));
            }
            u[[i, l]] = 1.0;
        }
        Self::new(u)
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn n_points(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_clusters(&self) -> usize {
        self.0.ncols()
    }

    /// Argmax cluster per row; ties go to the lowest cluster index.
    pub fn labels(&self) -> Vec<usize> {
        self.0
            .axis_iter(Axis(0))
            .map(|row| {
                let mut best = 0;
                for (j, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = j;
                    }
                }
                best
            })
            .collect()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }
}

/// Length-`N` importance sampling weights on the simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceWeights(Array1<f64>);

impl ImportanceWeights {
    pub fn new(w: Array1<f64>) -> Result<Self> {
        validate_weights(w.view()).map_err(Error::InvalidWeights)?;
        Ok(Self(w))
    }

    pub(crate) fn new_unchecked(w: Array1<f64>) -> Self {
        debug_assert!(validate_weights(w.view()).is_ok());
        Self(w)
    }

    pub fn uniform(n: usize) -> Self {
        Self(Array1::from_elem(n, 1.0 / n as f64))
    }

    pub fn view(&self) -> ArrayView1<'_, f64> {
        self.0.view()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn into_inner(self) -> Array1<f64> {
        self.0
    }
}

/// `C × S` matrix of cluster prototypes.
#[derive(Debug, Clone, PartialEq)]
pub struct Centers(Array2<f64>);

impl Centers {
    pub fn new(y: Array2<f64>) -> Result<Self> {
        if y.nrows() == 0 || y.ncols() == 0 {
            return Err(Error::InvalidClusterCount {
                clusters: y.nrows(),
                points: 0,
            });
        }
        if let Some(((row, col), _)) = y.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { row, col });
        }
        Ok(Self(y))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Ok(Self(Dataset::from_rows(rows)?.into_inner()))
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn n_clusters(&self) -> usize {
        self.0.nrows()
    }

    pub fn dim(&self) -> usize {
        self.0.ncols()
    }

    pub fn row(&self, k: usize) -> ArrayView1<'_, f64> {
        self.0.row(k)
    }

    /// Row-major flattening, the layout used by the reformulation solver.
    pub fn to_flat(&self) -> Vec<f64> {
        self.0.iter().copied().collect()
    }

    pub fn from_flat(flat: &[f64], n_clusters: usize, dim: usize) -> Result<Self> {
        let y = Array2::from_shape_vec((n_clusters, dim), flat.to_vec())
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Self::new(y)
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    /// Frobenius distance between two center sets of equal shape.
    pub fn frobenius_distance(&self, other: &Centers) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    /// Center updates skipped because the cluster's normalizer underflowed.
    pub degenerate_updates: usize,
    /// The solver stopped because the objective kept increasing.
    pub diverged: bool,
    /// Final center movement (AO) or gradient infinity-norm (reformulation).
    pub final_residual: f64,
    pub note: Option<String>,
}

/// Output of every soft solver.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterState {
    pub centers: Centers,
    pub membership: Membership,
    pub weights: ImportanceWeights,
    /// Objective at `centers`; `NaN` for a state that was never evaluated.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub diagnostics: Diagnostics,
}

/// Random starting state: uniform-random memberships and weights normalized
/// onto their constraint sets, and `C` distinct data rows as centers.
pub fn random_init(dataset: &Dataset, n_clusters: usize, rng: &mut Rng) -> Result<ClusterState> {
    let n = dataset.n();
    if n_clusters == 0 || n_clusters > n {
        return Err(Error::InvalidClusterCount {
            clusters: n_clusters,
            points: n,
        });
    }

    let mut u = Array2::from_shape_fn((n, n_clusters), |_| rng.uniform());
    for mut row in u.axis_iter_mut(Axis(0)) {
        let s = row.sum();
        if s > 0.0 {
            row /= s;
        } else {
            row.fill(1.0 / n_clusters as f64);
        }
    }
    let mut w = Array1::from_shape_fn(n, |_| rng.uniform());
    let s = w.sum();
    if s > 0.0 {
        w /= s;
    } else {
        w.fill(1.0 / n as f64);
    }

    let picks = rng.sample_indices(n, n_clusters);
    let y = dataset.points().select(Axis(0), &picks);

    Ok(ClusterState {
        centers: Centers(y),
        membership: Membership::new_unchecked(u),
        weights: ImportanceWeights::new_unchecked(w),
        objective: f64::NAN,
        iterations: 0,
        converged: false,
        diagnostics: Diagnostics::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn membership_examples() {
        assert!(validate_membership(array![[0.5, 0.5], [1.0, 0.0]].view()).is_ok());
        let err = validate_membership(array![[0.6, 0.6]].view()).unwrap_err();
        assert_eq!(err.violations.len(), 1);
        assert_eq!(err.violations[0].index, Some(0));
        assert!((err.violations[0].residual - 0.2).abs() < 1e-12);
        assert!(validate_membership(array![[1.0]].view()).is_ok());
    }

    #[test]
    fn membership_out_of_range_entry() {
        let err = validate_membership(array![[1.5, -0.5]].view()).unwrap_err();
        assert!((err.violations[0].residual - 0.5).abs() < 1e-12);
    }

    #[test]
    fn weight_examples() {
        assert!(validate_weights(array![0.25, 0.25, 0.25, 0.25].view()).is_ok());
        let err = validate_weights(array![0.7, 0.6].view()).unwrap_err();
        let total = err.violations.iter().find(|v| v.index.is_none()).unwrap();
        assert!((total.residual - 0.3).abs() < 1e-12);
        assert!(validate_weights(array![1.0].view()).is_ok());
    }

    #[test]
    fn dataset_rejects_non_finite() {
        assert!(matches!(
            Dataset::new(array![[0.0, f64::NAN]]),
            Err(Error::NonFinite { row: 0, col: 1 })
        ));
        assert!(matches!(
            Dataset::new(Array2::zeros((0, 2))),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn temperatures_must_be_positive() {
        assert!(Temperatures::new(1.0, 0.0).is_err());
        assert!(Temperatures::new(-1.0, 1.0).is_err());
        assert!(Temperatures::new(0.5, 2.0).is_ok());
    }

    fn four_points() -> Dataset {
        Dataset::new(array![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [5.0, 5.0]]).unwrap()
    }

    #[test]
    fn random_init_is_deterministic() {
        let data = four_points();
        let a = random_init(&data, 2, &mut Rng::seed_from_u64(3)).unwrap();
        let b = random_init(&data, 2, &mut Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a.centers, b.centers);
        assert_eq!(a.membership, b.membership);
        assert_eq!(a.weights, b.weights);
        assert!(a.objective.is_nan());
        assert!(validate_membership(a.membership.view()).is_ok());
        assert!(validate_weights(a.weights.view()).is_ok());
    }

    #[test]
    fn random_init_full_permutation() {
        let data = four_points();
        let s = random_init(&data, 4, &mut Rng::seed_from_u64(8)).unwrap();
        let mut rows: Vec<Vec<f64>> = s
            .centers
            .view()
            .axis_iter(Axis(0))
            .map(|r| r.to_vec())
            .collect();
        let mut expected: Vec<Vec<f64>> = data
            .points()
            .axis_iter(Axis(0))
            .map(|r| r.to_vec())
            .collect();
        rows.sort_by(|a, b| a.partial_cmp(b).unwrap());
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(rows, expected);
    }

    #[test]
    fn random_init_rejects_bad_cluster_counts() {
        let data = four_points();
        let mut rng = Rng::seed_from_u64(0);
        assert!(random_init(&data, 0, &mut rng).is_err());
        assert!(random_init(&data, 5, &mut rng).is_err());
    }

    #[test]
    fn labels_break_ties_low() {
        let u = Membership::new(array![[0.5, 0.5], [0.2, 0.8]]).unwrap();
        assert_eq!(u.labels(), vec![0, 1]);
    }
}
