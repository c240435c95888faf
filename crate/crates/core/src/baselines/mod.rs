//! Comparison models: k-means, fuzzy c-means and agglomerative clustering.

mod fcm;
mod hierarchical;
mod kmeans;

pub use fcm::{
    fcm_membership, fcm_objective, fcm_reform_objective, fcm_solve, fcm_solve_from, FcmIterate,
    FcmOptions,
};
pub use hierarchical::{hierarchical_solve, Linkage};
pub use kmeans::{kmeans_pp_init, kmeans_solve, kmeans_solve_from, KMeansOptions};

use ndarray::{Array2, Axis};

use crate::distortion::squared_distances;
use crate::types::{Centers, Dataset};

/// Hard partition with the centroid of each label group.
#[derive(Debug, Clone, PartialEq)]
pub struct HardClustering {
    pub labels: Vec<usize>,
    pub centers: Centers,
    /// Clusters that ended up with no members (their center is kept as-is).
    pub empty_clusters: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
}

impl HardClustering {
    /// Within-cluster sum of squared distances to the stored centers.
    pub fn cost(&self, dataset: &Dataset) -> f64 {
        self.labels
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                dataset
                    .row(i)
                    .iter()
                    .zip(self.centers.row(l).iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
            })
            .sum()
    }
}

/// Index of the nearest center for every point; ties go to the lower index.
pub fn nearest_center_labels(dataset: &Dataset, centers: &Centers) -> Vec<usize> {
    let d = squared_distances(dataset.points(), centers.view());
    d.axis_iter(Axis(0))
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v < row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Per-label centroids; `None` for labels without members.
pub(crate) fn label_centroids(
    dataset: &Dataset,
    labels: &[usize],
    c: usize,
) -> Vec<Option<Vec<f64>>> {
    let s = dataset.dim();
    let mut sums = Array2::<f64>::zeros((c, s));
    let mut counts = vec![0usize; c];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        let mut row = sums.row_mut(l);
        row += &dataset.row(i);
    }
    (0..c)
        .map(|k| {
            (counts[k] > 0).then(|| sums.row(k).iter().map(|v| v / counts[k] as f64).collect())
        })
        .collect()
}
