use std::fmt;
use std::str::FromStr;

use super::{label_centroids, HardClustering};
use crate::distortion::squared_distances;
use crate::error::{Error, Result};
use crate::types::{Centers, Dataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Linkage {
    Ward,
    Complete,
    Average,
    Single,
}

impl Linkage {
    pub const ALL: [Linkage; 4] = [
        Linkage::Ward,
        Linkage::Complete,
        Linkage::Average,
        Linkage::Single,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Linkage::Ward => "ward",
            Linkage::Complete => "complete",
            Linkage::Average => "average",
            Linkage::Single => "single",
        }
    }

    /// Distance after merging clusters `i` and `j`, seen from cluster `k`.
    fn update(self, dki: f64, dkj: f64, dij: f64, ni: f64, nj: f64, nk: f64) -> f64 {
        match self {
            Linkage::Single => dki.min(dkj),
            Linkage::Complete => dki.max(dkj),
            Linkage::Average => (ni * dki + nj * dkj) / (ni + nj),
            Linkage::Ward => ((ni + nk) * dki + (nj + nk) * dkj - nk * dij) / (ni + nj + nk),
        }
    }
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Linkage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Linkage::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown linkage `{s}`")))
    }
}

/// Agglomerative clustering down to `n_clusters` groups.
///
/// Ward merges on squared Euclidean distances; the other linkages work on
/// plain Euclidean distances. Ties go to the pair with the smallest indices.
/// Labels are numbered by the smallest point index in each group.
pub fn hierarchical_solve(
    dataset: &Dataset,
    n_clusters: usize,
    linkage: Linkage,
) -> Result<HardClustering> {
    let n = dataset.n();
    if n_clusters == 0 || n_clusters > n {
        return Err(Error::InvalidClusterCount {
            clusters: n_clusters,
            points: n,
        });
    }
    let mut d = squared_distances(dataset.points(), dataset.points());
    if linkage != Linkage::Ward {
        d.mapv_inplace(f64::sqrt);
    }
    let mut size = vec![1.0f64; n];
    let mut active = vec![true; n];
    // owner[p] is the representative (smallest member) of the group holding p
    let mut owner: Vec<usize> = (0..n).collect();
    let mut nn = vec![usize::MAX; n];
    let mut nn_d = vec![f64::INFINITY; n];

    let refresh = |i: usize,
                   d: &ndarray::Array2<f64>,
                   active: &[bool],
                   nn: &mut [usize],
                   nn_d: &mut [f64]| {
        nn[i] = usize::MAX;
        nn_d[i] = f64::INFINITY;
        for j in 0..n {
            if j != i && active[j] && d[[i, j]] < nn_d[i] {
                nn[i] = j;
                nn_d[i] = d[[i, j]];
            }
        }
    };
    for i in 0..n {
        refresh(i, &d, &active, &mut nn, &mut nn_d);
    }

    for _ in 0..n - n_clusters {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in (0..n).filter(|&i| active[i] && nn[i] != usize::MAX) {
            let cand = (nn_d[i], i.min(nn[i]), i.max(nn[i]));
            let better = match best {
                None => true,
                Some(b) => cand.0 < b.0 || (cand.0 == b.0 && (cand.1, cand.2) < (b.1, b.2)),
            };
            if better {
                best = Some(cand);
            }
        }
        let (dab, a, b) = best.expect("at least two active clusters");
        for k in (0..n).filter(|&k| active[k] && k != a && k != b) {
            let v = linkage.update(d[[k, a]], d[[k, b]], dab, size[a], size[b], size[k]);
            d[[k, a]] = v;
            d[[a, k]] = v;
        }
        size[a] += size[b];
        active[b] = false;
        for o in owner.iter_mut().filter(|o| **o == b) {
            *o = a;
        }
        refresh(a, &d, &active, &mut nn, &mut nn_d);
        for k in (0..n).filter(|&k| active[k] && k != a) {
            if nn[k] == a || nn[k] == b {
                refresh(k, &d, &active, &mut nn, &mut nn_d);
            } else if d[[k, a]] < nn_d[k] || (d[[k, a]] == nn_d[k] && a < nn[k]) {
                nn[k] = a;
                nn_d[k] = d[[k, a]];
            }
        }
    }

    let reps: Vec<usize> = (0..n).filter(|&i| active[i]).collect();
    let labels: Vec<usize> = owner
        .iter()
        .map(|o| reps.binary_search(o).expect("owner is active"))
        .collect();
    let rows: Vec<Vec<f64>> = label_centroids(dataset, &labels, n_clusters)
        .into_iter()
        .map(|c| c.expect("every group has members"))
        .collect();
    Ok(HardClustering {
        labels,
        centers: Centers::from_rows(&rows)?,
        empty_clusters: Vec::new(),
        iterations: n - n_clusters,
        converged: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn single_linkage_line() {
        let data = Dataset::new(array![[0.0], [1.0], [5.0]]).unwrap();
        let r = hierarchical_solve(&data, 2, Linkage::Single).unwrap();
        assert_eq!(r.labels, vec![0, 0, 1]);
        assert_eq!(r.centers.view(), array![[0.5], [5.0]]);
    }

    #[test]
    fn extremes() {
        let data = Dataset::new(array![[0.0, 1.0], [2.0, 2.0], [5.0, -1.0], [3.0, 3.0]]).unwrap();
        for l in Linkage::ALL {
            assert_eq!(
                hierarchical_solve(&data, 4, l).unwrap().labels,
                vec![0, 1, 2, 3]
            );
            let one = hierarchical_solve(&data, 1, l).unwrap();
            assert_eq!(one.labels, vec![0; 4]);
            assert_eq!(one.centers.view(), array![[2.5, 1.25]]);
        }
    }

    #[test]
    fn ties_merge_smallest_pair() {
        // equal gaps everywhere: the first merge must join points 0 and 1
        let data = Dataset::new(array![[0.0], [1.0], [2.0], [3.0]]).unwrap();
        let r = hierarchical_solve(&data, 3, Linkage::Single).unwrap();
        assert_eq!(r.labels, vec![0, 0, 1, 2]);
    }

    #[test]
    fn ward_matches_brute_force_sse() {
        // Ward merges the pair with the smallest increase in within-group SSE
        let data = Dataset::new(array![[0.0], [0.4], [3.0], [3.9], [9.0], [10.5]]).unwrap();
        let r = hierarchical_solve(&data, 3, Linkage::Ward).unwrap();
        assert_eq!(r.labels, vec![0, 0, 1, 1, 2, 2]);
    }

    #[test]
    fn parses_names() {
        for l in Linkage::ALL {
            assert_eq!(l.as_str().parse::<Linkage>().unwrap(), l);
        }
        assert!("median".parse::<Linkage>().is_err());
    }
}
