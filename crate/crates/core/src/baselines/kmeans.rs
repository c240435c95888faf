use ndarray::{Array2, Axis};

use super::{label_centroids, nearest_center_labels, HardClustering};
use crate::distortion::squared_distances;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::types::{Centers, Dataset};

#[derive(Debug, Clone)]
pub struct KMeansOptions {
    pub max_iter: usize,
    /// Stop once the Frobenius norm of the center update is at most `eps`.
    pub eps: f64,
    /// Independent k-means++ restarts; the lowest-cost run is kept.
    pub n_init: usize,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            max_iter: 300,
            eps: 1e-6,
            n_init: 1,
        }
    }
}

/// k-means++ seeding: first center uniform, then each next center drawn with
/// probability proportional to its squared distance from the nearest chosen
/// center.
pub fn kmeans_pp_init(dataset: &Dataset, n_clusters: usize, rng: &mut Rng) -> Result<Centers> {
    let n = dataset.n();
    if n_clusters == 0 || n_clusters > n {
        return Err(Error::InvalidClusterCount {
            clusters: n_clusters,
            points: n,
        });
    }
    let x = dataset.points();
    let mut chosen = vec![rng.index(n)];
    let mut nearest: Vec<f64> = squared_distances(x, x.select(Axis(0), &chosen).view())
        .column(0)
        .to_vec();
    while chosen.len() < n_clusters {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.uniform() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in nearest.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave target just past the last positive entry
            pick.unwrap_or_else(|| nearest.iter().rposition(|&d| d > 0.0).unwrap())
        } else {
            // every point coincides with a chosen center
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.index(free.len())]
        };
        chosen.push(pick);
        let row = x.row(pick);
        for (i, d) in nearest.iter_mut().enumerate() {
            let di: f64 = x
                .row(i)
                .iter()
                .zip(row.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if di < *d {
                *d = di;
            }
        }
    }
    Centers::new(x.select(Axis(0), &chosen))
}

/// Lloyd iterations after k-means++ seeding, repeated `n_init` times.
pub fn kmeans_solve(
    dataset: &Dataset,
    n_clusters: usize,
    rng: &mut Rng,
    opts: &KMeansOptions,
) -> Result<HardClustering> {
    let mut best: Option<(f64, HardClustering)> = None;
    for _ in 0..opts.n_init.max(1) {
        let init = kmeans_pp_init(dataset, n_clusters, rng)?;
        let run = kmeans_solve_from(dataset, &init, opts)?;
        let cost = run.cost(dataset);
        if best.as_ref().is_none_or(|(b, _)| cost < *b) {
            best = Some((cost, run));
        }
    }
    Ok(best.expect("at least one run").1)
}

/// Lloyd iterations from given centers. An empty cluster is re-seeded at the
/// point farthest from its currently assigned center.
pub fn kmeans_solve_from(
    dataset: &Dataset,
    init: &Centers,
    opts: &KMeansOptions,
) -> Result<HardClustering> {
    let c = init.n_clusters();
    if c == 0 || c > dataset.n() {
        return Err(Error::InvalidClusterCount {
            clusters: c,
            points: dataset.n(),
        });
    }
    if init.dim() != dataset.dim() {
        return Err(Error::DimensionMismatch {
            expected: dataset.dim(),
            got: init.dim(),
        });
    }
    let mut centers: Array2<f64> = init.view().to_owned();
    let mut labels = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let current = Centers::new(centers.clone())?;
        labels = nearest_center_labels(dataset, &current);
        repair_empty(dataset, &current, &mut labels, c);
        let next = centroids_or(dataset, &labels, centers.view());
        let shift = next
            .iter()
            .zip(centers.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        centers = next;
        if shift <= opts.eps {
            converged = true;
            break;
        }
    }
    let counts = labels.iter().fold(vec![0usize; c], |mut acc, &l| {
        acc[l] += 1;
        acc
    });
    Ok(HardClustering {
        empty_clusters: (0..c).filter(|&k| counts[k] == 0).collect(),
        labels,
        centers: Centers::new(centers)?,
        iterations,
        converged,
    })
}

fn repair_empty(dataset: &Dataset, centers: &Centers, labels: &mut [usize], c: usize) {
    let mut counts = vec![0usize; c];
    for &l in labels.iter() {
        counts[l] += 1;
    }
    let own: Vec<f64> = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            dataset
                .row(i)
                .iter()
                .zip(centers.row(l).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum()
        })
        .collect();
    let mut taken = vec![false; labels.len()];
    for k in 0..c {
        if counts[k] > 0 {
            continue;
        }
        let candidate = (0..labels.len())
            .filter(|&i| !taken[i] && counts[labels[i]] > 1)
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if own[b] >= own[i] => Some(b),
                _ => Some(i),
            });
        if let Some(i) = candidate {
            counts[labels[i]] -= 1;
            labels[i] = k;
            counts[k] = 1;
            taken[i] = true;
        }
    }
}

fn centroids_or(
    dataset: &Dataset,
    labels: &[usize],
    previous: ndarray::ArrayView2<'_, f64>,
) -> Array2<f64> {
    let mut out = previous.to_owned();
    for (k, c) in label_centroids(dataset, labels, previous.nrows())
        .into_iter()
        .enumerate()
    {
        if let Some(c) = c {
            out.row_mut(k).assign(&ndarray::ArrayView1::from(&c[..]));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn line() -> Dataset {
        Dataset::new(array![[0.0], [1.0], [9.0], [10.0]]).unwrap()
    }

    #[test]
    fn pp_init_single_and_full() {
        let data = line();
        let c = kmeans_pp_init(&data, 1, &mut Rng::seed_from_u64(5)).unwrap();
        assert_eq!(c.n_clusters(), 1);
        let c = kmeans_pp_init(&data, 4, &mut Rng::seed_from_u64(5)).unwrap();
        let mut v: Vec<f64> = c.view().iter().copied().collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(v, vec![0.0, 1.0, 9.0, 10.0]);
        let a = kmeans_pp_init(&data, 2, &mut Rng::seed_from_u64(9)).unwrap();
        let b = kmeans_pp_init(&data, 2, &mut Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert!(kmeans_pp_init(&data, 5, &mut Rng::seed_from_u64(9)).is_err());
    }

    #[test]
    fn pp_init_with_duplicates() {
        let data = Dataset::new(array![[1.0], [1.0], [1.0]]).unwrap();
        let c = kmeans_pp_init(&data, 3, &mut Rng::seed_from_u64(0)).unwrap();
        assert_eq!(c.n_clusters(), 3);
    }

    #[test]
    fn two_groups_on_a_line() {
        for seed in 0..10 {
            let r = kmeans_solve(
                &line(),
                2,
                &mut Rng::seed_from_u64(seed),
                &KMeansOptions::default(),
            )
            .unwrap();
            let mut c: Vec<f64> = r.centers.view().iter().copied().collect();
            c.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert_eq!(c, vec![0.5, 9.5]);
            assert!((r.cost(&line()) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn distinct_points_zero_cost() {
        let data = Dataset::new(array![[0.0, 1.0], [3.0, 3.0], [-2.0, 5.0]]).unwrap();
        let r = kmeans_solve(
            &data,
            3,
            &mut Rng::seed_from_u64(1),
            &KMeansOptions::default(),
        )
        .unwrap();
        assert_eq!(r.cost(&data), 0.0);
    }

    #[test]
    fn empty_cluster_is_reseeded() {
        let data = line();
        let init = Centers::new(array![[0.0], [100.0]]).unwrap();
        let r = kmeans_solve_from(&data, &init, &KMeansOptions::default()).unwrap();
        assert!(r.empty_clusters.is_empty());
        assert!((r.cost(&data) - 1.0).abs() < 1e-12);
    }
}
