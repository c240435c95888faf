use ndarray::{Array2, ArrayView2, Axis};

use crate::distortion::{
    clamped_ln, distortion_matrix, log_sum_exp_iter, squared_distances, LOG_DISTANCE_FLOOR,
};
use crate::engine::DEGENERATE_DENOMINATOR;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::types::{
    random_init, Centers, ClusterState, Dataset, Diagnostics, ImportanceWeights, Membership,
};

#[derive(Debug, Clone)]
pub struct FcmOptions {
    pub max_iter: usize,
    /// Stop once `‖Y_{t+1} − Y_t‖_F ≤ eps`.
    pub eps: f64,
}

impl Default for FcmOptions {
    fn default() -> Self {
        Self {
            max_iter: 300,
            eps: 1e-5,
        }
    }
}

/// Snapshot handed to the FCM observer after each sweep.
#[derive(Debug)]
pub struct FcmIterate<'a> {
    pub iteration: usize,
    /// Memberships computed from the centers that entered the sweep.
    pub membership: &'a Membership,
    /// Centers leaving the sweep.
    pub centers: &'a Centers,
    pub shift: f64,
    /// `Σ u_ij^m d_ij` for the sweep's memberships and the new centers.
    pub objective: f64,
}

fn check_fuzzifier(m: f64) -> Result<()> {
    if !(m.is_finite() && m > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "fuzzifier must exceed 1, got {m}"
        )));
    }
    Ok(())
}

fn log_membership(d: ArrayView2<'_, f64>, m: f64) -> Array2<f64> {
    let mut out = Array2::zeros(d.dim());
    for (drow, mut orow) in d.axis_iter(Axis(0)).zip(out.axis_iter_mut(Axis(0))) {
        let hits = drow.iter().filter(|&&v| v < LOG_DISTANCE_FLOOR).count();
        if hits > 0 {
            let share = -(hits as f64).ln();
            for (o, &v) in orow.iter_mut().zip(drow.iter()) {
                *o = if v < LOG_DISTANCE_FLOOR {
                    share
                } else {
                    f64::NEG_INFINITY
                };
            }
            continue;
        }
        for (o, &v) in orow.iter_mut().zip(drow.iter()) {
            *o = -clamped_ln(v) / (m - 1.0);
        }
        let lse = log_sum_exp_iter(orow.iter().copied());
        orow.mapv_inplace(|v| v - lse);
    }
    out
}

/// FCM memberships `u_ij ∝ d_ij^(1/(1−m))`. A point that coincides with one
/// or more centers is split equally among them.
pub fn fcm_membership(dataset: &Dataset, centers: &Centers, m: f64) -> Result<Membership> {
    check_fuzzifier(m)?;
    let dm = distortion_matrix(dataset, centers)?;
    Ok(Membership::new_unchecked(
        log_membership(dm.view(), m).mapv(f64::exp),
    ))
}

/// `Σ_ij u_ij^m d_ij`.
pub fn fcm_objective(dataset: &Dataset, centers: &Centers, u: &Membership, m: f64) -> Result<f64> {
    check_fuzzifier(m)?;
    let dm = distortion_matrix(dataset, centers)?;
    if u.view().dim() != dm.view().dim() {
        return Err(Error::LengthMismatch {
            left: dm.n_points() * dm.n_clusters(),
            right: u.n_points() * u.n_clusters(),
        });
    }
    Ok(u.view()
        .iter()
        .zip(dm.view().iter())
        .map(|(u, d)| u.powf(m) * d)
        .sum())
}

/// Membership-free FCM criterion `Σ_i (Σ_j d_ij^(1/(1−m)))^(1−m)`, with `d`
/// clamped below at [`LOG_DISTANCE_FLOOR`].
pub fn fcm_reform_objective(dataset: &Dataset, centers: &Centers, m: f64) -> Result<f64> {
    check_fuzzifier(m)?;
    let dm = distortion_matrix(dataset, centers)?;
    Ok(dm
        .view()
        .axis_iter(Axis(0))
        .map(|row| {
            let lse = log_sum_exp_iter(row.iter().map(|&d| -clamped_ln(d) / (m - 1.0)));
            (-(m - 1.0) * lse).exp()
        })
        .sum())
}

fn centers_from(
    x: ArrayView2<'_, f64>,
    log_u: &Array2<f64>,
    m: f64,
    prev: ArrayView2<'_, f64>,
) -> (Array2<f64>, usize) {
    let mut y = prev.to_owned();
    let mut degenerate = 0;
    let floor = DEGENERATE_DENOMINATOR.ln();
    for (k, col) in log_u.axis_iter(Axis(1)).enumerate() {
        let coef: Vec<f64> = col
            .iter()
            .map(|&l| if l == f64::NEG_INFINITY { l } else { m * l })
            .collect();
        let max = coef.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let scaled: f64 = if max.is_finite() {
            coef.iter().map(|v| (v - max).exp()).sum()
        } else {
            0.0
        };
        if !max.is_finite() || max + scaled.ln() < floor {
            degenerate += 1;
            continue;
        }
        let mut row = y.row_mut(k);
        row.fill(0.0);
        for (i, &cf) in coef.iter().enumerate() {
            let a = (cf - max).exp();
            if a > 0.0 {
                row.scaled_add(a, &x.row(i));
            }
        }
        row /= scaled;
    }
    (y, degenerate)
}

/// Fuzzy c-means from random initial centers (drawn exactly as the ITISC
/// solvers draw theirs, so runs with equal seeds start from the same point).
pub fn fcm_solve(
    dataset: &Dataset,
    n_clusters: usize,
    m: f64,
    rng: &mut Rng,
    opts: &FcmOptions,
) -> Result<ClusterState> {
    check_fuzzifier(m)?;
    let init = random_init(dataset, n_clusters, rng)?;
    fcm_solve_from(dataset, &init.centers, m, opts, None)
}

pub fn fcm_solve_from(
    dataset: &Dataset,
    init: &Centers,
    m: f64,
    opts: &FcmOptions,
    mut observer: Option<&mut dyn FnMut(&FcmIterate<'_>)>,
) -> Result<ClusterState> {
    check_fuzzifier(m)?;
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
    let x = dataset.points();
    let mut y = init.view().to_owned();
    let mut diagnostics = Diagnostics::default();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        let log_u = log_membership(squared_distances(x, y.view()).view(), m);
        let (next, degenerate) = centers_from(x, &log_u, m, y.view());
        diagnostics.degenerate_updates += degenerate;
        let shift = next
            .iter()
            .zip(y.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        y = next;
        iterations += 1;
        diagnostics.final_residual = shift;
        if let Some(obs) = observer.as_deref_mut() {
            let u = Membership::new_unchecked(log_u.mapv(f64::exp));
            let centers = Centers::new(y.clone())?;
            let objective = fcm_objective(dataset, &centers, &u, m)?;
            obs(&FcmIterate {
                iteration: iterations,
                membership: &u,
                centers: &centers,
                shift,
                objective,
            });
        }
        if !shift.is_finite() {
            diagnostics.note = Some("non-finite iterate".into());
            break;
        }
        if shift <= opts.eps {
            converged = true;
            break;
        }
    }
    let centers = Centers::new(y)?;
    let membership = fcm_membership(dataset, &centers, m)?;
    let objective = fcm_reform_objective(dataset, &centers, m)?;
    Ok(ClusterState {
        weights: ImportanceWeights::uniform(dataset.n()),
        centers,
        membership,
        objective,
        iterations,
        converged,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn membership_example() {
        let data = Dataset::new(array![[0.0]]).unwrap();
        let c = Centers::new(array![[1.0], [2.0]]).unwrap();
        let u = fcm_membership(&data, &c, 2.0).unwrap();
        assert!((u.view()[[0, 0]] - 0.8).abs() < 1e-15);
        assert!((u.view()[[0, 1]] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn coinciding_centers_share_crisply() {
        let data = Dataset::new(array![[1.0], [3.0]]).unwrap();
        let c = Centers::new(array![[1.0], [1.0], [5.0]]).unwrap();
        let u = fcm_membership(&data, &c, 2.0).unwrap();
        assert_eq!(u.view().row(0).to_vec(), vec![0.5, 0.5, 0.0]);
        assert!((u.view().row(1).sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_pair() {
        let data = Dataset::new(array![[-1.0], [1.0]]).unwrap();
        let init = Centers::new(array![[-0.3], [0.2]]).unwrap();
        let s = fcm_solve_from(&data, &init, 2.0, &FcmOptions::default(), None).unwrap();
        let y = s.centers.view();
        assert!((y[[0, 0]] + y[[1, 0]]).abs() < 1e-6, "{y:?}");
        assert!(s.converged);
    }

    #[test]
    fn reform_collapse() {
        let data = Dataset::new(array![[1.0, 2.0]]).unwrap();
        let c = Centers::new(array![[4.0, 6.0]]).unwrap();
        assert!((fcm_reform_objective(&data, &c, 2.0).unwrap() - 25.0).abs() < 1e-12);
        assert!((fcm_reform_objective(&data, &c, 3.5).unwrap() - 25.0).abs() < 1e-12);
    }

    #[test]
    fn objective_never_increases() {
        let mut rng = Rng::seed_from_u64(4);
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|i| {
                let off = (i % 3) as f64 * 3.0;
                vec![off + rng.standard_normal(), rng.standard_normal()]
            })
            .collect();
        let data = Dataset::from_rows(&rows).unwrap();
        let init = random_init(&data, 3, &mut rng).unwrap().centers;
        let mut values = Vec::new();
        let mut obs = |it: &FcmIterate<'_>| values.push(it.objective);
        fcm_solve_from(&data, &init, 2.0, &FcmOptions::default(), Some(&mut obs)).unwrap();
        assert!(values.len() > 2);
        for w in values.windows(2) {
            assert!(w[1] <= w[0] + 1e-10 * w[0].abs(), "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn rejects_bad_fuzzifier() {
        let data = Dataset::new(array![[0.0], [1.0]]).unwrap();
        assert!(fcm_solve(
            &data,
            2,
            1.0,
            &mut Rng::seed_from_u64(0),
            &FcmOptions::default()
        )
        .is_err());
    }
}
