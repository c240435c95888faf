//! ITISC and Fuzzy-ITISC update rules, objectives and gradients.
//!
//! Notation used in the code: for the effective distortion `e_ij` (`d_ij`
//! or `ln d_ij`) the membership kernel is `k_ij = −e_ij / t1`,
//! `ln A_i = LSE_j k_ij`, memberships are `u_ij = exp(k_ij − ln A_i)` and the
//! weights are `w_i ∝ A_i^(−t1/t2)` with normalizer
//! `Z = Σ_i A_i^(−t1/t2)`. The reformulated objective is `t2 · ln Z`.

mod solve;

use ndarray::{Array1, Array2, ArrayView2, Axis};

pub use solve::{
    ao_solve, ao_solve_from, evaluate_state, reform_solve, reform_solve_from, AoIterate, AoOptions,
    ReformOptions,
};

use crate::distortion::{
    distortion_matrix, log_kernel, log_sum_exp_iter, row_log_sum_exp, squared_distances,
    DistortionMatrix, LOG_DISTANCE_FLOOR,
};
use crate::error::{Error, Result};
use crate::types::{Centers, Dataset, DistortionKind, ImportanceWeights, Membership, Temperatures};

/// Center normalizers below this are treated as underflowed.
pub const DEGENERATE_DENOMINATOR: f64 = 1e-300;

/// The three estimator terms of the empirical objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveBreakdown {
    /// `Σ_i w_i Σ_j u_ij e_ij`.
    pub expected_distortion: f64,
    /// `−Σ_i w_i Σ_j u_ij ln u_ij`.
    pub conditional_entropy: f64,
    /// `Σ_i w_i ln w_i + ln N`.
    pub weight_kl: f64,
    /// `D̂ − t1·Ĥ − t2·(KL − ln N)`; the constant `−t2 ln N` is dropped.
    pub total: f64,
}

/// Log-domain memberships, weights and normalizers at fixed centers.
#[derive(Debug, Clone)]
pub(crate) struct LogParts {
    pub distortion: Array2<f64>,
    pub log_u: Array2<f64>,
    pub log_w: Array1<f64>,
    pub log_z: f64,
}

pub(crate) fn log_parts(dm: &DistortionMatrix, t: Temperatures, kind: DistortionKind) -> LogParts {
    let mut k = log_kernel(dm, t.t1(), kind);
    let log_a = row_log_sum_exp(k.view());
    let ratio = t.t1() / t.t2();
    let s: Array1<f64> = log_a.iter().map(|la| -ratio * la).collect();
    let log_z = log_sum_exp_iter(s.iter().copied());
    for (mut row, la) in k.axis_iter_mut(Axis(0)).zip(&log_a) {
        row -= *la;
    }
    LogParts {
        distortion: dm.view().to_owned(),
        log_u: k,
        log_w: s.mapv(|v| v - log_z),
        log_z,
    }
}

fn raw_log_parts(
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    t: Temperatures,
    kind: DistortionKind,
) -> LogParts {
    // line-search probes may overflow to +inf; that propagates to an infinite objective
    let dm = DistortionMatrix::new_unchecked(squared_distances(x, y));
    log_parts(&dm, t, kind)
}

fn check_dims(dataset: &Dataset, centers: &Centers) -> Result<()> {
    if dataset.dim() != centers.dim() {
        return Err(Error::DimensionMismatch {
            expected: dataset.dim(),
            got: centers.dim(),
        });
    }
    Ok(())
}

/// Optimal memberships for fixed distortions.
///
/// Squared kind: `u_ij ∝ exp(−d_ij / t1)`. Log kind: `u_ij ∝ d_ij^(−1/t1)`
/// with `d` clamped below at [`LOG_DISTANCE_FLOOR`].
pub fn update_membership(dm: &DistortionMatrix, t1: f64, kind: DistortionKind) -> Membership {
    let mut k = log_kernel(dm, t1, kind);
    for mut row in k.axis_iter_mut(Axis(0)) {
        let lse = log_sum_exp_iter(row.iter().copied());
        row.mapv_inplace(|v| (v - lse).exp());
    }
    Membership::new_unchecked(k)
}

/// Worst-case importance weights for fixed distortions:
/// `w_i ∝ A_i^(−t1/t2)` with `A_i` the membership normalizer of row `i`.
pub fn update_weights(
    dm: &DistortionMatrix,
    t: Temperatures,
    kind: DistortionKind,
) -> ImportanceWeights {
    let parts = log_parts(dm, t, kind);
    ImportanceWeights::new_unchecked(parts.log_w.mapv(f64::exp))
}

/// `ln` of the per-point center coefficient for cluster `k`.
fn center_log_coefficient(log_w: f64, log_u: f64, t: Temperatures, kind: DistortionKind) -> f64 {
    match kind {
        DistortionKind::SquaredEuclidean => log_w + log_u,
        DistortionKind::LogSquaredEuclidean => {
            if log_w == f64::NEG_INFINITY || log_u == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                (1.0 - t.t2()) * log_w + (1.0 + t.t1()) * log_u
            }
        }
    }
}

/// Weighted-mean center update from log-domain coefficients. Returns the new
/// centers and the clusters whose normalizer underflowed; those keep the
/// row from `fallback` (or zeros when there is none).
pub(crate) fn centers_from_log(
    x: ArrayView2<'_, f64>,
    log_u: ArrayView2<'_, f64>,
    log_w: &Array1<f64>,
    t: Temperatures,
    kind: DistortionKind,
    fallback: Option<ArrayView2<'_, f64>>,
) -> (Array2<f64>, Vec<usize>) {
    let (n, c) = log_u.dim();
    let mut y = Array2::zeros((c, x.ncols()));
    let mut degenerate = Vec::new();
    let floor = DEGENERATE_DENOMINATOR.ln();
    let mut coef = vec![0.0; n];
    for k in 0..c {
        for i in 0..n {
            coef[i] = center_log_coefficient(log_w[i], log_u[[i, k]], t, kind);
        }
        let max = coef.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let scaled: f64 = if max.is_finite() {
            coef.iter().map(|v| (v - max).exp()).sum()
        } else {
            0.0
        };
        if !max.is_finite() || max + scaled.ln() < floor {
            degenerate.push(k);
            if let Some(prev) = fallback {
                y.row_mut(k).assign(&prev.row(k));
            }
            continue;
        }
        let mut row = y.row_mut(k);
        for (i, &ci) in coef.iter().enumerate().take(n) {
            let a = (ci - max).exp();
            if a > 0.0 {
                row.scaled_add(a, &x.row(i));
            }
        }
        row /= scaled;
    }
    (y, degenerate)
}

/// Center update for given memberships and weights.
///
/// Squared kind: `y_k = Σ w_i u_ik x_i / Σ w_i u_ik`. Log kind:
/// `y_k = Σ w_i^(1−t2) u_ik^(1+t1) x_i / Σ w_i^(1−t2) u_ik^(1+t1)`. Zero
/// weights or memberships contribute nothing even when raised to a negative
/// power.
pub fn update_centers(
    dataset: &Dataset,
    u: &Membership,
    w: &ImportanceWeights,
    t: Temperatures,
    kind: DistortionKind,
) -> Result<Centers> {
    if u.n_points() != dataset.n() {
        return Err(Error::LengthMismatch {
            left: dataset.n(),
            right: u.n_points(),
        });
    }
    if w.len() != dataset.n() {
        return Err(Error::LengthMismatch {
            left: dataset.n(),
            right: w.len(),
        });
    }
    let log_u = u.view().mapv(f64::ln);
    let log_w = w.view().mapv(f64::ln);
    let (y, degenerate) = centers_from_log(dataset.points(), log_u.view(), &log_w, t, kind, None);
    if let Some(&cluster) = degenerate.first() {
        return Err(Error::DegenerateCluster { cluster });
    }
    Centers::new(y)
}

fn x_ln_x(v: f64) -> f64 {
    if v > 0.0 {
        v * v.ln()
    } else {
        0.0
    }
}

/// Evaluates the empirical objective at an arbitrary feasible state.
pub fn full_objective(
    dataset: &Dataset,
    centers: &Centers,
    u: &Membership,
    w: &ImportanceWeights,
    t: Temperatures,
    kind: DistortionKind,
) -> Result<ObjectiveBreakdown> {
    check_dims(dataset, centers)?;
    if u.n_points() != dataset.n() || u.n_clusters() != centers.n_clusters() {
        return Err(Error::LengthMismatch {
            left: dataset.n() * centers.n_clusters(),
            right: u.n_points() * u.n_clusters(),
        });
    }
    if w.len() != dataset.n() {
        return Err(Error::LengthMismatch {
            left: dataset.n(),
            right: w.len(),
        });
    }
    let e = distortion_matrix(dataset, centers)?.effective(kind);
    let u = u.view();
    let w = w.view();
    let mut distortion = 0.0;
    let mut neg_entropy = 0.0;
    for i in 0..dataset.n() {
        let mut di = 0.0;
        let mut hi = 0.0;
        for j in 0..centers.n_clusters() {
            di += u[[i, j]] * e[[i, j]];
            hi += x_ln_x(u[[i, j]]);
        }
        distortion += w[i] * di;
        neg_entropy += w[i] * hi;
    }
    let w_ln_w: f64 = w.iter().copied().map(x_ln_x).sum();
    let n = dataset.n() as f64;
    Ok(ObjectiveBreakdown {
        expected_distortion: distortion,
        conditional_entropy: -neg_entropy,
        weight_kl: w_ln_w + n.ln(),
        total: distortion + t.t1() * neg_entropy - t.t2() * w_ln_w,
    })
}

/// Center-only objective with memberships and weights eliminated:
/// `t2 · ln Σ_i A_i^(−t1/t2)`.
pub fn reform_objective(
    dataset: &Dataset,
    centers: &Centers,
    t: Temperatures,
    kind: DistortionKind,
) -> Result<f64> {
    check_dims(dataset, centers)?;
    Ok(t.t2() * raw_log_parts(dataset.points(), centers.view(), t, kind).log_z)
}

pub(crate) fn gradient_from_parts(
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    parts: &LogParts,
    t: Temperatures,
    kind: DistortionKind,
) -> Array2<f64> {
    let (n, c) = parts.log_u.dim();
    let mut g = Array2::zeros(y.dim());
    for k in 0..c {
        let mut gk = g.row_mut(k);
        for i in 0..n {
            let log_coef = match kind {
                DistortionKind::SquaredEuclidean => parts.log_w[i] + parts.log_u[[i, k]],
                DistortionKind::LogSquaredEuclidean => {
                    // the clamped region is flat
                    if parts.distortion[[i, k]] < LOG_DISTANCE_FLOOR {
                        continue;
                    }
                    center_log_coefficient(parts.log_w[i], parts.log_u[[i, k]], t, kind)
                        - t.t2() * parts.log_z
                }
            };
            let a = 2.0 * log_coef.exp();
            if a == 0.0 {
                continue;
            }
            for s in 0..y.ncols() {
                gk[s] += a * (y[[k, s]] - x[[i, s]]);
            }
        }
    }
    g
}

/// Analytic gradient of [`reform_objective`] with respect to the centers.
///
/// Squared kind: `g_k = Σ_i w_i u_ik · 2(y_k − x_i)`. Log kind:
/// `g_k = Σ_i w_i^(1−t2) u_ik^(1+t1) · 2(y_k − x_i) / Z^t2`.
pub fn reform_gradient(
    dataset: &Dataset,
    centers: &Centers,
    t: Temperatures,
    kind: DistortionKind,
) -> Result<Array2<f64>> {
    check_dims(dataset, centers)?;
    let parts = raw_log_parts(dataset.points(), centers.view(), t, kind);
    Ok(gradient_from_parts(
        dataset.points(),
        centers.view(),
        &parts,
        t,
        kind,
    ))
}
