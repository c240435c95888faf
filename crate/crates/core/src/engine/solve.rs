use ndarray::{Array2, ArrayView2};

use super::{centers_from_log, gradient_from_parts, log_parts, raw_log_parts, LogParts};
use crate::distortion::distortion_matrix;
use crate::error::{Error, Result};
use crate::optimizer::{self, MinimizeOptions, Status};
use crate::rng::Rng;
use crate::types::{
    random_init, Centers, ClusterState, Dataset, Diagnostics, DistortionKind, ImportanceWeights,
    Membership, Temperatures,
};

#[derive(Debug, Clone)]
pub struct AoOptions {
    pub max_iter: usize,
    /// Stop once `‖Y_{t+1} − Y_t‖_F ≤ eps`.
    pub eps: f64,
    /// Give up after this many consecutive objective increases.
    pub divergence_window: usize,
}

impl Default for AoOptions {
    fn default() -> Self {
        Self {
            max_iter: 300,
            eps: 1e-5,
            divergence_window: 20,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReformOptions {
    pub minimize: MinimizeOptions,
}

impl Default for ReformOptions {
    fn default() -> Self {
        Self {
            minimize: MinimizeOptions {
                tol: 1e-6,
                ..MinimizeOptions::default()
            },
        }
    }
}

impl ReformOptions {
    pub fn with_tol(tol: f64) -> Self {
        let mut o = Self::default();
        o.minimize.tol = tol;
        o
    }
}

/// Snapshot handed to the AO observer after each sweep.
#[derive(Debug)]
pub struct AoIterate<'a> {
    pub iteration: usize,
    /// Memberships and weights computed from the centers that entered the sweep.
    pub membership: &'a Membership,
    pub weights: &'a ImportanceWeights,
    /// Centers leaving the sweep.
    pub centers: &'a Centers,
    pub shift: f64,
    pub objective: f64,
}

fn check_cluster_count(dataset: &Dataset, c: usize) -> Result<()> {
    if c == 0 || c > dataset.n() {
        return Err(Error::InvalidClusterCount {
            clusters: c,
            points: dataset.n(),
        });
    }
    Ok(())
}

fn exp_parts(parts: &LogParts) -> (Membership, ImportanceWeights) {
    (
        Membership::new_unchecked(parts.log_u.mapv(f64::exp)),
        ImportanceWeights::new_unchecked(parts.log_w.mapv(f64::exp)),
    )
}

/// Memberships, weights and reformulated objective at fixed centers.
pub fn evaluate_state(
    dataset: &Dataset,
    centers: &Centers,
    t: Temperatures,
    kind: DistortionKind,
) -> Result<ClusterState> {
    let dm = distortion_matrix(dataset, centers)?;
    let parts = log_parts(&dm, t, kind);
    let (membership, weights) = exp_parts(&parts);
    Ok(ClusterState {
        centers: centers.clone(),
        membership,
        weights,
        objective: t.t2() * parts.log_z,
        iterations: 0,
        converged: false,
        diagnostics: Diagnostics::default(),
    })
}

/// Alternating optimization from random initial centers.
pub fn ao_solve(
    dataset: &Dataset,
    n_clusters: usize,
    t: Temperatures,
    kind: DistortionKind,
    rng: &mut Rng,
    opts: &AoOptions,
) -> Result<ClusterState> {
    check_cluster_count(dataset, n_clusters)?;
    let init = random_init(dataset, n_clusters, rng)?;
    ao_solve_from(dataset, &init.centers, t, kind, opts, None)
}

/// Picard iteration U → W → Y from the given centers.
///
/// Non-convergence is not an error: the returned state carries
/// `converged = false`, and `diagnostics.diverged` is set when the objective
/// rose for `divergence_window` consecutive sweeps.
pub fn ao_solve_from(
    dataset: &Dataset,
    init: &Centers,
    t: Temperatures,
    kind: DistortionKind,
    opts: &AoOptions,
    mut observer: Option<&mut dyn FnMut(&AoIterate<'_>)>,
) -> Result<ClusterState> {
    check_cluster_count(dataset, init.n_clusters())?;
    if init.dim() != dataset.dim() {
        return Err(Error::DimensionMismatch {
            expected: dataset.dim(),
            got: init.dim(),
        });
    }
    let x = dataset.points();
    let mut y: Array2<f64> = init.view().to_owned();
    let mut diagnostics = Diagnostics::default();
    let mut converged = false;
    let mut iterations = 0;
    let mut last_objective = f64::INFINITY;
    let mut rising = 0;

    while iterations < opts.max_iter {
        let parts = raw_log_parts(x, y.view(), t, kind);
        let (y_next, degenerate) =
            centers_from_log(x, parts.log_u.view(), &parts.log_w, t, kind, Some(y.view()));
        diagnostics.degenerate_updates += degenerate.len();
        let shift = frobenius(y_next.view(), y.view());
        y = y_next;
        iterations += 1;

        let objective = t.t2() * raw_log_parts(x, y.view(), t, kind).log_z;
        if let Some(obs) = observer.as_deref_mut() {
            let (u, w) = exp_parts(&parts);
            let centers = Centers::new(y.clone())?;
            obs(&AoIterate {
                iteration: iterations,
                membership: &u,
                weights: &w,
                centers: &centers,
                shift,
                objective,
            });
        }
        diagnostics.final_residual = shift;

        if !shift.is_finite() || !objective.is_finite() {
            diagnostics.note = Some("non-finite iterate".into());
            break;
        }
        if shift <= opts.eps {
            converged = true;
            break;
        }
        if objective > last_objective {
            rising += 1;
            if rising >= opts.divergence_window {
                diagnostics.diverged = true;
                diagnostics.note = Some(format!(
                    "objective increased for {rising} consecutive iterations"
                ));
                break;
            }
        } else {
            rising = 0;
        }
        last_objective = objective;
    }

    let centers = Centers::new(y)?;
    let mut state = evaluate_state(dataset, &centers, t, kind)?;
    state.iterations = iterations;
    state.converged = converged;
    state.diagnostics = diagnostics;
    Ok(state)
}

fn frobenius(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

/// Direct quasi-Newton minimization of the reformulated objective from
/// random initial centers.
pub fn reform_solve(
    dataset: &Dataset,
    n_clusters: usize,
    t: Temperatures,
    kind: DistortionKind,
    rng: &mut Rng,
    opts: &ReformOptions,
) -> Result<ClusterState> {
    check_cluster_count(dataset, n_clusters)?;
    let init = random_init(dataset, n_clusters, rng)?;
    reform_solve_from(dataset, &init.centers, t, kind, opts)
}

pub fn reform_solve_from(
    dataset: &Dataset,
    init: &Centers,
    t: Temperatures,
    kind: DistortionKind,
    opts: &ReformOptions,
) -> Result<ClusterState> {
    check_cluster_count(dataset, init.n_clusters())?;
    if init.dim() != dataset.dim() {
        return Err(Error::DimensionMismatch {
            expected: dataset.dim(),
            got: init.dim(),
        });
    }
    let x = dataset.points();
    let (c, s) = (init.n_clusters(), init.dim());
    let f = |flat: &[f64]| {
        let y = as_matrix(flat, c, s);
        t.t2() * raw_log_parts(x, y, t, kind).log_z
    };
    let g = |flat: &[f64]| {
        let y = as_matrix(flat, c, s);
        let parts = raw_log_parts(x, y, t, kind);
        gradient_from_parts(x, y, &parts, t, kind)
            .into_iter()
            .collect::<Vec<f64>>()
    };
    let result = optimizer::minimize(f, g, &init.to_flat(), &opts.minimize)?;
    let centers = Centers::from_flat(&result.x, c, s)?;
    let mut state = evaluate_state(dataset, &centers, t, kind)?;
    state.iterations = result.iterations;
    state.converged = result.status == Status::Converged;
    state.diagnostics.final_residual = result.grad_norm;
    if result.status != Status::Converged {
        state.diagnostics.note = Some(format!("optimizer stopped: {:?}", result.status));
    }
    Ok(state)
}

fn as_matrix(flat: &[f64], c: usize, s: usize) -> ArrayView2<'_, f64> {
    ArrayView2::from_shape((c, s), flat).expect("flat center vector has C·S entries")
}
