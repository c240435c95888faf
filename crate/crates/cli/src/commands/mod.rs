//! One module per subcommand, plus the fitting and metric helpers they share.

pub mod boundary;
pub mod fit;
pub mod gen;
pub mod predict;
pub mod shift;
pub mod sweep;
pub mod trace;

use std::io::Write as _;

use clap::Args;
use itisc::metrics::{m_boundary_dist, weight_kl_uniform, within_cluster_dist, Assignment};
use itisc::{Dataset, ImportanceWeights};
use rayon::prelude::*;

use crate::error::{config, CliResult};
use crate::model::{Fit, ModelSpec};
use crate::report::Report;
use crate::GlobalArgs;

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Seed used when sampling a built-in or JSON mixture.
    #[arg(long, default_value_t = 0)]
    pub data_seed: u64,
    /// Number of clusters (defaults to the number of mixture components).
    #[arg(long, short = 'c')]
    pub clusters: Option<usize>,
}

/// Column name of the M-BoundaryDist metric.
pub fn boundary_metric(m: usize) -> String {
    if m == 1 {
        "MaxBoundaryDist".to_string()
    } else {
        format!("{m}-BoundaryDist")
    }
}

/// Fits every concrete model behind `spec` on `data`. Stochastic models are
/// run once per seed; deterministic ones once, tagged with the first seed.
/// Results come back in (model, seed) order regardless of thread count.
pub fn fit_seeds(
    pool: &rayon::ThreadPool,
    spec: &ModelSpec,
    data: &Dataset,
    clusters: usize,
    seeds: &[u64],
) -> CliResult<Vec<Fit>> {
    let jobs: Vec<(ModelSpec, u64)> = spec
        .expand()
        .into_iter()
        .flat_map(|m| {
            let used = if m.is_stochastic() {
                seeds
            } else {
                &seeds[..1]
            };
            used.iter().map(move |&s| (m, s))
        })
        .collect();
    pool.install(|| {
        jobs.par_iter()
            .map(|(m, s)| m.fit(data, clusters, *s))
            .collect::<Vec<_>>()
    })
    .into_iter()
    .collect()
}

/// M-BoundaryDist of a fit on its own training data, using the labels the
/// model assigned while fitting.
pub fn fit_boundary(fit: &Fit, data: &Dataset, m: usize) -> CliResult<f64> {
    if m > data.n() {
        return Err(config(format!(
            "M = {m} exceeds the {} data points",
            data.n()
        )));
    }
    Ok(m_boundary_dist(data, Assignment::Labels(&fit.labels), &fit.centers, m)?.value)
}

/// WithinClusterDist of a fit on fresh data, assigning points with the
/// model's prediction rule.
pub fn eval_wcd(fit: &Fit, data: &Dataset) -> CliResult<f64> {
    let labels = fit.spec.rule().labels(data, &fit.centers)?;
    Ok(within_cluster_dist(
        data,
        Assignment::Labels(&labels),
        &fit.centers,
    )?)
}

pub fn max_weight(w: &[f64]) -> f64 {
    w.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub fn weight_kl(w: &[f64]) -> CliResult<f64> {
    Ok(weight_kl_uniform(&ImportanceWeights::new(
        w.to_vec().into(),
    )?))
}

pub fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

pub fn parse_models(args: &[String]) -> CliResult<Vec<ModelSpec>> {
    args.iter().map(|s| s.parse()).collect()
}

pub fn emit(g: &GlobalArgs, report: &Report) -> CliResult<()> {
    let mut out = g.writer()?;
    report.write(&mut out, g.format)?;
    out.flush()?;
    Ok(())
}

pub(crate) fn positive_grid(name: &str, grid: &[f64]) -> CliResult<()> {
    if grid.is_empty() {
        return Err(config(format!("{name} grid must not be empty")));
    }
    if let Some(v) = grid.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(config(format!("{name} values must be positive, got {v}")));
    }
    Ok(())
}
