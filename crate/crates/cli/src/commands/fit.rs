use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::PathBuf;

use clap::Args;
use itisc::Centers;
use serde::{Deserialize, Serialize};

use super::{
    boundary_metric, emit, fit_boundary, fit_seeds, max_weight, mean, weight_kl, DataArgs,
};
use crate::data::load;
use crate::error::{config, CliResult};
use crate::model::{Fit, ModelSpec};
use crate::report::Report;
use crate::GlobalArgs;

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Dataset: built-in name, JSON mixture spec, or CSV file.
    #[arg(long, short)]
    pub data: String,
    /// Model, e.g. `fuzzy-itisc-r:t1=1,t2=0.1`, `fcm:m=2`, `kmeans`, `hc:ward`.
    #[arg(long, short, default_value = "fuzzy-itisc-r")]
    pub model: String,
    #[command(flatten)]
    pub data_args: DataArgs,
    /// Boundary sizes M summarized across seeds.
    #[arg(long, value_delimiter = ',', default_value = "1,10")]
    pub m_list: Vec<usize>,
    /// Store the N×C membership matrix and importance weights of every run.
    #[arg(long)]
    pub store_membership: bool,
    /// Also write the metric report (in --format) to this file.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

/// A fitted model as persisted by `fit` and consumed by `predict`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: String,
    pub data: String,
    pub data_seed: u64,
    pub clusters: usize,
    pub dim: usize,
    pub model: String,
    /// How new points are assigned: `nearest-center` or `argmax-membership`.
    pub rule: String,
    pub seeds: Vec<u64>,
    pub runs: Vec<RunRecord>,
    /// Across-run means.
    pub metrics: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// Concrete model of this run (differs from the file's model for `hc:all`).
    pub model: String,
    pub seed: u64,
    /// Row-major `C × S` centers.
    pub centers: Vec<Vec<f64>>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub diagnostics: DiagnosticsRecord,
    pub metrics: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub membership: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub degenerate_updates: usize,
    pub diverged: bool,
    pub final_residual: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl RunRecord {
    pub fn spec(&self) -> CliResult<ModelSpec> {
        self.model.parse()
    }

    pub fn centers(&self) -> CliResult<Centers> {
        Ok(Centers::from_rows(&self.centers)?)
    }
}

impl ModelFile {
    pub fn read(path: &std::path::Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config(format!("cannot read model `{}`: {e}", path.display())))?;
        let file: ModelFile = serde_json::from_str(&text)?;
        if file.runs.is_empty() {
            return Err(config(format!("model `{}` has no runs", path.display())));
        }
        Ok(file)
    }
}

/// Per-run metrics: objective, M-BoundaryDist for each M, and weight
/// statistics for models that produce weights.
pub fn run_metrics(
    fit: &Fit,
    data: &itisc::Dataset,
    m_list: &[usize],
) -> CliResult<BTreeMap<String, f64>> {
    let mut m = BTreeMap::new();
    m.insert("objective".to_string(), fit.objective);
    m.insert(
        "converged".to_string(),
        if fit.converged { 1.0 } else { 0.0 },
    );
    for &k in m_list {
        m.insert(boundary_metric(k), fit_boundary(fit, data, k)?);
    }
    if let Some(w) = &fit.weights {
        m.insert("max-weight".to_string(), max_weight(w));
        m.insert("weight-kl".to_string(), weight_kl(w)?);
    }
    Ok(m)
}

pub fn run(g: &GlobalArgs, a: &FitArgs) -> CliResult<()> {
    let seeds = g.seeds()?;
    let spec: ModelSpec = a.model.parse()?;
    if a.m_list.contains(&0) {
        return Err(config("M values must be positive"));
    }
    let loaded = load(&a.data, a.data_args.data_seed)?;
    let clusters = loaded.clusters(a.data_args.clusters)?;
    let pool = g.pool()?;
    let fits = fit_seeds(&pool, &spec, &loaded.dataset, clusters, &seeds)?;

    let mut runs = Vec::with_capacity(fits.len());
    for fit in &fits {
        let metrics = run_metrics(fit, &loaded.dataset, &a.m_list)?;
        runs.push(RunRecord {
            model: fit.spec.to_string(),
            seed: fit.seed,
            centers: fit
                .centers
                .view()
                .outer_iter()
                .map(|r| r.to_vec())
                .collect(),
            objective: fit.objective,
            iterations: fit.iterations,
            converged: fit.converged,
            diagnostics: DiagnosticsRecord {
                degenerate_updates: fit.diagnostics.degenerate_updates,
                diverged: fit.diagnostics.diverged,
                final_residual: fit.diagnostics.final_residual,
                note: fit.diagnostics.note.clone(),
            },
            metrics,
            membership: a
                .store_membership
                .then_some(fit.membership.as_ref())
                .flatten()
                .map(|u| u.view().outer_iter().map(|r| r.to_vec()).collect()),
            weights: a.store_membership.then(|| fit.weights.clone()).flatten(),
        });
        if !fit.converged {
            eprintln!(
                "warning: {} (seed {}) did not converge: {}",
                fit.spec,
                fit.seed,
                fit.diagnostics.note.as_deref().unwrap_or("iteration limit")
            );
        }
    }

    let mut metrics = BTreeMap::new();
    for key in runs[0].metrics.keys() {
        metrics.insert(key.clone(), mean(runs.iter().map(|r| r.metrics[key])));
    }

    let file = ModelFile {
        version: crate::VERSION.to_string(),
        data: a.data.clone(),
        data_seed: a.data_args.data_seed,
        clusters,
        dim: loaded.dataset.dim(),
        model: spec.to_string(),
        rule: spec.rule().name().to_string(),
        seeds: seeds.clone(),
        runs,
        metrics,
        timestamp: g.timestamp(),
    };

    let mut out = g.writer()?;
    serde_json::to_writer_pretty(&mut out, &file)?;
    writeln!(out)?;
    out.flush()?;

    if let Some(path) = &a.report {
        let mut report = Report::new("fit", &seeds, file.timestamp);
        let param = format!("data={};C={clusters}", a.data);
        for r in &file.runs {
            for (k, v) in &r.metrics {
                report.push("fit", &r.model, format!("{param};seed={}", r.seed), k, *v);
            }
        }
        for (k, v) in &file.metrics {
            report.push("fit", &file.model, format!("{param};mean"), k, *v);
        }
        let report_args = GlobalArgs {
            out: Some(path.clone()),
            ..g.clone()
        };
        emit(&report_args, &report)?;
    }
    Ok(())
}
