use std::path::PathBuf;

use clap::Args;
use itisc::metrics::{m_boundary_dist, Assignment};

use super::fit::ModelFile;
use super::{boundary_metric, emit, fit_boundary, fit_seeds, mean, parse_models, DataArgs};
use crate::data::load;
use crate::error::{config, CliResult};
use crate::report::Report;
use crate::GlobalArgs;

pub const DEFAULT_MODELS: [&str; 5] = [
    "kmeans",
    "fcm:m=2",
    "hc:all",
    "fuzzy-itisc-r:t1=1,t2=1",
    "fuzzy-itisc-r:t1=1,t2=0.1",
];

#[derive(Debug, Clone, Args)]
pub struct BoundaryArgs {
    /// Datasets (repeatable): built-in names, JSON mixture specs, or CSV files.
    #[arg(long, short, required = true)]
    pub data: Vec<String>,
    /// Models fitted inline (repeatable). Defaults to k-means, FCM, all
    /// hierarchical linkages, and Fuzzy-ITISC at T2 = 1 and 0.1.
    #[arg(long, short)]
    pub model: Vec<String>,
    /// Previously fitted models to evaluate (repeatable).
    #[arg(long)]
    pub model_file: Vec<PathBuf>,
    #[command(flatten)]
    pub data_args: DataArgs,
    #[arg(long, value_delimiter = ',', default_value = "1,10")]
    pub m_list: Vec<usize>,
}

/// One row per (model, dataset, M): M-BoundaryDist averaged over seeds (and
/// over linkages for `hc:all`).
pub fn run(g: &GlobalArgs, a: &BoundaryArgs) -> CliResult<()> {
    let seeds = g.seeds()?;
    if a.m_list.is_empty() || a.m_list.contains(&0) {
        return Err(config("--m-list needs positive values"));
    }
    let names: Vec<String> = if a.model.is_empty() && a.model_file.is_empty() {
        DEFAULT_MODELS.iter().map(|s| s.to_string()).collect()
    } else {
        a.model.clone()
    };
    let models = parse_models(&names)?;
    let files = a
        .model_file
        .iter()
        .map(|p| ModelFile::read(p).map(|f| (p, f)))
        .collect::<CliResult<Vec<_>>>()?;
    let pool = g.pool()?;
    let mut report = Report::new("boundary", &seeds, g.timestamp());

    for name in &a.data {
        let loaded = load(name, a.data_args.data_seed)?;
        let data = &loaded.dataset;
        for spec in &models {
            let clusters = loaded.clusters(a.data_args.clusters)?;
            let param = format!("data={name};C={clusters}");
            let fits = fit_seeds(&pool, spec, data, clusters, &seeds)?;
            let algo = spec.to_string();
            for &m in &a.m_list {
                let values = fits
                    .iter()
                    .map(|f| fit_boundary(f, data, m))
                    .collect::<CliResult<Vec<_>>>()?;
                report.push(
                    "boundary",
                    &algo,
                    param.clone(),
                    &boundary_metric(m),
                    mean(values),
                );
            }
            let converged = mean(fits.iter().map(|f| f64::from(u8::from(f.converged))));
            report.push("boundary", &algo, param.clone(), "converged", converged);
        }
        for (path, file) in &files {
            let param = format!("data={name};C={}", file.clusters);
            let algo = format!("{}@{}", file.model, path.display());
            for &m in &a.m_list {
                let mut values = Vec::with_capacity(file.runs.len());
                for run in &file.runs {
                    let centers = run.centers()?;
                    let labels = run.spec()?.rule().labels(data, &centers)?;
                    values.push(
                        m_boundary_dist(data, Assignment::Labels(&labels), &centers, m)?.value,
                    );
                }
                report.push(
                    "boundary",
                    &algo,
                    param.clone(),
                    &boundary_metric(m),
                    mean(values),
                );
            }
        }
    }
    emit(g, &report)
}
