use clap::Args;

use super::{
    boundary_metric, emit, fit_boundary, fit_seeds, max_weight, mean, positive_grid, weight_kl,
    DataArgs,
};
use crate::data::load;
use crate::error::{config, CliResult};
use crate::model::ModelSpec;
use crate::report::Report;
use crate::GlobalArgs;

pub const DEFAULT_T2_GRID: [f64; 12] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.5, 2.0];

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Datasets (repeatable).
    #[arg(long, short, default_values_t = ["c2".to_string(), "c3-default".to_string(), "c4".to_string(), "c6".to_string()])]
    pub data: Vec<String>,
    /// ITISC variant; its T2 is replaced by each grid value.
    #[arg(long, short, default_value = "fuzzy-itisc-r:t1=1")]
    pub model: String,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_T2_GRID)]
    pub t2: Vec<f64>,
    #[command(flatten)]
    pub data_args: DataArgs,
}

/// One set of rows per (dataset, T2): MaxBoundaryDist, 10-BoundaryDist,
/// peak importance weight and weight KL to uniform, all averaged over seeds.
pub fn run(g: &GlobalArgs, a: &SweepArgs) -> CliResult<()> {
    let seeds = g.seeds()?;
    positive_grid("T2", &a.t2)?;
    let base: ModelSpec = a.model.parse()?;
    let ModelSpec::Itisc {
        kind, solver, t1, ..
    } = base
    else {
        return Err(config(format!(
            "t2-sweep needs an ITISC model, got `{base}`"
        )));
    };
    let algo = base.to_string();
    let algo = algo
        .split_once(",t2=")
        .map_or(algo.as_str(), |(a, _)| a)
        .to_string();
    let pool = g.pool()?;
    let mut report = Report::new("t2-sweep", &seeds, g.timestamp());

    for name in &a.data {
        let loaded = load(name, a.data_args.data_seed)?;
        let data = &loaded.dataset;
        let clusters = loaded.clusters(a.data_args.clusters)?;
        for &t2 in &a.t2 {
            let spec = ModelSpec::Itisc {
                kind,
                solver,
                t1,
                t2,
            };
            let fits = fit_seeds(&pool, &spec, data, clusters, &seeds)?;
            let param = format!("data={name};C={clusters};T2={t2}");
            for m in [1, 10.min(data.n())] {
                let v = fits
                    .iter()
                    .map(|f| fit_boundary(f, data, m))
                    .collect::<CliResult<Vec<_>>>()?;
                report.push(
                    "t2-sweep",
                    &algo,
                    param.clone(),
                    &boundary_metric(m),
                    mean(v),
                );
            }
            let weights: Vec<&Vec<f64>> = fits.iter().filter_map(|f| f.weights.as_ref()).collect();
            report.push(
                "t2-sweep",
                &algo,
                param.clone(),
                "max-weight",
                mean(weights.iter().map(|w| max_weight(w))),
            );
            let kls = weights
                .iter()
                .map(|w| weight_kl(w))
                .collect::<CliResult<Vec<_>>>()?;
            report.push("t2-sweep", &algo, param.clone(), "weight-kl", mean(kls));
            let converged = mean(fits.iter().map(|f| f64::from(u8::from(f.converged))));
            report.push("t2-sweep", &algo, param, "converged", converged);
        }
    }
    emit(g, &report)
}
