use clap::{Args, ValueEnum};
use itisc::metrics::mixture_kl;
use itisc::synth::{
    sample_mixture, shift_grid_angles, shift_grid_size, shifted_mean_specs, ShiftSpec,
    SCALE_FACTORS,
};
use itisc::{synth::MixtureSpec, Rng};
use rayon::prelude::*;

use super::{emit, eval_wcd, fit_seeds, mean, parse_models, positive_grid};
use crate::data::resolve_spec;
use crate::error::{config, CliResult};
use crate::model::{Fit, ModelSpec};
use crate::report::Report;
use crate::GlobalArgs;

/// Refuse grids with more cells than this unless `--allow-large` is given.
pub const MAX_CELLS: usize = 100_000;

pub const DEFAULT_MODELS: [&str; 4] = ["fuzzy-itisc-r:t1=1,t2=0.1", "kmeans", "fcm:m=2", "hc:ward"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ShiftMode {
    /// Translate every component mean by S in one of `n_angles` directions.
    Mean,
    /// Multiply every component covariance by a factor from the grid.
    Cov,
}

#[derive(Debug, Clone, Args)]
pub struct ShiftArgs {
    /// Base mixture: built-in name or JSON spec (CSV files carry no mixture).
    #[arg(long, short, default_value = "c3-default")]
    pub data: String,
    #[arg(long, value_enum, default_value = "mean")]
    pub mode: ShiftMode,
    /// Shift radii S (mean mode).
    #[arg(long = "s", value_delimiter = ',', default_values_t = [1.5, 2.0, 2.5, 3.0])]
    pub radii: Vec<f64>,
    /// Equally spaced directions per component (mean mode).
    #[arg(long, default_value_t = 5)]
    pub n_angles: usize,
    /// Covariance scale factors (cov mode).
    #[arg(long, value_delimiter = ',', default_values_t = SCALE_FACTORS)]
    pub factors: Vec<f64>,
    /// Models (repeatable); the first is compared against each of the others.
    #[arg(long, short)]
    pub model: Vec<String>,
    /// Added to each seed to pick the base sample the models are fitted on.
    #[arg(long, default_value_t = 0)]
    pub data_seed: u64,
    /// Seed for sampling every shifted dataset.
    #[arg(long, default_value_t = 1000)]
    pub eval_seed: u64,
    #[arg(long, short = 'c')]
    pub clusters: Option<usize>,
    /// Allow grids larger than 100000 cells.
    #[arg(long)]
    pub allow_large: bool,
}

struct Group {
    label: String,
    cells: Vec<MixtureSpec>,
}

struct CellResult {
    kl: f64,
    /// `wcd[seed][model]`.
    wcd: Vec<Vec<f64>>,
}

fn build_groups(a: &ShiftArgs, base: &MixtureSpec) -> CliResult<Vec<Group>> {
    let c = base.len();
    match a.mode {
        ShiftMode::Mean => {
            if a.radii.is_empty() {
                return Err(config("S grid must not be empty"));
            }
            if let Some(s) = a.radii.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
                return Err(config(format!("S values must be non-negative, got {s}")));
            }
            if a.n_angles == 0 {
                return Err(config("--n-angles must be positive"));
            }
            let per =
                shift_grid_size(c, a.n_angles).ok_or_else(|| config("shift grid too large"))?;
            let total = per.saturating_mul(a.radii.len());
            guard(total, a.allow_large)?;
            a.radii
                .iter()
                .map(|&s| {
                    let cells = if s == 0.0 {
                        vec![base.clone()]
                    } else {
                        shifted_mean_specs(base, s, a.n_angles)?
                    };
                    Ok(Group {
                        label: format!("S={s}"),
                        cells,
                    })
                })
                .collect()
        }
        ShiftMode::Cov => {
            positive_grid("factor", &a.factors)?;
            let total = shift_grid_size(c, a.factors.len())
                .ok_or_else(|| config("factor grid too large"))?;
            guard(total, a.allow_large)?;
            let cells = (0..total)
                .map(|cell| {
                    let factors = shift_grid_angles(c, a.factors.len(), cell)
                        .into_iter()
                        .map(|k| a.factors[k])
                        .collect();
                    Ok(ShiftSpec::CovarianceScale { factors }.apply(base)?)
                })
                .collect::<CliResult<Vec<_>>>()?;
            Ok(vec![Group {
                label: "factors".to_string(),
                cells,
            }])
        }
    }
}

fn guard(cells: usize, allow: bool) -> CliResult<()> {
    if cells > MAX_CELLS && !allow {
        return Err(config(format!(
            "the grid has {cells} cells (limit {MAX_CELLS}); pass --allow-large to run it anyway"
        )));
    }
    Ok(())
}

fn evaluate(
    cell: &MixtureSpec,
    base: &MixtureSpec,
    fits: &[Vec<Fit>],
    eval_seed: u64,
) -> CliResult<CellResult> {
    let kl = mixture_kl(&cell.gaussians(), &base.gaussians())?;
    let (data, _) = sample_mixture(cell, &mut Rng::seed_from_u64(eval_seed))?;
    let wcd = fits
        .iter()
        .map(|per_seed| per_seed.iter().map(|f| eval_wcd(f, &data)).collect())
        .collect::<CliResult<Vec<Vec<f64>>>>()?;
    Ok(CellResult { kl, wcd })
}

/// Fits every model on a base sample per seed, then scores each fit by
/// WithinClusterDist on one resample of every shifted mixture. The first
/// model wins a (seed, cell) comparison when its distance is strictly lower.
pub fn run(g: &GlobalArgs, a: &ShiftArgs) -> CliResult<()> {
    let seeds = g.seeds()?;
    let base = resolve_spec(&a.data)?;
    let names: Vec<String> = if a.model.is_empty() {
        DEFAULT_MODELS.iter().map(|s| s.to_string()).collect()
    } else {
        a.model.clone()
    };
    let models: Vec<ModelSpec> = parse_models(&names)?
        .iter()
        .flat_map(ModelSpec::expand)
        .collect();
    if models.len() < 2 {
        return Err(config("shift-exp compares at least two models"));
    }
    let clusters = a.clusters.unwrap_or(base.len());
    let groups = build_groups(a, &base)?;
    let pool = g.pool()?;

    // fits[seed][model]
    let mut fits = Vec::with_capacity(seeds.len());
    for &seed in &seeds {
        let (data, _) = sample_mixture(
            &base,
            &mut Rng::seed_from_u64(a.data_seed.wrapping_add(seed)),
        )?;
        let mut row = Vec::with_capacity(models.len());
        for spec in &models {
            let mut f = fit_seeds(&pool, spec, &data, clusters, &[seed])?;
            row.push(f.remove(0));
        }
        fits.push(row);
    }

    let experiment = match a.mode {
        ShiftMode::Mean => "shift-mean",
        ShiftMode::Cov => "shift-cov",
    };
    let names: Vec<String> = models.iter().map(ModelSpec::to_string).collect();
    let focus = &names[0];
    let mut report = Report::new(experiment, &seeds, g.timestamp());

    for group in &groups {
        let results = pool.install(|| {
            group
                .cells
                .par_iter()
                .map(|cell| evaluate(cell, &base, &fits, a.eval_seed))
                .collect::<Vec<_>>()
        });
        let results = results.into_iter().collect::<CliResult<Vec<_>>>()?;

        for (k, r) in results.iter().enumerate() {
            let param = format!("{};cell={k}", group.label);
            report.push(experiment, "-", param.clone(), "KL", r.kl);
            for (j, name) in names.iter().enumerate() {
                let v = mean(r.wcd.iter().map(|s| s[j]));
                report.push(experiment, name, param.clone(), "WithinClusterDist", v);
            }
            for (j, name) in names.iter().enumerate().skip(1) {
                let d = mean(r.wcd.iter().map(|s| s[j] - s[0]));
                report.push(
                    experiment,
                    &format!("{focus} vs {name}"),
                    param.clone(),
                    "WCD-diff",
                    d,
                );
            }
        }

        for (j, name) in names.iter().enumerate().skip(1) {
            let pair = format!("{focus} vs {name}");
            let diffs: Vec<Vec<f64>> = (0..seeds.len())
                .map(|s| results.iter().map(|r| r.wcd[s][j] - r.wcd[s][0]).collect())
                .collect();
            let ratio = |pred: &dyn Fn(f64) -> bool, ds: &[f64]| {
                ds.iter().filter(|&&d| pred(d)).count() as f64 / ds.len() as f64
            };
            let all: Vec<f64> = diffs.iter().flatten().copied().collect();
            let win = ratio(&|d| d > 0.0, &all);
            report.push(experiment, &pair, group.label.clone(), "win-ratio", win);
            report.push(
                experiment,
                &pair,
                group.label.clone(),
                "loss-ratio",
                ratio(&|d| d < 0.0, &all),
            );
            for (s, ds) in seeds.iter().zip(&diffs) {
                report.push(
                    experiment,
                    &pair,
                    format!("{};seed={s}", group.label),
                    "win-ratio",
                    ratio(&|d| d > 0.0, ds),
                );
            }
            eprintln!(
                "{}: {pair}: win-ratio {win:.3} over {} comparisons",
                group.label,
                all.len()
            );
        }
    }
    emit(g, &report)
}
