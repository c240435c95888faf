use clap::Args;
use itisc::engine::{ao_solve_from, AoIterate, AoOptions};
use itisc::metrics::weight_kl_uniform;
use itisc::{random_init, ImportanceWeights, Rng, Temperatures};

use super::{emit, DataArgs};
use crate::data::load;
use crate::error::{config, CliResult};
use crate::model::{ModelSpec, Solver};
use crate::report::Report;
use crate::GlobalArgs;

#[derive(Debug, Clone, Args)]
pub struct TraceArgs {
    #[arg(long, short, default_value = "c3-default")]
    pub data: String,
    /// ITISC variant; always solved by alternating optimization.
    #[arg(long, short, default_value = "fuzzy-itisc-ao:t1=1,t2=0.7")]
    pub model: String,
    #[command(flatten)]
    pub data_args: DataArgs,
    /// Number of largest weights listed per iteration.
    #[arg(long, default_value_t = 10)]
    pub top_k: usize,
    /// Also emit every point's weight at every iteration.
    #[arg(long)]
    pub full: bool,
    #[arg(long, default_value_t = 300)]
    pub max_iter: usize,
}

fn weight_rows(
    report: &mut Report,
    algo: &str,
    p: &str,
    w: &ImportanceWeights,
    top_k: usize,
    full: bool,
) {
    let v = w.view();
    report.push("weights-trace", algo, p, "max-weight", w.max());
    report.push("weights-trace", algo, p, "weight-kl", weight_kl_uniform(w));
    report.push("weights-trace", algo, p, "weight-sum", v.sum());
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&i, &j| v[j].total_cmp(&v[i]));
    for (rank, &i) in order.iter().take(top_k).enumerate() {
        let q = format!("{p};rank={}", rank + 1);
        report.push("weights-trace", algo, q.clone(), "top-index", i as f64);
        report.push("weights-trace", algo, q, "top-weight", v[i]);
    }
    if full {
        for (i, &x) in v.iter().enumerate() {
            report.push("weights-trace", algo, format!("{p};point={i}"), "weight", x);
        }
    }
}

/// Weight snapshots per seed. `iter=1` is the sampled starting weights and
/// `iter=k+1` the weights computed in AO sweep `k`, each with peak weight, KL
/// to uniform, sum and the `top_k` heaviest points; sweep rows also carry
/// the objective and center shift.
pub fn run(g: &GlobalArgs, a: &TraceArgs) -> CliResult<()> {
    let seeds = g.seeds()?;
    let spec: ModelSpec = a.model.parse()?;
    let ModelSpec::Itisc { kind, t1, t2, .. } = spec else {
        return Err(config(format!(
            "weights-trace needs an ITISC model, got `{spec}`"
        )));
    };
    let t = Temperatures::new(t1, t2)?;
    let algo = ModelSpec::Itisc {
        kind,
        solver: Solver::Ao,
        t1,
        t2,
    }
    .to_string();
    let loaded = load(&a.data, a.data_args.data_seed)?;
    let data = &loaded.dataset;
    let clusters = loaded.clusters(a.data_args.clusters)?;
    let top_k = a.top_k.min(data.n());
    let opts = AoOptions {
        max_iter: a.max_iter,
        ..AoOptions::default()
    };
    let mut report = Report::new("weights-trace", &seeds, g.timestamp());

    for &seed in &seeds {
        let init = random_init(data, clusters, &mut Rng::seed_from_u64(seed))?;
        let prefix = format!("data={};seed={seed}", a.data);
        weight_rows(
            &mut report,
            &algo,
            &format!("{prefix};iter=1"),
            &init.weights,
            top_k,
            a.full,
        );
        let mut snapshot = |it: &AoIterate<'_>| {
            let p = format!("{prefix};iter={}", it.iteration + 1);
            weight_rows(&mut report, &algo, &p, it.weights, top_k, a.full);
            report.push("weights-trace", &algo, p.clone(), "objective", it.objective);
            report.push("weights-trace", &algo, p, "shift", it.shift);
        };
        let state = ao_solve_from(data, &init.centers, t, kind, &opts, Some(&mut snapshot))?;
        let p = format!("{prefix};final");
        report.push(
            "weights-trace",
            &algo,
            p.clone(),
            "iterations",
            state.iterations as f64,
        );
        report.push(
            "weights-trace",
            &algo,
            p.clone(),
            "converged",
            f64::from(u8::from(state.converged)),
        );
        report.push(
            "weights-trace",
            &algo,
            p.clone(),
            "max-weight",
            state.weights.max(),
        );
        report.push(
            "weights-trace",
            &algo,
            p,
            "weight-kl",
            weight_kl_uniform(&state.weights),
        );
    }
    emit(g, &report)
}
