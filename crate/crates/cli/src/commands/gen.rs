use std::io::Write as _;

use clap::Args;
use itisc::io::write_dataset;
use itisc::synth::sample_mixture;
use itisc::Rng;

use crate::data::resolve_spec;
use crate::error::{config, CliResult};
use crate::GlobalArgs;

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    /// Built-in dataset name (c2, c3-default, c4, c6, extreme) or a JSON mixture spec.
    pub name: String,
}

/// Samples the mixture with the (single) seed and writes the dataset CSV,
/// including the generating component of every row.
pub fn run(g: &GlobalArgs, a: &GenArgs) -> CliResult<()> {
    let seeds = g.seeds()?;
    if g.seeds.as_ref().is_some_and(|s| s.len() > 1) {
        return Err(config("gen takes a single --seed"));
    }
    let seed = seeds[0];
    let spec = resolve_spec(&a.name)?;
    let (dataset, components) = sample_mixture(&spec, &mut Rng::seed_from_u64(seed))?;
    let mut out = g.writer()?;
    write_dataset(&mut out, &dataset, Some(&components))?;
    out.flush()?;

    let counts: Vec<String> = spec
        .components
        .iter()
        .map(|c| c.count.to_string())
        .collect();
    eprintln!(
        "{}: N={} S={} counts={} seed={seed}",
        a.name,
        dataset.n(),
        dataset.dim(),
        counts.join(",")
    );
    Ok(())
}
