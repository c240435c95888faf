//! Resolving `--data` arguments: a built-in mixture name, a JSON mixture
//! spec, or a dataset CSV.

use std::path::Path;

use itisc::io::read_dataset_file;
use itisc::metrics::GaussianSpec;
use itisc::synth::{builtin_spec, sample_mixture, MixtureComponent, MixtureSpec, BUILTIN_NAMES};
use itisc::{Dataset, Rng};
use serde::{Deserialize, Serialize};

use crate::error::{config, CliResult};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComponentFile {
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpecFile {
    pub components: Vec<ComponentFile>,
}

impl SpecFile {
    pub fn into_spec(self) -> CliResult<MixtureSpec> {
        let components = self
            .components
            .into_iter()
            .map(|c| {
                Ok(MixtureComponent {
                    gaussian: GaussianSpec::new(c.mean, c.cov)?,
                    count: c.count,
                })
            })
            .collect::<CliResult<Vec<_>>>()?;
        Ok(MixtureSpec::new(components)?)
    }
}

#[derive(Debug, Clone)]
pub struct Loaded {
    /// The `--data` argument as given.
    pub name: String,
    pub dataset: Dataset,
    pub components: Option<Vec<usize>>,
    /// The generating mixture, when the data was sampled here.
    pub spec: Option<MixtureSpec>,
}

impl Loaded {
    /// Cluster count implied by the data: number of mixture components or
    /// distinct component labels.
    pub fn implied_clusters(&self) -> Option<usize> {
        if let Some(spec) = &self.spec {
            return Some(spec.len());
        }
        self.components
            .as_ref()
            .and_then(|c| c.iter().max())
            .map(|m| m + 1)
    }

    pub fn clusters(&self, explicit: Option<usize>) -> CliResult<usize> {
        explicit.or_else(|| self.implied_clusters()).ok_or_else(|| {
            config(format!(
                "cannot infer the number of clusters for `{}`; pass --clusters",
                self.name
            ))
        })
    }
}

pub fn resolve_spec(arg: &str) -> CliResult<MixtureSpec> {
    if BUILTIN_NAMES.contains(&arg) || arg == "c3" {
        return Ok(builtin_spec(arg)?);
    }
    let path = Path::new(arg);
    if path.extension().is_some_and(|e| e == "json") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config(format!("cannot read spec `{arg}`: {e}")))?;
        let file: SpecFile = serde_json::from_str(&text)?;
        return file.into_spec();
    }
    Err(config(format!(
        "`{arg}` is neither a built-in dataset ({}) nor a .json mixture spec",
        BUILTIN_NAMES.join(", ")
    )))
}

/// Loads or generates the dataset named by `arg`. Mixtures are sampled with
/// `data_seed`.
pub fn load(arg: &str, data_seed: u64) -> CliResult<Loaded> {
    let is_csv = Path::new(arg).extension().is_some_and(|e| e == "csv");
    if is_csv {
        let d = read_dataset_file(Path::new(arg))
            .map_err(|e| config(format!("cannot read `{arg}`: {e}")))?;
        return Ok(Loaded {
            name: arg.to_string(),
            dataset: d.dataset,
            components: d.components,
            spec: None,
        });
    }
    let spec = resolve_spec(arg)?;
    let (dataset, components) = sample_mixture(&spec, &mut Rng::seed_from_u64(data_seed))?;
    Ok(Loaded {
        name: arg.to_string(),
        dataset,
        components: Some(components),
        spec: Some(spec),
    })
}
