use std::io::Write as _;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use super::fit::ModelFile;
use crate::data::load;
use crate::error::{config, CliResult};
use crate::report::Format;
use crate::GlobalArgs;

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    /// Model JSON written by `fit`.
    #[arg(long)]
    pub model_file: PathBuf,
    /// Rows to assign: built-in name, JSON mixture spec, or CSV file.
    #[arg(long, short)]
    pub data: String,
    #[arg(long, default_value_t = 0)]
    pub data_seed: u64,
    /// Which stored run to use.
    #[arg(long, default_value_t = 0)]
    pub run: usize,
}

#[derive(Debug, Serialize)]
struct Prediction {
    model: String,
    seed: u64,
    rule: String,
    labels: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    membership: Option<Vec<Vec<f64>>>,
}

/// Assigns each row to a cluster with the model's own rule: argmax
/// membership for soft models, nearest center otherwise. Soft models also
/// report their memberships.
pub fn run(g: &GlobalArgs, a: &PredictArgs) -> CliResult<()> {
    let file = ModelFile::read(&a.model_file)?;
    let record = file.runs.get(a.run).ok_or_else(|| {
        config(format!(
            "run {} out of range; the model has {} runs",
            a.run,
            file.runs.len()
        ))
    })?;
    let spec = record.spec()?;
    let centers = record.centers()?;
    let data = load(&a.data, a.data_seed)?.dataset;
    if data.dim() != centers.dim() {
        return Err(config(format!(
            "data has {} columns but the model was fitted on {}",
            data.dim(),
            centers.dim()
        )));
    }
    let rule = spec.rule();
    let membership = rule.membership(&data, &centers)?;
    let labels = rule.labels(&data, &centers)?;

    let mut out = g.writer()?;
    match g.format {
        Format::Json => {
            let p = Prediction {
                model: record.model.clone(),
                seed: record.seed,
                rule: rule.name().to_string(),
                labels,
                membership: membership.map(|u| u.view().outer_iter().map(|r| r.to_vec()).collect()),
            };
            serde_json::to_writer_pretty(&mut out, &p)?;
            writeln!(out)?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            let mut header = vec!["point".to_string(), "cluster".to_string()];
            if membership.is_some() {
                header.extend((1..=centers.n_clusters()).map(|k| format!("u{k}")));
            }
            w.write_record(&header)?;
            for (i, &l) in labels.iter().enumerate() {
                let mut rec = vec![i.to_string(), l.to_string()];
                if let Some(u) = &membership {
                    rec.extend(u.view().row(i).iter().map(|v| format!("{v:?}")));
                }
                w.write_record(&rec)?;
            }
            w.flush()?;
        }
    }
    out.flush()?;
    Ok(())
}
