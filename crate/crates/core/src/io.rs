//! Dataset CSV files: a header `x1,…,xS`, one row per point and an optional
//! trailing `component` column.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::Dataset;

pub const COMPONENT_COLUMN: &str = "component";

/// A dataset together with the component labels it was generated from, if known.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub dataset: Dataset,
    pub components: Option<Vec<usize>>,
}

pub fn write_dataset<W: Write>(
    writer: W,
    dataset: &Dataset,
    components: Option<&[usize]>,
) -> Result<()> {
    if let Some(c) = components {
        if c.len() != dataset.n() {
            return Err(Error::LengthMismatch {
                left: dataset.n(),
                right: c.len(),
            });
        }
    }
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (1..=dataset.dim()).map(|s| format!("x{s}")).collect();
    if components.is_some() {
        header.push(COMPONENT_COLUMN.into());
    }
    w.write_record(&header)?;
    for i in 0..dataset.n() {
        let mut rec: Vec<String> = dataset.row(i).iter().map(|v| format!("{v:?}")).collect();
        if let Some(c) = components {
            rec.push(c[i].to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset<R: Read>(reader: R) -> Result<LabeledDataset> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers()?.clone();
    let has_component = header.iter().next_back() == Some(COMPONENT_COLUMN);
    let dim = header.len() - usize::from(has_component);
    for (s, name) in header.iter().take(dim).enumerate() {
        if name != format!("x{}", s + 1) {
            return Err(Error::Parse(format!(
                "expected column `x{}`, found `{name}`",
                s + 1
            )));
        }
    }
    if dim == 0 {
        return Err(Error::Parse("no coordinate columns".into()));
    }
    let mut rows = Vec::new();
    let mut components = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let parse = |s: usize| -> Result<f64> {
            rec[s]
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("row {}, column x{}: {e}", line + 1, s + 1)))
        };
        rows.push((0..dim).map(parse).collect::<Result<Vec<f64>>>()?);
        if has_component {
            let c = rec[dim].trim().parse::<usize>().map_err(|e| {
                Error::Parse(format!("row {}, column {COMPONENT_COLUMN}: {e}", line + 1))
            })?;
            components.push(c);
        }
    }
    Ok(LabeledDataset {
        dataset: Dataset::from_rows(&rows)?,
        components: has_component.then_some(components),
    })
}

pub fn read_dataset_file(path: &Path) -> Result<LabeledDataset> {
    read_dataset(File::open(path)?)
}

pub fn write_dataset_file(
    path: &Path,
    dataset: &Dataset,
    components: Option<&[usize]>,
) -> Result<()> {
    write_dataset(File::create(path)?, dataset, components)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn round_trip() {
        let d = Dataset::new(array![[0.1, -2.5], [1e-17, 3.0], [7.0, 0.3333333333333333]]).unwrap();
        for comps in [None, Some(vec![0, 1, 1])] {
            let mut buf = Vec::new();
            write_dataset(&mut buf, &d, comps.as_deref()).unwrap();
            let back = read_dataset(&buf[..]).unwrap();
            assert_eq!(back.dataset, d);
            assert_eq!(back.components, comps);
        }
    }

    #[test]
    fn header_and_values_are_checked() {
        assert!(read_dataset("a,b\n1,2\n".as_bytes()).is_err());
        assert!(read_dataset("x1,x2\n1,zz\n".as_bytes()).is_err());
        assert!(read_dataset("x1,x2\n1,NaN\n".as_bytes()).is_err());
        assert!(read_dataset("x1\n".as_bytes()).is_err());
        let ok = read_dataset("x1,component\n 1.5,2\n".as_bytes()).unwrap();
        assert_eq!(ok.components, Some(vec![2]));
    }
}
