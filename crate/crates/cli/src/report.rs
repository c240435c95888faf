//! Long-format experiment reports: `experiment,algorithm,param,metric,value`.

use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{config, CliResult};

pub const HEADER: [&str; 5] = ["experiment", "algorithm", "param", "metric", "value"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub experiment: String,
    pub algorithm: String,
    pub param: String,
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Metadata {
    pub version: String,
    pub command: String,
    pub seeds: Vec<u64>,
    /// Seconds since the Unix epoch; only recorded on request so that
    /// repeated runs stay byte-identical.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Report {
    pub metadata: Metadata,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Report {
    pub fn new(command: &str, seeds: &[u64], timestamp: Option<u64>) -> Self {
        Self {
            metadata: Metadata {
                version: crate::VERSION.to_string(),
                command: command.to_string(),
                seeds: seeds.to_vec(),
                timestamp,
            },
            rows: Vec::new(),
        }
    }

    pub fn push(
        &mut self,
        experiment: &str,
        algorithm: &str,
        param: impl Into<String>,
        metric: &str,
        value: f64,
    ) {
        self.rows.push(Row {
            experiment: experiment.to_string(),
            algorithm: algorithm.to_string(),
            param: param.into(),
            metric: metric.to_string(),
            value,
        });
    }

    /// First value matching all three keys.
    pub fn value(&self, algorithm: &str, param: &str, metric: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.algorithm == algorithm && r.param == param && r.metric == metric)
            .map(|r| r.value)
    }

    pub fn write<W: Write>(&self, mut out: W, format: Format) -> CliResult<()> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut out, self)?;
                writeln!(out)?;
            }
            Format::Csv => {
                let m = &self.metadata;
                writeln!(out, "# version={}", m.version)?;
                writeln!(out, "# command={}", m.command)?;
                let seeds: Vec<String> = m.seeds.iter().map(u64::to_string).collect();
                writeln!(out, "# seeds={}", seeds.join(","))?;
                if let Some(t) = m.timestamp {
                    writeln!(out, "# timestamp={t}")?;
                }
                let mut w = csv::Writer::from_writer(&mut out);
                w.write_record(HEADER)?;
                for r in &self.rows {
                    w.write_record([
                        r.experiment.as_str(),
                        r.algorithm.as_str(),
                        r.param.as_str(),
                        r.metric.as_str(),
                        &format!("{:?}", r.value),
                    ])?;
                }
                w.flush()?;
            }
        }
        Ok(())
    }

    pub fn to_string(&self, format: Format) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf, format)
            .expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("reports are UTF-8")
    }

    pub fn read<R: Read>(input: R, format: Format) -> CliResult<Self> {
        match format {
            Format::Json => Ok(serde_json::from_reader(input)?),
            Format::Csv => {
                let mut reader = BufReader::new(input);
                let mut metadata = Metadata::default();
                let mut body = String::new();
                let mut line = String::new();
                while reader.read_line(&mut line)? > 0 {
                    if let Some(meta) = line.strip_prefix("# ") {
                        let (k, v) = meta.trim_end().split_once('=').ok_or_else(|| {
                            config(format!("bad metadata line `{}`", line.trim_end()))
                        })?;
                        match k {
                            "version" => metadata.version = v.to_string(),
                            "command" => metadata.command = v.to_string(),
                            "seeds" if v.is_empty() => {}
                            "seeds" => {
                                metadata.seeds = v
                                    .split(',')
                                    .map(|s| {
                                        s.parse().map_err(|_| config(format!("bad seed `{s}`")))
                                    })
                                    .collect::<CliResult<_>>()?
                            }
                            "timestamp" => {
                                metadata.timestamp = Some(
                                    v.parse()
                                        .map_err(|_| config(format!("bad timestamp `{v}`")))?,
                                )
                            }
                            _ => {}
                        }
                    } else {
                        body.push_str(&line);
                    }
                    line.clear();
                }
                let mut r = csv::Reader::from_reader(body.as_bytes());
                let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
                if header != HEADER {
                    return Err(config(format!("unexpected report header {header:?}")));
                }
                let rows = r
                    .records()
                    .map(|rec| {
                        let rec = rec?;
                        let value = rec[4]
                            .parse()
                            .map_err(|_| config(format!("bad value `{}`", &rec[4])))?;
                        Ok(Row {
                            experiment: rec[0].to_string(),
                            algorithm: rec[1].to_string(),
                            param: rec[2].to_string(),
                            metric: rec[3].to_string(),
                            value,
                        })
                    })
                    .collect::<CliResult<Vec<_>>>()?;
                Ok(Report { metadata, rows })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new("boundary", &[0, 1, 2, 3], None);
        r.push(
            "boundary",
            "fuzzy-itisc-r:t1=1,t2=0.1",
            "data=c3-default;C=3;M=1",
            "MaxBoundaryDist",
            1.7234567890123457,
        );
        r.push(
            "boundary",
            "kmeans:n_init=10",
            "data=\"odd\";C=3",
            "objective",
            1e-300,
        );
        r.push("t2-sweep", "hc:all", "", "x", f64::NAN.max(0.1));
        r.push("t2-sweep", "hc:all", "", "neg", -0.0);
        r
    }

    #[test]
    fn csv_round_trip() {
        let r = sample();
        let text = r.to_string(Format::Csv);
        assert!(text.contains("experiment,algorithm,param,metric,value"));
        assert_eq!(Report::read(text.as_bytes(), Format::Csv).unwrap(), r);
        let mut stamped = r.clone();
        stamped.metadata.timestamp = Some(1_700_000_000);
        let text = stamped.to_string(Format::Csv);
        assert_eq!(Report::read(text.as_bytes(), Format::Csv).unwrap(), stamped);
    }

    #[test]
    fn json_round_trip() {
        let r = sample();
        let text = r.to_string(Format::Json);
        assert_eq!(Report::read(text.as_bytes(), Format::Json).unwrap(), r);
    }

    #[test]
    fn rejects_foreign_csv() {
        assert!(Report::read("a,b\n1,2\n".as_bytes(), Format::Csv).is_err());
    }
}
