use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use anyhow::Context;
use forrlab_core::Estimate;
use serde::Serialize;

/// Configuration shared by every record of one run.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub experiment: &'static str,
    pub n: usize,
    pub eps: f64,
    pub seed: u64,
    pub samples: u64,
    pub copies: u64,
    pub mode: String,
}

/// One CSV row: the run configuration, the metric and its verdict.
/// `standard_error` reads `exact` for known constants.
#[derive(Clone, Debug, Serialize)]
pub struct ResultRecord {
    pub experiment: &'static str,
    pub n: usize,
    pub eps: f64,
    pub seed: u64,
    pub samples: u64,
    pub copies: u64,
    pub mode: String,
    pub metric: String,
    pub estimate: f64,
    pub standard_error: String,
    pub bound: Option<f64>,
    pub pass: bool,
    pub low_power: bool,
}

impl RunConfig {
    pub fn record(
        &self,
        metric: impl Into<String>,
        value: Estimate,
        bound: Option<f64>,
        pass: bool,
    ) -> ResultRecord {
        ResultRecord {
            experiment: self.experiment,
            n: self.n,
            eps: self.eps,
            seed: self.seed,
            samples: self.samples,
            copies: self.copies,
            mode: self.mode.clone(),
            metric: metric.into(),
            estimate: value.estimate,
            standard_error: if value.is_exact() && value.samples == 0 {
                "exact".to_string()
            } else {
                value.standard_error.to_string()
            },
            bound,
            pass,
            low_power: false,
        }
    }
}

/// Writes to `path`, or stdout when absent.
pub fn sink(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}

pub fn write_csv(records: &[ResultRecord], path: Option<&Path>) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(sink(path)?);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_lines(lines: &[String], path: Option<&Path>) -> anyhow::Result<()> {
    let mut w = sink(path)?;
    for line in lines {
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}
