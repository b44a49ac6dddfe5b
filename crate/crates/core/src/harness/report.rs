use std::io::Write;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use super::HarnessError;

/// Bumped whenever a column is added, removed or renamed.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

/// One measured or computed value. `trial` is a trial index or an aggregate
/// tag such as `mean`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub schema_version: u32,
    pub experiment: String,
    pub n: u32,
    pub trial: String,
    pub metric: String,
    pub value: f64,
    pub half_width: Option<f64>,
    /// Trials behind the value; absent for closed-form rows.
    pub trials: Option<u64>,
    pub seed: Option<u64>,
}

impl ReportRow {
    pub fn new(
        experiment: &str,
        n: u32,
        trial: impl ToString,
        metric: impl Into<String>,
        value: f64,
    ) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            experiment: experiment.to_string(),
            n,
            trial: trial.to_string(),
            metric: metric.into(),
            value,
            half_width: None,
            trials: None,
            seed: None,
        }
    }

    pub fn with_provenance(mut self, trials: u64, seed: u64) -> Self {
        self.trials = Some(trials);
        self.seed = Some(seed);
        self
    }

    pub fn with_half_width(mut self, hw: f64) -> Self {
        self.half_width = Some(hw);
        self
    }
}

/// CSV with a header row, or a JSON array of row objects.
pub fn write_report<W: Write>(
    rows: &[ReportRow],
    format: ReportFormat,
    mut out: W,
) -> Result<(), HarnessError> {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            if rows.is_empty() {
                w.write_record([
                    "schema_version",
                    "experiment",
                    "n",
                    "trial",
                    "metric",
                    "value",
                    "half_width",
                    "trials",
                    "seed",
                ])?;
            }
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut out, rows)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows() -> Vec<ReportRow> {
        vec![
            ReportRow::new("tend", 2, "mean", "t_end", 2.5)
                .with_provenance(10, 1)
                .with_half_width(0.25),
            ReportRow::new("calc", 20, "-", "tau", 2.85),
        ]
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_report(&rows(), ReportFormat::Csv, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "schema_version,experiment,n,trial,metric,value,half_width,trials,seed\n\
             1,tend,2,mean,t_end,2.5,0.25,10,1\n\
             1,calc,20,-,tau,2.85,,,\n"
        );
    }

    #[test]
    fn json_round_trip() {
        let mut buf = Vec::new();
        write_report(&rows(), ReportFormat::Json, &mut buf).unwrap();
        let back: Vec<ReportRow> = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back, rows());
    }
}
