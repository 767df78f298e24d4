use std::path::Path;

use anyhow::Result;
use crn_sens::EstimateResult;
use serde::Serialize;

use crate::Format;

/// One flat output row for an estimation run.
#[derive(Debug, Serialize)]
pub struct ResultRecord {
    pub command: &'static str,
    pub model_path: String,
    pub t: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub param_i: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub param_i_name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub param_j: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub param_j_name: Option<String>,
    pub n: u64,
    pub seed: u64,
    pub mean: f64,
    pub variance: f64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub wall_time_s: f64,
}

impl ResultRecord {
    pub fn new(command: &'static str, model: &Path, t: f64, seed: u64, r: &EstimateResult) -> Self {
        Self {
            command,
            model_path: model.display().to_string(),
            t,
            c: None,
            eps: None,
            param_i: None,
            param_i_name: None,
            param_j: None,
            param_j_name: None,
            n: r.n,
            seed,
            mean: r.mean,
            variance: r.variance,
            stderr: r.stderr,
            ci_low: r.ci_low,
            ci_high: r.ci_high,
            wall_time_s: r.wall_time,
        }
    }

    pub fn set_pair(&mut self, i: usize, j: usize, names: (String, String)) {
        self.param_i = Some(i);
        self.param_j = Some(j);
        self.param_i_name = Some(names.0);
        self.param_j_name = Some(names.1);
    }

    pub fn render(&self, format: Format) -> Result<String> {
        render(self, format)
    }
}

#[derive(Debug, Serialize)]
pub struct OracleRecord {
    pub command: &'static str,
    pub what: String,
    pub x0: f64,
    pub birth: f64,
    pub death: f64,
    pub t: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    pub value: f64,
}

impl OracleRecord {
    pub fn render(&self, format: Format) -> Result<String> {
        render(self, format)
    }
}

fn render<T: Serialize>(rec: &T, format: Format) -> Result<String> {
    match format {
        Format::Json => Ok(serde_json::to_string(rec)? + "\n"),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.serialize(rec)?;
            Ok(String::from_utf8(w.into_inner()?)?)
        }
    }
}
