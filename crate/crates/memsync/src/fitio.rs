//! Decay-curve input files and fit reports.

use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};

use memsync_core::fit::{DecaySample, FitResult, FitStatus, PARAM_NAMES};
use memsync_core::model::{derived_times, EnvelopeTimes};
use memsync_core::DecayModelParams;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SamplesError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("header must be `t_s,eta` or `t_s,eta,sigma`, found `{0}`")]
    Header(String),
    #[error("line {line}, column `{column}`: `{text}` is not a finite number")]
    Number {
        line: u64,
        column: &'static str,
        text: String,
    },
}

/// Reads a `t_s,eta[,sigma]` file. Empty sigma cells leave that sample unweighted.
pub fn load_samples(path: &Path) -> Result<Vec<DecaySample>, SamplesError> {
    let text = std::fs::read_to_string(path).map_err(|source| SamplesError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_samples(&text)
}

pub fn parse_samples(text: &str) -> Result<Vec<DecaySample>, SamplesError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let csv_err = |e: csv::Error| SamplesError::Csv {
        line: e.position().map_or(0, |p| p.line()),
        message: e.to_string(),
    };
    let header: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let has_sigma = match header.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["t_s", "eta"] => false,
        ["t_s", "eta", "sigma"] => true,
        _ => return Err(SamplesError::Header(header.join(","))),
    };
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(csv_err)?;
        let line = row.position().map_or(0, |p| p.line());
        let num = |i: usize, column: &'static str| -> Result<f64, SamplesError> {
            let s = row.get(i).unwrap_or("");
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| SamplesError::Number {
                    line,
                    column,
                    text: s.to_string(),
                })
        };
        let sigma = match row.get(2) {
            Some(s) if has_sigma && !s.is_empty() => Some(num(2, "sigma")?),
            _ => None,
        };
        out.push(DecaySample {
            t: num(0, "t_s")?,
            eta: num(1, "eta")?,
            sigma,
        });
    }
    Ok(out)
}

pub fn samples_to_csv(samples: &[DecaySample]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t_s", "eta", "sigma"]).expect("in-memory write");
    for s in samples {
        let sigma = s.sigma.map(|v| v.to_string()).unwrap_or_default();
        w.write_record([s.t.to_string(), s.eta.to_string(), sigma])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

/// JSON fit report. Uncertainties are `null` when the curvature matrix was singular.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub params: DecayModelParams,
    pub stderr: BTreeMap<String, Option<f64>>,
    pub residual_norm: f64,
    pub converged: bool,
    pub status: FitStatus,
    pub singular: bool,
    pub iterations: usize,
    pub n_samples: usize,
    /// Homogeneous and inhomogeneous times, when the fitted envelope admits them.
    pub envelope_times: Option<EnvelopeTimes>,
}

impl FitReport {
    pub fn new(fit: &FitResult, n_samples: usize) -> Self {
        let stderr = PARAM_NAMES
            .iter()
            .zip(fit.stderr.to_array())
            .map(|(name, v)| (name.to_string(), v.is_finite().then_some(v)))
            .collect();
        Self {
            params: fit.params,
            stderr,
            residual_norm: fit.residual_norm,
            converged: fit.converged,
            status: fit.status,
            singular: fit.singular,
            iterations: fit.iterations,
            n_samples,
            envelope_times: derived_times(fit.params.tau_s, fit.params.tau_bar).ok(),
        }
    }
}
