//! Per-iteration run records, replica ensembles, and their persistence.
//!
//! A [`RunTrace`] holds one scalar row per iterate `x_0 … x_N` (columnar, so
//! million-step runs stay compact) plus the iterates stored every
//! `trace_stride` steps and the final iterate. Row `n` carries the state
//! statistics of `x_n` and, for `n < N`, the transition taken from it:
//! `λ_n`, the drawn event, the realized step length `d(x_{n+1}, x_n)` and
//! its bound `2 λ_n L(ξ_{n+1}) (1 + d(x_n, p))`.
//!
//! Traces export to CSV with columns
//! `replica,n,lambda,event,step_len,step_bound,dist_ref,F_hat,F_se`; floats
//! are serialized with 17 significant digits so re-runs reproduce files
//! byte-identically.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point;
use crate::integrand::IntegrandSpec;
use crate::schedule::StepSchedule;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed trace: {0}")]
    Malformed(String),
}

/// Scalar statistics of one run, one entry per iterate `x_0 ..= x_N`.
///
/// Transition columns (`lambda`, `event`, `step_len`, `step_bound`) have
/// `N` entries; state columns have `N + 1`. `dist_ref` is `d(x_n, z)` when a
/// reference point was configured, `dist_base` is `d(x_n, p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub replica: u32,
    pub lambda: Vec<f64>,
    pub event: Vec<String>,
    pub step_len: Vec<f64>,
    pub step_bound: Vec<f64>,
    pub growth_drawn: Vec<f64>,
    pub dist_ref: Option<Vec<f64>>,
    pub dist_base: Vec<f64>,
    pub f_hat: Vec<f64>,
    pub f_se: Vec<f64>,
    /// Iterates stored every `trace_stride` steps, as `(n, x_n)`.
    pub stored_iterates: Vec<(u64, Point)>,
    pub final_iterate: Point,
}

impl RunTrace {
    /// Number of transitions (the configured iteration count N).
    pub fn steps(&self) -> usize {
        self.lambda.len()
    }

    /// Number of scalar rows (N + 1).
    pub fn rows(&self) -> usize {
        self.f_hat.len()
    }

    /// Max violation of the step bound across rows; nonpositive traces
    /// satisfy the bound everywhere.
    pub fn max_step_bound_violation(&self) -> f64 {
        self.step_len
            .iter()
            .zip(&self.step_bound)
            .map(|(len, bound)| len - bound)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Independent replicas of one configuration, ordered by replica index.
#[derive(Debug, Clone, Default)]
pub struct ReplicaEnsemble {
    pub traces: Vec<RunTrace>,
}

impl ReplicaEnsemble {
    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }
}

/// 17-significant-digit float form used in CSV files; round-trips exactly.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

pub const TRACE_HEADER: [&str; 9] = [
    "replica",
    "n",
    "lambda",
    "event",
    "step_len",
    "step_bound",
    "dist_ref",
    "F_hat",
    "F_se",
];

/// Write the scalar rows of an ensemble as CSV.
pub fn write_trace_csv<W: Write>(out: W, traces: &[RunTrace]) -> Result<(), TraceError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for trace in traces {
        let n_rows = trace.rows();
        for n in 0..n_rows {
            let transition = n < trace.steps();
            w.write_record([
                trace.replica.to_string(),
                n.to_string(),
                if transition { format_f64(trace.lambda[n]) } else { String::new() },
                if transition { trace.event[n].clone() } else { String::new() },
                if transition { format_f64(trace.step_len[n]) } else { String::new() },
                if transition { format_f64(trace.step_bound[n]) } else { String::new() },
                opt_cell(trace.dist_ref.as_ref().map(|d| d[n])),
                format_f64(trace.f_hat[n]),
                format_f64(trace.f_se[n]),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_csv_file(path: &Path, traces: &[RunTrace]) -> Result<(), TraceError> {
    let file = std::fs::File::create(path)?;
    write_trace_csv(std::io::BufWriter::new(file), traces)
}

/// Scalar rows read back from a trace CSV (iterates are not persisted; they
/// are reproducible from the manifest).
#[derive(Debug, Clone, Default)]
pub struct ScalarTrace {
    pub replica: u32,
    pub lambda: Vec<f64>,
    pub event: Vec<String>,
    pub step_len: Vec<f64>,
    pub step_bound: Vec<f64>,
    pub dist_ref: Option<Vec<f64>>,
    pub f_hat: Vec<f64>,
    pub f_se: Vec<f64>,
}

/// Read the scalar rows of all replicas from a trace CSV.
pub fn read_trace_csv<R: std::io::Read>(input: R) -> Result<Vec<ScalarTrace>, TraceError> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != TRACE_HEADER {
        return Err(TraceError::Malformed(format!("unexpected header {headers:?}")));
    }
    let mut out: Vec<ScalarTrace> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let replica: u32 = record[0]
            .parse()
            .map_err(|e| TraceError::Malformed(format!("replica column: {e}")))?;
        if out.last().map(|t| t.replica) != Some(replica) {
            out.push(ScalarTrace { replica, ..Default::default() });
        }
        let t = out.last_mut().unwrap();
        let parse = |s: &str, col: &str| -> Result<f64, TraceError> {
            s.parse()
                .map_err(|e| TraceError::Malformed(format!("{col} column: {e}")))
        };
        if !record[2].is_empty() {
            t.lambda.push(parse(&record[2], "lambda")?);
            t.event.push(record[3].to_string());
            t.step_len.push(parse(&record[4], "step_len")?);
            t.step_bound.push(parse(&record[5], "step_bound")?);
        }
        if !record[6].is_empty() {
            t.dist_ref.get_or_insert_with(Vec::new).push(parse(&record[6], "dist_ref")?);
        }
        t.f_hat.push(parse(&record[7], "F_hat")?);
        t.f_se.push(parse(&record[8], "F_se")?);
    }
    Ok(out)
}

pub fn read_trace_csv_file(path: &Path) -> Result<Vec<ScalarTrace>, TraceError> {
    let file = std::fs::File::open(path)?;
    read_trace_csv(std::io::BufReader::new(file))
}

/// Format version of manifests and traces written by this crate.
pub const ARTIFACT_VERSION: &str = "1";

/// Everything needed to reproduce a run bit-exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub seed: u64,
    pub iterations: u64,
    pub trace_stride: u64,
    pub big_f_samples: u32,
    pub replicas: u32,
    pub splitting: bool,
    pub integrand: IntegrandSpec,
    pub schedule: StepSchedule,
    pub x0: Point,
    pub reference: Option<Point>,
}

impl Manifest {
    pub fn to_json(&self) -> Result<String, TraceError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Manifest, TraceError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn write_file(&self, path: &Path) -> Result<(), TraceError> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Manifest, TraceError> {
        Manifest::from_json(&std::fs::read_to_string(path)?)
    }
}
