//! CSV series and JSON reports for orbits, traces and gaps.

use ergobound_core::certify::{GapReport, ResidualTrace};
use ergobound_core::dynamics::Trajectory;
use serde::{Deserialize, Serialize};

use super::{fmt17, fmt7, FormatError};

fn csv_string(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<String, FormatError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| FormatError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// `t,<variables…>` at every step point.
pub fn write_trajectory_csv(traj: &Trajectory, variables: &[String]) -> Result<String, FormatError> {
    let mut header = vec!["t"];
    header.extend(variables.iter().map(String::as_str));
    let rows = traj.times().iter().zip(traj.states()).map(|(t, s)| {
        std::iter::once(fmt17(*t)).chain(s.iter().map(|v| fmt17(*v))).collect()
    });
    csv_string(&header, rows)
}

/// Header and numeric rows of a trajectory or trace CSV.
pub fn read_trajectory_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), FormatError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers()?.iter().map(String::from).collect::<Vec<_>>();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| FormatError::Invalid(format!("bad number {:?}", s))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

/// `t,g` samples of a residual trace.
pub fn write_trace_csv(trace: &ResidualTrace) -> Result<String, FormatError> {
    let rows = trace.times.iter().zip(&trace.values).map(|(t, g)| vec![fmt17(*t), fmt17(*g)]);
    csv_string(&["t", "g"], rows)
}

/// Orbit metadata. The orbit itself is reproduced by integrating from
/// `anchor` for `period` at `integrator_tol`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitFile {
    pub requested: String,
    pub symbols: String,
    pub period: f64,
    pub anchor: Vec<f64>,
    pub residual: f64,
    pub closure_error: f64,
    pub iterations: usize,
    pub integrator_tol: f64,
    pub phi_average: f64,
    pub seed_index: usize,
    pub rejected_seeds: usize,
}

/// Gap, Markov estimate and measured occupancy for one orbit and certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapFile {
    pub orbit: String,
    pub aux_degree: u32,
    pub certificate_id: String,
    pub bound: f64,
    pub average: f64,
    pub epsilon: f64,
    pub trace_mean: f64,
    pub trace_min: f64,
    pub trace_max: f64,
    pub thresholds: Vec<GapEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapEntry {
    pub threshold: f64,
    pub markov_bound: f64,
    pub occupancy: f64,
    pub consistent: bool,
}

impl From<&GapReport> for GapEntry {
    fn from(r: &GapReport) -> Self {
        GapEntry {
            threshold: r.threshold,
            markov_bound: r.markov_bound,
            occupancy: r.occupancy,
            consistent: r.consistent(1e-6),
        }
    }
}

/// One row of the bound summary table.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub degree: u32,
    pub bound: Option<f64>,
    pub duality_gap: Option<f64>,
    pub valid: bool,
    pub status: String,
    pub iterations: usize,
}

/// `degree,U,gap,valid,status,iterations` with 7 significant digits.
pub fn write_summary_csv(rows: &[SummaryRow]) -> Result<String, FormatError> {
    let opt = |v: Option<f64>| v.map(fmt7).unwrap_or_default();
    let rows = rows.iter().map(|r| {
        vec![
            r.degree.to_string(),
            opt(r.bound),
            opt(r.duality_gap),
            (if r.valid { "VALID" } else { "INVALID" }).to_string(),
            r.status.clone(),
            r.iterations.to_string(),
        ]
    });
    csv_string(&["degree", "U", "gap", "validity", "status", "iterations"], rows)
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}
