//! Report types and CSV/JSON emission.
//!
//! CSV bodies contain only data (header + rows) so identical seeds produce
//! byte-identical files; wall-clock time lives in the JSON metadata block
//! only. Floats are written with 17 significant digits in CSV and with
//! shortest-round-trip encoding in JSON, so both formats re-parse exactly.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One configuration's aggregated Monte Carlo outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRecord {
    pub scheme: String,
    pub m: usize,
    pub k: usize,
    pub l: usize,
    pub snr_db: f64,
    pub n_bits: u32,
    pub bits_overridden: bool,
    pub rate_perfect: f64,
    pub rate_quantized: f64,
    pub rate_loss: f64,
    pub rate_loss_se: f64,
    pub measured_qe: f64,
    /// Closed-form E[Z]; absent when the active cluster count is 1.
    pub expected_qe: Option<f64>,
    /// Rate-loss upper bound from the closed-form E[Z]; absent with it.
    pub bound: Option<f64>,
    pub gamma_lin: f64,
    pub gamma_db: f64,
    /// Published reference value, when reproducing a printed table.
    pub reference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub seed: u64,
    pub trials: usize,
    pub wall_clock_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub records: Vec<RateRecord>,
    pub meta: ReportMeta,
}

/// One point of a rate-vs-SNR sweep curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub snr_db: f64,
    pub scheme: String,
    pub rate: f64,
    pub rate_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
    pub meta: ReportMeta,
}

/// One row of the QE theory table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QeRow {
    pub l: usize,
    pub n: u32,
    pub e_closed: f64,
    pub e_numeric: f64,
    pub bound_case1: f64,
    pub bound_case2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QeReport {
    pub rows: Vec<QeRow>,
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.17e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

impl RateReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "scheme,m,k,l,snr_db,n_bits,bits_overridden,rate_perfect,rate_quantized,\
             rate_loss,rate_loss_se,measured_qe,expected_qe,bound,gamma_lin,gamma_db,reference\n",
        );
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                csv_field(&r.scheme),
                r.m,
                r.k,
                r.l,
                fmt_f64(r.snr_db),
                r.n_bits,
                r.bits_overridden,
                fmt_f64(r.rate_perfect),
                fmt_f64(r.rate_quantized),
                fmt_f64(r.rate_loss),
                fmt_f64(r.rate_loss_se),
                fmt_f64(r.measured_qe),
                fmt_opt(r.expected_qe),
                fmt_opt(r.bound),
                fmt_f64(r.gamma_lin),
                fmt_f64(r.gamma_db),
                fmt_opt(r.reference),
            ));
        }
        out
    }
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("snr_db,scheme,rate,rate_std\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{}\n",
                fmt_f64(p.snr_db),
                csv_field(&p.scheme),
                fmt_f64(p.rate),
                fmt_f64(p.rate_std),
            ));
        }
        out
    }
}

impl QeReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("L,N,E_closed,E_numeric,bound_caseI,bound_caseII\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.l,
                r.n,
                fmt_f64(r.e_closed),
                fmt_f64(r.e_numeric),
                fmt_f64(r.bound_case1),
                fmt_f64(r.bound_case2),
            ));
        }
        out
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::Parse(format!("report serialization failed: {e}")))
}

/// Writes `body` to `path`, or to stdout when no path is given.
pub fn write_output(body: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => fs::write(p, body).map_err(|source| Error::Io {
            path: p.display().to_string(),
            source,
        }),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}
