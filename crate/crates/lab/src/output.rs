//! File emission: RFC-4180 CSV tables, JSON summaries and atomic writes.
//!
//! Every file is first rendered to bytes and then moved into place with a
//! temp-file-plus-rename, so an interrupted run never leaves a partially
//! written file at the final path. Floats are rendered with the shortest
//! round-trip representation, which keeps reruns byte-identical.

use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::Serialize;

use shift_core::experiments::{BayesRiskReport, RiskReport, Theorem1Row};

static WRITE_NONCE: AtomicU64 = AtomicU64::new(0);

/// Writes `bytes` to `path` atomically (temp file in the same directory,
/// then rename).
pub fn atomic_write(path: &Path, bytes: &[u8]) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let nonce = WRITE_NONCE.fetch_add(1, Ordering::Relaxed);
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp.{}.{nonce}", process::id()));
    let tmp = PathBuf::from(tmp);
    let result = (|| {
        let mut file = std::fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}

fn finish(writer: csv::Writer<Vec<u8>>) -> Vec<u8> {
    writer.into_inner().expect("csv buffer")
}

/// One row of the long-format plot-data table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TidyRow {
    pub experiment: String,
    pub eps: f64,
    pub estimator: String,
    pub metric: String,
    pub value: f64,
    pub std_err: Option<f64>,
}

/// Long-format CSV: `experiment,eps,estimator,metric,value,std_err`.
pub fn tidy_csv(rows: &[TidyRow]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).expect("csv row");
    }
    w.flush().expect("csv flush");
    let mut bytes = finish(w);
    if rows.is_empty() {
        // Header-only file for empty reports.
        bytes = b"experiment,eps,estimator,metric,value,std_err\n".to_vec();
    }
    bytes
}

/// Expands a risk report into tidy rows.
pub fn risk_report_rows(experiment: &str, eps: f64, report: &RiskReport) -> Vec<TidyRow> {
    vec![
        TidyRow {
            experiment: experiment.to_string(),
            eps,
            estimator: report.estimator.clone(),
            metric: "normalized_risk".to_string(),
            value: report.mean_sq_normalized,
            std_err: Some(report.std_err),
        },
        TidyRow {
            experiment: experiment.to_string(),
            eps,
            estimator: report.estimator.clone(),
            metric: "degenerate_rate".to_string(),
            value: report.degenerate_count as f64 / report.reps.max(1) as f64,
            std_err: None,
        },
    ]
}

/// Expands a Bayes risk report into tidy rows.
pub fn bayes_report_rows(experiment: &str, eps: f64, report: &BayesRiskReport) -> Vec<TidyRow> {
    vec![
        TidyRow {
            experiment: experiment.to_string(),
            eps,
            estimator: report.estimator.clone(),
            metric: "bayes_risk_normalized".to_string(),
            value: report.bayes_risk_normalized,
            std_err: Some(report.std_err),
        },
        TidyRow {
            experiment: experiment.to_string(),
            eps,
            estimator: report.estimator.clone(),
            metric: "bayes_risk_fisher_normalized".to_string(),
            value: report.risk_fisher_normalized,
            std_err: Some(report.std_err_fisher),
        },
        TidyRow {
            experiment: experiment.to_string(),
            eps,
            estimator: report.estimator.clone(),
            metric: "van_trees_bound".to_string(),
            value: report.bound,
            std_err: None,
        },
    ]
}

/// CSV for simulated observations: `replication,k,a,b`.
pub fn observations_csv(rows: &[(u64, usize, f64, f64)]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["replication", "k", "a", "b"]).unwrap();
    for (rep, k, a, b) in rows {
        w.write_record(&[
            rep.to_string(),
            k.to_string(),
            format_float(*a),
            format_float(*b),
        ])
        .unwrap();
    }
    w.flush().unwrap();
    finish(w)
}

/// CSV of per-replication estimates:
/// `replication,estimator,estimate,degenerate_flag`.
pub fn estimates_csv(rows: &[(u64, String, f64, bool)]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["replication", "estimator", "estimate", "degenerate_flag"])
        .unwrap();
    for (rep, estimator, value, degenerate) in rows {
        w.write_record(&[
            rep.to_string(),
            estimator.clone(),
            format_float(*value),
            (*degenerate as u8).to_string(),
        ])
        .unwrap();
    }
    w.flush().unwrap();
    finish(w)
}

/// CSV of the expansion check: `eps,mc_risk,predicted,excess_ratio,std_err`.
pub fn theorem1_csv(rows: &[Theorem1Row]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["eps", "mc_risk", "predicted", "excess_ratio", "std_err"])
        .unwrap();
    for row in rows {
        w.write_record(&[
            format_float(row.eps),
            format_float(row.mc_risk),
            format_float(row.predicted),
            format_float(row.excess_ratio),
            format_float(row.std_err),
        ])
        .unwrap();
    }
    w.flush().unwrap();
    finish(w)
}

/// Weight table `k,q_k,lambda_star_k,s_k2` with the solved bandwidth in a
/// leading comment line.
pub fn weights_csv(bandwidth: f64, rows: &[(usize, f64, f64, f64)]) -> Vec<u8> {
    let mut bytes = format!("# W_eps = {}\n", format_float(bandwidth)).into_bytes();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["k", "q_k", "lambda_star_k", "s_k2"]).unwrap();
    for (k, q, lambda, s2) in rows {
        w.write_record(&[
            k.to_string(),
            format_float(*q),
            format_float(*lambda),
            format_float(*s2),
        ])
        .unwrap();
    }
    w.flush().unwrap();
    bytes.extend_from_slice(&finish(w));
    bytes
}

/// Shortest round-trip float rendering; deterministic across reruns.
pub fn format_float(x: f64) -> String {
    format!("{x}")
}

/// Top-level JSON summary of a run.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub config_hash: String,
    pub seed: u64,
    pub reports: Vec<serde_json::Value>,
}

pub fn summary_json(summary: &RunSummary) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(summary).expect("summary serializes");
    bytes.push(b'\n');
    bytes
}
