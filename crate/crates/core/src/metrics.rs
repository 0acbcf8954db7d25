//! Per-iteration run records and derived efficiency measures.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::Result;

/// Measurements for one training iteration. `comp_s` is the maximum sweep
/// wall-time over workers (barrier semantics); `comm_s` covers the sync and
/// broadcast phases; `bytes` is the payload moved this iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub t: usize,
    pub comp_s: f64,
    pub comm_s: f64,
    pub bytes: u64,
    pub perplexity: Option<f64>,
}

/// Totals over a run. `bytes` includes the forced terminal sync, which is
/// also reported separately in `terminal_sync_bytes` so schedule-level cost
/// formulas can be checked without it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTotals {
    pub comp_s: f64,
    pub comm_s: f64,
    pub bytes: u64,
    pub terminal_sync_bytes: u64,
}

/// Configuration echo carried in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub algo: String,
    pub k: usize,
    pub m: usize,
    pub n: usize,
    pub h: f64,
    pub t: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
}

/// Full record of a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ConfigEcho,
    pub records: Vec<IterationRecord>,
    pub totals: RunTotals,
    pub final_train_perplexity: Option<f64>,
    pub predictive_perplexity: Option<f64>,
}

impl RunReport {
    pub fn new(config: ConfigEcho) -> Self {
        RunReport {
            config,
            records: Vec::new(),
            totals: RunTotals::default(),
            final_train_perplexity: None,
            predictive_perplexity: None,
        }
    }

    /// Appends a record, keeping totals consistent with the record list.
    pub fn push(&mut self, rec: IterationRecord) {
        self.totals.comp_s += rec.comp_s;
        self.totals.comm_s += rec.comm_s;
        self.totals.bytes += rec.bytes;
        self.records.push(rec);
    }

    /// Bytes excluding the forced terminal sync.
    pub fn scheduled_bytes(&self) -> u64 {
        self.totals.bytes - self.totals.terminal_sync_bytes
    }
}

/// Parallel speedup `t0 / (t0 / m + tc)`: ideal `m`-fold scaling degraded by
/// communication time `tc`, with `t0` the single-processor training time.
pub fn speedup(t0: f64, m: usize, tc: f64) -> f64 {
    assert!(t0 > 0.0 && m >= 1 && tc >= 0.0);
    t0 / (t0 / m as f64 + tc)
}

/// Computation/communication ratio over a whole run; infinite when no
/// communication time was recorded.
pub fn ccr(report: &RunReport) -> f64 {
    if report.totals.comm_s > 0.0 {
        report.totals.comp_s / report.totals.comm_s
    } else {
        f64::INFINITY
    }
}

/// Writes a report as CSV: header `t,comp_s,comm_s,bytes,perplexity`, one
/// row per iteration record.
pub fn emit_csv<W: Write>(report: &RunReport, mut out: W) -> Result<()> {
    writeln!(out, "t,comp_s,comm_s,bytes,perplexity")?;
    for r in &report.records {
        let p = r.perplexity.map(|v| v.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{},{}", r.t, r.comp_s, r.comm_s, r.bytes, p)?;
    }
    Ok(())
}

/// Writes a report as pretty JSON.
pub fn emit_json<W: Write>(report: &RunReport, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, report)?;
    writeln!(out)?;
    Ok(())
}
