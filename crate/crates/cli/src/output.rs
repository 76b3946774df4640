//! Bit-stable CSV and JSON result writers.
//!
//! Floating-point values are printed with 9 significant digits in a fixed
//! scientific format, so identical runs produce byte-identical artifacts
//! suitable for regression diffing.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use locfuse::harness::{BsSubsetResult, CdfSummary, SamplingSweep, TrialRecord};
use locfuse::Method;

pub const SCHEMA_VERSION: u32 = 1;

pub const CSV_HEADER: &str =
    "trial_id,method,true_x,true_y,est_x,est_y,error_m,solver_iters,converged";

/// 9-significant-digit scientific form, e.g. `1.02345678e1`.
pub fn fmt9(x: f64) -> String {
    format!("{x:.8e}")
}

/// Rounds through the 9-significant-digit form, for JSON payloads.
pub fn sig9(x: f64) -> f64 {
    if x.is_finite() {
        fmt9(x).parse().expect("round-trip")
    } else {
        x
    }
}

fn csv_row(
    out: &mut impl Write,
    trial_id: usize,
    method: &str,
    true_xy: (f64, f64),
    est_xy: (f64, f64),
    error_m: f64,
    solver_iters: usize,
    converged: bool,
) -> std::io::Result<()> {
    writeln!(
        out,
        "{trial_id},{method},{},{},{},{},{},{solver_iters},{converged}",
        fmt9(true_xy.0),
        fmt9(true_xy.1),
        fmt9(est_xy.0),
        fmt9(est_xy.1),
        fmt9(error_m),
    )
}

/// Per-trial rows for the compare experiment, trial-major then method-major
/// in canonical method order.
pub fn write_trials_csv(path: &Path, records: &[TrialRecord]) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        for (method, o) in &r.outcomes {
            csv_row(
                &mut out,
                r.trial_id,
                method.label(),
                (r.true_position.x, r.true_position.y),
                (o.estimate.position.x, o.estimate.position.y),
                o.error_m,
                o.solver_iters,
                o.converged,
            )?;
        }
    }
    out.flush()
}

/// Per-trial rows for the sampling sweep; the method column carries the
/// sampler and sample count, e.g. `OW-hybrid/importance/500`.
pub fn write_sweep_trials_csv(path: &Path, sweep: &SamplingSweep) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{CSV_HEADER}")?;
    for row in &sweep.rows {
        let method = format!(
            "{}/{}/{}",
            Method::OwHybrid.label(),
            row.sampler.label(),
            row.num_samples
        );
        csv_row(
            &mut out,
            row.trial_id,
            &method,
            (row.true_position.x, row.true_position.y),
            (row.estimate.position.x, row.estimate.position.y),
            row.error_m,
            row.solver_iters,
            row.converged,
        )?;
    }
    out.flush()
}

fn subset_label(stations: &[usize]) -> String {
    let ids: Vec<String> = stations.iter().map(|k| (k + 1).to_string()).collect();
    format!("bs{}", ids.join("+"))
}

/// Per-trial rows for the station-subset sweep; the method column carries
/// the subset, e.g. `ToA-only/bs1+2`.
pub fn write_subset_trials_csv(path: &Path, results: &[BsSubsetResult]) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{CSV_HEADER}")?;
    for res in results {
        let method = format!("{}/{}", Method::ToaOnly.label(), subset_label(&res.stations));
        for row in &res.rows {
            csv_row(
                &mut out,
                row.trial_id,
                &method,
                (row.true_position.x, row.true_position.y),
                (row.estimate.position.x, row.estimate.position.y),
                row.error_m,
                row.solver_iters,
                row.converged,
            )?;
        }
    }
    out.flush()
}

#[derive(Debug, Serialize)]
pub struct MethodSummaryJson {
    pub count: usize,
    pub mean_m: f64,
    pub p50_m: f64,
    pub p80_m: f64,
    pub p90_m: f64,
}

impl From<&CdfSummary> for MethodSummaryJson {
    fn from(s: &CdfSummary) -> Self {
        Self {
            count: s.errors_sorted.len(),
            mean_m: sig9(s.mean),
            p50_m: sig9(s.p50),
            p80_m: sig9(s.p80),
            p90_m: sig9(s.p90),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RunMetaJson {
    pub schema_version: u32,
    pub experiment: String,
    pub bias_mode: String,
    pub seed: u64,
    pub trials: usize,
    pub grid: [usize; 2],
    pub num_samples: usize,
}

#[derive(Debug, Serialize)]
pub struct CompareSummaryJson {
    #[serde(flatten)]
    pub meta: RunMetaJson,
    pub flagged_trials: Vec<usize>,
    pub methods: BTreeMap<String, MethodSummaryJson>,
}

#[derive(Debug, Serialize)]
pub struct SubsetSummaryJson {
    pub stations: Vec<u32>,
    #[serde(flatten)]
    pub summary: MethodSummaryJson,
}

#[derive(Debug, Serialize)]
pub struct BsSweepSummaryJson {
    #[serde(flatten)]
    pub meta: RunMetaJson,
    pub subsets: Vec<SubsetSummaryJson>,
}

#[derive(Debug, Serialize)]
pub struct CurveJson {
    pub schema_version: u32,
    pub experiment: String,
    pub seed: u64,
    pub trials: usize,
    pub counts: Vec<usize>,
    pub curves: BTreeMap<String, Vec<f64>>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    std::fs::write(path, text + "\n")
}

pub fn compare_summary(
    meta: RunMetaJson,
    records: &[TrialRecord],
    summaries: &[CdfSummary],
) -> CompareSummaryJson {
    CompareSummaryJson {
        meta,
        flagged_trials: records.iter().filter(|r| r.flagged).map(|r| r.trial_id).collect(),
        methods: summaries
            .iter()
            .map(|s| (s.method.label().to_string(), MethodSummaryJson::from(s)))
            .collect(),
    }
}

pub fn bs_sweep_summary(meta: RunMetaJson, results: &[BsSubsetResult]) -> BsSweepSummaryJson {
    BsSweepSummaryJson {
        meta,
        subsets: results
            .iter()
            .map(|r| SubsetSummaryJson {
                stations: r.stations.iter().map(|k| *k as u32 + 1).collect(),
                summary: MethodSummaryJson::from(&r.summary),
            })
            .collect(),
    }
}

pub fn sweep_curve(seed: u64, trials: usize, sweep: &SamplingSweep) -> CurveJson {
    let mut curves = BTreeMap::new();
    curves.insert(
        "importance".to_string(),
        sweep.importance_mean.iter().map(|&v| sig9(v)).collect(),
    );
    curves.insert(
        "uniform".to_string(),
        sweep.uniform_mean.iter().map(|&v| sig9(v)).collect(),
    );
    CurveJson {
        schema_version: SCHEMA_VERSION,
        experiment: "sweep-samples".to_string(),
        seed,
        trials,
        counts: sweep.counts.clone(),
        curves,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt9_is_stable() {
        assert_eq!(fmt9(1.0), "1.00000000e0");
        assert_eq!(fmt9(0.0), "0.00000000e0");
        assert_eq!(fmt9(-12.3456789012), "-1.23456789e1");
        assert_eq!(sig9(12.3456789012), 12.3456789);
    }
}
