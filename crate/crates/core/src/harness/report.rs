//! Aggregation, acceptance checks and report files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::io::{write_json, write_map_csv};
use crate::planner::usf_bandpass_cap;

use super::config::{ExperimentConfig, ExperimentKind};
use super::run::{Method, RunOutput, Status, TrialRecord};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Aggregate for one noise level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub snr_db: Option<f64>,
    pub trials: usize,
    pub order: usize,
    /// Mean MSE over feasible trials.
    pub mse: f64,
    /// `mse / peak²`.
    pub mse_rel: f64,
    /// Fraction of feasible trials that are exact or degraded.
    pub success_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// Contents of `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub tool_version: String,
    pub experiment: ExperimentKind,
    pub trials: usize,
    pub feasible_trials: usize,
    pub exact_trials: usize,
    pub success_rate: f64,
    /// Order → number of proposed-method trials using it.
    pub orders: BTreeMap<usize, usize>,
    pub mse_by_snr: Vec<LevelSummary>,
    /// Quantized run only: `‖x‖∞ / λ`.
    pub dynamic_range: Option<f64>,
    /// Quantized run only: best baseline MSE over the configured orders.
    pub baseline_mse: Option<f64>,
    pub checks: Vec<Check>,
    pub all_passed: bool,
    pub config_echo: ExperimentConfig,
}

fn proposed(records: &[TrialRecord]) -> impl Iterator<Item = &TrialRecord> {
    records.iter().filter(|r| r.method == Method::Proposed)
}

fn levels(records: &[TrialRecord]) -> Vec<LevelSummary> {
    let mut keys: Vec<Option<f64>> = Vec::new();
    for r in proposed(records) {
        if !keys.iter().any(|k| k.map(f64::to_bits) == r.snr_db.map(f64::to_bits)) {
            keys.push(r.snr_db);
        }
    }
    keys.into_iter()
        .map(|key| {
            let rows: Vec<&TrialRecord> = proposed(records)
                .filter(|r| r.snr_db.map(f64::to_bits) == key.map(f64::to_bits))
                .collect();
            let feasible: Vec<&&TrialRecord> = rows
                .iter()
                .filter(|r| r.status != Status::InfeasibleConfig)
                .collect();
            let n = feasible.len().max(1) as f64;
            let mse = feasible.iter().map(|r| r.mse).sum::<f64>() / n;
            let peak2 = feasible.iter().map(|r| r.peak * r.peak).sum::<f64>() / n;
            let ok = feasible
                .iter()
                .filter(|r| matches!(r.status, Status::Exact | Status::Degraded))
                .count();
            LevelSummary {
                snr_db: key,
                trials: rows.len(),
                order: feasible.first().map_or(0, |r| r.order),
                mse,
                mse_rel: if peak2 > 0.0 { mse / peak2 } else { f64::NAN },
                success_rate: ok as f64 / n,
            }
        })
        .collect()
}

/// Number of adjacent level pairs where a lower SNR shows a lower MSE.
pub fn trend_inversions(levels: &[LevelSummary]) -> usize {
    let mut sorted: Vec<&LevelSummary> = levels.iter().collect();
    sorted.sort_by(|a, b| {
        let ka = a.snr_db.unwrap_or(f64::INFINITY);
        let kb = b.snr_db.unwrap_or(f64::INFINITY);
        kb.total_cmp(&ka)
    });
    sorted.windows(2).filter(|w| w[1].mse < w[0].mse).count()
}

/// Aggregates records and evaluates the thresholds of `cfg`.
pub fn summarize(cfg: &ExperimentConfig, out: &RunOutput) -> Summary {
    let t = &cfg.thresholds;
    let records = &out.records;
    let trials = proposed(records).count();
    let feasible = proposed(records)
        .filter(|r| r.status != Status::InfeasibleConfig)
        .count();
    let exact = proposed(records).filter(|r| r.status == Status::Exact).count();
    let success_rate = if feasible > 0 {
        exact as f64 / feasible as f64
    } else {
        0.0
    };
    let mut orders = BTreeMap::new();
    for r in proposed(records).filter(|r| r.order > 0) {
        *orders.entry(r.order).or_insert(0) += 1;
    }
    let mse_by_snr = levels(records);
    let mut checks = Vec::new();
    let mut dynamic_range = None;
    let mut baseline_mse = None;
    match cfg.kind {
        ExperimentKind::NoiselessSuite | ExperimentKind::SingleRun => {
            checks.push(Check::new(
                "exact-recovery",
                feasible > 0 && success_rate >= t.min_success_rate,
                format!(
                    "{exact}/{feasible} feasible trials with nmse < {:e} ({} infeasible)",
                    t.exact_nmse,
                    trials - feasible
                ),
            ));
        }
        ExperimentKind::NoiseSweep => {
            let stable: Vec<&LevelSummary> = mse_by_snr
                .iter()
                .filter(|l| l.snr_db.is_none_or(|s| s >= t.stable_snr_db))
                .collect();
            let worst = stable.iter().map(|l| l.mse_rel).fold(0.0, f64::max);
            checks.push(Check::new(
                "stable-above-threshold",
                !stable.is_empty() && stable.iter().all(|l| l.mse_rel < t.degraded_mse_rel),
                format!(
                    "worst mse/peak² at SNR ≥ {} dB is {worst:e} (limit {:e})",
                    t.stable_snr_db, t.degraded_mse_rel
                ),
            ));
            let inv = trend_inversions(&mse_by_snr);
            checks.push(Check::new(
                "monotone-mse",
                inv <= t.max_inversions,
                format!("{inv} inversions (allowed {})", t.max_inversions),
            ));
        }
        ExperimentKind::QuantizedHw => {
            let prop: Vec<&TrialRecord> = proposed(records).collect();
            let worst = prop.iter().map(|r| r.mse).fold(0.0, f64::max);
            let ok = !prop.is_empty()
                && prop.iter().all(|r| r.status != Status::InfeasibleConfig && r.mse <= t.hw_max_mse);
            checks.push(Check::new(
                "proposed-mse",
                ok,
                format!("worst proposed mse {worst:e} (limit {:e})", t.hw_max_mse),
            ));
            let base = records
                .iter()
                .filter(|r| r.method == Method::UsAlg)
                .map(|r| r.mse)
                .fold(f64::INFINITY, f64::min);
            if base.is_finite() {
                baseline_mse = Some(base);
                checks.push(Check::new(
                    "baseline-separation",
                    base > t.baseline_ratio * worst,
                    format!(
                        "best baseline mse {base:e} vs {}× proposed {worst:e}",
                        t.baseline_ratio
                    ),
                ));
            }
            if let Some(r) = prop.first() {
                dynamic_range = Some(r.peak / r.lambda);
            }
        }
        ExperimentKind::FeasibilityMap => {
            let m = cfg.map.as_ref().expect("validated");
            let cap = usf_bandpass_cap(std::f64::consts::PI * m.bandwidth_hz);
            let above = out
                .map
                .iter()
                .filter(|p| p.achievable && p.t_s_seconds > cap)
                .count();
            checks.push(Check::new(
                "usf-cap",
                above == 0,
                format!("{above} achievable points above the cap {cap:e} s"),
            ));
        }
    }
    let all_passed = checks.iter().all(|c| c.passed);
    Summary {
        tool_version: TOOL_VERSION.to_string(),
        experiment: cfg.kind,
        trials,
        feasible_trials: feasible,
        exact_trials: exact,
        success_rate,
        orders,
        mse_by_snr,
        dynamic_range,
        baseline_mse,
        checks,
        all_passed,
        config_echo: cfg.clone(),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:e}"))
}

/// Per-trial table; runtime is deliberately absent.
pub fn results_csv(records: &[TrialRecord]) -> String {
    let mut s = String::from(
        "trial,seed,snr_db,method,order,order_source,fold_count,rejections,lambda,peak,mse,nmse,max_err,status,carriers_hz\n",
    );
    for r in records {
        let carriers: Vec<String> = r.carriers_hz.iter().map(|f| format!("{f:e}")).collect();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{:e},{:e},{:e},{:e},{:e},{},{}",
            r.trial,
            r.seed,
            opt(r.snr_db),
            r.method.as_str(),
            r.order,
            r.order_source.as_str(),
            r.fold_count,
            r.rejections,
            r.lambda,
            r.peak,
            r.mse,
            r.nmse,
            r.max_err,
            r.status.as_str(),
            carriers.join(";")
        );
    }
    s
}

/// Writes `results.csv`, `summary.json` (and `map.csv` for map experiments,
/// `timings.csv` on request) into `dir`. Returns the summary.
pub fn emit_report(
    cfg: &ExperimentConfig,
    out: &RunOutput,
    dir: &Path,
    timings: bool,
) -> Result<(Summary, Vec<PathBuf>)> {
    fs::create_dir_all(dir)?;
    let summary = summarize(cfg, out);
    let mut files = Vec::new();
    let results = dir.join("results.csv");
    fs::write(&results, results_csv(&out.records))?;
    files.push(results);
    let sum = dir.join("summary.json");
    write_json(&sum, &summary)?;
    files.push(sum);
    if cfg.kind == ExperimentKind::FeasibilityMap {
        let map = dir.join("map.csv");
        write_map_csv(&map, &out.map)?;
        files.push(map);
    }
    if timings {
        let mut s = String::from("trial,method,order,runtime_ms\n");
        for r in &out.records {
            let _ = writeln!(s, "{},{},{},{:.3}", r.trial, r.method.as_str(), r.order, r.runtime_ms);
        }
        let p = dir.join("timings.csv");
        fs::write(&p, s)?;
        files.push(p);
    }
    Ok((summary, files))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn level(snr: f64, mse: f64) -> LevelSummary {
        LevelSummary {
            snr_db: Some(snr),
            trials: 1,
            order: 1,
            mse,
            mse_rel: mse,
            success_rate: 1.0,
        }
    }

    #[test]
    fn inversions_follow_snr_order() {
        let l = vec![level(10.0, 1e-2), level(30.0, 1e-4), level(20.0, 1e-3)];
        assert_eq!(trend_inversions(&l), 0);
        let l = vec![level(10.0, 1e-4), level(30.0, 1e-3), level(20.0, 1e-2)];
        assert_eq!(trend_inversions(&l), 1);
    }
}
