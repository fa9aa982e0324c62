//! Trial pipeline and the experiment drivers.

use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modulo::{fold_series, FoldedSeries, ModuloConfig};
use crate::planner::{achievability_map, alias_free_check, MapPoint};
use crate::recovery::{
    choose_beta, choose_order, mse, recover, select_order_empirical, us_alg_recover, ErrorMetrics,
    RecoveryParams,
};
use crate::series::{ComplexSeries, TimeGrid};
use crate::signal::{synth_multiband, BasebandSeed, MultibandSpec};

use super::config::{hz_to_rad, ExperimentConfig, ExperimentKind, OrderRule};

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `index` under `master`; independent of scheduling.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

fn noise_seed(trial: u64, snr_db: f64) -> u64 {
    splitmix64(trial ^ splitmix64(snr_db.to_bits()))
}

const MAX_DRAWS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Exact,
    Degraded,
    Failed,
    InfeasibleConfig,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Exact => "exact",
            Status::Degraded => "degraded",
            Status::Failed => "failed",
            Status::InfeasibleConfig => "infeasible-config",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Proposed,
    UsAlg,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::UsAlg => "us-alg",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderSource {
    Theory,
    Empirical,
    EmpiricalFallback,
    MinPeak,
    Fixed,
    None,
}

impl OrderSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            OrderSource::Theory => "theory",
            OrderSource::Empirical => "empirical",
            OrderSource::EmpiricalFallback => "empirical-fallback",
            OrderSource::MinPeak => "min-peak",
            OrderSource::Fixed => "fixed",
            OrderSource::None => "none",
        }
    }
}

/// One row of `results.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub snr_db: Option<f64>,
    pub method: Method,
    pub carriers_hz: Vec<f64>,
    pub order: usize,
    pub order_source: OrderSource,
    pub fold_count: usize,
    pub rejections: usize,
    pub lambda: f64,
    pub peak: f64,
    pub mse: f64,
    pub nmse: f64,
    pub max_err: f64,
    pub status: Status,
    pub error: Option<String>,
    /// Wall-clock time; reported separately because it is not reproducible.
    #[serde(skip)]
    pub runtime_ms: f64,
}

/// A drawn, synthesized and folded trial.
#[derive(Clone, Debug)]
pub struct PreparedTrial {
    pub trial: usize,
    pub seed: u64,
    pub snr_db: Option<f64>,
    pub carriers_hz: Vec<f64>,
    /// Carriers in rad/s, after expansion of real pairs.
    pub carriers: Vec<f64>,
    pub halfwidth: f64,
    pub rejections: usize,
    pub x: ComplexSeries,
    pub baseband_peak: f64,
    pub lambda: f64,
    pub y: FoldedSeries,
    /// `x` plus everything the converter added besides folding (noise and
    /// quantization error). Used for ground-truth order selection.
    pub reference: ComplexSeries,
}

fn expand(carriers_hz: &[f64], real: bool) -> Vec<f64> {
    if real {
        carriers_hz
            .iter()
            .flat_map(|&f| [hz_to_rad(f), -hz_to_rad(f)])
            .collect()
    } else {
        carriers_hz.iter().map(|&f| hz_to_rad(f)).collect()
    }
}

/// Draws carriers (rejecting overlapping or aliasing sets), synthesizes the
/// signal and folds it. Returns `Ok(None)` when no admissible draw exists.
pub fn prepare_trial(
    cfg: &ExperimentConfig,
    trial: usize,
    snr_db: Option<f64>,
) -> Result<Option<PreparedTrial>> {
    let seed = trial_seed(cfg.seed, trial as u64);
    let s = &cfg.signal;
    let halfwidth = s.halfwidth();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rejections = 0;
    let carriers_hz = match &s.carriers_hz {
        Some(c) => c.clone(),
        None => {
            let [lo, hi] = s.carrier_range_hz.expect("validated");
            let mut found = None;
            for _ in 0..MAX_DRAWS {
                let draw: Vec<f64> = (0..s.band_count).map(|_| rng.random_range(lo..=hi)).collect();
                let w = expand(&draw, s.real);
                let separated = (0..w.len())
                    .all(|p| (p + 1..w.len()).all(|q| (w[p] - w[q]).abs() > halfwidth));
                let alias_free = alias_free_check(&w, halfwidth, s.sample_period)?.alias_free;
                if separated && alias_free {
                    found = Some(draw);
                    break;
                }
                rejections += 1;
            }
            match found {
                Some(d) => d,
                None => return Ok(None),
            }
        }
    };
    let carriers = expand(&carriers_hz, s.real);
    let mut seeds = Vec::with_capacity(carriers.len());
    for i in 0..carriers_hz.len() {
        let energy = s.band_energies.as_ref().map_or(1.0, |e| e[i]);
        let b = BasebandSeed::new(rng.next_u64(), energy);
        seeds.push(b);
        if s.real {
            seeds.push(b.conjugated());
        }
    }
    let mut spec = MultibandSpec::new(halfwidth, carriers.clone(), seeds, s.components_per_band)?;
    if let Some(lead) = s.lead_in {
        spec = spec.with_lead_in(lead);
    }
    let grid = TimeGrid::from_origin(s.sample_period, s.samples)?;
    let signal = synth_multiband(&spec, &grid)?.normalized_to_peak(s.peak);
    let x = signal.series.clone();
    let lambda = cfg.modulo.lambda_for(s.peak)?;

    let clean_cfg = ModuloConfig::new(lambda).with_channels(cfg.modulo.channels);
    let mut conv = clean_cfg.clone();
    conv.bit_depth = cfg.modulo.bit_depth;
    let snr = snr_db.or(cfg.modulo.snr_db);
    if let Some(level) = snr {
        conv = conv.with_noise(level, noise_seed(seed, level), cfg.modulo.noise_placement);
    }
    let y = fold_series(&x, &conv)?;
    let clean = fold_series(&x, &clean_cfg)?;
    let reference = x.with_samples(
        x.samples()
            .iter()
            .zip(y.samples().iter().zip(clean.samples()))
            .map(|(&a, (&b, &c))| a + (b - c))
            .collect(),
    )?;
    Ok(Some(PreparedTrial {
        trial,
        seed,
        snr_db: snr,
        carriers_hz,
        carriers,
        halfwidth,
        rejections,
        x,
        baseband_peak: signal.baseband_peak(),
        lambda,
        y,
        reference,
    }))
}

/// Order decided for a trial; `None` when no order keeps the filtered ground
/// truth below `λ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrderDecision {
    pub order: Option<usize>,
    pub source: OrderSource,
}

fn recovery_carriers(cfg: &ExperimentConfig, p: &PreparedTrial) -> Vec<f64> {
    let offset = hz_to_rad(cfg.recovery.carrier_offset_hz);
    p.carriers.iter().map(|w| w + offset).collect()
}

/// Per-trial order selection for every rule except `min-peak`.
pub fn decide_order(cfg: &ExperimentConfig, p: &PreparedTrial) -> Result<OrderDecision> {
    let r = &cfg.recovery;
    let empirical = |source| -> Result<OrderDecision> {
        let choice = select_order_empirical(
            &[&p.reference],
            &p.carriers,
            p.lambda,
            Some(r.order_target),
            r.tap_cap,
        )?;
        Ok(OrderDecision {
            order: choice.admissible().then_some(choice.order),
            source,
        })
    };
    match r.order_rule {
        OrderRule::Fixed => Ok(OrderDecision {
            order: r.order,
            source: OrderSource::Fixed,
        }),
        OrderRule::Empirical | OrderRule::MinPeak => empirical(OrderSource::Empirical),
        OrderRule::Theory => {
            let beta = choose_beta(p.baseband_peak, p.lambda);
            match choose_order(p.lambda, beta, p.carriers.len(), p.halfwidth, p.y.series().sample_period()) {
                Ok(n) if n * p.carriers.len() <= r.tap_cap => Ok(OrderDecision {
                    order: Some(n),
                    source: OrderSource::Theory,
                }),
                Ok(_) | Err(Error::RateTooSlow { .. }) => empirical(OrderSource::EmpiricalFallback),
                Err(e) => Err(e),
            }
        }
    }
}

fn classify(cfg: &ExperimentConfig, m: &ErrorMetrics, peak: f64) -> Status {
    let t = &cfg.thresholds;
    if m.nmse < t.exact_nmse {
        Status::Exact
    } else if m.mse <= t.degraded_mse_rel * peak * peak {
        Status::Degraded
    } else {
        Status::Failed
    }
}

fn infeasible(p: Option<&PreparedTrial>, trial: usize, seed: u64, snr_db: Option<f64>) -> TrialRecord {
    TrialRecord {
        trial,
        seed,
        snr_db,
        method: Method::Proposed,
        carriers_hz: p.map_or_else(Vec::new, |p| p.carriers_hz.clone()),
        order: 0,
        order_source: OrderSource::None,
        fold_count: 0,
        rejections: p.map_or(0, |p| p.rejections),
        lambda: p.map_or(f64::NAN, |p| p.lambda),
        peak: p.map_or(f64::NAN, |p| p.x.peak_amplitude()),
        mse: f64::NAN,
        nmse: f64::NAN,
        max_err: f64::NAN,
        status: Status::InfeasibleConfig,
        error: None,
        runtime_ms: 0.0,
    }
}

/// Runs the proposed recovery on a prepared trial with a decided order.
pub fn run_proposed(
    cfg: &ExperimentConfig,
    p: &PreparedTrial,
    decision: OrderDecision,
) -> Result<TrialRecord> {
    let start = Instant::now();
    let Some(order) = decision.order else {
        let mut rec = infeasible(Some(p), p.trial, p.seed, p.snr_db);
        rec.order_source = decision.source;
        return Ok(rec);
    };
    let mut params = RecoveryParams::new(
        p.lambda,
        recovery_carriers(cfg, p),
        order,
        p.y.series().sample_period(),
    )
    .with_tap_cap(cfg.recovery.tap_cap)
    .with_beta(choose_beta(p.baseband_peak, p.lambda));
    if let Some(w) = cfg.recovery.warmup {
        params = params.with_warmup(w);
    }
    let peak = p.x.peak_amplitude();
    let (estimate, fold_count, error) = match recover(&p.y, &params) {
        Ok(r) => (r.recovered, r.fold_indices.len(), None),
        Err(e @ (Error::WarmupViolation { .. } | Error::OrderTooSmall { .. })) => {
            (p.y.series().clone(), 0, Some(e.to_string()))
        }
        Err(e) => return Err(e),
    };
    let m = mse(&p.x, &estimate)?;
    let status = if error.is_some() {
        Status::Failed
    } else {
        classify(cfg, &m, peak)
    };
    Ok(TrialRecord {
        trial: p.trial,
        seed: p.seed,
        snr_db: p.snr_db,
        method: Method::Proposed,
        carriers_hz: p.carriers_hz.clone(),
        order,
        order_source: decision.source,
        fold_count,
        rejections: p.rejections,
        lambda: p.lambda,
        peak,
        mse: m.mse,
        nmse: m.nmse,
        max_err: m.max_err,
        status,
        error,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Runs the finite-difference baseline of the given order.
pub fn run_baseline(cfg: &ExperimentConfig, p: &PreparedTrial, order: usize) -> Result<TrialRecord> {
    let start = Instant::now();
    let r = us_alg_recover(&p.y, p.lambda, order)?;
    let peak = p.x.peak_amplitude();
    let m = mse(&p.x, &r.recovered)?;
    Ok(TrialRecord {
        trial: p.trial,
        seed: p.seed,
        snr_db: p.snr_db,
        method: Method::UsAlg,
        carriers_hz: p.carriers_hz.clone(),
        order,
        order_source: OrderSource::Fixed,
        fold_count: r.fold_indices.len(),
        rejections: p.rejections,
        lambda: p.lambda,
        peak,
        mse: m.mse,
        nmse: m.nmse,
        max_err: m.max_err,
        status: classify(cfg, &m, peak),
        error: None,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Prepares and recovers one trial (per-trial order rules).
pub fn run_trial(cfg: &ExperimentConfig, trial: usize, snr_db: Option<f64>) -> Result<Vec<TrialRecord>> {
    let seed = trial_seed(cfg.seed, trial as u64);
    let Some(p) = prepare_trial(cfg, trial, snr_db)? else {
        return Ok(vec![infeasible(None, trial, seed, snr_db)]);
    };
    let decision = decide_order(cfg, &p)?;
    let mut out = vec![run_proposed(cfg, &p, decision)?];
    for &n in &cfg.recovery.baseline_orders {
        out.push(run_baseline(cfg, &p, n)?);
    }
    Ok(out)
}

fn flatten(v: Vec<Result<Vec<TrialRecord>>>) -> Result<Vec<TrialRecord>> {
    let mut out = Vec::new();
    for r in v {
        out.extend(r?);
    }
    Ok(out)
}

/// Seeded noiseless trials over random carrier draws.
pub fn run_noiseless_suite(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    flatten(
        (0..cfg.trials)
            .into_par_iter()
            .map(|i| run_trial(cfg, i, None))
            .collect(),
    )
}

/// Every trial at every noise level. With the `min-peak` rule the order of a
/// level minimizes the worst filtered peak of `x + η` over its trials.
/// Signal draws are shared across levels; noise seeds differ.
pub fn run_noise_sweep(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    let levels = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("noise sweep needs [sweep] levels".into()))?
        .snr_db
        .clone();
    let mut out = Vec::new();
    for level in levels {
        let snr = (level != f64::INFINITY).then_some(level);
        if cfg.recovery.order_rule != OrderRule::MinPeak {
            out.extend(flatten(
                (0..cfg.trials)
                    .into_par_iter()
                    .map(|i| run_trial(cfg, i, snr))
                    .collect(),
            )?);
            continue;
        }
        let prepared: Vec<Result<Option<PreparedTrial>>> = (0..cfg.trials)
            .into_par_iter()
            .map(|i| prepare_trial(cfg, i, snr))
            .collect();
        let prepared: Vec<Option<PreparedTrial>> = prepared.into_iter().collect::<Result<_>>()?;
        let refs: Vec<&ComplexSeries> = prepared.iter().flatten().map(|p| &p.reference).collect();
        let decision = match prepared.iter().flatten().next() {
            Some(first) => {
                let choice = select_order_empirical(
                    &refs,
                    &first.carriers,
                    first.lambda,
                    None,
                    cfg.recovery.tap_cap,
                )?;
                OrderDecision {
                    order: Some(choice.order),
                    source: OrderSource::MinPeak,
                }
            }
            None => OrderDecision {
                order: None,
                source: OrderSource::None,
            },
        };
        let recs: Vec<Result<Vec<TrialRecord>>> = prepared
            .par_iter()
            .enumerate()
            .map(|(i, p)| match p {
                None => Ok(vec![infeasible(None, i, trial_seed(cfg.seed, i as u64), snr)]),
                Some(p) => {
                    let mut v = vec![run_proposed(cfg, p, decision)?];
                    for &n in &cfg.recovery.baseline_orders {
                        v.push(run_baseline(cfg, p, n)?);
                    }
                    Ok(v)
                }
            })
            .collect();
        out.extend(flatten(recs)?);
    }
    Ok(out)
}

/// The quantized run: proposed method plus every configured baseline order,
/// for each of `cfg.trials` draws.
pub fn run_quantized_hw(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    run_noiseless_suite(cfg)
}

/// Achievability grid for the `[map]` section.
pub fn run_feasibility_map(cfg: &ExperimentConfig) -> Result<Vec<MapPoint>> {
    let m = cfg
        .map
        .as_ref()
        .ok_or_else(|| Error::Config("feasibility map needs a [map] section".into()))?;
    Ok(achievability_map(
        m.f_upper_hz,
        m.periods_s,
        std::f64::consts::PI * m.bandwidth_hz,
    ))
}

/// Records plus, for map experiments, the grid.
#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    pub records: Vec<TrialRecord>,
    pub map: Vec<MapPoint>,
}

/// Runs `cfg` on a pool of `jobs` workers (all cores when `None`).
pub fn run_experiment(cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<RunOutput> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| {
        Ok(match cfg.kind {
            ExperimentKind::NoiselessSuite | ExperimentKind::SingleRun => RunOutput {
                records: run_noiseless_suite(cfg)?,
                map: Vec::new(),
            },
            ExperimentKind::NoiseSweep => RunOutput {
                records: run_noise_sweep(cfg)?,
                map: Vec::new(),
            },
            ExperimentKind::QuantizedHw => RunOutput {
                records: run_quantized_hw(cfg)?,
                map: Vec::new(),
            },
            ExperimentKind::FeasibilityMap => RunOutput {
                records: Vec::new(),
                map: run_feasibility_map(cfg)?,
            },
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_differ_per_trial() {
        let a: Vec<u64> = (0..100).map(|i| trial_seed(7, i)).collect();
        let mut b = a.clone();
        b.sort_unstable();
        b.dedup();
        assert_eq!(b.len(), 100);
        assert_ne!(trial_seed(7, 0), trial_seed(8, 0));
    }

    #[test]
    fn trivial_threshold_is_exact() {
        let mut cfg = ExperimentConfig::noiseless_suite();
        cfg.trials = 2;
        cfg.signal.samples = 512;
        cfg.modulo.dynamic_range = Some(0.9);
        let recs = run_noiseless_suite(&cfg).unwrap();
        assert!(recs
            .iter()
            .all(|r| matches!(r.status, Status::Exact | Status::InfeasibleConfig)));
        assert!(recs.iter().any(|r| r.status == Status::Exact && r.nmse == 0.0));
    }
}
