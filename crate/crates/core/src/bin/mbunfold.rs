use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mbunfold::error::{Error, Result};
use mbunfold::filter::build_psi_power;
use mbunfold::harness::config::hz_to_rad;
use mbunfold::harness::{emit_report, run_experiment, ExperimentConfig, ExperimentKind};
use mbunfold::io::{
    ingest_series, read_series, write_folded, write_json, write_map_csv, write_series, write_taps,
    Ingested, RecoveryReport,
};
use mbunfold::modulo::{fold_series, Channels, FoldedSeries, ModuloConfig, NoisePlacement};
use mbunfold::planner::{achievability_map, plan, Span};
use mbunfold::recovery::{choose_beta, choose_order, recover, us_alg_recover, RecoveryParams};
use mbunfold::series::TimeGrid;
use mbunfold::signal::{synth_multiband, BasebandSeed, LeadIn, MultibandSpec};

const OUT_ENV: &str = "MBUNFOLD_OUT_DIR";

#[derive(Parser)]
#[command(name = "mbunfold", version, about = "Modulo sampling and unfolding of multiband signals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a multiband signal to CSV.
    Synth(SynthArgs),
    /// Fold a series through a simulated modulo converter.
    Fold(FoldArgs),
    /// Unfold folded samples.
    Recover(RecoverArgs),
    /// Noiseless recovery over random carrier draws.
    Suite(ExperimentArgs),
    /// Recovery error against noise level.
    Sweep(ExperimentArgs),
    /// Quantized high-dynamic-range run with the baseline comparison.
    Hw(OptionalSeedArgs),
    /// Sampling-rate feasibility for a carrier set.
    Plan(PlanArgs),
    /// Achievability map over (f_U, T_S).
    Map(MapArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Carrier frequencies in Hz (comma separated).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    carriers_hz: Vec<f64>,
    /// Total width of each band in Hz.
    #[arg(long)]
    bandwidth_hz: f64,
    #[arg(long)]
    sample_period: f64,
    #[arg(long, default_value_t = 1024)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    components: usize,
    /// Normalize the componentwise peak to this value.
    #[arg(long)]
    peak: Option<f64>,
    /// Add the conjugate band at -f for every carrier (real signal).
    #[arg(long)]
    real: bool,
    /// Per-carrier amplitude scales.
    #[arg(long, value_delimiter = ',')]
    energies: Option<Vec<f64>>,
    /// Lead-in silence and ramp in seconds.
    #[arg(long, num_args = 2, value_names = ["QUIET", "RAMP"])]
    lead_in: Option<Vec<f64>>,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlacementArg {
    PreFold,
    PostFold,
    PostFoldRefolded,
}

#[derive(Clone, Copy, ValueEnum)]
enum ChannelsArg {
    Complex,
    RealOnly,
}

#[derive(Args)]
struct FoldArgs {
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    bits: Option<u32>,
    #[arg(long)]
    snr_db: Option<f64>,
    #[arg(long, default_value_t = 0)]
    noise_seed: u64,
    #[arg(long, value_enum, default_value_t = PlacementArg::PreFold)]
    placement: PlacementArg,
    #[arg(long, value_enum, default_value_t = ChannelsArg::Complex)]
    channels: ChannelsArg,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Proposed,
    UsAlg,
}

#[derive(Args)]
struct RecoverArgs {
    /// Folded series (CSV with a sidecar carrying the converter settings).
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    carriers_hz: Vec<f64>,
    /// Expand carriers into ±f pairs.
    #[arg(long)]
    real: bool,
    /// Filter order; chosen from the rate condition when omitted.
    #[arg(long)]
    order: Option<usize>,
    /// Total band width in Hz, for automatic order selection.
    #[arg(long)]
    bandwidth_hz: Option<f64>,
    /// Dynamic-range bound β (multiple of 2λ); defaults to 2λ.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    warmup: Option<usize>,
    #[arg(long, default_value_t = mbunfold::filter::DEFAULT_TAP_CAP)]
    tap_cap: usize,
    #[arg(long, value_enum, default_value_t = MethodArg::Proposed)]
    method: MethodArg,
    /// Write the filter taps as JSON.
    #[arg(long)]
    taps_out: Option<PathBuf>,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment config; the built-in preset is used otherwise.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    /// Output directory (default: $MBUNFOLD_OUT_DIR, else ./results/<kind>).
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Also write timings.csv.
    #[arg(long)]
    timings: bool,
    /// Print the resolved config as TOML and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, required = true)]
    seed: u64,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct OptionalSeedArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    carriers_hz: Vec<f64>,
    #[arg(long)]
    real: bool,
    #[arg(long)]
    bandwidth_hz: f64,
    #[arg(long)]
    sample_period: f64,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MapArgs {
    #[arg(long)]
    bandwidth_hz: f64,
    #[arg(long)]
    fu_min: f64,
    #[arg(long)]
    fu_max: f64,
    #[arg(long, default_value_t = 200)]
    fu_count: usize,
    #[arg(long)]
    ts_min: f64,
    #[arg(long)]
    ts_max: f64,
    #[arg(long, default_value_t = 200)]
    ts_count: usize,
    #[arg(long, short)]
    out: PathBuf,
}

fn expand(carriers_hz: &[f64], real: bool) -> Vec<f64> {
    carriers_hz
        .iter()
        .flat_map(|&f| {
            if real {
                vec![hz_to_rad(f), -hz_to_rad(f)]
            } else {
                vec![hz_to_rad(f)]
            }
        })
        .collect()
}

fn synth(a: SynthArgs) -> Result<bool> {
    let carriers = expand(&a.carriers_hz, a.real);
    let mut seeds = Vec::new();
    for i in 0..a.carriers_hz.len() {
        let energy = match &a.energies {
            Some(e) => *e
                .get(i)
                .ok_or_else(|| Error::InvalidArgument("one energy per carrier".into()))?,
            None => 1.0,
        };
        let s = BasebandSeed::new(mbunfold::harness::trial_seed(a.seed, i as u64), energy);
        seeds.push(s);
        if a.real {
            seeds.push(s.conjugated());
        }
    }
    let mut spec = MultibandSpec::new(
        std::f64::consts::PI * a.bandwidth_hz,
        carriers,
        seeds,
        a.components,
    )?;
    if let Some(l) = a.lead_in {
        spec = spec.with_lead_in(LeadIn {
            quiet: l[0],
            ramp: l[1],
        });
    }
    let grid = TimeGrid::from_origin(a.sample_period, a.samples)?;
    let mut sig = synth_multiband(&spec, &grid)?;
    if let Some(p) = a.peak {
        sig = sig.normalized_to_peak(p);
    }
    write_series(&a.out, &sig.series)?;
    eprintln!(
        "wrote {} samples, peak {:e}, baseband peak {:e}",
        sig.series.len(),
        sig.series.peak_amplitude(),
        sig.baseband_peak()
    );
    Ok(true)
}

fn fold(a: FoldArgs) -> Result<bool> {
    let x = read_series(&a.input)?;
    let mut cfg = ModuloConfig::new(a.lambda).with_channels(match a.channels {
        ChannelsArg::Complex => Channels::Complex,
        ChannelsArg::RealOnly => Channels::RealOnly,
    });
    if let Some(b) = a.bits {
        cfg = cfg.with_bits(b);
    }
    if let Some(snr) = a.snr_db {
        let placement = match a.placement {
            PlacementArg::PreFold => NoisePlacement::PreFold,
            PlacementArg::PostFold => NoisePlacement::PostFold,
            PlacementArg::PostFoldRefolded => NoisePlacement::PostFoldRefolded,
        };
        cfg = cfg.with_noise(snr, a.noise_seed, placement);
    }
    let y = fold_series(&x, &cfg)?;
    write_folded(&a.out, &y)?;
    Ok(true)
}

fn recovery_report_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map_or_else(|| "recovered".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}.recovery.json"))
}

fn recover_cmd(a: RecoverArgs) -> Result<bool> {
    let y: FoldedSeries = match ingest_series(&a.input)? {
        Ingested::Folded(f) => f,
        Ingested::Plain(_) => {
            return Err(Error::InvalidArgument(
                "input sidecar has no modulo section; fold it first".into(),
            ))
        }
    };
    let lam = y.lambda();
    let result = match a.method {
        MethodArg::UsAlg => {
            let n = a.order.unwrap_or(1);
            let r = us_alg_recover(&y, lam, n)?;
            write_series(&a.out, &r.recovered)?;
            r
        }
        MethodArg::Proposed => {
            if a.carriers_hz.is_empty() {
                return Err(Error::InvalidArgument("--carriers-hz is required".into()));
            }
            let carriers = expand(&a.carriers_hz, a.real);
            let beta = a.beta.unwrap_or_else(|| choose_beta(0.0, lam));
            let order = match (a.order, a.bandwidth_hz) {
                (Some(n), _) => n,
                (None, Some(fb)) => choose_order(
                    lam,
                    beta,
                    carriers.len(),
                    std::f64::consts::PI * fb,
                    y.series().sample_period(),
                )?,
                (None, None) => {
                    return Err(Error::InvalidArgument(
                        "give --order or --bandwidth-hz".into(),
                    ))
                }
            };
            let mut params = RecoveryParams::new(lam, carriers.clone(), order, y.series().sample_period())
                .with_beta(beta)
                .with_tap_cap(a.tap_cap);
            if let Some(w) = a.warmup {
                params = params.with_warmup(w);
            }
            if let Some(p) = &a.taps_out {
                write_taps(p, &build_psi_power(&carriers, params.sample_period, order)?)?;
            }
            let r = recover(&y, &params)?;
            write_series(&a.out, &r.recovered)?;
            write_json(&recovery_report_path(&a.out), &RecoveryReport::new(&params, &r))?;
            r
        }
    };
    eprintln!(
        "recovered {} samples, {} fold events, order {}",
        result.recovered.len(),
        result.fold_indices.len(),
        result.diagnostics.order
    );
    Ok(true)
}

fn out_dir(explicit: Option<PathBuf>, kind: &str) -> PathBuf {
    explicit.unwrap_or_else(|| match std::env::var_os(OUT_ENV) {
        Some(d) => PathBuf::from(d).join(kind),
        None => PathBuf::from("results").join(kind),
    })
}

fn experiment(kind: ExperimentKind, seed: Option<u64>, run: RunArgs, label: &str) -> Result<bool> {
    let mut cfg = match &run.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::preset(kind),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(t) = run.trials {
        cfg.trials = t;
    }
    cfg.validate()?;
    if run.print_config {
        print!("{}", cfg.to_toml_string()?);
        return Ok(true);
    }
    let out = run_experiment(&cfg, run.jobs)?;
    let dir = out_dir(run.out, label);
    let (summary, files) = emit_report(&cfg, &out, &dir, run.timings)?;
    for c in &summary.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    for f in files {
        eprintln!("wrote {}", f.display());
    }
    Ok(summary.all_passed)
}

fn plan_cmd(a: PlanArgs) -> Result<bool> {
    let report = plan(
        &expand(&a.carriers_hz, a.real),
        std::f64::consts::PI * a.bandwidth_hz,
        a.sample_period,
    )?;
    let text = serde_json::to_string_pretty(&report)?;
    match a.out {
        Some(p) => write_json(&p, &report)?,
        None => println!("{text}"),
    }
    Ok(report.alias_free)
}

fn map_cmd(a: MapArgs) -> Result<bool> {
    let points = achievability_map(
        Span::new(a.fu_min, a.fu_max, a.fu_count),
        Span::new(a.ts_min, a.ts_max, a.ts_count),
        std::f64::consts::PI * a.bandwidth_hz,
    );
    write_map_csv(&a.out, &points)?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Fold(a) => fold(a),
        Command::Recover(a) => recover_cmd(a),
        Command::Suite(a) => experiment(ExperimentKind::NoiselessSuite, Some(a.seed), a.run, "suite"),
        Command::Sweep(a) => experiment(ExperimentKind::NoiseSweep, Some(a.seed), a.run, "sweep"),
        Command::Hw(a) => experiment(ExperimentKind::QuantizedHw, a.seed, a.run, "hw"),
        Command::Plan(a) => plan_cmd(a),
        Command::Map(a) => map_cmd(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
