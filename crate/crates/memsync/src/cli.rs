//! Command-line front end.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use memsync_core::bench::{derive_all, rank, DeriveConfig, DerivedMetrics, MemoryRecord, SortKey, CLOCK_FLOOR_S};
use memsync_core::fit::{fit_decay, initial_guess, FitOptions, Weighting};
use memsync_core::model::{derived_times, efficiency_at, lifetime_budget, RateBudget, BEAT42_HZ, BEAT43_HZ};
use memsync_core::sim::{Protocol, SimConfig, SimResult};
use memsync_core::sync::{loss_prob_b, n_photon_rate, ReadoutPolicy, SyncParams};
use memsync_core::{DecayModelParams, Error as CoreError};
use serde::Serialize;
use serde_json::json;

use crate::dataset::{load_source, resolve_source, DatasetSource};
use crate::fitio::{load_samples, FitReport};
use crate::manifest::{strip_manifest_flag, RunManifest};
use crate::parallel::simulate_parallel;
use crate::plot::{plot_data, plot_table};
use crate::quantity::{parse_hertz, parse_seconds};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "memsync", version, about = "Memory-assisted photon synchronisation toolkit")]
pub struct Cli {
    /// Output format on standard output.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Write a run manifest to this path.
    #[arg(long, global = true, value_name = "PATH")]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    /// Only for `bench`.
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the efficiency-decay model at given times.
    Model(ModelArgs),
    /// Fit the decay model to a `t_s,eta[,sigma]` CSV file.
    Fit(FitArgs),
    /// Analytic N-photon rate of synchronised sources.
    Rate(RateArgs),
    /// Monte-Carlo simulation of the synchronisation protocol.
    Simulate(SimulateArgs),
    /// Derived figures of merit for a memory dataset.
    Bench(BenchArgs),
    /// Memory lifetime from a sum of decay rates.
    Budget(BudgetArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    OffRes,
    OnRes,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Model parameters as inline JSON or a path to a JSON file.
    #[arg(long, conflicts_with = "preset")]
    pub params: Option<String>,
    /// Built-in parameter set (default off-res).
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Evaluation times, comma separated, with optional unit suffix.
    #[arg(long, required = true, value_delimiter = ',', value_parser = parse_seconds, allow_hyphen_values = true)]
    pub t: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightingArg {
    Uniform,
    InverseVariance,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV with header `t_s,eta` or `t_s,eta,sigma`.
    #[arg(long)]
    pub data: PathBuf,
    /// Initial parameters as inline JSON or a path; a heuristic guess when absent.
    #[arg(long)]
    pub init: Option<String>,
    #[arg(long, value_enum, default_value_t = WeightingArg::Uniform)]
    pub weighting: WeightingArg,
    #[arg(long, default_value_t = 500)]
    pub max_iterations: usize,
    /// Also write the JSON report to this path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    /// R = Y^N.
    AsStated,
    /// R = Y^(N-1).
    TableConsistent,
    /// R given by `--r`.
    Literal,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    #[arg(long, default_value_t = 6)]
    pub n: u32,
    #[arg(long, default_value_t = 1e-3)]
    pub q: f64,
    /// Clock cycle, with optional unit suffix.
    #[arg(long, value_parser = parse_seconds)]
    pub tau_c: f64,
    #[arg(long)]
    pub eta0: f64,
    /// Fractional delay in clock cycles.
    #[arg(long)]
    pub f: f64,
    /// How R is obtained; the default is 0.0024 at N = 6, q = 1e-3 and
    /// table-consistent elsewhere.
    #[arg(long, value_enum)]
    pub r_policy: Option<PolicyArg>,
    /// Readout rate for the literal policy; implies it.
    #[arg(long)]
    pub r: Option<f64>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("loss").required(true).args(["b", "f"])))]
pub struct SimulateArgs {
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub q: f64,
    /// Memory loss probability per cycle.
    #[arg(long)]
    pub b: Option<f64>,
    /// Fractional delay; sets b = 1 - exp(-1/f).
    #[arg(long)]
    pub f: Option<f64>,
    #[arg(long)]
    pub eta0: f64,
    /// Total clock cycles; scientific notation accepted.
    #[arg(long, value_parser = parse_count)]
    pub cycles: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 8)]
    pub replicas: u32,
    /// Keep photons in units that failed to retrieve.
    #[arg(long)]
    pub keep_unretrieved: bool,
    /// Deliver photons heralded in the readout cycle without the memory.
    #[arg(long)]
    pub fresh_bypass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SortArg {
    R6,
    Mu1,
    Fe,
}

impl From<SortArg> for SortKey {
    fn from(s: SortArg) -> Self {
        match s {
            SortArg::R6 => SortKey::R6,
            SortArg::Mu1 => SortKey::Mu1,
            SortArg::Fe => SortKey::Fe,
        }
    }
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Dataset CSV; defaults to $MEMSYNC_DATASET, then the bundled data.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Sort order; input order when absent.
    #[arg(long, value_enum)]
    pub sort: Option<SortArg>,
    /// Write the table to this path (JSON with `--format json`, CSV otherwise).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write plot data to `<STEM>.txt` and `<STEM>.json`.
    #[arg(long, value_name = "STEM")]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BudgetArgs {
    /// Decay rates, comma separated, with optional unit suffix.
    #[arg(long, required = true, value_delimiter = ',', value_parser = parse_hertz)]
    pub rates: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run.
    pub path: PathBuf,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(m: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: m.into(),
        }
    }
    fn data(m: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            message: m.into(),
        }
    }
    fn numerical(m: impl Into<String>) -> Self {
        Self {
            code: EXIT_NUMERICAL,
            message: m.into(),
        }
    }
}

/// Bad flag values are usage errors, everything else is numerical.
fn core_err(e: CoreError) -> CliError {
    match e {
        CoreError::InvalidParameter { .. } => CliError::usage(e.to_string()),
        _ => CliError::numerical(e.to_string()),
    }
}

fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v < 1.8e19 => Ok(v as u64),
        _ => Err(format!("`{s}` is not a non-negative whole number")),
    }
}

/// Runs `argv` (program name first) and returns the exit code.
pub fn run<O: Write, E: Write>(argv: &[String], out: &mut O, err: &mut E) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = out.write_all(text.as_bytes());
            } else {
                let _ = err.write_all(text.as_bytes());
            }
            return code;
        }
    };
    let recorded = strip_manifest_flag(argv.get(1..).unwrap_or(&[]));
    match execute(&cli, recorded, err) {
        Ok((text, manifest)) => {
            if let Some(path) = &cli.manifest {
                let body = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
                if let Err(e) = std::fs::write(path, body + "\n") {
                    let _ = writeln!(err, "error: {}: {e}", path.display());
                    return EXIT_DATA;
                }
            }
            match out.write_all(text.as_bytes()) {
                Ok(()) => EXIT_OK,
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    EXIT_DATA
                }
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

fn execute<E: Write>(cli: &Cli, argv: Vec<String>, err: &mut E) -> Result<(String, RunManifest), CliError> {
    if cli.format == Format::Csv && !matches!(cli.command, Command::Bench(_) | Command::Replay(_)) {
        return Err(CliError::usage("--format csv is only available for bench"));
    }
    let name = match &cli.command {
        Command::Model(_) => "model",
        Command::Fit(_) => "fit",
        Command::Rate(_) => "rate",
        Command::Simulate(_) => "simulate",
        Command::Bench(_) => "bench",
        Command::Budget(_) => "budget",
        Command::Replay(_) => "replay",
    };
    let mut m = RunManifest::new(name, argv);
    m.default("clock_floor_s", CLOCK_FLOOR_S)
        .default("r_policy", ReadoutPolicy::default_for(6, 1e-3))
        .default("beat43_hz", BEAT43_HZ)
        .default("beat42_hz", BEAT42_HZ)
        .default("format", format!("{:?}", cli.format).to_lowercase());
    let f = cli.format;
    let text = match &cli.command {
        Command::Model(a) => model(a, f, &mut m)?,
        Command::Fit(a) => fit(a, f, &mut m)?,
        Command::Rate(a) => rate(a, f, &mut m)?,
        Command::Simulate(a) => simulate(a, f, &mut m)?,
        Command::Bench(a) => bench(a, f, &mut m, err)?,
        Command::Budget(a) => budget(a, f, &mut m)?,
        Command::Replay(a) => return replay(&a.path, err),
    };
    Ok((text, m))
}

fn to_json(v: &impl Serialize) -> String {
    serde_json::to_string_pretty(v).expect("output serialises") + "\n"
}

fn read_params(arg: &str) -> Result<DecayModelParams, CliError> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).map_err(|e| CliError::data(format!("{arg}: {e}")))?
    };
    let p: DecayModelParams =
        serde_json::from_str(&text).map_err(|e| CliError::data(format!("model parameters: {e}")))?;
    p.validate().map_err(|e| CliError::data(e.to_string()))?;
    Ok(p)
}

fn model(a: &ModelArgs, format: Format, m: &mut RunManifest) -> Result<String, CliError> {
    let params = match (&a.params, a.preset) {
        (Some(s), _) => read_params(s)?,
        (None, Some(Preset::OnRes)) => DecayModelParams::on_resonance(),
        (None, _) => DecayModelParams::off_resonance(),
    };
    m.param("model", params).param("t_s", &a.t);
    let times = derived_times(params.tau_s, params.tau_bar).ok();
    let points: Vec<(f64, f64)> = a.t.iter().map(|&t| (t, efficiency_at(&params, t))).collect();
    Ok(match format {
        Format::Json => to_json(&json!({
            "params": params,
            "envelope_times": times,
            "points": points.iter().map(|(t, e)| json!({"t_s": t, "eta": e})).collect::<Vec<_>>(),
        })),
        _ => {
            let mut s = String::new();
            if let Some(et) = times {
                let _ = writeln!(
                    s,
                    "tau_gamma_s  {:.6e}\ntau_sigma_s  {:.6e}",
                    et.tau_gamma, et.tau_sigma
                );
            }
            let _ = writeln!(s, "{:>14}  {:>14}", "t_s", "eta");
            for (t, e) in points {
                let _ = writeln!(s, "{t:>14.6e}  {e:>14.8}");
            }
            s
        }
    })
}

fn fit(a: &FitArgs, format: Format, m: &mut RunManifest) -> Result<String, CliError> {
    let samples = load_samples(&a.data).map_err(|e| CliError::data(e.to_string()))?;
    let init = match &a.init {
        Some(s) => read_params(s)?,
        None => initial_guess(&samples).map_err(|e| CliError::data(e.to_string()))?,
    };
    let opts = FitOptions {
        weighting: match a.weighting {
            WeightingArg::Uniform => Weighting::Uniform,
            WeightingArg::InverseVariance => Weighting::InverseVariance,
        },
        max_iterations: a.max_iterations,
        ..FitOptions::default()
    };
    m.param("data", a.data.display().to_string())
        .param("init", init)
        .param("weighting", opts.weighting)
        .param("max_iterations", opts.max_iterations)
        .default("xtol", opts.xtol)
        .default("ftol", opts.ftol)
        .default("bounds", format!("{:?}", opts.bounds));
    let result = fit_decay(&samples, &init, &opts).map_err(|e| match e {
        CoreError::TooFewSamples { .. } | CoreError::DegenerateTimes | CoreError::InvalidParameter { .. } => {
            CliError::data(e.to_string())
        }
        other => CliError::numerical(other.to_string()),
    })?;
    let report = FitReport::new(&result, samples.len());
    if let Some(path) = &a.out {
        std::fs::write(path, to_json(&report)).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    }
    Ok(match format {
        Format::Json => to_json(&report),
        _ => {
            let mut s = String::new();
            let values = memsync_core::fit::ParamSet::of(&report.params).to_array();
            for (name, v) in memsync_core::fit::PARAM_NAMES.iter().zip(values) {
                let e = report.stderr[*name].map_or("inf".to_string(), |e| format!("{e:.3e}"));
                let _ = writeln!(s, "{name:<8} {v:>14.6e} ± {e}");
            }
            let _ = writeln!(
                s,
                "residual_norm {:.6e}\nstatus {:?}\nconverged {}\niterations {}",
                report.residual_norm, report.status, report.converged, report.iterations
            );
            s
        }
    })
}

fn rate(a: &RateArgs, format: Format, m: &mut RunManifest) -> Result<String, CliError> {
    let policy = match (a.r_policy, a.r) {
        (Some(PolicyArg::AsStated), None) => ReadoutPolicy::RootAsStated,
        (Some(PolicyArg::TableConsistent), None) => ReadoutPolicy::RootTableConsistent,
        (Some(PolicyArg::Literal) | None, Some(r)) => ReadoutPolicy::Literal(r),
        (Some(PolicyArg::Literal), None) => return Err(CliError::usage("--r-policy literal needs --r")),
        (Some(_), Some(_)) => return Err(CliError::usage("--r only goes with the literal policy")),
        (None, None) => ReadoutPolicy::default_for(a.n, a.q),
    };
    let p = SyncParams {
        n_sources: a.n,
        q: a.q,
        tau_c: a.tau_c,
        eta0: a.eta0,
        f: a.f,
        r_policy: policy,
    };
    m.param("sync", p);
    let r = n_photon_rate(&p).map_err(core_err)?;
    Ok(match format {
        Format::Json => to_json(&json!({
            "params": p,
            "rate_per_s": r.rate,
            "rate_per_min": r.rate_per_min(),
            "enhancement": r.enhancement,
            "b": r.b,
            "R": r.r,
            "Y": if r.y.is_nan() { None } else { Some(r.y) },
        })),
        _ => {
            let mut s = format!(
                "rate_per_min  {:.6e}\nrate_per_s    {:.6e}\nenhancement   {:.6}\nb             {:.6e}\nR             {:.6e}\n",
                r.rate_per_min(),
                r.rate,
                r.enhancement,
                r.b,
                r.r
            );
            if !r.y.is_nan() {
                let _ = writeln!(s, "Y             {:.6}", r.y);
            }
            s
        }
    })
}

#[derive(Serialize)]
struct SimulateOutput {
    config: SimConfig,
    result: SimResult,
    /// Analytic rate per cycle with the table-consistent readout rate.
    analytic_rate_per_cycle: Option<f64>,
    agreement_ratio: Option<f64>,
    agreement_ratio_ci95: Option<f64>,
}

fn simulate(a: &SimulateArgs, format: Format, m: &mut RunManifest) -> Result<String, CliError> {
    let b = match (a.b, a.f) {
        (Some(b), _) => b,
        (None, Some(f)) if f > 0.0 => loss_prob_b(f),
        (None, f) => return Err(CliError::usage(format!("--f must be positive, got {f:?}"))),
    };
    let cfg = SimConfig {
        protocol: Protocol {
            n_sources: a.n,
            q: a.q,
            b,
            eta0: a.eta0,
            keep_unretrieved: a.keep_unretrieved,
            fresh_bypass: a.fresh_bypass,
        },
        n_cycles: a.cycles,
        seed: a.seed,
        replicas: a.replicas,
    };
    m.param("config", cfg);
    m.seed = Some(a.seed);
    let result = simulate_parallel(&cfg).map_err(core_err)?;
    let analytic = (b > 0.0 && b < 1.0 && a.q > 0.0 && a.q < 1.0)
        .then(|| {
            n_photon_rate(&SyncParams {
                n_sources: a.n,
                q: a.q,
                tau_c: 1.0,
                eta0: a.eta0,
                f: -1.0 / (-b).ln_1p(),
                r_policy: ReadoutPolicy::RootTableConsistent,
            })
            .ok()
        })
        .flatten()
        .map(|r| r.rate);
    let out = SimulateOutput {
        config: cfg,
        result,
        analytic_rate_per_cycle: analytic,
        agreement_ratio: analytic.map(|x| result.rate_per_cycle / x),
        agreement_ratio_ci95: analytic.map(|x| result.ci95 / x),
    };
    Ok(match format {
        Format::Json => to_json(&out),
        _ => {
            let mut s = format!(
                "successes          {}\nreadout_attempts   {}\ncycles             {}\nrate_per_cycle     {:.6e} ± {:.2e}\nunit_availability  {:.6}\n",
                result.n_successes,
                result.n_readout_attempts,
                result.cycles_elapsed,
                result.rate_per_cycle,
                result.ci95,
                result.unit_availability
            );
            if let (Some(x), Some(r), Some(c)) = (analytic, out.agreement_ratio, out.agreement_ratio_ci95) {
                let _ = writeln!(s, "analytic_rate      {x:.6e}\nagreement_ratio    {r:.4} ± {c:.4}");
            }
            let _ = writeln!(s, "seed               {}", a.seed);
            s
        }
    })
}

#[derive(Serialize)]
struct BenchRow<'a> {
    label: &'a str,
    #[serde(flatten)]
    metrics: &'a DerivedMetrics,
}

fn bench<E: Write>(a: &BenchArgs, format: Format, m: &mut RunManifest, err: &mut E) -> Result<String, CliError> {
    let source = resolve_source(a.dataset.as_deref());
    let data = load_source(&source).map_err(|e| CliError::data(format!("{source}: {e}")))?;
    for w in &data.warnings {
        let _ = writeln!(err, "warning: {source}: {w}");
    }
    let cfg = DeriveConfig::default();
    m.param("dataset", source.to_string())
        .param("sort", a.sort.map(|s| format!("{s:?}").to_lowercase()))
        .default("derive", cfg);
    if let DatasetSource::File(p) = &source {
        m.param("dataset_path", p.display().to_string());
    }
    let derived = derive_all(&data.records, &cfg).map_err(|e| CliError::numerical(e.to_string()))?;
    let order: Vec<usize> = match a.sort {
        Some(k) => rank(&derived, k.into()),
        None => (0..derived.len()).collect(),
    };
    let rendered_file = match format {
        Format::Json => bench_json(&data.records, &derived, &order),
        _ => bench_csv(&data.records, &derived, &order),
    };
    if let Some(path) = &a.out {
        write_file(path, &rendered_file)?;
    }
    if let Some(stem) = &a.plot {
        let pd = plot_data(&data.records, &derived, &order);
        write_file(&stem.with_extension("txt"), &plot_table(&pd))?;
        write_file(&stem.with_extension("json"), &to_json(&pd))?;
    }
    Ok(match format {
        Format::Table => bench_table(&data.records, &derived, &order),
        _ => rendered_file,
    })
}

fn write_file(path: &Path, body: &str) -> Result<(), CliError> {
    std::fs::write(path, body).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn bench_json(records: &[MemoryRecord], derived: &[DerivedMetrics], order: &[usize]) -> String {
    let rows: Vec<BenchRow> = order
        .iter()
        .map(|&i| BenchRow {
            label: &records[i].label,
            metrics: &derived[i],
        })
        .collect();
    to_json(&rows)
}

fn bench_csv(records: &[MemoryRecord], derived: &[DerivedMetrics], order: &[usize]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let _ = w.write_record([
        "label",
        "tau_c_s",
        "eta0",
        "f_prime",
        "f_prime_e",
        "mu1",
        "r6_per_min",
        "transmission_upper_limit",
    ]);
    for &i in order {
        let d = &derived[i];
        let _ = w.write_record([
            records[i].label.clone(),
            d.tau_c.to_string(),
            d.eta0.to_string(),
            d.f_prime.to_string(),
            d.f_prime_e.to_string(),
            d.mu1.to_string(),
            d.r6_per_min.to_string(),
            d.transmission_upper_limit.to_string(),
        ]);
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

fn bench_table(records: &[MemoryRecord], derived: &[DerivedMetrics], order: &[usize]) -> String {
    let width = records.iter().map(|r| r.label.len() + 1).max().unwrap_or(5).max(5);
    let mut s = format!(
        "{:<width$}  {:>9}  {:>7}  {:>9}  {:>8}  {:>9}  {:>9}\n",
        "label", "tau_c_s", "eta0", "f'", "f'_e", "mu1", "r6/min"
    );
    for &i in order {
        let d = &derived[i];
        let mut label = records[i].label.clone();
        if d.transmission_upper_limit {
            label.push('*');
        }
        let _ = writeln!(
            s,
            "{label:<width$}  {:>9.2e}  {:>7.4}  {:>9.4}  {:>8.4}  {:>9.2e}  {:>9.2e}",
            d.tau_c, d.eta0, d.f_prime, d.f_prime_e, d.mu1, d.r6_per_min
        );
    }
    if order.iter().any(|&i| derived[i].transmission_upper_limit) {
        s.push_str("* setup transmission not given; 1 used as an upper limit\n");
    }
    s
}

fn budget(a: &BudgetArgs, format: Format, m: &mut RunManifest) -> Result<String, CliError> {
    let budget = a
        .rates
        .iter()
        .enumerate()
        .fold(RateBudget::new(), |b, (i, &r)| b.with(format!("rate{}", i + 1), r));
    m.param("rates_hz", &a.rates);
    let tau = lifetime_budget(&budget).map_err(core_err)?;
    Ok(match format {
        Format::Json => to_json(&json!({
            "rates_hz": a.rates,
            "total_hz": budget.total_hz(),
            "lifetime_s": tau,
        })),
        _ => format!(
            "total_hz    {:.6e}\nlifetime_s  {:.6e}\nlifetime_ns {:.1}\n",
            budget.total_hz(),
            tau,
            tau * 1e9
        ),
    })
}

fn replay<E: Write>(path: &Path, err: &mut E) -> Result<(String, RunManifest), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let manifest: RunManifest =
        serde_json::from_str(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    if manifest.version != env!("CARGO_PKG_VERSION") {
        let _ = writeln!(
            err,
            "warning: manifest written by version {}, running {}",
            manifest.version,
            env!("CARGO_PKG_VERSION")
        );
    }
    if manifest.argv.first().map(String::as_str) == Some("replay") {
        return Err(CliError::usage("a manifest cannot replay another replay"));
    }
    let mut argv = vec![env!("CARGO_PKG_NAME").to_string()];
    argv.extend(manifest.argv.iter().cloned());
    let cli = Cli::try_parse_from(&argv).map_err(|e| CliError::usage(e.to_string()))?;
    execute(&cli, manifest.argv.clone(), err)
}
