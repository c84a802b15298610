//! Command-line surface for the energy analytics toolkit.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use inferwatt::carbon::{self, CarbonIntensity};
use inferwatt::compression::{self, CompressionPlan};
use inferwatt::config::ResolvedConfig;
use inferwatt::drift;
use inferwatt::energy::{
    self, estimate_energy_full, estimate_energy_simplified, integrate_power_trace, EnergyEstimate,
    ModelProfile, PowerTrace, TokenCounts,
};
use inferwatt::optimize::{self, CandidateConfig, ObjectiveWeights};
use inferwatt::provider::apply_provider_adjustment;
use inferwatt::report::{
    AggregateReport, CarbonReport, DeltaReport, DriftReport, EstimateReport, GasReportDocument,
    IngestSummary, OptimizeReport, OutputFormat, ParetoReport, Provenance, RoiReport,
    NOTE_COMPRESSION_FORMULA, NOTE_UNCALIBRATED_MAGNITUDES,
};
use inferwatt::scoring::{self, ModelOutcome, ParetoPoint};
use inferwatt::trial::{self, AggregateRow, EnergyContext, GroupBy, IngestReport};
use inferwatt::{Error, Result};

/// Default seed for the drift permutation test.
const DEFAULT_SEED: u64 = 42;

/// Default permutation count for the drift test.
const DEFAULT_PERMUTATIONS: u32 = 10_000;

const EXIT_CODE_DOC: &str = "\
Exit codes:
  0  success
  1  I/O or unexpected failure
  2  usage error
  3  schema error (malformed log, config, or report document)
  4  missing entity (unknown model, provider, or region; missing baseline)
  5  computation precondition failed (invalid parameter, insufficient data,
     zero pass rate, malformed trace, conflicting names)
  6  log gate: rejected rows present without --allow-rejects, or the log has
     no accepted records";

#[derive(Parser)]
#[command(
    name = "inferwatt",
    version,
    about = "Inference energy, carbon, and efficiency analytics",
    after_help = EXIT_CODE_DOC
)]
struct Cli {
    /// Calibration/model/overheads config file (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Provider registry file; defaults to the bundled registry.
    #[arg(long, global = true, value_name = "PATH")]
    providers: Option<PathBuf>,

    /// Carbon intensity table; no bundled default.
    #[arg(long, global = true, value_name = "PATH")]
    intensities: Option<PathBuf>,

    /// Output format: table, delimited, or structured.
    #[arg(long, global = true, default_value = "table")]
    format: OutputFormat,

    /// Seed for the drift permutation test.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,

    /// Exit 0 even when the log contains rejected rows.
    #[arg(long, global = true)]
    allow_rejects: bool,

    /// Write the report to a file instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate per-query inference energy from token counts.
    Estimate(EstimateArgs),
    /// Compression energy ROI and break-even analysis.
    Roi(RoiArgs),
    /// Convert joules to grams of CO2 under a regional intensity.
    Carbon(CarbonArgs),
    /// Validate a trial log and report rejected rows.
    Ingest(LogArgs),
    /// Aggregate a trial log into per-group counts and means.
    Aggregate(AggregateArgs),
    /// Per-ratio energy deltas against each model's uncompressed baseline.
    Deltas(LogArgs),
    /// Quality-gated Green AI Scores over a matched snapshot.
    Gas(CandidateSourceArgs),
    /// Quality-energy Pareto frontier over configurations.
    Pareto(CandidateSourceArgs),
    /// Select the weighted cost/energy/quality-optimal configuration.
    Optimize(OptimizeArgs),
    /// Run-order quality drift test (permutation p-value).
    Drift(DriftArgs),
}

#[derive(Args)]
struct EstimateArgs {
    /// Input (prompt) token count.
    #[arg(long = "in", default_value_t = 0)]
    input_tokens: u64,

    /// Output (completion) token count.
    #[arg(long = "out", default_value_t = 0)]
    output_tokens: u64,

    /// Model name from the config's [[model]] entries.
    #[arg(long, conflicts_with = "params_b")]
    model: Option<String>,

    /// Parameter count in billions, for models not in the config.
    #[arg(long)]
    params_b: Option<f64>,

    /// Provider name; supplies PUE (unless --pue) and efficiency factor.
    #[arg(long)]
    provider: Option<String>,

    /// Datacenter PUE; overrides the provider's estimate.
    #[arg(long)]
    pue: Option<f64>,

    /// Formula: simplified, full, or trace.
    #[arg(long, default_value = "simplified")]
    formula: String,

    /// Power trace CSV (timestamp_s,power_w) for --formula trace.
    #[arg(long, value_name = "PATH")]
    trace: Option<PathBuf>,

    /// Also apply server overheads (and PUE, for traces) to the result.
    #[arg(long)]
    apply_overheads: bool,
}

#[derive(Args)]
struct RoiArgs {
    /// Compression ratio (compressed/original) in (0, 1].
    #[arg(long)]
    ratio: f64,

    /// Target model name from the config.
    #[arg(long, conflicts_with = "target_params_b")]
    target_model: Option<String>,

    /// Target model size in billions.
    #[arg(long)]
    target_params_b: Option<f64>,

    /// Compressor size in billions.
    #[arg(long, default_value_t = CompressionPlan::DEFAULT_COMPRESSOR_PARAMS_B)]
    compressor_params_b: f64,

    /// Original prompt length; enables absolute cost/savings output.
    #[arg(long)]
    original_tokens: Option<u64>,

    /// PUE for the savings side; defaults to the configured overheads PUE.
    #[arg(long)]
    pue: Option<f64>,
}

#[derive(Args)]
struct CarbonArgs {
    /// Energy to convert, in joules.
    #[arg(long)]
    joules: f64,

    /// Carbon intensity in gCO2/kWh.
    #[arg(long, conflicts_with = "region")]
    intensity: Option<f64>,

    /// Region label resolved against the intensity table.
    #[arg(long)]
    region: Option<String>,
}

#[derive(Args)]
struct LogArgs {
    /// Trial log (.csv, or .json for the structured form).
    #[arg(long, value_name = "PATH")]
    log: PathBuf,
}

#[derive(Args)]
struct AggregateArgs {
    #[command(flatten)]
    log: LogArgs,

    /// Grouping: model, ratio, or model-ratio.
    #[arg(long, default_value = "model-ratio")]
    group_by: GroupBy,
}

#[derive(Args)]
struct CandidateSourceArgs {
    /// Trial log to aggregate.
    #[arg(long, value_name = "PATH", conflicts_with = "candidates")]
    log: Option<PathBuf>,

    /// Structured aggregate report emitted by `aggregate`.
    #[arg(long, value_name = "PATH")]
    candidates: Option<PathBuf>,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    source: CandidateSourceArgs,

    /// Objective weights as cost,energy,quality (normalized to sum 1).
    #[arg(long, default_value = "0.4,0.4,0.2")]
    weights: String,

    /// Also sweep a simplex grid with this many points per edge.
    #[arg(long)]
    sweep: Option<u32>,
}

#[derive(Args)]
struct DriftArgs {
    #[command(flatten)]
    log: LogArgs,

    /// Permutation count for the p-value.
    #[arg(long, default_value_t = DEFAULT_PERMUTATIONS)]
    permutations: u32,
}

fn exit_code_for(error: &Error) -> u8 {
    match error {
        Error::Schema(_) => 3,
        Error::UnknownProvider(_)
        | Error::UnknownModel(_)
        | Error::UnknownRegion(_)
        | Error::UnknownHardware(_)
        | Error::MissingBaseline(_) => 4,
        Error::InvalidParameter(_)
        | Error::InsufficientData(_)
        | Error::MalformedTrace(_)
        | Error::Validation(_)
        | Error::Conflict(_)
        | Error::UndefinedResult(_)
        | Error::InsufficientVariation(_) => 5,
        Error::Io(_) => 1,
    }
}

/// Exit code for a log whose gate failed (rejects without --allow-rejects,
/// or nothing accepted).
const EXIT_LOG_GATE: u8 = 6;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(exit_code_for(&error))
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    let resolved = ResolvedConfig::from_sources(
        cli.config.as_deref(),
        cli.providers.as_deref(),
        cli.intensities.as_deref(),
    )?;
    let format = cli.format;

    let (rendered, code) = match &cli.command {
        Command::Estimate(args) => cmd_estimate(args, &resolved, format)?,
        Command::Roi(args) => cmd_roi(args, &resolved, format)?,
        Command::Carbon(args) => cmd_carbon(args, &resolved, format)?,
        Command::Ingest(args) => cmd_ingest(args, cli.allow_rejects, format)?,
        Command::Aggregate(args) => cmd_aggregate(args, &resolved, cli.allow_rejects, format)?,
        Command::Deltas(args) => cmd_deltas(args, &resolved, cli.allow_rejects, format)?,
        Command::Gas(args) => cmd_gas(args, &resolved, cli.allow_rejects, format)?,
        Command::Pareto(args) => cmd_pareto(args, &resolved, cli.allow_rejects, format)?,
        Command::Optimize(args) => cmd_optimize(args, &resolved, cli.allow_rejects, format)?,
        Command::Drift(args) => cmd_drift(args, &resolved, cli.allow_rejects, cli.seed, format)?,
    };

    match &cli.output {
        Some(path) => std::fs::write(path, rendered)?,
        None => print!("{rendered}"),
    }
    Ok(code)
}

fn provenance(resolved: &ResolvedConfig, notes: Vec<String>) -> Provenance {
    Provenance {
        calibration: resolved.calibration,
        config_source: resolved.config_source.clone(),
        providers_source: resolved.providers_source.clone(),
        registry_size: resolved.providers.len(),
        notes,
    }
}

fn resolve_model(
    resolved: &ResolvedConfig,
    model: &Option<String>,
    params_b: Option<f64>,
    what: &str,
) -> Result<ModelProfile> {
    match (model, params_b) {
        (Some(name), None) => Ok(resolved.models.get(name)?.clone()),
        (None, Some(params)) => ModelProfile::new("unnamed", params, ""),
        (Some(name), Some(params)) => ModelProfile::new(name.clone(), params, ""),
        (None, None) => Err(Error::InvalidParameter(format!(
            "provide {what} via --model (configured) or --params-b"
        ))),
    }
}

fn cmd_estimate(
    args: &EstimateArgs,
    resolved: &ResolvedConfig,
    format: OutputFormat,
) -> Result<(String, u8)> {
    let tokens = TokenCounts::new(args.input_tokens, args.output_tokens);
    let mut notes = vec![NOTE_UNCALIBRATED_MAGNITUDES.to_string()];

    // Formula selector first; the trace path needs no model at all.
    if args.formula == "trace" {
        let path = args.trace.as_ref().ok_or_else(|| {
            Error::InvalidParameter("--formula trace requires --trace <PATH>".into())
        })?;
        let file = std::fs::File::open(path).map_err(|e| Error::io_at(path, e))?;
        let trace = PowerTrace::from_csv_reader(std::io::BufReader::new(file))?;
        let gpu_j = integrate_power_trace(&trace)?;
        let total = if args.apply_overheads {
            notes.push(format!(
                "server overheads and PUE applied: x{} server multiplier, x{} PUE",
                resolved.overheads.server_multiplier(),
                resolved.overheads.pue
            ));
            energy::server_energy(gpu_j, &resolved.overheads)
        } else {
            gpu_j
        };
        let report = EstimateReport::new(
            &EnergyEstimate::measured(total),
            provenance(resolved, notes),
        );
        return Ok((report.render(format), 0));
    }

    let profile = resolve_model(resolved, &args.model, args.params_b, "the model")?;

    // Provider: explicit flag first, then the model profile's binding.
    let provider = match (&args.provider, profile.provider.as_str()) {
        (Some(name), _) => Some(resolved.providers.get(name)?),
        (None, "") => None,
        (None, bound) => Some(resolved.providers.get(bound)?),
    };
    let pue = args
        .pue
        .or(provider.map(|p| p.est_pue))
        .unwrap_or(resolved.overheads.pue);

    let mut estimate = match args.formula.as_str() {
        "simplified" => estimate_energy_simplified(tokens, &profile, &resolved.calibration, pue)?,
        "full" => estimate_energy_full(
            tokens,
            &profile,
            &resolved.calibration,
            &resolved.attention,
            pue,
        )?,
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown formula '{other}' (expected simplified, full, or trace)"
            )))
        }
    };
    if let Some(provider) = provider {
        estimate = apply_provider_adjustment(&estimate, provider);
    }
    if args.apply_overheads {
        // PUE is already inside the formula; only the server multiplier is
        // applied here so it is never double-counted.
        estimate = estimate.scaled(resolved.overheads.server_multiplier());
        notes.push(format!(
            "server overheads applied: x{} server multiplier (PUE already in formula)",
            resolved.overheads.server_multiplier()
        ));
    }

    let mut report = EstimateReport::new(&estimate, provenance(resolved, notes));
    report.model = args.model.clone();
    report.params_b = Some(profile.param_count_b);
    report.provider = provider.map(|p| p.name.clone());
    report.efficiency_factor = provider.map(|p| p.efficiency_factor);
    report.pue = Some(pue);
    Ok((report.render(format), 0))
}

fn cmd_roi(
    args: &RoiArgs,
    resolved: &ResolvedConfig,
    format: OutputFormat,
) -> Result<(String, u8)> {
    let target = resolve_model(
        resolved,
        &args.target_model,
        args.target_params_b,
        "the target model",
    )?;
    let plan = CompressionPlan::with_compressor(
        args.ratio,
        args.original_tokens.unwrap_or(0),
        args.compressor_params_b,
    )?;
    let roi = compression::energy_roi(&plan, &target);
    let pue = args.pue.unwrap_or(resolved.overheads.pue);

    let (compression_energy_j, energy_saved_j) = match args.original_tokens {
        Some(_) => (
            Some(compression::compression_energy(&plan, &resolved.calibration)),
            Some(compression::energy_saved(
                &plan,
                &target,
                &resolved.calibration,
                pue,
            )?),
        ),
        None => (None, None),
    };

    let report = RoiReport {
        ratio: args.ratio,
        target_params_b: target.param_count_b,
        compressor_params_b: args.compressor_params_b,
        energy_roi: roi,
        break_even_queries: compression::break_even_queries(roi),
        original_tokens: args.original_tokens,
        compression_energy_j,
        energy_saved_j,
        provenance: provenance(
            resolved,
            vec![
                NOTE_COMPRESSION_FORMULA.to_string(),
                "roi uses the shared-constant form: epsilon and PUE cancel between the \
                 savings and compression sides"
                    .to_string(),
            ],
        ),
    };
    Ok((report.render(format), 0))
}

fn cmd_carbon(
    args: &CarbonArgs,
    resolved: &ResolvedConfig,
    format: OutputFormat,
) -> Result<(String, u8)> {
    let intensity = match (&args.region, args.intensity) {
        (Some(region), None) => resolved.intensities.get(region)?,
        (None, Some(grams)) => CarbonIntensity::new("explicit", grams)?,
        (None, None) => {
            return Err(Error::InvalidParameter(
                "carbon conversion requires --intensity or --region; there is no default".into(),
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    let kwh = carbon::joules_to_kwh(args.joules)?;
    let co2 = carbon::co2_for_energy(args.joules, &intensity)?;
    let report = CarbonReport::new(args.joules, kwh, &intensity, co2);
    Ok((report.render(format), 0))
}

/// Loads a trial log and evaluates the gate: exit 0 only when there are no
/// rejected rows (or --allow-rejects) and at least one record was accepted.
fn load_log(path: &Path, allow_rejects: bool) -> Result<(IngestReport, u8)> {
    let report = trial::ingest_path(path)?;
    let gate_ok =
        (report.rejected.is_empty() || allow_rejects) && !report.accepted.is_empty();
    Ok((report, if gate_ok { 0 } else { EXIT_LOG_GATE }))
}

fn cmd_ingest(
    args: &LogArgs,
    allow_rejects: bool,
    format: OutputFormat,
) -> Result<(String, u8)> {
    let report = trial::ingest_path(&args.log)?;
    // Ingest itself accepts an empty-but-valid log; only rejected rows gate.
    let code = if report.rejected.is_empty() || allow_rejects {
        0
    } else {
        EXIT_LOG_GATE
    };
    let summary = IngestSummary {
        log: args.log.display().to_string(),
        accepted: report.accepted.len(),
        rejected: report.rejected.len(),
        rejections: report.rejected,
    };
    Ok((summary.render(format), code))
}

fn energy_context(resolved: &ResolvedConfig) -> EnergyContext<'_> {
    EnergyContext {
        models: &resolved.models,
        providers: &resolved.providers,
        calib: &resolved.calibration,
    }
}

fn cmd_aggregate(
    args: &AggregateArgs,
    resolved: &ResolvedConfig,
    allow_rejects: bool,
    format: OutputFormat,
) -> Result<(String, u8)> {
    let (ingested, code) = load_log(&args.log.log, allow_rejects)?;
    let rows = trial::aggregate(&ingested.accepted, args.group_by, &energy_context(resolved))?;
    let report = AggregateReport {
        group_by: args.group_by,
        rows,
        provenance: provenance(resolved, vec![NOTE_UNCALIBRATED_MAGNITUDES.to_string()]),
    };
    Ok((report.render(format), code))
}

fn cmd_deltas(
    args: &LogArgs,
    resolved: &ResolvedConfig,
    allow_rejects: bool,
    format: OutputFormat,
) -> Result<(String, u8)> {
    let (ingested, code) = load_log(&args.log, allow_rejects)?;
    let rows = trial::aggregate(
        &ingested.accepted,
        GroupBy::ModelRatio,
        &energy_context(resolved),
    )?;
    let deltas = if ingested.accepted.is_empty() {
        Vec::new()
    } else {
        trial::energy_delta_vs_baseline(&rows)?
    };
    let report = DeltaReport {
        rows: deltas,
        provenance: provenance(resolved, Vec::new()),
    };
    Ok((report.render(format), code))
}

/// Candidate rows either aggregated from a log or read back from a
/// structured aggregate report.
fn candidate_rows(
    source: &CandidateSourceArgs,
    resolved: &ResolvedConfig,
    allow_rejects: bool,
    group_by: GroupBy,
) -> Result<(Vec<AggregateRow>, u8)> {
    match (&source.log, &source.candidates) {
        (Some(log), None) => {
            let (ingested, code) = load_log(log, allow_rejects)?;
            let rows = trial::aggregate(&ingested.accepted, group_by, &energy_context(resolved))?;
            Ok((rows, code))
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io_at(path, e))?;
            let report: AggregateReport = serde_json::from_str(&text).map_err(|e| {
                Error::Schema(format!(
                    "{}: not a structured aggregate report: {e}",
                    path.display()
                ))
            })?;
            Ok((report.rows, 0))
        }
        _ => Err(Error::InvalidParameter(
            "provide exactly one of --log or --candidates".into(),
        )),
    }
}

fn cmd_gas(
    args: &CandidateSourceArgs,
    resolved: &ResolvedConfig,
    allow_rejects: bool,
    format: OutputFormat,
) -> Result<(String, u8)> {
    let (rows, code) = candidate_rows(args, resolved, allow_rejects, GroupBy::Model)?;
    if rows.is_empty() && code != 0 {
        // Empty log: emit a schema-valid empty report; the exit code
        // carries the gate failure.
        let report = GasReportDocument {
            report: scoring::GasReport {
                scores: Vec::new(),
                exclusions: Vec::new(),
                reference_model: None,
                gate_rule: String::new(),
            },
            inputs: Vec::new(),
            provenance: provenance(resolved, Vec::new()),
        };
        return Ok((report.render(format), code));
    }
    let mut outcomes = Vec::with_capacity(rows.len());
    let mut seen = std::collections::BTreeSet::new();
    for row in &rows {
        let outcome = ModelOutcome::from_aggregate(row)?;
        if !seen.insert(outcome.model.clone()) {
            return Err(Error::InvalidParameter(format!(
                "multiple rows for model '{}'; GAS needs model-level aggregates",
                outcome.model
            )));
        }
        outcomes.push(outcome);
    }
    let gas = scoring::gas_scores(&outcomes)?;
    let report = GasReportDocument {
        report: gas,
        inputs: outcomes,
        provenance: provenance(resolved, vec![NOTE_UNCALIBRATED_MAGNITUDES.to_string()]),
    };
    Ok((report.render(format), code))
}

fn cmd_pareto(
    args: &CandidateSourceArgs,
    resolved: &ResolvedConfig,
    allow_rejects: bool,
    format: OutputFormat,
) -> Result<(String, u8)> {
    let (rows, code) = candidate_rows(args, resolved, allow_rejects, GroupBy::ModelRatio)?;
    let points: Vec<ParetoPoint> = rows
        .iter()
        .map(|row| {
            let candidate = CandidateConfig::from_aggregate(row)?;
            Ok(ParetoPoint {
                model: candidate.model,
                compression_ratio: candidate.compression_ratio,
                energy_j: candidate.energy_j,
                quality: candidate.quality,
            })
        })
        .collect::<Result<_>>()?;
    let frontier = scoring::pareto_frontier(&points);
    let report = ParetoReport {
        dominated: points.len() - frontier.len(),
        candidates: points.len(),
        frontier,
        provenance: provenance(resolved, Vec::new()),
    };
    Ok((report.render(format), code))
}

fn parse_weights(text: &str) -> Result<ObjectiveWeights> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::InvalidParameter(format!(
            "--weights expects cost,energy,quality; got '{text}'"
        )));
    }
    let parse = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::InvalidParameter(format!("weight '{s}' is not a number")))
    };
    ObjectiveWeights::new(parse(parts[0])?, parse(parts[1])?, parse(parts[2])?)
}

fn cmd_optimize(
    args: &OptimizeArgs,
    resolved: &ResolvedConfig,
    allow_rejects: bool,
    format: OutputFormat,
) -> Result<(String, u8)> {
    let weights = parse_weights(&args.weights)?;
    let (rows, code) =
        candidate_rows(&args.source, resolved, allow_rejects, GroupBy::ModelRatio)?;
    if rows.is_empty() && code != 0 {
        let report = OptimizeReport {
            weights,
            chosen: None,
            objective: None,
            sweep: None,
            provenance: provenance(resolved, Vec::new()),
        };
        return Ok((report.render(format), code));
    }
    let candidates: Vec<CandidateConfig> = rows
        .iter()
        .map(CandidateConfig::from_aggregate)
        .collect::<Result<_>>()?;
    let selection = optimize::optimize(&candidates, &weights)?;
    let sweep = match args.sweep {
        Some(resolution) => Some(optimize::weight_sweep(&candidates, resolution)?),
        None => None,
    };
    let report = OptimizeReport {
        weights,
        chosen: Some(selection.candidate),
        objective: Some(selection.objective),
        sweep,
        provenance: provenance(resolved, Vec::new()),
    };
    Ok((report.render(format), code))
}

fn cmd_drift(
    args: &DriftArgs,
    resolved: &ResolvedConfig,
    allow_rejects: bool,
    seed: u64,
    format: OutputFormat,
) -> Result<(String, u8)> {
    let (ingested, code) = load_log(&args.log.log, allow_rejects)?;
    if ingested.accepted.is_empty() {
        let report = DriftReport {
            result: None,
            provenance: provenance(resolved, Vec::new()),
        };
        return Ok((report.render(format), code));
    }
    let result = drift::drift_test(&ingested.accepted, args.permutations, seed)?;
    let report = DriftReport {
        result: Some(result),
        provenance: provenance(resolved, Vec::new()),
    };
    Ok((report.render(format), code))
}
