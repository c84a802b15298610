//! C ABI for the inference-energy analytics library.
//!
//! Conventions:
//! - Every fallible function returns an [`IwStatus`]; results come back
//!   through out-pointers. `IW_STATUS_OK` is zero.
//! - On failure, a thread-local message is set; read it with
//!   [`iw_last_error_message`]. The pointer stays valid until the next
//!   failing call on the same thread.
//! - [`IwContext`] is an opaque handle created by `iw_context_new` /
//!   `iw_context_new_from_files` and released with `iw_context_free`.
//! - Strings returned through `char**` out-pointers are owned by the caller
//!   and must be released with [`iw_string_free`].
//!
//! The header `include/inferwatt.h` is generated by cbindgen at build time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use inferwatt::carbon::{self, CarbonIntensity};
use inferwatt::compression::{self, CompressionPlan};
use inferwatt::config::ResolvedConfig;
use inferwatt::drift;
use inferwatt::energy::{
    estimate_energy_full, estimate_energy_simplified, flop_energy, integrate_power_trace,
    server_energy, EnergyFormula, HardwareProfile, ModelProfile, PowerSample, PowerTrace,
    ServerOverheads, TokenCounts,
};
use inferwatt::optimize::{optimize, CandidateConfig, ObjectiveWeights};
use inferwatt::report::{
    AggregateReport, DeltaReport, DriftReport, GasReportDocument, OutputFormat, ParetoReport,
    Provenance,
};
use inferwatt::scoring::{gas_scores, pareto_frontier, pareto_frontier_indices, ModelOutcome, ParetoPoint};
use inferwatt::trial::{self, EnergyContext, GroupBy};
use inferwatt::Error;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IwStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument was outside its valid range.
    InvalidArgument = 2,
    /// A string argument was not valid UTF-8.
    Utf8 = 3,
    /// A named entity (model, provider, region, baseline) was not found.
    NotFound = 4,
    /// Not enough data to compute the result.
    InsufficientData = 5,
    /// A document or trace failed schema or structural validation.
    MalformedInput = 6,
    /// The result is mathematically undefined for these inputs.
    Undefined = 7,
    /// An I/O operation failed.
    IoError = 8,
    /// An internal invariant failed.
    Internal = 9,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = Some(CString::new(sanitized).expect("nul bytes removed"));
    });
}

fn status_for(error: &Error) -> IwStatus {
    match error {
        Error::InvalidParameter(_) | Error::Validation(_) | Error::Conflict(_) => {
            IwStatus::InvalidArgument
        }
        Error::InsufficientData(_) | Error::InsufficientVariation(_) => {
            IwStatus::InsufficientData
        }
        Error::MalformedTrace(_) | Error::Schema(_) => IwStatus::MalformedInput,
        Error::UnknownProvider(_)
        | Error::UnknownModel(_)
        | Error::UnknownRegion(_)
        | Error::UnknownHardware(_)
        | Error::MissingBaseline(_) => IwStatus::NotFound,
        Error::UndefinedResult(_) => IwStatus::Undefined,
        Error::Io(_) => IwStatus::IoError,
    }
}

fn fail(error: &Error) -> IwStatus {
    set_last_error(&error.to_string());
    status_for(error)
}

fn fail_with(status: IwStatus, message: &str) -> IwStatus {
    set_last_error(message);
    status
}

/// Runs a closure, converting panics into `Internal` instead of unwinding
/// across the FFI boundary.
fn guarded(body: impl FnOnce() -> IwStatus) -> IwStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => fail_with(IwStatus::Internal, "internal panic"),
    }
}

/// Opaque handle bundling calibration constants, server overheads,
/// attention scaling, and the model/provider registries.
pub struct IwContext {
    config: ResolvedConfig,
}

/// Formula selector for energy estimates.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IwFormula {
    FullProxy = 0,
    Simplified = 1,
    MeasuredTrace = 2,
}

impl From<EnergyFormula> for IwFormula {
    fn from(value: EnergyFormula) -> Self {
        match value {
            EnergyFormula::FullProxy => Self::FullProxy,
            EnergyFormula::Simplified => Self::Simplified,
            EnergyFormula::MeasuredTrace => Self::MeasuredTrace,
        }
    }
}

/// Energy estimate in joules. When `has_phase_split` is false (measured
/// traces) the prefill/decode fields are zero and only `total_j` is
/// meaningful.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IwEnergyEstimate {
    pub prefill_j: f64,
    pub decode_j: f64,
    pub total_j: f64,
    pub formula: IwFormula,
    pub has_phase_split: bool,
}

/// One model's matched metrics for GAS scoring.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct IwModelOutcome {
    /// Null-terminated model name; must be unique within the call.
    pub model: *const c_char,
    /// Pass rate in [0, 1].
    pub pass_rate: f64,
    /// Mean energy per trial in joules, > 0.
    pub energy_per_trial_j: f64,
}

/// GAS scores for one model, parallel to the input order. When
/// `has_success_scores` is false (zero pass rate) the success-based fields
/// are zero.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IwGasScore {
    pub gas_trial: f64,
    pub gas_success: f64,
    pub gas_quality_gated: f64,
    pub has_success_scores: bool,
}

/// Log-pipeline operation selector for [`iw_report_json`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IwPipelineOp {
    Aggregate = 0,
    Deltas = 1,
    Gas = 2,
    Pareto = 3,
    Drift = 4,
}

const VERSION: &CStr =
    match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(version) => version,
        Err(_) => panic!("version string contains nul"),
    };

/// Library version as a static null-terminated string.
#[no_mangle]
pub extern "C" fn iw_version() -> *const c_char {
    VERSION.as_ptr()
}

/// Message for the most recent failure on this thread, or null if none.
/// Valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn iw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map(|message| message.as_ptr())
            .unwrap_or(std::ptr::null())
    })
}

/// Releases a string returned through a `char**` out-pointer.
///
/// # Safety
/// `string` must be null or a pointer previously returned by this library.
#[no_mangle]
pub unsafe extern "C" fn iw_string_free(string: *mut c_char) {
    if !string.is_null() {
        drop(CString::from_raw(string));
    }
}

/// Creates a context with default calibration and the bundled provider
/// registry. Never fails; release with [`iw_context_free`].
#[no_mangle]
pub extern "C" fn iw_context_new() -> *mut IwContext {
    Box::into_raw(Box::new(IwContext {
        config: ResolvedConfig::default(),
    }))
}

unsafe fn optional_path(raw: *const c_char) -> Result<Option<PathBuf>, IwStatus> {
    if raw.is_null() {
        return Ok(None);
    }
    match CStr::from_ptr(raw).to_str() {
        Ok(text) => Ok(Some(PathBuf::from(text))),
        Err(_) => Err(fail_with(IwStatus::Utf8, "path is not valid UTF-8")),
    }
}

/// Creates a context from configuration files. Any path may be null to use
/// its default (see the CLI's --config/--providers/--intensities flags).
///
/// # Safety
/// Non-null paths must be null-terminated strings; `out` must be a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn iw_context_new_from_files(
    config_path: *const c_char,
    providers_path: *const c_char,
    intensities_path: *const c_char,
    out: *mut *mut IwContext,
) -> IwStatus {
    if out.is_null() {
        return fail_with(IwStatus::NullPointer, "out pointer is null");
    }
    let config = match optional_path(config_path) {
        Ok(path) => path,
        Err(status) => return status,
    };
    let providers = match optional_path(providers_path) {
        Ok(path) => path,
        Err(status) => return status,
    };
    let intensities = match optional_path(intensities_path) {
        Ok(path) => path,
        Err(status) => return status,
    };
    guarded(|| {
        match ResolvedConfig::from_sources(
            config.as_deref(),
            providers.as_deref(),
            intensities.as_deref(),
        ) {
            Ok(resolved) => {
                *out = Box::into_raw(Box::new(IwContext { config: resolved }));
                IwStatus::Ok
            }
            Err(error) => fail(&error),
        }
    })
}

/// Releases a context.
///
/// # Safety
/// `ctx` must be null or a pointer from `iw_context_new*`, passed at most
/// once.
#[no_mangle]
pub unsafe extern "C" fn iw_context_free(ctx: *mut IwContext) {
    if !ctx.is_null() {
        drop(Box::from_raw(ctx));
    }
}

unsafe fn context_ref<'a>(ctx: *const IwContext) -> Result<&'a IwContext, IwStatus> {
    ctx.as_ref()
        .ok_or_else(|| fail_with(IwStatus::NullPointer, "context pointer is null"))
}

fn write_estimate(
    out: *mut IwEnergyEstimate,
    estimate: &inferwatt::energy::EnergyEstimate,
) -> IwStatus {
    let value = IwEnergyEstimate {
        prefill_j: estimate.prefill_j.unwrap_or(0.0),
        decode_j: estimate.decode_j.unwrap_or(0.0),
        total_j: estimate.total_j,
        formula: estimate.formula.into(),
        has_phase_split: estimate.prefill_j.is_some(),
    };
    unsafe { *out = value };
    IwStatus::Ok
}

/// Simplified proxy estimate:
/// `epsilon * (T_in + omega * T_out) * sqrt(params_b) * pue`.
///
/// # Safety
/// `ctx` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn iw_estimate_simplified(
    ctx: *const IwContext,
    input_tokens: u64,
    output_tokens: u64,
    params_b: f64,
    pue: f64,
    out: *mut IwEnergyEstimate,
) -> IwStatus {
    let context = match context_ref(ctx) {
        Ok(context) => context,
        Err(status) => return status,
    };
    if out.is_null() {
        return fail_with(IwStatus::NullPointer, "out pointer is null");
    }
    guarded(|| {
        let model = match ModelProfile::new("ffi", params_b, "") {
            Ok(model) => model,
            Err(error) => return fail(&error),
        };
        match estimate_energy_simplified(
            TokenCounts::new(input_tokens, output_tokens),
            &model,
            &context.config.calibration,
            pue,
        ) {
            Ok(estimate) => write_estimate(out, &estimate),
            Err(error) => fail(&error),
        }
    })
}

/// Full proxy estimate with the context's attention scaling.
///
/// # Safety
/// `ctx` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn iw_estimate_full(
    ctx: *const IwContext,
    input_tokens: u64,
    output_tokens: u64,
    params_b: f64,
    pue: f64,
    out: *mut IwEnergyEstimate,
) -> IwStatus {
    let context = match context_ref(ctx) {
        Ok(context) => context,
        Err(status) => return status,
    };
    if out.is_null() {
        return fail_with(IwStatus::NullPointer, "out pointer is null");
    }
    guarded(|| {
        let model = match ModelProfile::new("ffi", params_b, "") {
            Ok(model) => model,
            Err(error) => return fail(&error),
        };
        match estimate_energy_full(
            TokenCounts::new(input_tokens, output_tokens),
            &model,
            &context.config.calibration,
            &context.config.attention,
            pue,
        ) {
            Ok(estimate) => write_estimate(out, &estimate),
            Err(error) => fail(&error),
        }
    })
}

/// Whole-server energy: `gpu_j * (1 + cpu + dram + io) * pue`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn iw_server_energy(
    gpu_j: f64,
    alpha_cpu: f64,
    alpha_dram: f64,
    alpha_io: f64,
    pue: f64,
    out: *mut f64,
) -> IwStatus {
    if out.is_null() {
        return fail_with(IwStatus::NullPointer, "out pointer is null");
    }
    if !gpu_j.is_finite() || gpu_j < 0.0 {
        return fail_with(IwStatus::InvalidArgument, "gpu_j must be >= 0");
    }
    match ServerOverheads::new(alpha_cpu, alpha_dram, alpha_io, pue) {
        Ok(overheads) => {
            *out = server_energy(gpu_j, &overheads);
            IwStatus::Ok
        }
        Err(error) => fail(&error),
    }
}

/// Joules per FLOP: `tdp_w / (peak_flops * utilization)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn iw_flop_energy(
    tdp_w: f64,
    peak_flops: f64,
    utilization: f64,
    out: *mut f64,
) -> IwStatus {
    if out.is_null() {
        return fail_with(IwStatus::NullPointer, "out pointer is null");
    }
    match HardwareProfile::new(tdp_w, peak_flops, utilization) {
        Ok(hw) => {
            *out = flop_energy(&hw);
            IwStatus::Ok
        }
        Err(error) => fail(&error),
    }
}

/// Trapezoidal integral of a power trace given as parallel arrays.
/// Timestamps must strictly increase; at least two samples are required.
///
/// # Safety
/// `timestamps_s` and `power_w` must point to `len` readable doubles; `out`
/// must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn iw_integrate_power_trace(
    timestamps_s: *const f64,
    power_w: *const f64,
    len: usize,
    out: *mut f64,
) -> IwStatus {
    if out.is_null() || (len > 0 && (timestamps_s.is_null() || power_w.is_null())) {
        return fail_with(IwStatus::NullPointer, "trace array pointer is null");
    }
    let timestamps = std::slice::from_raw_parts(timestamps_s, len);
    let powers = std::slice::from_raw_parts(power_w, len);
    guarded(|| {
        let samples = timestamps
            .iter()
            .zip(powers)
            .map(|(&timestamp_s, &power_w)| PowerSample {
                timestamp_s,
                power_w,
            })
            .collect();
        let trace = match PowerTrace::new(samples) {
            Ok(trace) => trace,
            Err(error) => return fail(&error),
        };
        match integrate_power_trace(&trace) {
            Ok(joules) => {
                *out = joules;
                IwStatus::Ok
            }
            Err(error) => fail(&error),
        }
    })
}

/// Compressor energy: `epsilon_comp * original_tokens * sqrt(compressor_params_b)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn iw_compression_energy(
    original_tokens: u64,
    compressor_params_b: f64,
    epsilon_comp: f64,
    out: *mut f64,
) -> IwStatus {
    if out.is_null() {
        return fail_with(IwStatus::NullPointer, "out pointer is null");
    }
    if !epsilon_comp.is_finite() || epsilon_comp <= 0.0 {
        return fail_with(IwStatus::InvalidArgument, "epsilon_comp must be > 0");
    }
    let plan = match CompressionPlan::with_compressor(1.0, original_tokens, compressor_params_b) {
        Ok(plan) => plan,
        Err(error) => return fail(&error),
    };
    let calib = inferwatt::energy::CalibrationConstants {
        epsilon_comp,
        ..Default::default()
    };
    *out = compression::compression_energy(&plan, &calib);
    IwStatus::Ok
}

/// Compression energy ROI:
/// `(1 - ratio) * sqrt(target_params_b) / sqrt(compressor_params_b)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn iw_energy_roi(
    ratio: f64,
    target_params_b: f64,
    compressor_params_b: f64,
    out: *mut f64,
) -> IwStatus {
    if out.is_null() {
        return fail_with(IwStatus::NullPointer, "out pointer is null");
    }
    let plan = match CompressionPlan::with_compressor(ratio, 0, compressor_params_b) {
        Ok(plan) => plan,
        Err(error) => return fail(&error),
    };
    let target = match ModelProfile::new("target", target_params_b, "") {
        Ok(model) => model,
        Err(error) => return fail(&error),
    };
    *out = compression::energy_roi(&plan, &target);
    IwStatus::Ok
}

/// Converts joules to kilowatt-hours.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn iw_joules_to_kwh(joules: f64, out: *mut f64) -> IwStatus {
    if out.is_null() {
        return fail_with(IwStatus::NullPointer, "out pointer is null");
    }
    match carbon::joules_to_kwh(joules) {
        Ok(kwh) => {
            *out = kwh;
            IwStatus::Ok
        }
        Err(error) => fail(&error),
    }
}

/// Grams of CO2 for an energy amount at a grid intensity (gCO2/kWh).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn iw_co2_for_energy(
    joules: f64,
    grams_per_kwh: f64,
    out: *mut f64,
) -> IwStatus {
    if out.is_null() {
        return fail_with(IwStatus::NullPointer, "out pointer is null");
    }
    let intensity = match CarbonIntensity::new("ffi", grams_per_kwh) {
        Ok(intensity) => intensity,
        Err(error) => return fail(&error),
    };
    match carbon::co2_for_energy(joules, &intensity) {
        Ok(grams) => {
            *out = grams;
            IwStatus::Ok
        }
        Err(error) => fail(&error),
    }
}

/// Computes GAS scores for a matched snapshot. `out_scores` must hold `len`
/// entries and is filled parallel to the input order. Model names must be
/// unique.
///
/// # Safety
/// `outcomes` must point to `len` readable entries with valid name
/// pointers; `out_scores` must point to `len` writable entries.
#[no_mangle]
pub unsafe extern "C" fn iw_gas_scores(
    outcomes: *const IwModelOutcome,
    len: usize,
    out_scores: *mut IwGasScore,
) -> IwStatus {
    if len > 0 && (outcomes.is_null() || out_scores.is_null()) {
        return fail_with(IwStatus::NullPointer, "gas array pointer is null");
    }
    let inputs = std::slice::from_raw_parts(outcomes, len);
    let mut parsed = Vec::with_capacity(len);
    for (i, input) in inputs.iter().enumerate() {
        if input.model.is_null() {
            return fail_with(IwStatus::NullPointer, "model name pointer is null");
        }
        let name = match CStr::from_ptr(input.model).to_str() {
            Ok(name) => name.to_string(),
            Err(_) => {
                return fail_with(
                    IwStatus::Utf8,
                    &format!("model name at index {i} is not valid UTF-8"),
                )
            }
        };
        match ModelOutcome::new(name, input.pass_rate, input.energy_per_trial_j) {
            Ok(outcome) => parsed.push(outcome),
            Err(error) => return fail(&error),
        }
    }
    {
        let mut names: Vec<&str> = parsed.iter().map(|o| o.model.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|pair| pair[0] == pair[1]) {
            return fail_with(IwStatus::InvalidArgument, "model names must be unique");
        }
    }
    guarded(|| {
        let report = match gas_scores(&parsed) {
            Ok(report) => report,
            Err(error) => return fail(&error),
        };
        let out = std::slice::from_raw_parts_mut(out_scores, len);
        for (slot, outcome) in out.iter_mut().zip(&parsed) {
            let score = report
                .scores
                .iter()
                .find(|s| s.model == outcome.model)
                .expect("every input model is scored");
            *slot = IwGasScore {
                gas_trial: score.gas_trial,
                gas_success: score.gas_success.unwrap_or(0.0),
                gas_quality_gated: score.gas_quality_gated.unwrap_or(0.0),
                has_success_scores: score.gas_success.is_some(),
            };
        }
        IwStatus::Ok
    })
}

/// Marks the non-dominated points under (minimize energy, maximize
/// quality): `out_mask[i]` is true when point `i` is on the frontier.
/// Points equal on both axes are both retained.
///
/// # Safety
/// `energy_j` and `quality` must point to `len` readable doubles;
/// `out_mask` must point to `len` writable booleans.
#[no_mangle]
pub unsafe extern "C" fn iw_pareto_frontier_mask(
    energy_j: *const f64,
    quality: *const f64,
    len: usize,
    out_mask: *mut bool,
) -> IwStatus {
    if len > 0 && (energy_j.is_null() || quality.is_null() || out_mask.is_null()) {
        return fail_with(IwStatus::NullPointer, "pareto array pointer is null");
    }
    let energies = std::slice::from_raw_parts(energy_j, len);
    let qualities = std::slice::from_raw_parts(quality, len);
    if energies.iter().chain(qualities).any(|v| !v.is_finite()) {
        return fail_with(
            IwStatus::InvalidArgument,
            "energy and quality values must be finite",
        );
    }
    guarded(|| {
        let points: Vec<ParetoPoint> = energies
            .iter()
            .zip(qualities)
            .map(|(&energy, &quality)| ParetoPoint {
                model: String::new(),
                compression_ratio: 1.0,
                energy_j: energy,
                quality,
            })
            .collect();
        let mask = std::slice::from_raw_parts_mut(out_mask, len);
        mask.fill(false);
        for index in pareto_frontier_indices(&points) {
            mask[index] = true;
        }
        IwStatus::Ok
    })
}

/// Selects the candidate minimizing
/// `lambda_cost * C + lambda_energy * E + lambda_quality * (1 - Q)` with
/// cost/energy min-max normalized over the set. Ties break to the lowest
/// index. Weights are normalized to sum to 1 and must not all be zero.
///
/// # Safety
/// The three metric arrays must point to `len` readable doubles;
/// `out_index` and `out_objective` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn iw_optimize(
    costs: *const f64,
    energies: *const f64,
    qualities: *const f64,
    len: usize,
    lambda_cost: f64,
    lambda_energy: f64,
    lambda_quality: f64,
    out_index: *mut usize,
    out_objective: *mut f64,
) -> IwStatus {
    if out_index.is_null()
        || out_objective.is_null()
        || (len > 0 && (costs.is_null() || energies.is_null() || qualities.is_null()))
    {
        return fail_with(IwStatus::NullPointer, "optimize pointer is null");
    }
    let weights = match ObjectiveWeights::new(lambda_cost, lambda_energy, lambda_quality) {
        Ok(weights) => weights,
        Err(error) => return fail(&error),
    };
    let cost_values = std::slice::from_raw_parts(costs, len);
    let energy_values = std::slice::from_raw_parts(energies, len);
    let quality_values = std::slice::from_raw_parts(qualities, len);
    guarded(|| {
        let candidates: Vec<CandidateConfig> = (0..len)
            .map(|i| CandidateConfig {
                // Zero-padded index as the name makes the core's
                // lexicographic tie-break equal to lowest-index.
                model: format!("{i:012}"),
                compression_ratio: 1.0,
                cost_usd: cost_values[i],
                energy_j: energy_values[i],
                quality: quality_values[i],
            })
            .collect();
        match optimize(&candidates, &weights) {
            Ok(selection) => {
                *out_index = selection.index;
                *out_objective = selection.objective;
                IwStatus::Ok
            }
            Err(error) => fail(&error),
        }
    })
}

fn pipeline_json(
    context: &IwContext,
    log_path: &Path,
    op: IwPipelineOp,
    seed: u64,
) -> Result<String, Error> {
    let resolved = &context.config;
    let ingested = trial::ingest_path(log_path)?;
    let records = ingested.accepted;
    let ctx = EnergyContext {
        models: &resolved.models,
        providers: &resolved.providers,
        calib: &resolved.calibration,
    };
    let provenance = Provenance {
        calibration: resolved.calibration,
        config_source: resolved.config_source.clone(),
        providers_source: resolved.providers_source.clone(),
        registry_size: resolved.providers.len(),
        notes: Vec::new(),
    };
    let rendered = match op {
        IwPipelineOp::Aggregate => {
            let rows = trial::aggregate(&records, GroupBy::ModelRatio, &ctx)?;
            AggregateReport {
                group_by: GroupBy::ModelRatio,
                rows,
                provenance,
            }
            .render(OutputFormat::Structured)
        }
        IwPipelineOp::Deltas => {
            let rows = trial::aggregate(&records, GroupBy::ModelRatio, &ctx)?;
            let deltas = trial::energy_delta_vs_baseline(&rows)?;
            DeltaReport {
                rows: deltas,
                provenance,
            }
            .render(OutputFormat::Structured)
        }
        IwPipelineOp::Gas => {
            let rows = trial::aggregate(&records, GroupBy::Model, &ctx)?;
            let outcomes: Result<Vec<ModelOutcome>, Error> =
                rows.iter().map(ModelOutcome::from_aggregate).collect();
            let outcomes = outcomes?;
            let report = gas_scores(&outcomes)?;
            GasReportDocument {
                report,
                inputs: outcomes,
                provenance,
            }
            .render(OutputFormat::Structured)
        }
        IwPipelineOp::Pareto => {
            let rows = trial::aggregate(&records, GroupBy::ModelRatio, &ctx)?;
            let points: Result<Vec<ParetoPoint>, Error> = rows
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
                .collect();
            let points = points?;
            let frontier = pareto_frontier(&points);
            ParetoReport {
                dominated: points.len() - frontier.len(),
                candidates: points.len(),
                frontier,
                provenance,
            }
            .render(OutputFormat::Structured)
        }
        IwPipelineOp::Drift => {
            let result = drift::drift_test(&records, 10_000, seed)?;
            DriftReport {
                result: Some(result),
                provenance,
            }
            .render(OutputFormat::Structured)
        }
    };
    Ok(rendered)
}

/// Runs one log-pipeline operation over a trial log and returns the
/// structured JSON report. Release the string with [`iw_string_free`].
/// `seed` is used by the drift operation only.
///
/// # Safety
/// `ctx` must be a valid context, `log_path` a null-terminated string, and
/// `out_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn iw_report_json(
    ctx: *const IwContext,
    log_path: *const c_char,
    op: IwPipelineOp,
    seed: u64,
    out_json: *mut *mut c_char,
) -> IwStatus {
    let context = match context_ref(ctx) {
        Ok(context) => context,
        Err(status) => return status,
    };
    if out_json.is_null() {
        return fail_with(IwStatus::NullPointer, "out_json pointer is null");
    }
    if log_path.is_null() {
        return fail_with(IwStatus::NullPointer, "log_path pointer is null");
    }
    let path = match CStr::from_ptr(log_path).to_str() {
        Ok(text) => PathBuf::from(text),
        Err(_) => return fail_with(IwStatus::Utf8, "log_path is not valid UTF-8"),
    };
    guarded(|| match pipeline_json(context, &path, op, seed) {
        Ok(json) => {
            let owned = CString::new(json.replace('\0', " ")).expect("nul bytes removed");
            *out_json = owned.into_raw();
            IwStatus::Ok
        }
        Err(error) => fail(&error),
    })
}
