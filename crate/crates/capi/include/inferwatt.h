/* C ABI for the inferwatt inference-energy analytics library. */

#ifndef INFERWATT_H
#define INFERWATT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum {
  IW_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  IW_STATUS_NULL_POINTER = 1,
  /**
   * An argument was outside its valid range.
   */
  IW_STATUS_INVALID_ARGUMENT = 2,
  /**
   * A string argument was not valid UTF-8.
   */
  IW_STATUS_UTF8 = 3,
  /**
   * A named entity (model, provider, region, baseline) was not found.
   */
  IW_STATUS_NOT_FOUND = 4,
  /**
   * Not enough data to compute the result.
   */
  IW_STATUS_INSUFFICIENT_DATA = 5,
  /**
   * A document or trace failed schema or structural validation.
   */
  IW_STATUS_MALFORMED_INPUT = 6,
  /**
   * The result is mathematically undefined for these inputs.
   */
  IW_STATUS_UNDEFINED = 7,
  /**
   * An I/O operation failed.
   */
  IW_STATUS_IO_ERROR = 8,
  /**
   * An internal invariant failed.
   */
  IW_STATUS_INTERNAL = 9,
} IwStatus;

/**
 * Formula selector for energy estimates.
 */
typedef enum {
  IW_FORMULA_FULL_PROXY = 0,
  IW_FORMULA_SIMPLIFIED = 1,
  IW_FORMULA_MEASURED_TRACE = 2,
} IwFormula;

/**
 * Log-pipeline operation selector for [`iw_report_json`].
 */
typedef enum {
  IW_PIPELINE_OP_AGGREGATE = 0,
  IW_PIPELINE_OP_DELTAS = 1,
  IW_PIPELINE_OP_GAS = 2,
  IW_PIPELINE_OP_PARETO = 3,
  IW_PIPELINE_OP_DRIFT = 4,
} IwPipelineOp;

/**
 * Opaque handle bundling calibration constants, server overheads,
 * attention scaling, and the model/provider registries.
 */
typedef struct IwContext IwContext;

/**
 * Energy estimate in joules. When `has_phase_split` is false (measured
 * traces) the prefill/decode fields are zero and only `total_j` is
 * meaningful.
 */
typedef struct {
  double prefill_j;
  double decode_j;
  double total_j;
  IwFormula formula;
  bool has_phase_split;
} IwEnergyEstimate;

/**
 * One model's matched metrics for GAS scoring.
 */
typedef struct {
  /**
   * Null-terminated model name; must be unique within the call.
   */
  const char *model;
  /**
   * Pass rate in [0, 1].
   */
  double pass_rate;
  /**
   * Mean energy per trial in joules, > 0.
   */
  double energy_per_trial_j;
} IwModelOutcome;

/**
 * GAS scores for one model, parallel to the input order. When
 * `has_success_scores` is false (zero pass rate) the success-based fields
 * are zero.
 */
typedef struct {
  double gas_trial;
  double gas_success;
  double gas_quality_gated;
  bool has_success_scores;
} IwGasScore;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static null-terminated string.
 */
const char *iw_version(void);

/**
 * Message for the most recent failure on this thread, or null if none.
 * Valid until the next failing call on the same thread.
 */
const char *iw_last_error_message(void);

/**
 * Releases a string returned through a `char**` out-pointer.
 *
 * # Safety
 * `string` must be null or a pointer previously returned by this library.
 */
void iw_string_free(char *string);

/**
 * Creates a context with default calibration and the bundled provider
 * registry. Never fails; release with [`iw_context_free`].
 */
IwContext *iw_context_new(void);

/**
 * Creates a context from configuration files. Any path may be null to use
 * its default (see the CLI's --config/--providers/--intensities flags).
 *
 * # Safety
 * Non-null paths must be null-terminated strings; `out` must be a valid
 * pointer.
 */
IwStatus iw_context_new_from_files(const char *config_path,
                                   const char *providers_path,
                                   const char *intensities_path,
                                   IwContext **out);

/**
 * Releases a context.
 *
 * # Safety
 * `ctx` must be null or a pointer from `iw_context_new*`, passed at most
 * once.
 */
void iw_context_free(IwContext *ctx);

/**
 * Simplified proxy estimate:
 * `epsilon * (T_in + omega * T_out) * sqrt(params_b) * pue`.
 *
 * # Safety
 * `ctx` and `out` must be valid pointers.
 */
IwStatus iw_estimate_simplified(const IwContext *ctx,
                                uint64_t input_tokens,
                                uint64_t output_tokens,
                                double params_b,
                                double pue,
                                IwEnergyEstimate *out);

/**
 * Full proxy estimate with the context's attention scaling.
 *
 * # Safety
 * `ctx` and `out` must be valid pointers.
 */
IwStatus iw_estimate_full(const IwContext *ctx,
                          uint64_t input_tokens,
                          uint64_t output_tokens,
                          double params_b,
                          double pue,
                          IwEnergyEstimate *out);

/**
 * Whole-server energy: `gpu_j * (1 + cpu + dram + io) * pue`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
IwStatus iw_server_energy(double gpu_j,
                          double alpha_cpu,
                          double alpha_dram,
                          double alpha_io,
                          double pue,
                          double *out);

/**
 * Joules per FLOP: `tdp_w / (peak_flops * utilization)`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
IwStatus iw_flop_energy(double tdp_w, double peak_flops, double utilization, double *out);

/**
 * Trapezoidal integral of a power trace given as parallel arrays.
 * Timestamps must strictly increase; at least two samples are required.
 *
 * # Safety
 * `timestamps_s` and `power_w` must point to `len` readable doubles; `out`
 * must be a valid pointer.
 */
IwStatus iw_integrate_power_trace(const double *timestamps_s,
                                  const double *power_w,
                                  uintptr_t len,
                                  double *out);

/**
 * Compressor energy: `epsilon_comp * original_tokens * sqrt(compressor_params_b)`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
IwStatus iw_compression_energy(uint64_t original_tokens,
                               double compressor_params_b,
                               double epsilon_comp,
                               double *out);

/**
 * Compression energy ROI:
 * `(1 - ratio) * sqrt(target_params_b) / sqrt(compressor_params_b)`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
IwStatus iw_energy_roi(double ratio,
                       double target_params_b,
                       double compressor_params_b,
                       double *out);

/**
 * Converts joules to kilowatt-hours.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
IwStatus iw_joules_to_kwh(double joules, double *out);

/**
 * Grams of CO2 for an energy amount at a grid intensity (gCO2/kWh).
 *
 * # Safety
 * `out` must be a valid pointer.
 */
IwStatus iw_co2_for_energy(double joules, double grams_per_kwh, double *out);

/**
 * Computes GAS scores for a matched snapshot. `out_scores` must hold `len`
 * entries and is filled parallel to the input order. Model names must be
 * unique.
 *
 * # Safety
 * `outcomes` must point to `len` readable entries with valid name
 * pointers; `out_scores` must point to `len` writable entries.
 */
IwStatus iw_gas_scores(const IwModelOutcome *outcomes, uintptr_t len, IwGasScore *out_scores);

/**
 * Marks the non-dominated points under (minimize energy, maximize
 * quality): `out_mask[i]` is true when point `i` is on the frontier.
 * Points equal on both axes are both retained.
 *
 * # Safety
 * `energy_j` and `quality` must point to `len` readable doubles;
 * `out_mask` must point to `len` writable booleans.
 */
IwStatus iw_pareto_frontier_mask(const double *energy_j,
                                 const double *quality,
                                 uintptr_t len,
                                 bool *out_mask);

/**
 * Selects the candidate minimizing
 * `lambda_cost * C + lambda_energy * E + lambda_quality * (1 - Q)` with
 * cost/energy min-max normalized over the set. Ties break to the lowest
 * index. Weights are normalized to sum to 1 and must not all be zero.
 *
 * # Safety
 * The three metric arrays must point to `len` readable doubles;
 * `out_index` and `out_objective` must be valid pointers.
 */
IwStatus iw_optimize(const double *costs,
                     const double *energies,
                     const double *qualities,
                     uintptr_t len,
                     double lambda_cost,
                     double lambda_energy,
                     double lambda_quality,
                     uintptr_t *out_index,
                     double *out_objective);

/**
 * Runs one log-pipeline operation over a trial log and returns the
 * structured JSON report. Release the string with [`iw_string_free`].
 * `seed` is used by the drift operation only.
 *
 * # Safety
 * `ctx` must be a valid context, `log_path` a null-terminated string, and
 * `out_json` a valid pointer.
 */
IwStatus iw_report_json(const IwContext *ctx,
                        const char *log_path,
                        IwPipelineOp op,
                        uint64_t seed,
                        char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* INFERWATT_H */
