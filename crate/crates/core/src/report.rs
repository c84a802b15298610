//! Report types and rendering.
//!
//! Every command emits one report. The structured form is JSON with full
//! provenance (constants, sources, formula, notes) so a report can be read
//! back or audited later; repeated runs over the same inputs are
//! byte-identical. The delimited form is CSV for plotting pipelines, and
//! the table form is aligned text for terminals. Scores and pass rates are
//! carried at full precision and rounded only here, at display time.

use serde::{Deserialize, Serialize};

use crate::carbon::CarbonIntensity;
use crate::drift::DriftResult;
use crate::energy::{CalibrationConstants, EnergyEstimate, EnergyFormula};
use crate::error::{Error, Result};
use crate::optimize::{CandidateConfig, ObjectiveWeights, SweepCell};
use crate::scoring::{display_score, GasReport, ModelOutcome, ParetoPoint};
use crate::trial::{AggregateRow, GroupBy, RatioDelta, RejectedRow};

/// Output rendering selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Table,
    Delimited,
    Structured,
}

/// Provenance block embedded in every structured report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub calibration: CalibrationConstants,
    pub config_source: String,
    pub providers_source: String,
    pub registry_size: usize,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

/// Standing note attached to energy-estimate provenance: the default
/// constants are placeholders for relative comparison, not calibrated
/// absolute measurements.
pub const NOTE_UNCALIBRATED_MAGNITUDES: &str =
    "joule magnitudes scale directly with the configured constants; the shipped defaults are \
     uncalibrated placeholders suited to relative comparison, not absolute measurement, and \
     per-trial magnitudes from other calibrations can differ by orders of magnitude";

/// Standing note attached to compression reports: the formula value is
/// authoritative over circulated rule-of-thumb magnitudes.
pub const NOTE_COMPRESSION_FORMULA: &str =
    "compression energy follows epsilon_comp * original_tokens * sqrt(compressor_params_b); \
     the '~1.8 J per 1000 tokens' rule of thumb sometimes quoted for a 0.35B compressor is \
     ~49x below this formula and is intentionally not used";

fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    text
}

fn csv_from_rows(rows: Vec<Vec<String>>) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.write_record(&row).expect("csv rows serialize");
    }
    String::from_utf8(writer.into_inner().expect("csv flush")).expect("csv is utf8")
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map(|v| format!("{v}")).unwrap_or_else(|| "-".into())
}

/// Rendered energy estimate with the inputs that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub formula: EnergyFormula,
    pub prefill_j: Option<f64>,
    pub decode_j: Option<f64>,
    pub total_j: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params_b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub provider: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub efficiency_factor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pue: Option<f64>,
    pub provenance: Provenance,
}

impl EstimateReport {
    pub fn new(estimate: &EnergyEstimate, provenance: Provenance) -> Self {
        Self {
            formula: estimate.formula,
            prefill_j: estimate.prefill_j,
            decode_j: estimate.decode_j,
            total_j: estimate.total_j,
            model: None,
            params_b: None,
            provider: None,
            efficiency_factor: None,
            pue: None,
            provenance,
        }
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Structured => to_json(self),
            OutputFormat::Delimited => csv_from_rows(vec![
                vec!["field".into(), "value".into()],
                vec!["formula".into(), format_formula(self.formula).into()],
                vec!["prefill_j".into(), fmt_opt(self.prefill_j)],
                vec!["decode_j".into(), fmt_opt(self.decode_j)],
                vec!["total_j".into(), format!("{}", self.total_j)],
            ]),
            OutputFormat::Table => {
                let mut out = String::new();
                out.push_str(&format!("formula    {}\n", format_formula(self.formula)));
                out.push_str(&format!("prefill_j  {}\n", fmt_opt(self.prefill_j)));
                out.push_str(&format!("decode_j   {}\n", fmt_opt(self.decode_j)));
                out.push_str(&format!("total_j    {}\n", self.total_j));
                if let Some(pue) = self.pue {
                    out.push_str(&format!("pue        {pue}\n"));
                }
                if let Some(factor) = self.efficiency_factor {
                    out.push_str(&format!("eff_factor {factor}\n"));
                }
                let c = &self.provenance.calibration;
                out.push_str(&format!(
                    "constants  alpha={} delta={} beta={} epsilon={} omega={} n_ref_b={} epsilon_comp={}\n",
                    c.alpha, c.delta, c.beta, c.epsilon, c.omega, c.n_ref_b, c.epsilon_comp
                ));
                out
            }
        }
    }
}

fn format_formula(formula: EnergyFormula) -> &'static str {
    match formula {
        EnergyFormula::FullProxy => "full_proxy",
        EnergyFormula::Simplified => "simplified",
        EnergyFormula::MeasuredTrace => "measured_trace",
    }
}

/// Compression ROI report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoiReport {
    pub ratio: f64,
    pub target_params_b: f64,
    pub compressor_params_b: f64,
    pub energy_roi: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub break_even_queries: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub original_tokens: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compression_energy_j: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_saved_j: Option<f64>,
    pub provenance: Provenance,
}

impl RoiReport {
    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Structured => to_json(self),
            OutputFormat::Delimited => csv_from_rows(vec![
                vec!["field".into(), "value".into()],
                vec!["ratio".into(), format!("{}", self.ratio)],
                vec!["target_params_b".into(), format!("{}", self.target_params_b)],
                vec![
                    "compressor_params_b".into(),
                    format!("{}", self.compressor_params_b),
                ],
                vec!["energy_roi".into(), format!("{}", self.energy_roi)],
                vec![
                    "break_even_queries".into(),
                    fmt_opt(self.break_even_queries),
                ],
                vec![
                    "compression_energy_j".into(),
                    fmt_opt(self.compression_energy_j),
                ],
                vec!["energy_saved_j".into(), fmt_opt(self.energy_saved_j)],
            ]),
            OutputFormat::Table => {
                let mut out = String::new();
                out.push_str(&format!("ratio                {}\n", self.ratio));
                out.push_str(&format!("target_params_b      {}\n", self.target_params_b));
                out.push_str(&format!(
                    "compressor_params_b  {}\n",
                    self.compressor_params_b
                ));
                out.push_str(&format!("energy_roi           {:.4}\n", self.energy_roi));
                if let Some(queries) = self.break_even_queries {
                    out.push_str(&format!("break_even_queries   {queries:.4}\n"));
                } else {
                    out.push_str("break_even_queries   never (roi = 0)\n");
                }
                if let Some(energy) = self.compression_energy_j {
                    out.push_str(&format!("compression_energy_j {energy:.4}\n"));
                }
                if let Some(saved) = self.energy_saved_j {
                    out.push_str(&format!("energy_saved_j       {saved:.4}\n"));
                }
                out
            }
        }
    }
}

/// Carbon conversion report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarbonReport {
    pub energy_j: f64,
    pub energy_kwh: f64,
    pub region: String,
    pub grams_per_kwh: f64,
    pub co2_g: f64,
}

impl CarbonReport {
    pub fn new(energy_j: f64, energy_kwh: f64, intensity: &CarbonIntensity, co2_g: f64) -> Self {
        Self {
            energy_j,
            energy_kwh,
            region: intensity.region.clone(),
            grams_per_kwh: intensity.grams_per_kwh,
            co2_g,
        }
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Structured => to_json(self),
            OutputFormat::Delimited => csv_from_rows(vec![
                vec!["field".into(), "value".into()],
                vec!["energy_j".into(), format!("{}", self.energy_j)],
                vec!["energy_kwh".into(), format!("{}", self.energy_kwh)],
                vec!["region".into(), self.region.clone()],
                vec!["grams_per_kwh".into(), format!("{}", self.grams_per_kwh)],
                vec!["co2_g".into(), format!("{}", self.co2_g)],
            ]),
            OutputFormat::Table => format!(
                "energy_j      {}\nenergy_kwh    {}\nregion        {}\ngrams_per_kwh {}\nco2_g         {}\n",
                self.energy_j, self.energy_kwh, self.region, self.grams_per_kwh, self.co2_g
            ),
        }
    }
}

/// Ingestion report: acceptance counts plus the rejection list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub log: String,
    pub accepted: usize,
    pub rejected: usize,
    pub rejections: Vec<RejectedRow>,
}

impl IngestSummary {
    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Structured => to_json(self),
            OutputFormat::Delimited => {
                let mut rows = vec![vec!["row".into(), "reason".into()]];
                rows.extend(
                    self.rejections
                        .iter()
                        .map(|r| vec![r.row.to_string(), r.reason.clone()]),
                );
                csv_from_rows(rows)
            }
            OutputFormat::Table => {
                let mut out = format!(
                    "log       {}\naccepted  {}\nrejected  {}\n",
                    self.log, self.accepted, self.rejected
                );
                for rejection in &self.rejections {
                    out.push_str(&format!("  row {:>6}  {}\n", rejection.row, rejection.reason));
                }
                out
            }
        }
    }
}

/// Aggregation report. The `rows` here are the "aggregate-report documents"
/// other commands accept as candidate sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub group_by: GroupBy,
    pub rows: Vec<AggregateRow>,
    pub provenance: Provenance,
}

impl AggregateReport {
    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Structured => to_json(self),
            OutputFormat::Delimited => {
                let mut rows = vec![vec![
                    "model".into(),
                    "compression_ratio".into(),
                    "n".into(),
                    "passes".into(),
                    "pass_rate".into(),
                    "mean_output_tokens".into(),
                    "mean_energy_j".into(),
                    "mean_cost_usd".into(),
                    "energy_source".into(),
                ]];
                for row in &self.rows {
                    rows.push(vec![
                        row.model.clone().unwrap_or_else(|| "*".into()),
                        row.compression_ratio
                            .map(|r| format!("{r}"))
                            .unwrap_or_else(|| "*".into()),
                        row.n.to_string(),
                        row.passes.to_string(),
                        format!("{}", row.pass_rate),
                        format!("{}", row.mean_output_tokens),
                        format!("{}", row.mean_energy_j),
                        format!("{}", row.mean_cost_usd),
                        format!("{:?}", row.energy_source).to_lowercase(),
                    ]);
                }
                csv_from_rows(rows)
            }
            OutputFormat::Table => {
                let mut out = format!(
                    "{:<24} {:>6} {:>8} {:>8} {:>7} {:>10} {:>14} {:>12} {:>9}\n",
                    "model", "ratio", "n", "passes", "pass%", "out_tokens", "energy_j", "cost_usd",
                    "source"
                );
                for row in &self.rows {
                    out.push_str(&format!(
                        "{:<24} {:>6} {:>8} {:>8} {:>7} {:>10.1} {:>14.6} {:>12.6} {:>9}\n",
                        row.model.as_deref().unwrap_or("*"),
                        row.compression_ratio
                            .map(|r| format!("{r}"))
                            .unwrap_or_else(|| "*".into()),
                        row.n,
                        row.passes,
                        row.pass_rate_display_pct(),
                        row.mean_output_tokens,
                        row.mean_energy_j,
                        row.mean_cost_usd,
                        format!("{:?}", row.energy_source).to_lowercase(),
                    ));
                }
                out
            }
        }
    }
}

/// Per-ratio energy deltas against each model's uncompressed baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub rows: Vec<RatioDelta>,
    pub provenance: Provenance,
}

impl DeltaReport {
    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Structured => to_json(self),
            OutputFormat::Delimited => {
                let mut rows = vec![vec![
                    "model".into(),
                    "compression_ratio".into(),
                    "delta_energy_pct".into(),
                    "baseline_ratio".into(),
                ]];
                for delta in &self.rows {
                    rows.push(vec![
                        delta.model.clone(),
                        format!("{}", delta.compression_ratio),
                        format!("{}", delta.delta_energy_pct),
                        format!("{}", delta.baseline_ratio),
                    ]);
                }
                csv_from_rows(rows)
            }
            OutputFormat::Table => {
                let mut out = format!(
                    "{:<24} {:>6} {:>14}\n",
                    "model", "ratio", "delta_energy_%"
                );
                for delta in &self.rows {
                    out.push_str(&format!(
                        "{:<24} {:>6} {:>+14.1}\n",
                        delta.model, delta.compression_ratio, delta.delta_energy_pct
                    ));
                }
                out
            }
        }
    }
}

/// Green AI Score report wrapper: the scores, the inputs they were
/// computed from, and provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GasReportDocument {
    #[serde(flatten)]
    pub report: GasReport,
    /// The matched per-model metrics the scores were computed from.
    pub inputs: Vec<ModelOutcome>,
    pub provenance: Provenance,
}

impl GasReportDocument {
    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Structured => to_json(self),
            OutputFormat::Delimited => {
                let mut rows = vec![vec![
                    "model".into(),
                    "gas_trial".into(),
                    "gas_success".into(),
                    "gas_quality_gated".into(),
                ]];
                for score in &self.report.scores {
                    rows.push(vec![
                        score.model.clone(),
                        format!("{}", score.gas_trial),
                        fmt_opt(score.gas_success),
                        fmt_opt(score.gas_quality_gated),
                    ]);
                }
                csv_from_rows(rows)
            }
            OutputFormat::Table => {
                let mut out = format!(
                    "{:<24} {:>9} {:>11} {:>14}\n",
                    "model", "gas_trial", "gas_success", "quality_gated"
                );
                for score in &self.report.scores {
                    out.push_str(&format!(
                        "{:<24} {:>9} {:>11} {:>14}\n",
                        score.model,
                        display_score(score.gas_trial),
                        score
                            .gas_success
                            .map(display_score)
                            .unwrap_or_else(|| "-".into()),
                        score
                            .gas_quality_gated
                            .map(display_score)
                            .unwrap_or_else(|| "-".into()),
                    ));
                }
                for exclusion in &self.report.exclusions {
                    out.push_str(&format!(
                        "excluded: {} ({})\n",
                        exclusion.model, exclusion.reason
                    ));
                }
                out
            }
        }
    }
}

/// Pareto frontier report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoReport {
    pub frontier: Vec<ParetoPoint>,
    pub candidates: usize,
    pub dominated: usize,
    pub provenance: Provenance,
}

impl ParetoReport {
    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Structured => to_json(self),
            OutputFormat::Delimited => {
                let mut rows = vec![vec![
                    "model".into(),
                    "compression_ratio".into(),
                    "energy_j".into(),
                    "quality".into(),
                ]];
                for point in &self.frontier {
                    rows.push(vec![
                        point.model.clone(),
                        format!("{}", point.compression_ratio),
                        format!("{}", point.energy_j),
                        format!("{}", point.quality),
                    ]);
                }
                csv_from_rows(rows)
            }
            OutputFormat::Table => {
                let mut out = format!(
                    "{:<24} {:>6} {:>14} {:>9}\n",
                    "model", "ratio", "energy_j", "quality"
                );
                for point in &self.frontier {
                    out.push_str(&format!(
                        "{:<24} {:>6} {:>14.6} {:>9.4}\n",
                        point.model, point.compression_ratio, point.energy_j, point.quality
                    ));
                }
                out.push_str(&format!(
                    "frontier {} of {} candidates ({} dominated)\n",
                    self.frontier.len(),
                    self.candidates,
                    self.dominated
                ));
                out
            }
        }
    }
}

/// Routing optimization report; carries the sweep when one was requested.
/// `chosen` is absent only for the empty-log case, where the report is
/// emitted empty and the exit code signals the gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeReport {
    pub weights: ObjectiveWeights,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chosen: Option<CandidateConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<SweepCell>>,
    pub provenance: Provenance,
}

impl OptimizeReport {
    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Structured => to_json(self),
            OutputFormat::Delimited => {
                let mut rows = vec![vec![
                    "lambda_cost".into(),
                    "lambda_energy".into(),
                    "lambda_quality".into(),
                    "model".into(),
                    "compression_ratio".into(),
                    "cost_usd".into(),
                    "energy_j".into(),
                    "quality".into(),
                    "objective".into(),
                ]];
                let mut push_cell =
                    |w: (f64, f64, f64), chosen: &CandidateConfig, objective: f64| {
                        rows.push(vec![
                            format!("{}", w.0),
                            format!("{}", w.1),
                            format!("{}", w.2),
                            chosen.model.clone(),
                            format!("{}", chosen.compression_ratio),
                            format!("{}", chosen.cost_usd),
                            format!("{}", chosen.energy_j),
                            format!("{}", chosen.quality),
                            format!("{objective}"),
                        ]);
                    };
                match &self.sweep {
                    Some(cells) => {
                        for cell in cells {
                            push_cell(
                                (cell.lambda_cost, cell.lambda_energy, cell.lambda_quality),
                                &cell.chosen,
                                cell.objective,
                            );
                        }
                    }
                    None => {
                        if let (Some(chosen), Some(objective)) = (&self.chosen, self.objective) {
                            push_cell(
                                (
                                    self.weights.lambda_cost(),
                                    self.weights.lambda_energy(),
                                    self.weights.lambda_quality(),
                                ),
                                chosen,
                                objective,
                            );
                        }
                    }
                }
                csv_from_rows(rows)
            }
            OutputFormat::Table => {
                let mut out = format!(
                    "weights    cost={:.3} energy={:.3} quality={:.3}\n",
                    self.weights.lambda_cost(),
                    self.weights.lambda_energy(),
                    self.weights.lambda_quality()
                );
                match (&self.chosen, self.objective) {
                    (Some(chosen), Some(objective)) => {
                        out.push_str(&format!(
                            "chosen     {} @ ratio {}\n",
                            chosen.model, chosen.compression_ratio
                        ));
                        out.push_str(&format!(
                            "metrics    cost_usd={} energy_j={} quality={}\n",
                            chosen.cost_usd, chosen.energy_j, chosen.quality
                        ));
                        out.push_str(&format!("objective  {objective:.6}\n"));
                    }
                    _ => out.push_str("chosen     none (no candidates)\n"),
                }
                if let Some(cells) = &self.sweep {
                    out.push_str(&format!("sweep      {} cells evaluated\n", cells.len()));
                }
                out
            }
        }
    }
}

/// Drift report wrapper. `result` is absent only for the empty-log case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    #[serde(flatten)]
    pub result: Option<DriftResult>,
    pub provenance: Provenance,
}

impl DriftReport {
    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Structured => to_json(self),
            OutputFormat::Delimited => {
                let mut rows = vec![vec!["field".into(), "value".into()]];
                if let Some(result) = &self.result {
                    rows.extend([
                        vec!["slope".into(), format!("{}", result.slope)],
                        vec!["p_value".into(), format!("{}", result.p_value)],
                        vec!["permutations".into(), result.permutations.to_string()],
                        vec!["seed".into(), result.seed.to_string()],
                        vec!["n_records".into(), result.n_records.to_string()],
                    ]);
                }
                csv_from_rows(rows)
            }
            OutputFormat::Table => match &self.result {
                Some(result) => format!(
                    "slope         {:+.6}\np_value       {:.6}\npermutations  {}\nseed          {}\nn_records     {}\n",
                    result.slope,
                    result.p_value,
                    result.permutations,
                    result.seed,
                    result.n_records
                ),
                None => "no records\n".to_string(),
            },
        }
    }
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(Self::Table),
            "delimited" => Ok(Self::Delimited),
            "structured" => Ok(Self::Structured),
            other => Err(Error::InvalidParameter(format!(
                "unknown output format '{other}' (expected table, delimited, or structured)"
            ))),
        }
    }
}
