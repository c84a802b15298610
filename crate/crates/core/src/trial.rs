//! Trial-log ingestion and aggregation.
//!
//! A trial log records one row per API call. The delimited schema is, with
//! a required header and these exact column names:
//!
//! ```text
//! provider,model,benchmark,compression_ratio,input_tokens,output_tokens,passed,cost_usd,run_index[,energy_j][,quality_score]
//! ```
//!
//! `passed` is serialized as `true`/`false`. `energy_j` is optional per row;
//! when absent, energy is computed from the record's model profile with the
//! simplified formula, and each aggregate row records which path supplied
//! its energy. `quality_score` is an optional opaque field that is ingested
//! and carried through but never computed. A JSON array of objects with
//! identical field names is also accepted.
//!
//! Invalid rows are collected into a rejection report with row numbers and
//! reasons; accepted + rejected always equals the input row count.
//! Aggregation is permutation-invariant over input order: group members are
//! folded in `run_index` order, which is unique within a log.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::energy::{
    estimate_energy_simplified, CalibrationConstants, ModelRegistry, TokenCounts,
};
use crate::error::{Error, Result};
use crate::provider::{apply_provider_adjustment, ProviderRegistry};

/// One API call's outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialRecord {
    pub provider: String,
    pub model: String,
    pub benchmark: String,
    /// Compressed/original token ratio in (0, 1]; 1.0 = uncompressed.
    pub compression_ratio: f64,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub passed: bool,
    pub cost_usd: f64,
    /// Execution order within the log; unique per file.
    pub run_index: u64,
    /// Precomputed energy, when the harness recorded one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_j: Option<f64>,
    /// Opaque upstream quality metric; carried through, never computed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality_score: Option<f64>,
}

impl TrialRecord {
    fn validate(&self) -> std::result::Result<(), String> {
        if !self.compression_ratio.is_finite()
            || self.compression_ratio <= 0.0
            || self.compression_ratio > 1.0
        {
            return Err(format!(
                "compression_ratio must be in (0, 1], got {}",
                self.compression_ratio
            ));
        }
        if !self.cost_usd.is_finite() || self.cost_usd < 0.0 {
            return Err(format!("cost_usd must be >= 0, got {}", self.cost_usd));
        }
        if let Some(energy) = self.energy_j {
            if !energy.is_finite() || energy < 0.0 {
                return Err(format!("energy_j must be >= 0, got {energy}"));
            }
        }
        if let Some(quality) = self.quality_score {
            if !quality.is_finite() {
                return Err(format!("quality_score must be finite, got {quality}"));
            }
        }
        Ok(())
    }
}

/// A row that failed validation, with its 1-based position and the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedRow {
    pub row: usize,
    pub reason: String,
}

/// Ingestion outcome: accepted records plus the rejection report.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct IngestReport {
    pub accepted: Vec<TrialRecord>,
    pub rejected: Vec<RejectedRow>,
}

impl IngestReport {
    pub fn total_rows(&self) -> usize {
        self.accepted.len() + self.rejected.len()
    }
}

const REQUIRED_COLUMNS: [&str; 9] = [
    "provider",
    "model",
    "benchmark",
    "compression_ratio",
    "input_tokens",
    "output_tokens",
    "passed",
    "cost_usd",
    "run_index",
];
const OPTIONAL_COLUMNS: [&str; 2] = ["energy_j", "quality_score"];

/// Ingests a delimited trial log. Header problems are fatal schema errors;
/// individual bad rows become rejections.
pub fn ingest_csv<R: Read>(reader: R) -> Result<IngestReport> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);

    let headers: Vec<String> = csv_reader
        .headers()
        .map_err(|e| Error::Schema(format!("unreadable header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();

    let mut column_index: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, name) in headers.iter().enumerate() {
        if column_index.insert(name.as_str(), i).is_some() {
            return Err(Error::Schema(format!("duplicate column '{name}'")));
        }
    }
    for required in REQUIRED_COLUMNS {
        if !column_index.contains_key(required) {
            return Err(Error::Schema(format!("missing required column '{required}'")));
        }
    }
    for name in &headers {
        let known = REQUIRED_COLUMNS.contains(&name.as_str())
            || OPTIONAL_COLUMNS.contains(&name.as_str());
        if !known {
            return Err(Error::Schema(format!("unknown column '{name}'")));
        }
    }

    let field = |record: &csv::StringRecord, name: &str| -> Option<String> {
        column_index
            .get(name)
            .and_then(|&i| record.get(i))
            .map(str::to_string)
    };

    let mut report = IngestReport::default();
    let mut seen_run_index: HashSet<u64> = HashSet::new();
    for (i, row) in csv_reader.records().enumerate() {
        let row_number = i + 1;
        let reject = |reason: String, report: &mut IngestReport| {
            report.rejected.push(RejectedRow {
                row: row_number,
                reason,
            });
        };
        let record = match row {
            Ok(record) => record,
            Err(e) => {
                reject(format!("unparseable row: {e}"), &mut report);
                continue;
            }
        };
        if record.len() != headers.len() {
            reject(
                format!(
                    "expected {} fields, got {}",
                    headers.len(),
                    record.len()
                ),
                &mut report,
            );
            continue;
        }
        match parse_row(&record, &field) {
            Ok(trial) => {
                if let Err(reason) = trial.validate() {
                    reject(reason, &mut report);
                } else if !seen_run_index.insert(trial.run_index) {
                    reject(
                        format!("duplicate run_index {}", trial.run_index),
                        &mut report,
                    );
                } else {
                    report.accepted.push(trial);
                }
            }
            Err(reason) => reject(reason, &mut report),
        }
    }
    Ok(report)
}

fn parse_row(
    record: &csv::StringRecord,
    field: &dyn Fn(&csv::StringRecord, &str) -> Option<String>,
) -> std::result::Result<TrialRecord, String> {
    let text = |name: &str| field(record, name).ok_or_else(|| format!("missing field '{name}'"));
    let parse_f64 = |name: &str| -> std::result::Result<f64, String> {
        let raw = text(name)?;
        raw.parse::<f64>()
            .map_err(|_| format!("{name} '{raw}' is not a number"))
    };
    let parse_u64 = |name: &str| -> std::result::Result<u64, String> {
        let raw = text(name)?;
        raw.parse::<u64>()
            .map_err(|_| format!("{name} '{raw}' is not a nonnegative integer"))
    };
    let parse_opt_f64 = |name: &str| -> std::result::Result<Option<f64>, String> {
        match field(record, name) {
            None => Ok(None),
            Some(raw) if raw.is_empty() => Ok(None),
            Some(raw) => raw
                .parse::<f64>()
                .map(Some)
                .map_err(|_| format!("{name} '{raw}' is not a number")),
        }
    };
    let passed_raw = text("passed")?;
    let passed = match passed_raw.as_str() {
        "true" => true,
        "false" => false,
        other => return Err(format!("passed must be 'true' or 'false', got '{other}'")),
    };
    Ok(TrialRecord {
        provider: text("provider")?,
        model: text("model")?,
        benchmark: text("benchmark")?,
        compression_ratio: parse_f64("compression_ratio")?,
        input_tokens: parse_u64("input_tokens")?,
        output_tokens: parse_u64("output_tokens")?,
        passed,
        cost_usd: parse_f64("cost_usd")?,
        run_index: parse_u64("run_index")?,
        energy_j: parse_opt_f64("energy_j")?,
        quality_score: parse_opt_f64("quality_score")?,
    })
}

/// Ingests a JSON array of trial objects with the same field names as the
/// delimited schema.
pub fn ingest_json<R: Read>(reader: R) -> Result<IngestReport> {
    let values: Vec<serde_json::Value> = serde_json::from_reader(reader)
        .map_err(|e| Error::Schema(format!("not a JSON array of trial objects: {e}")))?;
    let mut report = IngestReport::default();
    let mut seen_run_index: HashSet<u64> = HashSet::new();
    for (i, value) in values.into_iter().enumerate() {
        let row_number = i + 1;
        match serde_json::from_value::<TrialRecord>(value) {
            Ok(trial) => {
                if let Err(reason) = trial.validate() {
                    report.rejected.push(RejectedRow {
                        row: row_number,
                        reason,
                    });
                } else if !seen_run_index.insert(trial.run_index) {
                    report.rejected.push(RejectedRow {
                        row: row_number,
                        reason: format!("duplicate run_index {}", trial.run_index),
                    });
                } else {
                    report.accepted.push(trial);
                }
            }
            Err(e) => report.rejected.push(RejectedRow {
                row: row_number,
                reason: e.to_string(),
            }),
        }
    }
    Ok(report)
}

/// Ingests a trial log, dispatching on the file extension (`.json` for the
/// structured form, delimited otherwise).
pub fn ingest_path(path: &Path) -> Result<IngestReport> {
    let file = std::fs::File::open(path).map_err(|e| Error::io_at(path, e))?;
    let reader = std::io::BufReader::new(file);
    if path.extension().and_then(|e| e.to_str()) == Some("json") {
        ingest_json(reader)
    } else {
        ingest_csv(reader)
    }
}

/// Writes records back out in the delimited schema. Optional columns are
/// emitted only when at least one record carries them.
pub fn write_csv<W: Write>(writer: W, records: &[TrialRecord]) -> Result<()> {
    let has_energy = records.iter().any(|r| r.energy_j.is_some());
    let has_quality = records.iter().any(|r| r.quality_score.is_some());
    let mut csv_writer = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = REQUIRED_COLUMNS.to_vec();
    if has_energy {
        header.push("energy_j");
    }
    if has_quality {
        header.push("quality_score");
    }
    csv_writer
        .write_record(&header)
        .map_err(|e| Error::Schema(e.to_string()))?;
    for record in records {
        let mut fields = vec![
            record.provider.clone(),
            record.model.clone(),
            record.benchmark.clone(),
            format!("{}", record.compression_ratio),
            format!("{}", record.input_tokens),
            format!("{}", record.output_tokens),
            record.passed.to_string(),
            format!("{}", record.cost_usd),
            format!("{}", record.run_index),
        ];
        if has_energy {
            fields.push(record.energy_j.map(|e| format!("{e}")).unwrap_or_default());
        }
        if has_quality {
            fields.push(
                record
                    .quality_score
                    .map(|q| format!("{q}"))
                    .unwrap_or_default(),
            );
        }
        csv_writer
            .write_record(&fields)
            .map_err(|e| Error::Schema(e.to_string()))?;
    }
    csv_writer.flush()?;
    Ok(())
}

/// Grouping selector for aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    Model,
    Ratio,
    ModelRatio,
}

impl std::str::FromStr for GroupBy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "model" => Ok(Self::Model),
            "ratio" => Ok(Self::Ratio),
            "model-ratio" => Ok(Self::ModelRatio),
            other => Err(Error::InvalidParameter(format!(
                "unknown grouping '{other}' (expected model, ratio, or model-ratio)"
            ))),
        }
    }
}

/// Which path supplied the energy values inside an aggregate row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergySource {
    Recorded,
    Computed,
    Mixed,
}

/// Registries and constants used to compute energy for records that lack a
/// recorded `energy_j`.
#[derive(Debug, Clone, Copy)]
pub struct EnergyContext<'a> {
    pub models: &'a ModelRegistry,
    pub providers: &'a ProviderRegistry,
    pub calib: &'a CalibrationConstants,
}

/// One aggregate group. Pass rates are carried as exact count pairs
/// (`passes`/`n`); `pass_rate` is their quotient and display rounding
/// happens only at rendering time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compression_ratio: Option<f64>,
    pub n: u64,
    pub passes: u64,
    pub pass_rate: f64,
    pub mean_output_tokens: f64,
    pub mean_energy_j: f64,
    pub mean_cost_usd: f64,
    pub energy_source: EnergySource,
}

impl AggregateRow {
    /// Pass rate as a one-decimal percentage string, the table display form.
    pub fn pass_rate_display_pct(&self) -> String {
        format!("{:.1}", self.pass_rate * 100.0)
    }
}

fn resolve_energy(record: &TrialRecord, ctx: &EnergyContext) -> Result<(f64, bool)> {
    if let Some(energy) = record.energy_j {
        return Ok((energy, true));
    }
    let model = ctx.models.get(&record.model)?;
    let provider = ctx.providers.get(&record.provider)?;
    let estimate = estimate_energy_simplified(
        TokenCounts::new(record.input_tokens, record.output_tokens),
        model,
        ctx.calib,
        provider.est_pue,
    )?;
    Ok((apply_provider_adjustment(&estimate, provider).total_j, false))
}

/// Groups validated records and computes per-group counts and means.
///
/// The result is independent of input record order: groups are emitted in
/// key order and each group's sums fold over its records sorted by
/// `run_index`.
pub fn aggregate(
    records: &[TrialRecord],
    group_by: GroupBy,
    ctx: &EnergyContext,
) -> Result<Vec<AggregateRow>> {
    // Key ratio by bit pattern; ratios are validated positive, so bit order
    // equals numeric order.
    let mut groups: BTreeMap<(Option<String>, Option<u64>), Vec<usize>> = BTreeMap::new();
    for (i, record) in records.iter().enumerate() {
        let key = match group_by {
            GroupBy::Model => (Some(record.model.clone()), None),
            GroupBy::Ratio => (None, Some(record.compression_ratio.to_bits())),
            GroupBy::ModelRatio => (
                Some(record.model.clone()),
                Some(record.compression_ratio.to_bits()),
            ),
        };
        groups.entry(key).or_default().push(i);
    }

    let mut rows = Vec::with_capacity(groups.len());
    for ((model, ratio_bits), mut members) in groups {
        members.sort_by_key(|&i| (records[i].run_index, i));
        let n = members.len() as u64;
        let mut passes = 0u64;
        let mut output_tokens: u128 = 0;
        let mut energy_sum = 0.0f64;
        let mut cost_sum = 0.0f64;
        let mut recorded = 0usize;
        for &i in &members {
            let record = &records[i];
            if record.passed {
                passes += 1;
            }
            output_tokens += u128::from(record.output_tokens);
            let (energy, was_recorded) = resolve_energy(record, ctx)?;
            energy_sum += energy;
            cost_sum += record.cost_usd;
            if was_recorded {
                recorded += 1;
            }
        }
        let energy_source = if recorded == members.len() {
            EnergySource::Recorded
        } else if recorded == 0 {
            EnergySource::Computed
        } else {
            EnergySource::Mixed
        };
        rows.push(AggregateRow {
            model,
            compression_ratio: ratio_bits.map(f64::from_bits),
            n,
            passes,
            pass_rate: passes as f64 / n as f64,
            mean_output_tokens: output_tokens as f64 / n as f64,
            mean_energy_j: energy_sum / n as f64,
            mean_cost_usd: cost_sum / n as f64,
            energy_source,
        });
    }
    Ok(rows)
}

/// Percentage change of a group's mean energy against its model's
/// uncompressed (ratio 1.0) baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioDelta {
    pub model: String,
    pub compression_ratio: f64,
    /// May be negative; +100 means double the baseline energy.
    pub delta_energy_pct: f64,
    /// Always 1.0; recorded for report provenance.
    pub baseline_ratio: f64,
}

/// Computes per-ratio energy deltas against each model's ratio-1.0 row.
/// Input rows must come from a model+ratio aggregation, and every model
/// present must have a baseline row.
pub fn energy_delta_vs_baseline(aggregates: &[AggregateRow]) -> Result<Vec<RatioDelta>> {
    let mut baselines: BTreeMap<&str, f64> = BTreeMap::new();
    for row in aggregates {
        let (Some(model), Some(ratio)) = (&row.model, row.compression_ratio) else {
            return Err(Error::InvalidParameter(
                "energy deltas require rows grouped by model and ratio".into(),
            ));
        };
        if ratio == 1.0 {
            baselines.insert(model.as_str(), row.mean_energy_j);
        }
    }
    let mut deltas = Vec::with_capacity(aggregates.len());
    for row in aggregates {
        let model = row.model.as_deref().expect("checked above");
        let ratio = row.compression_ratio.expect("checked above");
        let baseline = *baselines
            .get(model)
            .ok_or_else(|| Error::MissingBaseline(model.to_string()))?;
        if baseline == 0.0 {
            return Err(Error::UndefinedResult(format!(
                "baseline mean energy for model '{model}' is 0 J; deltas are undefined"
            )));
        }
        deltas.push(RatioDelta {
            model: model.to_string(),
            compression_ratio: ratio,
            delta_energy_pct: 100.0 * (row.mean_energy_j - baseline) / baseline,
            baseline_ratio: 1.0,
        });
    }
    deltas.sort_by(|a, b| {
        (a.model.as_str(), a.compression_ratio)
            .partial_cmp(&(b.model.as_str(), b.compression_ratio))
            .expect("ratios are finite")
    });
    Ok(deltas)
}

/// Expected energy to obtain one correct answer: mean energy per trial
/// divided by the pass rate. Undefined (an explicit error, never a silent
/// infinity) when nothing passed.
pub fn energy_per_success(row: &AggregateRow) -> Result<f64> {
    if row.passes == 0 {
        return Err(Error::UndefinedResult(format!(
            "pass rate is 0 for group {:?}/{:?}; energy per success is undefined",
            row.model, row.compression_ratio
        )));
    }
    Ok(row.mean_energy_j / row.pass_rate)
}
