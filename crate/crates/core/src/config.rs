//! Shared TOML configuration format.
//!
//! Calibration constants, server overheads, attention scaling, model
//! profiles, provider profiles, and carbon-intensity tables all load from
//! the same human-editable document. Every section is optional; omitted
//! calibration and overhead fields fall back to the documented defaults
//! (including the coupled default `delta = 4 * alpha`).
//!
//! ```toml
//! [calibration]
//! alpha = 0.01          # J/token prefill base (full formula)
//! delta = 0.04          # J/token decode base; defaults to 4 * alpha
//! beta = 0.75           # size-scaling exponent
//! epsilon = 0.15        # J/(token * sqrt(B)) simplified constant
//! omega = 4.0           # decode-to-prefill weight
//! n_ref_b = 7.0         # reference size, billions
//! epsilon_comp = 0.15   # compression constant
//!
//! [overheads]
//! alpha_cpu = 0.15
//! alpha_dram = 0.08
//! alpha_io = 0.02
//! pue = 1.2
//!
//! [attention]
//! breakpoints = [[8192, 1.0], [65536, 1.5]]   # omit for constant 1.0
//!
//! [[model]]
//! name = "gpt-4o-mini"
//! params_b = 8.0
//! provider = "openai"   # optional
//!
//! [[provider]]
//! name = "openai"
//! est_pue = 1.20
//! hardware = "H100/A100"
//! efficiency_factor = 1.00
//!
//! [[hardware]]
//! name = "a100"
//! tdp_w = 400.0
//! peak_flops = 1.0e15
//! utilization = 0.5
//!
//! [carbon_intensity]
//! us_average = 400.0
//! quebec = 30.0
//! ```
//!
//! Parameter counts for closed models must be supplied here; the toolkit
//! ships no guesses. A default provider registry is bundled; there is no
//! bundled carbon-intensity table.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::carbon::IntensityTable;
use crate::energy::{
    AttentionScaling, CalibrationConstants, HardwareProfile, ModelProfile, ModelRegistry,
    ServerOverheads,
};
use crate::error::{Error, Result};
use crate::provider::{ProviderProfile, ProviderRegistry};

/// The bundled default provider registry document.
pub const BUNDLED_PROVIDERS_TOML: &str = include_str!("../data/providers.toml");

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSection {
    pub alpha: Option<f64>,
    pub delta: Option<f64>,
    pub beta: Option<f64>,
    pub epsilon: Option<f64>,
    pub omega: Option<f64>,
    pub n_ref_b: Option<f64>,
    pub epsilon_comp: Option<f64>,
}

impl CalibrationSection {
    /// Resolves against defaults; `delta` defaults to `4 * alpha` so the
    /// coupling survives a user overriding only `alpha`.
    pub fn resolve(&self) -> Result<CalibrationConstants> {
        let defaults = CalibrationConstants::default();
        let alpha = self.alpha.unwrap_or(defaults.alpha);
        let constants = CalibrationConstants {
            alpha,
            delta: self.delta.unwrap_or(4.0 * alpha),
            beta: self.beta.unwrap_or(defaults.beta),
            epsilon: self.epsilon.unwrap_or(defaults.epsilon),
            omega: self.omega.unwrap_or(defaults.omega),
            n_ref_b: self.n_ref_b.unwrap_or(defaults.n_ref_b),
            epsilon_comp: self.epsilon_comp.unwrap_or(defaults.epsilon_comp),
        };
        constants.validate()?;
        Ok(constants)
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverheadsSection {
    pub alpha_cpu: Option<f64>,
    pub alpha_dram: Option<f64>,
    pub alpha_io: Option<f64>,
    pub pue: Option<f64>,
}

impl OverheadsSection {
    pub fn resolve(&self) -> Result<ServerOverheads> {
        let defaults = ServerOverheads::default();
        let overheads = ServerOverheads {
            alpha_cpu: self.alpha_cpu.unwrap_or(defaults.alpha_cpu),
            alpha_dram: self.alpha_dram.unwrap_or(defaults.alpha_dram),
            alpha_io: self.alpha_io.unwrap_or(defaults.alpha_io),
            pue: self.pue.unwrap_or(defaults.pue),
        };
        overheads.validate()?;
        Ok(overheads)
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttentionSection {
    pub breakpoints: Option<Vec<(u64, f64)>>,
}

impl AttentionSection {
    pub fn resolve(&self) -> Result<AttentionScaling> {
        match &self.breakpoints {
            None => Ok(AttentionScaling::ConstantOne),
            Some(breakpoints) => AttentionScaling::piecewise(breakpoints.clone()),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelEntry {
    pub name: String,
    pub params_b: f64,
    #[serde(default)]
    pub provider: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderEntry {
    pub name: String,
    pub est_pue: f64,
    pub hardware: String,
    pub efficiency_factor: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardwareEntry {
    pub name: String,
    pub tdp_w: f64,
    pub peak_flops: f64,
    pub utilization: f64,
}

/// Name-keyed hardware profiles for the FLOP-level energy bound.
#[derive(Debug, Clone, Default)]
pub struct HardwareTable {
    profiles: BTreeMap<String, HardwareProfile>,
}

impl HardwareTable {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> Result<&HardwareProfile> {
        self.profiles
            .get(name)
            .ok_or_else(|| Error::UnknownHardware(name.to_string()))
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }
}

/// One parsed configuration document; all sections optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub calibration: Option<CalibrationSection>,
    pub overheads: Option<OverheadsSection>,
    pub attention: Option<AttentionSection>,
    #[serde(default, rename = "model")]
    pub models: Vec<ModelEntry>,
    #[serde(default, rename = "provider")]
    pub providers: Vec<ProviderEntry>,
    #[serde(default, rename = "hardware")]
    pub hardware: Vec<HardwareEntry>,
    pub carbon_intensity: Option<BTreeMap<String, f64>>,
}

impl ConfigDocument {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Schema(format!("config parse error: {e}")))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io_at(path, e))?;
        Self::parse(&text)
            .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
    }
}

/// Builds a provider registry from a parsed document's `[[provider]]`
/// entries; duplicate names conflict.
pub fn load_registry(document: &ConfigDocument) -> Result<ProviderRegistry> {
    let profiles: Result<Vec<ProviderProfile>> = document
        .providers
        .iter()
        .map(|entry| {
            ProviderProfile::new(
                entry.name.clone(),
                entry.est_pue,
                entry.hardware.clone(),
                entry.efficiency_factor,
            )
        })
        .collect();
    ProviderRegistry::from_profiles(profiles?)
}

/// The bundled default registry.
pub fn bundled_providers() -> ProviderRegistry {
    let document =
        ConfigDocument::parse(BUNDLED_PROVIDERS_TOML).expect("bundled registry parses");
    load_registry(&document).expect("bundled registry is valid")
}

fn load_models(document: &ConfigDocument) -> Result<ModelRegistry> {
    let profiles: Result<Vec<ModelProfile>> = document
        .models
        .iter()
        .map(|entry| ModelProfile::new(entry.name.clone(), entry.params_b, entry.provider.clone()))
        .collect();
    ModelRegistry::from_profiles(profiles?)
}

fn load_hardware(document: &ConfigDocument) -> Result<HardwareTable> {
    let mut profiles = BTreeMap::new();
    for entry in &document.hardware {
        if entry.name.is_empty() {
            return Err(Error::Validation("hardware name must be nonempty".into()));
        }
        let profile = HardwareProfile::new(entry.tdp_w, entry.peak_flops, entry.utilization)
            .map_err(|e| Error::Validation(format!("hardware '{}': {e}", entry.name)))?;
        if profiles.insert(entry.name.clone(), profile).is_some() {
            return Err(Error::Conflict(format!(
                "duplicate hardware name '{}'",
                entry.name
            )));
        }
    }
    Ok(HardwareTable { profiles })
}

/// Fully resolved runtime configuration with source provenance labels.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub calibration: CalibrationConstants,
    pub overheads: ServerOverheads,
    pub attention: AttentionScaling,
    pub models: ModelRegistry,
    pub providers: ProviderRegistry,
    pub hardware: HardwareTable,
    pub intensities: IntensityTable,
    /// Where calibration/models came from ("defaults" or a path).
    pub config_source: String,
    /// Where the provider registry came from ("bundled" or a path).
    pub providers_source: String,
    /// Where the intensity table came from ("none" or a path).
    pub intensities_source: String,
}

impl Default for ResolvedConfig {
    fn default() -> Self {
        Self {
            calibration: CalibrationConstants::default(),
            overheads: ServerOverheads::default(),
            attention: AttentionScaling::ConstantOne,
            models: ModelRegistry::empty(),
            providers: bundled_providers(),
            hardware: HardwareTable::empty(),
            intensities: IntensityTable::empty(),
            config_source: "defaults".into(),
            providers_source: "bundled".into(),
            intensities_source: "none".into(),
        }
    }
}

impl ResolvedConfig {
    /// Assembles runtime configuration from up to three documents (they may
    /// be the same file). Precedence for the provider registry: explicit
    /// registry path, then the main config's `[[provider]]` entries, then
    /// the bundled defaults. Same pattern for the intensity table, which
    /// has no bundled fallback.
    pub fn from_sources(
        config: Option<&Path>,
        providers: Option<&Path>,
        intensities: Option<&Path>,
    ) -> Result<Self> {
        let mut resolved = Self::default();

        let config_doc = match config {
            Some(path) => {
                resolved.config_source = path.display().to_string();
                Some(ConfigDocument::from_path(path)?)
            }
            None => None,
        };
        if let Some(doc) = &config_doc {
            if let Some(section) = &doc.calibration {
                resolved.calibration = section.resolve()?;
            }
            if let Some(section) = &doc.overheads {
                resolved.overheads = section.resolve()?;
            }
            if let Some(section) = &doc.attention {
                resolved.attention = section.resolve()?;
            }
            resolved.models = load_models(doc)?;
            resolved.hardware = load_hardware(doc)?;
            if !doc.providers.is_empty() {
                resolved.providers = load_registry(doc)?;
                resolved.providers_source = resolved.config_source.clone();
            }
            if let Some(table) = &doc.carbon_intensity {
                resolved.intensities = IntensityTable::from_map(table.clone())?;
                resolved.intensities_source = resolved.config_source.clone();
            }
        }

        if let Some(path) = providers {
            let doc = ConfigDocument::from_path(path)?;
            resolved.providers = load_registry(&doc)?;
            resolved.providers_source = path.display().to_string();
        }
        if let Some(path) = intensities {
            let doc = ConfigDocument::from_path(path)?;
            let table = doc.carbon_intensity.ok_or_else(|| {
                Error::Schema(format!(
                    "{}: no [carbon_intensity] section",
                    path.display()
                ))
            })?;
            resolved.intensities = IntensityTable::from_map(table)?;
            resolved.intensities_source = path.display().to_string();
        }

        Ok(resolved)
    }
}
