//! Per-provider energy adjustment profiles.
//!
//! Each provider carries an estimated datacenter PUE, a hardware label, and
//! a dimensionless efficiency factor relative to the baseline provider.
//! PUE and efficiency factor are applied exactly once each: PUE enters the
//! proxy formulas as their `pue` argument, the efficiency factor multiplies
//! the resulting estimate here. The bundled defaults are estimates loaded
//! from a config file, not compiled-in constants.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::energy::EnergyEstimate;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderProfile {
    pub name: String,
    /// Estimated power usage effectiveness, >= 1.0.
    pub est_pue: f64,
    /// Free-text hardware label (e.g. "H100/A100").
    pub hardware: String,
    /// Dimensionless energy adjustment relative to the baseline provider.
    pub efficiency_factor: f64,
}

impl ProviderProfile {
    pub fn new(
        name: impl Into<String>,
        est_pue: f64,
        hardware: impl Into<String>,
        efficiency_factor: f64,
    ) -> Result<Self> {
        let profile = Self {
            name: name.into(),
            est_pue,
            hardware: hardware.into(),
            efficiency_factor,
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::Validation("provider name must be nonempty".into()));
        }
        if !self.est_pue.is_finite() || self.est_pue < 1.0 {
            return Err(Error::Validation(format!(
                "provider '{}': est_pue must be >= 1.0, got {}",
                self.name, self.est_pue
            )));
        }
        if !self.efficiency_factor.is_finite() || self.efficiency_factor <= 0.0 {
            return Err(Error::Validation(format!(
                "provider '{}': efficiency_factor must be > 0, got {}",
                self.name, self.efficiency_factor
            )));
        }
        Ok(())
    }
}

/// Immutable name-keyed registry of provider profiles. Reloading builds a
/// new value; concurrent reads are safe.
#[derive(Debug, Clone, Default)]
pub struct ProviderRegistry {
    providers: BTreeMap<String, ProviderProfile>,
}

impl ProviderRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a registry, rejecting duplicate names.
    pub fn from_profiles(profiles: impl IntoIterator<Item = ProviderProfile>) -> Result<Self> {
        let mut providers = BTreeMap::new();
        for profile in profiles {
            profile.validate()?;
            let name = profile.name.clone();
            if providers.insert(name.clone(), profile).is_some() {
                return Err(Error::Conflict(format!(
                    "duplicate provider name '{name}'"
                )));
            }
        }
        Ok(Self { providers })
    }

    /// Every miss is an explicit error, never a silent default.
    pub fn get(&self, name: &str) -> Result<&ProviderProfile> {
        self.providers
            .get(name)
            .ok_or_else(|| Error::UnknownProvider(name.to_string()))
    }

    pub fn len(&self) -> usize {
        self.providers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.providers.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ProviderProfile> {
        self.providers.values()
    }
}

/// Multiplies every joule component of an estimate by the provider's
/// efficiency factor. The provider's `est_pue` is not re-applied here; it
/// belongs in the formula's `pue` argument.
pub fn apply_provider_adjustment(
    estimate: &EnergyEstimate,
    provider: &ProviderProfile,
) -> EnergyEstimate {
    estimate.scaled(provider.efficiency_factor)
}
