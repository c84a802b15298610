//! Energy-to-carbon conversion under regional intensity factors.
//!
//! There is deliberately no default intensity: grid carbon intensity varies
//! by an order of magnitude across regions, so every conversion requires an
//! explicit factor.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const JOULES_PER_KWH: f64 = 3.6e6;

/// A regional grid carbon intensity in grams of CO2 per kWh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarbonIntensity {
    pub region: String,
    pub grams_per_kwh: f64,
}

impl CarbonIntensity {
    pub fn new(region: impl Into<String>, grams_per_kwh: f64) -> Result<Self> {
        let intensity = Self {
            region: region.into(),
            grams_per_kwh,
        };
        intensity.validate()?;
        Ok(intensity)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.grams_per_kwh.is_finite() || self.grams_per_kwh <= 0.0 {
            return Err(Error::Validation(format!(
                "carbon intensity for '{}' must be > 0 gCO2/kWh, got {}",
                self.region, self.grams_per_kwh
            )));
        }
        Ok(())
    }
}

/// Region-keyed intensity table loaded from configuration.
#[derive(Debug, Clone, Default)]
pub struct IntensityTable {
    regions: BTreeMap<String, f64>,
}

impl IntensityTable {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_map(regions: BTreeMap<String, f64>) -> Result<Self> {
        for (region, grams) in &regions {
            CarbonIntensity::new(region.clone(), *grams)?;
        }
        Ok(Self { regions })
    }

    pub fn get(&self, region: &str) -> Result<CarbonIntensity> {
        self.regions
            .get(region)
            .map(|&grams_per_kwh| CarbonIntensity {
                region: region.to_string(),
                grams_per_kwh,
            })
            .ok_or_else(|| Error::UnknownRegion(region.to_string()))
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }
}

/// Converts joules to kilowatt-hours.
pub fn joules_to_kwh(energy_j: f64) -> Result<f64> {
    if !energy_j.is_finite() || energy_j < 0.0 {
        return Err(Error::Validation(format!(
            "energy must be nonnegative, got {energy_j} J"
        )));
    }
    Ok(energy_j / JOULES_PER_KWH)
}

/// Grams of CO2 for an energy amount at a regional intensity.
pub fn co2_for_energy(energy_j: f64, intensity: &CarbonIntensity) -> Result<f64> {
    intensity.validate()?;
    Ok(joules_to_kwh(energy_j)? * intensity.grams_per_kwh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn kwh_unit_definition() {
        assert_eq!(joules_to_kwh(3.6e6).unwrap(), 1.0);
        assert_eq!(joules_to_kwh(0.0).unwrap(), 0.0);
        assert_eq!(joules_to_kwh(1.8e6).unwrap(), 0.5);
    }

    #[test]
    fn negative_energy_rejected() {
        assert!(matches!(joules_to_kwh(-1.0), Err(Error::Validation(_))));
    }

    #[test]
    fn co2_examples() {
        let at_500 = CarbonIntensity::new("test", 500.0).unwrap();
        assert_eq!(co2_for_energy(3.6e6, &at_500).unwrap(), 500.0);
        assert_eq!(co2_for_energy(0.0, &at_500).unwrap(), 0.0);

        let at_475 = CarbonIntensity::new("test", 475.0).unwrap();
        assert_relative_eq!(
            co2_for_energy(7.2e6, &at_475).unwrap(),
            950.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn intensity_must_be_positive() {
        assert!(CarbonIntensity::new("r", 0.0).is_err());
        assert!(CarbonIntensity::new("r", -5.0).is_err());
    }

    #[test]
    fn table_lookup_misses_are_errors() {
        let table =
            IntensityTable::from_map(BTreeMap::from([("quebec".to_string(), 30.0)])).unwrap();
        assert_eq!(table.get("quebec").unwrap().grams_per_kwh, 30.0);
        assert!(matches!(table.get("mars"), Err(Error::UnknownRegion(_))));
    }

    proptest! {
        #[test]
        fn co2_is_additive_in_energy(
            a in 0.0f64..1e12,
            b in 0.0f64..1e12,
            grams in 1.0f64..2000.0,
        ) {
            let intensity = CarbonIntensity::new("r", grams).unwrap();
            let together = co2_for_energy(a + b, &intensity).unwrap();
            let apart = co2_for_energy(a, &intensity).unwrap()
                + co2_for_energy(b, &intensity).unwrap();
            prop_assert!((together - apart).abs() <= 1e-12 * together.max(1e-300));
        }
    }
}
