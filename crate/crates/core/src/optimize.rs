//! Weighted cost/energy/quality routing selection.
//!
//! Scores each candidate configuration with
//! `lambda_cost * C + lambda_energy * E + lambda_quality * (1 - Q)` and
//! returns the argmin. Cost and energy are min-max normalized over the
//! candidate set (mixing raw dollars and joules would be dimensionally
//! meaningless); quality is already a fraction and stays raw. Ties break
//! lexicographically by (model, ratio) so selection is reproducible across
//! runs and platforms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trial::AggregateRow;

/// Objective weights; normalized to sum to 1 on construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveWeights {
    lambda_cost: f64,
    lambda_energy: f64,
    lambda_quality: f64,
}

impl ObjectiveWeights {
    pub fn new(cost: f64, energy: f64, quality: f64) -> Result<Self> {
        for (name, value) in [("cost", cost), ("energy", energy), ("quality", quality)] {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} weight must be >= 0, got {value}"
                )));
            }
        }
        let sum = cost + energy + quality;
        if sum <= 0.0 {
            return Err(Error::InvalidParameter(
                "at least one weight must be > 0".into(),
            ));
        }
        Ok(Self {
            lambda_cost: cost / sum,
            lambda_energy: energy / sum,
            lambda_quality: quality / sum,
        })
    }

    pub fn lambda_cost(&self) -> f64 {
        self.lambda_cost
    }

    pub fn lambda_energy(&self) -> f64 {
        self.lambda_energy
    }

    pub fn lambda_quality(&self) -> f64 {
        self.lambda_quality
    }
}

/// One routing configuration with its mean per-query metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateConfig {
    pub model: String,
    pub compression_ratio: f64,
    pub cost_usd: f64,
    pub energy_j: f64,
    /// Fraction in [0, 1]; pass rate when derived from trial logs.
    pub quality: f64,
}

impl CandidateConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.cost_usd.is_finite() || self.cost_usd < 0.0 {
            return Err(Error::Validation(format!(
                "candidate {}/{}: cost_usd must be >= 0",
                self.model, self.compression_ratio
            )));
        }
        if !self.energy_j.is_finite() || self.energy_j < 0.0 {
            return Err(Error::Validation(format!(
                "candidate {}/{}: energy_j must be >= 0",
                self.model, self.compression_ratio
            )));
        }
        if !self.quality.is_finite() || !(0.0..=1.0).contains(&self.quality) {
            return Err(Error::Validation(format!(
                "candidate {}/{}: quality must be in [0, 1]",
                self.model, self.compression_ratio
            )));
        }
        if !self.compression_ratio.is_finite() {
            return Err(Error::Validation(format!(
                "candidate {}: compression_ratio must be finite",
                self.model
            )));
        }
        Ok(())
    }

    /// Builds a candidate from a model+ratio aggregate row (cost and energy
    /// are the group means, quality is the pass rate).
    pub fn from_aggregate(row: &AggregateRow) -> Result<Self> {
        let (Some(model), Some(ratio)) = (row.model.clone(), row.compression_ratio) else {
            return Err(Error::InvalidParameter(
                "candidates require rows grouped by model and ratio".into(),
            ));
        };
        let candidate = Self {
            model,
            compression_ratio: ratio,
            cost_usd: row.mean_cost_usd,
            energy_j: row.mean_energy_j,
            quality: row.pass_rate,
        };
        candidate.validate()?;
        Ok(candidate)
    }
}

/// The chosen configuration and its objective value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub candidate: CandidateConfig,
    pub objective: f64,
    /// Index of the chosen candidate in the input set.
    pub index: usize,
}

fn min_max_normalized(values: &[f64]) -> Vec<f64> {
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    if range <= 0.0 {
        // Degenerate axis: every candidate identical, normalized to 0.
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| (v - min) / range).collect()
}

/// Selects the candidate minimizing the weighted objective. Deterministic
/// tie-break by (model, ratio) lexicographic order.
pub fn optimize(candidates: &[CandidateConfig], weights: &ObjectiveWeights) -> Result<Selection> {
    if candidates.is_empty() {
        return Err(Error::InsufficientData("empty candidate set".into()));
    }
    for candidate in candidates {
        candidate.validate()?;
    }
    let costs = min_max_normalized(&candidates.iter().map(|c| c.cost_usd).collect::<Vec<_>>());
    let energies = min_max_normalized(&candidates.iter().map(|c| c.energy_j).collect::<Vec<_>>());

    let mut best: Option<(f64, usize)> = None;
    for (i, candidate) in candidates.iter().enumerate() {
        let objective = weights.lambda_cost * costs[i]
            + weights.lambda_energy * energies[i]
            + weights.lambda_quality * (1.0 - candidate.quality);
        let better = match best {
            None => true,
            Some((best_objective, best_index)) => {
                objective < best_objective
                    || (objective == best_objective
                        && tie_key(candidate) < tie_key(&candidates[best_index]))
            }
        };
        if better {
            best = Some((objective, i));
        }
    }
    let (objective, index) = best.expect("candidates is nonempty");
    Ok(Selection {
        candidate: candidates[index].clone(),
        objective,
        index,
    })
}

fn tie_key(candidate: &CandidateConfig) -> (&str, f64) {
    (candidate.model.as_str(), candidate.compression_ratio)
}

/// One evaluated cell of a weight sweep: the raw weight triple, the chosen
/// configuration, and its raw metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub lambda_cost: f64,
    pub lambda_energy: f64,
    pub lambda_quality: f64,
    pub chosen: CandidateConfig,
    pub objective: f64,
}

/// Evaluates [`optimize`] over a simplex grid of weight triples with
/// `grid_resolution` points per edge (so the corner weights are always
/// included). Cells are emitted in lexicographic grid order.
pub fn weight_sweep(
    candidates: &[CandidateConfig],
    grid_resolution: u32,
) -> Result<Vec<SweepCell>> {
    if grid_resolution < 2 {
        return Err(Error::InvalidParameter(format!(
            "grid_resolution must be >= 2, got {grid_resolution}"
        )));
    }
    let steps = grid_resolution - 1;
    let mut cells = Vec::new();
    for i in 0..=steps {
        for j in 0..=(steps - i) {
            let k = steps - i - j;
            let lambda_cost = f64::from(i) / f64::from(steps);
            let lambda_energy = f64::from(j) / f64::from(steps);
            let lambda_quality = f64::from(k) / f64::from(steps);
            let weights = ObjectiveWeights::new(lambda_cost, lambda_energy, lambda_quality)?;
            let selection = optimize(candidates, &weights)?;
            cells.push(SweepCell {
                lambda_cost,
                lambda_energy,
                lambda_quality,
                chosen: selection.candidate,
                objective: selection.objective,
            });
        }
    }
    Ok(cells)
}
