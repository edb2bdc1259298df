use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::actions::ActionKind;
use super::LayoutError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSchedule {
    pub max_steps: u64,
    pub initial_temperature: f64,
    pub cooling_factor: f64,
    /// Sampling probability per action kind; renormalized over the kinds legal at each step.
    pub action_probabilities: BTreeMap<ActionKind, f64>,
    pub rng_seed: u64,
}

impl Default for OptimizerSchedule {
    fn default() -> Self {
        let p = 1.0 / ActionKind::ALL.len() as f64;
        Self {
            max_steps: 20_000,
            initial_temperature: 5.0,
            cooling_factor: 0.9995,
            action_probabilities: ActionKind::ALL.iter().map(|k| (*k, p)).collect(),
            rng_seed: 0,
        }
    }
}

impl OptimizerSchedule {
    pub fn with_seed(seed: u64) -> Self {
        Self { rng_seed: seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), LayoutError> {
        if !(self.cooling_factor > 0.0 && self.cooling_factor < 1.0) {
            return Err(LayoutError::InvalidSchedule(format!("cooling_factor {} not in (0,1)", self.cooling_factor)));
        }
        if !(self.initial_temperature > 0.0 && self.initial_temperature.is_finite()) {
            return Err(LayoutError::InvalidSchedule("initial_temperature must be positive".into()));
        }
        if self.action_probabilities.values().any(|p| !(*p >= 0.0)) {
            return Err(LayoutError::InvalidSchedule("action probabilities must be non-negative".into()));
        }
        let sum: f64 = self.action_probabilities.values().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(LayoutError::InvalidSchedule(format!("action probabilities sum to {sum}, expected 1")));
        }
        Ok(())
    }

    pub fn temperature(&self, step: u64) -> f64 {
        self.initial_temperature * self.cooling_factor.powf(step as f64)
    }

    pub fn probability(&self, kind: ActionKind) -> f64 {
        self.action_probabilities.get(&kind).copied().unwrap_or(0.0)
    }
}
