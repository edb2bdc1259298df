//! Run configuration: a TOML file, with command-line flags layered on top.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use roomgen::layout::OptimizerSchedule;
use roomgen::planner::TrajectoryParams;
use roomgen::synth::OccupancyBand;
use roomgen::taskgen::TaskCounts;

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub program: Option<PathBuf>,
    pub catalog: Option<PathBuf>,
    pub baseline_hierarchical: bool,
    /// `rule_based` or `external:<endpoint>`.
    pub refiner: Option<String>,
    pub budget: Option<usize>,
    pub refiner_timeout_s: Option<f64>,
    pub schedule: ScheduleOverrides,
    pub trajectory: TrajectoryParams,
    pub taskgen: TaskgenConfig,
    pub sweep: SweepConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleOverrides {
    pub max_steps: Option<u64>,
    pub initial_temperature: Option<f64>,
    pub cooling_factor: Option<f64>,
}

impl ScheduleOverrides {
    pub fn apply(&self, seed: u64) -> OptimizerSchedule {
        let mut s = OptimizerSchedule::with_seed(seed);
        if let Some(v) = self.max_steps {
            s.max_steps = v;
        }
        if let Some(v) = self.initial_temperature {
            s.initial_temperature = v;
        }
        if let Some(v) = self.cooling_factor {
            s.cooling_factor = v;
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskgenConfig {
    pub measurement: usize,
    pub order: usize,
}

impl Default for TaskgenConfig {
    fn default() -> Self {
        let d = TaskCounts::default();
        Self { measurement: d.measurement, order: d.order }
    }
}

impl From<TaskgenConfig> for TaskCounts {
    fn from(c: TaskgenConfig) -> Self {
        TaskCounts { measurement: c.measurement, order: c.order }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub object_counts: Vec<usize>,
    pub occupancy_bands: Vec<OccupancyBand>,
    pub camera_heights: Vec<f64>,
    /// Programs per object count; each picks a different furniture mix.
    pub variants: usize,
    pub seeds_per_cell: usize,
    /// Worker threads; 0 lets the pool decide.
    pub workers: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            object_counts: vec![5, 20, 50],
            occupancy_bands: Vec::new(),
            camera_heights: vec![1.0],
            variants: 1,
            seeds_per_cell: 1,
            workers: 0,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_config_fills_defaults() {
        let c: RunConfig = toml::from_str("seed = 7\n[trajectory]\ncamera_height = 2.5\n[sweep]\nobject_counts = [5]\n").unwrap();
        assert_eq!(c.seed(), 7);
        assert_eq!(c.trajectory.camera_height, 2.5);
        assert_eq!(c.trajectory.max_sampling_times, TrajectoryParams::default().max_sampling_times);
        assert_eq!(c.sweep.object_counts, vec![5]);
        assert_eq!(c.sweep.camera_heights, vec![1.0]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("seeed = 1").is_err());
        assert!(toml::from_str::<RunConfig>("[schedule]\nsteps = 5").is_err());
        assert!(toml::from_str::<RunConfig>("[sweep]\noccupancy_bands = [\"huge\"]").is_err());
    }

    #[test]
    fn schedule_overrides_apply() {
        let o = ScheduleOverrides { max_steps: Some(10), ..Default::default() };
        let s = o.apply(3);
        assert_eq!((s.max_steps, s.rng_seed), (10, 3));
        assert_eq!(s.cooling_factor, OptimizerSchedule::default().cooling_factor);
    }
}
