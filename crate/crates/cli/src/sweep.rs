//! Cartesian sweeps over complexity axes, one output directory per cell.
//!
//! A cell's directory is named after a hash of everything that determines its
//! outputs, so a rerun skips cells that already exist and still validate.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use roomgen::diagnostics::{build_error_report, SceneMetrics};
use roomgen::layout::{optimize_layout_observed, LayoutMode};
use roomgen::planner::{all_targets, plan_trajectory, PlanError, Trajectory};
use roomgen::synth::{count_program, count_program_in_band, OccupancyBand};
use roomgen::taskgen;
use roomgen::{par, parse_program, AssetCatalog, SceneState};

use crate::commands::write_file;
use crate::config::RunConfig;
use crate::error::CliError;

pub const CELL_SCHEMA: &str = "sweep-cell/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub n_objects: Option<usize>,
    pub band: Option<OccupancyBand>,
    pub variant: usize,
    pub camera_height: f64,
    pub replicate: usize,
    pub seed: u64,
}

impl Cell {
    pub fn program(&self) -> String {
        match (self.n_objects, self.band) {
            (Some(n), Some(b)) => count_program_in_band(n, self.variant, b),
            (Some(n), None) => count_program(n, self.variant),
            (None, Some(b)) => b.program(),
            (None, None) => unreachable!("cells always fix at least one axis"),
        }
    }
}

fn digest(parts: &[&str]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0u8]);
    }
    h.finalize().into()
}

/// Seed shared by every camera height of the same layout, so height is the
/// only thing that differs between those cells.
fn derive_seed(base: u64, n: Option<usize>, band: Option<OccupancyBand>, variant: usize, replicate: usize) -> u64 {
    let key = format!("{base}/{n:?}/{band:?}/{variant}/{replicate}");
    let d = digest(&[&key]);
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

pub fn cells(cfg: &RunConfig) -> Result<Vec<Cell>, CliError> {
    let s = &cfg.sweep;
    if s.object_counts.is_empty() && s.occupancy_bands.is_empty() {
        return Err(CliError::Usage("sweep needs object_counts or occupancy_bands".into()));
    }
    if s.camera_heights.is_empty() || s.camera_heights.iter().any(|h| !(*h > 0.0)) {
        return Err(CliError::Usage("sweep camera_heights must be non-empty and positive".into()));
    }
    let counts: Vec<Option<usize>> =
        if s.object_counts.is_empty() { vec![None] } else { s.object_counts.iter().map(|n| Some(*n)).collect() };
    let bands: Vec<Option<OccupancyBand>> =
        if s.occupancy_bands.is_empty() { vec![None] } else { s.occupancy_bands.iter().map(|b| Some(*b)).collect() };
    let mut out = Vec::new();
    for &n in &counts {
        if n == Some(0) {
            return Err(CliError::Usage("object counts must be positive".into()));
        }
        for &band in &bands {
            let variants = if n.is_some() { s.variants.max(1) } else { 1 };
            for variant in 0..variants {
                for replicate in 0..s.seeds_per_cell.max(1) {
                    let seed = derive_seed(cfg.seed(), n, band, variant, replicate);
                    for &camera_height in &s.camera_heights {
                        out.push(Cell { n_objects: n, band, variant, camera_height, replicate, seed });
                    }
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub schema: String,
    pub key: String,
    pub cell: Cell,
    pub status: String,
    pub metrics: Option<SceneMetrics>,
    pub legs: usize,
    pub unreachable: usize,
    pub tasks: usize,
    pub runtime_s: f64,
    pub files: Vec<String>,
}

pub const SUMMARY_HEADER: &str =
    "cell,n_objects,band,variant,camera_height,replicate,seed,status,fidelity,occupancy_ratio,ob,cn,object_count,legs,unreachable,tasks,runtime_s";

impl CellRecord {
    fn summary_row(&self) -> String {
        let c = &self.cell;
        let opt = |v: Option<String>| v.unwrap_or_else(|| "-".into());
        let m = match &self.metrics {
            Some(m) => m.csv_row(),
            None => "-,-,-,-,-".into(),
        };
        format!(
            "{},{},{},{},{},{},{},{},{m},{},{},{},{:.3}",
            &self.key[..16],
            opt(c.n_objects.map(|n| n.to_string())),
            opt(c.band.map(|b| b.name().to_string())),
            c.variant,
            c.camera_height,
            c.replicate,
            c.seed,
            self.status,
            self.legs,
            self.unreachable,
            self.tasks,
            self.runtime_s
        )
    }
}

/// Hash of everything that feeds a cell's outputs.
pub fn cell_key(cfg: &RunConfig, cell: &Cell, catalog: &AssetCatalog) -> String {
    let parts = [
        serde_json::to_string(cell).expect("cell serializes"),
        serde_json::to_string(&cfg.schedule).expect("schedule serializes"),
        serde_json::to_string(&cfg.trajectory).expect("params serialize"),
        serde_json::to_string(&cfg.taskgen).expect("counts serialize"),
        cfg.baseline_hierarchical.to_string(),
        serde_json::to_string(catalog).expect("catalog serializes"),
    ];
    let refs: Vec<&str> = parts.iter().map(String::as_str).collect();
    hex::encode(digest(&refs))
}

fn cell_dir(root: &Path, key: &str) -> PathBuf {
    root.join("cells").join(&key[..16])
}

/// A finished cell whose record matches `key` and whose listed outputs parse.
fn load_valid(dir: &Path, key: &str) -> Option<CellRecord> {
    let rec: CellRecord = serde_json::from_str(&std::fs::read_to_string(dir.join("cell.json")).ok()?).ok()?;
    if rec.key != key || rec.schema != CELL_SCHEMA {
        return None;
    }
    for f in &rec.files {
        let text = std::fs::read_to_string(dir.join(f)).ok()?;
        let ok = match f.as_str() {
            "scene.json" => SceneState::from_json(&text).is_ok(),
            "trajectory.json" => Trajectory::from_json(&text).is_ok(),
            "tasks.jsonl" => taskgen::from_jsonl(&text).is_ok(),
            "report.json" => roomgen::diagnostics::ErrorReport::from_json(&text).is_ok(),
            _ => true,
        };
        if !ok {
            return None;
        }
    }
    Some(rec)
}

fn run_cell(cfg: &RunConfig, catalog: &AssetCatalog, cell: &Cell, key: &str, dir: &Path) -> Result<CellRecord, CliError> {
    let start = Instant::now();
    let text = cell.program();
    let program = parse_program(&text, catalog).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut files = vec!["program.scn-dsl".to_string()];
    write_file(dir, "program.scn-dsl", text.as_bytes())?;
    let mode = if cfg.baseline_hierarchical { LayoutMode::Hierarchical } else { LayoutMode::Cluster };
    let result = optimize_layout_observed(&program, catalog, &cfg.schedule.apply(cell.seed), mode, |_| {})?;
    let report = build_error_report(&program, &result.scene);
    write_file(dir, "scene.json", result.scene.to_json().as_bytes())?;
    write_file(dir, "report.json", report.to_json().as_bytes())?;
    files.extend(["scene.json".to_string(), "report.json".to_string()]);
    let mut rec = CellRecord {
        schema: CELL_SCHEMA.into(),
        key: key.to_string(),
        cell: cell.clone(),
        status: String::new(),
        metrics: Some(report.metrics.clone()),
        legs: 0,
        unreachable: 0,
        tasks: 0,
        runtime_s: 0.0,
        files: Vec::new(),
    };
    let params = roomgen::planner::TrajectoryParams { camera_height: cell.camera_height, ..cfg.trajectory.clone() };
    rec.status = match plan_trajectory(&result.scene, &all_targets(&result.scene), &params, cell.seed) {
        Ok(traj) => {
            let tasks = taskgen::generate_tasks_seeded(&result.scene, &traj, cfg.taskgen.into(), cell.seed);
            write_file(dir, "trajectory.json", traj.to_json().as_bytes())?;
            write_file(dir, "tasks.jsonl", taskgen::to_jsonl(&tasks).as_bytes())?;
            files.extend(["trajectory.json".to_string(), "tasks.jsonl".to_string()]);
            rec.legs = traj.legs.len();
            rec.unreachable = traj.unreachable.len();
            rec.tasks = tasks.len();
            if report.metrics.converged() { "ok" } else { "unconverged" }.to_string()
        }
        Err(PlanError::NoTargets) => if report.metrics.converged() { "no_targets" } else { "unconverged" }.to_string(),
        Err(e) => format!("plan_failed: {e}"),
    };
    rec.files = files;
    rec.runtime_s = start.elapsed().as_secs_f64();
    Ok(rec)
}

pub struct SweepOutcome {
    pub summary: String,
    pub regenerated: usize,
    pub all_ok: bool,
}

pub fn sweep(cfg: &RunConfig, catalog: &AssetCatalog) -> Result<SweepOutcome, CliError> {
    let cells = cells(cfg)?;
    let root = cfg.out_dir();
    let keys: Vec<String> = cells.iter().map(|c| cell_key(cfg, c, catalog)).collect();
    let jobs: Vec<(usize, bool)> = (0..cells.len()).map(|i| (i, load_valid(&cell_dir(&root, &keys[i]), &keys[i]).is_some())).collect();
    let records: Vec<CellRecord> = par::with_threads(cfg.sweep.workers, || {
        par::map_slice(&jobs, |&(i, done)| {
            let dir = cell_dir(&root, &keys[i]);
            if done {
                if let Some(r) = load_valid(&dir, &keys[i]) {
                    return r;
                }
            }
            let rec = run_cell(cfg, catalog, &cells[i], &keys[i], &dir).unwrap_or_else(|e| CellRecord {
                schema: CELL_SCHEMA.into(),
                key: keys[i].clone(),
                cell: cells[i].clone(),
                status: format!("error: {e}"),
                metrics: None,
                legs: 0,
                unreachable: 0,
                tasks: 0,
                runtime_s: 0.0,
                files: Vec::new(),
            });
            // Written last: its presence marks the cell complete.
            let _ = write_file(&dir, "cell.json", serde_json::to_string_pretty(&rec).expect("record serializes").as_bytes());
            rec
        })
    });
    let mut summary = format!("{SUMMARY_HEADER}\n");
    for r in &records {
        let _ = writeln!(summary, "{}", r.summary_row());
    }
    write_file(&root, "summary.csv", summary.as_bytes())?;
    Ok(SweepOutcome {
        regenerated: jobs.iter().filter(|j| !j.1).count(),
        all_ok: records.iter().all(|r| r.status == "ok"),
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SweepConfig;

    fn cfg(sweep: SweepConfig) -> RunConfig {
        RunConfig { sweep, ..Default::default() }
    }

    #[test]
    fn product_of_axes() {
        let c = cfg(SweepConfig {
            object_counts: vec![5, 20],
            occupancy_bands: vec![OccupancyBand::Sparse, OccupancyBand::Dense],
            camera_heights: vec![1.0, 2.5],
            ..Default::default()
        });
        let cs = cells(&c).unwrap();
        assert_eq!(cs.len(), 8);
        // Heights share a seed; other axes do not.
        assert_eq!(cs[0].seed, cs[1].seed);
        assert_ne!(cs[0].seed, cs[2].seed);
    }

    #[test]
    fn empty_axes_are_rejected() {
        let c = cfg(SweepConfig { object_counts: vec![], ..Default::default() });
        assert_eq!(cells(&c).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn key_tracks_config() {
        let cat = AssetCatalog::builtin();
        let a = cfg(SweepConfig::default());
        let mut b = a.clone();
        b.schedule.max_steps = Some(5);
        let cell = &cells(&a).unwrap()[0];
        assert_ne!(cell_key(&a, cell, &cat), cell_key(&b, cell, &cat));
        assert_eq!(cell_key(&a, cell, &cat), cell_key(&a.clone(), cell, &cat));
    }
}
