use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;

use roomgen::diagnostics::{build_error_report, compute_metrics, SceneMetrics};
use roomgen::geometry::grid::DEFAULT_BEV_RESOLUTION;
use roomgen::geometry::image::{legend, write_bev_ppm};
use roomgen::geometry::rasterize_bev;
use roomgen::layout::{optimize_layout_observed, LayoutMode};
use roomgen::planner::{all_targets, plan_trajectory, Trajectory};
use roomgen::refine::{run_refinement, Endpoint, ExternalRefiner, Refiner, RuleBasedRefiner};
use roomgen::scene::InstanceId;
use roomgen::taskgen::{self, Answer, QATask, TaskFamily};
use roomgen::{parse_program, AssetCatalog, ConstraintProgram, SceneState};

use crate::config::RunConfig;
use crate::error::CliError;

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

/// Fails before any work if an input path is missing.
pub fn require_files<'a>(paths: impl IntoIterator<Item = &'a Path>) -> Result<(), CliError> {
    for p in paths {
        if !p.is_file() {
            return Err(CliError::io(p, std::io::Error::new(std::io::ErrorKind::NotFound, "no such file")));
        }
    }
    Ok(())
}

pub fn load_catalog(cfg: &RunConfig) -> Result<AssetCatalog, CliError> {
    let Some(path) = &cfg.catalog else { return Ok(AssetCatalog::builtin()) };
    let cat = AssetCatalog::from_json(&read_text(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    cat.validate().map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(cat)
}

pub fn load_program(path: &Path, catalog: &AssetCatalog) -> Result<ConstraintProgram, CliError> {
    parse_program(&read_text(path)?, catalog).map_err(|e| CliError::Usage(format!("{}:{e}", path.display())))
}

pub fn load_scene(path: &Path) -> Result<SceneState, CliError> {
    SceneState::from_json(&read_text(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn load_trajectory(path: &Path) -> Result<Trajectory, CliError> {
    Trajectory::from_json(&read_text(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn mode(cfg: &RunConfig) -> LayoutMode {
    if cfg.baseline_hierarchical {
        LayoutMode::Hierarchical
    } else {
        LayoutMode::Cluster
    }
}

fn metrics_csv(m: &SceneMetrics) -> String {
    format!("{}\n{}\n", SceneMetrics::CSV_HEADER, m.csv_row())
}

fn write_bev(dir: &Path, scene: &SceneState, resolution: f64) -> Result<(), CliError> {
    let grid = rasterize_bev(scene, resolution).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut ppm = Vec::new();
    write_bev_ppm(&mut ppm, &grid).expect("writing to a Vec cannot fail");
    write_file(dir, "bev.ppm", &ppm)?;
    let legend = serde_json::to_string_pretty(&legend(scene)).expect("legend serializes");
    write_file(dir, "bev_legend.json", legend.as_bytes())?;
    Ok(())
}

fn program_path(cfg: &RunConfig) -> Result<&Path, CliError> {
    cfg.program.as_deref().ok_or_else(|| CliError::Usage("no program given (positional argument or `program` in config)".into()))
}

pub fn generate(cfg: &RunConfig) -> Result<String, CliError> {
    let catalog = load_catalog(cfg)?;
    let program = load_program(program_path(cfg)?, &catalog)?;
    let schedule = cfg.schedule.apply(cfg.seed());
    let result = optimize_layout_observed(&program, &catalog, &schedule, mode(cfg), |_| {})?;
    let report = build_error_report(&program, &result.scene);
    let out = cfg.out_dir();
    write_file(&out, "scene.json", result.scene.to_json().as_bytes())?;
    write_file(&out, "report.json", report.to_json().as_bytes())?;
    write_bev(&out, &result.scene, DEFAULT_BEV_RESOLUTION)?;
    let csv = metrics_csv(&report.metrics);
    if report.metrics.converged() {
        Ok(csv)
    } else {
        print!("{csv}");
        Err(CliError::Unsatisfied(report.textual_summary.join("\n")))
    }
}

pub fn make_refiner(cfg: &RunConfig, catalog: &AssetCatalog) -> Result<Box<dyn Refiner>, CliError> {
    let spec = cfg.refiner.as_deref().unwrap_or("rule_based");
    if spec == "rule_based" {
        return Ok(Box::new(RuleBasedRefiner::new(catalog.clone())));
    }
    let endpoint = spec
        .strip_prefix("external:")
        .and_then(Endpoint::parse)
        .ok_or_else(|| CliError::Usage(format!("refiner must be `rule_based` or `external:<endpoint>`, got {spec:?}")))?;
    let mut r = ExternalRefiner::new(endpoint, catalog.clone());
    if let Some(t) = cfg.refiner_timeout_s {
        r = r.with_timeout(Duration::from_secs_f64(t));
    }
    Ok(Box::new(r))
}

pub fn refine(cfg: &RunConfig) -> Result<String, CliError> {
    let catalog = load_catalog(cfg)?;
    let program = load_program(program_path(cfg)?, &catalog)?;
    let mut refiner = make_refiner(cfg, &catalog)?;
    let schedule = cfg.schedule.apply(cfg.seed());
    let budget = cfg.budget.unwrap_or(roomgen::refine::DEFAULT_BUDGET);
    let r = run_refinement(&program, &catalog, refiner.as_mut(), budget, &schedule, mode(cfg))?;
    let out = cfg.out_dir();
    write_file(&out, "history.json", r.history.to_json().as_bytes())?;
    write_file(&out, "scene.json", r.scene.to_json().as_bytes())?;
    write_file(&out, "report.json", r.report.to_json().as_bytes())?;
    write_file(&out, "program.scn-dsl", r.program.to_dsl().as_bytes())?;
    for it in &r.history.iterations {
        if let Some(f) = it.refiner.as_ref().and_then(|x| x.fault.as_ref()) {
            eprintln!("iteration {}: refiner fault: {f}", it.index);
        }
    }
    let csv = metrics_csv(&r.report.metrics);
    if r.history.converged {
        Ok(csv)
    } else {
        print!("{csv}");
        Err(CliError::Unsatisfied(format!("not converged after {} iterations", r.history.iterations_used)))
    }
}

pub fn plan(cfg: &RunConfig, scene_path: &Path, height: Option<f64>, targets: Option<&str>) -> Result<String, CliError> {
    let scene = load_scene(scene_path)?;
    let mut params = cfg.trajectory.clone();
    if let Some(h) = height {
        params.camera_height = h;
    }
    let ids: Vec<InstanceId> = match targets {
        Some(list) => list.split(',').map(str::trim).filter(|s| !s.is_empty()).map(InstanceId::from).collect(),
        None => all_targets(&scene),
    };
    let traj = plan_trajectory(&scene, &ids, &params, cfg.seed())?;
    write_file(&cfg.out_dir(), "trajectory.json", traj.to_json().as_bytes())?;
    Ok(format!("legs,unreachable,frames\n{},{},{}\n", traj.legs.len(), traj.unreachable.len(), traj.all_frames().count()))
}

pub fn bev(cfg: &RunConfig, scene_path: &Path, resolution: f64) -> Result<String, CliError> {
    let scene = load_scene(scene_path)?;
    write_bev(&cfg.out_dir(), &scene, resolution)?;
    Ok(String::new())
}

pub fn metrics(cfg: &RunConfig, scene_path: &Path) -> Result<String, CliError> {
    let scene = load_scene(scene_path)?;
    let program = match &cfg.program {
        Some(p) => load_program(p, &load_catalog(cfg)?)?,
        None => ConstraintProgram::default(),
    };
    Ok(metrics_csv(&compute_metrics(&program, &scene)))
}

pub fn taskgen(cfg: &RunConfig, scene_path: &Path, traj_path: &Path) -> Result<String, CliError> {
    let scene = load_scene(scene_path)?;
    let traj = load_trajectory(traj_path)?;
    let tasks = taskgen::generate_tasks_seeded(&scene, &traj, cfg.taskgen.into(), cfg.seed());
    write_file(&cfg.out_dir(), "tasks.jsonl", taskgen::to_jsonl(&tasks).as_bytes())?;
    let mut s = String::from("family,n\n");
    for f in TaskFamily::ALL {
        let _ = writeln!(s, "{},{}", f.name(), tasks.iter().filter(|t| t.family == f).count());
    }
    Ok(s)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prediction {
    pub id: String,
    pub answer: Answer,
}

/// Per-family mean score over the predicted tasks. Families with no
/// predictions report `-`.
pub fn score_csv(tasks: &[QATask], predictions: &[Prediction]) -> Result<String, CliError> {
    let by_id: BTreeMap<&str, &QATask> = tasks.iter().map(|t| (t.id.as_str(), t)).collect();
    let mut seen = BTreeSet::new();
    let mut sums: BTreeMap<TaskFamily, (usize, f64)> = BTreeMap::new();
    for p in predictions {
        let task = by_id.get(p.id.as_str()).ok_or_else(|| CliError::Mismatch(format!("prediction for unknown task {:?}", p.id)))?;
        if !seen.insert(p.id.as_str()) {
            return Err(CliError::Mismatch(format!("duplicate prediction for {:?}", p.id)));
        }
        let s = taskgen::score_answer(task, &p.answer).map_err(|e| CliError::Mismatch(e.to_string()))?;
        let e = sums.entry(task.family).or_default();
        e.0 += 1;
        e.1 += s;
    }
    let mut out = String::from("family,n,mean_score\n");
    for f in TaskFamily::ALL {
        match sums.get(&f) {
            Some(&(n, total)) => {
                let _ = writeln!(out, "{},{n},{}", f.name(), total / n as f64);
            }
            None => {
                let _ = writeln!(out, "{},0,-", f.name());
            }
        }
    }
    Ok(out)
}

pub fn score(tasks_path: &Path, preds_path: &Path) -> Result<String, CliError> {
    let tasks = taskgen::from_jsonl(&read_text(tasks_path)?).map_err(|e| CliError::Usage(format!("{}: {e}", tasks_path.display())))?;
    let preds = read_text(preds_path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| CliError::Usage(format!("{}:{}: {e}", preds_path.display(), i + 1))))
        .collect::<Result<Vec<Prediction>, _>>()?;
    score_csv(&tasks, &preds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use roomgen::taskgen::{AnswerType, Provenance, TASK_SCHEMA};

    fn task(id: &str, family: TaskFamily, truth: Answer) -> QATask {
        let answer_type = match family {
            TaskFamily::Measurement => AnswerType::NumericMeters,
            TaskFamily::PerspectiveCounting => AnswerType::NumericCount,
            TaskFamily::SpatiotemporalOrder => AnswerType::OrderedChoice,
        };
        QATask {
            schema: TASK_SCHEMA.into(),
            id: id.into(),
            family,
            question: String::new(),
            answer_type,
            ground_truth: truth,
            choices: None,
            provenance: Provenance::default(),
        }
    }

    #[test]
    fn empty_predictions_give_dashes() {
        let t = vec![task("a", TaskFamily::Measurement, Answer::Number(2.0))];
        let csv = score_csv(&t, &[]).unwrap();
        assert_eq!(csv, "family,n,mean_score\nmeasurement,0,-\nperspective_counting,0,-\nspatiotemporal_order,0,-\n");
    }

    #[test]
    fn relative_accuracy_means() {
        let t = vec![
            task("a", TaskFamily::PerspectiveCounting, Answer::Number(10.0)),
            task("b", TaskFamily::PerspectiveCounting, Answer::Number(10.0)),
            task("c", TaskFamily::SpatiotemporalOrder, Answer::Choice("B".into())),
        ];
        let p = vec![
            Prediction { id: "a".into(), answer: Answer::Number(12.0) },
            Prediction { id: "b".into(), answer: Answer::Number(10.0) },
            Prediction { id: "c".into(), answer: Answer::Choice("A".into()) },
        ];
        let csv = score_csv(&t, &p).unwrap();
        assert!(csv.contains("perspective_counting,2,0.9\n"), "{csv}");
        assert!(csv.contains("spatiotemporal_order,1,0\n"), "{csv}");
    }

    #[test]
    fn unknown_and_duplicate_ids_are_mismatches() {
        let t = vec![task("a", TaskFamily::Measurement, Answer::Number(1.0))];
        let unknown = [Prediction { id: "z".into(), answer: Answer::Number(1.0) }];
        assert_eq!(score_csv(&t, &unknown).unwrap_err().exit_code(), 5);
        let dup = [
            Prediction { id: "a".into(), answer: Answer::Number(1.0) },
            Prediction { id: "a".into(), answer: Answer::Number(1.0) },
        ];
        assert_eq!(score_csv(&t, &dup).unwrap_err().exit_code(), 5);
    }
}
