//! End-to-end acceptance run: one PASS/FAIL line per criterion, non-zero exit
//! if any fails. Independent oracles live in the core crate's test helpers.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use roomgen::diagnostics::{collision_pairs_brute, compute_metrics, occupancy_ratio, out_of_boundary};
use roomgen::geometry::{accessible_grid, fov_containment, occlusion_rate, BoolGrid, CameraIntrinsics, CameraPose, GridSpec, RoomSpec, Vec2, Vec3};
use roomgen::layout::{optimize_layout_observed, LayoutMode};
use roomgen::planner::{all_targets, evaluate_viewpoint, plan_trajectory, shortest_path_tree, PathCost, Trajectory, TrajectoryParams, BEV_HEIGHT, EGO_HEIGHT};
use roomgen::refine::{run_refinement, RuleBasedRefiner, DEFAULT_BUDGET};
use roomgen::scene::{InstanceId, ObjectInstance, Pose};
use roomgen::synth::{artifact_suite, count_program, count_program_in_band, dense_suite, dining_program, fidelity_suite, infeasible_suite, OccupancyBand};
use roomgen::taskgen::{generate_tasks_seeded, TaskCounts, TaskFamily};
use roomgen::{par, parse_program, AssetCatalog, ConstraintProgram, OptimizerSchedule, SceneState};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn program(text: &str) -> ConstraintProgram {
    parse_program(text, &AssetCatalog::builtin()).expect("suite program parses")
}

fn layout(p: &ConstraintProgram, seed: u64, mode: LayoutMode) -> SceneState {
    optimize_layout_observed(p, &AssetCatalog::builtin(), &OptimizerSchedule::with_seed(seed), mode, |_| {}).unwrap().scene
}

fn c1_zero_artifacts() -> Verdict {
    let suite = artifact_suite();
    let runs: Vec<(usize, u64)> = (0..suite.len()).flat_map(|i| (0..5).map(move |s| (i, s))).collect();
    let out = par::map_slice(&runs, |&(i, seed)| {
        let p = program(&suite[i]);
        let t = Instant::now();
        let s = layout(&p, seed, LayoutMode::Cluster);
        let secs = t.elapsed().as_secs_f64();
        let (ob, cn) = common::artifacts(&s);
        (ob + out_of_boundary(&s).len(), cn + collision_pairs_brute(&s).len(), s.len(), secs)
    });
    let violations: usize = out.iter().map(|o| o.0 + o.1).sum();
    let big: Vec<f64> = out.iter().filter(|o| o.2 >= 50).map(|o| o.3).collect();
    let slowest = big.iter().copied().fold(0.0, f64::max);
    verdict(
        violations == 0 && !big.is_empty() && slowest < 60.0,
        format!("{} runs, {violations} artifacts, slowest of {} 50-object scenes {slowest:.2}s (limit 60s)", out.len(), big.len()),
    )
}

fn c2_fidelity() -> Verdict {
    let suite = fidelity_suite();
    let cat = AssetCatalog::builtin();
    let fids = par::map_slice(&suite, |text| {
        let mut r = RuleBasedRefiner::new(cat.clone());
        let res = run_refinement(&program(text), &cat, &mut r, DEFAULT_BUDGET, &OptimizerSchedule::with_seed(0), LayoutMode::Cluster).unwrap();
        res.history.iterations.last().unwrap().metrics.fidelity
    });
    let mean = fids.iter().sum::<f64>() / fids.len() as f64;
    let has_dining = suite.iter().any(|s| *s == dining_program());
    verdict(mean >= 0.90 && has_dining && suite.len() == 20, format!("mean fidelity {mean:.4} over {} programs (need >= 0.90)", suite.len()))
}

fn c3_cluster_vs_hierarchical() -> Verdict {
    let suite = dense_suite();
    let seeds = 20u64;
    let runs: Vec<(usize, u64)> = (0..suite.len()).flat_map(|i| (0..seeds).map(move |s| (i, s))).collect();
    let feasible = |mode| {
        par::map_slice(&runs, |&(i, seed)| {
            let p = program(&suite[i]);
            compute_metrics(&p, &layout(&p, seed, mode)).converged() as usize
        })
        .iter()
        .sum::<usize>() as f64
            / runs.len() as f64
    };
    let (c, h) = (feasible(LayoutMode::Cluster), feasible(LayoutMode::Hierarchical));
    verdict(
        c - h >= 0.25,
        format!("cluster {c:.3} vs hierarchical {h:.3}, gap {:.3} (need >= 0.25) over {} paired runs", c - h, runs.len()),
    )
}

fn c4_refinement() -> Verdict {
    let suite = infeasible_suite();
    let cat = AssetCatalog::builtin();
    let out = par::map_slice(&suite, |text| {
        let mut r = RuleBasedRefiner::new(cat.clone());
        let h = run_refinement(&program(text), &cat, &mut r, 5, &OptimizerSchedule::with_seed(0), LayoutMode::Cluster).unwrap().history;
        (!h.iterations[0].metrics.converged(), h.converged && h.iterations_used <= 5, h.iterations_used)
    });
    let all_infeasible = out.iter().all(|o| o.0);
    let ok = out.iter().filter(|o| o.1).count();
    let used: Vec<String> = out.iter().map(|o| if o.1 { o.2.to_string() } else { "x".into() }).collect();
    verdict(
        all_infeasible && ok >= 8 && suite[0].contains("monitor"),
        format!("{ok}/10 converged within 5 (iterations: {}), all initially infeasible: {all_infeasible}", used.join(" ")),
    )
}

fn hand_block(k: usize, x: f64, y: f64, yaw: f64, dx: f64, dy: f64) -> ObjectInstance {
    ObjectInstance {
        id: InstanceId(format!("block_{k}")),
        category: "block".into(),
        pose: Pose { x, y, z: 0.0, yaw },
        dims: Vec3::new(dx, dy, 0.8),
        relation: None,
    }
}

fn occupancy_hand_scenes() -> Vec<SceneState> {
    (0..10)
        .map(|k| {
            let (w, d) = (4.0 + (k % 3) as f64, 3.0 + (k % 2) as f64 * 1.5);
            let mut room = RoomSpec::rectangle(w, d, 2.8);
            if k == 9 {
                // L-shaped floor
                room.floor_polygon = [(0.0, 0.0), (6.0, 0.0), (6.0, 2.5), (3.0, 2.5), (3.0, 5.0), (0.0, 5.0)].iter().map(|&(x, y)| Vec2::new(x, y)).collect();
                room.door_position = Vec2::new(1.5, 0.0);
            }
            let mut s = SceneState::new(room);
            let mut n = 0;
            let mut y = 0.9;
            while y + 0.8 < d {
                let mut x = 0.9;
                while x + 0.8 < w {
                    let p = Vec2::new(x, y);
                    if s.room.contains_point(p) && s.room.wall_distance(p) > 0.8 {
                        let f = ((n * 7 + k * 3) % 5) as f64;
                        s.instances.push(hand_block(n, x, y, 0.37 * (n + k) as f64, 0.5 + 0.15 * f, 0.4 + 0.1 * f));
                        n += 1;
                    }
                    x += 1.6;
                }
                y += 1.6;
            }
            s
        })
        .collect()
}

fn c5_occupancy() -> Verdict {
    let mut cells: Vec<(OccupancyBand, String)> = OccupancyBand::ALL.iter().map(|b| (*b, b.program())).collect();
    for n in [5, 20] {
        for b in OccupancyBand::ALL {
            cells.push((b, count_program_in_band(n, 0, b)));
        }
    }
    let banded = par::map_slice(&cells, |(band, text)| {
        let p = program(text);
        (0..3u64).filter(|&seed| band.contains(occupancy_ratio(&layout(&p, seed, LayoutMode::Cluster)))).count()
    });
    let in_band: usize = banded.iter().sum();
    let scenes = occupancy_hand_scenes();
    let worst = scenes
        .iter()
        .map(|s| {
            assert_eq!(common::artifacts(s), (0, 0), "hand scene overlaps");
            (occupancy_ratio(s) - common::analytic_occupancy(s)).abs()
        })
        .fold(0.0, f64::max);
    verdict(
        in_band == cells.len() * 3 && worst <= 0.01 && scenes.len() == 10,
        format!("{in_band}/{} band cells in band; worst grid-vs-analytic gap {worst:.4} on {} hand scenes (limit 0.01)", cells.len() * 3, scenes.len()),
    )
}

fn leg_violations(scene: &SceneState, t: &Trajectory) -> usize {
    let p = &t.params;
    let grid = accessible_grid(scene, p.grid_resolution, p.clearance).unwrap();
    t.legs
        .iter()
        .map(|leg| {
            let pose = &leg.evaluation.pose;
            let target = scene.get(&leg.target).unwrap();
            let occ = occlusion_rate(scene, pose, &p.intrinsics, &leg.target).unwrap();
            let checks = [
                grid.at_point(Vec2::new(pose.x, pose.y)),
                fov_containment(pose, &p.intrinsics, &target.bbox()) > p.fov_threshold,
                occ >= p.occlusion_required_range.0 && occ <= p.occlusion_required_range.1,
                leg.path.iter().all(|c| grid.at_point(*c)),
            ];
            checks.iter().filter(|ok| !**ok).count()
        })
        .sum()
}

fn c6_trajectories() -> Verdict {
    let suite = artifact_suite();
    let runs: Vec<(usize, u64)> = (0..suite.len()).flat_map(|i| (0..2).map(move |s| (i, s))).collect();
    let out = par::map_slice(&runs, |&(i, seed)| {
        let s = layout(&program(&suite[i]), seed, LayoutMode::Cluster);
        let t = plan_trajectory(&s, &all_targets(&s), &TrajectoryParams::default(), seed).unwrap();
        (leg_violations(&s, &t), t.legs.len())
    });
    let violations: usize = out.iter().map(|o| o.0).sum();
    let legs: usize = out.iter().map(|o| o.1).sum();

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut mismatched = 0;
    for _ in 0..50 {
        let density = rng.gen_range(0.1..0.4);
        let cells: Vec<bool> = (0..400).map(|_| rng.gen::<f64>() >= density).collect();
        let g = BoolGrid { spec: GridSpec { origin: Vec2::ZERO, resolution: 1.0, cols: 20, rows: 20 }, cells };
        let open: Vec<usize> = (0..400).filter(|&i| g.cells[i]).collect();
        let start = open[rng.gen_range(0..open.len())];
        let start = (start % 20, start / 20);
        let tree = shortest_path_tree(&g, start).unwrap();
        let oracle = common::ucs(&g, start);
        for i in 0..400 {
            let c = (i % 20, i / 20);
            if tree.cost_to(c) != oracle.get(&c).map(|&(s, d)| PathCost { straight: s, diagonal: d }) {
                mismatched += 1;
            }
        }
    }
    verdict(
        violations == 0 && mismatched == 0,
        format!("{} scenes, {legs} legs, {violations} check violations; {mismatched} cost mismatches on 50 random 20x20 grids", runs.len()),
    )
}

fn occluder_scenes() -> Vec<(SceneState, CameraPose, InstanceId, Option<f64>)> {
    let cam = CameraPose::new(1.0, 4.0, 1.0, 0.0, 0.0);
    let mk = |objs: Vec<ObjectInstance>| {
        let mut s = SceneState::new(RoomSpec::rectangle(10.0, 8.0, 3.0));
        s.instances = objs;
        s
    };
    let block = |id: &str, x: f64, y: f64, yaw: f64, d: (f64, f64, f64)| ObjectInstance {
        id: InstanceId(id.into()),
        category: "block".into(),
        pose: Pose { x, y, z: 0.0, yaw },
        dims: Vec3::new(d.0, d.1, d.2),
        relation: None,
    };
    let t = InstanceId("target".into());
    let panel = || block("target", 6.0, 4.0, 0.0, (0.1, 2.0, 2.0));
    let mut out = vec![
        (mk(vec![panel(), block("o", 3.0, 5.0, 0.0, (0.1, 2.0, 3.0))]), cam, t.clone(), Some(0.5)),
        (mk(vec![panel()]), cam, t.clone(), Some(0.0)),
        (mk(vec![panel(), block("o", 3.0, 4.0, 0.0, (0.2, 4.0, 3.0))]), cam, t.clone(), Some(1.0)),
        (mk(vec![panel(), block("o", 3.5, 3.6, 0.0, (0.3, 0.4, 2.5))]), cam, t.clone(), None),
        (mk(vec![panel(), block("o", 4.0, 4.5, 0.7, (0.5, 0.5, 0.9))]), cam, t.clone(), None),
        (mk(vec![block("target", 5.0, 3.0, 0.4, (0.8, 0.6, 0.9)), block("o", 3.0, 3.4, 0.0, (0.4, 0.4, 1.5))]), cam, t.clone(), None),
        (
            mk(vec![block("target", 6.0, 5.0, 1.1, (1.0, 1.0, 1.2)), block("a", 3.5, 4.6, 0.2, (0.3, 0.3, 2.0)), block("b", 4.5, 5.4, 0.0, (0.3, 0.5, 0.7))]),
            cam,
            t.clone(),
            None,
        ),
        (mk(vec![panel(), block("o", 5.0, 4.0, 0.0, (0.2, 3.0, 1.0))]), cam, t.clone(), None),
        (
            mk(vec![block("target", 4.0, 6.0, 0.0, (0.8, 0.8, 0.8)), block("o", 3.0, 5.0, 0.5, (0.4, 0.6, 1.8))]),
            CameraPose::looking_at(Vec3::new(1.5, 2.5, 2.5), Vec3::new(4.0, 6.0, 0.4)),
            t.clone(),
            None,
        ),
    ];
    // a real chair, which renders as seat and back parts
    let cat = AssetCatalog::builtin();
    let mut s = mk(vec![
        ObjectInstance {
            id: t.clone(),
            category: "chair".into(),
            pose: Pose { x: 4.0, y: 4.0, z: 0.0, yaw: 2.5 },
            dims: Vec3::new(0.5, 0.5, 0.9),
            relation: None,
        },
        block("o", 2.8, 3.8, 0.3, (0.3, 0.3, 0.6)),
    ]);
    s.assets.insert("chair".into(), cat.get("chair").unwrap().clone());
    out.push((s, CameraPose::looking_at(Vec3::new(1.0, 3.5, 1.0), Vec3::new(4.0, 4.0, 0.45)), t, None));
    out
}

fn c7_occlusion() -> Verdict {
    let intr = CameraIntrinsics::default();
    let scenes = occluder_scenes();
    let mut worst: f64 = 0.0;
    let mut analytic_ok = true;
    for (k, (s, pose, t, exact)) in scenes.iter().enumerate() {
        let got = occlusion_rate(s, pose, &intr, t).unwrap();
        let oracle = common::ray_occlusion(s, pose, &intr, t, 10_000, k as u64);
        worst = worst.max((got - oracle).abs());
        if let Some(e) = exact {
            analytic_ok &= (got - e).abs() <= 0.05;
        }
    }
    verdict(
        worst <= 0.05 && analytic_ok && scenes.len() == 10,
        format!("worst |render - rays| {worst:.4} over {} scenes at 1e4 rays (limit 0.05); analytic cases within 0.05: {analytic_ok}", scenes.len()),
    )
}

fn c8_replay() -> Verdict {
    let mut pools: [Vec<(usize, roomgen::taskgen::QATask)>; 3] = Default::default();
    let mut worlds: Vec<(String, String)> = Vec::new();
    let mut k = 0u64;
    while pools.iter().any(|p| p.len() < 100) && k < 60 {
        let p = program(&count_program(20, k as usize % 3));
        let s = layout(&p, k, LayoutMode::Cluster);
        let t = plan_trajectory(&s, &all_targets(&s), &TrajectoryParams::default(), k).unwrap();
        let tasks = generate_tasks_seeded(&s, &t, TaskCounts { measurement: 20, order: 20 }, k);
        worlds.push((s.to_json(), t.to_json()));
        for task in tasks {
            let f = TaskFamily::ALL.iter().position(|x| *x == task.family).unwrap();
            if pools[f].len() < 100 {
                pools[f].push((worlds.len() - 1, task));
            }
        }
        k += 1;
    }
    let parsed: Vec<(SceneState, Trajectory)> =
        worlds.iter().map(|(s, t)| (SceneState::from_json(s).unwrap(), Trajectory::from_json(t).unwrap())).collect();
    let mut total = 0;
    let mut same = 0;
    for pool in &pools {
        for (w, task) in pool {
            let line = roomgen::taskgen::to_jsonl(std::slice::from_ref(task));
            let task = roomgen::taskgen::from_jsonl(&line).unwrap().remove(0);
            total += 1;
            if common::replay(&task, &parsed[*w].0, &parsed[*w].1).as_ref() == Some(&task.ground_truth) {
                same += 1;
            }
        }
    }
    let sizes: Vec<usize> = pools.iter().map(|p| p.len()).collect();
    verdict(total == 300 && same == total, format!("{same}/{total} tasks replay identically (per family {sizes:?}) from {} scenes", worlds.len()))
}

fn roomgen_cli(dir: &Path, args: &[&str]) -> (i32, Vec<u8>) {
    let o = Command::new(env!("CARGO_BIN_EXE_roomgen")).current_dir(dir).args(args).output().unwrap();
    (o.status.code().unwrap_or(-1), o.stdout)
}

fn files_under(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let mut bytes = std::fs::read(&p).unwrap();
                if p.file_name().unwrap() == "summary.csv" {
                    // runtime_s is wall-clock and the only field allowed to differ
                    let text = String::from_utf8(bytes).unwrap();
                    bytes = text.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string() + "\n").collect::<String>().into_bytes();
                } else if p.file_name().unwrap() == "cell.json" {
                    let mut v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
                    v.as_object_mut().unwrap().remove("runtime_s");
                    bytes = v.to_string().into_bytes();
                }
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), bytes));
            }
        }
    }
    out.sort();
    out
}

fn c9_determinism() -> Verdict {
    let base = std::env::temp_dir().join(format!("roomgen-acceptance-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&base);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut differing = Vec::new();
    let mut compared = 0;
    for c in 0..10 {
        let seed: u64 = rng.gen_range(0..1_000_000);
        let n = [5, 10, 20][rng.gen_range(0..3)];
        let height = if rng.gen_bool(0.5) { EGO_HEIGHT } else { BEV_HEIGHT };
        let variant = rng.gen_range(0..3);
        let mut outputs = Vec::new();
        for run in ["a", "b"] {
            let dir = base.join(format!("{c}{run}"));
            std::fs::create_dir_all(&dir).unwrap();
            std::fs::write(dir.join("p.scn-dsl"), count_program(n, variant)).unwrap();
            std::fs::write(
                dir.join("run.toml"),
                format!("seed = {seed}\n[trajectory]\ncamera_height = {height:?}\n[sweep]\nobject_counts = [{n}]\ncamera_heights = [{height:?}]\n"),
            )
            .unwrap();
            let steps: [&[&str]; 8] = [
                &["generate", "p.scn-dsl", "--config", "run.toml", "--out", "gen"],
                &["refine", "p.scn-dsl", "--config", "run.toml", "--out", "ref"],
                &["plan", "gen/scene.json", "--config", "run.toml", "--out", "gen"],
                &["bev", "gen/scene.json", "--out", "gen"],
                &["metrics", "gen/scene.json", "--program", "p.scn-dsl"],
                &["taskgen", "gen/scene.json", "gen/trajectory.json", "--config", "run.toml", "--out", "gen"],
                &["score", "gen/tasks.jsonl", "gen/tasks.jsonl"],
                &["sweep", "--config", "run.toml", "--out", "sweep"],
            ];
            let mut stdouts = Vec::new();
            for args in steps {
                let (code, out) = roomgen_cli(&dir, args);
                stdouts.push((args[0], code, if args[0] == "sweep" { Vec::new() } else { out }));
            }
            outputs.push((stdouts, files_under(&dir)));
        }
        compared += outputs[0].1.len();
        if outputs[0] != outputs[1] {
            differing.push(c);
        }
    }
    let _ = std::fs::remove_dir_all(&base);
    verdict(differing.is_empty(), format!("10 configs, {compared} files compared byte for byte per rerun; differing configs {differing:?}"))
}

fn open_room(k: usize) -> SceneState {
    let (w, d) = (8.0 + (k % 2) as f64, 7.0 + (k / 2) as f64 * 0.5);
    let mut s = SceneState::new(RoomSpec::rectangle(w, d, 3.0));
    let spots = [(2.0, 5.0), (w - 2.0, d - 1.5), (w / 2.0, 3.5), (w - 1.5, 2.0), (1.8, 2.2)];
    for j in 0..3 + k % 3 {
        let (x, y) = spots[(j + k) % spots.len()];
        let f = ((j * 5 + k * 3) % 4) as f64;
        s.instances.push(ObjectInstance {
            id: InstanceId(format!("crate_{j}")),
            category: "crate".into(),
            pose: Pose { x, y, z: 0.0, yaw: 0.3 * (j + k) as f64 },
            dims: Vec3::new(0.4 + 0.1 * f, 0.5, 0.5 + 0.1 * f),
            relation: None,
        });
    }
    s
}

/// Chosen viewpoints, re-aimed for the other height, still pass there.
fn checks_hold_across(scene: &SceneState, from: &Trajectory, to: &TrajectoryParams) -> bool {
    from.legs.iter().all(|leg| {
        let c = scene.get(&leg.target).unwrap().centroid();
        let p = &leg.evaluation.pose;
        let pose = CameraPose::looking_at(Vec3::new(p.x, p.y, to.camera_height), c);
        evaluate_viewpoint(&pose, &leg.target, to, scene).unwrap().accepted
    })
}

fn c10_heights() -> Verdict {
    let out = par::map_range(5, |k| {
        let s = open_room(k);
        let ids = all_targets(&s);
        let (lp, hp) = (TrajectoryParams::with_height(EGO_HEIGHT), TrajectoryParams::with_height(BEV_HEIGHT));
        let low = plan_trajectory(&s, &ids, &lp, k as u64).unwrap();
        let high = plan_trajectory(&s, &ids, &hp, k as u64).unwrap();
        let checks_hold = low.unreachable.is_empty() && high.unreachable.is_empty() && checks_hold_across(&s, &low, &hp) && checks_hold_across(&s, &high, &lp);
        let same_order = low.visit_order() == high.visit_order();
        let only_z_pitch = low.legs.iter().zip(&high.legs).all(|(a, b)| {
            let (p, q) = (&a.evaluation.pose, &b.evaluation.pose);
            (p.x, p.y, p.yaw, p.roll) == (q.x, q.y, q.yaw, q.roll) && p.z == EGO_HEIGHT && q.z == BEV_HEIGHT && p.pitch != q.pitch
        });
        (checks_hold, same_order && only_z_pitch)
    });
    let held = out.iter().filter(|o| o.0).count();
    let ok = out.iter().filter(|o| o.0 && o.1).count();
    verdict(ok == 5, format!("{ok}/5 open rooms keep visit order and differ only in z/pitch; checks hold at both heights in {held}/5"))
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 10] = [
        ("zero-artifact generation", c1_zero_artifacts),
        ("fidelity after refinement", c2_fidelity),
        ("cluster vs hierarchical feasibility", c3_cluster_vs_hierarchical),
        ("refinement convergence", c4_refinement),
        ("occupancy banding", c5_occupancy),
        ("trajectory validity", c6_trajectories),
        ("occlusion oracle agreement", c7_occlusion),
        ("ground-truth replay", c8_replay),
        ("determinism", c9_determinism),
        ("camera-height variants", c10_heights),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let v = run();
        failed += !v.pass as usize;
        println!("criterion {:>2} {:<38} {}  {} [{:.1}s]", k + 1, name, if v.pass { "PASS" } else { "FAIL" }, v.detail, t.elapsed().as_secs_f64());
    }
    println!("acceptance: {}/10 criteria pass", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
