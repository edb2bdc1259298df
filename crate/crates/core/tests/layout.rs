mod common;

use proptest::prelude::*;

use roomgen::diagnostics::{compute_metrics, footprint_sum_ratio};
use roomgen::layout::{optimize_layout_observed, LayoutMode, StepResult};
use roomgen::synth::{count_program, dining_program, OccupancyBand};
use roomgen::{optimize_layout, parse_program, AssetCatalog, OptimizerSchedule};

fn quick(seed: u64, steps: u64) -> OptimizerSchedule {
    OptimizerSchedule { max_steps: steps, ..OptimizerSchedule::with_seed(seed) }
}

const FREE: [&str; 6] = ["chair", "armchair", "plant", "cabinet", "sofa", "lamp"];

fn arb_program() -> impl Strategy<Value = String> {
    (4.0f64..8.0, 3.5f64..7.0, proptest::collection::vec((0usize..FREE.len(), 0u32..3), 1..4), any::<bool>()).prop_map(|(w, d, picks, table)| {
        let (w, d) = ((w * 2.0).round() / 2.0, (d * 2.0).round() / 2.0);
        let mut s = format!("room polygon (0,0) ({w},0) ({w},{d}) (0,{d}) height 2.8 door ({},0)\n", w / 2.0);
        let mut seen = std::collections::BTreeSet::new();
        for (k, n) in picks {
            if seen.insert(k) {
                s += &format!("count({}) in [{n},{}]\n", FREE[k], n + 1);
            }
        }
        if table {
            s += "count(dining_table) in [1,1]\ncount(chair where front_against dining_table) in [2,4]\n";
        }
        s
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Every accepted scene, including intermediate ones, is free of artifacts.
    #[test]
    fn every_accepted_state_is_artifact_free(text in arb_program(), seed in 0u64..1000, hier in any::<bool>()) {
        let cat = AssetCatalog::builtin();
        let p = parse_program(&text, &cat).unwrap();
        let mode = if hier { LayoutMode::Hierarchical } else { LayoutMode::Cluster };
        let mut bad = Vec::new();
        let r = optimize_layout_observed(&p, &cat, &quick(seed, 1500), mode, |rec| {
            if rec.result == StepResult::Accepted && rec.step % 50 == 0 {
                let a = common::artifacts(rec.scene);
                if a != (0, 0) {
                    bad.push((rec.step, a));
                }
            }
        }).unwrap();
        prop_assert!(bad.is_empty(), "{:?}", bad);
        prop_assert_eq!(common::artifacts(&r.scene), (0, 0));
        let m = compute_metrics(&p, &r.scene);
        prop_assert!(m.artifact_free());
        prop_assert!((0.0..=1.0).contains(&m.fidelity));
    }

    #[test]
    fn same_seed_same_scene(text in arb_program(), seed in 0u64..1000) {
        let cat = AssetCatalog::builtin();
        let p = parse_program(&text, &cat).unwrap();
        let a = optimize_layout(&p, &cat, &quick(seed, 800)).unwrap();
        let b = optimize_layout(&p, &cat, &quick(seed, 800)).unwrap();
        prop_assert_eq!(a.scene.to_json(), b.scene.to_json());
        prop_assert_eq!(a.stats, b.stats);
    }

    #[test]
    fn dsl_round_trips(text in arb_program()) {
        let cat = AssetCatalog::builtin();
        let p = parse_program(&text, &cat).unwrap();
        let again = parse_program(&p.to_dsl(), &cat).unwrap();
        prop_assert_eq!(&again, &p);
        prop_assert_eq!(roomgen::ConstraintProgram::from_json(&p.to_json()).unwrap(), p);
    }
}

#[test]
fn dining_scenario_converges() {
    let cat = AssetCatalog::builtin();
    let p = parse_program(&dining_program(), &cat).unwrap();
    let r = optimize_layout(&p, &cat, &OptimizerSchedule::with_seed(2)).unwrap();
    let m = compute_metrics(&p, &r.scene);
    assert!(m.converged(), "{m:?}");
    assert_eq!(m.object_count, 11);
    assert_eq!(common::artifacts(&r.scene), (0, 0));
}

#[test]
fn scene_json_round_trips() {
    let cat = AssetCatalog::builtin();
    let p = parse_program(&count_program(20, 1), &cat).unwrap();
    let s = optimize_layout(&p, &cat, &OptimizerSchedule::with_seed(4)).unwrap().scene;
    let back = roomgen::SceneState::from_json(&s.to_json()).unwrap();
    assert_eq!(back, s);
    assert_eq!(back.to_json(), s.to_json());
}

#[test]
fn band_programs_land_in_band() {
    let cat = AssetCatalog::builtin();
    for band in OccupancyBand::ALL {
        let p = parse_program(&band.program(), &cat).unwrap();
        let s = optimize_layout(&p, &cat, &OptimizerSchedule::with_seed(1)).unwrap().scene;
        let occ = compute_metrics(&p, &s).occupancy_ratio;
        assert!(band.contains(occ), "{} {occ}", band.name());
        assert!((occ - footprint_sum_ratio(&s)).abs() < 0.02, "{} grid {occ} vs sum {}", band.name(), footprint_sum_ratio(&s));
    }
}
