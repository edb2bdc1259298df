//! Synthetic constraint programs with controlled complexity.
//!
//! Every builder returns DSL text so the programs can be written to disk,
//! diffed and re-parsed like hand-written ones.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::catalog::AssetCatalog;
use crate::planner::TrajectoryParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexityControls {
    pub n_objects: usize,
    /// Distractors among `n_objects`, drawn from categories no task refers to.
    pub n_irrelevant: usize,
    pub camera_height: f64,
    pub occlusion_band: (f64, f64),
}

impl Default for ComplexityControls {
    fn default() -> Self {
        Self { n_objects: 10, n_irrelevant: 0, camera_height: 1.0, occlusion_band: (0.0, 0.1) }
    }
}

impl ComplexityControls {
    pub fn validate(&self) -> Result<(), String> {
        if self.n_irrelevant > self.n_objects {
            return Err(format!("n_irrelevant {} exceeds n_objects {}", self.n_irrelevant, self.n_objects));
        }
        let (lo, hi) = self.occlusion_band;
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(format!("occlusion band [{lo},{hi}] is not a sub-interval of [0,1]"));
        }
        if !(self.camera_height > 0.0) {
            return Err("camera_height must be positive".into());
        }
        Ok(())
    }

    /// Task objects (a dining group) plus distractors of disjoint categories.
    pub fn program(&self) -> String {
        let relevant = self.n_objects - self.n_irrelevant;
        let mut b = Builder::default();
        if relevant > 0 {
            let tables = relevant.div_ceil(7);
            let chairs = (relevant - tables) / tables;
            let extra = relevant - tables - chairs * tables;
            b.add("dining_table", tables);
            if chairs > 0 {
                b.scoped("chair", "front_against", "dining_table", chairs);
            }
            b.add("sofa", extra);
        }
        for cat in DISTRACTORS.iter().cycle().take(self.n_irrelevant) {
            b.add(cat, 1);
        }
        b.wall("sofa");
        b.render(room_for(self.n_objects))
    }

    pub fn trajectory_params(&self) -> TrajectoryParams {
        TrajectoryParams { occlusion_required_range: self.occlusion_band, ..TrajectoryParams::with_height(self.camera_height) }
    }
}

const DISTRACTORS: [&str; 4] = ["plant", "armchair", "cabinet", "lamp"];

#[derive(Default)]
struct Builder {
    counts: BTreeMap<String, usize>,
    scoped: Vec<(String, String, String, usize)>,
    walls: Vec<String>,
    extra: Vec<String>,
}

impl Builder {
    fn add(&mut self, cat: &str, n: usize) {
        if n > 0 {
            *self.counts.entry(cat.to_string()).or_default() += n;
        }
    }

    fn scoped(&mut self, child: &str, rel: &str, parent: &str, per_parent: usize) {
        self.scoped.push((child.into(), rel.into(), parent.into(), per_parent));
    }

    fn wall(&mut self, cat: &str) {
        if !self.walls.iter().any(|w| w == cat) {
            self.walls.push(cat.into());
        }
    }

    /// Expected floor area covered, from nominal catalog sizes. Stacked
    /// children add nothing; children standing beside a parent do.
    fn floor_footprint(&self) -> f64 {
        let cat = AssetCatalog::builtin();
        let area = |c: &str| cat.get(c).map_or(0.0, |e| {
            let d = e.nominal_dims();
            d.x * d.y
        });
        let free: f64 = self.counts.iter().map(|(c, n)| area(c) * *n as f64).sum();
        let beside: f64 = self
            .scoped
            .iter()
            .filter(|(_, rel, _, _)| rel == "front_against")
            .map(|(child, _, parent, k)| area(child) * (*k * self.counts.get(parent).copied().unwrap_or(0)) as f64)
            .sum();
        free + beside
    }

    fn render(&self, (w, d): (f64, f64)) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "room polygon (0,0) ({w},0) ({w},{d}) (0,{d}) height 2.8 door ({},0)", w / 2.0);
        for (cat, n) in &self.counts {
            let _ = writeln!(s, "count({cat}) in [{n},{n}]");
        }
        for (child, rel, parent, n) in &self.scoped {
            if self.counts.contains_key(parent) {
                let _ = writeln!(s, "count({child} where {rel} {parent}) in [{n},{n}]");
            }
        }
        for cat in &self.walls {
            if self.counts.contains_key(cat) {
                let _ = writeln!(s, "relation(against_wall, {cat}, wall)");
            }
        }
        for line in &self.extra {
            s.push_str(line);
            s.push('\n');
        }
        s
    }
}

/// Rectangle of roughly 1.6 m² per object (12 m² minimum), 5:4 aspect, half-metre steps.
fn room_for(n: usize) -> (f64, f64) {
    let area = (n as f64 * 1.6).max(12.0);
    let w = ((area * 1.25).sqrt() * 2.0).ceil() / 2.0;
    let d = ((area / w) * 2.0).ceil() / 2.0;
    (w, d)
}

#[derive(Debug, Clone, Copy)]
enum Unit {
    /// Table plus four chairs.
    Dining,
    /// Desk, monitor, chair.
    Desk,
    /// Bookshelf against a wall with three books.
    Shelf,
    /// Bed flanked by a nightstand with a lamp.
    Bed,
}

impl Unit {
    fn size(self) -> usize {
        match self {
            Unit::Dining => 5,
            Unit::Desk => 3,
            Unit::Shelf => 4,
            Unit::Bed => 3,
        }
    }
}

const UNIT_ORDERS: [[Unit; 4]; 3] = [
    [Unit::Dining, Unit::Desk, Unit::Shelf, Unit::Bed],
    [Unit::Desk, Unit::Shelf, Unit::Dining, Unit::Bed],
    [Unit::Bed, Unit::Dining, Unit::Shelf, Unit::Desk],
];

const SINGLES: [&str; 4] = ["plant", "armchair", "cabinet", "wardrobe"];

/// A program whose counts sum to exactly `n` objects. `variant` picks the
/// furniture mix; different variants give structurally different programs.
pub fn count_program(n: usize, variant: usize) -> String {
    count_builder(n, variant).render(room_for(n))
}

/// Like [`count_program`], with the room sized so the expected floor
/// footprint lands mid-band, and the band stated as an occupancy constraint.
pub fn count_program_in_band(n: usize, variant: usize, band: OccupancyBand) -> String {
    let mut b = count_builder(n, variant);
    let area = (b.floor_footprint() / band.target()).max(4.0);
    let w = ((area * 1.25).sqrt() * 10.0).round() / 10.0;
    let d = ((area / w) * 10.0).round() / 10.0;
    let (lo, hi) = band.range();
    b.extra.push(format!("occupancy in [{lo},{hi}]"));
    b.render((w, d))
}

fn count_builder(n: usize, variant: usize) -> Builder {
    let order = UNIT_ORDERS[variant % UNIT_ORDERS.len()];
    let mut units: BTreeMap<usize, usize> = BTreeMap::new();
    let mut remaining = n;
    // Keep a quarter of the objects for free-standing singles.
    let budget = n - n / 4;
    let mut used = 0;
    'fill: loop {
        let mut progressed = false;
        for (k, u) in order.iter().enumerate() {
            if used + u.size() > budget {
                continue;
            }
            *units.entry(k).or_default() += 1;
            used += u.size();
            progressed = true;
            if used == budget {
                break 'fill;
            }
        }
        if !progressed {
            break;
        }
    }
    remaining -= used;
    let mut b = Builder::default();
    for (&k, &m) in &units {
        match order[k] {
            Unit::Dining => {
                b.add("dining_table", m);
                b.scoped("chair", "front_against", "dining_table", 4);
            }
            Unit::Desk => {
                b.add("desk", m);
                b.scoped("monitor", "on_top_of", "desk", 1);
                b.scoped("chair", "front_against", "desk", 1);
                b.wall("desk");
            }
            Unit::Shelf => {
                b.add("bookshelf", m);
                b.scoped("book", "on_surface_of", "bookshelf", 3);
                b.wall("bookshelf");
            }
            Unit::Bed => {
                b.add("bed", m);
                b.add("nightstand", m);
                b.scoped("lamp", "on_top_of", "nightstand", 1);
                b.wall("bed");
            }
        }
    }
    for cat in SINGLES.iter().cycle().skip(variant).take(remaining) {
        b.add(cat, 1);
    }
    b.wall("wardrobe");
    b.wall("cabinet");
    b
}

/// The dining scenario: a 30 m² room, one table and ten chairs pushed up to it.
pub fn dining_program() -> String {
    "room polygon (0,0) (6,0) (6,5) (0,5) height 2.8 door (3,0)\n\
     count(dining_table) in [1,1]\n\
     count(chair where front_against dining_table) in [10,10]\n"
        .to_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OccupancyBand {
    Sparse,
    Medium,
    Dense,
}

impl OccupancyBand {
    pub const ALL: [OccupancyBand; 3] = [OccupancyBand::Sparse, OccupancyBand::Medium, OccupancyBand::Dense];

    pub fn name(self) -> &'static str {
        match self {
            OccupancyBand::Sparse => "sparse",
            OccupancyBand::Medium => "medium",
            OccupancyBand::Dense => "dense",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|b| b.name() == s)
    }

    /// Half-open occupancy interval `[lo, hi)`.
    pub fn range(self) -> (f64, f64) {
        match self {
            OccupancyBand::Sparse => (0.0, 0.1),
            OccupancyBand::Medium => (0.1, 0.5),
            OccupancyBand::Dense => (0.5, 1.0),
        }
    }

    /// Occupancy aimed for when sizing a room for this band.
    pub fn target(self) -> f64 {
        match self {
            OccupancyBand::Sparse => 0.05,
            OccupancyBand::Medium => 0.3,
            OccupancyBand::Dense => 0.6,
        }
    }

    pub fn contains(self, ratio: f64) -> bool {
        let (lo, hi) = self.range();
        ratio >= lo && (ratio < hi || hi >= 1.0 && ratio <= 1.0)
    }

    /// A program whose pinned furniture sizes land its occupancy inside the band.
    pub fn program(self) -> String {
        let (lo, hi) = self.range();
        let body = match self {
            OccupancyBand::Sparse => {
                "room polygon (0,0) (6,0) (6,5) (0,5) height 2.8 door (3,0)\n\
                 count(armchair) in [1,1]\n\
                 count(plant) in [2,2]\n"
            }
            OccupancyBand::Medium => {
                "room polygon (0,0) (6,0) (6,5) (0,5) height 2.8 door (3,0)\n\
                 count(dining_table) in [1,1]\n\
                 count(chair where front_against dining_table) in [4,4]\n\
                 count(sofa) in [1,1]\n\
                 count(wardrobe) in [1,1]\n\
                 relation(against_wall, wardrobe, wall)\n"
            }
            OccupancyBand::Dense => {
                "room polygon (0,0) (3,0) (3,3) (0,3) height 2.8 door (1.5,0)\n\
                 count(bed) in [1,1]\n\
                 count(wardrobe) in [1,1]\n\
                 count(cabinet) in [1,1]\n\
                 count(nightstand) in [2,2]\n\
                 asset bed x [2,2] y [1.6,1.6]\n\
                 asset wardrobe x [0.6,0.6] y [1.5,1.5]\n\
                 asset cabinet x [0.5,0.5] y [1,1]\n\
                 asset nightstand x [0.45,0.45] y [0.45,0.45]\n"
            }
        };
        format!("{body}occupancy in [{lo},{hi}]\n")
    }
}

/// Ten programs spanning 5, 20 and 50 objects.
pub fn artifact_suite() -> Vec<String> {
    let mut v = Vec::new();
    for variant in 0..4 {
        v.push(count_program(5, variant));
    }
    for variant in 0..3 {
        v.push(count_program(20, variant));
    }
    for variant in 0..3 {
        v.push(count_program(50, variant));
    }
    v
}

/// Crowded tables where chairs must move with their table to fit.
pub fn dense_suite() -> Vec<String> {
    let mut v = vec![dining_program()];
    for (w, d, tables, chairs) in [(5.0, 4.0, 1, 8), (7.0, 5.0, 2, 8), (5.5, 4.5, 1, 10), (8.0, 5.0, 2, 10)] {
        let mut s = format!("room polygon (0,0) ({w},0) ({w},{d}) (0,{d}) height 2.8 door ({},0)\n", w / 2.0);
        let _ = writeln!(s, "count(dining_table) in [{tables},{tables}]");
        let _ = writeln!(s, "count(chair where front_against dining_table) in [{chairs},{chairs}]");
        v.push(s);
    }
    v
}

/// Programs the optimizer cannot satisfy as written, each fixable by one of
/// the refinement rules.
pub fn infeasible_suite() -> Vec<String> {
    let stacked = |parent: &str, dims: &str, child: &str, rel: &str, n: usize| {
        format!("count({parent}) in [1,1]\ncount({child} where {rel} {parent}) in [{n},{n}]\nasset {parent} {dims}\n")
    };
    let tight_room = |w: f64, d: f64, body: &str| {
        format!("room polygon (0,0) ({w},0) ({w},{d}) (0,{d}) height 2.8 door ({},0) resizable\n{body}", w / 2.0)
    };
    vec![
        stacked("desk", "x [0.5,0.5] y [0.8,0.9]", "monitor", "on_top_of", 3),
        stacked("dining_table", "x [0.6,0.6] y [0.8,0.8]", "plate", "on_top_of", 8),
        stacked("nightstand", "x [0.2,0.2] y [0.2,0.2]", "cup", "on_top_of", 6),
        stacked("cabinet", "x [0.25,0.25] y [0.25,0.25]", "vase", "on_top_of", 4),
        stacked("coffee_table", "x [0.5,0.5] y [0.6,0.6]", "plate", "on_top_of", 6),
        stacked("tv_stand", "x [0.25,0.25] y [0.5,0.5]", "vase", "on_top_of", 6),
        tight_room(1.5, 1.5, "count(wardrobe) in [3,3]\nrelation(against_wall, wardrobe, wall)\n"),
        tight_room(2.2, 2.0, "count(bed) in [1,1]\ncount(sofa) in [1,1]\n"),
        tight_room(2.0, 1.5, "count(armchair) in [4,4]\n"),
        tight_room(2.2, 1.8, "count(dining_table) in [1,1]\ncount(chair where front_against dining_table) in [6,6]\ncount(wardrobe) in [1,1]\n"),
    ]
}

/// Twenty programs: the dining scenario, the artifact suite, the occupancy
/// bands and a few infeasible-as-written ones.
pub fn fidelity_suite() -> Vec<String> {
    let mut v = vec![dining_program()];
    v.extend(artifact_suite());
    v.extend(OccupancyBand::ALL.iter().map(|b| b.program()));
    v.extend(dense_suite().into_iter().skip(1).take(2));
    v.extend(infeasible_suite().into_iter().take(4));
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::parse_program;

    fn total(text: &str) -> usize {
        let cat = AssetCatalog::builtin();
        let p = parse_program(text, &cat).unwrap();
        let parents = |sel: &crate::constraints::SemanticSelector| {
            p.counts.iter().filter(|c| c.scope.is_none() && c.selector == *sel).map(|c| c.high as usize).sum::<usize>()
        };
        p.counts
            .iter()
            .map(|c| match &c.scope {
                None => c.high as usize,
                Some(s) => c.high as usize * parents(s),
            })
            .sum()
    }

    #[test]
    fn count_programs_hit_their_total() {
        for n in [5, 7, 20, 33, 50] {
            for v in 0..3 {
                assert_eq!(total(&count_program(n, v)), n, "n={n} variant={v}\n{}", count_program(n, v));
            }
        }
    }

    #[test]
    fn suites_parse() {
        let cat = AssetCatalog::builtin();
        for s in fidelity_suite().iter().chain(&dense_suite()).chain(&infeasible_suite()) {
            parse_program(s, &cat).unwrap_or_else(|e| panic!("{e}\n{s}"));
        }
        assert_eq!(artifact_suite().len(), 10);
        assert_eq!(fidelity_suite().len(), 20);
        assert_eq!(infeasible_suite().len(), 10);
    }

    #[test]
    fn artifact_suite_is_distinct() {
        let s = artifact_suite();
        let set: std::collections::BTreeSet<_> = s.iter().collect();
        assert_eq!(set.len(), s.len());
    }

    #[test]
    fn controls_keep_task_objects_fixed() {
        let a = ComplexityControls { n_objects: 12, n_irrelevant: 0, ..Default::default() };
        let b = ComplexityControls { n_objects: 15, n_irrelevant: 3, ..Default::default() };
        assert_eq!(total(&a.program()), 12);
        assert_eq!(total(&b.program()), 15);
        let relevant = |t: &str| t.lines().filter(|l| l.contains("dining_table") || l.contains("sofa")).map(str::to_string).collect::<Vec<_>>();
        assert_eq!(relevant(&a.program()), relevant(&b.program()));
        assert!(ComplexityControls { n_objects: 2, n_irrelevant: 3, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn bands_partition_the_unit_interval() {
        for r in [0.0, 0.05, 0.1, 0.3, 0.5, 0.9, 1.0] {
            assert_eq!(OccupancyBand::ALL.iter().filter(|b| b.contains(r)).count(), 1, "{r}");
        }
    }
}
