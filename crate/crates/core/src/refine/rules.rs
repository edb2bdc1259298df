//! Deterministic rule table mapping error reports to program revisions.

use crate::catalog::{AssetCatalog, DimRange};
use crate::constraints::{ConstraintProgram, SemanticSelector, Target};
use crate::diagnostics::ErrorReport;

pub const GROWTH: f64 = 1.25;
/// Upper bound on any growth relative to the catalog (or declared) baseline.
pub const MAX_GROWTH: f64 = 3.0;
pub const DELETE_BIAS_STEP: f64 = 1.5;
pub const MAX_DELETE_BIAS: f64 = 8.0;

/// Which rule produced a revision.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleAction {
    pub rule: u8,
    pub description: String,
}

fn violated_counts(program: &ConstraintProgram, report: &ErrorReport) -> Vec<(usize, f64)> {
    report
        .satisfaction
        .violated
        .iter()
        .filter_map(|v| v.id.strip_prefix("count_")?.parse::<usize>().ok().map(|i| (i, v.observed)))
        .filter(|(i, _)| *i < program.counts.len())
        .collect()
}

/// Parent selector of the stacking relation the selector's instances are placed with, if any.
fn stacking_parent(program: &ConstraintProgram, sel: &SemanticSelector) -> Option<SemanticSelector> {
    if let Some((kind, Target::Objects(p))) = sel.related_to.as_deref() {
        if kind.is_stacking() {
            return Some(p.clone());
        }
    }
    program.relations.iter().find_map(|r| match &r.parent {
        Target::Objects(p) if r.kind.is_stacking() && r.child.base() == sel.base() => Some(p.clone()),
        _ => None,
    })
}

fn parent_categories(catalog: &AssetCatalog, sel: &SemanticSelector) -> Vec<String> {
    match &sel.category {
        Some(c) => vec![c.clone()],
        None => catalog.categories_with_tags(&sel.tags).map(str::to_string).collect(),
    }
}

/// Grows the parent's footprint ranges; `None` if every axis is at its cap.
fn widen_parent(program: &mut ConstraintProgram, catalog: &AssetCatalog, category: &str) -> Option<String> {
    let entry = catalog.get(category)?;
    let ov = program.asset_overrides.entry(category.to_string()).or_default();
    let mut changed = Vec::new();
    for axis in 0..2 {
        let base = entry.dimension_ranges[axis];
        let cur = ov.axis(axis).unwrap_or(base);
        let cap = base.max * MAX_GROWTH;
        if cur.max >= cap - 1e-9 {
            continue;
        }
        let max = (cur.max * GROWTH).min(cap);
        let min = (cur.min * GROWTH).min(max);
        ov.set_axis(axis, DimRange::new(min, max));
        changed.push(["x", "y"][axis]);
    }
    if changed.is_empty() {
        if ov.is_empty() {
            program.asset_overrides.remove(category);
        }
        return None;
    }
    Some(format!("widen {category} {} by x{GROWTH}", changed.join(",")))
}

/// Applies the first matching rule. Returns the revised program and what was done,
/// or `None` when no rule applies.
pub fn rule_based_refine(program: &ConstraintProgram, report: &ErrorReport, catalog: &AssetCatalog) -> Option<(ConstraintProgram, RuleAction)> {
    let counts = violated_counts(program, report);
    let under: Vec<usize> = counts.iter().filter(|(i, obs)| *obs < program.counts[*i].low as f64).map(|c| c.0).collect();
    let over = counts.iter().any(|(i, obs)| *obs > program.counts[*i].high as f64);

    // 1. Too few stacked children: give their parents more surface.
    for &i in &under {
        let Some(parent) = stacking_parent(program, &program.counts[i].selector) else { continue };
        let mut next = program.clone();
        for cat in parent_categories(catalog, &parent) {
            if let Some(d) = widen_parent(&mut next, catalog, &cat) {
                return Some((next, RuleAction { rule: 1, description: d }));
            }
        }
    }

    // 2. Too few free-standing objects: more floor, or a weaker competing score.
    let free_under = under.iter().any(|&i| stacking_parent(program, &program.counts[i].selector).is_none());
    let occupancy_allows = match program.target_occupancy {
        None => true,
        Some((lo, _)) => report.metrics.occupancy_ratio >= lo,
    };
    if free_under && occupancy_allows {
        if program.room_resizable && program.room_scale * GROWTH <= MAX_GROWTH + 1e-9 {
            let mut next = program.clone();
            next.room_scale = program.room_scale * GROWTH;
            let description = format!("scale room area to x{}", next.room_scale);
            return Some((next, RuleAction { rule: 2, description }));
        }
        let heaviest = program
            .scores
            .iter()
            .enumerate()
            .filter(|(_, t)| t.weight > 0.0)
            .max_by(|a, b| a.1.weight.total_cmp(&b.1.weight).then(b.0.cmp(&a.0)));
        if let Some((k, t)) = heaviest {
            let mut next = program.clone();
            next.scores[k].weight = t.weight / 2.0;
            let description = format!("halve weight of score term {k} to {}", next.scores[k].weight);
            return Some((next, RuleAction { rule: 2, description }));
        }
    }

    // 3. Too many: counts are requirements, so push the optimizer to delete.
    if over && program.delete_bias * DELETE_BIAS_STEP <= MAX_DELETE_BIAS + 1e-9 {
        let mut next = program.clone();
        next.delete_bias = program.delete_bias * DELETE_BIAS_STEP;
        let description = format!("raise delete bias to {}", next.delete_bias);
        return Some((next, RuleAction { rule: 3, description }));
    }
    None
}
