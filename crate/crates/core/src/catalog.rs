//! Parametric box-composite assets.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimRange {
    pub min: f64,
    pub max: f64,
}

impl DimRange {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn is_valid(&self) -> bool {
        self.min > 0.0 && self.min <= self.max && self.max.is_finite()
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.min - 1e-12 && v <= self.max + 1e-12
    }

    pub fn scaled(&self, f: f64) -> DimRange {
        DimRange::new(self.min * f, self.max * f)
    }
}

/// A sub-box of an asset, in coordinates normalized to the asset's bounding box
/// (`[0,1]` on each axis, x along the facing direction).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartBox {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl PartBox {
    pub const FULL: PartBox = PartBox { min: [0.0; 3], max: [1.0; 3] };
}

/// A horizontal support rectangle (normalized footprint coordinates) at a
/// normalized height of the parent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSlot {
    pub min: [f64; 2],
    pub max: [f64; 2],
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetEntry {
    pub tags: BTreeSet<String>,
    /// Per-axis ranges: x = depth along the facing axis, y = width, z = height.
    pub dimension_ranges: [DimRange; 3],
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parts: Vec<PartBox>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub surface_slots: Vec<SurfaceSlot>,
    /// Base elevation for wall-mounted assets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mount_height: Option<f64>,
}

impl AssetEntry {
    pub fn parts(&self) -> &[PartBox] {
        if self.parts.is_empty() {
            std::slice::from_ref(&PartBox::FULL)
        } else {
            &self.parts
        }
    }

    /// The highest support slot, used by `on_top_of`.
    pub fn top_slot(&self) -> Option<usize> {
        self.surface_slots
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.height.total_cmp(&b.1.height))
            .map(|(i, _)| i)
    }

    pub fn nominal_dims(&self) -> Vec3 {
        let m = |r: &DimRange| 0.5 * (r.min + r.max);
        Vec3::new(m(&self.dimension_ranges[0]), m(&self.dimension_ranges[1]), m(&self.dimension_ranges[2]))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AssetCatalog {
    pub entries: BTreeMap<String, AssetEntry>,
}

impl AssetCatalog {
    pub fn get(&self, category: &str) -> Option<&AssetEntry> {
        self.entries.get(category)
    }

    pub fn has_category(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn has_tag(&self, tag: &str) -> bool {
        self.entries.values().any(|e| e.tags.contains(tag))
    }

    /// Categories carrying every tag in `tags`, in name order.
    pub fn categories_with_tags<'a>(&'a self, tags: &'a BTreeSet<String>) -> impl Iterator<Item = &'a str> + 'a {
        self.entries.iter().filter(move |(_, e)| tags.is_subset(&e.tags)).map(|(k, _)| k.as_str())
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, e) in &self.entries {
            if e.dimension_ranges.iter().any(|r| !r.is_valid()) {
                return Err(format!("asset {name}: invalid dimension range"));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Household assets covering dining rooms, bedrooms, offices, living rooms and bathrooms.
    pub fn builtin() -> Self {
        let mut entries = BTreeMap::new();
        let table_parts = vec![
            PartBox { min: [0.0, 0.0, 0.92], max: [1.0, 1.0, 1.0] },
            PartBox { min: [0.02, 0.02, 0.0], max: [0.1, 0.08, 0.92] },
            PartBox { min: [0.9, 0.02, 0.0], max: [0.98, 0.08, 0.92] },
            PartBox { min: [0.02, 0.92, 0.0], max: [0.1, 0.98, 0.92] },
            PartBox { min: [0.9, 0.92, 0.0], max: [0.98, 0.98, 0.92] },
        ];
        let chair_parts = vec![
            PartBox { min: [0.0, 0.0, 0.0], max: [1.0, 1.0, 0.5] },
            PartBox { min: [0.0, 0.0, 0.5], max: [0.18, 1.0, 1.0] },
        ];
        let top = |inset: f64| SurfaceSlot { min: [inset, inset], max: [1.0 - inset, 1.0 - inset], height: 1.0 };
        let shelf_levels = vec![
            SurfaceSlot { min: [0.05, 0.04], max: [0.95, 0.96], height: 0.05 },
            SurfaceSlot { min: [0.05, 0.04], max: [0.95, 0.96], height: 0.35 },
            SurfaceSlot { min: [0.05, 0.04], max: [0.95, 0.96], height: 0.65 },
            SurfaceSlot { min: [0.0, 0.0], max: [1.0, 1.0], height: 1.0 },
        ];
        let mut add = |name: &str,
                       tags: &[&str],
                       d: [(f64, f64); 3],
                       parts: Vec<PartBox>,
                       slots: Vec<SurfaceSlot>,
                       mount: Option<f64>| {
            entries.insert(
                name.to_string(),
                AssetEntry {
                    tags: tags.iter().map(|t| t.to_string()).collect(),
                    dimension_ranges: d.map(|(a, b)| DimRange::new(a, b)),
                    parts,
                    surface_slots: slots,
                    mount_height: mount,
                },
            );
        };
        add("armchair", &["Furniture", "Seating"], [(0.75, 0.85), (0.75, 0.85), (0.8, 0.9)], vec![], vec![], None);
        add("bathtub", &["Bathroom", "Furniture"], [(0.7, 0.8), (1.5, 1.7), (0.5, 0.6)], vec![], vec![], None);
        add("bed", &["Bed", "Furniture"], [(1.9, 2.1), (1.4, 1.8), (0.5, 0.6)], vec![], vec![top(0.05)], None);
        add("book", &["Decor", "ShelfItem"], [(0.15, 0.22), (0.03, 0.06), (0.2, 0.28)], vec![], vec![], None);
        add(
            "bookshelf",
            &["Furniture", "Shelf", "Storage"],
            [(0.3, 0.4), (0.8, 1.2), (1.6, 2.0)],
            vec![],
            shelf_levels,
            None,
        );
        add("cabinet", &["Furniture", "Storage"], [(0.45, 0.6), (0.8, 1.2), (0.8, 0.95)], vec![], vec![top(0.03)], None);
        add("chair", &["Furniture", "Seating"], [(0.45, 0.52), (0.42, 0.5), (0.8, 0.95)], chair_parts, vec![], None);
        add(
            "coffee_table",
            &["Furniture", "Table"],
            [(0.5, 0.7), (0.9, 1.2), (0.4, 0.48)],
            table_parts.clone(),
            vec![top(0.03)],
            None,
        );
        add("cup", &["Dishware", "TableDisplayItem"], [(0.07, 0.09), (0.07, 0.09), (0.09, 0.12)], vec![], vec![], None);
        add(
            "desk",
            &["Furniture", "Table", "Workspace"],
            [(0.6, 0.75), (1.0, 1.2), (0.72, 0.78)],
            table_parts.clone(),
            vec![top(0.0)],
            None,
        );
        add(
            "dining_table",
            &["Furniture", "Table"],
            [(0.85, 1.0), (1.5, 1.9), (0.72, 0.78)],
            table_parts,
            vec![top(0.03)],
            None,
        );
        add("keyboard", &["Electronics"], [(0.14, 0.18), (0.42, 0.46), (0.02, 0.04)], vec![], vec![], None);
        add("lamp", &["Decor", "Lighting", "TableDisplayItem"], [(0.2, 0.3), (0.2, 0.3), (0.3, 0.5)], vec![], vec![], None);
        add("mirror", &["Bathroom", "Decor"], [(0.03, 0.05), (0.5, 0.7), (0.7, 0.9)], vec![], vec![], Some(1.2));
        add("monitor", &["Display", "Electronics"], [(0.18, 0.24), (0.5, 0.6), (0.35, 0.45)], vec![], vec![], None);
        add("nightstand", &["Furniture", "Storage", "Table"], [(0.4, 0.45), (0.4, 0.5), (0.5, 0.6)], vec![], vec![top(0.03)], None);
        add("plant", &["Decor"], [(0.3, 0.45), (0.3, 0.45), (0.5, 1.2)], vec![], vec![], None);
        add("plate", &["Dishware"], [(0.22, 0.26), (0.22, 0.26), (0.02, 0.03)], vec![], vec![], None);
        add("sink", &["Bathroom"], [(0.45, 0.55), (0.5, 0.6), (0.8, 0.9)], vec![], vec![top(0.05)], None);
        add("sofa", &["Furniture", "Seating"], [(0.85, 0.95), (1.8, 2.2), (0.8, 0.9)], vec![], vec![], None);
        add("toilet", &["Bathroom", "Seating"], [(0.65, 0.72), (0.38, 0.42), (0.75, 0.8)], vec![], vec![], None);
        add("tv", &["Display", "Electronics"], [(0.08, 0.12), (0.9, 1.2), (0.55, 0.7)], vec![], vec![], None);
        add("tv_stand", &["Furniture", "Storage", "Table"], [(0.4, 0.5), (1.2, 1.6), (0.45, 0.55)], vec![], vec![top(0.02)], None);
        add("vase", &["Decor", "TableDisplayItem"], [(0.12, 0.18), (0.12, 0.18), (0.2, 0.35)], vec![], vec![], None);
        add("wardrobe", &["Furniture", "Storage"], [(0.55, 0.6), (1.0, 1.6), (1.9, 2.2)], vec![], vec![], None);
        AssetCatalog { entries }
    }
}
