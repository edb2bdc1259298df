//! Debug image export: binary PPM (P6) for labels, 16-bit PGM (P5) for depth.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::grid::LabelGrid;
use super::render::{PixelLabel, SegDepthImage};
use crate::scene::SceneState;

pub const ROOM_COLOR: [u8; 3] = [200, 200, 200];
pub const EMPTY_COLOR: [u8; 3] = [0, 0, 0];
pub const FLOOR_COLOR: [u8; 3] = [255, 255, 255];

/// Stable, well-spread color for instance slot `k`.
pub fn instance_color(k: usize) -> [u8; 3] {
    let mut h = (k as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    h ^= h >> 29;
    let r = 40 + (h & 0xBF) as u8;
    let g = 40 + ((h >> 8) & 0xBF) as u8;
    let b = 40 + ((h >> 16) & 0xBF) as u8;
    [r, g, b]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegendEntry {
    pub id: String,
    pub category: String,
    pub color: [u8; 3],
}

pub fn legend(scene: &SceneState) -> Vec<LegendEntry> {
    scene
        .instances
        .iter()
        .enumerate()
        .map(|(k, i)| LegendEntry { id: i.id.0.clone(), category: i.category.clone(), color: instance_color(k) })
        .collect()
}

fn write_p6<W: Write>(mut w: W, width: usize, height: usize, rgb: &[[u8; 3]]) -> io::Result<()> {
    write!(w, "P6\n{width} {height}\n255\n")?;
    let bytes: Vec<u8> = rgb.iter().flatten().copied().collect();
    w.write_all(&bytes)
}

/// BEV map with north (+y) at the top of the image.
pub fn write_bev_ppm<W: Write>(w: W, grid: &LabelGrid) -> io::Result<()> {
    let (cols, rows) = (grid.spec.cols, grid.spec.rows);
    let mut rgb = Vec::with_capacity(cols * rows);
    for r in (0..rows).rev() {
        for c in 0..cols {
            rgb.push(match grid.cells[grid.spec.index((c, r))] {
                Some(k) => instance_color(k as usize),
                None => FLOOR_COLOR,
            });
        }
    }
    write_p6(w, cols, rows, &rgb)
}

pub fn write_label_ppm<W: Write>(w: W, img: &SegDepthImage) -> io::Result<()> {
    let rgb: Vec<[u8; 3]> = img
        .label
        .iter()
        .map(|l| match l {
            PixelLabel::Empty => EMPTY_COLOR,
            PixelLabel::Room => ROOM_COLOR,
            PixelLabel::Instance(k) => instance_color(*k as usize),
        })
        .collect();
    write_p6(w, img.width, img.height, &rgb)
}

/// Depth in millimeters, big-endian 16-bit; 65535 marks empty or out-of-range pixels.
pub fn write_depth_pgm<W: Write>(mut w: W, img: &SegDepthImage) -> io::Result<()> {
    write!(w, "P5\n{} {}\n65535\n", img.width, img.height)?;
    let mut bytes = Vec::with_capacity(img.depth.len() * 2);
    for d in &img.depth {
        let mm = if d.is_finite() { (d * 1000.0).round().clamp(0.0, 65535.0) as u16 } else { u16::MAX };
        bytes.extend_from_slice(&mm.to_be_bytes());
    }
    w.write_all(&bytes)
}
