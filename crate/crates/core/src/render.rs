//! Renderings of a supervoxel labeling: one random color per supervoxel, or a
//! binary boundary video.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::segment::SupervoxelLabeling;
use crate::video::{Rgb, VideoVolume};

/// Colors whose channels are all below this value are reserved for
/// boundary rendering and never assigned to a supervoxel.
pub const NEAR_BLACK: u8 = 16;

const BOUNDARY: Rgb = [255.0, 255.0, 255.0];

/// Number of colors available to [`ColorAssignment`].
pub const COLOR_CAPACITY: usize = (1 << 24) - (NEAR_BLACK as usize).pow(3);

/// Injective label -> color map drawn from a seeded generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorAssignment {
    pub mapping: Vec<[u8; 3]>,
    pub seed: u64,
}

impl ColorAssignment {
    pub fn new(labels: usize, seed: u64) -> Result<Self> {
        if labels > COLOR_CAPACITY {
            return Err(Error::Capacity(format!(
                "{labels} labels exceed the {COLOR_CAPACITY} distinct colors available"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut used: HashSet<u32> = HashSet::with_capacity(labels);
        let mut mapping = Vec::with_capacity(labels);
        while mapping.len() < labels {
            let c: u32 = rng.gen_range(0..1 << 24);
            let rgb = [(c >> 16) as u8, (c >> 8) as u8, c as u8];
            if rgb.iter().all(|&v| v < NEAR_BLACK) || !used.insert(c) {
                continue;
            }
            mapping.push(rgb);
        }
        Ok(ColorAssignment { mapping, seed })
    }

    pub fn color(&self, label: u32) -> [u8; 3] {
        self.mapping[label as usize]
    }
}

/// Paints every supervoxel with its own random color.
pub fn colorize(s: &SupervoxelLabeling, seed: u64) -> Result<VideoVolume> {
    let colors = ColorAssignment::new(s.region_sizes().len(), seed)?;
    let (w, h, t) = s.dims();
    let voxels = s
        .labels()
        .par_iter()
        .map(|&l| colors.color(l).map(f32::from))
        .collect();
    VideoVolume::from_voxels(w, h, t, voxels)
}

/// Per-frame boundary mask: true where a pixel's label differs from any of
/// its spatial 4-neighbors.
pub fn boundary_mask(s: &SupervoxelLabeling, t: usize) -> Vec<bool> {
    let (w, h) = (s.width(), s.height());
    let labels = s.frame_labels(t);
    let mut mask = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let l = labels[y * w + x];
            let differs = (x > 0 && labels[y * w + x - 1] != l)
                || (x + 1 < w && labels[y * w + x + 1] != l)
                || (y > 0 && labels[(y - 1) * w + x] != l)
                || (y + 1 < h && labels[(y + 1) * w + x] != l);
            mask[y * w + x] = differs;
        }
    }
    mask
}

/// Binary video: white boundary pixels on black.
pub fn render_boundaries(s: &SupervoxelLabeling) -> VideoVolume {
    let (w, h, t) = s.dims();
    let voxels: Vec<Rgb> = (0..t)
        .into_par_iter()
        .flat_map_iter(|z| {
            boundary_mask(s, z)
                .into_iter()
                .map(|b| if b { BOUNDARY } else { [0.0; 3] })
        })
        .collect();
    VideoVolume::from_voxels(w, h, t, voxels).expect("labeling dims are valid")
}
