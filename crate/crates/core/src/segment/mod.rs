//! Hierarchical supervoxel segmentation.
//!
//! Level 1 merges voxels of the (smoothed) lattice with the graph-based
//! criterion; every further level merges the regions of the level below over
//! their region adjacency graph, with a threshold constant that grows with
//! the level index. [`build_hierarchy`] processes the whole volume at once,
//! [`stream_segment`] walks it in windows of `stream_range` frames.

mod energy;
mod graph;
mod labelfile;
mod merge;
mod stream;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use energy::{minimum_spanning_forest_weight, segmentation_energy};
pub use graph::{
    build_region_graph, build_voxel_graph, collapse_edges, color_distance, Connectivity,
    LatticeEdge, RegionGraph,
};
pub use labelfile::{read_label_map, write_hierarchy, write_label_map, LABEL_MAGIC};
pub use merge::{
    fh_merge, fh_merge_constrained, fh_predicate, sort_edges, DisjointSets, MergeOutcome,
    RegionNode,
};
pub use stream::{stream_segment, stream_segment_volume};

use crate::error::{Error, Result};
use crate::video::{gaussian_smooth, VideoVolume};

/// Parameters of the hierarchical segmentation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentationParams {
    /// Threshold constant for level 1.
    pub c: f64,
    /// Threshold constant for levels >= 2, multiplied by the level index.
    pub c_reg: f64,
    /// Minimum region size in voxels.
    pub min_size: u64,
    /// Spatial pre-smoothing in pixels.
    pub sigma: f64,
    /// Frames per streaming window.
    pub stream_range: usize,
    /// Number of hierarchy levels.
    pub hie_num: usize,
    pub connectivity: Connectivity,
}

impl Default for SegmentationParams {
    fn default() -> Self {
        SegmentationParams {
            c: 0.2,
            c_reg: 10.0,
            min_size: 20,
            sigma: 0.4,
            stream_range: 10,
            hie_num: 30,
            connectivity: Connectivity::Six,
        }
    }
}

impl SegmentationParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Param(format!("{name} must be positive, got {v}")))
            }
        };
        positive("c", self.c)?;
        positive("c_reg", self.c_reg)?;
        positive("sigma", self.sigma)?;
        if self.min_size == 0 {
            return Err(Error::Param("min_size must be positive".into()));
        }
        if self.stream_range == 0 {
            return Err(Error::Param("stream_range must be positive".into()));
        }
        if self.hie_num == 0 {
            return Err(Error::Param("hie_num must be at least 1".into()));
        }
        Ok(())
    }

    /// Threshold constant `k` in `tau(C) = k / |C|` for a 1-based level.
    pub fn tau_constant(&self, level: usize) -> f64 {
        if level <= 1 {
            self.c
        } else {
            self.c_reg * level as f64
        }
    }
}

/// One complete partition of the lattice. Labels are indices into
/// `region_sizes`.
#[derive(Debug, Clone, PartialEq)]
pub struct SupervoxelLabeling {
    level: usize,
    width: usize,
    height: usize,
    frame_count: usize,
    labels: Vec<u32>,
    region_sizes: Vec<u64>,
    internal: Vec<f32>,
}

impl SupervoxelLabeling {
    /// Builds a labeling from raw per-voxel labels, counting region sizes.
    /// Internal differences are unknown and set to zero.
    pub fn from_labels(
        level: usize,
        width: usize,
        height: usize,
        frame_count: usize,
        labels: Vec<u32>,
    ) -> Result<Self> {
        if labels.len() != width * height * frame_count || labels.is_empty() {
            return Err(Error::Param(format!(
                "label count {} does not match {width}x{height}x{frame_count}",
                labels.len()
            )));
        }
        let n = labels.iter().copied().max().unwrap_or(0) as usize + 1;
        let mut region_sizes = vec![0u64; n];
        for &l in &labels {
            region_sizes[l as usize] += 1;
        }
        Ok(SupervoxelLabeling {
            level,
            width,
            height,
            frame_count,
            labels,
            region_sizes,
            internal: vec![0.0; n],
        })
    }

    pub(crate) fn from_parts(
        level: usize,
        dims: (usize, usize, usize),
        labels: Vec<u32>,
        region_sizes: Vec<u64>,
        internal: Vec<f32>,
    ) -> Self {
        SupervoxelLabeling {
            level,
            width: dims.0,
            height: dims.1,
            frame_count: dims.2,
            labels,
            region_sizes,
            internal,
        }
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn frame_count(&self) -> usize {
        self.frame_count
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.frame_count)
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn frame_labels(&self, t: usize) -> &[u32] {
        let n = self.width * self.height;
        &self.labels[t * n..(t + 1) * n]
    }

    #[inline]
    pub fn label_at(&self, t: usize, y: usize, x: usize) -> u32 {
        self.labels[(t * self.height + y) * self.width + x]
    }

    /// Voxel count per label id.
    pub fn region_sizes(&self) -> &[u64] {
        &self.region_sizes
    }

    /// Largest spanning-tree edge accumulated inside each region while
    /// merging. Zero for labelings built with [`Self::from_labels`].
    pub fn internal_differences(&self) -> &[f32] {
        &self.internal
    }

    /// Number of non-empty regions.
    pub fn region_count(&self) -> usize {
        self.region_sizes.iter().filter(|&&s| s > 0).count()
    }

    pub fn region_nodes(&self) -> Vec<RegionNode> {
        self.region_sizes
            .iter()
            .zip(&self.internal)
            .map(|(&size, &internal)| RegionNode { size, internal })
            .collect()
    }
}

/// Named hierarchy levels used for the study videos.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LevelPreset {
    Fine,
    Medium,
    Coarse,
}

impl LevelPreset {
    pub const ALL: [LevelPreset; 3] = [LevelPreset::Fine, LevelPreset::Medium, LevelPreset::Coarse];

    /// 1-based hierarchy level.
    pub fn level(self) -> usize {
        match self {
            LevelPreset::Fine => 8,
            LevelPreset::Medium => 16,
            LevelPreset::Coarse => 24,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LevelPreset::Fine => "fine",
            LevelPreset::Medium => "medium",
            LevelPreset::Coarse => "coarse",
        }
    }
}

impl fmt::Display for LevelPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LevelPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fine" => Ok(LevelPreset::Fine),
            "medium" => Ok(LevelPreset::Medium),
            "coarse" => Ok(LevelPreset::Coarse),
            other => Err(Error::Param(format!("unknown level preset {other:?}"))),
        }
    }
}

/// Level selector for [`extract_level`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelSelect {
    Preset(LevelPreset),
    Index(usize),
}

impl From<LevelPreset> for LevelSelect {
    fn from(p: LevelPreset) -> Self {
        LevelSelect::Preset(p)
    }
}

impl From<usize> for LevelSelect {
    fn from(i: usize) -> Self {
        LevelSelect::Index(i)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct LevelStats {
    sizes: Vec<u64>,
    internal: Vec<f32>,
}

/// A stack of nested labelings. Only level 1 is stored per voxel; higher
/// levels are reached through the parent maps.
#[derive(Debug, Clone, PartialEq)]
pub struct Hierarchy {
    width: usize,
    height: usize,
    frame_count: usize,
    base: Vec<u32>,
    levels: Vec<LevelStats>,
    parents: Vec<Vec<u32>>,
}

impl Hierarchy {
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.frame_count)
    }

    /// Region counts for levels `1..=depth`.
    pub fn counts(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.sizes.len()).collect()
    }

    /// Map from level-`h` labels to level-`h + 1` labels (1-based `h`).
    pub fn parent_map(&self, h: usize) -> Option<&[u32]> {
        h.checked_sub(1)
            .and_then(|i| self.parents.get(i))
            .map(Vec::as_slice)
    }

    /// Materializes the per-voxel labeling of 1-based level `h`.
    pub fn level(&self, h: usize) -> Result<SupervoxelLabeling> {
        if h == 0 || h > self.depth() {
            return Err(Error::LevelRange {
                requested: h,
                depth: self.depth(),
            });
        }
        let mut labels = self.base.clone();
        for map in &self.parents[..h - 1] {
            for l in &mut labels {
                *l = map[*l as usize];
            }
        }
        let stats = &self.levels[h - 1];
        Ok(SupervoxelLabeling::from_parts(
            h,
            self.dims(),
            labels,
            stats.sizes.clone(),
            stats.internal.clone(),
        ))
    }

    pub fn levels(&self) -> impl Iterator<Item = SupervoxelLabeling> + '_ {
        (1..=self.depth()).map(move |h| self.level(h).expect("level within depth"))
    }
}

/// Picks a level by preset (fine 8, medium 16, coarse 24) or explicit index.
pub fn extract_level(h: &Hierarchy, which: impl Into<LevelSelect>) -> Result<SupervoxelLabeling> {
    let level = match which.into() {
        LevelSelect::Preset(p) => p.level(),
        LevelSelect::Index(i) => i,
    };
    h.level(level)
}

/// Batch segmentation of the whole volume.
pub fn build_hierarchy(v: &VideoVolume, p: &SegmentationParams) -> Result<Hierarchy> {
    p.validate()?;
    let smoothed = gaussian_smooth(v, p.sigma)?;
    let voxel_edges = build_voxel_graph(&smoothed, p.connectivity);
    let dims = (v.width(), v.height(), v.frame_count());

    let voxels = vec![RegionNode::VOXEL; v.len()];
    let first = fh_merge(&voxels, &voxel_edges, p.tau_constant(1), p.min_size)?;
    let level1 = SupervoxelLabeling::from_parts(
        1,
        dims,
        first.component.clone(),
        first.sizes.clone(),
        first.internal.clone(),
    );

    let mut levels = vec![LevelStats {
        sizes: first.sizes,
        internal: first.internal,
    }];
    let mut parents = Vec::with_capacity(p.hie_num.saturating_sub(1));
    let mut graph = build_region_graph(&level1, &voxel_edges);
    for h in 2..=p.hie_num {
        let out = fh_merge(&graph.nodes, &graph.edges, p.tau_constant(h), p.min_size)?;
        graph = RegionGraph {
            nodes: out
                .sizes
                .iter()
                .zip(&out.internal)
                .map(|(&size, &internal)| RegionNode { size, internal })
                .collect(),
            edges: collapse_edges(&out.component, &graph.edges),
        };
        parents.push(out.component);
        levels.push(LevelStats {
            sizes: out.sizes,
            internal: out.internal,
        });
    }

    Ok(Hierarchy {
        width: dims.0,
        height: dims.1,
        frame_count: dims.2,
        base: level1.labels,
        levels,
        parents,
    })
}

#[cfg(test)]
mod tests;
