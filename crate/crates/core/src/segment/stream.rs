//! Windowed segmentation with a one-frame seam.
//!
//! Each window of `stream_range` new frames is segmented together with the
//! last frame of the previous window. Seam voxels enter the graph collapsed
//! into their committed regions, which are locked: new voxels may join a
//! committed region, but two committed regions never merge and committed
//! voxels never change label.

use std::collections::BTreeMap;

use super::{
    build_voxel_graph, collapse_edges, fh_merge_constrained, Hierarchy, LatticeEdge, LevelStats,
    RegionNode, SegmentationParams,
};
use crate::error::{Error, Result};
use crate::video::{gaussian_kernel, smooth_frame, Frame, VideoVolume};

pub fn stream_segment_volume(v: &VideoVolume, p: &SegmentationParams) -> Result<Hierarchy> {
    stream_segment(v.frames().map(Ok), p)
}

/// Segments a frame stream window by window.
pub fn stream_segment<I>(frames: I, p: &SegmentationParams) -> Result<Hierarchy>
where
    I: IntoIterator<Item = Result<Frame>>,
{
    p.validate()?;
    let kernel = gaussian_kernel(p.sigma);
    let mut state: Option<StreamState> = None;
    let mut window: Vec<Frame> = Vec::with_capacity(p.stream_range);

    for (t, frame) in frames.into_iter().enumerate() {
        let frame = frame?;
        let st = state.get_or_insert_with(|| StreamState::new(p, frame.width, frame.height));
        if (frame.width, frame.height) != (st.width, st.height) {
            return Err(Error::Ingest(format!(
                "frame {t} is {}x{}, expected {}x{}",
                frame.width, frame.height, st.width, st.height
            )));
        }
        window.push(smooth_frame(&frame, &kernel));
        if window.len() == p.stream_range {
            st.process_window(std::mem::take(&mut window))?;
        }
    }

    let mut st = state.ok_or_else(|| Error::Ingest("frame stream is empty".into()))?;
    if !window.is_empty() {
        st.process_window(window)?;
    }
    Ok(st.finish())
}

struct Seam {
    frame: Frame,
    labels: Vec<u32>,
}

struct StreamState {
    params: SegmentationParams,
    width: usize,
    height: usize,
    frames: usize,
    base: Vec<u32>,
    levels: Vec<LevelStats>,
    parents: Vec<Vec<u32>>,
    seam: Option<Seam>,
}

/// Merge candidate for one level of one window.
struct Node {
    region: RegionNode,
    /// Label of the committed region this node stands for, if any.
    committed: Option<u32>,
    /// For a node that is a region created in this window one level down,
    /// that region's label.
    fresh: Option<u32>,
}

impl StreamState {
    fn new(p: &SegmentationParams, width: usize, height: usize) -> Self {
        StreamState {
            params: *p,
            width,
            height,
            frames: 0,
            base: Vec::new(),
            levels: (0..p.hie_num)
                .map(|_| LevelStats {
                    sizes: Vec::new(),
                    internal: Vec::new(),
                })
                .collect(),
            parents: vec![Vec::new(); p.hie_num.saturating_sub(1)],
            seam: None,
        }
    }

    fn process_window(&mut self, window: Vec<Frame>) -> Result<()> {
        let plane = self.width * self.height;
        let new_frames = window.len();
        let seam_voxels = if self.seam.is_some() { plane } else { 0 };

        let mut stack = Vec::with_capacity(new_frames + 1);
        if let Some(seam) = &self.seam {
            stack.push(seam.frame.clone());
        }
        let last_frame = window.last().cloned().expect("window is non-empty");
        stack.extend(window);
        let volume = VideoVolume::from_frames(stack)?;
        let voxel_edges = build_voxel_graph(&volume, self.params.connectivity);

        // Level-1 nodes: committed seam regions first, then one per new voxel.
        let mut nodes: Vec<Node> = Vec::new();
        let mut voxel_node: Vec<u32> = Vec::with_capacity(volume.len());
        if let Some(seam) = &self.seam {
            let mut seen: BTreeMap<u32, u32> = BTreeMap::new();
            for &l in &seam.labels {
                seen.entry(l).or_insert(0);
            }
            for (i, (l, slot)) in seen.iter_mut().enumerate() {
                *slot = i as u32;
                nodes.push(Node {
                    region: RegionNode {
                        size: self.levels[0].sizes[*l as usize],
                        internal: self.levels[0].internal[*l as usize],
                    },
                    committed: Some(*l),
                    fresh: None,
                });
            }
            voxel_node.extend(seam.labels.iter().map(|l| seen[l]));
        }
        let first_new = nodes.len() as u32;
        voxel_node.extend((0..(volume.len() - seam_voxels) as u32).map(|j| first_new + j));
        nodes.extend((0..volume.len() - seam_voxels).map(|_| Node {
            region: RegionNode::VOXEL,
            committed: None,
            fresh: None,
        }));
        let mut edges: Vec<LatticeEdge> = voxel_edges
            .iter()
            .filter(|e| (e.a as usize) >= seam_voxels || (e.b as usize) >= seam_voxels)
            .map(|e| LatticeEdge {
                a: voxel_node[e.a as usize],
                b: voxel_node[e.b as usize],
                weight: e.weight,
            })
            .collect();
        drop(voxel_edges);

        let depth = self.params.hie_num;
        for h in 1..=depth {
            let regions: Vec<RegionNode> = nodes.iter().map(|n| n.region).collect();
            let locked: Vec<bool> = nodes.iter().map(|n| n.committed.is_some()).collect();
            let out = fh_merge_constrained(
                &regions,
                &edges,
                self.params.tau_constant(h),
                self.params.min_size,
                Some(&locked),
            )?;

            // Per component: the committed label it joined and that region's
            // size before this window.
            let stats = &mut self.levels[h - 1];
            let mut joined: Vec<Option<(u32, u64)>> = vec![None; out.count()];
            for (node, &c) in nodes.iter().zip(&out.component) {
                if let Some(l) = node.committed {
                    joined[c as usize] = Some((l, stats.sizes[l as usize]));
                }
            }
            let comp_label: Vec<u32> = joined
                .iter()
                .enumerate()
                .map(|(c, j)| match j {
                    Some((l, _)) => {
                        stats.sizes[*l as usize] = out.sizes[c];
                        stats.internal[*l as usize] = out.internal[c];
                        *l
                    }
                    None => {
                        stats.sizes.push(out.sizes[c]);
                        stats.internal.push(out.internal[c]);
                        (stats.sizes.len() - 1) as u32
                    }
                })
                .collect();

            if h == 1 {
                self.base.extend(
                    voxel_node[seam_voxels..]
                        .iter()
                        .map(|&n| comp_label[out.component[n as usize] as usize]),
                );
            } else {
                // Nodes that were new regions one level down get their parent.
                let below = h - 2;
                let n_below = self.levels[below].sizes.len();
                self.parents[below].resize(n_below, u32::MAX);
                for (node, &c) in nodes.iter().zip(&out.component) {
                    if let Some(child) = node.fresh {
                        self.parents[below][child as usize] = comp_label[c as usize];
                    }
                }
            }

            if h == depth {
                break;
            }

            // Next level: committed components collapse into their committed
            // parent, new components become new nodes.
            let mut next: Vec<Node> = Vec::new();
            let mut parent_node: BTreeMap<u32, u32> = BTreeMap::new();
            let mut comp_next = vec![0u32; out.count()];
            for (c, j) in joined.iter().enumerate() {
                if let Some((l, _)) = j {
                    let p = self.parents[h - 1][*l as usize];
                    parent_node.entry(p).or_insert(0);
                    comp_next[c] = p;
                }
            }
            for (i, (p, slot)) in parent_node.iter_mut().enumerate() {
                *slot = i as u32;
                next.push(Node {
                    region: RegionNode {
                        size: self.levels[h].sizes[*p as usize],
                        internal: self.levels[h].internal[*p as usize],
                    },
                    committed: Some(*p),
                    fresh: None,
                });
            }
            for (c, j) in joined.iter().enumerate() {
                match j {
                    Some((_, base_size)) => {
                        let slot = parent_node[&comp_next[c]];
                        comp_next[c] = slot;
                        let node = &mut next[slot as usize].region;
                        node.size += out.sizes[c] - base_size;
                        node.internal = node.internal.max(out.internal[c]);
                    }
                    None => {
                        comp_next[c] = next.len() as u32;
                        next.push(Node {
                            region: RegionNode {
                                size: out.sizes[c],
                                internal: out.internal[c],
                            },
                            committed: None,
                            fresh: Some(comp_label[c]),
                        });
                    }
                }
            }
            let node_next: Vec<u32> = out.component.iter().map(|&c| comp_next[c as usize]).collect();
            edges = collapse_edges(&node_next, &edges);
            nodes = next;
        }

        let labels = self.base[self.base.len() - plane..].to_vec();
        self.seam = Some(Seam {
            frame: last_frame,
            labels,
        });
        self.frames += new_frames;
        Ok(())
    }

    fn finish(self) -> Hierarchy {
        Hierarchy {
            width: self.width,
            height: self.height,
            frame_count: self.frames,
            base: self.base,
            levels: self.levels,
            parents: self.parents,
        }
    }
}
