use serde::{Deserialize, Serialize};

use super::{merge::RegionNode, SupervoxelLabeling};
use crate::video::{Rgb, VideoVolume};

/// Undirected weighted edge between two voxels or two regions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeEdge {
    pub a: u32,
    pub b: u32,
    pub weight: f32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Connectivity {
    /// Spatial 4-neighbors plus the two temporal neighbors.
    #[default]
    Six,
    /// Full 3x3x3 neighborhood.
    TwentySix,
}

impl Connectivity {
    /// Offsets `(dt, dy, dx)` that are lexicographically positive, so every
    /// unordered neighbor pair is produced exactly once.
    pub fn forward_offsets(self) -> Vec<(isize, isize, isize)> {
        match self {
            Connectivity::Six => vec![(0, 0, 1), (0, 1, 0), (1, 0, 0)],
            Connectivity::TwentySix => {
                let mut out = Vec::with_capacity(13);
                for dt in -1..=1isize {
                    for dy in -1..=1isize {
                        for dx in -1..=1isize {
                            if (dt, dy, dx) > (0, 0, 0) {
                                out.push((dt, dy, dx));
                            }
                        }
                    }
                }
                out
            }
        }
    }
}

#[inline]
pub fn color_distance(p: Rgb, q: Rgb) -> f32 {
    let d = [p[0] - q[0], p[1] - q[1], p[2] - q[2]];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

/// One edge per adjacent voxel pair, weighted by Euclidean RGB distance.
pub fn build_voxel_graph(v: &VideoVolume, connectivity: Connectivity) -> Vec<LatticeEdge> {
    let (w, h, t) = (v.width() as isize, v.height() as isize, v.frame_count() as isize);
    let offsets = connectivity.forward_offsets();
    let mut edges = Vec::with_capacity(v.len() * offsets.len());
    let voxels = v.voxels();
    for z in 0..t {
        for y in 0..h {
            for x in 0..w {
                let a = ((z * h + y) * w + x) as usize;
                for &(dt, dy, dx) in &offsets {
                    let (nz, ny, nx) = (z + dt, y + dy, x + dx);
                    if nz < 0 || nz >= t || ny < 0 || ny >= h || nx < 0 || nx >= w {
                        continue;
                    }
                    let b = ((nz * h + ny) * w + nx) as usize;
                    edges.push(LatticeEdge {
                        a: a as u32,
                        b: b as u32,
                        weight: color_distance(voxels[a], voxels[b]),
                    });
                }
            }
        }
    }
    edges
}

/// Relabels edge endpoints through `map` and keeps, per unordered pair of
/// distinct targets, the minimum weight. Output is sorted by `(a, b)` with
/// `a < b`.
pub fn collapse_edges(map: &[u32], edges: &[LatticeEdge]) -> Vec<LatticeEdge> {
    let mut out: Vec<LatticeEdge> = edges
        .iter()
        .filter_map(|e| {
            let (la, lb) = (map[e.a as usize], map[e.b as usize]);
            (la != lb).then(|| LatticeEdge {
                a: la.min(lb),
                b: la.max(lb),
                weight: e.weight,
            })
        })
        .collect();
    out.sort_unstable_by(|x, y| {
        (x.a, x.b)
            .cmp(&(y.a, y.b))
            .then(x.weight.total_cmp(&y.weight))
    });
    out.dedup_by(|later, first| later.a == first.a && later.b == first.b);
    out
}

/// Nodes and edges of the graph whose vertices are the regions of `prev`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionGraph {
    pub nodes: Vec<RegionNode>,
    pub edges: Vec<LatticeEdge>,
}

/// Region adjacency graph: one edge per adjacent region pair, weighted by the
/// minimum voxel edge crossing between them.
pub fn build_region_graph(prev: &SupervoxelLabeling, edges: &[LatticeEdge]) -> RegionGraph {
    RegionGraph {
        nodes: prev.region_nodes(),
        edges: collapse_edges(prev.labels(), edges),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segment::SupervoxelLabeling;
    use rand::{Rng, SeedableRng};
    use std::collections::BTreeMap;

    /// Counts unordered adjacent pairs by checking every voxel pair.
    fn brute_force_pairs(w: usize, h: usize, t: usize, conn: Connectivity) -> usize {
        let coords: Vec<(isize, isize, isize)> = (0..t)
            .flat_map(|z| (0..h).flat_map(move |y| (0..w).map(move |x| (z as isize, y as isize, x as isize))))
            .collect();
        let mut n = 0;
        for i in 0..coords.len() {
            for j in i + 1..coords.len() {
                let (a, b) = (coords[i], coords[j]);
                let d = [(a.0 - b.0).abs(), (a.1 - b.1).abs(), (a.2 - b.2).abs()];
                let adjacent = match conn {
                    Connectivity::Six => d.iter().sum::<isize>() == 1,
                    Connectivity::TwentySix => d.iter().all(|&x| x <= 1),
                };
                n += adjacent as usize;
            }
        }
        n
    }

    #[test]
    fn edge_counts_match_enumeration() {
        let two = VideoVolume::new(1, 1, 2).unwrap();
        assert_eq!(build_voxel_graph(&two, Connectivity::Six).len(), 1);

        let cube = VideoVolume::new(2, 2, 2).unwrap();
        assert_eq!(brute_force_pairs(2, 2, 2, Connectivity::Six), 12);
        assert_eq!(build_voxel_graph(&cube, Connectivity::Six).len(), 12);

        for (w, h, t) in [(3, 2, 4), (1, 5, 3), (4, 4, 1)] {
            let v = VideoVolume::new(w, h, t).unwrap();
            for conn in [Connectivity::Six, Connectivity::TwentySix] {
                assert_eq!(
                    build_voxel_graph(&v, conn).len(),
                    brute_force_pairs(w, h, t, conn),
                    "{w}x{h}x{t} {conn:?}"
                );
            }
        }
    }

    #[test]
    fn constant_volume_has_zero_weights() {
        let v = VideoVolume::filled(3, 3, 3, [10.0, 20.0, 30.0]).unwrap();
        assert!(build_voxel_graph(&v, Connectivity::TwentySix)
            .iter()
            .all(|e| e.weight == 0.0));
    }

    #[test]
    fn weights_are_euclidean_rgb() {
        let mut v = VideoVolume::new(2, 1, 1).unwrap();
        v.set(0, 0, 1, [3.0, 4.0, 12.0]);
        assert_eq!(build_voxel_graph(&v, Connectivity::Six)[0].weight, 13.0);
    }

    #[test]
    fn single_region_has_no_region_edges() {
        let v = VideoVolume::new(2, 2, 2).unwrap();
        let s = SupervoxelLabeling::from_labels(1, 2, 2, 2, vec![0; 8]).unwrap();
        let g = build_region_graph(&s, &build_voxel_graph(&v, Connectivity::Six));
        assert!(g.edges.is_empty());
        assert_eq!(g.nodes.len(), 1);
    }

    #[test]
    fn region_edge_takes_minimum_crossing_weight() {
        let s = SupervoxelLabeling::from_labels(1, 4, 1, 1, vec![0, 0, 1, 1]).unwrap();
        let edges = [
            LatticeEdge { a: 0, b: 2, weight: 3.0 },
            LatticeEdge { a: 1, b: 2, weight: 1.0 },
            LatticeEdge { a: 3, b: 1, weight: 2.0 },
        ];
        let g = build_region_graph(&s, &edges);
        assert_eq!(g.edges, vec![LatticeEdge { a: 0, b: 1, weight: 1.0 }]);
    }

    #[test]
    fn region_graph_matches_exhaustive_scan() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let mut v = VideoVolume::new(3, 3, 2).unwrap();
            for t in 0..2 {
                for y in 0..3 {
                    for x in 0..3 {
                        v.set(t, y, x, [rng.gen_range(0.0..255.0), rng.gen_range(0.0..255.0), 0.0]);
                    }
                }
            }
            let labels: Vec<u32> = (0..18).map(|_| rng.gen_range(0..4)).collect();
            let s = SupervoxelLabeling::from_labels(1, 3, 3, 2, labels.clone()).unwrap();
            let edges = build_voxel_graph(&v, Connectivity::Six);
            let g = build_region_graph(&s, &edges);

            // Oracle: scan every voxel pair directly from coordinates.
            let mut expect: BTreeMap<(u32, u32), f32> = BTreeMap::new();
            for i in 0..18usize {
                for j in 0..18usize {
                    let (ti, yi, xi) = (i / 9, (i / 3) % 3, i % 3);
                    let (tj, yj, xj) = (j / 9, (j / 3) % 3, j % 3);
                    let manhattan = ti.abs_diff(tj) + yi.abs_diff(yj) + xi.abs_diff(xj);
                    if manhattan != 1 || labels[i] >= labels[j] {
                        continue;
                    }
                    let (p, q) = (v.get(ti, yi, xi), v.get(tj, yj, xj));
                    let w = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt();
                    let e = expect.entry((labels[i], labels[j])).or_insert(f32::INFINITY);
                    *e = e.min(w);
                }
            }
            let got: BTreeMap<(u32, u32), f32> = g.edges.iter().map(|e| ((e.a, e.b), e.weight)).collect();
            assert_eq!(got, expect);
        }
    }
}
