//! Felzenszwalb-Huttenlocher merging over an arbitrary node set.
//!
//! Nodes carry a voxel count and an internal difference (the largest MST
//! edge accumulated inside them so far), so the same routine drives both the
//! voxel level and every region level of the hierarchy.

use std::collections::{BTreeSet, HashMap};

use super::LatticeEdge;
use crate::error::{Error, Result};

/// A merge candidate: a voxel, or a region from the level below.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionNode {
    pub size: u64,
    pub internal: f32,
}

impl RegionNode {
    pub const VOXEL: RegionNode = RegionNode {
        size: 1,
        internal: 0.0,
    };
}

/// Result of one merging round. Components are numbered in order of their
/// lowest node index.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeOutcome {
    pub component: Vec<u32>,
    pub sizes: Vec<u64>,
    pub internal: Vec<f32>,
}

impl MergeOutcome {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }
}

/// Disjoint sets with union by size and path halving. Each root carries the
/// component's voxel count, internal difference and lock flag.
#[derive(Debug, Clone)]
pub struct DisjointSets {
    parent: Vec<u32>,
    size: Vec<u64>,
    internal: Vec<f32>,
    locked: Vec<bool>,
}

impl DisjointSets {
    pub fn new(nodes: &[RegionNode], locked: Option<&[bool]>) -> Self {
        DisjointSets {
            parent: (0..nodes.len() as u32).collect(),
            size: nodes.iter().map(|n| n.size).collect(),
            internal: nodes.iter().map(|n| n.internal).collect(),
            locked: locked
                .map(<[bool]>::to_vec)
                .unwrap_or_else(|| vec![false; nodes.len()]),
        }
    }

    pub fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    pub fn size(&self, root: u32) -> u64 {
        self.size[root as usize]
    }

    pub fn internal(&self, root: u32) -> f32 {
        self.internal[root as usize]
    }

    pub fn locked(&self, root: u32) -> bool {
        self.locked[root as usize]
    }

    /// Joins two roots across an edge of weight `w`; returns the new root.
    pub fn union(&mut self, a: u32, b: u32, w: f32) -> u32 {
        let (big, small) = if self.size[a as usize] >= self.size[b as usize] {
            (a, b)
        } else {
            (b, a)
        };
        self.parent[small as usize] = big;
        self.size[big as usize] += self.size[small as usize];
        self.internal[big as usize] = self.internal[a as usize]
            .max(self.internal[b as usize])
            .max(w);
        self.locked[big as usize] |= self.locked[small as usize];
        big
    }

    fn outcome(&mut self) -> MergeOutcome {
        let n = self.parent.len();
        let mut root_label: HashMap<u32, u32> = HashMap::new();
        let mut component = Vec::with_capacity(n);
        let mut sizes = Vec::new();
        let mut internal = Vec::new();
        for i in 0..n as u32 {
            let r = self.find(i);
            let next = root_label.len() as u32;
            let label = *root_label.entry(r).or_insert_with(|| {
                sizes.push(self.size[r as usize]);
                internal.push(self.internal[r as usize]);
                next
            });
            component.push(label);
        }
        MergeOutcome {
            component,
            sizes,
            internal,
        }
    }
}

/// Sorts edges by `(weight, a, b)`.
pub fn sort_edges(edges: &mut [LatticeEdge]) {
    edges.sort_by(|x, y| {
        x.weight
            .total_cmp(&y.weight)
            .then(x.a.cmp(&y.a))
            .then(x.b.cmp(&y.b))
    });
}

/// The merge predicate: `w <= min(Int(C1) + k/|C1|, Int(C2) + k/|C2|)`.
#[inline]
pub fn fh_predicate(w: f32, int1: f32, size1: u64, int2: f32, size2: u64, tau: f64) -> bool {
    let m1 = int1 as f64 + tau / size1 as f64;
    let m2 = int2 as f64 + tau / size2 as f64;
    (w as f64) <= m1.min(m2)
}

/// One round of graph-based merging followed by minimum-size enforcement.
pub fn fh_merge(
    nodes: &[RegionNode],
    edges: &[LatticeEdge],
    tau: f64,
    min_size: u64,
) -> Result<MergeOutcome> {
    fh_merge_constrained(nodes, edges, tau, min_size, None)
}

/// As [`fh_merge`], but two components that both contain a locked node are
/// never joined.
pub fn fh_merge_constrained(
    nodes: &[RegionNode],
    edges: &[LatticeEdge],
    tau: f64,
    min_size: u64,
    locked: Option<&[bool]>,
) -> Result<MergeOutcome> {
    if nodes.is_empty() {
        return Err(Error::Param("cannot merge an empty node set".into()));
    }
    if !(tau >= 0.0) {
        return Err(Error::Param(format!("threshold constant must be >= 0, got {tau}")));
    }
    let n = nodes.len() as u32;
    if let Some(e) = edges.iter().find(|e| e.a >= n || e.b >= n) {
        return Err(Error::Param(format!(
            "edge ({}, {}) references a node outside 0..{n}",
            e.a, e.b
        )));
    }
    if let Some(l) = locked {
        if l.len() != nodes.len() {
            return Err(Error::Param("lock mask length differs from node count".into()));
        }
    }

    let mut sorted = edges.to_vec();
    sort_edges(&mut sorted);

    let mut sets = DisjointSets::new(nodes, locked);
    for e in &sorted {
        let (ra, rb) = (sets.find(e.a), sets.find(e.b));
        if ra == rb || (sets.locked(ra) && sets.locked(rb)) {
            continue;
        }
        if fh_predicate(
            e.weight,
            sets.internal(ra),
            sets.size(ra),
            sets.internal(rb),
            sets.size(rb),
            tau,
        ) {
            sets.union(ra, rb, e.weight);
        }
    }

    if min_size > 1 {
        enforce_min_size(&mut sets, &sorted, min_size);
    }
    Ok(sets.outcome())
}

/// Merges every component smaller than `min_size` across its cheapest
/// outgoing edge, smallest component first, until none remain (or the small
/// component has no admissible neighbor).
fn enforce_min_size(sets: &mut DisjointSets, edges: &[LatticeEdge], min_size: u64) {
    let mut adj: HashMap<u32, HashMap<u32, f32>> = HashMap::new();
    for e in edges {
        let (ra, rb) = (sets.find(e.a), sets.find(e.b));
        if ra == rb {
            continue;
        }
        for (x, y) in [(ra, rb), (rb, ra)] {
            let w = adj.entry(x).or_default().entry(y).or_insert(e.weight);
            *w = w.min(e.weight);
        }
    }

    let mut queue: BTreeSet<(u64, u32)> = BTreeSet::new();
    let n = sets.parent.len() as u32;
    for i in 0..n {
        if sets.find(i) == i && sets.size(i) < min_size {
            queue.insert((sets.size(i), i));
        }
    }

    while let Some((size, r)) = queue.pop_first() {
        if sets.find(r) != r || sets.size(r) != size {
            continue;
        }
        let r_locked = sets.locked(r);
        let best = adj.get(&r).and_then(|nbrs| {
            nbrs.iter()
                .filter(|(&m, _)| !(r_locked && sets.locked(m)))
                .min_by(|(ma, wa), (mb, wb)| wa.total_cmp(wb).then(ma.cmp(mb)))
                .map(|(&m, &w)| (m, w))
        });
        let Some((m, _)) = best else { continue };

        // A forced join does not raise the internal difference.
        let root = sets.union(r, m, 0.0);
        let other = if root == r { m } else { r };
        let mut merged = adj.remove(&root).unwrap_or_default();
        for (k, v) in adj.remove(&other).unwrap_or_default() {
            let e = merged.entry(k).or_insert(v);
            *e = e.min(v);
        }
        merged.remove(&root);
        merged.remove(&other);
        for (&k, &v) in &merged {
            let nbr = adj.entry(k).or_default();
            nbr.remove(&other);
            let e = nbr.entry(root).or_insert(v);
            *e = e.min(v);
        }
        adj.insert(root, merged);

        if sets.size(root) < min_size {
            queue.insert((sets.size(root), root));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge(a: u32, b: u32, w: f32) -> LatticeEdge {
        LatticeEdge { a, b, weight: w }
    }

    /// Two 4-voxel constant blocks (paths 0-1-2-3 and 4-5-6-7) joined by
    /// one edge of weight 100.
    fn two_blocks() -> (Vec<RegionNode>, Vec<LatticeEdge>) {
        let nodes = vec![RegionNode::VOXEL; 8];
        let mut edges = vec![];
        for base in [0, 4] {
            for i in 0..3 {
                edges.push(edge(base + i, base + i + 1, 0.0));
            }
        }
        edges.push(edge(3, 4, 100.0));
        (nodes, edges)
    }

    #[test]
    fn zero_weights_merge_everything() {
        let nodes = vec![RegionNode::VOXEL; 5];
        let edges: Vec<_> = (0..4).map(|i| edge(i, i + 1, 0.0)).collect();
        let out = fh_merge(&nodes, &edges, 0.2, 1).unwrap();
        assert_eq!(out.count(), 1);
        assert_eq!(out.sizes, vec![5]);
    }

    #[test]
    fn heavy_edge_separates_blocks() {
        // 100 > 0 + 0.2 / 4
        let (nodes, edges) = two_blocks();
        let out = fh_merge(&nodes, &edges, 0.2, 1).unwrap();
        assert_eq!(out.count(), 2);
        assert_eq!(out.component, vec![0, 0, 0, 0, 1, 1, 1, 1]);
    }

    #[test]
    fn size_enforcement_merges_small_blocks() {
        let (nodes, edges) = two_blocks();
        let out = fh_merge(&nodes, &edges, 0.2, 5).unwrap();
        assert_eq!(out.count(), 1);
        assert_eq!(out.internal, vec![0.0]);
    }

    #[test]
    fn empty_node_set_is_an_error() {
        assert!(matches!(fh_merge(&[], &[], 1.0, 1), Err(Error::Param(_))));
    }

    #[test]
    fn out_of_range_edge_is_an_error() {
        let nodes = vec![RegionNode::VOXEL; 2];
        assert!(fh_merge(&nodes, &[edge(0, 2, 1.0)], 1.0, 1).is_err());
    }

    #[test]
    fn smallest_component_merges_first_along_cheapest_edge() {
        // Components after FH (tau = 0): {0}, {1,2}, {3,4,5}. Node 0 is the
        // smallest and its cheapest edge goes to {1,2}.
        let nodes = vec![RegionNode::VOXEL; 6];
        let edges = vec![
            edge(0, 1, 5.0),
            edge(0, 3, 7.0),
            edge(1, 2, 0.0),
            edge(2, 3, 9.0),
            edge(3, 4, 0.0),
            edge(4, 5, 0.0),
        ];
        let out = fh_merge(&nodes, &edges, 0.0, 3).unwrap();
        assert_eq!(out.component, vec![0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn locked_components_never_join() {
        let nodes = vec![RegionNode::VOXEL; 3];
        let edges = vec![edge(0, 1, 0.0), edge(1, 2, 0.0)];
        let locked = [true, false, true];
        let out = fh_merge_constrained(&nodes, &edges, 1.0, 1, Some(&locked)).unwrap();
        assert_eq!(out.component, vec![0, 0, 1]);

        // A small locked component may still absorb an unlocked neighbor,
        // but never another locked one.
        let out = fh_merge_constrained(&nodes, &[edge(0, 2, 0.0)], 0.0, 2, Some(&locked)).unwrap();
        assert_eq!(out.count(), 3);
    }

    #[test]
    fn isolated_small_component_survives() {
        let nodes = vec![RegionNode::VOXEL; 3];
        let out = fh_merge(&nodes, &[edge(0, 1, 0.0)], 1.0, 10).unwrap();
        assert_eq!(out.count(), 2);
    }
}
