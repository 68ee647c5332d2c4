use std::collections::HashMap;

use super::{merge::sort_edges, LatticeEdge, RegionNode, SupervoxelLabeling};
use super::merge::DisjointSets;

/// Total weight of the minimum spanning forest of each region's induced
/// subgraph, summed over regions.
pub fn minimum_spanning_forest_weight(labels: &[u32], edges: &[LatticeEdge]) -> f64 {
    let mut inside: Vec<LatticeEdge> = edges
        .iter()
        .filter(|e| labels[e.a as usize] == labels[e.b as usize])
        .copied()
        .collect();
    sort_edges(&mut inside);
    let mut sets = DisjointSets::new(&vec![RegionNode::VOXEL; labels.len()], None);
    let mut total = 0.0;
    for e in inside {
        let (ra, rb) = (sets.find(e.a), sets.find(e.b));
        if ra != rb {
            sets.union(ra, rb, e.weight);
            total += e.weight as f64;
        }
    }
    total
}

/// `tau * sum_s sum_{e in MST(s)} w(e) + sum_{adjacent s,t} min_{e in <s,t>} w(e)`.
pub fn segmentation_energy(s: &SupervoxelLabeling, edges: &[LatticeEdge], tau: f64) -> f64 {
    let labels = s.labels();
    let tree = minimum_spanning_forest_weight(labels, edges);
    let mut crossing: HashMap<(u32, u32), f32> = HashMap::new();
    for e in edges {
        let (la, lb) = (labels[e.a as usize], labels[e.b as usize]);
        if la != lb {
            let w = crossing.entry((la.min(lb), la.max(lb))).or_insert(e.weight);
            *w = w.min(e.weight);
        }
    }
    let mut boundary: Vec<f64> = crossing.into_values().map(f64::from).collect();
    boundary.sort_by(f64::total_cmp);
    tau * tree + boundary.iter().sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_edges(weights: &[f32]) -> Vec<LatticeEdge> {
        weights
            .iter()
            .enumerate()
            .map(|(i, &w)| LatticeEdge {
                a: i as u32,
                b: i as u32 + 1,
                weight: w,
            })
            .collect()
    }

    #[test]
    fn singletons_only_pay_boundary_terms() {
        let edges = path_edges(&[1.0, 2.0, 4.0]);
        let s = SupervoxelLabeling::from_labels(1, 4, 1, 1, vec![0, 1, 2, 3]).unwrap();
        assert_eq!(segmentation_energy(&s, &edges, 3.0), 7.0);
    }

    #[test]
    fn single_region_pays_tree_term() {
        let edges = path_edges(&[5.0]);
        let s = SupervoxelLabeling::from_labels(1, 2, 1, 1, vec![0, 0]).unwrap();
        assert_eq!(segmentation_energy(&s, &edges, 2.0), 10.0);
    }
}
