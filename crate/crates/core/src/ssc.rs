//! Supervoxel shape context: per-frame log-polar histograms of supervoxel
//! boundary pixels around the flow center of mass.

use std::f64::consts::TAU;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motion::{compute_flow, flow_center_of_mass, FlowField, ReferencePoint};
use crate::render::boundary_mask;
use crate::segment::{build_hierarchy, extract_level, LevelSelect, SegmentationParams, SupervoxelLabeling};
use crate::video::VideoVolume;

pub const RADIAL_BINS: usize = 5;
pub const ANGULAR_BINS: usize = 12;
pub const SSC_BINS: usize = RADIAL_BINS * ANGULAR_BINS;
/// Ratio between the outer radius and the inner ring edge.
pub const RADIAL_SPAN: f64 = 16.0;
pub const DESCRIPTOR_MAGIC: &[u8; 4] = b"SVXD";

/// Pixel position, `x` to the right and `y` down.
pub type Point = (f64, f64);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SscFrameHistogram {
    pub frame_index: usize,
    pub reference: ReferencePoint,
    /// Raw counts, `radial * ANGULAR_BINS + angular`.
    pub counts: Vec<u32>,
}

impl SscFrameHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    /// L1-normalized bins; all zero when the frame has no points.
    pub fn normalized(&self) -> Vec<f64> {
        let total = self.total();
        if total == 0 {
            return vec![0.0; SSC_BINS];
        }
        self.counts.iter().map(|&c| c as f64 / total as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SscDescriptor {
    pub per_frame: Vec<SscFrameHistogram>,
    pub aggregate: Vec<f64>,
}

/// Outer edge of every ring, innermost first. Ring 0 also takes everything
/// inside `r_max / 16`.
pub fn ring_edges(r_max: f64) -> [f64; RADIAL_BINS] {
    std::array::from_fn(|i| r_max * RADIAL_SPAN.powf((i as f64 + 1.0 - RADIAL_BINS as f64) / RADIAL_BINS as f64))
}

/// `(radial, angular)` bin of a point, or `None` past `r_max`.
pub fn bin_of(p: Point, center: Point, r_max: f64) -> Option<(usize, usize)> {
    let (dx, dy) = (p.0 - center.0, p.1 - center.1);
    let d = dx.hypot(dy);
    if d > r_max {
        return None;
    }
    let radial = ring_edges(r_max)
        .iter()
        .position(|&edge| d <= edge)
        .unwrap_or(RADIAL_BINS - 1);
    // Counterclockwise as seen on screen, so image y is flipped.
    let theta = (-dy).atan2(dx).rem_euclid(TAU);
    let angular = ((theta / (TAU / ANGULAR_BINS as f64)) as usize).min(ANGULAR_BINS - 1);
    Some((radial, angular))
}

pub fn boundary_points(s: &SupervoxelLabeling, frame_index: usize) -> Vec<Point> {
    let w = s.width();
    boundary_mask(s, frame_index)
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| ((i % w) as f64, (i / w) as f64))
        .collect()
}

pub fn log_polar_histogram(
    points: &[Point],
    center: ReferencePoint,
    r_max: f64,
) -> Result<SscFrameHistogram> {
    if !(r_max > 0.0) {
        return Err(Error::Param(format!("r_max must be positive, got {r_max}")));
    }
    let mut counts = vec![0u32; SSC_BINS];
    for &p in points {
        if let Some((r, a)) = bin_of(p, (center.x, center.y), r_max) {
            counts[r * ANGULAR_BINS + a] += 1;
        }
    }
    Ok(SscFrameHistogram {
        frame_index: center.frame_index,
        reference: center,
        counts,
    })
}

/// Half the frame diagonal.
pub fn default_r_max(width: usize, height: usize) -> f64 {
    (width as f64).hypot(height as f64) / 2.0
}

pub fn ssc_descriptor(s: &SupervoxelLabeling, f: &FlowField) -> Result<SscDescriptor> {
    if (f.width, f.height, f.frame_count()) != s.dims() {
        return Err(Error::Param(format!(
            "flow is {}x{}x{} but labeling is {:?}",
            f.width,
            f.height,
            f.frame_count(),
            s.dims()
        )));
    }
    let r_max = default_r_max(s.width(), s.height());
    let per_frame = (0..s.frame_count())
        .into_par_iter()
        .map(|t| log_polar_histogram(&boundary_points(s, t), flow_center_of_mass(f, t)?, r_max))
        .collect::<Result<Vec<_>>>()?;
    let aggregate = aggregate(&per_frame);
    Ok(SscDescriptor { per_frame, aggregate })
}

/// Mean of the normalized histograms of frames that have boundary points.
pub fn aggregate(per_frame: &[SscFrameHistogram]) -> Vec<f64> {
    let mut sum = vec![0.0; SSC_BINS];
    let mut n = 0usize;
    for h in per_frame.iter().filter(|h| h.total() > 0) {
        for (s, v) in sum.iter_mut().zip(h.normalized()) {
            *s += v;
        }
        n += 1;
    }
    if n > 0 {
        sum.iter_mut().for_each(|s| *s /= n as f64);
    }
    sum
}

/// Segments `v` once, computes its flow once and returns one descriptor per
/// requested level.
pub fn video_ssc(
    v: &VideoVolume,
    p: &SegmentationParams,
    levels: &[LevelSelect],
) -> Result<Vec<SscDescriptor>> {
    let hierarchy = build_hierarchy(v, p)?;
    let flow = compute_flow(v)?;
    levels
        .iter()
        .map(|&l| ssc_descriptor(&extract_level(&hierarchy, l)?, &flow))
        .collect()
}

/// `SVXD`: magic, frame count as little-endian `u32`, 60 `f32` normalized
/// bins per frame, then the 60 `f32` aggregate.
pub fn write_descriptor(d: &SscDescriptor, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::with_capacity(8 + 4 * SSC_BINS * (d.per_frame.len() + 1));
    buf.extend_from_slice(DESCRIPTOR_MAGIC);
    buf.extend_from_slice(&(d.per_frame.len() as u32).to_le_bytes());
    let rows = d.per_frame.iter().map(|h| h.normalized()).chain([d.aggregate.clone()]);
    for row in rows {
        for v in row {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    w.write_all(&buf)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Reads an `SVXD` file as `(per-frame rows, aggregate)`.
pub fn read_descriptor(path: impl AsRef<Path>) -> Result<(Vec<Vec<f32>>, Vec<f32>)> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?)
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    if bytes.len() < 8 || &bytes[..4] != DESCRIPTOR_MAGIC {
        return Err(Error::Format(format!("{} is not an SVXD descriptor", path.display())));
    }
    let frames = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    if bytes.len() != 8 + 4 * SSC_BINS * (frames + 1) {
        return Err(Error::Format(format!(
            "descriptor {} has wrong length for {frames} frames",
            path.display()
        )));
    }
    let mut rows: Vec<Vec<f32>> = bytes[8..]
        .chunks_exact(4 * SSC_BINS)
        .map(|row| {
            row.chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect()
        })
        .collect();
    let aggregate = rows.pop().expect("length checked");
    Ok((rows, aggregate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segment::SupervoxelLabeling;
    use proptest::prelude::*;

    fn center(x: f64, y: f64) -> ReferencePoint {
        ReferencePoint { frame_index: 0, x, y }
    }

    fn polar(c: Point, r: f64, deg: f64) -> Point {
        let a = deg.to_radians();
        (c.0 + r * a.cos(), c.1 - r * a.sin())
    }

    #[test]
    fn empty_points_give_zero_histogram() {
        let h = log_polar_histogram(&[], center(0.0, 0.0), 10.0).unwrap();
        assert_eq!(h.counts, vec![0; 60]);
        assert_eq!(h.normalized(), vec![0.0; 60]);
    }

    #[test]
    fn non_positive_radius_is_an_error() {
        assert!(log_polar_histogram(&[], center(0.0, 0.0), 0.0).is_err());
        assert!(log_polar_histogram(&[], center(0.0, 0.0), f64::NAN).is_err());
    }

    #[test]
    fn point_near_outer_radius_lands_in_outer_ring() {
        let h = log_polar_histogram(&[(99.0, 50.0)], center(0.0, 50.0), 100.0).unwrap();
        assert_eq!(h.counts[4 * 12], 1);
        assert_eq!(h.total(), 1);
    }

    #[test]
    fn twelve_points_fill_every_angular_bin_of_one_ring() {
        let c = (50.0, 50.0);
        let pts: Vec<Point> = (0..12).map(|k| polar(c, 20.0, k as f64 * 30.0 + 15.0)).collect();
        let h = log_polar_histogram(&pts, center(c.0, c.1), 100.0).unwrap();
        // 100 * 16^(-2/5) ~ 33.0 and 100 * 16^(-3/5) ~ 18.9, so ring 2.
        for a in 0..12 {
            assert_eq!(h.counts[2 * 12 + a], 1, "angular bin {a}");
        }
        assert_eq!(h.total(), 12);
    }

    #[test]
    fn angles_go_counterclockwise_on_screen() {
        let c = (10.0, 10.0);
        // Straight up on screen is y - 5.
        assert_eq!(bin_of((10.0, 5.0), c, 20.0).unwrap().1, 3);
        assert_eq!(bin_of((10.0, 15.0), c, 20.0).unwrap().1, 9);
        assert_eq!(bin_of((5.0, 10.0), c, 20.0).unwrap().1, 6);
    }

    #[test]
    fn ring_edges_and_catch_all() {
        let r = 160.0;
        let e = ring_edges(r);
        assert!((e[0] - r * 16f64.powf(-0.8)).abs() < 1e-12);
        assert_eq!(e[4], r);
        assert_eq!(bin_of((0.0, 0.0), (0.0, 0.0), r), Some((0, 0)));
        assert_eq!(bin_of((9.0, 0.0), (0.0, 0.0), r), Some((0, 0)));
        assert_eq!(bin_of((e[1], 0.0), (0.0, 0.0), r), Some((1, 0)));
        assert_eq!(bin_of((e[1] + 1e-9, 0.0), (0.0, 0.0), r), Some((2, 0)));
        assert_eq!(bin_of((r + 1e-9, 0.0), (0.0, 0.0), r), None);
    }

    #[test]
    fn single_region_video_has_zero_descriptor() {
        let s = SupervoxelLabeling::from_labels(1, 6, 5, 3, vec![0; 90]).unwrap();
        let f = FlowField { width: 6, height: 5, fields: vec![vec![[0.0; 2]; 30]; 2] };
        let d = ssc_descriptor(&s, &f).unwrap();
        assert_eq!(d.aggregate, vec![0.0; 60]);
        assert_eq!(d.per_frame.len(), 3);
    }

    #[test]
    fn static_labeling_gives_equal_frames() {
        let labels: Vec<u32> = (0..4 * 8 * 8).map(|i| ((i % 8) >= 3) as u32 + 2 * ((i / 8 % 8) >= 5) as u32).collect();
        let s = SupervoxelLabeling::from_labels(1, 8, 8, 4, labels).unwrap();
        let f = FlowField { width: 8, height: 8, fields: vec![vec![[0.0; 2]; 64]; 3] };
        let d = ssc_descriptor(&s, &f).unwrap();
        let first = d.per_frame[0].normalized();
        for h in &d.per_frame {
            assert_eq!(h.normalized(), first);
        }
        for (a, b) in d.aggregate.iter().zip(&first) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((d.aggregate.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mismatched_flow_is_an_error() {
        let s = SupervoxelLabeling::from_labels(1, 2, 2, 2, vec![0; 8]).unwrap();
        let f = FlowField { width: 2, height: 2, fields: vec![vec![[0.0; 2]; 4]; 2] };
        assert!(ssc_descriptor(&s, &f).is_err());
    }

    #[test]
    fn descriptor_file_round_trip() {
        let s = SupervoxelLabeling::from_labels(1, 4, 4, 2, (0..32).map(|i| (i % 4 >= 2) as u32).collect()).unwrap();
        let f = FlowField { width: 4, height: 4, fields: vec![vec![[0.0; 2]; 16]] };
        let d = ssc_descriptor(&s, &f).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.svxd");
        write_descriptor(&d, &p).unwrap();
        let (rows, agg) = read_descriptor(&p).unwrap();
        assert_eq!(rows.len(), 2);
        for (a, b) in agg.iter().zip(&d.aggregate) {
            assert!((*a as f64 - b).abs() < 1e-7);
        }
        assert_eq!(std::fs::metadata(&p).unwrap().len(), 8 + 4 * 60 * 3);
    }

    proptest! {
        #[test]
        fn rotation_by_30_degrees_shifts_angular_bins(
            pts in proptest::collection::vec((1.0f64..60.0, 0usize..12, 2.0f64..28.0), 1..30)
        ) {
            let c = (100.0, 100.0);
            let at = |rot: usize| -> Vec<Point> {
                pts.iter().map(|&(r, k, off)| polar(c, r, (k + rot) as f64 * 30.0 + off)).collect()
            };
            let h0 = log_polar_histogram(&at(0), center(c.0, c.1), 80.0).unwrap();
            let h1 = log_polar_histogram(&at(1), center(c.0, c.1), 80.0).unwrap();
            for r in 0..5 {
                for a in 0..12 {
                    prop_assert_eq!(h0.counts[r * 12 + a], h1.counts[r * 12 + (a + 1) % 12]);
                }
            }
        }

        #[test]
        fn ring_scaling_shifts_radial_bins(ring in 1usize..4, frac in 0.05f64..0.95, deg in 0.0f64..360.0) {
            let r_max = 100.0;
            let e = ring_edges(r_max);
            let d = e[ring - 1] + frac * (e[ring] - e[ring - 1]);
            let step = RADIAL_SPAN.powf(1.0 / 5.0);
            let p = polar((0.0, 0.0), d, deg);
            let q = polar((0.0, 0.0), d * step, deg);
            let (r0, a0) = bin_of(p, (0.0, 0.0), r_max).unwrap();
            let (r1, a1) = bin_of(q, (0.0, 0.0), r_max).unwrap();
            prop_assert_eq!(r0, ring);
            prop_assert_eq!(r1, ring + 1);
            prop_assert_eq!(a0, a1);
        }

        #[test]
        fn point_order_does_not_matter(mut pts in proptest::collection::vec((0.0f64..50.0, 0.0f64..50.0), 0..40)) {
            let c = center(25.0, 25.0);
            let a = log_polar_histogram(&pts, c, 30.0).unwrap();
            pts.reverse();
            prop_assert_eq!(a, log_polar_histogram(&pts, c, 30.0).unwrap());
        }
    }
}
