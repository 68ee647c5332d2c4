use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn params(levels: usize) -> SegmentationParams {
    SegmentationParams {
        hie_num: levels,
        ..SegmentationParams::default()
    }
}

fn two_color(w: usize, h: usize, t: usize) -> VideoVolume {
    let mut v = VideoVolume::new(w, h, t).unwrap();
    for z in 0..t {
        for y in 0..h {
            for x in 0..w {
                let c = if x < w / 2 { [20.0, 30.0, 200.0] } else { [230.0, 210.0, 10.0] };
                v.set(z, y, x, c);
            }
        }
    }
    v
}

fn noisy(w: usize, h: usize, t: usize, seed: u64) -> VideoVolume {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = VideoVolume::new(w, h, t).unwrap();
    for z in 0..t {
        for y in 0..h {
            for x in 0..w {
                let base = if (x / 5 + y / 4) % 2 == 0 { 60.0 } else { 160.0 };
                v.set(z, y, x, [base + rng.gen_range(-20.0..20.0), base, 255.0 - base]);
            }
        }
    }
    v
}

/// Partition, nesting and monotonicity, checked from materialized labelings.
fn assert_hierarchy_invariants(h: &Hierarchy) {
    let levels: Vec<_> = h.levels().collect();
    let total = levels[0].labels().len() as u64;
    for s in &levels {
        let mut counts: HashMap<u32, u64> = HashMap::new();
        for &l in s.labels() {
            *counts.entry(l).or_default() += 1;
        }
        for (&l, &n) in &counts {
            assert_eq!(s.region_sizes()[l as usize], n, "level {} label {l}", s.level());
        }
        assert_eq!(s.region_sizes().iter().sum::<u64>(), total);
    }
    for pair in levels.windows(2) {
        let mut up: HashMap<u32, u32> = HashMap::new();
        for (&a, &b) in pair[0].labels().iter().zip(pair[1].labels()) {
            assert_eq!(*up.entry(a).or_insert(b), b, "level {} not nested", pair[0].level());
        }
        assert!(pair[1].region_count() <= pair[0].region_count());
    }
}

/// True when two label vectors are equal up to a bijective renaming.
fn same_partition(a: &[u32], b: &[u32]) -> bool {
    let (mut fwd, mut back) = (HashMap::new(), HashMap::new());
    a.iter()
        .zip(b)
        .all(|(x, y)| *fwd.entry(x).or_insert(y) == y && *back.entry(y).or_insert(x) == x)
}

#[test]
fn constant_volume_is_one_region_everywhere() {
    let v = VideoVolume::filled(6, 5, 4, [90.0, 90.0, 90.0]).unwrap();
    let h = build_hierarchy(&v, &params(30)).unwrap();
    assert_eq!(h.counts(), vec![1; 30]);
}

#[test]
fn two_colors_stay_apart() {
    // Smoothing blends the two columns at the split; at 3x4 voxels each
    // blended column falls under min_size and joins its own side.
    let v = two_color(10, 3, 4);
    let h = build_hierarchy(&v, &params(30)).unwrap();
    assert_eq!(h.counts(), vec![2; 30]);
    assert_hierarchy_invariants(&h);
}

#[test]
fn invariants_on_textured_volume() {
    let h = build_hierarchy(&noisy(20, 16, 6, 3), &params(12)).unwrap();
    assert_hierarchy_invariants(&h);
    let counts = h.counts();
    assert!(counts[0] > counts[11], "{counts:?}");
    for s in h.levels() {
        assert!(s.region_sizes().iter().filter(|&&n| n > 0).all(|&n| n >= 20));
    }
}

#[test]
fn presets_and_level_range() {
    let v = VideoVolume::filled(3, 3, 2, [0.0; 3]).unwrap();
    let h = build_hierarchy(&v, &params(30)).unwrap();
    assert_eq!(extract_level(&h, LevelPreset::Fine).unwrap().level(), 8);
    assert_eq!(extract_level(&h, LevelPreset::Medium).unwrap().level(), 16);
    assert_eq!(extract_level(&h, LevelPreset::Coarse).unwrap().level(), 24);
    let err = extract_level(&h, 31).unwrap_err();
    assert!(matches!(err, Error::LevelRange { requested: 31, depth: 30 }));
    assert!(err.to_string().contains("1..=30"));
    assert!(extract_level(&h, 0).is_err());

    let short = build_hierarchy(&v, &params(20)).unwrap();
    assert!(extract_level(&short, LevelPreset::Coarse).is_err());
}

#[test]
fn tau_constant_scales_with_level() {
    let p = SegmentationParams::default();
    assert_eq!(p.tau_constant(1), 0.2);
    assert_eq!(p.tau_constant(2), 20.0);
    assert_eq!(p.tau_constant(30), 300.0);
}

#[test]
fn invalid_params_rejected() {
    let v = VideoVolume::new(2, 2, 2).unwrap();
    for bad in [
        SegmentationParams { hie_num: 0, ..Default::default() },
        SegmentationParams { c: 0.0, ..Default::default() },
        SegmentationParams { stream_range: 0, ..Default::default() },
        SegmentationParams { min_size: 0, ..Default::default() },
    ] {
        assert!(matches!(build_hierarchy(&v, &bad), Err(Error::Param(_))));
    }
}

#[test]
fn short_stream_matches_batch_exactly() {
    let v = noisy(12, 9, 7, 11);
    let p = params(10);
    let batch = build_hierarchy(&v, &p).unwrap();
    let streamed = stream_segment_volume(&v, &p).unwrap();
    assert_eq!(batch, streamed);
}

#[test]
fn constant_stream_is_one_region_across_windows() {
    let v = VideoVolume::filled(5, 4, 25, [40.0, 80.0, 120.0]).unwrap();
    let h = stream_segment_volume(&v, &params(30)).unwrap();
    assert_eq!(h.counts(), vec![1; 30]);
    assert_eq!(h.dims(), (5, 4, 25));
}

#[test]
fn two_color_stream_matches_batch_counts() {
    let v = two_color(32, 24, 25);
    let p = params(30);
    let batch = build_hierarchy(&v, &p).unwrap();
    let streamed = stream_segment_volume(&v, &p).unwrap();
    assert_eq!(batch.counts(), streamed.counts());
    assert_hierarchy_invariants(&streamed);
}

#[test]
fn committed_labels_never_change() {
    let v = noisy(10, 8, 25, 5);
    let p = params(8);
    let prefix = stream_segment_volume(&v.slice_frames(0, 20).unwrap(), &p).unwrap();
    let full = stream_segment_volume(&v, &p).unwrap();
    assert_hierarchy_invariants(&full);
    let n = 10 * 8 * 20;
    for h in 1..=8 {
        let a = prefix.level(h).unwrap();
        let b = full.level(h).unwrap();
        assert_eq!(a.labels(), &b.labels()[..n], "level {h}");
    }
}

#[test]
fn streamed_partition_is_valid_across_seams() {
    for seed in 0..4 {
        let v = noisy(9, 7, 23, seed);
        let p = SegmentationParams { stream_range: 5, ..params(6) };
        let h = stream_segment_volume(&v, &p).unwrap();
        assert_hierarchy_invariants(&h);
        assert_eq!(h.level(1).unwrap().labels().len(), 9 * 7 * 23);
    }
}

#[test]
fn stream_rejects_empty_and_mismatched_input() {
    let p = params(2);
    assert!(stream_segment(std::iter::empty(), &p).is_err());
    let frames = vec![
        Ok(crate::video::Frame::new(3, 3)),
        Ok(crate::video::Frame::new(4, 3)),
    ];
    assert!(matches!(stream_segment(frames, &p), Err(Error::Ingest(_))));
}

#[test]
fn single_window_labels_equal_batch_up_to_renaming() {
    let v = noisy(8, 8, 4, 9);
    let p = SegmentationParams { stream_range: 4, ..params(5) };
    let batch = build_hierarchy(&v, &p).unwrap();
    let streamed = stream_segment_volume(&v, &p).unwrap();
    for h in 1..=5 {
        assert!(same_partition(
            batch.level(h).unwrap().labels(),
            streamed.level(h).unwrap().labels()
        ));
    }
}

#[test]
fn label_map_round_trip() {
    let h = build_hierarchy(&noisy(7, 5, 3, 1), &params(3)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_hierarchy(&h, dir.path()).unwrap();
    for s in h.levels() {
        let back = read_label_map(dir.path().join(format!("level_{:02}.svxl", s.level())), s.level()).unwrap();
        assert_eq!(back.labels(), s.labels());
        assert_eq!(back.dims(), s.dims());
        assert_eq!(back.region_sizes(), s.region_sizes());
    }
    let bytes = std::fs::read(dir.path().join("level_01.svxl")).unwrap();
    assert_eq!(&bytes[..4], b"SVXL");
    assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 7);
    assert_eq!(bytes.len(), 16 + 4 * 7 * 5 * 3);
}
