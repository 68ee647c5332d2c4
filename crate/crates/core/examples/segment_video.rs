//! Batch vs streaming segmentation of a synthetic clip.
//!
//! `cargo run --release --example segment_video [out_dir]`

use svx::segment::{build_hierarchy, stream_segment_volume, write_hierarchy, LevelPreset, SegmentationParams};
use svx::synth::{render_clip, ClipSpec, Motion, Shape};

fn main() -> anyhow::Result<()> {
    let out = std::env::args().nth(1);
    let clip = render_clip(&ClipSpec::new(Shape::Upright, Motion::Translate, 0, 11));
    let p = SegmentationParams::default();

    let t = std::time::Instant::now();
    let batch = build_hierarchy(&clip, &p)?;
    println!("batch     {:>6.2?}  regions per level {:?}", t.elapsed(), batch.counts());

    let t = std::time::Instant::now();
    let streamed = stream_segment_volume(&clip, &p)?;
    println!("streaming {:>6.2?}  regions per level {:?}", t.elapsed(), streamed.counts());

    for preset in LevelPreset::ALL {
        println!("{preset:>6} (level {:2}): {} supervoxels", preset.level(), streamed.level(preset.level())?.region_count());
    }
    if let Some(dir) = out {
        write_hierarchy(&streamed, &dir)?;
        println!("label maps written to {dir}");
    }
    Ok(())
}
