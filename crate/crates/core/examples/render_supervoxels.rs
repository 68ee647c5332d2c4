//! Random-color and boundary renderings of three hierarchy levels, written
//! as PPM sequences.
//!
//! `cargo run --release --example render_supervoxels [out_dir]`

use svx::render::{colorize, render_boundaries};
use svx::segment::{build_hierarchy, extract_level, LevelPreset, SegmentationParams};
use svx::synth::{render_clip, ClipSpec, Motion, Shape};
use svx::video::write_frames;

fn main() -> anyhow::Result<()> {
    let out = std::path::PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/render_supervoxels".into()));
    let clip = render_clip(&ClipSpec::new(Shape::Prone, Motion::Expand, 0, 5));
    let h = build_hierarchy(&clip, &SegmentationParams::default())?;
    write_frames(&clip, out.join("input"))?;
    for preset in LevelPreset::ALL {
        let s = extract_level(&h, preset)?;
        write_frames(&colorize(&s, 1)?, out.join(format!("{preset}_color")))?;
        write_frames(&render_boundaries(&s), out.join(format!("{preset}_boundary")))?;
        println!("{preset}: {} supervoxels", s.region_count());
    }
    println!("frames in {}", out.display());
    Ok(())
}
