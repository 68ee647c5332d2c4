//! Supervoxel shape context of one clip per motion, printed as a coarse
//! ring-by-sector table of the aggregate histogram.
//!
//! `cargo run --release --example shape_context`

use svx::segment::{LevelPreset, SegmentationParams};
use svx::ssc::{video_ssc, ANGULAR_BINS, RADIAL_BINS};
use svx::synth::{render_clip, ClipSpec, Motion, Shape};

fn main() -> anyhow::Result<()> {
    let p = SegmentationParams::default();
    for motion in Motion::ALL {
        let clip = render_clip(&ClipSpec::new(Shape::Upright, motion, 0, 21));
        let d = video_ssc(&clip, &p, &[LevelPreset::Medium.into()])?.remove(0);
        println!("{} ({} frames with boundary points)", motion.as_str(), d.per_frame.iter().filter(|h| h.total() > 0).count());
        for r in 0..RADIAL_BINS {
            let row: Vec<String> = (0..ANGULAR_BINS)
                .map(|a| format!("{:4.0}", 1000.0 * d.aggregate[r * ANGULAR_BINS + a]))
                .collect();
            println!("  ring {r}: {}", row.join(""));
        }
    }
    Ok(())
}
