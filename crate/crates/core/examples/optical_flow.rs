//! Horn-Schunck flow of an oscillating blob and the per-frame reference
//! points the shape context is centered on.
//!
//! `cargo run --release --example optical_flow`

use svx::motion::{compute_flow, reference_points};
use svx::synth::{render_clip, ClipSpec, Motion, Shape};

fn main() -> anyhow::Result<()> {
    let spec = ClipSpec::new(Shape::Upright, Motion::Oscillate, 0, 3);
    let clip = render_clip(&spec);
    let flow = compute_flow(&clip)?;
    println!("{} frame pairs at {}x{}", flow.pair_count(), flow.width, flow.height);
    for p in reference_points(&flow) {
        let pair = p.frame_index.min(flow.pair_count() - 1);
        let mean_v: f32 = (0..flow.height)
            .flat_map(|y| (0..flow.width).map(move |x| (x, y)))
            .map(|(x, y)| flow.at(pair, x, y)[1])
            .sum::<f32>()
            / (flow.width * flow.height) as f32;
        println!("frame {:2}: center ({:5.1}, {:5.1})  mean v {:+.4}", p.frame_index, p.x, p.y, mean_v);
    }
    Ok(())
}
