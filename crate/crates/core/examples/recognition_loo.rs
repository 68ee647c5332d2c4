//! Builds the synthetic corpus, extracts SSC at fine/medium/coarse and runs
//! leave-one-out actor and action classification.
//!
//!     cargo run --release --example recognition_loo -- [clips_per_class] [seed]

use std::time::Instant;

use rayon::prelude::*;
use svx::labels::Background;
use svx::recognition::{loo_evaluate, ClassifierConfig, LabeledDescriptor, Task};
use svx::segment::{LevelPreset, LevelSelect, SegmentationParams};
use svx::ssc::video_ssc;
use svx::synth::{corpus, render_clip};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let per_class: usize = args.next().map_or(Ok(10), |s| s.parse())?;
    let seed: u64 = args.next().map_or(Ok(7), |s| s.parse())?;

    let start = Instant::now();
    let params = SegmentationParams::default();
    let levels: Vec<LevelSelect> = LevelPreset::ALL.iter().map(|&l| l.into()).collect();
    let clips = corpus(per_class, seed);
    let per_clip = clips
        .par_iter()
        .map(|spec| Ok((spec, video_ssc(&render_clip(spec), &params, &levels)?)))
        .collect::<svx::Result<Vec<_>>>()?;
    println!("{} clips described in {:.1?}", clips.len(), start.elapsed());

    for (li, level) in LevelPreset::ALL.iter().enumerate() {
        let data: Vec<LabeledDescriptor> = per_clip
            .iter()
            .map(|(spec, ds)| LabeledDescriptor {
                video_id: spec.id.clone(),
                actor: spec.actor(),
                action: spec.action(),
                background: Background::Static,
                level: Some(*level),
                vector: ds[li].aggregate.clone(),
            })
            .collect();
        for task in [Task::Actor, Task::Action] {
            let r = loo_evaluate(&data, task, &ClassifierConfig::default())?;
            println!("{level:>6} {task:?}: {:.3}", r.accuracy);
            if task == Task::Action {
                print!("{}", r.confusion.to_text());
            }
        }
    }
    println!("total {:.1?}", start.elapsed());
    Ok(())
}
