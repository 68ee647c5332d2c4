//! Analysis of a constructed cohort whose answers follow fixed confusion
//! rows, written out as tables, density data and plots.
//!
//! `cargo run --release --example analysis_report [out_dir]`

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use svx::analysis::{response_time_density, write_report, TimeFilter};
use svx::labels::{Action, Actor};
use svx::study::{Choice, PerceptionRecord, StudyDataset};

fn main() -> anyhow::Result<()> {
    let out = std::path::PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/analysis_report".into()));
    let dataset = StudyDataset::standard(25.0, 200);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut records = Vec::new();
    for (i, v) in dataset.videos.iter().enumerate() {
        let truth = dataset.base_of(v);
        for p in 0..5 {
            let right = rng.gen_bool(0.75);
            let action = if right { truth.action } else { Action::ALL[rng.gen_range(0..8)] };
            // Slow answers for crawling to make its two modes visible.
            let secs: f64 = if truth.action == Action::Crawling && p % 2 == 0 { rng.gen_range(6.0..7.5) } else { rng.gen_range(1.0..3.5) };
            records.push(PerceptionRecord {
                participant_id: format!("p{p}_{i}"),
                video_id: v.video_id.clone(),
                level: v.level,
                actor_choice: Choice::Known(if rng.gen_bool(0.85) { truth.actor } else { Actor::ALL[rng.gen_range(0..2)] }),
                action_choice: Choice::Known(action),
                response_time_ms: (secs * 1000.0) as u64,
                watched_full: false,
            });
        }
    }
    let report = write_report(&records, &dataset, &out)?;
    print!("{}", report.to_text());
    let crawling = response_time_density(&records, &dataset, &TimeFilter { action: Some(Action::Crawling), ..TimeFilter::default() })?;
    println!("\ncrawling response-time modes (s): {:?}", crawling.modes().iter().map(|m| format!("{m:.2}")).collect::<Vec<_>>());
    println!("outputs in {}", out.display());
    Ok(())
}
