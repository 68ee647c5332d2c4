//! A headless cohort going through the study service over its HTTP routes,
//! followed by a replay of the on-disk log.
//!
//! `cargo run --release --example study_session [participants] [log_dir]`

use axum::body::Body;
use axum::http::{header, Request};
use http_body_util::BodyExt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use svx::labels::{Action, Actor};
use svx::study::{self, AppState, Study, StudyDataset};
use tower::ServiceExt;

async fn call(app: &axum::Router, req: Request<Body>) -> anyhow::Result<(u16, Value)> {
    let resp = app.clone().oneshot(req).await?;
    let status = resp.status().as_u16();
    let bytes = resp.into_body().collect().await?.to_bytes();
    Ok((status, serde_json::from_slice(&bytes).unwrap_or(Value::Null)))
}

fn post(uri: &str, body: Value) -> Request<Body> {
    Request::post(uri)
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from(body.to_string()))
        .expect("request")
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    let participants: usize = std::env::args().nth(1).map_or(Ok(6), |s| s.parse())?;
    let tmp = tempfile::tempdir()?;
    let log_dir = std::env::args().nth(2).map_or_else(|| tmp.path().to_path_buf(), Into::into);

    let dataset = StudyDataset::standard(25.0, 150);
    let app = study::router(AppState::new(Study::open(dataset.clone(), &log_dir)?, None));
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    for p in 0..participants {
        let pid = format!("participant{p:02}");
        let (_, started) = call(&app, post("/session/start", json!({ "participant_id": pid }))).await?;
        println!("{pid}: split {}", started["split"]);
        loop {
            let (_, next) = call(&app, Request::get(format!("/session/next?participant={pid}")).body(Body::empty())?).await?;
            if next["done"] == true {
                break;
            }
            let m = &next["manifest"];
            let video = dataset.video(m["video_id"].as_str().unwrap()).unwrap();
            let truth = dataset.base_of(video);
            let full = m["total_duration_ms"].as_u64().unwrap();
            // A simulated participant: mostly right, sometimes unsure.
            let unsure = rng.gen_bool(0.1);
            let watched_full = unsure || rng.gen_bool(0.2);
            let actor = if unsure { "unknown".to_string() } else if rng.gen_bool(0.85) { truth.actor.to_string() } else { Actor::ALL[rng.gen_range(0..2)].to_string() };
            let action = if unsure { "unknown".to_string() } else if rng.gen_bool(0.7) { truth.action.to_string() } else { Action::ALL[rng.gen_range(0..8)].to_string() };
            let record = json!({
                "participant_id": pid,
                "video_id": m["video_id"],
                "level": m["level"],
                "actor_choice": actor,
                "action_choice": action,
                "response_time_ms": if watched_full { full } else { rng.gen_range(800..full) },
                "watched_full": watched_full,
            });
            let (status, body) = call(&app, post("/session/answer", record.clone())).await?;
            anyhow::ensure!(status == 200, "answer rejected: {body}");
            if next["position"] == 0 {
                let (status, body) = call(&app, post("/session/answer", record)).await?;
                println!("  resubmission -> {status} {}", body["error"]);
            }
        }
    }

    let state = study::replay_dir(&log_dir)?;
    println!("{} records, {} per participant", state.records.len(), state.records.len() / participants.max(1));
    let export = std::fs::read_to_string(log_dir.join("records.ndjson"))?;
    println!("log holds {} lines; replay matches: {}", export.lines().count(), state.records == study::parse_records(&export)?);
    Ok(())
}
