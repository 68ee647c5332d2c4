//! Backend of the forced-choice perception study: the 96-video dataset, the
//! level-rotated splits, shuffled per-participant sessions and an
//! append-only record log.

mod http;
mod journal;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::labels::{Action, Actor, Background};
use crate::segment::LevelPreset;

pub use self::http::{router, AppState};
pub use self::journal::{replay_dir, LogFiles, Snapshot, SNAPSHOT_EVERY};

/// Level each split shows for base video 0; base video `i` in the split
/// with offset `s` gets `ROTATION[(s + i) % 3]`.
pub const ROTATION: [LevelPreset; 3] = [LevelPreset::Coarse, LevelPreset::Medium, LevelPreset::Fine];

/// Playback slowdown applied through the manifest.
pub const PLAYBACK_SLOWDOWN: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseVideo {
    pub id: String,
    pub actor: Actor,
    pub action: Action,
    pub background: Background,
    pub fps: f64,
    pub frame_count: usize,
}

impl BaseVideo {
    /// Presentation length at half frame rate, in whole milliseconds.
    pub fn duration_ms(&self) -> u64 {
        frame_end_ms(self.frame_count, self.fps)
    }
}

/// End time of frame `i - 1` at the slowed rate, rounded to the millisecond.
fn frame_end_ms(i: usize, fps: f64) -> u64 {
    (i as f64 * 1000.0 * PLAYBACK_SLOWDOWN as f64 / fps).round() as u64
}

/// One supervoxel segmentation video shown to participants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyVideo {
    pub video_id: String,
    pub base: usize,
    pub level: LevelPreset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyDataset {
    pub base_videos: Vec<BaseVideo>,
    pub videos: Vec<StudyVideo>,
}

impl StudyDataset {
    pub fn new(base_videos: Vec<BaseVideo>, videos: Vec<StudyVideo>) -> Result<Self> {
        let mut ids = std::collections::HashSet::new();
        for v in &videos {
            if v.base >= base_videos.len() {
                return Err(Error::Dataset(format!("{} refers to missing base video {}", v.video_id, v.base)));
            }
            if !ids.insert(v.video_id.as_str()) {
                return Err(Error::Dataset(format!("duplicate video id {}", v.video_id)));
            }
        }
        if let Some(b) = base_videos.iter().find(|b| !(b.fps > 0.0) || b.frame_count == 0) {
            return Err(Error::Dataset(format!("base video {} needs a positive fps and frame count", b.id)));
        }
        Ok(StudyDataset { base_videos, videos })
    }

    /// Every actor, action and background combination (32 base videos) at
    /// each of the three levels.
    pub fn standard(fps: f64, frame_count: usize) -> Self {
        let mut base_videos = Vec::new();
        for &actor in Actor::ALL {
            for &action in Action::ALL {
                for &background in Background::ALL {
                    base_videos.push(BaseVideo {
                        id: format!("{actor}_{action}_{background}"),
                        actor,
                        action,
                        background,
                        fps,
                        frame_count,
                    });
                }
            }
        }
        let videos = base_videos
            .iter()
            .enumerate()
            .flat_map(|(i, b)| {
                LevelPreset::ALL.iter().map(move |&level| StudyVideo {
                    video_id: format!("{}_{level}", b.id),
                    base: i,
                    level,
                })
            })
            .collect();
        StudyDataset::new(base_videos, videos).expect("standard dataset is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let d: StudyDataset = serde_json::from_str(&text)?;
        StudyDataset::new(d.base_videos, d.videos)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn video(&self, video_id: &str) -> Option<&StudyVideo> {
        self.videos.iter().find(|v| v.video_id == video_id)
    }

    pub fn base_of(&self, v: &StudyVideo) -> &BaseVideo {
        &self.base_videos[v.base]
    }

    pub fn video_at(&self, base: usize, level: LevelPreset) -> Option<&StudyVideo> {
        self.videos.iter().find(|v| v.base == base && v.level == level)
    }

    /// Manifest for one video: frame URLs with durations doubled, rounded
    /// cumulatively so they add up to the full presentation length.
    pub fn manifest(&self, video_id: &str) -> Result<VideoManifest> {
        let v = self
            .video(video_id)
            .ok_or_else(|| Error::Rejected(format!("unknown video {video_id}")))?;
        let b = self.base_of(v);
        let frames = (0..b.frame_count)
            .map(|i| ManifestFrame {
                url: format!("/media/{video_id}/{}", crate::video::frame_file_name(i)),
                duration_ms: frame_end_ms(i + 1, b.fps) - frame_end_ms(i, b.fps),
            })
            .collect();
        Ok(VideoManifest {
            video_id: video_id.to_string(),
            level: v.level,
            frames,
            total_duration_ms: b.duration_ms(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFrame {
    pub url: String,
    pub duration_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoManifest {
    pub video_id: String,
    pub level: LevelPreset,
    pub frames: Vec<ManifestFrame>,
    pub total_duration_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Alpha,
    Beta,
    Gamma,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Alpha, Split::Beta, Split::Gamma];

    pub fn offset(self) -> usize {
        self as usize
    }

    /// Level base video `i` is shown at in this split.
    pub fn level_for(self, i: usize) -> LevelPreset {
        ROTATION[(self.offset() + i) % ROTATION.len()]
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alpha" => Ok(Split::Alpha),
            "beta" => Ok(Split::Beta),
            "gamma" => Ok(Split::Gamma),
            other => Err(Error::Param(format!("unknown split {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub split: Split,
    /// `(base index, video id)` in dataset order.
    pub videos: Vec<(usize, String)>,
}

impl SplitAssignment {
    pub fn level_counts(&self, d: &StudyDataset) -> BTreeMap<LevelPreset, usize> {
        let mut counts = BTreeMap::new();
        for (_, id) in &self.videos {
            *counts.entry(d.video(id).expect("split video exists").level).or_default() += 1;
        }
        counts
    }
}

/// Alpha, beta and gamma, rotating levels by dataset order.
pub fn build_splits(d: &StudyDataset) -> Result<[SplitAssignment; 3]> {
    let mk = |split: Split| -> Result<SplitAssignment> {
        let videos = (0..d.base_videos.len())
            .map(|i| {
                let level = split.level_for(i);
                d.video_at(i, level).map(|v| (i, v.video_id.clone())).ok_or_else(|| {
                    Error::Dataset(format!(
                        "base video {} has no {level} segmentation",
                        d.base_videos[i].id
                    ))
                })
            })
            .collect::<Result<_>>()?;
        Ok(SplitAssignment { split, videos })
    };
    Ok([mk(Split::Alpha)?, mk(Split::Beta)?, mk(Split::Gamma)?])
}

/// A forced-choice answer that may be "don't know".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Choice<T> {
    Known(T),
    Unknown,
}

impl<T> Choice<T> {
    pub fn known(self) -> Option<T> {
        match self {
            Choice::Known(t) => Some(t),
            Choice::Unknown => None,
        }
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, Choice::Unknown)
    }
}

impl<T: fmt::Display> fmt::Display for Choice<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Choice::Known(t) => t.fmt(f),
            Choice::Unknown => f.write_str("unknown"),
        }
    }
}

impl<T: FromStr<Err = Error>> FromStr for Choice<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "unknown" {
            Ok(Choice::Unknown)
        } else {
            s.parse().map(Choice::Known)
        }
    }
}

impl<T: fmt::Display> Serialize for Choice<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de, T: FromStr<Err = Error>> Deserialize<'de> for Choice<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceptionRecord {
    pub participant_id: String,
    pub video_id: String,
    pub level: LevelPreset,
    pub actor_choice: Choice<Actor>,
    pub action_choice: Choice<Action>,
    pub response_time_ms: u64,
    pub watched_full: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub participant_id: String,
    pub split: Split,
    pub seed: u64,
    pub playlist: Vec<String>,
    /// Video id to record id.
    pub answered: BTreeMap<String, u64>,
}

impl Session {
    pub fn is_complete(&self) -> bool {
        self.answered.len() == self.playlist.len()
    }

    /// First playlist entry without an answer.
    pub fn next_video(&self) -> Option<(usize, &str)> {
        self.playlist
            .iter()
            .enumerate()
            .find(|(_, v)| !self.answered.contains_key(*v))
            .map(|(i, v)| (i, v.as_str()))
    }
}

/// Everything the log determines.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StudyState {
    pub sessions: BTreeMap<String, Session>,
    pub records: Vec<PerceptionRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionStarted {
    pub participant_id: String,
    pub split: Split,
    pub seed: u64,
    pub playlist: Vec<String>,
    pub server_time_ms: u64,
}

/// Server-side receipt logged next to each record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Receipt {
    pub record_id: u64,
    pub server_time_ms: u64,
}

pub struct Study {
    dataset: StudyDataset,
    splits: [SplitAssignment; 3],
    state: StudyState,
    log: Option<LogFiles>,
}

impl Study {
    /// A study whose state lives only in memory.
    pub fn in_memory(dataset: StudyDataset) -> Result<Self> {
        let splits = build_splits(&dataset)?;
        Ok(Study {
            dataset,
            splits,
            state: StudyState::default(),
            log: None,
        })
    }

    /// Opens (or creates) a logged study in `dir`, replaying existing logs.
    pub fn open(dataset: StudyDataset, dir: impl Into<PathBuf>) -> Result<Self> {
        let mut study = Study::in_memory(dataset)?;
        let log = LogFiles::open(dir)?;
        study.state = log.replay()?;
        study.log = Some(log);
        Ok(study)
    }

    pub fn dataset(&self) -> &StudyDataset {
        &self.dataset
    }

    pub fn splits(&self) -> &[SplitAssignment; 3] {
        &self.splits
    }

    pub fn state(&self) -> &StudyState {
        &self.state
    }

    pub fn records(&self) -> &[PerceptionRecord] {
        &self.state.records
    }

    pub fn session(&self, participant_id: &str) -> Option<&Session> {
        self.state.sessions.get(participant_id)
    }

    /// Split for the next participant when none is requested: the one with
    /// the fewest sessions so far, alpha first.
    pub fn next_split(&self) -> Split {
        *Split::ALL
            .iter()
            .min_by_key(|s| self.state.sessions.values().filter(|x| x.split == **s).count())
            .expect("three splits")
    }

    /// Seeded Fisher-Yates shuffle of the split's videos.
    pub fn start_session(&mut self, participant_id: &str, split: Split, seed: u64) -> Result<&Session> {
        if participant_id.trim().is_empty() {
            return Err(Error::Param("participant id is empty".into()));
        }
        if self.state.sessions.contains_key(participant_id) {
            return Err(Error::Rejected(format!(
                "participant {participant_id} already has a session"
            )));
        }
        let mut playlist: Vec<String> = self.splits[split.offset()]
            .videos
            .iter()
            .map(|(_, v)| v.clone())
            .collect();
        playlist.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let started = SessionStarted {
            participant_id: participant_id.to_string(),
            split,
            seed,
            playlist,
            server_time_ms: now_ms(),
        };
        if let Some(log) = &mut self.log {
            log.append_session(&started)?;
        }
        study_apply_session(&mut self.state, &started);
        Ok(&self.state.sessions[participant_id])
    }

    pub fn next_manifest(&self, participant_id: &str) -> Result<Option<VideoManifest>> {
        let s = self
            .session(participant_id)
            .ok_or_else(|| Error::Session(format!("no session for participant {participant_id}")))?;
        s.next_video().map(|(_, v)| self.dataset.manifest(v)).transpose()
    }

    /// Checks a record against its session and the dataset.
    pub fn validate(&self, r: &PerceptionRecord) -> Result<()> {
        let s = self
            .session(&r.participant_id)
            .ok_or_else(|| Error::Session(format!("no session for participant {}", r.participant_id)))?;
        let v = self
            .dataset
            .video(&r.video_id)
            .filter(|_| s.playlist.contains(&r.video_id))
            .ok_or_else(|| {
                Error::Rejected(format!(
                    "unknown video {} for participant {}",
                    r.video_id, r.participant_id
                ))
            })?;
        if s.answered.contains_key(&r.video_id) {
            return Err(Error::Rejected(format!(
                "{} already answered {}",
                r.participant_id, r.video_id
            )));
        }
        if r.level != v.level {
            return Err(Error::Param(format!("{} is {}, not {}", r.video_id, v.level, r.level)));
        }
        if r.response_time_ms == 0 {
            return Err(Error::Param("response time must be positive".into()));
        }
        let full = self.dataset.base_of(v).duration_ms();
        if r.watched_full && r.response_time_ms != full {
            return Err(Error::Param(format!(
                "full-watch response time {} ms differs from the {full} ms video",
                r.response_time_ms
            )));
        }
        if r.actor_choice.is_unknown() != r.action_choice.is_unknown() {
            return Err(Error::Param(
                "\"don't know\" applies to actor and action together".into(),
            ));
        }
        Ok(())
    }

    /// Validates, logs and applies a record; returns its id.
    pub fn record_perception(&mut self, r: PerceptionRecord) -> Result<u64> {
        self.validate(&r)?;
        let id = self.state.records.len() as u64;
        if let Some(log) = &mut self.log {
            log.append_record(&r, &Receipt { record_id: id, server_time_ms: now_ms() })?;
        }
        study_apply_record(&mut self.state, r);
        if let Some(log) = &mut self.log {
            if (id + 1) % SNAPSHOT_EVERY == 0 {
                log.write_snapshot(&self.state)?;
            }
        }
        Ok(id)
    }

    /// All records as NDJSON, one per line, in log order.
    pub fn export_ndjson(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.state.records {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }
}

pub(crate) fn study_apply_session(state: &mut StudyState, s: &SessionStarted) {
    state.sessions.insert(
        s.participant_id.clone(),
        Session {
            participant_id: s.participant_id.clone(),
            split: s.split,
            seed: s.seed,
            playlist: s.playlist.clone(),
            answered: BTreeMap::new(),
        },
    );
}

pub(crate) fn study_apply_record(state: &mut StudyState, r: PerceptionRecord) {
    let id = state.records.len() as u64;
    if let Some(s) = state.sessions.get_mut(&r.participant_id) {
        s.answered.insert(r.video_id.clone(), id);
    }
    state.records.push(r);
}

fn now_ms() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

/// Parses an NDJSON record log.
pub fn parse_records(text: &str) -> Result<Vec<PerceptionRecord>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Format(format!("record line {}: {e}", i + 1)))
        })
        .collect()
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<PerceptionRecord>> {
    let path = path.as_ref();
    parse_records(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

#[cfg(test)]
mod tests;
