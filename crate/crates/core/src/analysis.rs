//! Match rates of study answers against ground truth, confusion tables,
//! per-stratum accuracy and response-time densities.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::{Action, Actor, Background};
use crate::recognition::ConfusionMatrix;
use crate::segment::LevelPreset;
use crate::study::{BaseVideo, Choice, PerceptionRecord, StudyDataset};

/// Histogram bin width in seconds.
pub const HISTOGRAM_BIN_S: f64 = 0.5;
pub const DENSITY_GRID: usize = 200;
pub const UNKNOWN: &str = "unknown";

/// `num / den * scale` rounded half up, in exact integer arithmetic.
pub fn rounded(num: u64, den: u64, scale: u64) -> u64 {
    assert!(den > 0, "rounding an empty rate");
    (2 * num * scale + den) / (2 * den)
}

/// `num / den` as a percentage with one decimal, e.g. `70.4%`.
pub fn percent(num: u64, den: u64) -> String {
    let tenths = rounded(num, den, 1000);
    format!("{}.{}%", tenths / 10, tenths % 10)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Actor,
    Action,
}

impl Dimension {
    pub const ALL: [Dimension; 2] = [Dimension::Actor, Dimension::Action];

    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Actor => "actor",
            Dimension::Action => "action",
        }
    }

    fn classes(self) -> Vec<String> {
        match self {
            Dimension::Actor => Actor::ALL.iter().map(|a| a.to_string()).collect(),
            Dimension::Action => Action::ALL.iter().map(|a| a.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub record: usize,
    pub actor_match: bool,
    pub action_match: bool,
}

fn truth_of<'a>(d: &'a StudyDataset, r: &PerceptionRecord) -> Result<&'a BaseVideo> {
    d.video(&r.video_id)
        .map(|v| d.base_of(v))
        .ok_or_else(|| Error::Analysis(format!("record refers to unknown video {}", r.video_id)))
}

fn chosen(r: &PerceptionRecord, dim: Dimension) -> String {
    match dim {
        Dimension::Actor => r.actor_choice.to_string(),
        Dimension::Action => r.action_choice.to_string(),
    }
}

/// Unknown never matches.
pub fn match_record(d: &StudyDataset, index: usize, r: &PerceptionRecord) -> Result<MatchResult> {
    let b = truth_of(d, r)?;
    Ok(MatchResult {
        record: index,
        actor_match: r.actor_choice == Choice::Known(b.actor),
        action_match: r.action_choice == Choice::Known(b.action),
    })
}

pub fn match_all(records: &[PerceptionRecord], d: &StudyDataset) -> Result<Vec<MatchResult>> {
    records.iter().enumerate().map(|(i, r)| match_record(d, i, r)).collect()
}

/// Rows are true classes, columns `unknown` followed by the classes.
pub fn confusion(records: &[PerceptionRecord], d: &StudyDataset, dim: Dimension) -> Result<ConfusionMatrix> {
    let rows = dim.classes();
    let cols = std::iter::once(UNKNOWN.to_string()).chain(rows.iter().cloned()).collect();
    let mut m = ConfusionMatrix::new(rows, cols);
    for r in records {
        let b = truth_of(d, r)?;
        let truth = match dim {
            Dimension::Actor => b.actor.to_string(),
            Dimension::Action => b.action.to_string(),
        };
        m.add(&truth, &chosen(r, dim));
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StratumBy {
    Level,
    Actor,
    Background,
    Action,
}

impl StratumBy {
    pub const ALL: [StratumBy; 4] = [StratumBy::Level, StratumBy::Actor, StratumBy::Background, StratumBy::Action];

    pub fn as_str(self) -> &'static str {
        match self {
            StratumBy::Level => "level",
            StratumBy::Actor => "actor",
            StratumBy::Background => "background",
            StratumBy::Action => "action",
        }
    }

    fn keys(self) -> Vec<String> {
        match self {
            StratumBy::Level => LevelPreset::ALL.iter().map(|l| l.to_string()).collect(),
            StratumBy::Actor => Actor::ALL.iter().map(|a| a.to_string()).collect(),
            StratumBy::Background => Background::ALL.iter().map(|b| b.to_string()).collect(),
            StratumBy::Action => Action::ALL.iter().map(|a| a.to_string()).collect(),
        }
    }

    fn key_of(self, d: &StudyDataset, r: &PerceptionRecord) -> Result<String> {
        let b = truth_of(d, r)?;
        Ok(match self {
            StratumBy::Level => r.level.to_string(),
            StratumBy::Actor => b.actor.to_string(),
            StratumBy::Background => b.background.to_string(),
            StratumBy::Action => b.action.to_string(),
        })
    }
}

impl FromStr for StratumBy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StratumBy::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| Error::Param(format!("unknown stratum {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumRates {
    pub key: String,
    pub n: usize,
    pub actor_correct: usize,
    pub action_correct: usize,
    /// `None` when the stratum is empty.
    pub actor_rate: Option<f64>,
    pub action_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratifiedAccuracy {
    pub by: StratumBy,
    pub strata: Vec<StratumRates>,
    pub overall: StratumRates,
}

fn rates(key: String, n: usize, actor_correct: usize, action_correct: usize) -> StratumRates {
    let rate = |c: usize| (n > 0).then(|| c as f64 / n as f64);
    StratumRates {
        key,
        n,
        actor_correct,
        action_correct,
        actor_rate: rate(actor_correct),
        action_rate: rate(action_correct),
    }
}

pub fn stratified_accuracy(records: &[PerceptionRecord], d: &StudyDataset, by: StratumBy) -> Result<StratifiedAccuracy> {
    let keys = by.keys();
    let mut tally = vec![(0usize, 0usize, 0usize); keys.len()];
    for (i, r) in records.iter().enumerate() {
        let m = match_record(d, i, r)?;
        let k = by.key_of(d, r)?;
        let t = &mut tally[keys.iter().position(|x| *x == k).expect("stratum key")];
        t.0 += 1;
        t.1 += m.actor_match as usize;
        t.2 += m.action_match as usize;
    }
    let (n, a, c) = tally.iter().fold((0, 0, 0), |s, t| (s.0 + t.0, s.1 + t.1, s.2 + t.2));
    Ok(StratifiedAccuracy {
        by,
        strata: keys.into_iter().zip(tally).map(|(k, t)| rates(k, t.0, t.1, t.2)).collect(),
        overall: rates("all".into(), n, a, c),
    })
}

impl StratifiedAccuracy {
    pub fn to_text(&self) -> String {
        let pct = |c: usize, n: usize| if n == 0 { "n/a".to_string() } else { percent(c as u64, n as u64) };
        let mut out = format!("{:<10} {:>5} {:>8} {:>8}\n", self.by.as_str(), "n", "actor", "action");
        for s in self.strata.iter().chain(std::iter::once(&self.overall)) {
            let _ = writeln!(out, "{:<10} {:>5} {:>8} {:>8}", s.key, s.n, pct(s.actor_correct, s.n), pct(s.action_correct, s.n));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Correctness {
    Both,
    Correct,
    Incorrect,
}

impl FromStr for Correctness {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "both" => Ok(Correctness::Both),
            "correct" => Ok(Correctness::Correct),
            "incorrect" => Ok(Correctness::Incorrect),
            other => Err(Error::Param(format!("unknown correctness filter {other:?}"))),
        }
    }
}

/// Which records enter a response-time density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeFilter {
    pub correctness: Correctness,
    /// Dimension correctness is judged on.
    pub judged_on: Dimension,
    pub level: Option<LevelPreset>,
    pub action: Option<Action>,
}

impl Default for TimeFilter {
    fn default() -> Self {
        TimeFilter {
            correctness: Correctness::Both,
            judged_on: Dimension::Action,
            level: None,
            action: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    /// Seconds.
    pub samples: Vec<f64>,
    pub bin_edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
}

impl DensityEstimate {
    /// Trapezoid integral of the density over the grid.
    pub fn integral(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(x, y)| (x[1] - x[0]) * (y[0] + y[1]) / 2.0)
            .sum()
    }

    /// Grid positions of strict local maxima of the density.
    pub fn modes(&self) -> Vec<f64> {
        (1..self.density.len().saturating_sub(1))
            .filter(|&i| self.density[i] > self.density[i - 1] && self.density[i] >= self.density[i + 1])
            .map(|i| self.grid[i])
            .collect()
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Silverman's rule, 0.9 min(sd, IQR/1.34) n^(-1/5); falls back to the
/// sd alone when the IQR is zero. Zero for a constant sample.
pub fn silverman_bandwidth(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    if samples.len() < 2 {
        return 0.0;
    }
    let mean = samples.iter().sum::<f64>() / n;
    let sd = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    0.9 * spread * n.powf(-0.2)
}

/// Histogram plus Gaussian KDE of response times in seconds over
/// `[0, max_duration_s]`.
///
/// The bandwidth is Silverman's, floored at 1/100 of the sample-and-video
/// span so the 200-point grid always resolves the kernels.
pub fn density_of(samples: Vec<f64>, max_duration_s: f64) -> Result<DensityEstimate> {
    if samples.is_empty() {
        return Err(Error::Analysis("no response times selected".into()));
    }
    if let Some(bad) = samples.iter().find(|t| !t.is_finite() || **t < 0.0) {
        return Err(Error::Analysis(format!("invalid response time {bad}")));
    }
    let xmin = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let xmax = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let bins = ((max_duration_s / HISTOGRAM_BIN_S).ceil() as usize).max(1);
    let bin_edges: Vec<f64> = (0..=bins).map(|i| i as f64 * HISTOGRAM_BIN_S).collect();
    let mut counts = vec![0usize; bins];
    for &t in &samples {
        counts[((t / HISTOGRAM_BIN_S) as usize).min(bins - 1)] += 1;
    }

    let span = max_duration_s.max(xmax) - xmin.min(0.0);
    let floor = (span / 100.0).max(1e-3);
    let h = silverman_bandwidth(&samples).max(floor);
    let lo = (xmin - 4.0 * h).min(0.0);
    let hi = (xmax + 4.0 * h).max(max_duration_s);
    let grid: Vec<f64> = (0..DENSITY_GRID)
        .map(|i| lo + (hi - lo) * i as f64 / (DENSITY_GRID - 1) as f64)
        .collect();
    let norm = 1.0 / (samples.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let density = grid
        .iter()
        .map(|&x| norm * samples.iter().map(|&s| (-0.5 * ((x - s) / h).powi(2)).exp()).sum::<f64>())
        .collect();
    Ok(DensityEstimate {
        samples,
        bin_edges,
        counts,
        grid,
        density,
        bandwidth: h,
    })
}

pub fn max_duration_s(d: &StudyDataset) -> f64 {
    d.base_videos.iter().map(|b| b.duration_ms()).max().unwrap_or(0) as f64 / 1000.0
}

pub fn response_time_density(
    records: &[PerceptionRecord],
    d: &StudyDataset,
    filter: &TimeFilter,
) -> Result<DensityEstimate> {
    let mut samples = Vec::new();
    for (i, r) in records.iter().enumerate() {
        let m = match_record(d, i, r)?;
        let truth = truth_of(d, r)?;
        let ok = match filter.judged_on {
            Dimension::Actor => m.actor_match,
            Dimension::Action => m.action_match,
        };
        let keep = match filter.correctness {
            Correctness::Both => true,
            Correctness::Correct => ok,
            Correctness::Incorrect => !ok,
        } && filter.level.map_or(true, |l| l == r.level)
            && filter.action.map_or(true, |a| a == truth.action);
        if keep {
            samples.push(r.response_time_ms as f64 / 1000.0);
        }
    }
    density_of(samples, max_duration_s(d))
}

/// Histogram bars with the KDE drawn over them.
pub fn plot_density(e: &DensityEstimate, width: u32, height: u32) -> RgbImage {
    let mut img = RgbImage::from_pixel(width, height, Rgb([255, 255, 255]));
    let (x0, x1) = (e.grid[0], *e.grid.last().expect("grid"));
    let n = e.samples.len() as f64;
    let bar_heights: Vec<f64> = e.counts.iter().map(|&c| c as f64 / (n * HISTOGRAM_BIN_S)).collect();
    let top = e.density.iter().chain(&bar_heights).copied().fold(0.0, f64::max).max(1e-12) * 1.05;
    let px = |x: f64| ((x - x0) / (x1 - x0) * (width - 1) as f64).round() as i64;
    let py = |y: f64| (height - 1) as i64 - (y / top * (height - 1) as f64).round() as i64;
    for (i, &bh) in bar_heights.iter().enumerate() {
        let (a, b) = (px(e.bin_edges[i]), px(e.bin_edges[i + 1]));
        for x in a.max(0)..b.min(width as i64) {
            for y in py(bh).max(0)..height as i64 {
                img.put_pixel(x as u32, y as u32, Rgb([150, 170, 210]));
            }
        }
    }
    let mut prev: Option<(i64, i64)> = None;
    for (&x, &y) in e.grid.iter().zip(&e.density) {
        let p = (px(x), py(y));
        if let Some(q) = prev {
            let steps = (p.0 - q.0).abs().max((p.1 - q.1).abs()).max(1);
            for s in 0..=steps {
                let xx = q.0 + (p.0 - q.0) * s / steps;
                let yy = q.1 + (p.1 - q.1) * s / steps;
                for dy in 0..2 {
                    if (0..width as i64).contains(&xx) && (0..height as i64).contains(&(yy + dy)) {
                        img.put_pixel(xx as u32, (yy + dy) as u32, Rgb([200, 30, 30]));
                    }
                }
            }
        }
        prev = Some(p);
    }
    img
}

/// Row-normalized confusion rates as a gray heat map, one square per cell.
pub fn plot_confusion(m: &ConfusionMatrix, cell: u32) -> RgbImage {
    let rates = m.rates();
    let mut img = RgbImage::new(cell * m.cols.len() as u32, cell * m.rows.len() as u32);
    for (r, row) in rates.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            let g = (255.0 * (1.0 - v)).round() as u8;
            for y in 0..cell {
                for x in 0..cell {
                    img.put_pixel(c as u32 * cell + x, r as u32 * cell + y, Rgb([g, g, g]));
                }
            }
        }
    }
    img
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub records: usize,
    pub actor_confusion: ConfusionMatrix,
    pub action_confusion: ConfusionMatrix,
    pub actor_accuracy: f64,
    pub action_accuracy: f64,
    pub strata: Vec<StratifiedAccuracy>,
}

pub fn report(records: &[PerceptionRecord], d: &StudyDataset) -> Result<Report> {
    let actor_confusion = confusion(records, d, Dimension::Actor)?;
    let action_confusion = confusion(records, d, Dimension::Action)?;
    Ok(Report {
        records: records.len(),
        actor_accuracy: actor_confusion.accuracy(),
        action_accuracy: action_confusion.accuracy(),
        actor_confusion,
        action_confusion,
        strata: StratumBy::ALL
            .into_iter()
            .map(|by| stratified_accuracy(records, d, by))
            .collect::<Result<_>>()?,
    })
}

impl Report {
    pub fn to_text(&self) -> String {
        let matched = |m: &ConfusionMatrix| (0..m.rows.len()).map(|r| m.correct(r)).sum::<u64>();
        let pct = |m: &ConfusionMatrix| if m.total() == 0 { "n/a".to_string() } else { percent(matched(m), m.total()) };
        let mut out = format!(
            "records: {}\nactor match: {}\naction match: {}\n\nactor confusion\n{}\naction confusion\n{}",
            self.records,
            pct(&self.actor_confusion),
            pct(&self.action_confusion),
            self.actor_confusion.to_text(),
            self.action_confusion.to_text()
        );
        for s in &self.strata {
            let _ = write!(out, "\n{}", s.to_text());
        }
        out
    }
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes tables (text and JSON), density data and plots into `out`.
/// Densities with no matching records are skipped.
pub fn write_report(records: &[PerceptionRecord], d: &StudyDataset, out: &Path) -> Result<Report> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let rep = report(records, d)?;
    write_file(&out.join("report.txt"), rep.to_text())?;
    write_file(&out.join("report.json"), serde_json::to_vec_pretty(&rep)?)?;
    for (name, m) in [("actor", &rep.actor_confusion), ("action", &rep.action_confusion)] {
        let path = out.join(format!("confusion_{name}.png"));
        plot_confusion(m, 24).save(&path)?;
    }
    for dim in Dimension::ALL {
        for correctness in [Correctness::Both, Correctness::Correct, Correctness::Incorrect] {
            let filter = TimeFilter { correctness, judged_on: dim, ..TimeFilter::default() };
            let stem = format!("density_{}_{}", dim.as_str(), serde_json::to_value(correctness)?.as_str().unwrap_or("x"));
            match response_time_density(records, d, &filter) {
                Ok(e) => {
                    write_file(&out.join(format!("{stem}.json")), serde_json::to_vec(&e)?)?;
                    plot_density(&e, 480, 240).save(out.join(format!("{stem}.png")))?;
                }
                Err(Error::Analysis(msg)) => log::info!("{stem}: {msg}"),
                Err(e) => return Err(e),
            }
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset() -> StudyDataset {
        StudyDataset::standard(25.0, 200)
    }

    /// A record for a base video with the given truth, at a chosen level.
    fn rec(d: &StudyDataset, actor: Actor, action: Action, level: LevelPreset, a: Choice<Actor>, c: Choice<Action>, ms: u64) -> PerceptionRecord {
        let base = d.base_videos.iter().position(|b| b.actor == actor && b.action == action).unwrap();
        let v = d.video_at(base, level).unwrap();
        PerceptionRecord {
            participant_id: "x".into(),
            video_id: v.video_id.clone(),
            level,
            actor_choice: a,
            action_choice: c,
            response_time_ms: ms,
            watched_full: false,
        }
    }

    #[test]
    fn all_correct_gives_identity_pattern() {
        let d = dataset();
        let records: Vec<_> = Action::ALL
            .iter()
            .map(|&a| rec(&d, Actor::Human, a, LevelPreset::Fine, Choice::Known(Actor::Human), Choice::Known(a), 1000))
            .collect();
        let m = confusion(&records, &d, Dimension::Action).unwrap();
        let rates = m.rates();
        for r in 0..8 {
            assert_eq!(rates[r][0], 0.0);
            for c in 1..9 {
                assert_eq!(rates[r][c], (c == r + 1) as u8 as f64);
            }
        }
    }

    #[test]
    fn empty_stratum_has_no_rate() {
        let d = dataset();
        let ok = |l| rec(&d, Actor::Animal, Action::Eating, l, Choice::Known(Actor::Animal), Choice::Known(Action::Eating), 900);
        let bad = |l| rec(&d, Actor::Animal, Action::Eating, l, Choice::Known(Actor::Human), Choice::Known(Action::Flying), 900);
        let records = vec![ok(LevelPreset::Coarse), ok(LevelPreset::Coarse), bad(LevelPreset::Fine)];
        let s = stratified_accuracy(&records, &d, StratumBy::Level).unwrap();
        let get = |k: &str| s.strata.iter().find(|x| x.key == k).unwrap().clone();
        assert_eq!(get("coarse").action_rate, Some(1.0));
        assert_eq!(get("fine").actor_rate, Some(0.0));
        assert_eq!((get("medium").n, get("medium").actor_rate), (0, None));
        assert!(s.to_text().contains("n/a"));
    }

    #[test]
    fn strata_recombine_to_overall() {
        let d = dataset();
        let mut records = Vec::new();
        for (i, &a) in Action::ALL.iter().enumerate() {
            for j in 0..=i {
                let level = LevelPreset::ALL[j % 3];
                let pick = if j % 2 == 0 { Choice::Known(a) } else { Choice::Unknown };
                let actor = if j % 2 == 0 { Choice::Known(Actor::Human) } else { Choice::Unknown };
                records.push(rec(&d, Actor::Human, a, level, actor, pick, 500 + 10 * j as u64));
            }
        }
        for by in StratumBy::ALL {
            let s = stratified_accuracy(&records, &d, by).unwrap();
            let w: f64 = s.strata.iter().filter_map(|x| x.action_rate.map(|r| r * x.n as f64)).sum();
            assert!((w / s.overall.n as f64 - s.overall.action_rate.unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn rounding_is_half_up_and_exact() {
        assert_eq!(percent(563, 800), "70.4%");
        assert_eq!(percent(1, 3), "33.3%");
        assert_eq!(percent(2, 3), "66.7%");
        assert_eq!(rounded(11, 100, 100), 11);
        assert_eq!(rounded(1, 8, 100), 13);
    }

    #[test]
    fn silverman_matches_hand_computation() {
        // sd = sqrt(2.5), IQR = 2 over 1..=5, so min(1.5811, 1.4925).
        let h = silverman_bandwidth(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert!((h - 0.9 * (2.0 / 1.34) * 5f64.powf(-0.2)).abs() < 1e-12);
    }

    #[test]
    fn constant_times_peak_at_the_value() {
        let e = density_of(vec![3.0; 12], 8.0).unwrap();
        assert_eq!(e.counts.iter().filter(|&&c| c > 0).count(), 1);
        assert_eq!(e.counts.iter().sum::<usize>(), 12);
        let imax = (0..e.density.len()).max_by(|&a, &b| e.density[a].total_cmp(&e.density[b])).unwrap();
        let step = e.grid[1] - e.grid[0];
        assert!((e.grid[imax] - 3.0).abs() <= step);
        assert!((e.integral() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn empty_selection_is_an_error() {
        assert!(matches!(density_of(Vec::new(), 8.0), Err(Error::Analysis(_))));
        let d = dataset();
        let r = rec(&d, Actor::Human, Action::Walking, LevelPreset::Fine, Choice::Unknown, Choice::Unknown, 700);
        let f = TimeFilter { correctness: Correctness::Correct, ..TimeFilter::default() };
        assert!(response_time_density(&[r], &d, &f).is_err());
    }

    #[test]
    fn plots_have_requested_size() {
        let e = density_of(vec![1.0, 2.0, 2.5], 4.0).unwrap();
        assert_eq!(plot_density(&e, 100, 50).dimensions(), (100, 50));
    }
}
