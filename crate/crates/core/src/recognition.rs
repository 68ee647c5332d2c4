//! Actor and action classification over video descriptors with a
//! leave-one-out protocol, plus codebook learning and bag-of-words encoding
//! for externally supplied local features.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::{Action, Actor, Background};
use crate::segment::LevelPreset;

pub const KMEANS_MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDescriptor {
    pub video_id: String,
    pub actor: Actor,
    pub action: Action,
    pub background: Background,
    /// `None` for descriptors not tied to a hierarchy level (written `n/a`).
    pub level: Option<LevelPreset>,
    pub vector: Vec<f64>,
}

impl LabeledDescriptor {
    /// `<video_id> <actor> <action> <background> <level> v1 ... vd`
    pub fn to_line(&self) -> String {
        let level = self.level.map_or("n/a", LevelPreset::as_str);
        let mut line = format!("{} {} {} {} {}", self.video_id, self.actor, self.action, self.background, level);
        for v in &self.vector {
            line.push(' ');
            line.push_str(&v.to_string());
        }
        line
    }
}

impl FromStr for LabeledDescriptor {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let mut it = line.split_whitespace();
        let mut field = |name: &str| {
            it.next()
                .ok_or_else(|| Error::Format(format!("descriptor line is missing its {name}")))
        };
        let video_id = field("video id")?.to_string();
        let actor = field("actor")?.parse()?;
        let action = field("action")?.parse()?;
        let background = field("background")?.parse()?;
        let level = match field("level")? {
            "n/a" => None,
            l => Some(l.parse()?),
        };
        let vector = it
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::Format(format!("bad descriptor value {v:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if vector.is_empty() {
            return Err(Error::Format(format!("descriptor {video_id} has no values")));
        }
        Ok(LabeledDescriptor {
            video_id,
            actor,
            action,
            background,
            level,
            vector,
        })
    }
}

/// Parses the descriptor text format. Blank lines and `#` comments are
/// skipped; all vectors must share one dimension.
pub fn parse_descriptors(text: &str) -> Result<Vec<LabeledDescriptor>> {
    let mut out: Vec<LabeledDescriptor> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let d: LabeledDescriptor = line
            .parse()
            .map_err(|e| Error::Format(format!("line {}: {e}", n + 1)))?;
        if let Some(first) = out.first() {
            if first.vector.len() != d.vector.len() {
                return Err(Error::Format(format!(
                    "line {}: dimension {} differs from {}",
                    n + 1,
                    d.vector.len(),
                    first.vector.len()
                )));
            }
        }
        out.push(d);
    }
    Ok(out)
}

pub fn read_descriptors(path: impl AsRef<Path>) -> Result<Vec<LabeledDescriptor>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_descriptors(&text)
}

pub fn write_descriptors(path: impl AsRef<Path>, data: &[LabeledDescriptor]) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::new();
    for d in data {
        text.push_str(&d.to_line());
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distance {
    #[default]
    Euclidean,
    ChiSquared,
}

impl Distance {
    pub fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Distance::Euclidean => squared_euclidean(a, b).sqrt(),
            Distance::ChiSquared => {
                0.5 * a
                    .iter()
                    .zip(b)
                    .filter(|(x, y)| *x + *y > 0.0)
                    .map(|(x, y)| (x - y).powi(2) / (x + y))
                    .sum::<f64>()
            }
        }
    }
}

fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
}

impl Codebook {
    /// Index of the nearest word; ties go to the lowest index.
    pub fn nearest(&self, x: &[f64]) -> usize {
        nearest_index(&self.centroids, x)
    }
}

fn nearest_index(centroids: &[Vec<f64>], x: &[f64]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = squared_euclidean(c, x);
        if d < best.1 {
            best = (i, d);
        }
    }
    best.0
}

/// Lloyd's algorithm with k-means++ seeding.
pub fn kmeans_codebook(samples: &[Vec<f64>], k: usize, seed: u64) -> Result<Codebook> {
    if k == 0 {
        return Err(Error::Param("codebook needs at least one word".into()));
    }
    if samples.len() < k {
        return Err(Error::Param(format!(
            "{} samples are too few for {k} words",
            samples.len()
        )));
    }
    let dim = samples[0].len();
    if samples.iter().any(|s| s.len() != dim) {
        return Err(Error::Param("samples have mixed dimensions".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = vec![rng.gen_range(0..samples.len())];
    let mut d2: Vec<f64> = samples.iter().map(|s| squared_euclidean(s, &samples[chosen[0]])).collect();
    while chosen.len() < k {
        let next = match WeightedIndex::new(&d2) {
            Ok(dist) => dist.sample(&mut rng),
            // Every sample already coincides with a centroid.
            Err(_) => (0..samples.len()).find(|i| !chosen.contains(i)).expect("k <= n"),
        };
        chosen.push(next);
        for (d, s) in d2.iter_mut().zip(samples) {
            *d = d.min(squared_euclidean(s, &samples[next]));
        }
    }
    let mut centroids: Vec<Vec<f64>> = chosen.iter().map(|&i| samples[i].clone()).collect();

    let mut assignment = vec![usize::MAX; samples.len()];
    for _ in 0..KMEANS_MAX_ITERATIONS {
        let next: Vec<usize> = samples.iter().map(|s| nearest_index(&centroids, s)).collect();
        if next == assignment {
            break;
        }
        assignment = next;
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (s, &a) in samples.iter().zip(&assignment) {
            counts[a] += 1;
            for (acc, v) in sums[a].iter_mut().zip(s) {
                *acc += v;
            }
        }
        for ((c, sum), n) in centroids.iter_mut().zip(sums).zip(counts) {
            if n > 0 {
                *c = sum.into_iter().map(|v| v / n as f64).collect();
            }
        }
    }
    Ok(Codebook { k, centroids })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BowHistogram {
    pub bins: Vec<f64>,
    /// Set when there were no local features to encode.
    pub empty: bool,
}

/// L1-normalized word histogram.
pub fn bow_encode(features: &[Vec<f64>], cb: &Codebook) -> Result<BowHistogram> {
    let dim = cb.centroids.first().map_or(0, Vec::len);
    if let Some(f) = features.iter().find(|f| f.len() != dim) {
        return Err(Error::Param(format!(
            "feature dimension {} does not match codebook dimension {dim}",
            f.len()
        )));
    }
    let mut bins = vec![0.0; cb.k];
    if features.is_empty() {
        log::warn!("bag-of-words input is empty; returning a zero histogram");
        return Ok(BowHistogram { bins, empty: true });
    }
    for f in features {
        bins[cb.nearest(f)] += 1.0;
    }
    let n = features.len() as f64;
    bins.iter_mut().for_each(|b| *b /= n);
    Ok(BowHistogram { bins, empty: false })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Actor,
    Action,
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "actor" => Ok(Task::Actor),
            "action" => Ok(Task::Action),
            other => Err(Error::Param(format!("unknown task {other:?}"))),
        }
    }
}

impl Task {
    /// Class names in report order.
    pub fn classes(self) -> Vec<&'static str> {
        match self {
            Task::Actor => Actor::ALL.iter().map(|a| a.as_str()).collect(),
            Task::Action => Action::ALL.iter().map(|a| a.as_str()).collect(),
        }
    }

    pub fn class_of(self, d: &LabeledDescriptor) -> usize {
        match self {
            Task::Actor => d.actor.index(),
            Task::Action => d.action.index(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Classifier {
    NearestCentroid,
    Knn { k: usize },
}

impl fmt::Display for Classifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Classifier::NearestCentroid => f.write_str("nearest-centroid"),
            Classifier::Knn { k } => write!(f, "{k}-nn"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub classifier: Classifier,
    pub distance: Distance,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            classifier: Classifier::NearestCentroid,
            distance: Distance::Euclidean,
        }
    }
}

/// A model trained on one fold.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    /// `(class, centroid)` in class order.
    Centroids {
        distance: Distance,
        centroids: Vec<(usize, Vec<f64>)>,
    },
    /// Training samples sorted by video id.
    Neighbors {
        distance: Distance,
        k: usize,
        samples: Vec<(String, usize, Vec<f64>)>,
    },
}

impl Model {
    pub fn predict(&self, x: &[f64]) -> usize {
        match self {
            Model::Centroids { distance, centroids } => {
                let mut best = (usize::MAX, f64::INFINITY);
                for (class, c) in centroids {
                    let d = distance.eval(c, x);
                    if d < best.1 {
                        best = (*class, d);
                    }
                }
                best.0
            }
            Model::Neighbors { distance, k, samples } => {
                let mut ranked: Vec<(f64, usize)> = samples
                    .iter()
                    .enumerate()
                    .map(|(i, (_, _, v))| (distance.eval(v, x), i))
                    .collect();
                ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                // Majority vote; ties go to the class whose nearest member
                // ranks first.
                let mut votes: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
                for (rank, (_, i)) in ranked.iter().take(*k).enumerate() {
                    let e = votes.entry(samples[*i].1).or_insert((0, rank));
                    e.0 += 1;
                }
                votes
                    .into_iter()
                    .max_by(|a, b| a.1 .0.cmp(&b.1 .0).then(b.1 .1.cmp(&a.1 .1)))
                    .map(|(c, _)| c)
                    .expect("k >= 1 and training set non-empty")
            }
        }
    }
}

/// Trains on every descriptor except `held_out`.
pub fn train_fold(
    data: &[LabeledDescriptor],
    task: Task,
    held_out: usize,
    config: &ClassifierConfig,
) -> Model {
    let mut train: Vec<&LabeledDescriptor> = data
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != held_out)
        .map(|(_, d)| d)
        .collect();
    // Canonical order so the model does not depend on input order.
    train.sort_by(|a, b| {
        a.video_id.cmp(&b.video_id).then_with(|| {
            a.vector
                .iter()
                .zip(&b.vector)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    match config.classifier {
        Classifier::NearestCentroid => {
            let mut groups: BTreeMap<usize, (Vec<f64>, usize)> = BTreeMap::new();
            for d in train {
                let e = groups
                    .entry(task.class_of(d))
                    .or_insert_with(|| (vec![0.0; d.vector.len()], 0));
                for (acc, v) in e.0.iter_mut().zip(&d.vector) {
                    *acc += v;
                }
                e.1 += 1;
            }
            Model::Centroids {
                distance: config.distance,
                centroids: groups
                    .into_iter()
                    .map(|(c, (sum, n))| (c, sum.into_iter().map(|v| v / n as f64).collect()))
                    .collect(),
            }
        }
        Classifier::Knn { k } => Model::Neighbors {
            distance: config.distance,
            k: k.max(1),
            samples: train
                .into_iter()
                .map(|d| (d.video_id.clone(), task.class_of(d), d.vector.clone()))
                .collect(),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    /// Ground-truth classes.
    pub rows: Vec<String>,
    /// Predicted or chosen classes; may include `unknown`.
    pub cols: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(rows: Vec<String>, cols: Vec<String>) -> Self {
        let counts = vec![vec![0; cols.len()]; rows.len()];
        ConfusionMatrix { rows, cols, counts }
    }

    pub fn add(&mut self, row: &str, col: &str) {
        let r = self.rows.iter().position(|x| x == row).expect("known row");
        let c = self.cols.iter().position(|x| x == col).expect("known column");
        self.counts[r][c] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_total(&self, r: usize) -> u64 {
        self.counts[r].iter().sum()
    }

    /// Row-normalized rates; an empty row stays all zero.
    pub fn rates(&self) -> Vec<Vec<f64>> {
        (0..self.rows.len())
            .map(|r| {
                let n = self.row_total(r);
                self.counts[r]
                    .iter()
                    .map(|&c| if n == 0 { 0.0 } else { c as f64 / n as f64 })
                    .collect()
            })
            .collect()
    }

    /// Count on the cell whose column names the row's class.
    pub fn correct(&self, r: usize) -> u64 {
        self.cols
            .iter()
            .position(|c| *c == self.rows[r])
            .map_or(0, |c| self.counts[r][c])
    }

    /// Matched fraction over all entries.
    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        (0..self.rows.len()).map(|r| self.correct(r)).sum::<u64>() as f64 / total as f64
    }

    /// Aligned text table with rates rounded to two decimals.
    pub fn to_text(&self) -> String {
        let width = self
            .rows
            .iter()
            .chain(&self.cols)
            .map(String::len)
            .max()
            .unwrap_or(4)
            .max(5);
        let mut out = format!("{:width$}", "");
        for c in &self.cols {
            out.push_str(&format!(" {c:>width$}"));
        }
        out.push('\n');
        for (r, row) in self.counts.iter().enumerate() {
            out.push_str(&format!("{:width$}", self.rows[r]));
            let n = self.row_total(r).max(1);
            for &c in row {
                // Half-up in integers so 0.125 shows as 0.13.
                let hundredths = (200 * c + n) / (2 * n);
                let v = format!("{}.{:02}", hundredths / 100, hundredths % 100);
                out.push_str(&format!(" {v:>width$}"));
            }
            out.push_str(&format!("  (n={})\n", self.row_total(r)));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub video_id: String,
    pub truth: String,
    pub predicted: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LooReport {
    pub task: Task,
    pub config: ClassifierConfig,
    pub classifier_name: String,
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
    /// Binary accuracy of "is class c" read off the multiclass predictions,
    /// per class; action task only.
    pub one_vs_all: Option<Vec<(String, f64)>>,
    pub predictions: Vec<Prediction>,
}

/// Leave-one-out over `data`; every class present needs two members.
pub fn loo_evaluate(
    data: &[LabeledDescriptor],
    task: Task,
    config: &ClassifierConfig,
) -> Result<LooReport> {
    let names = task.classes();
    let mut members: BTreeMap<usize, usize> = BTreeMap::new();
    for d in data {
        *members.entry(task.class_of(d)).or_default() += 1;
    }
    if let Some((c, n)) = members.iter().find(|(_, &n)| n < 2) {
        return Err(Error::Param(format!(
            "class {} has {n} video(s); leave-one-out needs at least 2",
            names[*c]
        )));
    }
    if let Some(d) = data.iter().find(|d| d.vector.len() != data[0].vector.len()) {
        return Err(Error::Param(format!("descriptor {} has a different dimension", d.video_id)));
    }

    let predicted: Vec<usize> = (0..data.len())
        .into_par_iter()
        .map(|i| train_fold(data, task, i, config).predict(&data[i].vector))
        .collect();

    let present: Vec<String> = members.keys().map(|&c| names[c].to_string()).collect();
    let mut confusion = ConfusionMatrix::new(present.clone(), present.clone());
    let mut predictions = Vec::with_capacity(data.len());
    for (d, &p) in data.iter().zip(&predicted) {
        let truth = names[task.class_of(d)];
        confusion.add(truth, names[p]);
        predictions.push(Prediction {
            video_id: d.video_id.clone(),
            truth: truth.to_string(),
            predicted: names[p].to_string(),
        });
    }
    let one_vs_all = (task == Task::Action).then(|| {
        members
            .keys()
            .map(|&c| {
                let right = data
                    .iter()
                    .zip(&predicted)
                    .filter(|(d, &p)| (task.class_of(d) == c) == (p == c))
                    .count();
                (names[c].to_string(), right as f64 / data.len() as f64)
            })
            .collect()
    });
    Ok(LooReport {
        task,
        config: *config,
        classifier_name: config.classifier.to_string(),
        accuracy: confusion.accuracy(),
        confusion,
        one_vs_all,
        predictions,
    })
}
