use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use svx::analysis;
use svx::labels::{Action, Actor, Background};
use svx::motion::{compute_flow, write_flow};
use svx::recognition::{self, Classifier, ClassifierConfig, Distance, LabeledDescriptor, Task};
use svx::segment::{
    build_hierarchy, extract_level, stream_segment_volume, write_hierarchy, LevelPreset, SegmentationParams,
};
use svx::ssc::{ssc_descriptor, write_descriptor};
use svx::study::{self, Study, StudyDataset};
use svx::video::{self, VideoVolume};

#[derive(Parser)]
#[command(name = "svx", version, about = "Supervoxel segmentation, shape context and perception-study tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment a video into a supervoxel hierarchy, one label map per level.
    Segment(SegmentArgs),
    /// Compute shape context descriptors at chosen hierarchy levels.
    Ssc(SscArgs),
    /// Leave-one-out evaluation on a descriptor file.
    Classify(ClassifyArgs),
    /// Confusion tables, strata and response-time densities from a study log.
    Analyze(AnalyzeArgs),
    /// Run the perception-study HTTP service.
    Serve(ServeArgs),
}

#[derive(Args)]
struct SegParams {
    #[arg(long, default_value_t = 0.2)]
    c: f64,
    #[arg(long = "c-reg", default_value_t = 10.0)]
    c_reg: f64,
    #[arg(long = "min", default_value_t = 20)]
    min_size: u64,
    #[arg(long, default_value_t = 0.4)]
    sigma: f64,
    #[arg(long = "range", default_value_t = 10)]
    stream_range: usize,
    #[arg(long = "levels", default_value_t = 30)]
    hie_num: usize,
    /// Resize every frame to WxH (aspect preserved) before segmenting.
    #[arg(long, value_parser = parse_dims)]
    resize: Option<(usize, usize)>,
}

impl SegParams {
    fn params(&self) -> SegmentationParams {
        SegmentationParams {
            c: self.c,
            c_reg: self.c_reg,
            min_size: self.min_size,
            sigma: self.sigma,
            stream_range: self.stream_range,
            hie_num: self.hie_num,
            ..SegmentationParams::default()
        }
    }

    fn load(&self, input: &PathBuf) -> Result<VideoVolume> {
        let v = video::load_frames(input).with_context(|| format!("loading {}", input.display()))?;
        Ok(match self.resize {
            Some((w, h)) => video::resize_bilinear(&v, w, h, true)?,
            None => v,
        })
    }
}

fn parse_dims(s: &str) -> std::result::Result<(usize, usize), String> {
    let (w, h) = s.split_once('x').ok_or("expected WxH")?;
    Ok((w.parse().map_err(|_| "bad width")?, h.parse().map_err(|_| "bad height")?))
}

#[derive(Args)]
struct SegmentArgs {
    /// PPM frame directory or SVXV file.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    seg: SegParams,
    /// Segment the whole volume at once instead of streaming.
    #[arg(long)]
    batch: bool,
    /// Also write random-color and boundary renderings of these levels.
    #[arg(long, value_delimiter = ',')]
    render: Vec<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SscArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    seg: SegParams,
    #[arg(long, value_delimiter = ',', default_value = "fine,medium,coarse")]
    at: Vec<LevelPreset>,
    /// Video id used in the text export; defaults to the input file stem.
    #[arg(long)]
    id: Option<String>,
    /// Ground truth; with all three set, labeled lines are appended to
    /// `--features`.
    #[arg(long)]
    actor: Option<Actor>,
    #[arg(long)]
    action: Option<Action>,
    #[arg(long, default_value = "static")]
    background: Background,
    #[arg(long)]
    features: Option<PathBuf>,
    /// Also dump the optical flow as SVXF.
    #[arg(long)]
    dump_flow: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassifierKind {
    Nc,
    Knn,
}

#[derive(Clone, Copy, ValueEnum)]
enum DistanceKind {
    Euclidean,
    Chi2,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    task: Task,
    #[arg(long)]
    features: PathBuf,
    #[arg(long, value_enum, default_value = "nc")]
    classifier: ClassifierKind,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, value_enum, default_value = "euclidean")]
    distance: DistanceKind,
    /// Only use descriptors computed at this level.
    #[arg(long)]
    level: Option<LevelPreset>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// NDJSON record log.
    #[arg(long)]
    log: PathBuf,
    /// Dataset manifest (JSON).
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    /// Dataset manifest (JSON).
    #[arg(long)]
    dataset: PathBuf,
    /// Directory for the append-only logs.
    #[arg(long)]
    log_dir: PathBuf,
    /// Root of `<video_id>/frame_NNNNN.ppm` segmentation frames.
    #[arg(long)]
    media: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Segment(a) => segment(a),
        Command::Ssc(a) => ssc(a),
        Command::Classify(a) => classify(a),
        Command::Analyze(a) => analyze(a),
        Command::Serve(a) => serve(a),
    }
}

fn segment(a: SegmentArgs) -> Result<()> {
    let v = a.seg.load(&a.input)?;
    let p = a.seg.params();
    log::info!("{}x{}x{} voxels", v.width(), v.height(), v.frame_count());
    let h = if a.batch { build_hierarchy(&v, &p)? } else { stream_segment_volume(&v, &p)? };
    write_hierarchy(&h, &a.out)?;
    for level in a.render {
        let s = extract_level(&h, level)?;
        let dir = a.out.join(format!("render_{level:02}"));
        video::write_frames(&svx::render::colorize(&s, level as u64)?, dir.join("color"))?;
        video::write_frames(&svx::render::render_boundaries(&s), dir.join("boundary"))?;
    }
    println!("levels: {}", h.depth());
    println!("regions per level: {:?}", h.counts());
    Ok(())
}

fn ssc(a: SscArgs) -> Result<()> {
    let v = a.seg.load(&a.input)?;
    let id = match a.id {
        Some(id) => id,
        None => a.input.file_stem().and_then(|s| s.to_str()).context("cannot derive a video id")?.to_string(),
    };
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let h = build_hierarchy(&v, &a.seg.params())?;
    let flow = compute_flow(&v)?;
    if a.dump_flow {
        write_flow(&flow, a.out.join(format!("{id}.svxf")))?;
    }
    let mut text = String::new();
    let mut labeled = Vec::new();
    for level in a.at {
        let d = ssc_descriptor(&extract_level(&h, level)?, &flow)?;
        write_descriptor(&d, a.out.join(format!("{id}_{level}.svxd")))?;
        let values: Vec<String> = d.aggregate.iter().map(|x| format!("{x:.6}")).collect();
        text.push_str(&format!("{id}_{level} {}\n", values.join(" ")));
        if let (Some(actor), Some(action)) = (a.actor, a.action) {
            labeled.push(LabeledDescriptor {
                video_id: id.clone(),
                actor,
                action,
                background: a.background,
                level: Some(level),
                vector: d.aggregate,
            });
        }
    }
    fs::write(a.out.join(format!("{id}.txt")), text)?;
    match (a.features, labeled.is_empty()) {
        (Some(path), false) => {
            let mut f = fs::OpenOptions::new().create(true).append(true).open(&path)?;
            for d in &labeled {
                writeln!(f, "{}", d.to_line())?;
            }
        }
        (Some(_), true) => bail!("--features needs --actor and --action"),
        _ => {}
    }
    Ok(())
}

fn classify(a: ClassifyArgs) -> Result<()> {
    let mut data = recognition::read_descriptors(&a.features)?;
    if let Some(level) = a.level {
        data.retain(|d| d.level == Some(level));
    }
    let config = ClassifierConfig {
        classifier: match a.classifier {
            ClassifierKind::Nc => Classifier::NearestCentroid,
            ClassifierKind::Knn => Classifier::Knn { k: a.k },
        },
        distance: match a.distance {
            DistanceKind::Euclidean => Distance::Euclidean,
            DistanceKind::Chi2 => Distance::ChiSquared,
        },
    };
    let report = recognition::loo_evaluate(&data, a.task, &config)?;
    println!("{} on {} descriptors: accuracy {:.1}%", report.classifier_name, data.len(), 100.0 * report.accuracy);
    print!("{}", report.confusion.to_text());
    if let Some(path) = a.report {
        fs::write(&path, serde_json::to_vec_pretty(&report)?).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn analyze(a: AnalyzeArgs) -> Result<()> {
    let records = study::read_records(&a.log)?;
    let dataset = StudyDataset::load(&a.truth)?;
    let report = analysis::write_report(&records, &dataset, &a.out)?;
    print!("{}", report.to_text());
    Ok(())
}

fn serve(a: ServeArgs) -> Result<()> {
    let dataset = StudyDataset::load(&a.dataset)?;
    let study = Study::open(dataset, &a.log_dir)?;
    log::info!("{} records replayed from {}", study.records().len(), a.log_dir.display());
    let app = study::router(study::AppState::new(study, a.media));
    tokio::runtime::Runtime::new()?.block_on(async move {
        let listener = tokio::net::TcpListener::bind(a.addr).await?;
        log::info!("listening on http://{}", a.addr);
        axum::serve(listener, app).await?;
        Ok(())
    })
}
