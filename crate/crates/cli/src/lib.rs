//! `webly` command-line front end.
//!
//! Every subcommand reads plain files, writes plain files and records its
//! effective configuration (all flags, defaults included) next to its
//! primary output as `<output>.config.json`.

mod commands;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use webly_core::walk::{DEFAULT_BETA, DEFAULT_GAMMA, DEFAULT_MAX_ITER, DEFAULT_TOL};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "webly", version, about = "Webly-supervised data filtering, fusion, localization and evaluation")]
#[command(arg_required_else_help = true)]
pub struct Cli {
    /// Worker threads for parallel stages (results do not depend on it).
    #[arg(long, global = true, env = "WEBLY_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Random-walk filtering of each class: features + manifest -> kept manifest + relevance CSV.
    Filter(FilterArgs),
    /// Per-class source quotas over filtered manifests -> training manifest.
    Mix(MixArgs),
    /// Stratified train/validation split.
    Split(SplitArgs),
    /// Fuse video-level probabilities of several streams.
    Fuse(FuseArgs),
    /// Per-frame probability series -> video predictions (trimmed) or class scores (untrimmed).
    Classify(ClassifyArgs),
    /// Per-frame probability series -> temporal segments.
    Localize(LocalizeArgs),
    /// Classification accuracy per split and averaged.
    EvalAcc(EvalAccArgs),
    /// Untrimmed classification mAP.
    EvalMap(EvalMapArgs),
    /// Detection mAP at several temporal overlap ratios.
    EvalDetect(EvalDetectArgs),
    /// Noise-injection benchmark of the random-walk filter on synthetic clusters.
    BenchNoise(BenchNoiseArgs),
    /// Kept-set comparison of random-walk and classifier-based filtering.
    BenchBias(BenchBiasArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Filter(_) => "filter",
            Command::Mix(_) => "mix",
            Command::Split(_) => "split",
            Command::Fuse(_) => "fuse",
            Command::Classify(_) => "classify",
            Command::Localize(_) => "localize",
            Command::EvalAcc(_) => "eval-acc",
            Command::EvalMap(_) => "eval-map",
            Command::EvalDetect(_) => "eval-detect",
            Command::BenchNoise(_) => "bench-noise",
            Command::BenchBias(_) => "bench-bias",
        }
    }
}

/// Graph and walk parameters shared by the filtering commands.
#[derive(Args, Debug, Clone, Serialize)]
pub struct WalkArgs {
    /// Weight of the graph term against the uniform restart.
    #[arg(long, default_value_t = DEFAULT_BETA, env = "WEBLY_BETA")]
    pub beta: f64,
    /// Kernel scale in exp(-gamma * distance).
    #[arg(long, default_value_t = DEFAULT_GAMMA, env = "WEBLY_GAMMA")]
    pub gamma: f64,
    /// L1 convergence tolerance of the power iteration.
    #[arg(long, default_value_t = DEFAULT_TOL, env = "WEBLY_TOL")]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER, env = "WEBLY_MAX_ITER")]
    pub max_iter: usize,
    /// Allow transitions from a node to itself.
    #[arg(long, env = "WEBLY_SELF_LOOPS")]
    pub self_loops: bool,
    /// Refuse class graphs larger than this.
    #[arg(long, default_value_t = webly_core::graph::DEFAULT_MAX_NODES, env = "WEBLY_MAX_NODES")]
    pub max_nodes: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct FilterArgs {
    /// JSONL sample manifest.
    #[arg(long, env = "WEBLY_MANIFEST")]
    pub manifest: PathBuf,
    /// Feature matrix (binary or CSV); manifest `feature_row` indexes it.
    #[arg(long, env = "WEBLY_FEATURES")]
    pub features: PathBuf,
    #[arg(long, env = "WEBLY_OUT_MANIFEST")]
    pub out_manifest: PathBuf,
    #[arg(long, env = "WEBLY_OUT_RELEVANCE")]
    pub out_relevance: PathBuf,
    /// Keep the k most relevant samples of every class [default: 450].
    #[arg(long, conflicts_with = "threshold", env = "WEBLY_TOP_K")]
    pub top_k: Option<usize>,
    /// Keep samples whose relative relevance (class size x score) is at least this.
    #[arg(long, env = "WEBLY_THRESHOLD")]
    pub threshold: Option<f64>,
    #[command(flatten)]
    pub walk: WalkArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct MixArgs {
    /// Filtered manifests to draw from.
    #[arg(long = "manifest", required = true, num_args = 1.., env = "WEBLY_MANIFESTS", value_delimiter = ',')]
    pub manifests: Vec<PathBuf>,
    /// Relevance CSVs from `filter`; samples are ranked by their relevance.
    #[arg(long = "relevance", num_args = 1.., env = "WEBLY_RELEVANCE", value_delimiter = ',')]
    pub relevance: Vec<PathBuf>,
    /// Per-class quotas, e.g. `google_image+flickr=400,youtube_frame=500,gif_frame=100`.
    #[arg(long, default_value = "google_image+flickr=400,youtube_frame=500,gif_frame=100", env = "WEBLY_QUOTA")]
    pub quota: String,
    /// Take what is available instead of failing when a bucket is short.
    #[arg(long, env = "WEBLY_ALLOW_SHORT")]
    pub allow_short: bool,
    #[arg(long, env = "WEBLY_OUT")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct SplitArgs {
    #[arg(long, env = "WEBLY_MANIFEST")]
    pub manifest: PathBuf,
    /// Fraction of every class assigned to training.
    #[arg(long, default_value_t = 0.8, env = "WEBLY_RATIO")]
    pub ratio: f64,
    #[arg(long, default_value_t = 0, env = "WEBLY_SEED")]
    pub seed: u64,
    #[arg(long, env = "WEBLY_OUT_TRAIN")]
    pub out_train: PathBuf,
    #[arg(long, env = "WEBLY_OUT_VAL")]
    pub out_val: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Fusion {
    Average,
    Product,
}

#[derive(Args, Debug, Serialize)]
pub struct FuseArgs {
    /// Video probability tables (`video_id,<classes>`), one per stream.
    #[arg(long = "streams", required = true, num_args = 1.., env = "WEBLY_STREAMS", value_delimiter = ',')]
    pub streams: Vec<PathBuf>,
    /// Flow streams of different stack depths; averaged into one stream first.
    #[arg(long = "flow-streams", num_args = 1.., env = "WEBLY_FLOW_STREAMS", value_delimiter = ',')]
    pub flow_streams: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = Fusion::Product, env = "WEBLY_FUSION")]
    pub fusion: Fusion,
    /// Fused probability table.
    #[arg(long, env = "WEBLY_OUT")]
    pub out: PathBuf,
    /// Optional `video_id,predicted,score,tie` file.
    #[arg(long, env = "WEBLY_PREDICTIONS")]
    pub predictions: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifyMode {
    /// One label per video.
    Trimmed,
    /// Scores for every class, for ranking-based evaluation.
    Untrimmed,
}

#[derive(Args, Debug, Serialize)]
pub struct ClassifyArgs {
    /// Per-frame probability files; the file stem is the video id.
    #[arg(long = "series", required = true, num_args = 1.., env = "WEBLY_SERIES", value_delimiter = ',')]
    pub series: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = ClassifyMode::Trimmed, env = "WEBLY_MODE")]
    pub mode: ClassifyMode,
    #[arg(long, env = "WEBLY_OUT")]
    pub out: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LocalizeMode {
    Frames,
    Window,
}

#[derive(Args, Debug, Serialize)]
pub struct LocalizeArgs {
    #[arg(long = "series", required = true, num_args = 1.., env = "WEBLY_SERIES", value_delimiter = ',')]
    pub series: Vec<PathBuf>,
    #[arg(long, value_enum, env = "WEBLY_MODE")]
    pub mode: LocalizeMode,
    /// Per-frame probability a frame needs to count (frames mode).
    #[arg(long, required_if_eq("mode", "frames"), env = "WEBLY_THRESHOLD")]
    pub threshold: Option<f64>,
    /// Frame-by-frame segments must be longer than this many seconds.
    #[arg(long, default_value_t = webly_core::localization::DEFAULT_MIN_DURATION_S, env = "WEBLY_MIN_DURATION")]
    pub min_duration: f64,
    /// Tolerated non-qualifying frames inside one run (frames mode).
    #[arg(long, default_value_t = 0, env = "WEBLY_GAP_FRAMES")]
    pub gap_frames: usize,
    /// Window length in seconds (window mode).
    #[arg(long, default_value_t = 1.0, env = "WEBLY_WINDOW")]
    pub window: f64,
    /// Window stride in seconds (window mode).
    #[arg(long, default_value_t = 1.0, env = "WEBLY_STRIDE")]
    pub stride: f64,
    /// Merge overlapping same-class windows.
    #[arg(long, env = "WEBLY_MERGE")]
    pub merge: bool,
    #[arg(long, env = "WEBLY_OUT")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct EvalAccArgs {
    /// Prediction files, one per split.
    #[arg(long = "predictions", required = true, num_args = 1.., env = "WEBLY_PREDICTIONS", value_delimiter = ',')]
    pub predictions: Vec<PathBuf>,
    /// `video_id,class` truth files, aligned with `--predictions`.
    #[arg(long = "truth", required = true, num_args = 1.., env = "WEBLY_TRUTH", value_delimiter = ',')]
    pub truth: Vec<PathBuf>,
    #[arg(long, env = "WEBLY_OUT")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct EvalMapArgs {
    /// Video class-score table (`video_id,<classes>`).
    #[arg(long, env = "WEBLY_SCORES")]
    pub scores: PathBuf,
    /// `video_id,class` truth; a video may carry several classes.
    #[arg(long, env = "WEBLY_TRUTH")]
    pub truth: PathBuf,
    #[arg(long, env = "WEBLY_OUT")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct EvalDetectArgs {
    #[arg(long, env = "WEBLY_DETECTIONS")]
    pub detections: PathBuf,
    #[arg(long, env = "WEBLY_TRUTH")]
    pub truth: PathBuf,
    /// Temporal IoU thresholds.
    #[arg(long, value_delimiter = ',', default_values_t = webly_core::eval::TABLE8_THRESHOLDS.to_vec(), env = "WEBLY_THRESHOLDS")]
    pub thresholds: Vec<f64>,
    /// Row label of the mean row, e.g. the localization method.
    #[arg(long, default_value = "detections", env = "WEBLY_NAME")]
    pub name: String,
    #[arg(long, env = "WEBLY_OUT")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct BenchNoiseArgs {
    #[arg(long, env = "WEBLY_OUT_DIR")]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 200, env = "WEBLY_INLIERS")]
    pub inliers: usize,
    /// Distractor pool size.
    #[arg(long, default_value_t = 100, env = "WEBLY_POOL")]
    pub pool: usize,
    #[arg(long, default_value_t = 64, env = "WEBLY_DIM")]
    pub dim: usize,
    #[arg(long, default_value_t = 10.0, env = "WEBLY_SEPARATION")]
    pub separation: f64,
    #[arg(long, default_value_t = 0.5, env = "WEBLY_SIGMA")]
    pub sigma: f64,
    #[arg(long, default_value_t = 0, env = "WEBLY_SEED")]
    pub seed: u64,
    /// Noise fractions added to the clean set.
    #[arg(long, value_delimiter = ',', default_values_t = webly_core::bench::NOISE_LEVELS.to_vec(), env = "WEBLY_LEVELS")]
    pub levels: Vec<f64>,
    /// Sweep relative-relevance thresholds instead of removed fractions 0..30%.
    #[arg(long, value_delimiter = ',', env = "WEBLY_THRESHOLDS")]
    pub thresholds: Vec<f64>,
    /// Also write `pr.svg`.
    #[arg(long, env = "WEBLY_SVG")]
    pub svg: bool,
    #[command(flatten)]
    pub walk: WalkArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct BenchBiasArgs {
    #[arg(long, env = "WEBLY_MANIFEST")]
    pub manifest: PathBuf,
    #[arg(long, env = "WEBLY_FEATURES")]
    pub features: PathBuf,
    /// External classifier confidences (`id,score`).
    #[arg(long, env = "WEBLY_CONFIDENCES")]
    pub confidences: PathBuf,
    /// Keep k samples per class under both filters.
    #[arg(long, env = "WEBLY_TOP_K")]
    pub top_k: Option<usize>,
    /// Relative-relevance threshold for the random-walk filter.
    #[arg(long, conflicts_with = "top_k", env = "WEBLY_THRESHOLD")]
    pub threshold: Option<f64>,
    /// Confidence threshold for the classifier filter (overrides `--top-k` there).
    #[arg(long, env = "WEBLY_CONFIDENCE_THRESHOLD")]
    pub confidence_threshold: Option<f64>,
    #[arg(long, env = "WEBLY_OUT")]
    pub out: PathBuf,
    #[command(flatten)]
    pub walk: WalkArgs,
}

/// Bad flag combinations found after parsing; reported like clap errors.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Parses `args` (including the program name) and runs the subcommand.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return EXIT_USAGE;
        }
    };
    match pool.install(|| commands::dispatch(&cli)) {
        Ok(()) => EXIT_OK,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}\n\nFor more information, try '--help'.");
            EXIT_USAGE
        }
        Err(e) => {
            eprintln!("error: {} failed: {e:#}", cli.command.name());
            EXIT_VALIDATION
        }
    }
}
