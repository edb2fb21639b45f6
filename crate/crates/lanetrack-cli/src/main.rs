//! Command-line frontend wiring the lanetrack library into track / eval /
//! synth / bench workflows.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/format error.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use lanetrack::config::RunConfig;
use lanetrack::error::Error;
use lanetrack::eval::{accuracy, format_lane_file, parse_lane_file, LanePolyline};
use lanetrack::pipeline::{extract_stage, fit_stage, variance_stage};
use lanetrack::probmap::ProbabilityMap;
use lanetrack::synth::Scenario;
use lanetrack::track::{TrackedLane, Tracker};

#[derive(Parser)]
#[command(name = "lanetrack", version, about = "Lane-tracking post-processor")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the tracking pipeline over a directory of per-frame maps
    Track(TrackArgs),
    /// Score predicted lanes against ground truth
    Eval(EvalArgs),
    /// Render a synthetic scenario to maps and ground-truth lane files
    Synth(SynthArgs),
    /// Time the pipeline stages over a directory of maps
    Bench(BenchArgs),
}

#[derive(Args)]
struct ConfigOverrides {
    /// Run configuration file (TOML); flags override file values
    #[arg(long)]
    config: Option<PathBuf>,
    /// EWMA smoothing coefficient
    #[arg(long)]
    alpha: Option<f64>,
    /// Match gate in lane sigmas
    #[arg(long = "match-k")]
    match_k: Option<f64>,
    /// Disable the lane merge step (weights still EWMA-updated)
    #[arg(long = "no-merge")]
    no_merge: bool,
}

impl ConfigOverrides {
    fn load(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                RunConfig::parse(&text)?
            }
            None => RunConfig::default(),
        };
        if let Some(alpha) = self.alpha {
            cfg.tracker.alpha = alpha;
        }
        if let Some(k) = self.match_k {
            cfg.tracker.match_k = k;
        }
        if self.no_merge {
            cfg.tracker.merge_enabled = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct TrackArgs {
    /// Directory of per-frame probability maps, zero-padded frame indices
    #[arg(long)]
    input: Option<PathBuf>,
    /// Directory for per-frame lane prediction files
    #[arg(long)]
    output: Option<PathBuf>,
    /// Resume from a tracker state checkpoint
    #[arg(long = "state-in")]
    state_in: Option<PathBuf>,
    /// Write the final tracker state checkpoint
    #[arg(long = "state-out")]
    state_out: Option<PathBuf>,
    #[command(flatten)]
    overrides: ConfigOverrides,
}

#[derive(Args)]
struct EvalArgs {
    /// Ground-truth lane file directory
    #[arg(long)]
    gt: PathBuf,
    /// Predicted lane file directory
    #[arg(long)]
    pred: PathBuf,
    /// Comma-separated IoU thresholds
    #[arg(long)]
    thresholds: Option<String>,
    /// Evaluation canvas, WIDTHxHEIGHT
    #[arg(long, default_value = "800x288")]
    canvas: String,
    /// Report CSV path (stdout when omitted)
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    overrides: ConfigOverrides,
}

#[derive(Args)]
struct SynthArgs {
    /// Scenario file (TOML)
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory for maps and ground-truth lane files
    #[arg(long)]
    output: PathBuf,
    /// Override the scenario seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct BenchArgs {
    /// Directory of per-frame probability maps
    #[arg(long)]
    input: Option<PathBuf>,
    /// Repetitions over the frame set
    #[arg(long, default_value_t = 3)]
    reps: usize,
    /// Timing CSV path (stdout when omitted)
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    overrides: ConfigOverrides,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are not usage errors
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match cli.command {
        Command::Track(args) => cmd_track(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

/// Frame files in a directory, keyed by the numeric index in the file stem.
/// Tracking requires a contiguous index range.
fn discover_frames(dir: &Path, extensions: &[&str]) -> Result<Vec<(u64, PathBuf)>, Error> {
    let mut frames: BTreeMap<u64, PathBuf> = BTreeMap::new();
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if !extensions.iter().any(|ext| name.ends_with(ext)) {
            continue;
        }
        let stem: String = name.chars().take_while(char::is_ascii_digit).collect();
        if let Ok(idx) = stem.parse::<u64>() {
            frames.insert(idx, path);
        }
    }
    if frames.is_empty() {
        return Err(Error::Range(format!("no frame files found in {dir:?}")));
    }
    Ok(frames.into_iter().collect())
}

fn require_contiguous(frames: &[(u64, PathBuf)]) -> Result<(), Error> {
    let first = frames[0].0;
    for (offset, (idx, _)) in frames.iter().enumerate() {
        let expected = first + offset as u64;
        if *idx != expected {
            return Err(Error::Range(format!(
                "missing frame index {expected} (found {idx}); tracking requires contiguous streams"
            )));
        }
    }
    Ok(())
}

/// Samples a tracked lane's line every 10 rows over its y span.
fn lane_polyline(lane: &TrackedLane) -> Option<LanePolyline> {
    let (m, b) = lane.slope_form()?;
    let (y0, y1) = lane.y_span;
    let mut points = Vec::new();
    let mut y = y0;
    while y <= y1 {
        points.push((m * y + b, y));
        y += 10.0;
    }
    if points.len() < 2 {
        points = vec![(m * y0 + b, y0), (m * y1 + b, y1)];
    }
    LanePolyline::new(points).ok()
}

fn input_dir(flag: Option<PathBuf>, cfg: &RunConfig) -> Result<PathBuf, Error> {
    flag.or_else(|| cfg.input.as_ref().map(PathBuf::from))
        .ok_or_else(|| Error::Config("no input directory given (flag or config)".into()))
}

fn cmd_track(args: TrackArgs) -> Result<(), Error> {
    let cfg = args.overrides.load()?;
    let input = input_dir(args.input, &cfg)?;
    let output = args
        .output
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .ok_or_else(|| Error::Config("no output directory given (flag or config)".into()))?;
    fs::create_dir_all(&output).map_err(|e| Error::io(&output, e))?;

    let frames = discover_frames(&input, &[".lpm", ".pgm"])?;
    require_contiguous(&frames)?;

    let mut tracker: Option<Tracker> = match &args.state_in {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            Some(Tracker::resume(cfg.tracker, &text)?)
        }
        None => None,
    };

    for (idx, path) in &frames {
        let map = ProbabilityMap::load(path)?;
        let tracker = match &mut tracker {
            Some(t) => t,
            None => {
                tracker = Some(Tracker::new(cfg.tracker, map.width(), map.height())?);
                tracker.as_mut().unwrap()
            }
        };
        let detections = lanetrack::pipeline::detect_frame(&map, &cfg)?;
        let result = tracker.step(*idx, detections);
        let lanes: Vec<LanePolyline> = [result.left.as_ref(), result.right.as_ref()]
            .into_iter()
            .flatten()
            .filter_map(lane_polyline)
            .collect();
        let pred_path = output.join(format!("{idx:06}.lines.txt"));
        fs::write(&pred_path, format_lane_file(&lanes)).map_err(|e| Error::io(&pred_path, e))?;
    }

    if let Some(path) = &args.state_out {
        let tracker = tracker.expect("at least one frame processed");
        fs::write(path, tracker.checkpoint()).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

fn parse_thresholds(text: &str) -> Result<Vec<f64>, Error> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad threshold {s:?}")))
        })
        .collect()
}

fn parse_canvas(text: &str) -> Result<(u32, u32), Error> {
    let parts: Vec<&str> = text.split('x').collect();
    if parts.len() == 2 {
        if let (Ok(w), Ok(h)) = (parts[0].parse(), parts[1].parse()) {
            return Ok((w, h));
        }
    }
    Err(Error::Config(format!(
        "bad canvas {text:?}, expected WIDTHxHEIGHT"
    )))
}

fn load_lane_dir(dir: &Path) -> Result<BTreeMap<u64, Vec<LanePolyline>>, Error> {
    let frames = discover_frames(dir, &[".lines.txt", ".txt"])?;
    let mut out = BTreeMap::new();
    for (idx, path) in frames {
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        out.insert(idx, parse_lane_file(&path, &text)?);
    }
    Ok(out)
}

fn cmd_eval(args: EvalArgs) -> Result<(), Error> {
    let cfg = args.overrides.load()?;
    let thresholds = match &args.thresholds {
        Some(text) => parse_thresholds(text)?,
        None => cfg.thresholds.clone(),
    };
    let canvas = parse_canvas(&args.canvas)?;
    let gt = load_lane_dir(&args.gt)?;
    let pred = match load_lane_dir(&args.pred) {
        Ok(p) => p,
        Err(Error::Range(_)) => BTreeMap::new(), // empty prediction dir is a valid (zero) run
        Err(e) => return Err(e),
    };
    let report = accuracy(&gt, &pred, &thresholds, canvas)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    emit(args.output.as_deref(), &report.to_csv())
}

fn cmd_synth(args: SynthArgs) -> Result<(), Error> {
    let text = fs::read_to_string(&args.scenario).map_err(|e| Error::io(&args.scenario, e))?;
    let mut scenario = Scenario::parse(&text)?;
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    fs::create_dir_all(&args.output).map_err(|e| Error::io(&args.output, e))?;
    for frame in 0..scenario.frames {
        let (map, gt) = scenario.render(frame)?;
        map.save(&args.output.join(format!("{frame:06}.lpm")))?;
        let gt_path = args.output.join(format!("{frame:06}.lines.txt"));
        fs::write(&gt_path, format_lane_file(&gt)).map_err(|e| Error::io(&gt_path, e))?;
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), Error> {
    let cfg = args.overrides.load()?;
    let input = input_dir(args.input, &cfg)?;
    if args.reps == 0 {
        return Err(Error::Config("reps must be >= 1".into()));
    }
    let frames = discover_frames(&input, &[".lpm", ".pgm"])?;
    require_contiguous(&frames)?;
    let maps: Vec<ProbabilityMap> = frames
        .iter()
        .map(|(_, path)| ProbabilityMap::load(path))
        .collect::<Result<_, _>>()?;

    const STAGES: [&str; 4] = ["extraction", "variance", "fit", "track"];
    let mut samples: [Vec<f64>; 4] = Default::default();
    for _ in 0..args.reps {
        let mut tracker = Tracker::new(cfg.tracker, maps[0].width(), maps[0].height())?;
        for (i, map) in maps.iter().enumerate() {
            let t0 = Instant::now();
            let raw = extract_stage(map, &cfg.extraction)?;
            let t1 = Instant::now();
            let annotated = variance_stage(map, &raw, &cfg)?;
            let t2 = Instant::now();
            let detections = fit_stage(annotated, &cfg);
            let t3 = Instant::now();
            tracker.step(frames[i].0, detections);
            let t4 = Instant::now();
            for (slot, (a, b)) in samples
                .iter_mut()
                .zip([(t0, t1), (t1, t2), (t2, t3), (t3, t4)])
            {
                slot.push((b - a).as_secs_f64() * 1e3);
            }
        }
    }

    let mut csv = String::from("stage,mean_ms,p95_ms,frames\n");
    for (name, series) in STAGES.iter().zip(&mut samples) {
        let mean = series.iter().sum::<f64>() / series.len() as f64;
        series.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let p95 = series[((series.len() as f64 * 0.95).ceil() as usize - 1).min(series.len() - 1)];
        csv.push_str(&format!("{name},{mean:.4},{p95:.4},{}\n", frames.len()));
    }
    emit(args.output.as_deref(), &csv)
}

fn emit(path: Option<&Path>, contents: &str) -> Result<(), Error> {
    match path {
        Some(path) => fs::write(path, contents).map_err(|e| Error::io(path, e)),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}
