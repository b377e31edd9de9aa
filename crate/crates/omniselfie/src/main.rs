//! Command-line front end: each pipeline stage as a subcommand, exchanging
//! JSON stage files, plus `run` to do everything at once.

use std::f64::consts::PI;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use omniselfie::adapter::AdapterCommand;
use omniselfie::io::{self, PipelineConfig};
use omniselfie::pipeline::{
    self, FaceSource, PipelineError, ScoresStage, SelectionStage,
};
use omniselfie::synth::{self, DetectorNoise, SceneParams};

#[derive(Parser)]
#[command(name = "omniselfie", version, about = "Group selfies from omni-directional video")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Config file plus per-field overrides.
#[derive(Args)]
struct ConfigArgs {
    /// JSON config file; the flags below override its fields.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Minimum detection side (px).
    #[arg(long, value_name = "PX")]
    min_side: Option<f64>,
    /// Oversized-box side threshold (px).
    #[arg(long, value_name = "PX")]
    max_side: Option<f64>,
    /// Presence/oversized elimination threshold.
    #[arg(long = "t", value_name = "RATIO")]
    t: Option<f64>,
    /// Variance weight in H = M - c V.
    #[arg(long, value_name = "WEIGHT")]
    c: Option<f64>,
    /// Framing margin added to both plane extents.
    #[arg(long, value_name = "MARGIN")]
    i: Option<f64>,
    /// Mean-shift kernel radius (px).
    #[arg(long, value_name = "PX")]
    bandwidth: Option<f64>,
    /// Output selfie width (px).
    #[arg(long, value_name = "PX")]
    out_width: Option<u32>,
    /// Minimum detection side for the baseline selector (px).
    #[arg(long, value_name = "PX")]
    baseline_min_side: Option<f64>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<PipelineConfig, CliError> {
        let mut config = match &self.config {
            Some(path) => PipelineConfig::load(path).map_err(PipelineError::Io)?,
            None => PipelineConfig::default(),
        };
        if let Some(v) = self.min_side {
            config.min_side = v;
        }
        if let Some(v) = self.max_side {
            config.max_side = v;
        }
        if let Some(v) = self.t {
            config.t = v;
        }
        if let Some(v) = self.c {
            config.c = v;
        }
        if let Some(v) = self.i {
            config.i = v;
        }
        if let Some(v) = self.bandwidth {
            config.bandwidth = v;
        }
        if let Some(v) = self.out_width {
            config.out_width = v;
        }
        if let Some(v) = self.baseline_min_side {
            config.baseline_min_side = v;
        }
        config.validate().map_err(CliError::Usage)?;
        Ok(config)
    }
}

/// Where detections and expressions come from.
#[derive(Args)]
struct SourceArgs {
    /// Detections sidecar (requires --expressions).
    #[arg(long, value_name = "FILE", requires = "expressions", conflicts_with = "adapter")]
    detections: Option<PathBuf>,
    /// Expressions sidecar (requires --detections).
    #[arg(long, value_name = "FILE", requires = "detections", conflicts_with = "adapter")]
    expressions: Option<PathBuf>,
    /// Adapter command line serving the detection protocol on stdio.
    #[arg(long, value_name = "CMD")]
    adapter: Option<String>,
}

impl SourceArgs {
    fn resolve(&self) -> Result<FaceSource, CliError> {
        match (&self.detections, &self.expressions, &self.adapter) {
            (Some(d), Some(e), None) => {
                Ok(FaceSource::Sidecars { detections: d.clone(), expressions: e.clone() })
            }
            (None, None, Some(cmd)) => Ok(FaceSource::Adapter(
                AdapterCommand::parse(cmd).map_err(PipelineError::Adapter)?,
            )),
            _ => Err(CliError::Usage(
                "provide either --detections with --expressions, or --adapter".into(),
            )),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: frames in, selfie.png and report.json out.
    Run {
        /// Directory of equirectangular frames (.png/.jpg), sorted by name.
        #[arg(long, value_name = "DIR")]
        frames: PathBuf,
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Run the adapter over every frame; write detections.json and
    /// expressions.json.
    Detect {
        #[arg(long, value_name = "DIR")]
        frames: PathBuf,
        /// Adapter command line serving the detection protocol on stdio.
        #[arg(long, value_name = "CMD")]
        adapter: String,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Clean tracks and score every frame; write scores.json.
    Score {
        #[arg(long, value_name = "DIR")]
        frames: PathBuf,
        #[arg(long, value_name = "FILE")]
        detections: PathBuf,
        #[arg(long, value_name = "FILE")]
        expressions: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Pick the happiest frame and aim the camera; write selection.json.
    Select {
        #[arg(long, value_name = "FILE")]
        scores: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Render the selected frame through the selected camera; write
    /// selfie.png.
    Render {
        #[arg(long, value_name = "DIR")]
        frames: PathBuf,
        #[arg(long, value_name = "FILE")]
        selection: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Generate a synthetic scene: frames plus ground-truth sidecars.
    Simulate {
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Panorama width in pixels (height is width/2).
        #[arg(long, default_value_t = 1920, value_name = "PX")]
        width: u32,
        #[arg(long, default_value_t = 12, value_name = "N")]
        n_frames: usize,
        #[arg(long, default_value_t = 3, value_name = "N")]
        faces: usize,
        /// Frame index where happiness peaks.
        #[arg(long, default_value_t = 6, value_name = "FRAME")]
        peak: usize,
        /// Azimuth of the group center (radians).
        #[arg(long, default_value_t = PI, value_name = "RAD")]
        center_phi: f64,
        /// Bystanders appearing in only a few frames.
        #[arg(long, default_value_t = 0, value_name = "N")]
        sporadic: usize,
        /// Add a small persistent bystander far from the group.
        #[arg(long)]
        distant_distractor: bool,
        #[arg(long, default_value_t = 7, value_name = "N")]
        seed: u64,
        /// Probability of dropping each true detection.
        #[arg(long, default_value_t = 0.0, value_name = "P")]
        miss_prob: f64,
        /// Spurious detections added per frame.
        #[arg(long, default_value_t = 0, value_name = "N")]
        spurious: usize,
        /// Detection center jitter (px).
        #[arg(long, default_value_t = 0.0, value_name = "PX")]
        jitter: f64,
    },
    /// Baseline selector (count-mode frames, no tracking) for comparison;
    /// writes report_baseline.json and selfie_baseline.png.
    CompareBaseline {
        #[arg(long, value_name = "DIR")]
        frames: PathBuf,
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Serve the detection protocol on stdio against synthetic scenes
    /// (disc detector + color-reading recognizer).
    StubAdapter,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Synth(#[from] synth::SynthError),
    #[error("{0}")]
    Serve(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Pipeline(e) => e.exit_code() as u8,
            _ => 2,
        }
    }
}

impl From<io::IoError> for CliError {
    fn from(e: io::IoError) -> Self {
        CliError::Pipeline(PipelineError::Io(e))
    }
}

fn ensure_out_dir(out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", out.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run { frames, source, config, out } => {
            let config = config.resolve()?;
            let source = source.resolve()?;
            let frames = io::load_frames(&frames)?;
            ensure_out_dir(&out)?;
            let result = pipeline::run_pipeline(&frames, &source, &config)?;
            let report_path = out.join("report.json");
            let image_path = out.join("selfie.png");
            io::write_json_pretty(&result.report, &report_path)?;
            io::write_png(&result.image.image, &image_path)?;
            println!("selected frame {}", result.report.selected_frame);
            println!("wrote {}", report_path.display());
            println!("wrote {}", image_path.display());
            Ok(())
        }
        Command::Detect { frames, adapter, out } => {
            let frames = io::load_frames(&frames)?;
            let command = AdapterCommand::parse(&adapter).map_err(PipelineError::Adapter)?;
            let (detections, expressions) =
                pipeline::gather_faces(&frames, &FaceSource::Adapter(command))?;
            ensure_out_dir(&out)?;
            let det_path = out.join("detections.json");
            let expr_path = out.join("expressions.json");
            io::write_detections(&detections, &det_path)?;
            io::write_expressions(&expressions, &expr_path)?;
            println!("wrote {}", det_path.display());
            println!("wrote {}", expr_path.display());
            Ok(())
        }
        Command::Score { frames, detections, expressions, config, out } => {
            let config = config.resolve()?;
            let frames = io::load_frames(&frames)?;
            let source = FaceSource::Sidecars { detections, expressions };
            let (dets, exprs) = pipeline::gather_faces(&frames, &source)?;
            let scores =
                pipeline::stage_score(&dets, &exprs, frames.len(), frames.dims, &config)?;
            ensure_out_dir(&out)?;
            let path = out.join("scores.json");
            io::write_json_pretty(&scores, &path)?;
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::Select { scores, out } => {
            let scores: ScoresStage = io::read_json(&scores)?;
            let selection = pipeline::stage_select(&scores)?;
            ensure_out_dir(&out)?;
            let path = out.join("selection.json");
            io::write_json_pretty(&selection, &path)?;
            println!("selected frame {}", selection.selected_frame);
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::Render { frames, selection, out } => {
            let frames = io::load_frames(&frames)?;
            let selection: SelectionStage = io::read_json(&selection)?;
            let image = pipeline::stage_render(&frames, &selection)?;
            ensure_out_dir(&out)?;
            let path = out.join("selfie.png");
            io::write_png(&image.image, &path)?;
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::Simulate {
            out,
            width,
            n_frames,
            faces,
            peak,
            center_phi,
            sporadic,
            distant_distractor,
            seed,
            miss_prob,
            spurious,
            jitter,
        } => {
            let dims = omniselfie::EquirectDims::new(width, width / 2)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let params = SceneParams {
                dims,
                n_frames,
                n_faces: faces,
                sporadic_distractors: sporadic,
                distant_distractor,
                peak_frame: peak,
                center_phi,
                seed,
                ..SceneParams::default()
            };
            if !(0.0..=1.0).contains(&miss_prob) {
                return Err(CliError::Usage(format!("miss probability {miss_prob} outside [0, 1]")));
            }
            let spec = synth::build_scene(&params)?;
            let (rendered, truth) = synth::generate_scene(&spec)?;
            let frames_dir = out.join("frames");
            ensure_out_dir(&frames_dir)?;
            for (index, frame) in rendered.iter().enumerate() {
                let path = frames_dir.join(format!("frame_{index:04}.png"));
                io::write_png(frame.image(), &path)?;
            }
            let detections = if miss_prob > 0.0 || spurious > 0 || jitter > 0.0 {
                let noise = DetectorNoise {
                    miss_prob,
                    spurious_per_frame: spurious,
                    jitter_px: jitter,
                    seed,
                };
                synth::stub_detector(&truth.detections, dims, &noise)
            } else {
                truth.detections
            };
            let det_path = out.join("detections.json");
            let expr_path = out.join("expressions.json");
            io::write_detections(&detections, &det_path)?;
            io::write_expressions(&truth.expressions, &expr_path)?;
            println!("wrote {} frames to {}", rendered.len(), frames_dir.display());
            println!("wrote {}", det_path.display());
            println!("wrote {}", expr_path.display());
            println!("happiness peaks at frame {peak}");
            Ok(())
        }
        Command::CompareBaseline { frames, source, config, out } => {
            let config = config.resolve()?;
            let source = source.resolve()?;
            let frames = io::load_frames(&frames)?;
            ensure_out_dir(&out)?;
            let result = pipeline::run_baseline(&frames, &source, &config)?;
            let report_path = out.join("report_baseline.json");
            let image_path = out.join("selfie_baseline.png");
            io::write_json_pretty(&result.report, &report_path)?;
            io::write_png(&result.image.image, &image_path)?;
            println!("selected frame {}", result.report.selected_frame);
            println!("wrote {}", report_path.display());
            println!("wrote {}", image_path.display());
            Ok(())
        }
        Command::StubAdapter => {
            let stdin = std::io::stdin().lock();
            let stdout = std::io::stdout().lock();
            synth::serve_stub_adapter(BufReader::new(stdin), BufWriter::new(stdout))?;
            Ok(())
        }
    }
}
