//! The full selfie pipeline, assembled from the other modules, plus the
//! stage files that let each step run as its own command.
//!
//! The pipeline is split into pure stages — gather faces, score frames,
//! select, render — that exchange plain data. Each stage can persist its
//! output as JSON; floating-point values survive that round trip exactly,
//! so running the stages as separate processes produces byte-identical
//! results to one in-process run.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adapter::{AdapterClient, AdapterCommand, AdapterError};
use crate::framing::{self, Framing, FramingError};
use crate::geometry::{EquirectDims, PlaneCamera};
use crate::io::{
    BaselineReport, CameraSummary, ExpressionEntry, FrameSequence, IoError, PipelineConfig,
    Report,
};
use crate::renderer::{render_perspective, PerspectiveImage};
use crate::scoring::{self, FrameScore, ScoringError};
use crate::tracks::{
    dedup_class_per_frame, eliminate_classes, filter_min_side, interpolate, wrap_signed, BBox,
    ClassSummary, Detection, EliminationReason, TrackError, TrackSet,
};

/// Any failure on the way from a frame directory to a selfie.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Adapter(#[from] AdapterError),
    #[error(transparent)]
    Track(#[from] TrackError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error(transparent)]
    Framing(#[from] FramingError),
    #[error("adapter returned a bad detection for {image}: {detail}")]
    BadAdapterRecord { image: PathBuf, detail: String },
    #[error("frame {frame_index} has faces but no expression entries to match")]
    MissingExpressions { frame_index: usize },
    #[error("stage data is inconsistent: {0}")]
    CorruptStage(String),
}

impl PipelineError {
    /// Process exit code for this failure: 3 when no usable faces remain,
    /// 4 when the group cannot be framed, 2 for any input or adapter
    /// problem.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Track(TrackError::EmptyTrackSet) => 3,
            PipelineError::Scoring(ScoringError::NoFaces | ScoringError::NoFrames) => 3,
            PipelineError::Framing(FramingError::NoFaces) => 3,
            PipelineError::Framing(FramingError::FramingImpossible) => 4,
            PipelineError::Framing(FramingError::DegenerateUp) => 4,
            _ => 2,
        }
    }
}

/// Where detections and expressions come from: precomputed sidecar files,
/// or a live adapter subprocess serving both.
#[derive(Debug, Clone)]
pub enum FaceSource {
    Sidecars { detections: PathBuf, expressions: PathBuf },
    Adapter(AdapterCommand),
}

/// Per-frame detections and expression entries, however they were obtained.
pub type Faces = (Vec<Vec<Detection>>, Vec<Vec<ExpressionEntry>>);

/// Obtains per-frame detections and expressions for a frame sequence.
///
/// With sidecars this is two validated file reads. With an adapter, one
/// subprocess serves a `detect` request per frame and an `express` request
/// per detected box, in frame order.
pub fn gather_faces(frames: &FrameSequence, source: &FaceSource) -> Result<Faces, PipelineError> {
    match source {
        FaceSource::Sidecars { detections, expressions } => {
            let dets = crate::io::load_detections(detections, frames.len(), frames.dims)?;
            let exprs = crate::io::load_expressions(expressions, frames.len())?;
            Ok((dets, exprs))
        }
        FaceSource::Adapter(command) => {
            let mut client = AdapterClient::spawn(command)?;
            let mut dets = Vec::with_capacity(frames.len());
            let mut exprs = Vec::with_capacity(frames.len());
            for (frame_index, path) in frames.paths.iter().enumerate() {
                let mut frame_dets = Vec::new();
                let mut frame_exprs = Vec::new();
                for rec in client.detect(path)? {
                    if !(0.0..=1.0).contains(&rec.confidence) {
                        return Err(PipelineError::BadAdapterRecord {
                            image: path.clone(),
                            detail: format!("confidence {} outside [0, 1]", rec.confidence),
                        });
                    }
                    let bbox = BBox { x: rec.x, y: rec.y, w: rec.w, h: rec.h }
                        .normalized(frames.dims)
                        .map_err(|e| PipelineError::BadAdapterRecord {
                            image: path.clone(),
                            detail: e.to_string(),
                        })?;
                    let scores = client.express(path, &bbox)?;
                    frame_dets.push(Detection { frame_index, bbox, confidence: rec.confidence });
                    frame_exprs.push(ExpressionEntry {
                        x: bbox.center_x(frames.dims.width_f()),
                        y: bbox.center_y(),
                        scores,
                    });
                }
                dets.push(frame_dets);
                exprs.push(frame_exprs);
            }
            client.finish()?;
            Ok((dets, exprs))
        }
    }
}

/// Everything the selection and rendering steps need, produced by
/// [`stage_score`] and persisted as `scores.json` between commands.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoresStage {
    /// The effective configuration of the run.
    pub config: PipelineConfig,
    /// Cleaned classes: filtered, clustered, deduplicated, gap-filled.
    pub trackset: TrackSet,
    /// Class statistics taken before gap interpolation.
    pub class_summaries: Vec<ClassSummary>,
    /// Eliminated class id -> reason.
    pub elimination_log: BTreeMap<usize, EliminationReason>,
    /// Per frame, the happy score matched to each surviving class.
    pub per_frame_happy: Vec<Vec<f64>>,
    /// Per frame, the happiness statistics `M`, `V`, `H`.
    pub frame_scores: Vec<FrameScore>,
}

/// The selection's output, persisted as `selection.json`: enough to render
/// without redoing any analysis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionStage {
    pub selected_frame: usize,
    pub camera: CameraSummary,
    pub framing: Framing,
    pub out_width: u32,
}

/// Cleans raw detections into final tracks: size filter, wrap-aware mean
/// shift on box centers, class elimination, per-frame deduplication, then
/// gap interpolation. Summaries snapshot each class before interpolation,
/// so presence ratios and mean positions describe what was actually seen.
pub fn clean_tracks(
    detections: &[Vec<Detection>],
    n_frames: usize,
    dims: EquirectDims,
    config: &PipelineConfig,
) -> Result<(TrackSet, Vec<ClassSummary>, BTreeMap<usize, EliminationReason>), PipelineError> {
    let flat: Vec<Detection> = detections.iter().flatten().cloned().collect();
    let kept = filter_min_side(&flat, config.min_side);
    let clustered = TrackSet::cluster_detections(&kept, n_frames, dims, config.bandwidth);
    let (surviving, log) = eliminate_classes(&clustered, config.t, config.max_side)?;
    let deduped = dedup_class_per_frame(&surviving)?;
    let summaries = deduped
        .classes
        .iter()
        .map(|c| c.summary(n_frames, dims, config.max_side))
        .collect::<Result<Vec<_>, _>>()?;
    let filled = interpolate(&deduped)?;
    Ok((filled, summaries, log))
}

/// Matches a face center to the nearest expression entry of its frame
/// (wrap-aware Euclidean distance; ties keep the earliest entry) and
/// returns that entry's happy score.
fn match_happy(
    center: (f64, f64),
    entries: &[ExpressionEntry],
    width: f64,
) -> Option<f64> {
    let mut best: Option<(f64, f64)> = None; // (distance, happy)
    for e in entries {
        let dx = wrap_signed(center.0 - e.x, width);
        let dy = center.1 - e.y;
        let dist = (dx * dx + dy * dy).sqrt();
        if best.map_or(true, |(d, _)| dist < d) {
            best = Some((dist, e.scores.happy));
        }
    }
    best.map(|(_, happy)| happy)
}

/// Runs cleaning and scoring: the heart of the pipeline. Every class
/// contributes one happy value per frame (interpolated boxes included), and
/// each frame gets its `H = M - c V`.
pub fn stage_score(
    detections: &[Vec<Detection>],
    expressions: &[Vec<ExpressionEntry>],
    n_frames: usize,
    dims: EquirectDims,
    config: &PipelineConfig,
) -> Result<ScoresStage, PipelineError> {
    if detections.len() != n_frames || expressions.len() != n_frames {
        return Err(PipelineError::CorruptStage(format!(
            "{} detection frames and {} expression frames for a {n_frames}-frame sequence",
            detections.len(),
            expressions.len()
        )));
    }
    let (trackset, class_summaries, elimination_log) =
        clean_tracks(detections, n_frames, dims, config)?;
    let width = dims.width_f();
    let mut per_frame_happy = Vec::with_capacity(n_frames);
    let mut frame_scores = Vec::with_capacity(n_frames);
    for frame_index in 0..n_frames {
        let mut happy = Vec::with_capacity(trackset.classes.len());
        for class in &trackset.classes {
            let member = class.member_in_frame(frame_index).ok_or_else(|| {
                PipelineError::CorruptStage(format!(
                    "class {} has no box in frame {frame_index} after interpolation",
                    class.class_id
                ))
            })?;
            let center = (member.bbox.center_x(width), member.bbox.center_y());
            let value = match_happy(center, &expressions[frame_index], width)
                .ok_or(PipelineError::MissingExpressions { frame_index })?;
            happy.push(value);
        }
        let (mean, variance, happiness) = scoring::frame_happiness(&happy, config.c)?;
        per_frame_happy.push(happy);
        frame_scores.push(FrameScore { frame_index, mean, variance, happiness });
    }
    Ok(ScoresStage {
        config: *config,
        trackset,
        class_summaries,
        elimination_log,
        per_frame_happy,
        frame_scores,
    })
}

/// Picks the happiest frame and aims the virtual camera at its group.
pub fn stage_select(scores: &ScoresStage) -> Result<SelectionStage, PipelineError> {
    scores.config.validate().map_err(PipelineError::CorruptStage)?;
    let selected_frame = scoring::select_best_frame(&scores.frame_scores)?;
    let mut boxes = Vec::with_capacity(scores.trackset.classes.len());
    for class in &scores.trackset.classes {
        let member = class.member_in_frame(selected_frame).ok_or_else(|| {
            PipelineError::CorruptStage(format!(
                "class {} has no box in selected frame {selected_frame}",
                class.class_id
            ))
        })?;
        boxes.push(member.bbox);
    }
    let (camera, framing) =
        framing::frame_camera(&boxes, scores.trackset.dims, scores.config.i)?;
    Ok(SelectionStage {
        selected_frame,
        camera: CameraSummary {
            alpha: camera.alpha(),
            beta: camera.beta(),
            l: camera.l(),
            m: camera.m(),
        },
        framing,
        out_width: scores.config.out_width,
    })
}

/// Renders the selected frame through the selection's camera.
pub fn stage_render(
    frames: &FrameSequence,
    selection: &SelectionStage,
) -> Result<PerspectiveImage, PipelineError> {
    if selection.selected_frame >= frames.len() {
        return Err(PipelineError::CorruptStage(format!(
            "selected frame {} but the sequence has {} frames",
            selection.selected_frame,
            frames.len()
        )));
    }
    if selection.out_width == 0 {
        return Err(PipelineError::CorruptStage("output width is zero".into()));
    }
    let cam = &selection.camera;
    let camera =
        PlaneCamera::new(cam.alpha, cam.beta, cam.l, cam.m).map_err(FramingError::from)?;
    Ok(render_perspective(&frames.frames[selection.selected_frame], &camera, selection.out_width))
}

/// A finished run: the report, the rendered selfie, and the intermediate
/// products for inspection.
#[derive(Debug)]
pub struct RunOutput {
    pub report: Report,
    pub image: PerspectiveImage,
    pub scores: ScoresStage,
    pub selection: SelectionStage,
}

/// Runs the whole pipeline on already-gathered faces.
pub fn run_pipeline_with(
    frames: &FrameSequence,
    detections: &[Vec<Detection>],
    expressions: &[Vec<ExpressionEntry>],
    config: &PipelineConfig,
) -> Result<RunOutput, PipelineError> {
    let scores = stage_score(detections, expressions, frames.len(), frames.dims, config)?;
    let selection = stage_select(&scores)?;
    let image = stage_render(frames, &selection)?;
    let report = compose_report(&scores, &selection);
    Ok(RunOutput { report, image, scores, selection })
}

/// Runs the whole pipeline: gather faces, score, select, render.
pub fn run_pipeline(
    frames: &FrameSequence,
    source: &FaceSource,
    config: &PipelineConfig,
) -> Result<RunOutput, PipelineError> {
    let (detections, expressions) = gather_faces(frames, source)?;
    run_pipeline_with(frames, &detections, &expressions, config)
}

/// Builds the user-facing report from the stage outputs.
pub fn compose_report(scores: &ScoresStage, selection: &SelectionStage) -> Report {
    Report {
        selected_frame: selection.selected_frame,
        per_frame_h: scores.frame_scores.iter().map(|s| s.happiness).collect(),
        classes: scores.class_summaries.clone(),
        camera: selection.camera,
        elimination_log: scores
            .elimination_log
            .iter()
            .map(|(&id, reason)| (id, reason.to_string()))
            .collect(),
    }
}

/// A finished baseline run.
pub struct BaselineOutput {
    pub report: BaselineReport,
    pub image: PerspectiveImage,
}

/// Runs the baseline selector on already-gathered faces: no tracking — it
/// keeps every detection at least `baseline_min_side` wide, restricts to
/// frames whose detection count equals the mode, picks the happiest, and
/// frames that frame's raw detections.
pub fn run_baseline_with(
    frames: &FrameSequence,
    detections: &[Vec<Detection>],
    expressions: &[Vec<ExpressionEntry>],
    config: &PipelineConfig,
) -> Result<BaselineOutput, PipelineError> {
    let n_frames = frames.len();
    if detections.len() != n_frames || expressions.len() != n_frames {
        return Err(PipelineError::CorruptStage(format!(
            "{} detection frames and {} expression frames for a {n_frames}-frame sequence",
            detections.len(),
            expressions.len()
        )));
    }
    let width = frames.dims.width_f();
    let kept: Vec<Vec<Detection>> = detections
        .iter()
        .map(|frame| filter_min_side(frame, config.baseline_min_side))
        .collect();
    let counts: Vec<usize> = kept.iter().map(Vec::len).collect();
    let mut happy_per_frame = Vec::with_capacity(n_frames);
    for (frame_index, dets) in kept.iter().enumerate() {
        let mut happy = Vec::with_capacity(dets.len());
        for det in dets {
            let center = (det.bbox.center_x(width), det.bbox.center_y());
            let value = match_happy(center, &expressions[frame_index], width)
                .ok_or(PipelineError::MissingExpressions { frame_index })?;
            happy.push(value);
        }
        happy_per_frame.push(happy);
    }
    let (selected_frame, mode_count, candidate_frames) =
        scoring::baseline_select(&counts, &happy_per_frame, config.c)?;
    let per_frame_h: Vec<Option<f64>> = (0..n_frames)
        .map(|f| {
            if candidate_frames.contains(&f) {
                scoring::frame_happiness(&happy_per_frame[f], config.c)
                    .map(|(.., h)| Some(h))
            } else {
                Ok(None)
            }
        })
        .collect::<Result<_, _>>()?;
    let boxes: Vec<BBox> = kept[selected_frame].iter().map(|d| d.bbox).collect();
    let (camera, _) = framing::frame_camera(&boxes, frames.dims, config.i)?;
    let image = render_perspective(&frames.frames[selected_frame], &camera, config.out_width);
    let report = BaselineReport {
        selected_frame,
        mode_count,
        candidate_frames,
        per_frame_h,
        camera: CameraSummary {
            alpha: camera.alpha(),
            beta: camera.beta(),
            l: camera.l(),
            m: camera.m(),
        },
    };
    Ok(BaselineOutput { report, image })
}

/// Runs the baseline selector end to end.
pub fn run_baseline(
    frames: &FrameSequence,
    source: &FaceSource,
    config: &PipelineConfig,
) -> Result<BaselineOutput, PipelineError> {
    let (detections, expressions) = gather_faces(frames, source)?;
    run_baseline_with(frames, &detections, &expressions, config)
}
