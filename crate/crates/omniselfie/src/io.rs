//! Files on disk: frame directories, detection/expression sidecars, the
//! pipeline config, and output artifacts (report JSON, PNG images).
//!
//! All writes go through a temp file in the destination directory followed
//! by an atomic rename, so a crash never leaves a half-written artifact.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::EquirectDims;
use crate::renderer::EquirectFrame;
use crate::scoring::ExpressionScores;
use crate::tracks::{BBox, ClassSummary, Detection};

/// Errors reading or writing pipeline files.
#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Image { path: PathBuf, source: image::ImageError },
    #[error("no frames (.png/.jpg/.jpeg) found in {0}")]
    EmptyFrameDir(PathBuf),
    #[error("{path}: frame is {w}x{h} but the sequence started at {w0}x{h0}")]
    MixedDimensions { path: PathBuf, w: u32, h: u32, w0: u32, h0: u32 },
    #[error("{path}: {w}x{h} is not a 2:1 equirectangular frame")]
    BadAspect { path: PathBuf, w: u32, h: u32 },
    #[error("{path}: {detail}")]
    InvalidRecord { path: PathBuf, detail: String },
    #[error("config {path}: {detail}")]
    InvalidConfig { path: PathBuf, detail: String },
}

impl IoError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io { path: path.to_owned(), source }
    }

    fn record(path: &Path, detail: impl Into<String>) -> Self {
        IoError::InvalidRecord { path: path.to_owned(), detail: detail.into() }
    }
}

/// Tuning knobs of the pipeline. A config file may set any subset of the
/// fields; the rest keep their defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Detections with a smaller side below this are discarded (px).
    pub min_side: f64,
    /// Boxes with a larger side above this count as oversized (px).
    pub max_side: f64,
    /// Presence/oversized threshold for class elimination.
    #[serde(rename = "T")]
    pub t: f64,
    /// Weight of the variance penalty in `H = M - c V`.
    pub c: f64,
    /// Margin added to both plane extents when framing.
    pub i: f64,
    /// Mean-shift kernel radius (px).
    pub bandwidth: f64,
    /// Output selfie width (px).
    pub out_width: u32,
    /// Minimum detection side for the baseline selector (px).
    pub baseline_min_side: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            min_side: 50.0,
            max_side: 250.0,
            t: 0.25,
            c: 1.0,
            i: 0.3,
            bandwidth: 100.0,
            out_width: 1920,
            baseline_min_side: 20.0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("min_side", self.min_side),
            ("max_side", self.max_side),
            ("i", self.i),
            ("bandwidth", self.bandwidth),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.t.is_finite() && self.t > 0.0 && self.t < 1.0) {
            return Err(format!("T must be in (0, 1), got {}", self.t));
        }
        if !(self.c.is_finite() && self.c >= 0.0) {
            return Err(format!("c must be nonnegative, got {}", self.c));
        }
        if self.min_side > self.max_side {
            return Err(format!(
                "min_side {} must not exceed max_side {}",
                self.min_side, self.max_side
            ));
        }
        if self.out_width == 0 {
            return Err("out_width must be positive".into());
        }
        if !(self.baseline_min_side.is_finite() && self.baseline_min_side > 0.0) {
            return Err(format!("baseline_min_side must be positive, got {}", self.baseline_min_side));
        }
        Ok(())
    }

    /// Loads a JSON config file; missing fields default, unknown fields error.
    pub fn load(path: &Path) -> Result<Self, IoError> {
        let text = fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
        let config: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| IoError::InvalidConfig { path: path.to_owned(), detail: e.to_string() })?;
        config
            .validate()
            .map_err(|detail| IoError::InvalidConfig { path: path.to_owned(), detail })?;
        Ok(config)
    }
}

/// An ordered, uniformly-sized equirectangular frame sequence.
pub struct FrameSequence {
    pub frames: Vec<EquirectFrame>,
    pub paths: Vec<PathBuf>,
    pub dims: EquirectDims,
}

impl FrameSequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Loads every `.png`/`.jpg`/`.jpeg` in the directory, ordered by file name.
/// All frames must share one 2:1 geometry.
pub fn load_frames(dir: &Path) -> Result<FrameSequence, IoError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| IoError::io(dir, e))?
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| IoError::io(dir, e))?
        .into_iter()
        .map(|entry| entry.path())
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg"))
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(IoError::EmptyFrameDir(dir.to_owned()));
    }
    let mut frames = Vec::with_capacity(paths.len());
    let mut dims: Option<EquirectDims> = None;
    for path in &paths {
        let img = image::open(path)
            .map_err(|e| IoError::Image { path: path.clone(), source: e })?
            .to_rgb8();
        let (w, h) = img.dimensions();
        match dims {
            None => {
                let d = EquirectDims::new(w, h)
                    .map_err(|_| IoError::BadAspect { path: path.clone(), w, h })?;
                dims = Some(d);
            }
            Some(d) if (w, h) != (d.width(), d.height()) => {
                return Err(IoError::MixedDimensions {
                    path: path.clone(),
                    w,
                    h,
                    w0: d.width(),
                    h0: d.height(),
                });
            }
            Some(_) => {}
        }
        frames.push(EquirectFrame::new(img).expect("dims validated above"));
    }
    Ok(FrameSequence { frames, paths: paths.clone(), dims: dims.expect("nonempty") })
}

/// One detection record in the sidecar schema.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    pub confidence: f64,
}

#[derive(Serialize, Deserialize)]
struct DetectionsFile {
    frames: Vec<DetectionsFrame>,
}

#[derive(Serialize, Deserialize)]
struct DetectionsFrame {
    index: usize,
    detections: Vec<DetectionRecord>,
}

/// Reads a detections sidecar into per-frame lists (missing frames are
/// empty). Boxes are validated against the frame geometry and their `x`
/// wrapped into `[0, width)`.
pub fn load_detections(
    path: &Path,
    n_frames: usize,
    dims: EquirectDims,
) -> Result<Vec<Vec<Detection>>, IoError> {
    let text = fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    let file: DetectionsFile = serde_json::from_str(&text)
        .map_err(|e| IoError::Json { path: path.to_owned(), source: e })?;
    let mut per_frame: Vec<Vec<Detection>> = vec![Vec::new(); n_frames];
    for frame in &file.frames {
        if frame.index >= n_frames {
            return Err(IoError::record(
                path,
                format!("frame index {} beyond frame count {n_frames}", frame.index),
            ));
        }
        for rec in &frame.detections {
            if !(0.0..=1.0).contains(&rec.confidence) {
                return Err(IoError::record(
                    path,
                    format!("frame {}: confidence {} outside [0, 1]", frame.index, rec.confidence),
                ));
            }
            let bbox = BBox { x: rec.x, y: rec.y, w: rec.w, h: rec.h }
                .normalized(dims)
                .map_err(|e| IoError::record(path, format!("frame {}: {e}", frame.index)))?;
            per_frame[frame.index].push(Detection {
                frame_index: frame.index,
                bbox,
                confidence: rec.confidence,
            });
        }
    }
    Ok(per_frame)
}

/// Writes per-frame detections, one entry per frame including empty ones.
pub fn write_detections(per_frame: &[Vec<Detection>], path: &Path) -> Result<(), IoError> {
    let file = DetectionsFile {
        frames: per_frame
            .iter()
            .enumerate()
            .map(|(index, dets)| DetectionsFrame {
                index,
                detections: dets
                    .iter()
                    .map(|d| DetectionRecord {
                        x: d.bbox.x,
                        y: d.bbox.y,
                        w: d.bbox.w,
                        h: d.bbox.h,
                        confidence: d.confidence,
                    })
                    .collect(),
            })
            .collect(),
    };
    write_json_pretty(&file, path)
}

/// An expression measurement anchored at a face center position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpressionEntry {
    /// Face center column (wrapped panorama coordinates).
    pub x: f64,
    /// Face center row.
    pub y: f64,
    pub scores: ExpressionScores,
}

#[derive(Serialize, Deserialize)]
struct ExpressionsFile {
    frames: Vec<ExpressionsFrame>,
}

#[derive(Serialize, Deserialize)]
struct ExpressionsFrame {
    index: usize,
    faces: Vec<ExpressionEntry>,
}

/// Reads an expressions sidecar into per-frame entry lists (missing frames
/// are empty); every distribution is validated.
pub fn load_expressions(path: &Path, n_frames: usize) -> Result<Vec<Vec<ExpressionEntry>>, IoError> {
    let text = fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    let file: ExpressionsFile = serde_json::from_str(&text)
        .map_err(|e| IoError::Json { path: path.to_owned(), source: e })?;
    let mut per_frame: Vec<Vec<ExpressionEntry>> = vec![Vec::new(); n_frames];
    for frame in &file.frames {
        if frame.index >= n_frames {
            return Err(IoError::record(
                path,
                format!("frame index {} beyond frame count {n_frames}", frame.index),
            ));
        }
        for face in &frame.faces {
            face.scores
                .validate()
                .map_err(|e| IoError::record(path, format!("frame {}: {e}", frame.index)))?;
        }
        per_frame[frame.index].extend(frame.faces.iter().copied());
    }
    Ok(per_frame)
}

/// Writes per-frame expression entries, one entry per frame.
pub fn write_expressions(per_frame: &[Vec<ExpressionEntry>], path: &Path) -> Result<(), IoError> {
    let file = ExpressionsFile {
        frames: per_frame
            .iter()
            .enumerate()
            .map(|(index, faces)| ExpressionsFrame { index, faces: faces.clone() })
            .collect(),
    };
    write_json_pretty(&file, path)
}

/// The virtual camera in the report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraSummary {
    pub alpha: f64,
    pub beta: f64,
    pub l: f64,
    pub m: f64,
}

/// The user-facing summary of one pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub selected_frame: usize,
    #[serde(rename = "per_frame_H")]
    pub per_frame_h: Vec<f64>,
    /// Surviving classes, with statistics taken before gap interpolation.
    pub classes: Vec<ClassSummary>,
    pub camera: CameraSummary,
    /// Eliminated class id -> human-readable reason.
    pub elimination_log: BTreeMap<usize, String>,
}

/// The baseline selector's summary: candidates are the frames whose raw
/// detection count matches the mode; other frames have no score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub selected_frame: usize,
    pub mode_count: usize,
    pub candidate_frames: Vec<usize>,
    #[serde(rename = "per_frame_H")]
    pub per_frame_h: Vec<Option<f64>>,
    pub camera: CameraSummary,
}

/// Serializes any value as pretty JSON with a trailing newline, atomically.
pub fn write_json_pretty<T: Serialize>(value: &T, path: &Path) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| IoError::Json { path: path.to_owned(), source: e })?;
    text.push('\n');
    atomic_write(path, |file| file.write_all(text.as_bytes()))
}

/// Reads a JSON value written by [`write_json_pretty`].
pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, IoError> {
    let text = fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| IoError::Json { path: path.to_owned(), source: e })
}

/// Writes an RGB image as PNG, atomically.
pub fn write_png(image: &image::RgbImage, path: &Path) -> Result<(), IoError> {
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::Builder::new()
        .prefix(".omniselfie-tmp")
        .suffix(".png")
        .tempfile_in(parent)
        .map_err(|e| IoError::io(path, e))?;
    image
        .write_to(&mut tmp, image::ImageFormat::Png)
        .map_err(|e| IoError::Image { path: path.to_owned(), source: e })?;
    tmp.persist(path).map_err(|e| IoError::io(path, e.error))?;
    Ok(())
}

fn atomic_write(
    path: &Path,
    write: impl FnOnce(&mut tempfile::NamedTempFile) -> std::io::Result<()>,
) -> Result<(), IoError> {
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::Builder::new()
        .prefix(".omniselfie-tmp")
        .tempfile_in(parent)
        .map_err(|e| IoError::io(path, e))?;
    write(&mut tmp).map_err(|e| IoError::io(path, e))?;
    tmp.persist(path).map_err(|e| IoError::io(path, e.error))?;
    Ok(())
}
