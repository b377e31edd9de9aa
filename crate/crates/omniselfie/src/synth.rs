//! Synthetic panorama scenes with known ground truth.
//!
//! Faces are solid discs whose color encodes their happiness on the
//! red-to-green hue axis (`hue = 120 * happiness`), so a trivial
//! color-reading recognizer can recover the scripted expression to within
//! 8-bit quantization. Unrelated bystanders are gray discs (hue 0, happy 0).
//! Every generator is deterministic in its seed.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::f64::consts::{PI, TAU};

use image::RgbImage;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{self, EquirectDims, SphereAngles};
use crate::io::ExpressionEntry;
use crate::renderer::EquirectFrame;
use crate::scoring::ExpressionScores;
use crate::tracks::{BBox, Detection};

/// Background color of generated scenes (dark, never a disc color).
pub const BACKGROUND: [u8; 3] = [18, 18, 18];
/// Bystander disc color: a neutral gray (hue 0 -> happiness 0).
pub const DISTRACTOR_GRAY: [u8; 3] = [128, 128, 128];

/// Errors constructing synthetic scenes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid scene: {0}")]
    InvalidScene(String),
}

/// Maps happiness in `[0, 1]` to a fully saturated color on the red-green
/// hue arc: 0 -> red, 0.5 -> yellow, 1 -> green.
pub fn happiness_to_rgb(happiness: f64) -> [u8; 3] {
    let h2 = 2.0 * happiness.clamp(0.0, 1.0); // hue / 60 degrees, in [0, 2]
    let x = 1.0 - (h2 - 1.0).abs();
    let (r, g) = if h2 <= 1.0 { (1.0, x) } else { (x, 1.0) };
    [(r * 255.0).round() as u8, (g * 255.0).round() as u8, 0]
}

/// Recovers happiness from a color by reading its hue; grays (no hue) read
/// as 0. Inverse of [`happiness_to_rgb`] up to 8-bit quantization (error at
/// most 1/510).
pub fn rgb_to_happiness(rgb: [u8; 3]) -> f64 {
    let r = f64::from(rgb[0]) / 255.0;
    let g = f64::from(rgb[1]) / 255.0;
    let b = f64::from(rgb[2]) / 255.0;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    if delta == 0.0 {
        return 0.0;
    }
    let hue = if max == r {
        60.0 * (((g - b) / delta).rem_euclid(6.0))
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    (hue / 120.0).clamp(0.0, 1.0)
}

/// The expression distribution implied by a single happiness value: the
/// remaining mass splits evenly over the other six categories.
pub fn happiness_distribution(happiness: f64) -> ExpressionScores {
    let rest = (1.0 - happiness) / 6.0;
    ExpressionScores {
        angry: rest,
        disgust: rest,
        fear: rest,
        happy: happiness,
        sad: rest,
        surprise: rest,
        neutral: rest,
    }
}

/// A participant: a disc fixed on the sphere with a happiness script over
/// the frames.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceSpec {
    pub phi: f64,
    pub theta: f64,
    pub radius_px: f64,
    /// One happiness value per frame.
    pub happiness: Vec<f64>,
}

/// An unrelated person: a gray disc present only in some frames.
#[derive(Debug, Clone, PartialEq)]
pub struct DistractorSpec {
    pub phi: f64,
    pub theta: f64,
    pub radius_px: f64,
    pub present_in: BTreeSet<usize>,
}

/// A full synthetic scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub dims: EquirectDims,
    pub n_frames: usize,
    pub faces: Vec<FaceSpec>,
    pub distractors: Vec<DistractorSpec>,
}

/// Ground truth emitted alongside the rendered frames.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// Per frame: every disc present (faces first, then distractors), with
    /// its exact bounding square and confidence 1.
    pub detections: Vec<Vec<Detection>>,
    /// Per frame: the expression entry for every present disc, anchored at
    /// the disc center.
    pub expressions: Vec<Vec<ExpressionEntry>>,
}

impl SceneSpec {
    /// Checks every disc fits vertically, scripts cover every frame, and
    /// probabilities are in range.
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_frames == 0 {
            return Err(SynthError::InvalidScene("need at least one frame".into()));
        }
        let h = self.dims.height_f();
        let check_disc = |phi: f64, theta: f64, r: f64, what: &str| {
            if !(r > 1.0) {
                return Err(SynthError::InvalidScene(format!("{what}: radius {r} too small")));
            }
            let angles = SphereAngles::new(phi, theta)
                .map_err(|e| SynthError::InvalidScene(format!("{what}: {e}")))?;
            let (_, v0) = geometry::pixel_from_angles(angles, self.dims);
            if v0 - r < 0.0 || v0 + r > h - 1.0 {
                return Err(SynthError::InvalidScene(format!(
                    "{what}: disc rows [{:.1}, {:.1}] leave the image",
                    v0 - r,
                    v0 + r
                )));
            }
            Ok(())
        };
        for (i, f) in self.faces.iter().enumerate() {
            check_disc(f.phi, f.theta, f.radius_px, &format!("face {i}"))?;
            if f.happiness.len() != self.n_frames {
                return Err(SynthError::InvalidScene(format!(
                    "face {i}: script covers {} frames, scene has {}",
                    f.happiness.len(),
                    self.n_frames
                )));
            }
            if f.happiness.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                return Err(SynthError::InvalidScene(format!("face {i}: happiness outside [0, 1]")));
            }
        }
        for (j, d) in self.distractors.iter().enumerate() {
            check_disc(d.phi, d.theta, d.radius_px, &format!("distractor {j}"))?;
            if d.present_in.iter().any(|&f| f >= self.n_frames) {
                return Err(SynthError::InvalidScene(format!(
                    "distractor {j}: present in a frame beyond the sequence"
                )));
            }
        }
        Ok(())
    }
}

struct Disc {
    u0: f64,
    v0: f64,
    radius: f64,
    color: [u8; 3],
}

fn paint_disc(img: &mut RgbImage, disc: &Disc) {
    let w = img.width() as i64;
    let (u0, v0, r) = (disc.u0, disc.v0, disc.radius);
    let x_lo = (u0 - r).floor() as i64 - 1;
    let x_hi = (u0 + r).ceil() as i64 + 1;
    let y_lo = ((v0 - r).floor() as i64 - 1).max(0);
    let y_hi = ((v0 + r).ceil() as i64 + 1).min(img.height() as i64 - 1);
    for y in y_lo..=y_hi {
        for x in x_lo..=x_hi {
            let dx = x as f64 - u0;
            let dy = y as f64 - v0;
            if dx * dx + dy * dy <= r * r {
                let px = x.rem_euclid(w) as u32;
                img.put_pixel(px, y as u32, image::Rgb(disc.color));
            }
        }
    }
}

/// Renders the scene and its ground truth. Disc bounding squares are exact
/// (`x = u0 - r` wrapped, side `2r`); expression entries carry the scripted
/// distributions (distractors read as happiness 0).
pub fn generate_scene(spec: &SceneSpec) -> Result<(Vec<EquirectFrame>, GroundTruth), SynthError> {
    spec.validate()?;
    let dims = spec.dims;
    let width = dims.width_f();
    let mut frames = Vec::with_capacity(spec.n_frames);
    let mut detections = Vec::with_capacity(spec.n_frames);
    let mut expressions = Vec::with_capacity(spec.n_frames);
    for frame_index in 0..spec.n_frames {
        let mut img = RgbImage::from_pixel(dims.width(), dims.height(), image::Rgb(BACKGROUND));
        let mut dets = Vec::new();
        let mut exprs = Vec::new();
        for face in &spec.faces {
            let angles = SphereAngles::new(face.phi, face.theta).expect("validated");
            let (u0, v0) = geometry::pixel_from_angles(angles, dims);
            let happiness = face.happiness[frame_index];
            paint_disc(
                &mut img,
                &Disc { u0, v0, radius: face.radius_px, color: happiness_to_rgb(happiness) },
            );
            let bbox = BBox::from_center(u0, v0, 2.0 * face.radius_px, 2.0 * face.radius_px, width);
            dets.push(Detection { frame_index, bbox, confidence: 1.0 });
            exprs.push(ExpressionEntry {
                x: bbox.center_x(width),
                y: bbox.center_y(),
                scores: happiness_distribution(happiness),
            });
        }
        for d in &spec.distractors {
            if !d.present_in.contains(&frame_index) {
                continue;
            }
            let angles = SphereAngles::new(d.phi, d.theta).expect("validated");
            let (u0, v0) = geometry::pixel_from_angles(angles, dims);
            paint_disc(&mut img, &Disc { u0, v0, radius: d.radius_px, color: DISTRACTOR_GRAY });
            let bbox = BBox::from_center(u0, v0, 2.0 * d.radius_px, 2.0 * d.radius_px, width);
            dets.push(Detection { frame_index, bbox, confidence: 1.0 });
            exprs.push(ExpressionEntry {
                x: bbox.center_x(width),
                y: bbox.center_y(),
                scores: happiness_distribution(0.0),
            });
        }
        frames.push(EquirectFrame::new(img).expect("dims validated"));
        detections.push(dets);
        expressions.push(exprs);
    }
    Ok((frames, GroundTruth { detections, expressions }))
}

/// Finds the solid discs of a generated frame: connected components of
/// non-background pixels (4-connected, wrapping horizontally), reported as
/// pixel-tight boxes in scan order. This is the detector behind the
/// `stub-adapter`.
pub fn detect_discs(frame: &EquirectFrame) -> Vec<BBox> {
    let img = frame.image();
    let (w, h) = (img.width() as i64, img.height() as i64);
    // Background = most common color; ties resolve to the smaller RGB triple
    // for determinism.
    let mut counts: HashMap<[u8; 3], u64> = HashMap::new();
    for p in img.pixels() {
        *counts.entry(p.0).or_insert(0) += 1;
    }
    let background = counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.cmp(&a.0)))
        .map(|(color, _)| color)
        .unwrap_or(BACKGROUND);

    let mut visited = vec![false; (w * h) as usize];
    let mut boxes = Vec::new();
    for y0 in 0..h {
        for x0 in 0..w {
            let idx = (y0 * w + x0) as usize;
            if visited[idx] || img.get_pixel(x0 as u32, y0 as u32).0 == background {
                continue;
            }
            // BFS with unwrapped x so seam-straddling discs keep one box.
            let mut queue = VecDeque::from([(x0, y0)]);
            visited[idx] = true;
            let (mut min_x, mut max_x, mut min_y, mut max_y) = (x0, x0, y0, y0);
            while let Some((ux, y)) = queue.pop_front() {
                min_x = min_x.min(ux);
                max_x = max_x.max(ux);
                min_y = min_y.min(y);
                max_y = max_y.max(y);
                let neighbors =
                    [(ux - 1, y), (ux + 1, y), (ux, y - 1), (ux, y + 1)];
                for (nx, ny) in neighbors {
                    if ny < 0 || ny >= h {
                        continue;
                    }
                    let wrapped = nx.rem_euclid(w);
                    let nidx = (ny * w + wrapped) as usize;
                    if visited[nidx] || img.get_pixel(wrapped as u32, ny as u32).0 == background {
                        continue;
                    }
                    visited[nidx] = true;
                    queue.push_back((nx, ny));
                }
            }
            let mut x = (min_x as f64).rem_euclid(w as f64);
            if x >= w as f64 {
                x = 0.0;
            }
            boxes.push(BBox {
                x,
                y: min_y as f64,
                w: (max_x - min_x + 1) as f64,
                h: (max_y - min_y + 1) as f64,
            });
        }
    }
    boxes
}

/// Reads the expression of a face box by the color at its center pixel.
/// This is the recognizer behind the `stub-adapter`.
pub fn stub_recognizer(frame: &EquirectFrame, bbox: &BBox) -> ExpressionScores {
    let dims = frame.dims();
    let w = dims.width();
    let cx = bbox.center_x(dims.width_f()).round() as i64;
    let cy = bbox.center_y().round() as i64;
    let x = cx.rem_euclid(i64::from(w)) as u32;
    let y = cy.clamp(0, i64::from(dims.height() - 1)) as u32;
    happiness_distribution(rgb_to_happiness(frame.pixel(x, y)))
}

/// Detector noise model for ground-truth corruption.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorNoise {
    /// Probability of dropping each true detection.
    pub miss_prob: f64,
    /// Spurious detections added per frame.
    pub spurious_per_frame: usize,
    /// Maximum absolute center jitter per axis (px).
    pub jitter_px: f64,
    pub seed: u64,
}

impl Default for DetectorNoise {
    fn default() -> Self {
        Self { miss_prob: 0.0, spurious_per_frame: 0, jitter_px: 0.0, seed: 0 }
    }
}

/// Corrupts ground-truth detections: drops each with `miss_prob`, jitters
/// surviving boxes, appends spurious small boxes. With all knobs at zero the
/// output equals the input exactly; equal seeds give equal output.
pub fn stub_detector(
    ground_truth: &[Vec<Detection>],
    dims: EquirectDims,
    noise: &DetectorNoise,
) -> Vec<Vec<Detection>> {
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let width = dims.width_f();
    let height = dims.height_f();
    let j = noise.jitter_px;
    ground_truth
        .iter()
        .enumerate()
        .map(|(frame_index, dets)| {
            let mut out = Vec::with_capacity(dets.len());
            for det in dets {
                let miss: f64 = rng.random();
                let dx: f64 = rng.random_range(-j..=j);
                let dy: f64 = rng.random_range(-j..=j);
                if miss < noise.miss_prob {
                    continue;
                }
                let b = det.bbox;
                let mut x = (b.x + dx).rem_euclid(width);
                if x >= width {
                    x = 0.0;
                }
                // Keep the jittered box inside the rows.
                let y = (b.y + dy).clamp(0.0, height - b.h);
                out.push(Detection { bbox: BBox { x, y, ..b }, ..*det });
            }
            for _ in 0..noise.spurious_per_frame {
                let side = rng.random_range(8.0..40.0);
                let x = rng.random_range(0.0..width);
                let y = rng.random_range(0.0..height - side);
                out.push(Detection {
                    frame_index,
                    bbox: BBox { x, y, w: side, h: side },
                    confidence: rng.random_range(0.3..0.9),
                });
            }
            out
        })
        .collect()
}

/// Knobs for [`build_scene`], the deterministic scene-layout generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneParams {
    pub dims: EquirectDims,
    pub n_frames: usize,
    pub n_faces: usize,
    /// Gray discs that appear only sporadically (below the presence
    /// threshold) near the group.
    pub sporadic_distractors: usize,
    /// One persistent gray disc far to the side of the group and small
    /// enough to sit between the baseline and main detector size floors.
    pub distant_distractor: bool,
    /// Frame at which every face's happiness peaks.
    pub peak_frame: usize,
    /// Azimuth of the middle of the group.
    pub center_phi: f64,
    /// Presence threshold the sporadic distractors must stay strictly under.
    pub presence_threshold: f64,
    pub seed: u64,
}

impl Default for SceneParams {
    fn default() -> Self {
        Self {
            dims: EquirectDims::new(1920, 960).expect("2:1"),
            n_frames: 12,
            n_faces: 3,
            sporadic_distractors: 0,
            distant_distractor: false,
            peak_frame: 6,
            center_phi: PI,
            presence_threshold: 0.25,
            seed: 7,
        }
    }
}

/// Lays out a scene: faces in a row near the horizon, spaced `width / 12`
/// pixels apart (comfortably separated for a mean-shift bandwidth of
/// `width / 38` or larger), happiness tents peaking at `peak_frame` with
/// per-face offsets, plus the requested distractors.
pub fn build_scene(params: &SceneParams) -> Result<SceneSpec, SynthError> {
    if params.n_faces == 0 {
        return Err(SynthError::InvalidScene("need at least one face".into()));
    }
    if params.n_frames == 0 || params.n_frames > 80 {
        // The cap keeps per-frame happiness steps well above the 8-bit
        // color quantization, so the scripted peak survives a round trip
        // through rendered pixels.
        return Err(SynthError::InvalidScene(format!(
            "n_frames {} outside 1..=80",
            params.n_frames
        )));
    }
    if params.peak_frame >= params.n_frames {
        return Err(SynthError::InvalidScene(format!(
            "peak frame {} beyond the {} frames",
            params.peak_frame, params.n_frames
        )));
    }
    if !(params.presence_threshold > 0.0 && params.presence_threshold < 1.0) {
        return Err(SynthError::InvalidScene("presence threshold must be in (0, 1)".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let dims = params.dims;
    let width = dims.width_f();
    let n = params.n_frames;
    let spacing_phi = TAU / 12.0; // width / 12 px between neighboring faces

    // Happiness tent shared by all faces; each face adds a constant offset,
    // which shifts every frame's mean equally and keeps the variance
    // constant, so the happiest frame stays exactly at the peak.
    let peak = params.peak_frame;
    let max_dist = peak.max(n - 1 - peak) as f64;
    let slope = if max_dist == 0.0 { 0.0 } else { 0.7 / max_dist };
    let tent: Vec<f64> =
        (0..n).map(|k| 0.9 - slope * (k as f64 - peak as f64).abs()).collect();

    let mut faces = Vec::with_capacity(params.n_faces);
    for i in 0..params.n_faces {
        let offset = (i as f64) - (params.n_faces as f64 - 1.0) / 2.0;
        let phi = params.center_phi + offset * spacing_phi;
        let theta = PI / 2.0 + rng.random_range(-0.06..0.06);
        let radius_px = rng.random_range(0.016..0.031) * width;
        let face_shift = rng.random_range(-0.04..0.04);
        faces.push(FaceSpec {
            phi,
            theta,
            radius_px,
            happiness: tent.iter().map(|t| t + face_shift).collect(),
        });
    }
    let group_half = (params.n_faces as f64 - 1.0) / 2.0 * spacing_phi;

    let mut distractors = Vec::new();
    // Sporadic bystanders sit one spacing beyond the group's edge,
    // alternating sides, stepping outward.
    for jdx in 0..params.sporadic_distractors {
        let side = if jdx % 2 == 0 { 1.0 } else { -1.0 };
        let step = 1.0 + (jdx / 2) as f64;
        let phi = params.center_phi + side * (group_half + step * 1.6 * spacing_phi);
        let theta = PI / 2.0 + rng.random_range(-0.05..0.05);
        let radius_px = rng.random_range(0.016..0.028) * width;
        let cap = (n as f64 * params.presence_threshold - 1e-9).floor() as usize;
        if cap == 0 {
            return Err(SynthError::InvalidScene(format!(
                "no sporadic presence possible below threshold {} over {n} frames",
                params.presence_threshold
            )));
        }
        let count = rng.random_range(1..=cap);
        let mut frames: Vec<usize> = (0..n).collect();
        frames.shuffle(&mut rng);
        let present_in: BTreeSet<usize> = frames.into_iter().take(count).collect();
        distractors.push(DistractorSpec { phi, theta, radius_px, present_in });
    }
    if params.distant_distractor {
        // Far to the side (about 55 degrees beyond the group center) and
        // above the horizon: both plane extents must grow to include it.
        let phi = params.center_phi + group_half + rng.random_range(0.9..1.0);
        let theta = PI / 2.0 - 0.3;
        let radius_px = rng.random_range(11.0..16.0);
        let present_in: BTreeSet<usize> = (0..n).collect();
        distractors.push(DistractorSpec { phi, theta, radius_px, present_in });
    }

    let spec = SceneSpec { dims, n_frames: n, faces, distractors };
    spec.validate()?;
    Ok(spec)
}

#[derive(serde::Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
enum StubRequest {
    Detect { image: std::path::PathBuf },
    Express { image: std::path::PathBuf, bbox: StubBox },
}

#[derive(serde::Deserialize)]
struct StubBox {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
}

#[derive(serde::Serialize)]
struct DetectReply {
    detections: Vec<crate::io::DetectionRecord>,
}

#[derive(serde::Serialize)]
struct ExpressReply {
    scores: ExpressionScores,
}

/// Serves the line-delimited JSON detection protocol over the given
/// streams, answering with [`detect_discs`] boxes (confidence 1) and
/// [`stub_recognizer`] scores. Caches the last loaded image so the usual
/// detect-then-express-per-box exchange reads each frame once. Returns when
/// the input closes; any malformed request or unreadable image is an error.
pub fn serve_stub_adapter<R, W>(input: R, mut output: W) -> std::io::Result<()>
where
    R: std::io::BufRead,
    W: std::io::Write,
{
    use std::io::{Error, ErrorKind};
    let mut cache: Option<(std::path::PathBuf, EquirectFrame)> = None;
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let request: StubRequest = serde_json::from_str(&line)
            .map_err(|e| Error::new(ErrorKind::InvalidData, format!("bad request {line:?}: {e}")))?;
        let image_path = match &request {
            StubRequest::Detect { image } | StubRequest::Express { image, .. } => image.clone(),
        };
        if cache.as_ref().map(|(p, _)| p.as_path()) != Some(image_path.as_path()) {
            let img = image::open(&image_path)
                .map_err(|e| {
                    Error::new(ErrorKind::InvalidData, format!("{}: {e}", image_path.display()))
                })?
                .to_rgb8();
            let frame = EquirectFrame::new(img).map_err(|e| {
                Error::new(ErrorKind::InvalidData, format!("{}: {e}", image_path.display()))
            })?;
            cache = Some((image_path, frame));
        }
        let frame = &cache.as_ref().expect("just cached").1;
        let reply = match request {
            StubRequest::Detect { .. } => {
                let detections = detect_discs(frame)
                    .into_iter()
                    .map(|b| crate::io::DetectionRecord {
                        x: b.x,
                        y: b.y,
                        w: b.w,
                        h: b.h,
                        confidence: 1.0,
                    })
                    .collect();
                serde_json::to_string(&DetectReply { detections })
            }
            StubRequest::Express { bbox, .. } => {
                let bbox = BBox { x: bbox.x, y: bbox.y, w: bbox.w, h: bbox.h };
                let scores = stub_recognizer(frame, &bbox);
                serde_json::to_string(&ExpressReply { scores })
            }
        }
        .map_err(|e| Error::new(ErrorKind::InvalidData, e))?;
        output.write_all(reply.as_bytes())?;
        output.write_all(b"\n")?;
        output.flush()?;
    }
    Ok(())
}

/// A randomized clustering scenario with known structure: `n_faces` steady
/// clusters (presence at least half the frames) plus `n_spurious` clusters
/// rare enough to be eliminated, all center-separated by at least three
/// bandwidths.
#[derive(Debug, Clone)]
pub struct TrackScenario {
    pub detections: Vec<Detection>,
    pub n_faces: usize,
    pub n_spurious: usize,
    pub n_frames: usize,
    pub dims: EquirectDims,
}

/// Generates a [`TrackScenario`]. Box sides stay in `[52, 246]`, sized for
/// the default 50/250 size filters; jitter stays within a tenth of the
/// bandwidth so clusters cannot bleed into each other.
pub fn synthetic_track_scenario(
    seed: u64,
    dims: EquirectDims,
    bandwidth: f64,
    presence_threshold: f64,
) -> TrackScenario {
    assert!(dims.height() >= 960, "scenario needs vertical room for large boxes");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = dims.width_f();
    let height = dims.height_f();
    let n_frames = rng.random_range(24..=60);
    let n_faces = rng.random_range(2..=8);
    let n_spurious = rng.random_range(0..=4);

    // Cluster centers: rejection-sample pairwise separation >= 3 bandwidths
    // (wrap-aware). The panorama is far larger than 12 such exclusion
    // zones, so this terminates fast; reseeding keeps it deterministic.
    let min_sep = 3.0 * bandwidth;
    let mut centers: Vec<(f64, f64)> = Vec::new();
    while centers.len() < n_faces + n_spurious {
        let candidate = (rng.random_range(0.0..width), rng.random_range(0.3 * height..0.7 * height));
        let clear = centers.iter().all(|&(cx, cy)| {
            let dx = crate::tracks::wrap_signed(candidate.0 - cx, width);
            let dy = candidate.1 - cy;
            (dx * dx + dy * dy).sqrt() >= min_sep
        });
        if clear {
            centers.push(candidate);
        }
    }

    let jitter = (bandwidth / 10.0).min(10.0);
    let mut detections = Vec::new();
    let emit = |rng: &mut ChaCha8Rng, center: (f64, f64), frames: &[usize], dets: &mut Vec<Detection>| {
        let base_side = rng.random_range(64.0..236.0);
        for &frame_index in frames {
            let dx = rng.random_range(-jitter..=jitter);
            let dy = rng.random_range(-jitter..=jitter);
            let side = base_side + rng.random_range(-6.0..=6.0);
            let bbox =
                BBox::from_center(center.0 + dx, center.1 + dy, side, side, width);
            dets.push(Detection { frame_index, bbox, confidence: rng.random_range(0.5..1.0) });
        }
    };

    for face in 0..n_faces {
        let present = rng.random_range(0.5..0.96);
        let count = ((n_frames as f64 * present).ceil() as usize).clamp(1, n_frames);
        let mut frames: Vec<usize> = (0..n_frames).collect();
        frames.shuffle(&mut rng);
        let mut frames: Vec<usize> = frames.into_iter().take(count).collect();
        frames.sort_unstable();
        emit(&mut rng, centers[face], &frames, &mut detections);
    }
    for spurious in 0..n_spurious {
        let cap = ((n_frames as f64 * presence_threshold) - 1e-9).floor() as usize;
        let count = rng.random_range(1..=cap.max(1));
        let mut frames: Vec<usize> = (0..n_frames).collect();
        frames.shuffle(&mut rng);
        let mut frames: Vec<usize> = frames.into_iter().take(count).collect();
        frames.sort_unstable();
        emit(&mut rng, centers[n_faces + spurious], &frames, &mut detections);
    }
    // Frame-major order, as a real detector would emit them.
    detections.sort_by_key(|d| d.frame_index);
    TrackScenario { detections, n_faces, n_spurious, n_frames, dims }
}
