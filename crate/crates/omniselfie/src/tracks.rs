//! Face detection tracks over an equirectangular sequence.
//!
//! Detections from every frame are pooled and clustered by box center with
//! mean shift; each cluster is one "class" (a candidate participant). Classes
//! are then cleaned: rarely-seen classes and classes of implausibly large
//! boxes are eliminated, per-frame duplicates are collapsed, and gaps are
//! filled by interpolation so every surviving class has exactly one box per
//! frame.
//!
//! All horizontal arithmetic is wrap-aware: column `x` lives on a circle of
//! circumference `width`, so distances, means and shifts go through
//! [`wrap_signed`] / [`circular_mean`] rather than plain subtraction.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::EquirectDims;

/// Convergence threshold for a mean-shift ascent step, in pixels.
const MODE_EPS: f64 = 0.1;
/// Iteration cap for one mean-shift ascent.
const MAX_SHIFT_ITERS: usize = 300;

/// Errors from track construction and cleaning.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrackError {
    /// The phasor sum of the samples is (near-)zero, e.g. two antipodal
    /// points: no direction can be preferred.
    #[error("circular mean undefined: samples cancel out")]
    UndefinedCircularMean,
    /// Cleaning removed every class; there is nobody left to frame.
    #[error("all track classes eliminated; no participants remain")]
    EmptyTrackSet,
    /// A bounding box violates basic constraints.
    #[error("invalid bounding box: {0}")]
    InvalidBBox(String),
}

/// Why a class was removed during elimination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EliminationReason {
    /// Present in too small a fraction of frames.
    LowPresence { presence_ratio: f64, threshold: f64 },
    /// Too many of its boxes exceed the plausible face size.
    Oversized { oversized_ratio: f64, threshold: f64 },
}

impl fmt::Display for EliminationReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EliminationReason::LowPresence { presence_ratio, threshold } => {
                write!(f, "presence ratio {presence_ratio:.4} below threshold {threshold}")
            }
            EliminationReason::Oversized { oversized_ratio, threshold } => {
                write!(f, "oversized ratio {oversized_ratio:.4} above threshold {threshold}")
            }
        }
    }
}

/// Wraps a difference onto `(-period/2, period/2]`: the signed shortest way
/// around the circle from 0 to `delta`.
pub fn wrap_signed(delta: f64, period: f64) -> f64 {
    let r = delta.rem_euclid(period);
    if r > period * 0.5 {
        r - period
    } else {
        r
    }
}

/// Shortest distance between two positions on a circle of the given period.
pub fn circular_distance(a: f64, b: f64, period: f64) -> f64 {
    wrap_signed(a - b, period).abs()
}

/// Euclidean distance with a circular first coordinate.
fn circ_euclid(a: (f64, f64), b: (f64, f64), period: f64) -> f64 {
    let dx = wrap_signed(a.0 - b.0, period);
    let dy = a.1 - b.1;
    (dx * dx + dy * dy).sqrt()
}

/// Mean of positions on a circle of the given period.
///
/// The direction is found from the phasor sum `sum(exp(2pi i x / period))`;
/// the returned value then refines it to the exact arithmetic mean of the
/// samples unwrapped around that direction. When all samples fit in half the
/// circle this equals the ordinary arithmetic mean (mod period). Errors if
/// the phasor sum is (near-)zero, e.g. for two antipodal samples.
pub fn circular_mean(xs: &[f64], period: f64) -> Result<f64, TrackError> {
    if xs.is_empty() {
        return Err(TrackError::UndefinedCircularMean);
    }
    let n = xs.len() as f64;
    let (mut sin_sum, mut cos_sum) = (0.0, 0.0);
    for &x in xs {
        let a = x / period * TAU;
        sin_sum += a.sin();
        cos_sum += a.cos();
    }
    if (sin_sum / n).hypot(cos_sum / n) < 1e-12 {
        return Err(TrackError::UndefinedCircularMean);
    }
    let anchor = sin_sum.atan2(cos_sum).rem_euclid(TAU) / TAU * period;
    let offset = xs.iter().map(|&x| wrap_signed(x - anchor, period)).sum::<f64>() / n;
    let mut mean = (anchor + offset).rem_euclid(period);
    if mean >= period {
        mean = 0.0;
    }
    Ok(mean)
}

/// Axis-aligned box on the equirectangular image. `x` is the left edge and
/// may wrap: the box occupies columns `[x, x + w)` modulo the image width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    /// Validates sizes and the vertical range, and wraps `x` into `[0, width)`.
    pub fn normalized(self, dims: EquirectDims) -> Result<BBox, TrackError> {
        let width = dims.width_f();
        let height = dims.height_f();
        if !(self.w.is_finite() && self.h.is_finite() && self.w > 0.0 && self.h > 0.0) {
            return Err(TrackError::InvalidBBox(format!("size {}x{} must be positive", self.w, self.h)));
        }
        if !self.x.is_finite() || !self.y.is_finite() {
            return Err(TrackError::InvalidBBox("non-finite position".into()));
        }
        if self.y < 0.0 || self.y + self.h > height {
            return Err(TrackError::InvalidBBox(format!(
                "rows [{}, {}] outside image height {height}",
                self.y,
                self.y + self.h
            )));
        }
        let mut x = self.x.rem_euclid(width);
        if x >= width {
            x = 0.0;
        }
        Ok(BBox { x, ..self })
    }

    /// Builds a box of size `w x h` centered at `(cx, cy)`, wrapping in x.
    pub fn from_center(cx: f64, cy: f64, w: f64, h: f64, width: f64) -> BBox {
        let mut x = (cx - w / 2.0).rem_euclid(width);
        if x >= width {
            x = 0.0;
        }
        BBox { x, y: cy - h / 2.0, w, h }
    }

    /// Horizontal center, wrapped into `[0, width)`.
    pub fn center_x(&self, width: f64) -> f64 {
        let mut cx = (self.x + self.w / 2.0).rem_euclid(width);
        if cx >= width {
            cx = 0.0;
        }
        cx
    }

    pub fn center_y(&self) -> f64 {
        self.y + self.h / 2.0
    }

    pub fn min_side(&self) -> f64 {
        self.w.min(self.h)
    }

    pub fn max_side(&self) -> f64 {
        self.w.max(self.h)
    }

    /// The four corners, counter-clockwise from the top-left. `x + w` may
    /// exceed the image width; callers that need wrapped columns wrap them.
    pub fn corners(&self) -> [(f64, f64); 4] {
        [
            (self.x, self.y),
            (self.x + self.w, self.y),
            (self.x + self.w, self.y + self.h),
            (self.x, self.y + self.h),
        ]
    }
}

/// One face detection in one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub frame_index: usize,
    pub bbox: BBox,
    pub confidence: f64,
}

/// A box belonging to a class in one frame; `interpolated` marks boxes that
/// were synthesized to fill a detection gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackMember {
    pub frame_index: usize,
    pub bbox: BBox,
    pub interpolated: bool,
}

/// One clustered face class: all member boxes across the sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackClass {
    pub class_id: usize,
    pub members: Vec<TrackMember>,
}

/// Snapshot of a class's statistics, as reported to the user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub class_id: usize,
    pub mean_center: (f64, f64),
    pub mean_size: (f64, f64),
    pub presence_ratio: f64,
    pub oversized_ratio: f64,
    pub member_count: usize,
}

impl TrackClass {
    /// Fraction of frames in which the class has at least one member.
    pub fn presence_ratio(&self, n_frames: usize) -> f64 {
        if n_frames == 0 {
            return 0.0;
        }
        let distinct: BTreeSet<usize> = self.members.iter().map(|m| m.frame_index).collect();
        distinct.len() as f64 / n_frames as f64
    }

    /// Fraction of members whose larger box side exceeds `max_side`.
    pub fn oversized_ratio(&self, max_side: f64) -> f64 {
        if self.members.is_empty() {
            return 0.0;
        }
        let over = self.members.iter().filter(|m| m.bbox.max_side() > max_side).count();
        over as f64 / self.members.len() as f64
    }

    /// Mean member center: circular mean in x, arithmetic mean in y.
    pub fn mean_center(&self, dims: EquirectDims) -> Result<(f64, f64), TrackError> {
        let width = dims.width_f();
        let xs: Vec<f64> = self.members.iter().map(|m| m.bbox.center_x(width)).collect();
        let cx = circular_mean(&xs, width)?;
        let cy = self.members.iter().map(|m| m.bbox.center_y()).sum::<f64>() / self.members.len() as f64;
        Ok((cx, cy))
    }

    /// Mean member box size (width, height).
    pub fn mean_size(&self) -> (f64, f64) {
        let n = self.members.len() as f64;
        let w = self.members.iter().map(|m| m.bbox.w).sum::<f64>() / n;
        let h = self.members.iter().map(|m| m.bbox.h).sum::<f64>() / n;
        (w, h)
    }

    pub fn summary(
        &self,
        n_frames: usize,
        dims: EquirectDims,
        max_side: f64,
    ) -> Result<ClassSummary, TrackError> {
        Ok(ClassSummary {
            class_id: self.class_id,
            mean_center: self.mean_center(dims)?,
            mean_size: self.mean_size(),
            presence_ratio: self.presence_ratio(n_frames),
            oversized_ratio: self.oversized_ratio(max_side),
            member_count: self.members.len(),
        })
    }

    /// The member for a given frame, if any (unique after deduplication).
    pub fn member_in_frame(&self, frame_index: usize) -> Option<&TrackMember> {
        self.members.iter().find(|m| m.frame_index == frame_index)
    }
}

/// All face classes of a sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackSet {
    pub classes: Vec<TrackClass>,
    pub n_frames: usize,
    pub dims: EquirectDims,
}

/// Drops detections whose smaller box side is below `min_side` (too small
/// to be a reliable participant face).
pub fn filter_min_side(detections: &[Detection], min_side: f64) -> Vec<Detection> {
    detections.iter().filter(|d| d.bbox.min_side() >= min_side).cloned().collect()
}

/// Flat-kernel mean shift over box centers `(x, y)` with a circular x axis.
///
/// Each point hill-climbs to its density mode: repeatedly move to the mean
/// of all points within `bandwidth` (Euclidean, wrap-aware in x) until the
/// step is below 0.1 px or 300 iterations pass. Modes closer than
/// `bandwidth / 2` are merged; points are assigned the cluster of their mode,
/// labels numbered by first appearance in input order.
pub fn mean_shift_cluster(centers: &[(f64, f64)], bandwidth: f64, dims: EquirectDims) -> Vec<usize> {
    assert!(bandwidth > 0.0, "bandwidth must be positive");
    let period = dims.width_f();
    let modes: Vec<(f64, f64)> =
        centers.iter().map(|&c| climb_to_mode(c, centers, bandwidth, period)).collect();

    let mut cluster_modes: Vec<(f64, f64)> = Vec::new();
    let mut assignment = Vec::with_capacity(centers.len());
    for mode in &modes {
        let id = cluster_modes
            .iter()
            .position(|cm| circ_euclid(*cm, *mode, period) <= bandwidth / 2.0)
            .unwrap_or_else(|| {
                cluster_modes.push(*mode);
                cluster_modes.len() - 1
            });
        assignment.push(id);
    }
    assignment
}

fn climb_to_mode(start: (f64, f64), points: &[(f64, f64)], bandwidth: f64, period: f64) -> (f64, f64) {
    let sq_bw = bandwidth * bandwidth;
    let mut cur = start;
    for _ in 0..MAX_SHIFT_ITERS {
        let mut dx_sum = 0.0;
        let mut y_sum = 0.0;
        let mut count = 0usize;
        for &(px, py) in points {
            let dx = wrap_signed(px - cur.0, period);
            let dy = py - cur.1;
            if dx * dx + dy * dy <= sq_bw {
                dx_sum += dx;
                y_sum += py;
                count += 1;
            }
        }
        if count == 0 {
            // Unreachable from a data point, which is its own neighbor.
            break;
        }
        let n = count as f64;
        let mut next_x = (cur.0 + dx_sum / n).rem_euclid(period);
        if next_x >= period {
            next_x = 0.0;
        }
        let next = (next_x, y_sum / n);
        let moved = circ_euclid(cur, next, period);
        cur = next;
        if moved < MODE_EPS {
            break;
        }
    }
    cur
}

impl TrackSet {
    /// Groups detections into classes according to a clustering assignment
    /// (`assignment[i]` labels `detections[i]`). Classes keep the label as
    /// their id; members stay in input order.
    pub fn from_assignments(
        detections: &[Detection],
        assignment: &[usize],
        n_frames: usize,
        dims: EquirectDims,
    ) -> TrackSet {
        assert_eq!(detections.len(), assignment.len(), "one label per detection");
        let mut by_class: BTreeMap<usize, Vec<TrackMember>> = BTreeMap::new();
        for (det, &label) in detections.iter().zip(assignment) {
            by_class.entry(label).or_default().push(TrackMember {
                frame_index: det.frame_index,
                bbox: det.bbox,
                interpolated: false,
            });
        }
        let classes = by_class
            .into_iter()
            .map(|(class_id, members)| TrackClass { class_id, members })
            .collect();
        TrackSet { classes, n_frames, dims }
    }

    /// Convenience: cluster detection centers with mean shift and group.
    pub fn cluster_detections(
        detections: &[Detection],
        n_frames: usize,
        dims: EquirectDims,
        bandwidth: f64,
    ) -> TrackSet {
        let width = dims.width_f();
        let centers: Vec<(f64, f64)> =
            detections.iter().map(|d| (d.bbox.center_x(width), d.bbox.center_y())).collect();
        let assignment = mean_shift_cluster(&centers, bandwidth, dims);
        TrackSet::from_assignments(detections, &assignment, n_frames, dims)
    }
}

/// Removes classes that are present in less than a fraction `t` of frames
/// (strictly below) or whose oversized-box fraction exceeds `t` (strictly
/// above). Survivors keep their ids and members. Errors if nothing survives.
pub fn eliminate_classes(
    trackset: &TrackSet,
    t: f64,
    max_side: f64,
) -> Result<(TrackSet, BTreeMap<usize, EliminationReason>), TrackError> {
    let mut survivors = Vec::new();
    let mut log = BTreeMap::new();
    for class in &trackset.classes {
        let presence = class.presence_ratio(trackset.n_frames);
        let oversized = class.oversized_ratio(max_side);
        if presence < t {
            log.insert(
                class.class_id,
                EliminationReason::LowPresence { presence_ratio: presence, threshold: t },
            );
        } else if oversized > t {
            log.insert(
                class.class_id,
                EliminationReason::Oversized { oversized_ratio: oversized, threshold: t },
            );
        } else {
            survivors.push(class.clone());
        }
    }
    if survivors.is_empty() {
        return Err(TrackError::EmptyTrackSet);
    }
    Ok((TrackSet { classes: survivors, n_frames: trackset.n_frames, dims: trackset.dims }, log))
}

/// Collapses multiple members of one class in the same frame down to the one
/// nearest the class mean center (wrap-aware). Ties go to the lower box `x`,
/// then the lower `y`.
pub fn dedup_class_per_frame(trackset: &TrackSet) -> Result<TrackSet, TrackError> {
    let width = trackset.dims.width_f();
    let mut classes = Vec::with_capacity(trackset.classes.len());
    for class in &trackset.classes {
        let mean = class.mean_center(trackset.dims)?;
        let mut best: HashMap<usize, &TrackMember> = HashMap::new();
        for member in &class.members {
            let entry = best.entry(member.frame_index).or_insert(member);
            let key = |m: &TrackMember| {
                (circ_euclid((m.bbox.center_x(width), m.bbox.center_y()), mean, width), m.bbox.x, m.bbox.y)
            };
            let (cand, cur) = (key(member), key(entry));
            if cand.0 < cur.0
                || (cand.0 == cur.0 && (cand.1 < cur.1 || (cand.1 == cur.1 && cand.2 < cur.2)))
            {
                *entry = member;
            }
        }
        let mut members: Vec<TrackMember> = best.into_values().cloned().collect();
        members.sort_by_key(|m| m.frame_index);
        classes.push(TrackClass { class_id: class.class_id, members });
    }
    Ok(TrackSet { classes, n_frames: trackset.n_frames, dims: trackset.dims })
}

/// Fills every detection gap of every class with a synthetic member at the
/// class's mean center and mean size. Original members are untouched; after
/// this, every class has exactly one member per frame (given deduplicated
/// input), sorted by frame.
pub fn interpolate(trackset: &TrackSet) -> Result<TrackSet, TrackError> {
    let width = trackset.dims.width_f();
    let mut classes = Vec::with_capacity(trackset.classes.len());
    for class in &trackset.classes {
        let (cx, cy) = class.mean_center(trackset.dims)?;
        let (mw, mh) = class.mean_size();
        let covered: BTreeSet<usize> = class.members.iter().map(|m| m.frame_index).collect();
        let mut members = class.members.clone();
        for frame in 0..trackset.n_frames {
            if !covered.contains(&frame) {
                members.push(TrackMember {
                    frame_index: frame,
                    bbox: BBox::from_center(cx, cy, mw, mh, width),
                    interpolated: true,
                });
            }
        }
        members.sort_by_key(|m| m.frame_index);
        classes.push(TrackClass { class_id: class.class_id, members });
    }
    Ok(TrackSet { classes, n_frames: trackset.n_frames, dims: trackset.dims })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dims_4k() -> EquirectDims {
        EquirectDims::new(3840, 1920).unwrap()
    }

    fn det(frame: usize, x: f64, y: f64, side: f64) -> Detection {
        Detection { frame_index: frame, bbox: BBox { x, y, w: side, h: side }, confidence: 1.0 }
    }

    /// Direction of the phasor sum, the anchor of the circular mean.
    fn phasor_direction(xs: &[f64], period: f64) -> f64 {
        let (s, c) = xs.iter().fold((0.0, 0.0), |(s, c), &x| {
            let a = x / period * TAU;
            (s + a.sin(), c + a.cos())
        });
        s.atan2(c).rem_euclid(TAU) / TAU * period
    }

    /// Independent unwrap route: pull `x` into the half-open window
    /// `(anchor - period/2, anchor + period/2]` by whole turns.
    fn unwrap_near(x: f64, anchor: f64, period: f64) -> f64 {
        let mut y = x;
        while y <= anchor - period / 2.0 {
            y += period;
        }
        while y > anchor + period / 2.0 {
            y -= period;
        }
        y
    }

    #[test]
    fn wrap_signed_halves_the_period() {
        assert_eq!(wrap_signed(100.0, 3840.0), 100.0);
        assert_eq!(wrap_signed(-100.0, 3840.0), -100.0);
        assert_eq!(wrap_signed(3740.0, 3840.0), -100.0);
        assert_eq!(wrap_signed(1920.0, 3840.0), 1920.0); // boundary stays positive
        assert_eq!(wrap_signed(-1920.0, 3840.0), 1920.0);
    }

    #[test]
    fn circular_mean_wraps_across_seam() {
        // 3830 and 10 straddle the seam of a 3840 circle; their mean is 0.
        let mean = circular_mean(&[3830.0, 10.0], 3840.0).unwrap();
        assert!(circular_distance(mean, 0.0, 3840.0) < 1e-9, "mean = {mean}");
    }

    #[test]
    fn circular_mean_matches_arithmetic_in_half_circle() {
        let mean = circular_mean(&[0.0, 0.0, 960.0], 3840.0).unwrap();
        assert!((mean - 320.0).abs() < 1e-9, "mean = {mean}");
        let mean = circular_mean(&[100.0, 104.0, 108.0], 3840.0).unwrap();
        assert!((mean - 104.0).abs() < 1e-9, "mean = {mean}");
    }

    #[test]
    fn circular_mean_rejects_antipodal() {
        assert_eq!(circular_mean(&[0.0, 1920.0], 3840.0), Err(TrackError::UndefinedCircularMean));
        assert_eq!(circular_mean(&[], 3840.0), Err(TrackError::UndefinedCircularMean));
    }

    #[test]
    fn bbox_normalization() {
        let dims = dims_4k();
        let b = BBox { x: -40.0, y: 10.0, w: 80.0, h: 80.0 }.normalized(dims).unwrap();
        assert_eq!(b.x, 3800.0);
        assert!(BBox { x: 0.0, y: 10.0, w: 0.0, h: 80.0 }.normalized(dims).is_err());
        assert!(BBox { x: 0.0, y: -1.0, w: 80.0, h: 80.0 }.normalized(dims).is_err());
        assert!(BBox { x: 0.0, y: 1900.0, w: 80.0, h: 80.0 }.normalized(dims).is_err());
    }

    #[test]
    fn bbox_center_wraps() {
        let b = BBox { x: 3800.0, y: 0.0, w: 80.0, h: 80.0 };
        assert_eq!(b.center_x(3840.0), 0.0);
        assert_eq!(b.center_y(), 40.0);
    }

    #[test]
    fn min_side_filter_drops_small() {
        let dets = vec![det(0, 0.0, 0.0, 49.9), det(0, 100.0, 0.0, 50.0), det(1, 200.0, 0.0, 120.0)];
        let kept = filter_min_side(&dets, 50.0);
        assert_eq!(kept.len(), 2);
        assert!(kept.iter().all(|d| d.bbox.min_side() >= 50.0));
    }

    #[test]
    fn mean_shift_separates_well_spaced_clusters() {
        let dims = dims_4k();
        // Two tight groups 1000 px apart plus one straddling the seam.
        let centers = vec![
            (500.0, 900.0),
            (510.0, 905.0),
            (495.0, 910.0),
            (1500.0, 900.0),
            (1505.0, 895.0),
            (3835.0, 1000.0),
            (5.0, 1002.0),
        ];
        let labels = mean_shift_cluster(&centers, 100.0, dims);
        assert_eq!(labels[0], labels[1]);
        assert_eq!(labels[0], labels[2]);
        assert_eq!(labels[3], labels[4]);
        assert_ne!(labels[0], labels[3]);
        // The seam pair collapses to one cluster despite the wraparound.
        assert_eq!(labels[5], labels[6]);
        assert_ne!(labels[5], labels[0]);
        // Labels are numbered by first appearance.
        assert_eq!(labels[0], 0);
        assert_eq!(labels[3], 1);
        assert_eq!(labels[5], 2);
    }

    #[test]
    fn mean_shift_identical_points_single_cluster() {
        let dims = dims_4k();
        let centers = vec![(42.0, 42.0); 5];
        assert_eq!(mean_shift_cluster(&centers, 100.0, dims), vec![0; 5]);
    }

    #[test]
    fn elimination_drops_rare_and_oversized() {
        let dims = dims_4k();
        // Class 0: present 10/10 frames, normal size. Class 1: 2/10 frames.
        // Class 2: every box side 300 > 250.
        let mut dets = Vec::new();
        let mut labels = Vec::new();
        for f in 0..10 {
            dets.push(det(f, 500.0, 900.0, 100.0));
            labels.push(0);
        }
        for f in [3, 7] {
            dets.push(det(f, 1500.0, 900.0, 100.0));
            labels.push(1);
        }
        for f in 0..10 {
            dets.push(det(f, 2500.0, 900.0, 300.0));
            labels.push(2);
        }
        let ts = TrackSet::from_assignments(&dets, &labels, 10, dims);
        let (cleaned, log) = eliminate_classes(&ts, 0.25, 250.0).unwrap();
        assert_eq!(cleaned.classes.len(), 1);
        assert_eq!(cleaned.classes[0].class_id, 0);
        assert!(matches!(log[&1], EliminationReason::LowPresence { .. }));
        assert!(matches!(log[&2], EliminationReason::Oversized { .. }));
        // Survivor members are untouched.
        assert_eq!(cleaned.classes[0].members.len(), 10);
        assert!(cleaned.classes[0].members.iter().all(|m| !m.interpolated));
    }

    #[test]
    fn elimination_boundaries_are_strict() {
        let dims = dims_4k();
        // Presence exactly T = 0.25 (1 of 4 frames) survives; oversized
        // ratio exactly T survives too.
        let dets = vec![det(0, 500.0, 900.0, 100.0)];
        let ts = TrackSet::from_assignments(&dets, &[0], 4, dims);
        let (kept, log) = eliminate_classes(&ts, 0.25, 250.0).unwrap();
        assert_eq!(kept.classes.len(), 1);
        assert!(log.is_empty());

        let dets =
            vec![det(0, 500.0, 900.0, 100.0), det(1, 500.0, 900.0, 100.0), det(2, 500.0, 900.0, 100.0), det(3, 500.0, 900.0, 300.0)];
        let ts = TrackSet::from_assignments(&dets, &[0, 0, 0, 0], 4, dims);
        let (kept, log) = eliminate_classes(&ts, 0.25, 250.0).unwrap();
        assert_eq!(kept.classes.len(), 1, "oversized ratio exactly 0.25 survives");
        assert!(log.is_empty());
    }

    #[test]
    fn elimination_of_everything_errors() {
        let dims = dims_4k();
        let dets = vec![det(0, 500.0, 900.0, 100.0)];
        let ts = TrackSet::from_assignments(&dets, &[0], 10, dims);
        assert_eq!(eliminate_classes(&ts, 0.25, 250.0).unwrap_err(), TrackError::EmptyTrackSet);
    }

    #[test]
    fn dedup_keeps_nearest_to_mean() {
        let dims = dims_4k();
        // Frame 1 has two boxes; centers 600 and 520. Mean center of all
        // three members is pulled toward 520 by the frame-0 box at 500.
        let dets = vec![det(0, 500.0, 900.0, 100.0), det(1, 600.0, 900.0, 100.0), det(1, 520.0, 900.0, 100.0)];
        let ts = TrackSet::from_assignments(&dets, &[0, 0, 0], 2, dims);
        let deduped = dedup_class_per_frame(&ts).unwrap();
        let class = &deduped.classes[0];
        assert_eq!(class.members.len(), 2);
        let in_frame_1 = class.member_in_frame(1).unwrap();
        assert_eq!(in_frame_1.bbox.x, 520.0);
    }

    #[test]
    fn dedup_tie_breaks_on_lower_x() {
        let dims = dims_4k();
        // Two frame-0 boxes symmetric around the mean center x = 1000.
        let dets = vec![det(0, 940.0, 900.0, 100.0), det(0, 1060.0 - 100.0, 900.0, 100.0)];
        // centers: 990 and 1010; mean 1000; equidistant -> lower x wins.
        let ts = TrackSet::from_assignments(&dets, &[0, 0], 1, dims);
        let deduped = dedup_class_per_frame(&ts).unwrap();
        assert_eq!(deduped.classes[0].members.len(), 1);
        assert_eq!(deduped.classes[0].members[0].bbox.x, 940.0);
    }

    #[test]
    fn interpolation_fills_gaps_at_mean() {
        let dims = dims_4k();
        let dets = vec![det(0, 3800.0, 900.0, 100.0), det(2, 60.0, 920.0, 120.0)];
        let ts = TrackSet::from_assignments(&dets, &[0, 0], 3, dims);
        let filled = interpolate(&ts).unwrap();
        let class = &filled.classes[0];
        assert_eq!(class.members.len(), 3);
        let gap = class.member_in_frame(1).unwrap();
        assert!(gap.interpolated);
        // Mean center: circular mean of {3850 mod 3840 = 3850->3850? centers
        // are 3850 mod 3840 = 10 and 120} -> 65; mean size 110.
        assert!((gap.bbox.center_x(3840.0) - 65.0).abs() < 1e-9);
        assert!((gap.bbox.center_y() - (950.0 + 980.0) / 2.0).abs() < 1e-9);
        assert!((gap.bbox.w - 110.0).abs() < 1e-9);
        assert!((gap.bbox.h - 110.0).abs() < 1e-9);
        // Original members untouched.
        assert_eq!(class.member_in_frame(0).unwrap().bbox, dets[0].bbox);
        assert!(!class.member_in_frame(0).unwrap().interpolated);
    }

    #[test]
    fn presence_counts_distinct_frames() {
        let dims = dims_4k();
        let dets = vec![det(0, 500.0, 900.0, 100.0), det(0, 510.0, 900.0, 100.0), det(1, 505.0, 900.0, 100.0)];
        let ts = TrackSet::from_assignments(&dets, &[0, 0, 0], 4, dims);
        // Two distinct frames out of four, despite three members.
        assert!((ts.classes[0].presence_ratio(4) - 0.5).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn circular_mean_matches_unwrap_oracle(
            xs in prop::collection::vec(0.0..3840.0f64, 1..20),
        ) {
            // Oracle route: unwrap all samples into a half-period window
            // around the phasor direction, then plain-average.
            let period = 3840.0;
            match circular_mean(&xs, period) {
                Ok(mean) => {
                    let anchor = phasor_direction(&xs, period);
                    let avg = xs.iter().map(|&x| unwrap_near(x, anchor, period)).sum::<f64>()
                        / xs.len() as f64;
                    prop_assert!(circular_distance(mean, avg.rem_euclid(period), period) < 1e-6,
                        "mean {mean} vs oracle {avg}");
                }
                // Near-degenerate sets (phasor sum ~ 0) legitimately error.
                Err(TrackError::UndefinedCircularMean) => {}
                Err(e) => prop_assert!(false, "unexpected error {e:?}"),
            }
        }

        #[test]
        fn circular_mean_is_shift_equivariant(
            xs in prop::collection::vec(0.0..3840.0f64, 1..20),
            shift in 1u32..3840,
        ) {
            let period = 3840.0;
            let shifted: Vec<f64> = xs.iter().map(|x| (x + f64::from(shift)) % period).collect();
            match (circular_mean(&xs, period), circular_mean(&shifted, period)) {
                (Ok(a), Ok(b)) => prop_assert!(
                    circular_distance(b, a + f64::from(shift), period) < 1e-6,
                    "shift equivariance: {a} -> {b}"
                ),
                // A set can sit exactly on the degeneracy edge under one
                // rotation and not the other; only exact agreement matters.
                _ => {}
            }
        }

        #[test]
        fn circular_mean_equals_arithmetic_when_clustered(
            base in 0.0..3840.0f64,
            offsets in prop::collection::vec(0.0..1900.0f64, 1..20),
        ) {
            // All samples within half the period of each other.
            let period = 3840.0;
            let xs: Vec<f64> = offsets.iter().map(|o| (base + o) % period).collect();
            let unwrapped_mean = (base + offsets.iter().sum::<f64>() / offsets.len() as f64) % period;
            let mean = circular_mean(&xs, period).unwrap();
            prop_assert!(circular_distance(mean, unwrapped_mean, period) < 1e-6,
                "mean {mean} vs arithmetic {unwrapped_mean}");
        }

        #[test]
        fn wrap_signed_is_shortest_signed_arc(delta in -20000.0..20000.0f64) {
            let period = 3840.0;
            let wrapped = wrap_signed(delta, period);
            prop_assert!(wrapped > -period / 2.0 && wrapped <= period / 2.0);
            // Same residue class.
            let diff = (delta - wrapped).rem_euclid(period);
            prop_assert!(diff < 1e-6 || (period - diff) < 1e-6);
        }

        #[test]
        fn mean_shift_is_shift_invariant(
            shift in 0u32..3840,
            seeds in prop::collection::vec((0u32..6, -30.0..30.0f64, -30.0..30.0f64), 4..40),
        ) {
            // Synthetic well-separated clusters: anchor centers 600 px apart
            // (6 anchors on a 3840 circle), jitter max 30 px << bandwidth.
            let dims = dims_4k();
            let anchors = [100.0, 740.0, 1380.0, 2020.0, 2660.0, 3300.0];
            let pts: Vec<(f64, f64)> = seeds
                .iter()
                .map(|&(a, dx, dy)| ((anchors[a as usize] + dx).rem_euclid(3840.0), 960.0 + dy))
                .collect();
            let labels = mean_shift_cluster(&pts, 100.0, dims);
            // Same anchor -> same label; different anchors -> different label.
            for (i, &(ai, ..)) in seeds.iter().enumerate() {
                for (j, &(aj, ..)) in seeds.iter().enumerate() {
                    prop_assert_eq!(labels[i] == labels[j], ai == aj,
                        "points {} and {}", i, j);
                }
            }
            // Rotating every point by an integer shift leaves labels alone.
            let shifted: Vec<(f64, f64)> =
                pts.iter().map(|&(x, y)| ((x + f64::from(shift)).rem_euclid(3840.0), y)).collect();
            let labels2 = mean_shift_cluster(&shifted, 100.0, dims);
            prop_assert_eq!(labels, labels2);
        }

        #[test]
        fn interpolation_covers_all_frames(
            frames in prop::collection::btree_set(0usize..12, 1..12),
            n_extra in 0usize..5,
        ) {
            let dims = dims_4k();
            let n_frames = 12 + n_extra;
            let dets: Vec<Detection> =
                frames.iter().map(|&f| det(f, 500.0 + f as f64, 900.0, 100.0)).collect();
            let labels = vec![0; dets.len()];
            let ts = TrackSet::from_assignments(&dets, &labels, n_frames, dims);
            let filled = interpolate(&ts).unwrap();
            let class = &filled.classes[0];
            prop_assert_eq!(class.members.len(), n_frames);
            for f in 0..n_frames {
                let m = class.member_in_frame(f).unwrap();
                prop_assert_eq!(m.interpolated, !frames.contains(&f));
                // Interpolated boxes stay within the image rows.
                prop_assert!(m.bbox.y >= 0.0 && m.bbox.y + m.bbox.h <= 1920.0);
            }
        }
    }
}
