//! Choosing the virtual camera that frames every participant.
//!
//! The participants' box centers live on the horizontal circle of the
//! panorama, so "leftmost" and "rightmost" are defined relative to the group
//! itself: the leftmost face is the one from which every other face is
//! reachable going right (increasing x, wrapping) within the smallest arc.
//! The view direction is the middle of that arc (and of the vertical span);
//! the plane extents grow to cover every box corner plus a margin.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    self, EquirectDims, GeometryError, PlaneCamera, SphereAngles,
};
use crate::tracks::BBox;

/// Errors from camera framing.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FramingError {
    /// Framing needs at least one face.
    #[error("no faces to frame")]
    NoFaces,
    /// The view center landed on a pole; the image cannot be oriented.
    #[error("view direction at a pole; image up direction undefined")]
    DegenerateUp,
    /// Some face corner is on or behind the tangent plane: the group spans
    /// too wide an arc to fit one perspective view.
    #[error("face spans more than a hemisphere; cannot frame in one view")]
    FramingImpossible,
    /// Underlying geometry failure (e.g. a box outside the image rows).
    #[error(transparent)]
    Geometry(GeometryError),
}

impl From<GeometryError> for FramingError {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::DegenerateUp(_) => FramingError::DegenerateUp,
            GeometryError::BehindPlane(_) => FramingError::FramingImpossible,
            other => FramingError::Geometry(other),
        }
    }
}

/// The framing decision for the selected frame.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Framing {
    /// Indices (into the framed face list) of the extreme faces.
    pub left: usize,
    pub right: usize,
    pub top: usize,
    pub bottom: usize,
    /// Width in pixels of the circular arc from the leftmost to the
    /// rightmost face center, going right.
    pub horizontal_span: f64,
}

/// Finds the leftmost and rightmost face centers on the circle.
///
/// For each face `f`, let `D(f)` be the largest rightward (wrapping)
/// distance from `f` to any face. The leftmost face minimizes `D`; the
/// rightmost face is the one attaining that distance. Ties on `D` resolve
/// to the lower center x, then the lower index; ties for the attaining face
/// resolve to the first (lowest index). Returns `(left, right, span)`.
pub fn leftmost_rightmost(centers_x: &[f64], width: f64) -> Result<(usize, usize, f64), FramingError> {
    if centers_x.is_empty() {
        return Err(FramingError::NoFaces);
    }
    if centers_x.len() == 1 {
        return Ok((0, 0, 0.0));
    }
    // Sweep the circle once: sort the centers and find the largest gap
    // between circular neighbors. The face right after that gap is the
    // leftmost (D(f) = width minus the gap preceding f, so the largest gap
    // minimizes D). Ties between equal gaps resolve to the successor with
    // the lowest (x, index), i.e. the earliest rank in the sorted order.
    let mut order: Vec<usize> = (0..centers_x.len()).collect();
    order.sort_by(|&i, &j| {
        centers_x[i].partial_cmp(&centers_x[j]).expect("finite centers").then(i.cmp(&j))
    });
    let n = order.len();
    let mut best: Option<(f64, usize)> = None; // (gap, successor rank)
    for pos in 0..n {
        let cur = centers_x[order[pos]];
        let next_rank = (pos + 1) % n;
        let mut gap = centers_x[order[next_rank]] - cur;
        if pos + 1 == n {
            gap += width;
        }
        match best {
            Some((g, rank)) if gap < g || (gap == g && next_rank >= rank) => {}
            _ => best = Some((gap, next_rank)),
        }
    }
    let (_, left_rank) = best.expect("nonempty input");
    let left = order[left_rank];
    // The rightmost face attains D(left); resolve it (and the span) by the
    // defining scan so ties land on the first index.
    let dist = |g: usize| (centers_x[g] - centers_x[left]).rem_euclid(width);
    let span = (0..n).map(&dist).fold(0.0, f64::max);
    let right = (0..n).find(|&g| dist(g) == span).expect("the max is attained");
    Ok((left, right, span))
}

/// Indices of the highest (smallest y) and lowest (largest y) face centers.
/// Ties go to the lower index.
pub fn vertical_extremes(centers_y: &[f64]) -> Result<(usize, usize), FramingError> {
    if centers_y.is_empty() {
        return Err(FramingError::NoFaces);
    }
    let mut top = 0;
    let mut bottom = 0;
    for (i, &y) in centers_y.iter().enumerate() {
        if y < centers_y[top] {
            top = i;
        }
        if y > centers_y[bottom] {
            bottom = i;
        }
    }
    Ok((top, bottom))
}

/// The view direction through the middle of the group: horizontally the
/// midpoint of the left-to-right arc (wrap-aware), vertically the midpoint
/// of the top/bottom centers. Errors if that direction is a pole.
pub fn view_center(
    left_x: f64,
    right_x: f64,
    top_y: f64,
    bottom_y: f64,
    dims: EquirectDims,
) -> Result<SphereAngles, FramingError> {
    let width = dims.width_f();
    let span = (right_x - left_x).rem_euclid(width);
    let center_x = (left_x + span / 2.0).rem_euclid(width);
    let center_y = (top_y + bottom_y) / 2.0;
    let angles = geometry::angles_from_pixel(center_x, center_y, dims)?;
    if angles.theta() <= 0.0 || angles.theta() >= std::f64::consts::PI {
        return Err(FramingError::DegenerateUp);
    }
    Ok(angles)
}

/// Plane extents that cover every corner of every box, seen from
/// `(alpha, beta)`: `l = 2 max|s| + margin`, `m = 2 max|t| + margin`.
/// Errors if any corner is on or behind the plane horizon.
pub fn view_extent(
    bboxes: &[BBox],
    alpha: f64,
    beta: f64,
    dims: EquirectDims,
    margin: f64,
) -> Result<(f64, f64), FramingError> {
    if bboxes.is_empty() {
        return Err(FramingError::NoFaces);
    }
    let basis = geometry::plane_basis(alpha, beta)?;
    let mut s_max: f64 = 0.0;
    let mut t_max: f64 = 0.0;
    for bbox in bboxes {
        for (u, v) in bbox.corners() {
            let angles = geometry::angles_from_pixel(u, v, dims)?;
            let d = geometry::direction_from_angles(angles);
            let (s, t) = geometry::plane_coords_from_direction(d, &basis)?;
            s_max = s_max.max(s.abs());
            t_max = t_max.max(t.abs());
        }
    }
    Ok((2.0 * s_max + margin, 2.0 * t_max + margin))
}

/// Full framing for one frame's face boxes: locate the extreme faces, aim
/// the camera between them, and size the plane to cover every box with the
/// given margin.
pub fn frame_camera(
    bboxes: &[BBox],
    dims: EquirectDims,
    margin: f64,
) -> Result<(PlaneCamera, Framing), FramingError> {
    if bboxes.is_empty() {
        return Err(FramingError::NoFaces);
    }
    let width = dims.width_f();
    let centers_x: Vec<f64> = bboxes.iter().map(|b| b.center_x(width)).collect();
    let centers_y: Vec<f64> = bboxes.iter().map(|b| b.center_y()).collect();
    let (left, right, horizontal_span) = leftmost_rightmost(&centers_x, width)?;
    let (top, bottom) = vertical_extremes(&centers_y)?;
    let angles = view_center(centers_x[left], centers_x[right], centers_y[top], centers_y[bottom], dims)?;
    let (l, m) = view_extent(bboxes, angles.phi(), angles.theta(), dims, margin)?;
    let camera = PlaneCamera::new(angles.phi(), angles.theta(), l, m)?;
    Ok((camera, Framing { left, right, top, bottom, horizontal_span }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn dims_4k() -> EquirectDims {
        EquirectDims::new(3840, 1920).unwrap()
    }

    /// Literal oracle for the leftmost face: minimize over f the largest
    /// rightward wrap distance D(f) = max_g (x_g - x_f mod width), with the
    /// documented tie-breaks, by brute force.
    fn leftmost_rightmost_oracle(xs: &[f64], width: f64) -> (usize, usize, f64) {
        let d = |f: usize| -> f64 {
            xs.iter().map(|&xg| (xg - xs[f]).rem_euclid(width)).fold(0.0, f64::max)
        };
        let mut left = 0;
        for f in 1..xs.len() {
            let (df, dl) = (d(f), d(left));
            if df < dl || (df == dl && (xs[f] < xs[left])) {
                left = f;
            }
        }
        let span = d(left);
        let right = (0..xs.len())
            .find(|&g| (xs[g] - xs[left]).rem_euclid(width) == span)
            .expect("some face attains the max");
        (left, right, span)
    }

    #[test]
    fn seam_straddling_group() {
        // Faces at 100, 200 and 3700 on a 3840 circle: the group is really
        // 3700..200, so C is leftmost, B rightmost, span 340.
        let xs = [100.0, 200.0, 3700.0];
        let (left, right, span) = leftmost_rightmost(&xs, 3840.0).unwrap();
        assert_eq!(left, 2);
        assert_eq!(right, 1);
        assert!((span - 340.0).abs() < 1e-9);
    }

    #[test]
    fn single_face_group() {
        let (left, right, span) = leftmost_rightmost(&[1234.0], 3840.0).unwrap();
        assert_eq!((left, right), (0, 0));
        assert_eq!(span, 0.0);
        assert!(leftmost_rightmost(&[], 3840.0).is_err());
    }

    #[test]
    fn coincident_faces_tie_break() {
        // All at the same x: D(f) = 0 for every face; lowest index wins both.
        let (left, right, span) = leftmost_rightmost(&[500.0, 500.0, 500.0], 3840.0).unwrap();
        assert_eq!(left, 0);
        assert_eq!(right, 0);
        assert_eq!(span, 0.0);
    }

    #[test]
    fn vertical_extremes_basic() {
        let (top, bottom) = vertical_extremes(&[900.0, 850.0, 1000.0, 850.0]).unwrap();
        assert_eq!(top, 1, "first of the tied minima");
        assert_eq!(bottom, 2);
    }

    #[test]
    fn view_center_wraps_midpoint() {
        // Left at 3700, right at 200: span 340, center 3700 + 170 = 30.
        let dims = dims_4k();
        let angles = view_center(3700.0, 200.0, 940.0, 980.0, dims).unwrap();
        let (u, v) = crate::geometry::pixel_from_angles(angles, dims);
        assert!((u - 30.0).abs() < 1e-6, "u = {u}");
        assert!((v - 960.0).abs() < 1e-6, "v = {v}");
    }

    #[test]
    fn view_center_rejects_poles() {
        let dims = dims_4k();
        assert_eq!(view_center(0.0, 0.0, 0.0, 0.0, dims).unwrap_err(), FramingError::DegenerateUp);
    }

    #[test]
    fn view_extent_known_square() {
        // One 200x200 box centered on the view axis at the equator: the
        // corners project symmetrically, so l and m are 2|s| + margin of a
        // corner. Corner azimuth offset 100 px = 100/3840 * 2pi.
        let dims = dims_4k();
        let bbox = BBox::from_center(1920.0, 960.0, 200.0, 200.0, 3840.0);
        let alpha = PI; // x = 1920
        let beta = PI / 2.0;
        let (l, m) = view_extent(&[bbox], alpha, beta, dims, 0.3).unwrap();
        // Analytic corner projection: direction at (phi, theta) with
        // dphi = +-100 px, dtheta = +-100 px from the view axis.
        let dphi = 100.0 / 3840.0 * 2.0 * PI;
        let dtheta = 100.0 / 1920.0 * PI;
        let basis = crate::geometry::plane_basis(alpha, beta).unwrap();
        let corner = crate::geometry::direction_from_angles(
            SphereAngles::new(alpha + dphi, beta - dtheta).unwrap(),
        );
        let (s, t) = crate::geometry::plane_coords_from_direction(corner, &basis).unwrap();
        assert!((l - (2.0 * s.abs() + 0.3)).abs() < 1e-9);
        assert!((m - (2.0 * t.abs() + 0.3)).abs() < 1e-9);
        assert!(l > 0.3 && m > 0.3);
    }

    #[test]
    fn view_extent_rejects_hemisphere_overflow() {
        // A face 180 degrees from the view axis cannot be projected.
        let dims = dims_4k();
        let bbox = BBox::from_center(0.0, 960.0, 100.0, 100.0, 3840.0);
        let err = view_extent(&[bbox], PI, PI / 2.0, dims, 0.3).unwrap_err();
        assert_eq!(err, FramingError::FramingImpossible);
    }

    #[test]
    fn frame_camera_covers_all_corners() {
        // Three faces around the front of the panorama.
        let dims = dims_4k();
        let boxes = vec![
            BBox::from_center(1500.0, 900.0, 150.0, 150.0, 3840.0),
            BBox::from_center(1920.0, 960.0, 180.0, 180.0, 3840.0),
            BBox::from_center(2300.0, 1010.0, 140.0, 140.0, 3840.0),
        ];
        let (camera, framing) = frame_camera(&boxes, dims, 0.3).unwrap();
        assert_eq!(framing.left, 0);
        assert_eq!(framing.right, 2);
        assert_eq!(framing.top, 0);
        assert_eq!(framing.bottom, 2);
        assert!((framing.horizontal_span - 800.0).abs() < 1e-9);
        // Every corner projects inside the final extents with margin room.
        let basis = camera.basis();
        for b in &boxes {
            for (u, v) in b.corners() {
                let d = crate::geometry::direction_from_angles(
                    crate::geometry::angles_from_pixel(u, v, dims).unwrap(),
                );
                let (s, t) = crate::geometry::plane_coords_from_direction(d, &basis).unwrap();
                assert!(2.0 * s.abs() <= camera.l() - 0.3 + 1e-12);
                assert!(2.0 * t.abs() <= camera.m() - 0.3 + 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn leftmost_rightmost_matches_quadratic_oracle(
            xs in prop::collection::vec(0.0..3840.0f64, 1..16),
        ) {
            let (left, right, span) = leftmost_rightmost(&xs, 3840.0).unwrap();
            let (ol, or, ospan) = leftmost_rightmost_oracle(&xs, 3840.0);
            prop_assert_eq!(left, ol, "xs = {:?}", xs);
            prop_assert_eq!(right, or, "xs = {:?}", xs);
            prop_assert!((span - ospan).abs() < 1e-9);
        }

        #[test]
        fn span_is_rotation_invariant(
            xs in prop::collection::vec(0.0..3840.0f64, 2..12),
            shift in 1u32..3840,
        ) {
            let width = 3840.0;
            let shifted: Vec<f64> =
                xs.iter().map(|&x| (x + f64::from(shift)) % width).collect();
            let (.., span_a) = leftmost_rightmost(&xs, width).unwrap();
            let (.., span_b) = leftmost_rightmost(&shifted, width).unwrap();
            // Integer rotation cannot change who is extreme (up to fp noise
            // in the subtractions feeding the gaps).
            prop_assert!((span_a - span_b).abs() < 1e-6);
        }

        #[test]
        fn view_center_midpoint_property(
            left in 0.0..3840.0f64,
            extra in 0.0..1900.0f64,
            top in 300.0..900.0f64,
            dy in 0.0..600.0f64,
        ) {
            // The center is equidistant (along the span) from both ends.
            let dims = dims_4k();
            let width = 3840.0;
            let right = (left + extra) % width;
            let bottom = top + dy;
            let angles = view_center(left, right, top, bottom, dims).unwrap();
            let (u, v) = crate::geometry::pixel_from_angles(angles, dims);
            let forward = (u - left).rem_euclid(width);
            let back = (right - u).rem_euclid(width);
            prop_assert!((forward - back).abs() < 1e-6, "forward {forward} back {back}");
            prop_assert!((v - (top + bottom) / 2.0).abs() < 1e-9);
        }
    }
}
