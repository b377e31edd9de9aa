//! Perspective rendering from an equirectangular frame.
//!
//! Inverse mapping: every output pixel is placed on the tangent plane,
//! cast back through the sphere to panorama coordinates, and bilinearly
//! sampled there. Output rows are independent and rendered in parallel.

use image::RgbImage;
use rayon::prelude::*;

use crate::geometry::{
    angles_from_direction, direction_from_plane_coords, pixel_from_angles, EquirectDims,
    GeometryError, PlaneCamera,
};

/// An equirectangular (2:1) RGB frame.
#[derive(Debug, Clone, PartialEq)]
pub struct EquirectFrame {
    dims: EquirectDims,
    image: RgbImage,
}

impl EquirectFrame {
    /// Wraps an image, validating the 2:1 aspect.
    pub fn new(image: RgbImage) -> Result<Self, GeometryError> {
        let dims = EquirectDims::new(image.width(), image.height())?;
        Ok(Self { dims, image })
    }

    pub fn dims(&self) -> EquirectDims {
        self.dims
    }

    pub fn image(&self) -> &RgbImage {
        &self.image
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        self.image.get_pixel(x, y).0
    }
}

/// A rendered perspective view.
#[derive(Debug, Clone, PartialEq)]
pub struct PerspectiveImage {
    pub image: RgbImage,
}

impl PerspectiveImage {
    pub fn width(&self) -> u32 {
        self.image.width()
    }

    pub fn height(&self) -> u32 {
        self.image.height()
    }
}

/// Output height for a given width and plane extents: `round(w l_m / l_l)`,
/// preserving the plane's aspect ratio, at least one row.
pub fn output_height(out_width: u32, l: f64, m: f64) -> u32 {
    (f64::from(out_width) * m / l).round().max(1.0) as u32
}

/// Plane coordinates of output pixel `(p, q)`: pixel centers spread evenly
/// over the plane rectangle, `s` growing right and `t` growing up:
///
/// ```text
/// s = l (p + 0.5) / w_p - l / 2
/// t = m / 2 - m (q + 0.5) / h_p
/// ```
pub fn pixel_to_plane(p: f64, q: f64, out_w: u32, out_h: u32, l: f64, m: f64) -> (f64, f64) {
    let s = l * (p + 0.5) / f64::from(out_w) - l / 2.0;
    let t = m / 2.0 - m * (q + 0.5) / f64::from(out_h);
    (s, t)
}

/// Inverse of [`pixel_to_plane`] (continuous output-pixel coordinates).
pub fn plane_to_pixel(s: f64, t: f64, out_w: u32, out_h: u32, l: f64, m: f64) -> (f64, f64) {
    let p = (s + l / 2.0) / l * f64::from(out_w) - 0.5;
    let q = (m / 2.0 - t) / m * f64::from(out_h) - 0.5;
    (p, q)
}

/// Bilinear sample at continuous panorama coordinates, treating integer
/// coordinates as pixel centers. `u` wraps around the vertical seam; `v`
/// clamps to the first/last row. Channels round to the nearest `u8`.
pub fn sample_bilinear(frame: &EquirectFrame, u: f64, v: f64) -> [u8; 3] {
    let w = frame.dims().width();
    let h = frame.dims().height();
    let wf = f64::from(w);

    let v = v.clamp(0.0, f64::from(h - 1));
    let v0 = v.floor();
    let fv = v - v0;
    let y0 = v0 as u32;
    let y1 = (y0 + 1).min(h - 1);

    let mut u = u.rem_euclid(wf);
    if u >= wf {
        u = 0.0;
    }
    let u0 = u.floor();
    let fu = u - u0;
    let x0 = (u0 as u32) % w;
    let x1 = (x0 + 1) % w;

    let c00 = frame.pixel(x0, y0);
    let c01 = frame.pixel(x1, y0);
    let c10 = frame.pixel(x0, y1);
    let c11 = frame.pixel(x1, y1);
    let mut out = [0u8; 3];
    for ch in 0..3 {
        let top = (1.0 - fu) * f64::from(c00[ch]) + fu * f64::from(c01[ch]);
        let bottom = (1.0 - fu) * f64::from(c10[ch]) + fu * f64::from(c11[ch]);
        out[ch] = ((1.0 - fv) * top + fv * bottom).round() as u8;
    }
    out
}

/// Renders the camera's view of the frame at the given output width; the
/// height follows the plane aspect via [`output_height`]. Each output pixel
/// goes plane point -> sphere direction -> panorama position -> bilinear
/// sample.
pub fn render_perspective(
    frame: &EquirectFrame,
    camera: &PlaneCamera,
    out_width: u32,
) -> PerspectiveImage {
    assert!(out_width > 0, "output width must be positive");
    let out_h = output_height(out_width, camera.l(), camera.m());
    let basis = camera.basis();
    let dims = frame.dims();
    let mut image = RgbImage::new(out_width, out_h);
    let row_bytes = out_width as usize * 3;
    image
        .par_chunks_mut(row_bytes)
        .enumerate()
        .for_each(|(q, row)| {
            for p in 0..out_width as usize {
                let (s, t) =
                    pixel_to_plane(p as f64, q as f64, out_width, out_h, camera.l(), camera.m());
                let d = direction_from_plane_coords(s, t, &basis);
                let angles = angles_from_direction(d);
                let (u, v) = pixel_from_angles(angles, dims);
                let rgb = sample_bilinear(frame, u, v);
                row[p * 3..p * 3 + 3].copy_from_slice(&rgb);
            }
        });
    PerspectiveImage { image }
}
