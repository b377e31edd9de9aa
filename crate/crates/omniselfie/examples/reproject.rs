//! Point a virtual camera into an equirectangular panorama and save the
//! flat perspective view — including across the horizontal wrap seam.
//!
//! ```bash
//! cargo run --example reproject
//! ```

use std::error::Error;
use std::f64::consts::PI;

use omniselfie::geometry::PlaneCamera;
use omniselfie::renderer::{render_perspective, EquirectFrame};

fn main() -> Result<(), Box<dyn Error>> {
    // A panorama with structure: a sky-to-ground vertical gradient and a
    // column of meridian stripes so the reprojection is easy to eyeball.
    let (w, h) = (2048u32, 1024u32);
    let mut img = image::RgbImage::new(w, h);
    for (x, y, p) in img.enumerate_pixels_mut() {
        let vertical = (f64::from(y) / f64::from(h) * 255.0) as u8;
        let stripe = if (x / 64) % 2 == 0 { 40 } else { 0 };
        *p = image::Rgb([vertical / 2 + stripe, vertical, 255 - vertical]);
    }
    let frame = EquirectFrame::new(img)?;

    let out_dir = std::env::temp_dir().join("omniselfie-reproject");
    std::fs::create_dir_all(&out_dir)?;

    // A camera looking at the middle of the panorama...
    let ahead = PlaneCamera::new(PI, PI / 2.0, 1.2, 0.8)?;
    let view = render_perspective(&frame, &ahead, 800);
    let ahead_path = out_dir.join("ahead.png");
    view.image.save(&ahead_path)?;
    println!(
        "ahead:     {}x{} view of (alpha={:.2}, beta={:.2}) -> {}",
        view.width(),
        view.height(),
        ahead.alpha(),
        ahead.beta(),
        ahead_path.display()
    );

    // ...and one aimed straight at the wrap seam (alpha = 0): the stripes
    // continue smoothly because sampling wraps around the panorama edge.
    let seam = PlaneCamera::new(0.0, PI / 2.0, 1.2, 0.8)?;
    let view = render_perspective(&frame, &seam, 800);
    let seam_path = out_dir.join("across_seam.png");
    view.image.save(&seam_path)?;
    println!(
        "seam:      {}x{} view of (alpha={:.2}, beta={:.2}) -> {}",
        view.width(),
        view.height(),
        seam.alpha(),
        seam.beta(),
        seam_path.display()
    );

    // Tilted up: a wider vertical extent captures more sky.
    let tilted = PlaneCamera::new(PI, PI / 2.0 - 0.4, 1.2, 1.4)?;
    let view = render_perspective(&frame, &tilted, 800);
    let tilted_path = out_dir.join("tilted_up.png");
    view.image.save(&tilted_path)?;
    println!(
        "tilted up: {}x{} view of (alpha={:.2}, beta={:.2}) -> {}",
        view.width(),
        view.height(),
        tilted.alpha(),
        tilted.beta(),
        tilted_path.display()
    );

    Ok(())
}
