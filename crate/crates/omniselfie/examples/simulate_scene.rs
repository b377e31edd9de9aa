//! Generate a synthetic panorama sequence with exact ground truth: colored
//! discs for participants (hue encodes happiness), gray discs for
//! bystanders, plus the matching detections/expressions sidecar files.
//!
//! ```bash
//! cargo run --example simulate_scene
//! ```

use std::error::Error;

use omniselfie::io;
use omniselfie::synth::{build_scene, generate_scene, SceneParams};

fn main() -> Result<(), Box<dyn Error>> {
    let params = SceneParams {
        n_frames: 16,
        n_faces: 4,
        sporadic_distractors: 2,
        peak_frame: 10,
        seed: 42,
        ..SceneParams::default()
    };
    let spec = build_scene(&params)?;

    println!("scene: {} frames, {} faces, {} distractors", spec.n_frames, spec.faces.len(), spec.distractors.len());
    for (i, face) in spec.faces.iter().enumerate() {
        println!(
            "  face {i}: phi={:.3} theta={:.3} radius={:.1}px happiness {:.3}..{:.3} (peak at frame {})",
            face.phi,
            face.theta,
            face.radius_px,
            face.happiness.iter().cloned().fold(f64::INFINITY, f64::min),
            face.happiness.iter().cloned().fold(0.0, f64::max),
            params.peak_frame,
        );
    }
    for (j, d) in spec.distractors.iter().enumerate() {
        println!(
            "  distractor {j}: phi={:.3} radius={:.1}px present in {}/{} frames",
            d.phi,
            d.radius_px,
            d.present_in.len(),
            spec.n_frames
        );
    }

    let (frames, truth) = generate_scene(&spec)?;

    let out_dir = std::env::temp_dir().join("omniselfie-simulate");
    let frames_dir = out_dir.join("frames");
    std::fs::create_dir_all(&frames_dir)?;
    for (index, frame) in frames.iter().enumerate() {
        io::write_png(frame.image(), &frames_dir.join(format!("frame_{index:04}.png")))?;
    }
    io::write_detections(&truth.detections, &out_dir.join("detections.json"))?;
    io::write_expressions(&truth.expressions, &out_dir.join("expressions.json"))?;

    let total: usize = truth.detections.iter().map(Vec::len).sum();
    println!("\nwrote {} frames and {total} ground-truth detections to {}", frames.len(), out_dir.display());
    println!("feed them back through the pipeline:");
    println!(
        "  omniselfie run --frames {}/frames --detections {}/detections.json --expressions {}/expressions.json --bandwidth 50 --out <DIR>",
        out_dir.display(),
        out_dir.display(),
        out_dir.display()
    );
    Ok(())
}
