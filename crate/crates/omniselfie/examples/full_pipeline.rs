//! The whole journey in one process: synthesize a scene (with detector
//! noise), clean the tracks, score and select the happiest frame, aim the
//! camera, and write the selfie plus its report.
//!
//! ```bash
//! cargo run --example full_pipeline
//! ```

use std::error::Error;

use omniselfie::io::{self, FrameSequence, PipelineConfig};
use omniselfie::pipeline::run_pipeline_with;
use omniselfie::synth::{build_scene, generate_scene, stub_detector, DetectorNoise, SceneParams};

fn main() -> Result<(), Box<dyn Error>> {
    let params = SceneParams {
        n_frames: 14,
        n_faces: 3,
        sporadic_distractors: 1,
        peak_frame: 9,
        seed: 5,
        ..SceneParams::default()
    };
    let spec = build_scene(&params)?;
    let (frames, truth) = generate_scene(&spec)?;
    println!("scene: {} frames, {} faces, happiness peaking at frame {}", params.n_frames, params.n_faces, params.peak_frame);

    // Corrupt the ground truth the way a real detector would: some misses,
    // some jitter. Interpolation will fill the gaps.
    let noise = DetectorNoise { miss_prob: 0.15, spurious_per_frame: 0, jitter_px: 2.0, seed: 5 };
    let detections = stub_detector(&truth.detections, params.dims, &noise);
    let dropped: usize = truth.detections.iter().map(Vec::len).sum::<usize>()
        - detections.iter().map(Vec::len).sum::<usize>();
    println!("detector noise dropped {dropped} detections");

    let sequence = FrameSequence {
        frames,
        paths: (0..params.n_frames).map(|i| format!("frame_{i:04}.png").into()).collect(),
        dims: params.dims,
    };
    let config = PipelineConfig { bandwidth: 50.0, out_width: 960, ..PipelineConfig::default() };

    let result = run_pipeline_with(&sequence, &detections, &truth.expressions, &config)?;

    println!("\nselected frame: {}", result.report.selected_frame);
    println!("per-frame H:");
    for (frame, h) in result.report.per_frame_h.iter().enumerate() {
        let marker = if frame == result.report.selected_frame { "  <- happiest" } else { "" };
        println!("  frame {frame:2}: H = {h:.4}{marker}");
    }
    println!("\nsurviving classes:");
    for class in &result.report.classes {
        println!(
            "  class {}: center ({:.0}, {:.0}), mean box {:.0}x{:.0}, presence {:.2}",
            class.class_id,
            class.mean_center.0,
            class.mean_center.1,
            class.mean_size.0,
            class.mean_size.1,
            class.presence_ratio
        );
    }
    for (class_id, reason) in &result.report.elimination_log {
        println!("  class {class_id} eliminated: {reason}");
    }
    let cam = &result.report.camera;
    println!(
        "\ncamera: alpha={:.3} beta={:.3}, plane {:.3} x {:.3}",
        cam.alpha, cam.beta, cam.l, cam.m
    );

    let out_dir = std::env::temp_dir().join("omniselfie-full-pipeline");
    std::fs::create_dir_all(&out_dir)?;
    let report_path = out_dir.join("report.json");
    let image_path = out_dir.join("selfie.png");
    io::write_json_pretty(&result.report, &report_path)?;
    io::write_png(&result.image.image, &image_path)?;
    println!("\nwrote {}", report_path.display());
    println!("wrote {} ({}x{})", image_path.display(), result.image.width(), result.image.height());
    Ok(())
}
