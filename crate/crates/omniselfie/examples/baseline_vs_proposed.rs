//! Compare the tracked pipeline against the count-mode baseline on a scene
//! with a distant bystander: the baseline must widen its framing to include
//! someone who isn't part of the group, the proposed pipeline filters them
//! out by size and keeps the group tight.
//!
//! ```bash
//! cargo run --example baseline_vs_proposed
//! ```

use std::error::Error;

use omniselfie::io::{FrameSequence, PipelineConfig};
use omniselfie::pipeline::{run_baseline_with, run_pipeline_with};
use omniselfie::synth::{build_scene, generate_scene, SceneParams};

fn main() -> Result<(), Box<dyn Error>> {
    let params = SceneParams {
        n_frames: 12,
        n_faces: 3,
        distant_distractor: true,
        peak_frame: 6,
        seed: 17,
        ..SceneParams::default()
    };
    let spec = build_scene(&params)?;
    let bystander = spec.distractors.last().unwrap();
    println!(
        "scene: {} faces plus a persistent bystander ({:.0}px disc, every frame)",
        params.n_faces,
        2.0 * bystander.radius_px
    );

    let (frames, truth) = generate_scene(&spec)?;
    let sequence = FrameSequence {
        frames,
        paths: (0..params.n_frames).map(|i| format!("frame_{i:04}.png").into()).collect(),
        dims: params.dims,
    };
    let config = PipelineConfig { bandwidth: 50.0, out_width: 960, ..PipelineConfig::default() };

    let proposed = run_pipeline_with(&sequence, &truth.detections, &truth.expressions, &config)?;
    let baseline = run_baseline_with(&sequence, &truth.detections, &truth.expressions, &config)?;

    println!("\nproposed pipeline:");
    println!("  selected frame {}", proposed.report.selected_frame);
    println!("  {} classes survive (bystander filtered by size)", proposed.report.classes.len());
    let p = &proposed.report.camera;
    println!("  plane extents: l = {:.3}, m = {:.3}", p.l, p.m);

    println!("\nbaseline (count-mode frames, raw detections):");
    println!(
        "  selected frame {} (mode count {}, {} candidate frames)",
        baseline.report.selected_frame,
        baseline.report.mode_count,
        baseline.report.candidate_frames.len()
    );
    let b = &baseline.report.camera;
    println!("  plane extents: l = {:.3}, m = {:.3}", b.l, b.m);

    let l_ratio = b.l / p.l;
    let m_ratio = b.m / p.m;
    println!("\nthe baseline frames {l_ratio:.2}x wider and {m_ratio:.2}x taller,");
    println!("squeezing the actual group into a corner of the selfie.");

    assert!(b.l > p.l && b.m > p.m);
    Ok(())
}
