//! Cluster noisy detections into face classes and watch the cleanup work:
//! rare clusters get eliminated, duplicates collapse, gaps get filled.
//!
//! ```bash
//! cargo run --example clean_tracks
//! ```

use std::error::Error;

use omniselfie::geometry::EquirectDims;
use omniselfie::synth::synthetic_track_scenario;
use omniselfie::tracks::{
    dedup_class_per_frame, eliminate_classes, filter_min_side, interpolate, TrackSet,
};

fn main() -> Result<(), Box<dyn Error>> {
    let dims = EquirectDims::new(3840, 1920)?;
    let bandwidth = 100.0;
    let threshold = 0.25;

    // A randomized but fully structured scenario: steady clusters for the
    // real faces, rare ones for spurious detections.
    let scenario = synthetic_track_scenario(2024, dims, bandwidth, threshold);
    println!(
        "scenario: {} detections over {} frames ({} real faces, {} spurious clusters)\n",
        scenario.detections.len(),
        scenario.n_frames,
        scenario.n_faces,
        scenario.n_spurious
    );

    let kept = filter_min_side(&scenario.detections, 50.0);
    let clustered = TrackSet::cluster_detections(&kept, scenario.n_frames, dims, bandwidth);
    println!("after mean shift: {} classes", clustered.classes.len());
    for class in &clustered.classes {
        let (cx, cy) = class.mean_center(dims)?;
        println!(
            "  class {}: {} members, mean center ({cx:.0}, {cy:.0}), presence {:.2}",
            class.class_id,
            class.members.len(),
            class.presence_ratio(scenario.n_frames)
        );
    }

    let (surviving, eliminated) = eliminate_classes(&clustered, threshold, 250.0)?;
    println!("\nelimination at threshold {threshold}:");
    for (class_id, reason) in &eliminated {
        println!("  class {class_id} eliminated: {reason}");
    }
    println!("  {} classes survive", surviving.classes.len());

    let deduped = dedup_class_per_frame(&surviving)?;
    let filled = interpolate(&deduped)?;
    println!("\nafter dedup + interpolation:");
    for class in &filled.classes {
        let synthetic = class.members.iter().filter(|m| m.interpolated).count();
        println!(
            "  class {}: one box in each of {} frames ({synthetic} interpolated)",
            class.class_id,
            class.members.len()
        );
    }

    assert_eq!(filled.classes.len(), scenario.n_faces, "exactly the real faces survive");
    println!("\nsurviving classes match the scenario's real faces: {}", scenario.n_faces);
    Ok(())
}
