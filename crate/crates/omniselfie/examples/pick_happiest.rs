//! Score a sequence frame by frame and see why the variance penalty in
//! `H = M - c V` matters: the group photo moment is when everyone smiles,
//! not when one person grins while another frowns.
//!
//! ```bash
//! cargo run --example pick_happiest
//! ```

use std::error::Error;

use omniselfie::scoring::{frame_happiness, select_best_frame, FrameScore};

fn main() -> Result<(), Box<dyn Error>> {
    // Per-frame happy scores for three people. Frame 2 has the highest
    // average, but one person is clearly unhappy there; frame 4 is slightly
    // lower on average and far more even.
    let frames: &[&[f64]] = &[
        &[0.30, 0.35, 0.25],
        &[0.55, 0.60, 0.50],
        &[0.95, 0.90, 0.20], // highest mean, one frown
        &[0.70, 0.75, 0.65],
        &[0.72, 0.70, 0.71], // even smiles
        &[0.45, 0.50, 0.40],
    ];

    for c in [0.0, 1.0, 2.0] {
        let scores: Vec<FrameScore> = frames
            .iter()
            .enumerate()
            .map(|(frame_index, happy)| {
                let (mean, variance, happiness) = frame_happiness(happy, c)?;
                Ok(FrameScore { frame_index, mean, variance, happiness })
            })
            .collect::<Result<_, omniselfie::scoring::ScoringError>>()?;

        let selected = select_best_frame(&scores)?;
        println!("variance weight c = {c}:");
        for s in &scores {
            let marker = if s.frame_index == selected { "  <- selected" } else { "" };
            println!(
                "  frame {}: M={:.4} V={:.4} H={:.4}{marker}",
                s.frame_index, s.mean, s.variance, s.happiness
            );
        }
        println!();
    }

    println!("with c = 0 the lopsided frame 2 wins on raw average;");
    println!("with the default c = 1 the even smiles of frame 4 win.");
    Ok(())
}
