//! Group selfies from omni-directional video.
//!
//! A spherical camera dropped in the middle of a group records everyone at
//! once — but as a warped equirectangular panorama, at no particular
//! moment. This crate turns such a frame sequence into a single flat photo:
//! it tracks the detected faces across frames (wrap-aware mean shift on box
//! centers), discards spurious and oversized detections, fills detection
//! gaps, picks the frame where the group is collectively happiest
//! (`H = M - c V`, mean minus weighted variance of per-face happy scores),
//! and reprojects that frame onto a tangent plane sized to contain every
//! participant.
//!
//! ## Modules
//!
//! - [`geometry`] — sphere/panorama mappings and the tangent-plane camera
//! - [`tracks`] — circular statistics, mean-shift clustering, class cleanup
//! - [`scoring`] — expression distributions and happiest-frame selection
//! - [`framing`] — extreme-face search and camera aiming/sizing
//! - [`renderer`] — perspective rendering with bilinear resampling
//! - [`io`] — frames, sidecar files, configs, reports
//! - [`adapter`] — line-delimited JSON protocol to external detector models
//! - [`pipeline`] — the staged end-to-end pipeline
//! - [`synth`] — synthetic scenes with exact ground truth
//!
//! ## Examples
//!
//! Each major capability has a runnable example:
//!
//! - **`reproject`** - point a virtual camera into a panorama and save the view
//! - **`simulate_scene`** - generate a synthetic sequence with ground truth
//! - **`clean_tracks`** - cluster noisy detections and watch classes survive or die
//! - **`pick_happiest`** - score a sequence and explain the selected frame
//! - **`full_pipeline`** - frames in, selfie and report out
//! - **`baseline_vs_proposed`** - compare against count-mode frame selection
//!
//! ```bash
//! cargo run --example reproject
//! cargo run --example full_pipeline
//! ```
//!
//! The `omniselfie` binary exposes the same pipeline as subcommands
//! (`run`, `detect`, `score`, `select`, `render`, `simulate`,
//! `compare-baseline`), exchanging JSON stage files so steps can run
//! separately.

pub mod adapter;
pub mod framing;
pub mod geometry;
pub mod io;
pub mod pipeline;
pub mod renderer;
pub mod scoring;
pub mod synth;
pub mod tracks;

pub use geometry::{EquirectDims, PlaneCamera, SphereAngles};
pub use io::{PipelineConfig, Report};
pub use pipeline::{run_baseline, run_pipeline, FaceSource, PipelineError, RunOutput};
pub use renderer::{render_perspective, EquirectFrame, PerspectiveImage};
pub use tracks::{BBox, Detection, TrackSet};
