//! Lane-tracking post-processor for lane-detection probability maps.
//!
//! Segmentation-style lane detectors emit per-frame probability maps; this
//! crate stabilizes them into accurate ego-lane estimates:
//!
//! * [`probmap`] — raster loading, validation, and sub-pixel sampling
//! * [`extract`] — per-row candidate points with normal refinement
//! * [`variance`] — positional sigma from the confidence profile
//! * [`fit`] — weighted least squares with `c / sigma^2` weights and Hesse
//!   normal form
//! * [`track`] — cross-frame matching, EWMA lane weights, parameter
//!   merging, and active-lane selection
//! * [`eval`] — thick-polyline IoU accuracy metric
//! * [`synth`] — deterministic synthetic scenarios with ground truth
//!
//! The `book/` directory in the repository walks through the concepts with
//! runnable snippets; the doc-tests here mirror those snippets.

pub mod config;
pub mod error;
pub mod eval;
pub mod extract;
pub mod fit;
pub mod pipeline;
pub mod probmap;
pub mod synth;
pub mod track;
pub mod variance;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use eval::{accuracy, lane_iou, rasterize, AccuracyReport, LanePolyline};
pub use extract::{extract_points, ExtractionConfig, RawLanePoints};
pub use fit::{fit_weighted, to_hesse, DetectedLane, LanePoint, LineFit};
pub use pipeline::detect_frame;
pub use probmap::ProbabilityMap;
pub use synth::{Scenario, ScriptedLane};
pub use track::{
    frame_weight, line_distance, merge_params, merge_zeta, update_weight, FrameResult, TrackedLane,
    Tracker, TrackerConfig,
};
pub use variance::{estimate_point_sigma, lane_sigma, VarianceConfig};
