//! Observation channel: synthetic microscopy frames and the swarm detection
//! and tracking pipeline that turns them back into grid positions.
//!
//! Image coordinates: pixel `(x, y)` is column `x`, row `y`, and the frame
//! spans the whole channel. Row `y` maps to grid `y` with no flip.

mod blur;
mod canny;
mod compress;
mod contours;
mod error;
mod image;
mod pgm;
mod pipeline;
mod render;
mod select;
mod synth;
mod threshold;
mod tracker;

pub use blur::{blur, BlurKernel};
pub use canny::{canny, sobel, DEFAULT_CANNY_HIGH, DEFAULT_CANNY_LOW};
pub use compress::compress;
pub use contours::{contours, Contour};
pub use error::{Error, Result};
pub use image::{FrameHi, FrameLo, Image, HI_RES, LO_RES};
pub use pgm::{read_pgm16, read_pgm8, write_pgm16, write_pgm8};
pub use pipeline::{
    detect, read_detections, write_detections, Detection, Pipeline, PipelineConfig, Source, VisionObserver,
    DETECTIONS_HEADER,
};
pub use render::{render_frame, Disk, SceneSpec, BUBBLE_DIAMETER_UM, CONTAMINANT_DIAMETER_UM};
pub use select::{select_contour, select_swarm, SWARM_DIAMETER_UM};
pub use synth::{scatter_disks, synthetic_sequence, SequenceConfig};
pub use threshold::{otsu_threshold, threshold};
pub use tracker::{track, TrackerConfig, TrackerState};
