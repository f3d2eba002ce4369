//! Detect-then-track pipeline and the closed-loop observer built on it.

use std::path::Path;

use serde::{Deserialize, Serialize};
use swarm_core::policy::Observer;
use swarm_core::{derive_seed, ChannelConfig, Exec, GridPosition, Plant, SwarmState};

use crate::blur::{blur, BlurKernel};
use crate::canny::{canny, DEFAULT_CANNY_HIGH, DEFAULT_CANNY_LOW};
use crate::compress::compress;
use crate::contours::contours;
use crate::error::{io, Error, Result};
use crate::image::FrameLo;
use crate::render::{render_frame, Disk, SceneSpec};
use crate::select::{select_contour, SWARM_DIAMETER_UM};
use crate::threshold::{otsu_threshold, threshold};
use crate::tracker::{track, TrackerConfig, TrackerState};

pub const DETECTIONS_HEADER: [&str; 5] = ["frame_idx", "x", "y", "confidence", "source"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Detect,
    Track,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub frame_idx: u64,
    /// Grid coordinates.
    pub x: f64,
    pub y: f64,
    pub confidence: f64,
    pub source: Source,
}

impl Detection {
    pub fn position(&self) -> GridPosition {
        GridPosition::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Fixed threshold; `None` computes Otsu's threshold from the first frame.
    pub threshold: Option<u8>,
    pub blur: BlurKernel,
    pub canny_low: f32,
    pub canny_high: f32,
    pub tracker: TrackerConfig,
    pub channel: ChannelConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            threshold: None,
            blur: BlurKernel::Box2,
            canny_low: DEFAULT_CANNY_LOW,
            canny_high: DEFAULT_CANNY_HIGH,
            tracker: TrackerConfig::default(),
            channel: ChannelConfig::default(),
        }
    }
}

fn um_per_px(channel: &ChannelConfig, f: &FrameLo) -> f64 {
    channel.width_um / f.width() as f64
}

fn px_to_grid(channel: &ChannelConfig, f: &FrameLo, p: GridPosition) -> GridPosition {
    let s = um_per_px(channel, f);
    channel.clamp(channel.from_physical((p.x + 0.5) * s, (p.y + 0.5) * s))
}

/// Full detection on one frame: threshold, blur, Canny, contours, largest
/// swarm-sized contour. Returns its centroid and equivalent diameter, both in
/// pixels.
pub fn detect(f: &FrameLo, t: u8, cfg: &PipelineConfig) -> Option<(GridPosition, f64)> {
    let b = blur(&threshold(f, t), cfg.blur);
    let edges = canny(&b, cfg.canny_low, cfg.canny_high);
    let cs = contours(&edges);
    let c = select_contour(&cs, um_per_px(&cfg.channel, f))?;
    let (x, y) = c.centroid();
    let o = cfg.blur.offset();
    Some((GridPosition::new(x + o, y + o), c.equivalent_diameter()))
}

#[derive(Debug, Clone)]
pub struct Pipeline {
    cfg: PipelineConfig,
    threshold: Option<u8>,
    tracker: Option<TrackerState>,
    frame_idx: u64,
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig) -> Self {
        Self { threshold: cfg.threshold, cfg, tracker: None, frame_idx: 0 }
    }

    pub fn threshold(&self) -> Option<u8> {
        self.threshold
    }

    /// Sets the session threshold from a sample of frames.
    pub fn calibrate<'a, I: IntoIterator<Item = &'a FrameLo>>(&mut self, frames: I) -> u8 {
        let t = otsu_threshold(frames);
        self.threshold = Some(t);
        t
    }

    pub fn tracker(&self) -> Option<&TrackerState> {
        self.tracker.as_ref()
    }

    /// Tracks when a confident track exists, detects otherwise.
    pub fn process(&mut self, f: &FrameLo) -> Option<Detection> {
        let frame_idx = self.frame_idx;
        self.frame_idx += 1;
        let t = match self.threshold {
            Some(t) => t,
            None => self.calibrate([f]),
        };
        if let Some(ts) = self.tracker.take() {
            let next = track(&ts, f);
            if next.confidence >= self.cfg.tracker.reacquire_below {
                let p = px_to_grid(&self.cfg.channel, f, next.position);
                let d = Detection { frame_idx, x: p.x, y: p.y, confidence: next.confidence, source: Source::Track };
                self.tracker = Some(next);
                return Some(d);
            }
        }
        let (p, diameter) = detect(f, t, &self.cfg)?;
        self.tracker = Some(TrackerState::init(f, p, diameter, &self.cfg.tracker));
        let g = px_to_grid(&self.cfg.channel, f, p);
        Some(Detection { frame_idx, x: g.x, y: g.y, confidence: 1.0, source: Source::Detect })
    }
}

/// Observes the plant through rendered frames: each call renders the scene
/// with the swarm at its true centroid, compresses it and runs the pipeline.
/// When the swarm is lost the last seen position is repeated (the channel
/// centre before the first detection).
pub struct VisionObserver {
    scene: SceneSpec,
    seed: u32,
    exec: Exec,
    pipeline: Pipeline,
    frame: u64,
    last: Option<GridPosition>,
    detections: Vec<Detection>,
}

impl VisionObserver {
    /// `scene` supplies everything but the swarm, which is set per frame.
    pub fn new(scene: SceneSpec, cfg: PipelineConfig, seed: u32, exec: Exec) -> Result<Self> {
        scene.validate()?;
        Ok(Self { scene, seed, exec, pipeline: Pipeline::new(cfg), frame: 0, last: None, detections: Vec::new() })
    }

    pub fn detections(&self) -> &[Detection] {
        &self.detections
    }

    pub fn into_detections(self) -> Vec<Detection> {
        self.detections
    }
}

impl Observer for VisionObserver {
    fn observe(&mut self, swarm: &SwarmState, plant: &Plant) -> GridPosition {
        let (lo, hi) = SWARM_DIAMETER_UM;
        self.scene.channel = *plant.channel();
        self.scene.swarm = Some(Disk { center: swarm.centroid, diameter_um: swarm.diameter_um.clamp(lo, hi) });
        let frame = render_frame(&self.scene, derive_seed(self.seed, self.frame), self.exec);
        self.frame += 1;
        let small = compress(&frame, self.exec);
        match self.pipeline.process(&small) {
            Some(d) => {
                self.detections.push(d);
                self.last = Some(d.position());
                d.position()
            }
            None => self.last.unwrap_or_else(|| {
                let c = plant.channel().max_coord() / 2.0;
                GridPosition::new(c, c)
            }),
        }
    }
}

pub fn write_detections(path: &Path, rows: &[Detection]) -> Result<()> {
    let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
    let file = std::fs::File::create(path).map_err(io(path))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    w.write_record(DETECTIONS_HEADER).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(io(path))
}

pub fn read_detections(path: &Path) -> Result<Vec<Detection>> {
    let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?.clone();
    if header.iter().ne(DETECTIONS_HEADER) {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: format!(
                "expected header {}, found {}",
                DETECTIONS_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    r.deserialize().collect::<std::result::Result<_, _>>().map_err(csv_err)
}
