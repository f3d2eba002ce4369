//! Target paths and the goal condition.
//!
//! A waypoint counts as reached when the squared distance to it is at most
//! `delta` (cell² units). Waypoints are satisfied strictly in order.

use std::f64::consts::TAU;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ChannelConfig, GridPosition};

pub const DEFAULT_DELTA: f64 = 5.0;
/// Minimum clearance between any waypoint and the channel walls, in cells.
pub const WALL_MARGIN: f64 = 10.0;

pub fn goal_reached(target: GridPosition, swarm: GridPosition, delta: f64) -> bool {
    target.dist_sq(swarm) <= delta
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetPath {
    pub waypoints: Vec<GridPosition>,
    pub delta: f64,
    pub cursor: usize,
}

impl TargetPath {
    pub fn new(waypoints: Vec<GridPosition>, delta: f64) -> Result<Self> {
        if waypoints.is_empty() {
            return Err(Error::Config("target path has no waypoints".into()));
        }
        if !(delta >= 0.0) {
            return Err(Error::Config(format!("delta must be >= 0, got {delta}")));
        }
        Ok(Self { waypoints, delta, cursor: 0 })
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.cursor >= self.waypoints.len()
    }

    pub fn current(&self) -> Option<GridPosition> {
        self.waypoints.get(self.cursor).copied()
    }

    /// Advances past the current waypoint if `swarm` satisfies it. Returns
    /// whether the cursor moved.
    pub fn advance(&mut self, swarm: GridPosition) -> bool {
        match self.current() {
            Some(t) if goal_reached(t, swarm, self.delta) => {
                self.cursor += 1;
                true
            }
            _ => false,
        }
    }

    pub fn advanced(&self, swarm: GridPosition) -> TargetPath {
        let mut next = self.clone();
        next.advance(swarm);
        next
    }

    fn check_margin(&self, channel: &ChannelConfig) -> Result<()> {
        let hi = channel.max_coord() - WALL_MARGIN;
        for (i, p) in self.waypoints.iter().enumerate() {
            let ok = |v: f64| (WALL_MARGIN - 1e-9..=hi + 1e-9).contains(&v);
            if !(ok(p.x) && ok(p.y)) {
                return Err(Error::PathOutOfBounds(format!(
                    "waypoint {i} at ({:.2}, {:.2}) is closer than {WALL_MARGIN} cells to a wall",
                    p.x, p.y
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PathShape {
    Circle { center: GridPosition, radius: f64, n_points: usize, laps: usize },
    Polyline(Vec<GridPosition>),
    Letters(String),
}

impl PathShape {
    pub fn default_circle() -> Self {
        PathShape::Circle { center: GridPosition::new(150.0, 150.0), radius: 60.0, n_points: 36, laps: 3 }
    }
}

impl FromStr for PathShape {
    type Err = Error;

    /// `circle`, `letters:ETH`, or `polyline:x,y;x,y;...`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        match kind {
            "circle" => Ok(PathShape::default_circle()),
            "letters" if !rest.is_empty() => Ok(PathShape::Letters(rest.to_string())),
            "polyline" => {
                let mut pts = Vec::new();
                for pair in rest.split(';').filter(|p| !p.trim().is_empty()) {
                    let (x, y) =
                        pair.split_once(',').ok_or_else(|| Error::Config(format!("bad polyline point {pair:?}")))?;
                    let parse =
                        |v: &str| v.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad coordinate {v:?}")));
                    pts.push(GridPosition::new(parse(x)?, parse(y)?));
                }
                if pts.is_empty() {
                    return Err(Error::Config("polyline needs at least one point".into()));
                }
                Ok(PathShape::Polyline(pts))
            }
            _ => Err(Error::Config(format!("unknown path spec {s:?}"))),
        }
    }
}

pub fn build_path(shape: &PathShape, channel: &ChannelConfig, delta: f64) -> Result<TargetPath> {
    let waypoints = match shape {
        PathShape::Circle { center, radius, n_points, laps } => {
            if *n_points == 0 || *laps == 0 || !(*radius > 0.0) {
                return Err(Error::Config("circle needs radius > 0, n_points > 0, laps > 0".into()));
            }
            let n = *n_points;
            (0..n * laps)
                .map(|i| {
                    let a = TAU * (i % n) as f64 / n as f64;
                    GridPosition::new(center.x + radius * a.cos(), center.y + radius * a.sin())
                })
                .collect()
        }
        PathShape::Polyline(points) => points.clone(),
        PathShape::Letters(text) => letter_waypoints(text, channel)?,
    };
    let path = TargetPath::new(waypoints, delta)?;
    path.check_margin(channel)?;
    Ok(path)
}

/// Glyph strokes in a box 0.6 wide and 1.0 tall, y pointing up.
fn glyph(c: char) -> Option<&'static [&'static [(f64, f64)]]> {
    Some(match c.to_ascii_uppercase() {
        'A' => &[&[(0.0, 0.0), (0.3, 1.0), (0.6, 0.0)], &[(0.12, 0.4), (0.48, 0.4)]],
        'C' => {
            &[&[(0.6, 0.85), (0.45, 1.0), (0.15, 1.0), (0.0, 0.8), (0.0, 0.2), (0.15, 0.0), (0.45, 0.0), (0.6, 0.15)]]
        }
        'E' => &[&[(0.6, 1.0), (0.0, 1.0), (0.0, 0.0), (0.6, 0.0)], &[(0.0, 0.5), (0.45, 0.5)]],
        'H' => &[&[(0.0, 1.0), (0.0, 0.0)], &[(0.0, 0.5), (0.6, 0.5)], &[(0.6, 1.0), (0.6, 0.0)]],
        'I' => &[&[(0.3, 1.0), (0.3, 0.0)]],
        'L' => &[&[(0.0, 1.0), (0.0, 0.0), (0.6, 0.0)]],
        'O' => &[&[
            (0.15, 0.0),
            (0.0, 0.2),
            (0.0, 0.8),
            (0.15, 1.0),
            (0.45, 1.0),
            (0.6, 0.8),
            (0.6, 0.2),
            (0.45, 0.0),
            (0.15, 0.0),
        ]],
        'R' => &[
            &[(0.0, 0.0), (0.0, 1.0), (0.45, 1.0), (0.6, 0.85), (0.6, 0.65), (0.45, 0.5), (0.0, 0.5)],
            &[(0.25, 0.5), (0.6, 0.0)],
        ],
        'S' => &[&[
            (0.6, 0.9),
            (0.45, 1.0),
            (0.15, 1.0),
            (0.0, 0.85),
            (0.0, 0.65),
            (0.15, 0.5),
            (0.45, 0.5),
            (0.6, 0.35),
            (0.6, 0.15),
            (0.45, 0.0),
            (0.15, 0.0),
            (0.0, 0.1),
        ]],
        'T' => &[&[(0.0, 1.0), (0.6, 1.0)], &[(0.3, 1.0), (0.3, 0.0)]],
        'U' => &[&[(0.0, 1.0), (0.0, 0.15), (0.15, 0.0), (0.45, 0.0), (0.6, 0.15), (0.6, 1.0)]],
        _ => return None,
    })
}

const GLYPH_W: f64 = 0.6;
const GLYPH_GAP: f64 = 0.3;
const LETTER_MARGIN: f64 = 40.0;
const LETTER_MAX_HEIGHT: f64 = 120.0;
/// Spacing between interpolated waypoints along a stroke, in cells.
const STROKE_STEP: f64 = 6.0;

fn letter_waypoints(text: &str, channel: &ChannelConfig) -> Result<Vec<GridPosition>> {
    let glyphs: Vec<_> = text
        .chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| glyph(c).ok_or(Error::UnknownGlyph(c)))
        .collect::<Result<_>>()?;
    if glyphs.is_empty() {
        return Err(Error::Config("letter path needs at least one glyph".into()));
    }
    let n = glyphs.len() as f64;
    let width_units = n * GLYPH_W + (n - 1.0) * GLYPH_GAP;
    let usable = channel.max_coord() - 2.0 * LETTER_MARGIN;
    if usable <= 0.0 {
        return Err(Error::PathOutOfBounds("channel too small for letters".into()));
    }
    let scale = (usable / width_units).min(LETTER_MAX_HEIGHT).min(usable);
    let x0 = channel.max_coord() / 2.0 - width_units * scale / 2.0;
    let y0 = channel.max_coord() / 2.0 - scale / 2.0;

    let mut out: Vec<GridPosition> = Vec::new();
    for (i, strokes) in glyphs.iter().enumerate() {
        let gx = x0 + i as f64 * (GLYPH_W + GLYPH_GAP) * scale;
        for stroke in strokes.iter() {
            let pts: Vec<GridPosition> =
                stroke.iter().map(|&(u, v)| GridPosition::new(gx + u * scale, y0 + v * scale)).collect();
            out.push(pts[0]);
            for w in pts.windows(2) {
                let len = w[0].dist_sq(w[1]).sqrt();
                let pieces = (len / STROKE_STEP).ceil().max(1.0) as usize;
                for j in 1..=pieces {
                    let t = j as f64 / pieces as f64;
                    out.push(GridPosition::new(w[0].x + t * (w[1].x - w[0].x), w[0].y + t * (w[1].y - w[0].y)));
                }
            }
        }
    }
    Ok(out)
}
