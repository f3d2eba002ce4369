//! Channel geometry. Positions live on a square `grid_n × grid_n` lattice of
//! cells; cell `i` is centred at coordinate `i`, so the valid continuous range
//! on each axis is `[0, grid_n - 1]`.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_GRID_N: usize = 300;
pub const DEFAULT_WIDTH_UM: f64 = 400.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub width_um: f64,
    pub height_um: f64,
    pub grid_n: usize,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self { width_um: DEFAULT_WIDTH_UM, height_um: DEFAULT_WIDTH_UM, grid_n: DEFAULT_GRID_N }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_n < 2 {
            return Err(Error::Config(format!("grid_n must be >= 2, got {}", self.grid_n)));
        }
        if !(self.width_um > 0.0) || self.width_um != self.height_um {
            return Err(Error::Config(format!(
                "channel must be square with positive size, got {} x {} um",
                self.width_um, self.height_um
            )));
        }
        Ok(())
    }

    /// Micrometres per cell.
    pub fn cell_um(&self) -> f64 {
        self.width_um / self.grid_n as f64
    }

    /// Largest valid coordinate on either axis.
    pub fn max_coord(&self) -> f64 {
        (self.grid_n - 1) as f64
    }

    pub fn contains(&self, p: GridPosition) -> bool {
        let m = self.max_coord();
        (0.0..=m).contains(&p.x) && (0.0..=m).contains(&p.y)
    }

    pub fn clamp(&self, p: GridPosition) -> GridPosition {
        let m = self.max_coord();
        GridPosition::new(p.x.clamp(0.0, m), p.y.clamp(0.0, m))
    }

    /// Cell-centre convention: coordinate `x` maps to `(x + 0.5) * cell_um`.
    pub fn to_physical(&self, p: GridPosition) -> (f64, f64) {
        let c = self.cell_um();
        ((p.x + 0.5) * c, (p.y + 0.5) * c)
    }

    pub fn from_physical(&self, x_um: f64, y_um: f64) -> GridPosition {
        let c = self.cell_um();
        GridPosition::new(x_um / c - 0.5, y_um / c - 0.5)
    }

    /// Distance from `p` to the nearest wall coordinate, in cells.
    pub fn wall_distance(&self, p: GridPosition) -> f64 {
        let m = self.max_coord();
        p.x.min(m - p.x).min(p.y).min(m - p.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GridPosition {
    pub x: f64,
    pub y: f64,
}

impl GridPosition {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist_sq(self, other: GridPosition) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    /// Nearest integer cell, clamped into a `grid_n` lattice.
    pub fn cell(self, grid_n: usize) -> (usize, usize) {
        let m = (grid_n - 1) as f64;
        let cx = self.x.round().clamp(0.0, m) as usize;
        let cy = self.y.round().clamp(0.0, m) as usize;
        (cx, cy)
    }
}

impl Add<DisplacementVector> for GridPosition {
    type Output = GridPosition;
    fn add(self, d: DisplacementVector) -> GridPosition {
        GridPosition::new(self.x + d.dx, self.y + d.dy)
    }
}

impl Sub for GridPosition {
    type Output = DisplacementVector;
    fn sub(self, o: GridPosition) -> DisplacementVector {
        DisplacementVector::new(self.x - o.x, self.y - o.y)
    }
}

/// Velocity in cells per second (or a displacement in cells once scaled by a time step).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DisplacementVector {
    pub dx: f64,
    pub dy: f64,
}

impl DisplacementVector {
    pub const ZERO: DisplacementVector = DisplacementVector { dx: 0.0, dy: 0.0 };

    pub const fn new(dx: f64, dy: f64) -> Self {
        Self { dx, dy }
    }

    pub fn norm(self) -> f64 {
        self.dx.hypot(self.dy)
    }

    pub fn dot(self, o: DisplacementVector) -> f64 {
        self.dx * o.dx + self.dy * o.dy
    }

    pub fn is_finite(self) -> bool {
        self.dx.is_finite() && self.dy.is_finite()
    }

    /// Cosine similarity; zero if either vector vanishes.
    pub fn cosine(self, o: DisplacementVector) -> f64 {
        let n = self.norm() * o.norm();
        if n == 0.0 {
            0.0
        } else {
            self.dot(o) / n
        }
    }

    pub fn rotated(self, angle: f64) -> DisplacementVector {
        let (s, c) = angle.sin_cos();
        DisplacementVector::new(c * self.dx - s * self.dy, s * self.dx + c * self.dy)
    }
}

impl Add for DisplacementVector {
    type Output = DisplacementVector;
    fn add(self, o: DisplacementVector) -> DisplacementVector {
        DisplacementVector::new(self.dx + o.dx, self.dy + o.dy)
    }
}

impl Sub for DisplacementVector {
    type Output = DisplacementVector;
    fn sub(self, o: DisplacementVector) -> DisplacementVector {
        DisplacementVector::new(self.dx - o.dx, self.dy - o.dy)
    }
}

impl Mul<f64> for DisplacementVector {
    type Output = DisplacementVector;
    fn mul(self, s: f64) -> DisplacementVector {
        DisplacementVector::new(self.dx * s, self.dy * s)
    }
}
