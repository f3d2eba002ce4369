//! Dynamics matrices: expected swarm velocity (cells/s) per cell and transducer.
//!
//! Layout is `(y, x, component, transducer)` row-major, the same order used by
//! the binary file format.

mod fit;
mod local;
mod qfile;

pub use fit::{
    canonical_samples, estimate_resonance, estimate_resonances, fit_field, fit_global, FieldSample, FitReport,
};
pub use local::{init_local, update_local, History, Observation};
pub use qfile::{export_csv, read_qdyn, write_qdyn, QDYN_MAGIC};

use serde::{Deserialize, Serialize};

use crate::action::N_TRANSDUCERS;
use crate::error::{Error, Result};
use crate::geometry::{DisplacementVector, GridPosition};

pub const COMPONENTS: usize = 2;
const CELL_STRIDE: usize = COMPONENTS * N_TRANSDUCERS;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    Global,
    Local,
    Combined,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsMatrix {
    grid_n: usize,
    kind: MatrixKind,
    values: Vec<f64>,
}

impl DynamicsMatrix {
    pub fn filled(grid_n: usize, kind: MatrixKind, value: f64) -> Self {
        Self { grid_n, kind, values: vec![value; grid_n * grid_n * CELL_STRIDE] }
    }

    pub fn from_values(grid_n: usize, kind: MatrixKind, values: Vec<f64>) -> Result<Self> {
        let want = grid_n * grid_n * CELL_STRIDE;
        if values.len() != want {
            return Err(Error::Config(format!("expected {want} matrix values, got {}", values.len())));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Config(format!("non-finite matrix entry {v}")));
        }
        Ok(Self { grid_n, kind, values })
    }

    pub fn grid_n(&self) -> usize {
        self.grid_n
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn shape(&self) -> [usize; 4] {
        [self.grid_n, self.grid_n, COMPONENTS, N_TRANSDUCERS]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize, c: usize, k_idx: usize) -> usize {
        ((iy * self.grid_n + ix) * COMPONENTS + c) * N_TRANSDUCERS + k_idx
    }

    /// Entry for cell `(ix, iy)` and transducer `k` (1-based).
    #[inline]
    pub fn get(&self, ix: usize, iy: usize, k: u8) -> DisplacementVector {
        let i = self.index(ix, iy, 0, k as usize - 1);
        DisplacementVector::new(self.values[i], self.values[i + N_TRANSDUCERS])
    }

    #[inline]
    pub fn set(&mut self, ix: usize, iy: usize, k: u8, v: DisplacementVector) {
        let i = self.index(ix, iy, 0, k as usize - 1);
        self.values[i] = v.dx;
        self.values[i + N_TRANSDUCERS] = v.dy;
    }

    /// Lookup at a continuous position, rounded to the nearest cell.
    #[inline]
    pub fn at(&self, p: GridPosition, k: u8) -> DisplacementVector {
        let (ix, iy) = p.cell(self.grid_n);
        self.get(ix, iy, k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    /// EMA learning rate of the local matrix.
    pub alpha: f64,
    /// Weight of the global matrix in the blend.
    pub beta: f64,
    /// Observations kept in memory.
    pub window_m: usize,
    pub bandwidth_cells: f64,
    /// Minimum effective sample count for a regression fit.
    pub min_neighbors: f64,
    /// Local updates reach every cell within this distance of an
    /// observation. Zero updates only the visited cell.
    pub update_radius_cells: f64,
    pub init_value: f64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            beta: 0.5,
            window_m: 5,
            bandwidth_cells: 15.0,
            min_neighbors: 8.0,
            update_radius_cells: 15.0,
            init_value: 0.0,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::Config(format!("beta must lie in [0, 1], got {}", self.beta)));
        }
        if self.window_m == 0 {
            return Err(Error::Config("window_m must be at least 1".into()));
        }
        if !(self.bandwidth_cells > 0.0 && self.bandwidth_cells.is_finite()) {
            return Err(Error::Config(format!("bandwidth_cells must be positive, got {}", self.bandwidth_cells)));
        }
        if !(self.min_neighbors >= 0.0 && self.min_neighbors.is_finite()) {
            return Err(Error::Config("min_neighbors must be >= 0".into()));
        }
        if !(self.update_radius_cells >= 0.0 && self.update_radius_cells.is_finite()) {
            return Err(Error::Config("update_radius_cells must be >= 0".into()));
        }
        if !self.init_value.is_finite() {
            return Err(Error::Config("init_value must be finite".into()));
        }
        Ok(())
    }
}

#[inline]
fn blend_scalar(g: f64, l: f64, beta: f64) -> f64 {
    if beta == 1.0 {
        return g;
    }
    if beta == 0.0 {
        return l;
    }
    let v = l + beta * (g - l);
    v.clamp(g.min(l), g.max(l))
}

/// `beta * global + (1 - beta) * local`, elementwise.
pub fn combine(global: &DynamicsMatrix, local: &DynamicsMatrix, beta: f64) -> Result<DynamicsMatrix> {
    if global.shape() != local.shape() {
        return Err(Error::ShapeMismatch { left: global.shape(), right: local.shape() });
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::Config(format!("beta must lie in [0, 1], got {beta}")));
    }
    let values = global.values.iter().zip(&local.values).map(|(&g, &l)| blend_scalar(g, l, beta)).collect();
    Ok(DynamicsMatrix { grid_n: global.grid_n, kind: MatrixKind::Combined, values })
}

/// The blended entry at one cell, without materialising the whole matrix.
/// Agrees exactly with `combine(global, local, beta)?.at(p, k)`.
pub fn blended_at(
    global: &DynamicsMatrix,
    local: &DynamicsMatrix,
    beta: f64,
    p: GridPosition,
    k: u8,
) -> DisplacementVector {
    let g = global.at(p, k);
    let l = local.at(p, k);
    DisplacementVector::new(blend_scalar(g.dx, l.dx, beta), blend_scalar(g.dy, l.dy, beta))
}

/// Euclidean norm of predicted minus observed velocity.
pub fn prediction_error(q: &DynamicsMatrix, p: GridPosition, k: u8, observed: DisplacementVector) -> f64 {
    (q.at(p, k) - observed).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn layout_matches_file_order() {
        let mut q = DynamicsMatrix::filled(3, MatrixKind::Local, 0.0);
        q.set(2, 1, 3, DisplacementVector::new(7.0, 8.0));
        let i = ((1 * 3 + 2) * 2) * 4 + 2;
        assert_eq!(q.values()[i], 7.0);
        assert_eq!(q.values()[i + 4], 8.0);
        assert_eq!(q.at(GridPosition::new(1.6, 0.9), 3), DisplacementVector::new(7.0, 8.0));
    }

    #[test]
    fn combine_endpoints_and_midpoint() {
        let g = DynamicsMatrix::filled(4, MatrixKind::Global, 4.0);
        let l = DynamicsMatrix::filled(4, MatrixKind::Local, 2.0);
        assert_eq!(combine(&g, &l, 1.0).unwrap().values(), g.values());
        assert_eq!(combine(&g, &l, 0.0).unwrap().values(), l.values());
        assert!(combine(&g, &l, 0.5).unwrap().values().iter().all(|&v| v == 3.0));
        let small = DynamicsMatrix::filled(3, MatrixKind::Local, 0.0);
        assert!(matches!(combine(&g, &small, 0.5), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn prediction_error_examples() {
        let mut q = DynamicsMatrix::filled(5, MatrixKind::Global, 0.0);
        let p = GridPosition::new(2.0, 2.0);
        q.set(2, 2, 1, DisplacementVector::new(3.0, 0.0));
        assert_eq!(prediction_error(&q, p, 1, DisplacementVector::new(3.0, 0.0)), 0.0);
        assert_eq!(prediction_error(&q, p, 1, DisplacementVector::new(0.0, 4.0)), 5.0);
        let v = 7.0;
        q.set(2, 2, 2, DisplacementVector::new(v, 0.0));
        let e = prediction_error(&q, p, 2, DisplacementVector::new(0.0, v));
        assert!((e - v * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn learner_validation() {
        assert!(LearnerConfig::default().validate().is_ok());
        assert!(LearnerConfig { alpha: 1.5, ..Default::default() }.validate().is_err());
        assert!(LearnerConfig { window_m: 0, ..Default::default() }.validate().is_err());
    }

    proptest! {
        #[test]
        fn blend_lies_between_inputs(g in -100.0f64..100.0, l in -100.0f64..100.0, beta in 0.0f64..=1.0) {
            let b = blend_scalar(g, l, beta);
            prop_assert!(b >= g.min(l) && b <= g.max(l));
        }

        #[test]
        fn lazy_blend_matches_combine(vals in proptest::collection::vec(-50.0f64..50.0, 2 * 2 * 8 * 2), beta in 0.0f64..=1.0, x in 0.0f64..1.4, y in 0.0f64..1.4, k in 1u8..=4) {
            let g = DynamicsMatrix::from_values(2, MatrixKind::Global, vals[..32].to_vec()).unwrap();
            let l = DynamicsMatrix::from_values(2, MatrixKind::Local, vals[32..].to_vec()).unwrap();
            let p = GridPosition::new(x, y);
            prop_assert_eq!(combine(&g, &l, beta).unwrap().at(p, k), blended_at(&g, &l, beta, p, k));
        }
    }
}
