//! Offline learning from the sweep: resonance estimation and the global
//! matrix fit (locally weighted linear regression of velocity on position).

use std::collections::BTreeMap;

use super::{DynamicsMatrix, LearnerConfig, MatrixKind, CELL_STRIDE};
use crate::action::N_TRANSDUCERS;
use crate::error::{Error, Result};
use crate::geometry::{DisplacementVector, GridPosition};
use crate::gridsearch::{frequency, DatasetRecord, N_FREQUENCIES};
use crate::par::{map_range, Exec};

/// Records with a smaller estimated drive gain carry too little signal to rescale.
pub const MIN_GAIN: f64 = 0.3;
/// Records this close to a wall may have been clamped.
const WALL_BAND: f64 = 2.0;
const KERNEL_CUTOFF: f64 = 3.0;
const MIN_CONDITION: f64 = 1e-8;
/// A fit faster than this multiple of the fastest neighbour is extrapolating.
const MAX_OVERSHOOT: f64 = 1.25;

fn frequency_bin(f_mhz: f64) -> Option<usize> {
    let i = ((f_mhz - frequency(0)) / 0.025).round();
    if !(0.0..N_FREQUENCIES as f64).contains(&i) {
        return None;
    }
    let i = i as usize;
    ((frequency(i) - f_mhz).abs() < 1e-9).then_some(i)
}

fn speed_per_bin(records: &[DatasetRecord], k: u8) -> Result<[f64; N_FREQUENCIES]> {
    let mut sums = [0.0; N_FREQUENCIES];
    let mut counts = [0usize; N_FREQUENCIES];
    for r in records.iter().filter(|r| r.k == k) {
        if let Some(i) = frequency_bin(r.f_mhz) {
            sums[i] += r.speed();
            counts[i] += 1;
        }
    }
    if counts.iter().all(|&c| c == 0) {
        return Err(Error::MissingTransducer { k });
    }
    if let Some(i) = counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyFrequencyBin { k, f_mhz: frequency(i) });
    }
    Ok(sums)
}

fn argmax_lowest(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// The sweep frequency with the largest summed speed for transducer `k`.
/// Ties go to the lower frequency.
pub fn estimate_resonance(records: &[DatasetRecord], k: u8) -> Result<f64> {
    Ok(frequency(argmax_lowest(&speed_per_bin(records, k)?)))
}

pub fn estimate_resonances(records: &[DatasetRecord]) -> Result<[f64; N_TRANSDUCERS]> {
    let mut out = [0.0; N_TRANSDUCERS];
    for (i, f) in out.iter_mut().enumerate() {
        *f = estimate_resonance(records, i as u8 + 1)?;
    }
    Ok(out)
}

/// A velocity observation to regress on, in canonical-action units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub position: GridPosition,
    pub k: u8,
    pub velocity: DisplacementVector,
    pub weight: f64,
}

/// Converts sweep records to canonical-action samples.
///
/// Each record is divided by an empirical drive gain, the product of a
/// frequency factor (summed speed at its frequency over summed speed at the
/// peak) and a voltage factor (summed speed at its voltage over summed speed
/// at the top voltage, near the peak). Records with gain below [`MIN_GAIN`]
/// or lying against a wall are dropped; the rest are weighted by gain squared,
/// which keeps the noise variance of every sample on the same footing.
pub fn canonical_samples(records: &[DatasetRecord], grid_n: usize) -> Result<Vec<FieldSample>> {
    let max = (grid_n - 1) as f64;
    let mut out = Vec::new();
    for k in 1..=N_TRANSDUCERS as u8 {
        let sums = speed_per_bin(records, k)?;
        let peak = sums[argmax_lowest(&sums)];
        if peak <= 0.0 {
            return Err(Error::MissingTransducer { k });
        }
        let freq_gain = sums.map(|s| s / peak);

        let mut by_voltage: BTreeMap<i64, f64> = BTreeMap::new();
        for r in records.iter().filter(|r| r.k == k) {
            if frequency_bin(r.f_mhz).is_some_and(|i| freq_gain[i] >= 0.5) {
                *by_voltage.entry((r.v_pp * 1000.0).round() as i64).or_default() += r.speed();
            }
        }
        let top = by_voltage.values().next_back().copied().unwrap_or(0.0);
        if top <= 0.0 {
            return Err(Error::MissingTransducer { k });
        }

        for r in records.iter().filter(|r| r.k == k) {
            let Some(i) = frequency_bin(r.f_mhz) else { continue };
            let volt = by_voltage.get(&((r.v_pp * 1000.0).round() as i64)).copied().unwrap_or(0.0) / top;
            let gain = freq_gain[i] * volt;
            if gain < MIN_GAIN {
                continue;
            }
            let near_wall = r.x < WALL_BAND || r.y < WALL_BAND || r.x > max - WALL_BAND || r.y > max - WALL_BAND;
            let v = DisplacementVector::new(r.dx_dt, r.dy_dt);
            if near_wall || !v.is_finite() {
                continue;
            }
            out.push(FieldSample { position: r.position(), k, velocity: v * (1.0 / gain), weight: gain * gain });
        }
    }
    Ok(out)
}

/// Per-transducer counts of how each cell was estimated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FitReport {
    pub samples: [usize; N_TRANSDUCERS],
    pub regression: [usize; N_TRANSDUCERS],
    pub weighted_mean: [usize; N_TRANSDUCERS],
    pub nearest: [usize; N_TRANSDUCERS],
}

struct Buckets<'a> {
    samples: Vec<&'a FieldSample>,
    size: f64,
    nb: usize,
    cells: Vec<Vec<u32>>,
}

impl<'a> Buckets<'a> {
    fn new(samples: Vec<&'a FieldSample>, size: f64, grid_n: usize) -> Self {
        let nb = ((grid_n as f64 / size).ceil() as usize).max(1);
        let mut cells = vec![Vec::new(); nb * nb];
        for (i, s) in samples.iter().enumerate() {
            let (bx, by) = Self::bucket_of(s.position, size, nb);
            cells[by * nb + bx].push(i as u32);
        }
        Self { samples, size, nb, cells }
    }

    fn bucket_of(p: GridPosition, size: f64, nb: usize) -> (usize, usize) {
        let b = |v: f64| ((v / size).floor().max(0.0) as usize).min(nb - 1);
        (b(p.x), b(p.y))
    }

    fn for_each_within(&self, c: GridPosition, radius: f64, mut f: impl FnMut(&FieldSample)) {
        let lo = |v: f64| (((v - radius) / self.size).floor().max(0.0) as usize).min(self.nb - 1);
        let hi = |v: f64| (((v + radius) / self.size).floor().max(0.0) as usize).min(self.nb - 1);
        for by in lo(c.y)..=hi(c.y) {
            for bx in lo(c.x)..=hi(c.x) {
                for &i in &self.cells[by * self.nb + bx] {
                    f(self.samples[i as usize]);
                }
            }
        }
    }

    fn nearest(&self, c: GridPosition) -> &FieldSample {
        let (qx, qy) = Self::bucket_of(c, self.size, self.nb);
        let mut best: Option<(f64, usize)> = None;
        for ring in 0..self.nb {
            let (x0, x1) = (qx.saturating_sub(ring), (qx + ring).min(self.nb - 1));
            let (y0, y1) = (qy.saturating_sub(ring), (qy + ring).min(self.nb - 1));
            for by in y0..=y1 {
                for bx in x0..=x1 {
                    if bx.abs_diff(qx).max(by.abs_diff(qy)) != ring {
                        continue;
                    }
                    for &i in &self.cells[by * self.nb + bx] {
                        let d = self.samples[i as usize].position.dist_sq(c);
                        if best.is_none_or(|(bd, bi)| d < bd || (d == bd && (i as usize) < bi)) {
                            best = Some((d, i as usize));
                        }
                    }
                }
            }
            if let Some((d, _)) = best {
                if d.sqrt() <= ring as f64 * self.size {
                    break;
                }
            }
        }
        self.samples[best.expect("bucket set is non-empty").1]
    }
}

enum CellFit {
    Regression(DisplacementVector),
    Mean(DisplacementVector),
    Nearest(DisplacementVector),
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn fit_cell(b: &Buckets, c: GridPosition, h: f64, min_neighbors: f64) -> CellFit {
    let inv = 1.0 / (2.0 * h * h);
    let cutoff = KERNEL_CUTOFF * h;
    let cut2 = cutoff * cutoff;
    // Weighted moments of [1, dx, dy] and of each velocity component.
    let (mut s0, mut sx, mut sy, mut sxx, mut sxy, mut syy, mut sw2) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    let mut fastest = 0.0f64;
    let mut rhs = [[0.0f64; 3]; 2];
    b.for_each_within(c, cutoff, |s| {
        let (dx, dy) = (s.position.x - c.x, s.position.y - c.y);
        let d2 = dx * dx + dy * dy;
        if d2 > cut2 {
            return;
        }
        let w = s.weight * (-d2 * inv).exp();
        s0 += w;
        sx += w * dx;
        sy += w * dy;
        sxx += w * dx * dx;
        sxy += w * dx * dy;
        syy += w * dy * dy;
        sw2 += w * w;
        fastest = fastest.max(s.velocity.norm());
        for (r, v) in rhs.iter_mut().zip([s.velocity.dx, s.velocity.dy]) {
            r[0] += w * v;
            r[1] += w * dx * v;
            r[2] += w * dy * v;
        }
    });
    if s0 <= 0.0 || s0 * s0 / sw2 < min_neighbors {
        return CellFit::Nearest(b.nearest(c).velocity);
    }
    let m = [[s0, sx, sy], [sx, sxx, sxy], [sy, sxy, syy]];
    let det = det3(&m);
    let scale = s0 * sxx * syy;
    if !(scale > 0.0) || det / scale < MIN_CONDITION {
        return CellFit::Mean(DisplacementVector::new(rhs[0][0] / s0, rhs[1][0] / s0));
    }
    let intercept = |r: &[f64; 3]| {
        let mut a = m;
        for (row, &v) in a.iter_mut().zip(r) {
            row[0] = v;
        }
        det3(&a) / det
    };
    let v = DisplacementVector::new(intercept(&rhs[0]), intercept(&rhs[1]));
    if v.norm() > MAX_OVERSHOOT * fastest {
        return CellFit::Mean(DisplacementVector::new(rhs[0][0] / s0, rhs[1][0] / s0));
    }
    CellFit::Regression(v)
}

/// Fits every cell centre of a `grid_n` grid for each transducer.
///
/// Cells whose kernel-weighted effective sample count falls below
/// `min_neighbors` take the nearest sample; cells whose neighbourhood is
/// degenerate (collinear samples) or whose fit extrapolates past the
/// neighbours' speeds take the weighted mean.
pub fn fit_field(
    samples: &[FieldSample],
    grid_n: usize,
    cfg: &LearnerConfig,
    exec: Exec,
) -> Result<(DynamicsMatrix, FitReport)> {
    cfg.validate()?;
    let mut report = FitReport::default();
    let mut per_k = Vec::with_capacity(N_TRANSDUCERS);
    for k in 1..=N_TRANSDUCERS as u8 {
        let mine: Vec<&FieldSample> = samples.iter().filter(|s| s.k == k && s.weight > 0.0).collect();
        if mine.is_empty() {
            return Err(Error::MissingTransducer { k });
        }
        report.samples[k as usize - 1] = mine.len();
        per_k.push(Buckets::new(mine, cfg.bandwidth_cells, grid_n));
    }

    let rows = map_range(exec, grid_n, |iy| {
        let mut row = vec![0.0; grid_n * CELL_STRIDE];
        let mut counts = [[0usize; N_TRANSDUCERS]; 3];
        for ix in 0..grid_n {
            let c = GridPosition::new(ix as f64, iy as f64);
            for (ki, b) in per_k.iter().enumerate() {
                let (v, kind) = match fit_cell(b, c, cfg.bandwidth_cells, cfg.min_neighbors) {
                    CellFit::Regression(v) => (v, 0),
                    CellFit::Mean(v) => (v, 1),
                    CellFit::Nearest(v) => (v, 2),
                };
                counts[kind][ki] += 1;
                row[ix * CELL_STRIDE + ki] = v.dx;
                row[ix * CELL_STRIDE + N_TRANSDUCERS + ki] = v.dy;
            }
        }
        (row, counts)
    });

    let mut values = Vec::with_capacity(grid_n * grid_n * CELL_STRIDE);
    for (row, counts) in rows {
        values.extend_from_slice(&row);
        for ki in 0..N_TRANSDUCERS {
            report.regression[ki] += counts[0][ki];
            report.weighted_mean[ki] += counts[1][ki];
            report.nearest[ki] += counts[2][ki];
        }
    }
    Ok((DynamicsMatrix::from_values(grid_n, MatrixKind::Global, values)?, report))
}

/// The global matrix from a sweep dataset.
pub fn fit_global(
    records: &[DatasetRecord],
    grid_n: usize,
    cfg: &LearnerConfig,
    exec: Exec,
) -> Result<(DynamicsMatrix, FitReport)> {
    fit_field(&canonical_samples(records, grid_n)?, grid_n, cfg, exec)
}
