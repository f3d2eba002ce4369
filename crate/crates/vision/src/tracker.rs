//! Template tracker: normalised cross-correlation over a square search window,
//! parabolic sub-pixel refinement and exponential template blending.

use swarm_core::GridPosition;

use crate::image::{FrameLo, Image};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerConfig {
    /// Half-width of the search window, pixels.
    pub search_radius: usize,
    pub template_blend: f64,
    /// Confidence below which detection must be re-run.
    pub reacquire_below: f64,
    /// Background border around the swarm included in the template, pixels.
    pub margin_px: usize,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self { search_radius: 10, template_blend: 0.1, reacquire_below: 0.3, margin_px: 4 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerState {
    template: Image<f32>,
    half: usize,
    /// Pixel coordinates of the template centre.
    pub position: GridPosition,
    pub search_radius: usize,
    pub template_blend: f64,
    /// Best correlation score of the last match, in [-1, 1].
    pub confidence: f64,
}

impl TrackerState {
    /// Cuts a template of the swarm at `position` with diameter `diameter_px`.
    pub fn init(frame: &FrameLo, position: GridPosition, diameter_px: f64, cfg: &TrackerConfig) -> Self {
        let max_half = (frame.width().min(frame.height()) - 2) / 2;
        let half = ((diameter_px / 2.0).ceil() as usize + cfg.margin_px).clamp(2, max_half);
        let position = clamp_to(frame, position);
        let (cx, cy) = rounded(position);
        Self {
            template: patch(frame, cx, cy, half),
            half,
            position,
            search_radius: cfg.search_radius,
            template_blend: cfg.template_blend,
            confidence: 1.0,
        }
    }

    pub fn template(&self) -> &Image<f32> {
        &self.template
    }
}

fn clamp_to(frame: &FrameLo, p: GridPosition) -> GridPosition {
    GridPosition::new(p.x.clamp(0.0, (frame.width() - 1) as f64), p.y.clamp(0.0, (frame.height() - 1) as f64))
}

fn rounded(p: GridPosition) -> (isize, isize) {
    (p.x.round() as isize, p.y.round() as isize)
}

fn patch(frame: &FrameLo, cx: isize, cy: isize, half: usize) -> Image<f32> {
    let n = 2 * half + 1;
    let h = half as isize;
    let mut out = Image::filled(n, n, 0.0f32);
    for ty in 0..n {
        for tx in 0..n {
            out.set(tx, ty, frame.get_clamped(cx - h + tx as isize, cy - h + ty as isize) as f32);
        }
    }
    out
}

/// Zero-mean template samples on a sparse lattice, with their offsets.
struct Probe {
    offsets: Vec<(isize, isize)>,
    /// `dy * width + dx` for the fast in-bounds path.
    linear: Vec<isize>,
    values: Vec<f64>,
    norm: f64,
    reach: isize,
}

/// Template samples per axis above which the lattice is thinned.
const MAX_SAMPLES_PER_AXIS: usize = 40;

impl Probe {
    fn new(template: &Image<f32>, half: usize, frame_width: usize) -> Self {
        let n = template.width();
        let s = n.div_ceil(MAX_SAMPLES_PER_AXIS).max(1);
        let mut offsets = Vec::new();
        let mut values = Vec::new();
        for ty in (0..n).step_by(s) {
            for tx in (0..n).step_by(s) {
                offsets.push((tx as isize - half as isize, ty as isize - half as isize));
                values.push(template.get(tx, ty) as f64);
            }
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        values.iter_mut().for_each(|v| *v -= mean);
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        let linear = offsets.iter().map(|&(dx, dy)| dy * frame_width as isize + dx).collect();
        Self { offsets, linear, values, norm, reach: half as isize }
    }

    fn ncc(&self, frame: &FrameLo, cx: isize, cy: isize) -> f64 {
        if self.norm == 0.0 {
            return 0.0;
        }
        let (mut sp, mut spp, mut stp) = (0.0f64, 0.0f64, 0.0f64);
        let mut acc = |t: f64, p: f64| {
            sp += p;
            spp += p * p;
            stp += t * p;
        };
        let (w, h) = (frame.width() as isize, frame.height() as isize);
        let r = self.reach;
        if cx - r >= 0 && cy - r >= 0 && cx + r < w && cy + r < h {
            let data = frame.data();
            let base = cy * w + cx;
            for (&off, &t) in self.linear.iter().zip(&self.values) {
                acc(t, data[(base + off) as usize] as f64);
            }
        } else {
            for (&(dx, dy), &t) in self.offsets.iter().zip(&self.values) {
                acc(t, frame.get_clamped(cx + dx, cy + dy) as f64);
            }
        }
        let n = self.values.len() as f64;
        let var = spp - sp * sp / n;
        if var <= 1e-9 {
            return 0.0;
        }
        (stp / (self.norm * var.sqrt())).clamp(-1.0, 1.0)
    }
}

fn parabolic(l: f64, c: f64, r: f64) -> f64 {
    let denom = l - 2.0 * c + r;
    if denom < 0.0 {
        (0.5 * (l - r) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    }
}

/// One tracking step. The caller re-runs detection when the returned
/// confidence falls below its re-acquisition threshold.
pub fn track(ts: &TrackerState, f: &FrameLo) -> TrackerState {
    let probe = Probe::new(&ts.template, ts.half, f.width());
    let (px, py) = rounded(ts.position);
    let r = ts.search_radius as isize;
    let side = (2 * r + 1) as usize;
    let mut scores = vec![f64::NEG_INFINITY; side * side];
    let mut best = (0usize, 0usize, f64::NEG_INFINITY);
    for (j, dy) in (-r..=r).enumerate() {
        let cy = py + dy;
        if cy < 0 || cy >= f.height() as isize {
            continue;
        }
        for (i, dx) in (-r..=r).enumerate() {
            let cx = px + dx;
            if cx < 0 || cx >= f.width() as isize {
                continue;
            }
            let s = probe.ncc(f, cx, cy);
            scores[j * side + i] = s;
            if s > best.2 {
                best = (i, j, s);
            }
        }
    }
    let (bi, bj, score) = best;
    if !score.is_finite() {
        return TrackerState { confidence: 0.0, ..ts.clone() };
    }
    let at = |i: usize, j: usize| scores[j * side + i];
    let mut sub = (0.0, 0.0);
    if bi > 0 && bi + 1 < side && at(bi - 1, bj).is_finite() && at(bi + 1, bj).is_finite() {
        sub.0 = parabolic(at(bi - 1, bj), score, at(bi + 1, bj));
    }
    if bj > 0 && bj + 1 < side && at(bi, bj - 1).is_finite() && at(bi, bj + 1).is_finite() {
        sub.1 = parabolic(at(bi, bj - 1), score, at(bi, bj + 1));
    }
    let cx = px - r + bi as isize;
    let cy = py - r + bj as isize;
    let fresh = patch(f, cx, cy, ts.half);
    let b = ts.template_blend as f32;
    let mut template = ts.template.clone();
    for (t, &p) in template.data_mut().iter_mut().zip(fresh.data()) {
        *t = (1.0 - b) * *t + b * p;
    }
    TrackerState {
        template,
        half: ts.half,
        position: clamp_to(f, GridPosition::new(cx as f64 + sub.0, cy as f64 + sub.1)),
        search_radius: ts.search_radius,
        template_blend: ts.template_blend,
        confidence: score,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scene(cx: f64, cy: f64, r: f64) -> FrameLo {
        let mut f = Image::filled(120, 100, 200u8);
        for y in 0..100 {
            for x in 0..120 {
                let d = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
                let a = (r - d + 0.5).clamp(0.0, 1.0);
                f.set(x, y, (200.0 - 170.0 * a).round() as u8);
            }
        }
        f
    }

    #[test]
    fn static_scene_stays_put() {
        let f = scene(50.0, 40.0, 12.0);
        let ts = TrackerState::init(&f, GridPosition::new(50.0, 40.0), 24.0, &TrackerConfig::default());
        let next = track(&ts, &f);
        assert!((next.position.x - 50.0).abs() < 1e-9 && (next.position.y - 40.0).abs() < 1e-9);
        assert!(next.confidence > 0.999);
    }

    #[test]
    fn follows_a_four_cell_displacement() {
        let f0 = scene(50.0, 40.0, 12.0);
        let ts = TrackerState::init(&f0, GridPosition::new(50.0, 40.0), 24.0, &TrackerConfig::default());
        let f1 = scene(54.0, 37.0, 12.0);
        let next = track(&ts, &f1);
        assert!(next.position.dist_sq(GridPosition::new(54.0, 37.0)).sqrt() <= 1.0);
        assert!(next.confidence > 0.9);
        // Sub-cell motion is refined below one pixel.
        let f2 = scene(56.4, 38.6, 12.0);
        let next2 = track(&next, &f2);
        assert!(next2.position.dist_sq(GridPosition::new(56.4, 38.6)).sqrt() <= 0.5);
    }

    #[test]
    fn dropout_signals_reacquisition() {
        let f0 = scene(50.0, 40.0, 12.0);
        let cfg = TrackerConfig::default();
        let ts = TrackerState::init(&f0, GridPosition::new(50.0, 40.0), 24.0, &cfg);
        let empty = Image::filled(120, 100, 200u8);
        assert!(track(&ts, &empty).confidence < cfg.reacquire_below);
    }

    #[test]
    fn template_blends_toward_new_patch() {
        let f0 = scene(50.0, 40.0, 12.0);
        let ts = TrackerState::init(&f0, GridPosition::new(50.0, 40.0), 24.0, &TrackerConfig::default());
        let darker = f0.map(|v| v.saturating_sub(10));
        let next = track(&ts, &darker);
        let (a, b) = (ts.template().get(0, 0), next.template().get(0, 0));
        assert!((b - (a - 1.0)).abs() < 1e-4, "{a} -> {b}");
    }
}
