//! Synthetic camera: bright field, dark anti-aliased disks, Gaussian sensor noise.

use std::sync::OnceLock;

use swarm_core::{derive_seed, ChannelConfig, Exec, GridPosition, Mt19937};

use crate::error::{Error, Result};
use crate::image::{FrameHi, Image, HI_RES};
use crate::select::SWARM_DIAMETER_UM;

pub const CONTAMINANT_DIAMETER_UM: (f64, f64) = (10.0, 50.0);
pub const BUBBLE_DIAMETER_UM: (f64, f64) = (2.0, 20.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk {
    pub center: GridPosition,
    pub diameter_um: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub channel: ChannelConfig,
    pub swarm: Option<Disk>,
    pub contaminants: Vec<Disk>,
    /// Free bubbles not yet part of the swarm.
    pub bubbles: Vec<Disk>,
    pub background: u16,
    /// Intensity at full disk coverage.
    pub foreground: u16,
    /// Sensor noise standard deviation in 16-bit units.
    pub noise_sigma: f64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            channel: ChannelConfig::default(),
            swarm: None,
            contaminants: Vec::new(),
            bubbles: Vec::new(),
            background: 50_000,
            foreground: 8_000,
            noise_sigma: 1_500.0,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        self.channel.validate().map_err(|e| Error::Scene(e.to_string()))?;
        let check = |d: &Disk, (lo, hi): (f64, f64), what: &str| {
            if !(lo..=hi).contains(&d.diameter_um) || !d.center.x.is_finite() || !d.center.y.is_finite() {
                return Err(Error::Scene(format!(
                    "{what} diameter {} um outside [{lo}, {hi}] or position not finite",
                    d.diameter_um
                )));
            }
            Ok(())
        };
        if let Some(s) = &self.swarm {
            check(s, SWARM_DIAMETER_UM, "swarm")?;
        }
        for c in &self.contaminants {
            check(c, CONTAMINANT_DIAMETER_UM, "contaminant")?;
        }
        for b in &self.bubbles {
            check(b, BUBBLE_DIAMETER_UM, "bubble")?;
        }
        if self.foreground >= self.background {
            return Err(Error::Scene("disks must be darker than the background".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Scene(format!("noise sigma must be >= 0, got {}", self.noise_sigma)));
        }
        Ok(())
    }

    fn disks(&self) -> impl Iterator<Item = &Disk> {
        self.swarm.iter().chain(&self.contaminants).chain(&self.bubbles)
    }
}

/// Inverse standard normal CDF (Acklam's rational approximation, relative
/// error below 1.2e-9).
#[allow(clippy::excessive_precision)]
fn inv_norm_cdf(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.383577518672690e2,
        -3.066479806614716e1,
        2.506628277459239,
    ];
    const B: [f64; 5] =
        [-5.447609879822406e1, 1.615858368580409e2, -1.556989798598866e2, 6.680131188771972e1, -1.328068155288572e1];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838,
        -2.549732539343734,
        4.374664141464968,
        2.938163982698783,
    ];
    const D: [f64; 4] = [7.784695709041462e-3, 3.224671290700398e-1, 2.445134137142996, 3.754408661907416];
    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < 0.02425 {
        tail((-2.0 * p.ln()).sqrt())
    } else if p > 1.0 - 0.02425 {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// Standard normal quantiles at the midpoints of 65,536 equal-probability
/// bins. Sensor noise indexes it with 16-bit halves of generator output, two
/// samples per draw, which is an order of magnitude cheaper than Box-Muller.
fn noise_table() -> &'static [f32] {
    static TABLE: OnceLock<Vec<f32>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = 1usize << 16;
        (0..n).map(|i| inv_norm_cdf((i as f64 + 0.5) / n as f64) as f32).collect()
    })
}

/// Disk in continuous hi-res pixel units (pixel `i` spans `[i, i + 1)`).
struct PxDisk {
    cx: f64,
    cy: f64,
    r: f64,
}

/// Renders `HI_RES`² pixels. Each row draws its noise from its own generator
/// seeded from `(seed, row)`, so the frame does not depend on `exec`.
pub fn render_frame(scene: &SceneSpec, seed: u32, exec: Exec) -> FrameHi {
    let px_per_um = HI_RES as f64 / scene.channel.width_um;
    let disks: Vec<PxDisk> = scene
        .disks()
        .map(|d| {
            let (x, y) = scene.channel.to_physical(d.center);
            PxDisk { cx: x * px_per_um, cy: y * px_per_um, r: 0.5 * d.diameter_um * px_per_um }
        })
        .collect();
    let bg = scene.background as f64;
    let depth = bg - scene.foreground as f64;
    let sigma = scene.noise_sigma;

    let mut data = vec![0u16; HI_RES * HI_RES];
    swarm_core::par::for_each_chunk_mut(exec, &mut data, HI_RES, |row, out| {
        let mut cover = vec![0.0f64; HI_RES];
        let yc = row as f64 + 0.5;
        for d in &disks {
            let dy = yc - d.cy;
            let reach = d.r + 0.5;
            if dy.abs() > reach {
                continue;
            }
            let half = (reach * reach - dy * dy).max(0.0).sqrt();
            let x0 = ((d.cx - half - 0.5).floor().max(0.0)) as usize;
            let x1 = ((d.cx + half + 0.5).ceil().min(HI_RES as f64)) as usize;
            for (x, c) in cover.iter_mut().enumerate().take(x1).skip(x0) {
                let dist = ((x as f64 + 0.5 - d.cx).powi(2) + dy * dy).sqrt();
                let a = (d.r - dist + 0.5).clamp(0.0, 1.0);
                if a > *c {
                    *c = a;
                }
            }
        }
        let put = |o: &mut u16, v: f64| *o = v.round().clamp(0.0, 65535.0) as u16;
        if sigma > 0.0 {
            let table = noise_table();
            let mut rng = Mt19937::new(derive_seed(seed, row as u64));
            for (o, c) in out.chunks_mut(2).zip(cover.chunks(2)) {
                let u = rng.next_u32();
                let z = [table[(u & 0xffff) as usize], table[(u >> 16) as usize]];
                for ((o, &c), z) in o.iter_mut().zip(c).zip(z) {
                    put(o, bg - depth * c + sigma * z as f64);
                }
            }
        } else {
            for (o, &c) in out.iter_mut().zip(&cover) {
                put(o, bg - depth * c);
            }
        }
    });
    Image::from_vec(HI_RES, HI_RES, data).expect("frame size")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn centered_swarm(d: f64) -> SceneSpec {
        let ch = ChannelConfig::default();
        let c = ch.from_physical(200.0, 200.0);
        SceneSpec { swarm: Some(Disk { center: c, diameter_um: d }), noise_sigma: 0.0, ..Default::default() }
    }

    #[test]
    fn empty_noiseless_scene_is_constant() {
        let s = SceneSpec { noise_sigma: 0.0, ..Default::default() };
        let f = render_frame(&s, 1, Exec::Parallel);
        assert!(f.data().iter().all(|&v| v == s.background));
    }

    #[test]
    fn centered_swarm_diameter_in_pixels() {
        let s = centered_swarm(100.0);
        let f = render_frame(&s, 1, Exec::Parallel);
        let mid = (s.background as u32 + s.foreground as u32) / 2;
        let dark_in_row = f.row(1024).iter().filter(|&&v| (v as u32) < mid).count();
        let dark_in_col = (0..HI_RES).filter(|&y| (f.get(1024, y) as u32) < mid).count();
        assert_eq!(dark_in_row, 512);
        assert_eq!(dark_in_col, 512);
        assert_eq!(f.get(1024, 1024), s.foreground);
        assert_eq!(f.get(0, 0), s.background);
    }

    #[test]
    fn deterministic_and_strategy_independent() {
        let s = SceneSpec { noise_sigma: 900.0, ..centered_swarm(80.0) };
        let a = render_frame(&s, 7, Exec::Parallel);
        let b = render_frame(&s, 7, Exec::Sequential);
        assert_eq!(a, b);
        assert_ne!(a, render_frame(&s, 8, Exec::Parallel));
    }

    #[test]
    fn noise_table_is_standard_normal() {
        assert!((inv_norm_cdf(0.975) - 1.959963984540054).abs() < 1e-8);
        assert!((inv_norm_cdf(0.001) + 3.090232306167814).abs() < 1e-8);
        assert_eq!(inv_norm_cdf(0.5), 0.0);
        let t = noise_table();
        assert!(t.windows(2).all(|w| w[0] < w[1]));
        let mean = t.iter().map(|&v| v as f64).sum::<f64>() / t.len() as f64;
        let var = t.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / t.len() as f64;
        assert!(mean.abs() < 1e-6);
        assert!((var - 1.0).abs() < 1e-3, "var {var}");
    }

    #[test]
    fn noise_has_requested_sigma() {
        let s = SceneSpec { noise_sigma: 1000.0, ..Default::default() };
        let f = render_frame(&s, 4, Exec::Parallel);
        let n = f.data().len() as f64;
        let mean = f.data().iter().map(|&v| v as f64).sum::<f64>() / n;
        let sd = (f.data().iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!((mean - s.background as f64).abs() < 5.0);
        assert!((sd - 1000.0).abs() < 5.0, "sd {sd}");
    }

    #[test]
    fn validation_enforces_ranges() {
        assert!(centered_swarm(100.0).validate().is_ok());
        assert!(centered_swarm(20.0).validate().is_err());
        let mut s = centered_swarm(100.0);
        s.contaminants.push(Disk { center: GridPosition::new(10.0, 10.0), diameter_um: 80.0 });
        assert!(s.validate().is_err());
    }
}
