//! Physics stand-in for the microfluidic chip.
//!
//! Swarm velocity under a single-transducer action is
//!
//! ```text
//! v = (V_pp / 20) * exp(-(f - f0[k])^2 / (2 sigma_f^2)) * v_max * U_k(p, t)
//! ```
//!
//! where `U_k` is the unit vector pointing away from wall `k`, shrunk by
//! `1 - amp * g_k(p)` and rotated by an angle field
//! `amp^rotation_exponent * rotation_gain * (s(p) + drift_share * d(p, t))`. `s` is a static
//! smooth random field, `d` is a smooth field whose phases advance by
//! `drift_rate` radians per frame. With `amp = 0` the field is exactly the
//! wall normal at full speed.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::action::{canonical_actions, wall_normal, ActionSpec, MAX_VPP, N_TRANSDUCERS};
use crate::error::{Error, Result};
use crate::geometry::{ChannelConfig, DisplacementVector, GridPosition};
use crate::mt19937::{derive_seed, Mt19937};

pub const FRAME_RATE: f64 = 33.0;
pub const SWARM_DIAMETER_UM: (f64, f64) = (50.0, 200.0);
pub const BUBBLE_RADIUS_UM: (f64, f64) = (1.0, 10.0);
pub const MAX_DISTURBED_AMP: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantConfig {
    pub resonances_mhz: [f64; N_TRANSDUCERS],
    pub sigma_f_mhz: f64,
    pub v_max_cells_per_s: f64,
    pub noise_sigma_cells: f64,
    /// Phase advance of the drifting perturbation, radians per frame.
    pub drift_rate: f64,
    pub perturbation_amp: f64,
    /// Peak rotation (radians) of the field at `perturbation_amp = 1`.
    pub rotation_gain_rad: f64,
    /// Rotation grows as `perturbation_amp` to this power, so a mild
    /// perturbation bends the field little and a strong one bends it a lot.
    pub rotation_exponent: f64,
    /// Weight of the drifting component relative to the static one.
    pub drift_share: f64,
    /// Multiplicative responsiveness decay per frame.
    pub responsiveness_decay: f64,
    /// Secondary attraction gain: speed in cells/s is `gain * r_j^3 / d^2`
    /// with radii and separation in micrometres.
    pub bjerknes_gain: f64,
    /// Seeds the spatial perturbation field ("which chip").
    pub seed: u32,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self {
            resonances_mhz: [2.0, 2.0, 2.225, 2.0],
            sigma_f_mhz: 0.05,
            v_max_cells_per_s: 75.0,
            noise_sigma_cells: 1.0,
            drift_rate: 0.002,
            perturbation_amp: 0.3,
            rotation_gain_rad: 7.0,
            rotation_exponent: 2.0,
            drift_share: 0.1,
            responsiveness_decay: 0.99995,
            bjerknes_gain: 20.0,
            seed: 1,
        }
    }
}

impl PlantConfig {
    pub fn validate(&self) -> Result<()> {
        for (i, &f) in self.resonances_mhz.iter().enumerate() {
            if !(1.5..=2.5).contains(&f) {
                return Err(Error::ResonanceOutOfRange { k: i as u8 + 1, value: f, min: 1.5, max: 2.5 });
            }
        }
        let positive = [
            ("sigma_f_mhz", self.sigma_f_mhz),
            ("v_max_cells_per_s", self.v_max_cells_per_s),
            ("responsiveness_decay", self.responsiveness_decay),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("noise_sigma_cells", self.noise_sigma_cells),
            ("drift_rate", self.drift_rate),
            ("rotation_gain_rad", self.rotation_gain_rad),
            ("rotation_exponent", self.rotation_exponent),
            ("drift_share", self.drift_share),
            ("bjerknes_gain", self.bjerknes_gain),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.perturbation_amp) {
            return Err(Error::Config(format!("perturbation_amp must lie in [0, 1], got {}", self.perturbation_amp)));
        }
        if self.responsiveness_decay > 1.0 {
            return Err(Error::Config("responsiveness_decay must be <= 1".into()));
        }
        Ok(())
    }

    pub fn zero_noise(mut self) -> Self {
        self.noise_sigma_cells = 0.0;
        self
    }

    pub fn canonical_actions(&self) -> [ActionSpec; N_TRANSDUCERS] {
        canonical_actions(&self.resonances_mhz).expect("validated resonances")
    }
}

/// Environmental change: faster drift and a stronger perturbation, capped.
pub fn inject_disturbance(cfg: &PlantConfig) -> PlantConfig {
    PlantConfig {
        drift_rate: cfg.drift_rate * 5.0,
        perturbation_amp: (cfg.perturbation_amp + 0.3).min(MAX_DISTURBED_AMP),
        ..cfg.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Mode {
    kx: f64,
    ky: f64,
    phase: f64,
}

impl Mode {
    fn random(rng: &mut Mt19937, min_wavelength: f64, max_wavelength: f64) -> Self {
        let dir = rng.uniform(0.0, TAU);
        let wavelength = rng.uniform(min_wavelength, max_wavelength);
        let k = TAU / wavelength;
        Mode { kx: k * dir.cos(), ky: k * dir.sin(), phase: rng.uniform(0.0, TAU) }
    }

    fn eval(&self, p: GridPosition, extra_phase: f64) -> f64 {
        (self.kx * p.x + self.ky * p.y + self.phase + extra_phase).cos()
    }
}

fn field_sum(modes: &[Mode], p: GridPosition, extra_phase: f64) -> f64 {
    let s: f64 = modes.iter().map(|m| m.eval(p, extra_phase)).sum();
    s / (modes.len() as f64 / 2.0).sqrt()
}

/// A configured chip: plant parameters plus the precomputed perturbation field.
#[derive(Debug, Clone)]
pub struct Plant {
    cfg: PlantConfig,
    channel: ChannelConfig,
    static_modes: Vec<Mode>,
    drift_modes: Vec<Mode>,
    magnitude_modes: [Vec<Mode>; N_TRANSDUCERS],
}

impl Plant {
    pub fn new(cfg: PlantConfig, channel: ChannelConfig) -> Result<Self> {
        cfg.validate()?;
        channel.validate()?;
        let n = channel.grid_n as f64;
        let mut rng = Mt19937::new(derive_seed(cfg.seed, 0x5eed_f1e1d));
        let static_modes = (0..6).map(|_| Mode::random(&mut rng, 0.5 * n, 1.4 * n)).collect();
        let drift_modes = (0..4).map(|_| Mode::random(&mut rng, 0.5 * n, 1.4 * n)).collect();
        let magnitude_modes =
            std::array::from_fn(|_| (0..3).map(|_| Mode::random(&mut rng, 0.4 * n, 1.2 * n)).collect());
        Ok(Self { cfg, channel, static_modes, drift_modes, magnitude_modes })
    }

    pub fn config(&self) -> &PlantConfig {
        &self.cfg
    }

    pub fn channel(&self) -> &ChannelConfig {
        &self.channel
    }

    pub fn frame_dt(&self) -> f64 {
        1.0 / FRAME_RATE
    }

    /// Scalar response to the drive: linear in voltage, Gaussian in frequency.
    pub fn drive_gain(&self, a: &ActionSpec) -> f64 {
        let df = a.f_mhz - self.cfg.resonances_mhz[a.index()];
        let s = self.cfg.sigma_f_mhz;
        (a.v_pp / MAX_VPP) * (-(df * df) / (2.0 * s * s)).exp()
    }

    /// Unit-drive field of transducer `k` at position `p` and frame `t`.
    pub fn base_field(&self, k: u8, p: GridPosition, t: u64) -> DisplacementVector {
        let amp = self.cfg.perturbation_amp;
        let n = wall_normal(k);
        if amp == 0.0 {
            return n;
        }
        let drift_phase = self.cfg.drift_rate * t as f64;
        let s = field_sum(&self.static_modes, p, 0.0).tanh();
        let d = field_sum(&self.drift_modes, p, drift_phase).tanh();
        let angle = amp.powf(self.cfg.rotation_exponent) * self.cfg.rotation_gain_rad * (s + self.cfg.drift_share * d);
        let g = 0.25 * (1.0 + field_sum(&self.magnitude_modes[k as usize - 1], p, 0.0).tanh());
        n.rotated(angle) * (1.0 - amp * g)
    }

    /// Deterministic noise-free velocity (cells/s).
    pub fn ground_truth_velocity(&self, p: GridPosition, a: &ActionSpec, t: u64) -> DisplacementVector {
        let gain = self.drive_gain(a);
        if gain == 0.0 {
            return DisplacementVector::ZERO;
        }
        self.base_field(a.k, p, t) * (gain * self.cfg.v_max_cells_per_s)
    }

    /// One explicit Euler step of swarm transport, clamped to the channel.
    pub fn transport_step(&self, state: &SwarmState, a: &ActionSpec, dt: f64, rng: &mut Mt19937) -> SwarmState {
        debug_assert!(dt > 0.0);
        let v = self.ground_truth_velocity(state.centroid, a, state.step);
        let sigma = self.cfg.noise_sigma_cells * dt.sqrt();
        let noise = DisplacementVector::new(rng.normal(sigma), rng.normal(sigma));
        let moved = state.centroid + v * (state.responsiveness * dt) + noise;
        SwarmState {
            centroid: self.channel.clamp(moved),
            diameter_um: state.diameter_um,
            responsiveness: state.responsiveness * self.cfg.responsiveness_decay,
            step: state.step + 1,
        }
    }

    /// Gathers bubbles into a swarm by actuating a pseudo-randomly chosen
    /// transducer each frame while mutual attraction pulls bubbles together.
    ///
    /// Each pair attracts with force `gain * r_i^3 r_j^3 / d^2`; a bubble's
    /// speed is that force divided by its own volume. Bubbles closer than the
    /// sum of their radii merge, conserving volume.
    pub fn coalesce(
        &self,
        bubbles: Vec<Bubble>,
        rng: &mut Mt19937,
        start_step: u64,
        max_steps: usize,
    ) -> Result<Coalescence> {
        let mut bubbles = bubbles;
        if bubbles.iter().filter(|b| b.alive).count() == 0 {
            return Err(Error::Config("coalescence needs at least one bubble".into()));
        }
        let total: f64 = bubbles.iter().filter(|b| b.alive).map(Bubble::volume).sum();
        let dt = self.frame_dt();
        let cell_um = self.channel.cell_um();
        let actions = self.cfg.canonical_actions();
        let sigma = self.cfg.noise_sigma_cells * dt.sqrt();

        merge_overlapping(&mut bubbles, cell_um);
        for step in 0..=max_steps {
            let (largest, vol) = bubbles
                .iter()
                .enumerate()
                .filter(|(_, b)| b.alive)
                .map(|(i, b)| (i, b.volume()))
                .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
            if vol >= 0.9 * total {
                let b = &bubbles[largest];
                let swarm = SwarmState {
                    centroid: b.position,
                    diameter_um: (2.0 * b.radius_um).clamp(SWARM_DIAMETER_UM.0, SWARM_DIAMETER_UM.1),
                    responsiveness: 1.0,
                    step: start_step,
                };
                return Ok(Coalescence { swarm, bubbles, steps: step });
            }
            if step == max_steps {
                return Err(Error::CoalescenceFailed { steps: max_steps, fraction: vol / total });
            }

            let k = rng.below(N_TRANSDUCERS as u32) as usize;
            let t = start_step + step as u64;
            let alive: Vec<usize> = (0..bubbles.len()).filter(|&i| bubbles[i].alive).collect();
            let mut moves: Vec<DisplacementVector> =
                alive.iter().map(|&i| self.ground_truth_velocity(bubbles[i].position, &actions[k], t) * dt).collect();
            for (ai, &i) in alive.iter().enumerate() {
                let bi = &bubbles[i];
                let mut pull = DisplacementVector::ZERO;
                let mut nearest = f64::INFINITY;
                for &j in &alive {
                    if i == j {
                        continue;
                    }
                    let bj = &bubbles[j];
                    let sep = bj.position - bi.position;
                    let d_cells = sep.norm();
                    if d_cells == 0.0 {
                        continue;
                    }
                    nearest = nearest.min(d_cells);
                    let d_um = d_cells * cell_um;
                    let speed = self.cfg.bjerknes_gain * bj.volume_r3() / (d_um * d_um);
                    pull = pull + sep * (speed / d_cells);
                }
                let mut step_pull = pull * dt;
                let len = step_pull.norm();
                if len > 0.45 * nearest {
                    step_pull = step_pull * (0.45 * nearest / len);
                }
                moves[ai] = moves[ai] + step_pull;
            }
            for (ai, &i) in alive.iter().enumerate() {
                let noise = DisplacementVector::new(rng.normal(sigma), rng.normal(sigma));
                let b = &mut bubbles[i];
                b.position = self.channel.clamp(b.position + moves[ai] + noise);
            }
            merge_overlapping(&mut bubbles, cell_um);
        }
        unreachable!("loop returns on the final step")
    }

    /// Seeds `n` bubbles with radii in `radius_um` uniformly inside a disk.
    pub fn seed_bubbles(
        &self,
        rng: &mut Mt19937,
        n: usize,
        center: GridPosition,
        spread_cells: f64,
        radius_um: (f64, f64),
    ) -> Vec<Bubble> {
        (0..n)
            .map(|_| {
                let r = spread_cells * rng.next_f64().sqrt();
                let a = rng.uniform(0.0, TAU);
                let p = self.channel.clamp(GridPosition::new(center.x + r * a.cos(), center.y + r * a.sin()));
                Bubble::new(p, rng.uniform(radius_um.0, radius_um.1))
            })
            .collect()
    }
}

fn merge_overlapping(bubbles: &mut [Bubble], cell_um: f64) {
    loop {
        let mut merged = false;
        for i in 0..bubbles.len() {
            if !bubbles[i].alive {
                continue;
            }
            for j in (i + 1)..bubbles.len() {
                if !bubbles[j].alive {
                    continue;
                }
                let d_um = bubbles[i].position.dist_sq(bubbles[j].position).sqrt() * cell_um;
                if d_um < bubbles[i].radius_um + bubbles[j].radius_um {
                    let (vi, vj) = (bubbles[i].volume_r3(), bubbles[j].volume_r3());
                    let w = vj / (vi + vj);
                    let (pi, pj) = (bubbles[i].position, bubbles[j].position);
                    bubbles[i].position = GridPosition::new(pi.x + w * (pj.x - pi.x), pi.y + w * (pj.y - pi.y));
                    bubbles[i].radius_um = (vi + vj).cbrt();
                    bubbles[j].alive = false;
                    merged = true;
                }
            }
        }
        if !merged {
            return;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bubble {
    pub position: GridPosition,
    pub radius_um: f64,
    pub alive: bool,
}

impl Bubble {
    pub fn new(position: GridPosition, radius_um: f64) -> Self {
        Self { position, radius_um, alive: true }
    }

    /// `r^3`, proportional to volume.
    pub fn volume_r3(&self) -> f64 {
        self.radius_um.powi(3)
    }

    pub fn volume(&self) -> f64 {
        4.0 / 3.0 * std::f64::consts::PI * self.volume_r3()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coalescence {
    pub swarm: SwarmState,
    pub bubbles: Vec<Bubble>,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwarmState {
    pub centroid: GridPosition,
    pub diameter_um: f64,
    pub responsiveness: f64,
    /// Frame counter; drives the time-varying part of the field.
    pub step: u64,
}

impl SwarmState {
    pub fn new(centroid: GridPosition, diameter_um: f64) -> Self {
        Self { centroid, diameter_um, responsiveness: 1.0, step: 0 }
    }
}
