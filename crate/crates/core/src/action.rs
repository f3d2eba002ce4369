//! Actuation space: which transducer fires, at what voltage and frequency.
//!
//! Transducer numbering: k=1 sits on the left wall (x = 0) and pushes +x,
//! k=2 on the right wall pushes -x, k=3 on the bottom wall (y = 0) pushes +y,
//! k=4 on the top wall pushes -y.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::DisplacementVector;

pub const N_TRANSDUCERS: usize = 4;
pub const MAX_VPP: f64 = 20.0;
pub const MAX_F_MHZ: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionSpec {
    /// Transducer index, 1-based.
    pub k: u8,
    pub v_pp: f64,
    pub f_mhz: f64,
}

impl ActionSpec {
    pub fn new(k: u8, v_pp: f64, f_mhz: f64) -> Result<Self> {
        let a = ActionSpec { k, v_pp, f_mhz };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=N_TRANSDUCERS as u8).contains(&self.k) {
            return Err(Error::Config(format!("transducer index {} not in 1..=4", self.k)));
        }
        if !(0.0..=MAX_VPP).contains(&self.v_pp) {
            return Err(Error::Config(format!("v_pp {} outside [0, 20] V", self.v_pp)));
        }
        if !(0.0..=MAX_F_MHZ).contains(&self.f_mhz) {
            return Err(Error::Config(format!("frequency {} outside [0, 5] MHz", self.f_mhz)));
        }
        Ok(())
    }

    /// Zero-based index into per-transducer tables.
    pub fn index(&self) -> usize {
        self.k as usize - 1
    }

    /// Per-transducer (v_pp, f) drive vector implied by a single-transducer action:
    /// the chosen element carries this action's drive, the others are off.
    pub fn drive_vector(&self) -> [(f64, f64); N_TRANSDUCERS] {
        let mut out = [(0.0, 0.0); N_TRANSDUCERS];
        out[self.index()] = (self.v_pp, self.f_mhz);
        out
    }
}

/// Unit vector pointing away from the wall carrying transducer `k` (1-based).
pub fn wall_normal(k: u8) -> DisplacementVector {
    match k {
        1 => DisplacementVector::new(1.0, 0.0),
        2 => DisplacementVector::new(-1.0, 0.0),
        3 => DisplacementVector::new(0.0, 1.0),
        4 => DisplacementVector::new(0.0, -1.0),
        _ => panic!("transducer index {k} not in 1..=4"),
    }
}

/// The pruned action set: transducer j alone at full voltage on its resonance.
pub fn canonical_actions(resonances: &[f64; N_TRANSDUCERS]) -> Result<[ActionSpec; N_TRANSDUCERS]> {
    for (i, &f) in resonances.iter().enumerate() {
        if !(0.0..=MAX_F_MHZ).contains(&f) || !f.is_finite() {
            return Err(Error::ResonanceOutOfRange { k: i as u8 + 1, value: f, min: 0.0, max: MAX_F_MHZ });
        }
    }
    Ok(std::array::from_fn(|i| ActionSpec { k: i as u8 + 1, v_pp: MAX_VPP, f_mhz: resonances[i] }))
}
