//! Simulation, learning and control for acoustically steered microbubble swarms.
//!
//! The crate is organised around the closed loop: a [`plant::Plant`] stands in
//! for the chip, [`gridsearch`] sweeps the action space to build a dataset,
//! [`dynamics`] turns that dataset into global and local dynamics matrices,
//! and [`policy`] drives the swarm along a [`path::TargetPath`].

pub mod action;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod gridsearch;
pub mod mt19937;
pub mod par;
pub mod path;
pub mod plant;
pub mod policy;

pub use action::{canonical_actions, ActionSpec, N_TRANSDUCERS};
pub use error::{Error, Result};
pub use geometry::{ChannelConfig, DisplacementVector, GridPosition};
pub use mt19937::{derive_seed, Mt19937};
pub use par::Exec;
pub use path::{build_path, goal_reached, PathShape, TargetPath};
pub use plant::{inject_disturbance, Plant, PlantConfig, SwarmState};
