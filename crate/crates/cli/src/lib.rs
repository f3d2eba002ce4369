//! Library side of `swarmctl`: configuration, subcommands and SVG output.

pub mod commands;
pub mod config;
pub mod svg;

pub use commands::{cmd_collect, cmd_fit, cmd_replay, cmd_run, cmd_vision, exit_code, EXIT_INPUT};
pub use config::{ExperimentConfig, ObserveMode, Overrides, VisionSettings};
