//! Library side of the `bates` command-line tool: configuration handling
//! and the pricing, convergence and benchmark experiments.

pub mod config;
pub mod experiments;
pub mod output;

pub use config::{Method, Preset, Settings};
