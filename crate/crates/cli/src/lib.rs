//! Command-line front end: configuration, presets, output files and dispatch.

pub mod commands;
pub mod config;
pub mod output;
