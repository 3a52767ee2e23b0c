//! Command-line driver for the thematic mapping pipeline.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
