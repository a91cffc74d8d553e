//! Experiment runner around [`ma_lab_core`]: scenario configs, a registry of
//! named experiments, deterministic execution, and CSV/JSON export.
//!
//! The binary (`ma-lab`) is a thin wrapper over this library so the config,
//! table, and experiment layers stay directly testable.

pub mod config;
pub mod experiments;
pub mod table;
