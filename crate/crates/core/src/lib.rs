//! Numerical engines for multiple-access system analysis.
//!
//! This crate computes the performance quantities that govern next-generation
//! multiple-access design:
//!
//! - Gaussian scalar/vector MAC and BC capacity regions, SIC corner points,
//!   iterative water-filling, DPC rates and BC sum capacity ([`capacity`]);
//! - achievable rates for beamformer-based, cluster-based, and cluster-free
//!   MIMO-NOMA with SIC-feasibility validation ([`noma`]);
//! - linear uplink combiners (MRC/ZF/LMMSE), downlink precoders
//!   (MRT/ZF/RZF/SLNR/LMMSE), and hybrid digital-analog SINR ([`beamforming`]);
//! - far-field, isotropic, sparse-mmWave, and near-field spherical-wave channel
//!   models, beamspace transforms, and channel-correlation theory checks
//!   ([`channels`]);
//! - near-field analog-beamfocusing SNR analysis, hybrid-beamforming SDMA
//!   sweeps, and continuous-aperture (CAP) Green's-function SINR ([`nearfield`]);
//! - mutual-information sensing metrics and the sensing-rate/communication-rate
//!   regions of integrated sensing and communication, with orthogonal-resource
//!   baselines ([`isac`]).
//!
//! All angles are radians and all powers are linear (watts) at this layer;
//! degree and dB conversions belong to callers. All routines are pure
//! functions of their inputs (randomness enters only through explicit seeds),
//! so everything here is safe for unrestricted concurrent use.

pub mod beamforming;
pub mod capacity;
pub mod channels;
pub mod foundation;
pub mod isac;
pub mod linalg;
pub mod nearfield;
pub mod noma;
pub mod rng;
pub mod special;

use thiserror::Error;

/// Unified error type for all engines in this crate.
#[derive(Debug, Error)]
pub enum MaError {
    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// Matrix dimensions do not agree with the operation's contract.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    /// A required matrix factorization or inversion failed.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// An iterative solver exhausted its iteration budget.
    #[error("no convergence after {iterations} iterations (last improvement {last_improvement:.3e})")]
    NoConvergence {
        iterations: usize,
        last_improvement: f64,
    },
    /// A zero-forcing or equalizer construction is dimensionally infeasible.
    #[error("infeasible: {0}")]
    Infeasible(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, MaError>;
