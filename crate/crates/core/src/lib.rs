//! Belief-propagation training for latent Dirichlet allocation with
//! data-parallel workers and frequency-scheduled parameter synchronization.
//!
//! The crate provides:
//!
//! - [`corpus`]: UCI bag-of-words loading, word frequency tables, power-law
//!   fitting, and held-out evaluation splits.
//! - [`bp`]: the synchronous belief-propagation engine (message updates,
//!   sufficient statistics, parameter estimation, perplexity, fold-in).
//! - [`gibbs`]: collapsed Gibbs sampling and its approximate data-parallel
//!   variant, used as a baseline.
//! - [`parallel`]: the data-parallel runner with delta-based global
//!   synchronization and deterministic reductions.
//! - [`schedule`]: vocabulary partitioning by frequency rank and per-part
//!   synchronization periods, plus closed-form communication-cost formulas.
//! - [`metrics`]: per-iteration run records, speedup/CCR, and CSV/JSON
//!   report emission.
//! - [`model`]: on-disk model format (JSON header + raw f64 payload).

pub mod bp;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod gibbs;
pub mod metrics;
pub mod model;
pub mod parallel;
pub mod schedule;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
