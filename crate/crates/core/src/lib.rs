//! Simulation and verification toolkit for order-two U-statistics of
//! uniformly ergodic Markov chains.
//!
//! The crate is organized bottom-up:
//!
//! - [`chain`]: finite, AR(1) and ARCH models, simulation, ergodicity constants.
//! - [`kernels`]: index-dependent kernel families, canonicality, Hoeffding projection.
//! - [`ustat`]: weighted U-statistics, the martingale/remainder split, rank statistics.
//! - [`bounds`]: variance proxies, depth `t_n`, tail-bound right-hand sides.
//! - [`splitting`]: the split chain, regeneration times, block sums, Orlicz norms.
//! - [`experiments`]: replicated Monte Carlo studies with deterministic reports.

pub mod bounds;
pub mod chain;
pub mod error;
pub mod experiments;
pub mod kernels;
pub mod rng;
pub mod splitting;
pub mod ustat;

pub use error::{Error, Result};

/// Formats a float with 17 significant digits, the fixed CSV number format.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        // Avoid "-0.0000000000000000e0" leaking into reports.
        return format!("{:.16e}", 0.0);
    }
    format!("{x:.16e}")
}
