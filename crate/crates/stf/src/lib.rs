//! CPU laboratory for stochastic texture filtering with cross-pixel sample
//! reuse. A simulated SIMT wave samples one texel per pixel, broadcasts the
//! samples across its lanes, and each pixel combines its neighbors' taps
//! with one of several reuse estimators. Everything is deterministic for a
//! fixed seed, in parallel and sequential execution alike.

// channel math indexes [f64; 4] in lockstep across several arrays
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod estimators;
pub mod exec;
pub mod experiments;
pub mod footprint_opt;
pub mod metrics;
pub mod noise;
pub mod render;
pub mod texture;
pub mod wave;

pub use error::StfError;
