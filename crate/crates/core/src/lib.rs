//! Simulator for noise-based imaging with multi-spatial-mode twin beams.
//!
//! A shaped local oscillator (LO) reads the quadrature noise of a twin-beam
//! source whose conjugate arm passes a binary mask. The noise power tracks the
//! overlap between LO and mask; measuring it with the probe–conjugate joint
//! quadrature (quantum) rather than the conjugate alone (classical) reduces
//! the overlap uncertainty.
//!
//! - [`gaussian`]: two-mode Gaussian covariance matrices, loss and squeezing calibration.
//! - [`bitmap`], [`scene`], [`font`]: masks, LO shapes and coherence-cell decomposition.
//! - [`noise`]: per-technique noise in shot-noise units.
//! - [`trace`]: spectrum-analyzer trace simulation and segment statistics.
//! - [`estimation`]: curve fits, overlap uncertainty, enhancement, alphabet ranking.
//! - [`config`], [`pipeline`], [`output`]: configuration, runs and artifacts.

pub mod bitmap;
pub mod config;
pub mod error;
pub mod estimation;
pub mod font;
pub mod gaussian;
pub mod noise;
pub mod output;
pub mod pipeline;
pub mod scene;
pub mod seed;
pub mod trace;

pub use error::{Error, Result};
