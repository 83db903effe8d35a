//! Joint direction-of-arrival and time-delay estimation from
//! frequency-domain array snapshots.
//!
//! The snapshot model: an M-sensor narrowband array observes K active
//! subcarriers of a known training spectrum through L specular paths,
//!
//! ```text
//! x(k) = Σ_l β_l · a(θ_l) · S(ω_k) · e^{−jω_k τ_l} + w(k)
//! ```
//!
//! with per-path azimuth θ, delay τ, and complex gain β. The crate
//! provides:
//!
//! * [`model`]: snapshot synthesis and seeded noise ([`geometry`],
//!   [`grid`] supply steering vectors and subcarrier frequencies);
//! * [`aml`]: the alternating maximum-likelihood estimator that
//!   concentrates the objective and alternates between delay-domain and
//!   angle-domain least-squares fits;
//! * [`doa_only`]: the azimuth-only ML baseline that ignores delay
//!   structure;
//! * [`crb`]: deterministic Cramér-Rao bounds, joint and azimuth-only,
//!   plus the equal-delay and single-path closed forms;
//! * [`mc`]: a reproducible Monte Carlo harness with parameter sweeps
//!   and CSV output;
//! * [`csi_io`] and [`config`]: the snapshot file format and the JSON
//!   experiment configuration.
//!
//! Internally angles are radians and delays seconds; degrees and
//! nanoseconds exist only at the configuration and reporting boundary.

pub use nalgebra;
pub use num_complex;

pub mod aml;
pub mod config;
pub mod crb;
pub mod csi_io;
pub mod doa_only;
pub mod error;
pub mod geometry;
pub mod grid;
mod linalg;
pub mod mc;
pub mod model;

pub use error::{Error, Result};
