//! Numerics for joint data transmission and eavesdropper detection over a
//! lossy bosonic fiber with back-scatter.
//!
//! * [`fiber`] builds the baseline and attacked impulse responses and the
//!   Gram-Toeplitz symbol of their difference.
//! * [`spectral`] handles finite-`n` spectra, symbol extrema and Szegő limits.
//! * [`rates`] turns those into capacities, detection exponents and the
//!   achievable `(R, D)` region.
//! * [`detection`] and [`montecarlo`] are the independent finite-`n` oracles.

pub mod detection;
pub mod error;
pub mod fiber;
pub mod montecarlo;
pub mod rates;
pub mod spectral;

pub use error::{Error, Result};
pub use fiber::{AttackSpec, BackscatterResponse, FiberSpec, GramSymbol};
pub use rates::{RatePoint, RegionReport};
