//! Light storage and diffuse transport in cold ⁸⁵Rb under a coupling field.
//!
//! Units: ħ = γ = 1 (γ is the D2 natural linewidth), lengths in ƛ = c/ω.

pub mod atomic_data;
pub mod diffuse_mc;
pub mod dressed_green;
pub mod error;
pub mod medium;
pub mod memory_channel;
pub mod pulse_transport;
pub mod response;

pub use error::{Error, Result};
