//! Calibration stack for the cross-resonance CX_π gate.

mod allxy;
mod cx;
mod darkening;
mod reflections;
mod sweep;

pub use allxy::*;
pub use cx::*;
pub use darkening::*;
pub use reflections::*;
pub use sweep::{find_crossing, Crossing, MAX_WIDEN};
