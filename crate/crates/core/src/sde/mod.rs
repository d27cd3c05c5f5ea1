//! Brownian noise, Bessel path simulation, coupled flows and hitting times.
//!
//! Paths live on a [`Schedule`]: a contiguous sequence of uniform
//! [`TimeGrid`] blocks. A single block is the ordinary uniform grid; a
//! geometric sequence of blocks keeps the relative resolution `Δ/t` constant
//! over horizons spanning many decades, which the rescaled `x → 0` limits
//! need.

mod besq;
mod bridge;
mod clock;
mod flow;
mod grid;
mod hitting;
mod noise;
mod rng;
mod scheme;

pub use besq::{sample_besq_exact, simulate_bes_exact};
pub use clock::{simulate_bes_clock, simulate_bes_to_escape, ClockControl, Escape};
pub use flow::{simulate_flow, simulate_flow_adaptive, FlowBundle, StepControl};
pub use grid::{Schedule, TimeGrid};
pub use hitting::{first_zero, hitting_time, last_passage, HittingTime};
pub use noise::{generate_noise, NoisePath};
pub use rng::{PathRng, StreamSeed};
pub use scheme::{simulate_bes, BesselPath, Scheme, StopMode, FLOOR_EXPONENT};
