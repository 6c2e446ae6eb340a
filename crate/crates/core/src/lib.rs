//! Discrete-time phase-coupled oscillator networks with stochastic coupling.
//!
//! Covers the network update under Gaussian edge/frequency noise or Bernoulli
//! random links, closed-form sufficient bounds on the coupling gain and the
//! sampling time, and Monte Carlo estimators for return times, set occupancy
//! and one-step Lyapunov drift.

pub mod analysis;
pub mod bounds;
pub mod coupling;
pub mod dynamics;
pub mod error;
pub mod graph;
pub mod presets;
pub mod stochastic;

pub use error::{Error, Result};
