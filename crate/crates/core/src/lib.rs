//! Statistical auto-correlation analysis of random pulse-shaped signals.
//!
//! The crate computes the expected squared periodic ACF of a modulated,
//! Nyquist-shaped random signal in closed form, checks it by Monte Carlo,
//! designs roll-off spectra that suppress ACF sidelobes, and simulates
//! matched-filter ranging with the resulting waveforms.

pub mod constellation;
pub mod dft;
pub mod error;
pub mod modulation;
pub mod montecarlo;
pub mod pulse;
pub mod ranging;
pub mod rng;
pub mod shaping;
pub mod theory;

pub use constellation::{ConstellationKind, ConstellationSpec, KurtosisClass};
pub use error::{Error, Result};
pub use modulation::{BasisKind, ModulationBasis};
pub use montecarlo::{estimate_stats, McStats, TrialConfig};
pub use pulse::{NyquistPulse, PulseKind};
pub use theory::{expected_sq_acf, AcfStats};
pub use shaping::{Objective, ShapingProblem, ShapingSolution};
pub use ranging::{RangeGrid, RangingScenario, Target, Waveform};
