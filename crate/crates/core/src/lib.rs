//! Repair-bandwidth versus storage tradeoff for rack-aware regenerating codes.
//!
//! Pipeline: [`config`] validates a rack topology, [`income`] derives the
//! minimum-mincut income sequence, [`threshold`] turns it into the exact
//! piecewise-linear threshold alpha*(beta_e), and [`flow`] checks the result
//! against max-flow computations on the information flow graph.

pub mod cli;
pub mod config;
pub mod error;
pub mod flow;
pub mod income;
pub mod models;
pub mod rational;
pub mod threshold;

pub use config::SystemConfig;
pub use error::{Error, Result};
pub use rational::Rational;
pub use threshold::{CoeffList, ThresholdCurve};
