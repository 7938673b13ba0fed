//! Domain-agnostic reverse engineering of black-box model attributes.

mod error;
pub mod par;
pub mod baselines;
pub mod config;
pub mod dream;
pub mod fingerprint;
pub mod harness;
pub mod seed;
pub mod workflow;
pub mod zoo;

pub use error::{Error, Result};
