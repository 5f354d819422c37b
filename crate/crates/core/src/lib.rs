//! Learned step-to-step models and constrained FIR stepping controllers.

pub mod error;
pub mod harness;
pub mod hlip;
pub mod learn;
pub mod lp;
pub mod plant;
pub mod sets;
pub mod sls;
pub mod textfmt;

pub use error::{Error, Result};
