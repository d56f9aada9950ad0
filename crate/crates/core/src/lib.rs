//! Discrete-event simulation of multipath packet scheduling.
//!
//! Two modes share one engine: an abstract model of parallel queueing
//! facilities ([`queue_abstract`]) and a protocol-level model of a multipath
//! transport sender ([`proto`]). [`scenarios`] defines runnable experiments
//! and [`harness`] runs them, writes traces and summarises seed sweeps.

// `!(x >= 0.0)` is how validation rejects NaN along with negatives.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod proto;
pub mod queue_abstract;
pub mod scenarios;
pub mod schedulers;
pub mod sim;

pub use error::{ConfigError, FieldError, ValidationErrors};
