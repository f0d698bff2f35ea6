//! Resilient cooperative adaptive cruise control for a leader/follower pair
//! under false-data injection on the V2V command link.
//!
//! The follower bounds the leader's state with an interval observer, learns
//! the injected attack with a two-layer neural estimator and cancels it in
//! its tracking law. [`sim`] ties the pieces into a fixed-step simulator.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod controller;
pub mod error;
pub mod estimator;
pub mod interval_algebra;
pub mod observer;
pub mod plant;
pub mod sim;
pub mod synthesis;
