//! Joint control and wireless analysis of a three-UAV leader–follower
//! formation.
//!
//! * [`stability`] builds the delayed error dynamics from the control gains
//!   and bounds the wireless delay the formation tolerates.
//! * [`formation`] simulates the delayed error system and measures
//!   convergence.
//! * [`wireless`] gives the probability that the follower-to-follower link
//!   meets that delay, analytically and by Monte Carlo.
//! * [`joint`] closes the loop, feeding sampled link delays into the
//!   dynamics.

// `!(x > 0.0)` style guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod formation;
pub mod joint;
pub mod linalg;
pub mod quadrature;
pub mod stability;
pub mod wireless;

pub use error::{Error, Result};
