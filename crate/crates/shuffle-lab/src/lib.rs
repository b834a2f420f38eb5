//! A simulation and exact-computation laboratory for the random-to-random
//! insertions shuffle: remove a uniformly chosen card, reinsert it at a
//! uniformly chosen position.
//!
//! The crate provides
//! - fast O(log n) deck simulation with survivor tracking ([`deck`]),
//! - exact distribution evolution over S_n for small n ([`exact`]),
//! - the conditioned single-card position chain, its truncation and the
//!   walk decomposition used to dominate it ([`kernel`]),
//! - the mid-deck band statistic and its moment/threshold machinery
//!   ([`stats`]),
//! - executable two-deck couplings with online invariant monitors
//!   ([`coupling`]),
//! - a Monte Carlo harness estimating the total-variation lower bound at
//!   the conjectured cutoff time ([`tv`]).

pub mod coupling;
pub mod deck;
pub mod error;
pub mod exact;
pub mod kernel;
pub mod rng;
pub mod stats;
pub mod tv;

pub use error::{Error, Result};
