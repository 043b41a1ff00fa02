//! Exact-arithmetic toolkit for piecewise-linear self-maps of the unit
//! interval: evaluation, composition, chain-recurrence certificates,
//! Markov/entropy analysis, and a family of structure-preserving
//! perturbations (windows, blowups, horseshoes, Cantor fattenings).
//!
//! All coordinates are arbitrary-precision rationals; there is no floating
//! point anywhere in the decision paths.

pub mod chains;
pub mod density;
pub mod error;
pub mod format;
pub mod graph;
pub mod homeo;
pub mod interval;
pub mod maps;
pub mod markov;
pub mod periodic;
pub mod perturb;
pub mod plmap;
pub mod rat;
pub mod shadowing;
pub mod structure;

pub use error::{Error, Result};
pub use plmap::PLMap;
pub use rat::Rat;
