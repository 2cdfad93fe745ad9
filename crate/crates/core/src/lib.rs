//! Models for quantum memories used to synchronise probabilistic photon
//! sources.
//!
//! * [`model`]: efficiency decay with hyperfine beats, and scalar figures of merit.
//! * [`fit`]: least-squares recovery of the decay parameters.
//! * [`sync`]: analytic N-photon rate of a source-memory array.
//! * [`sim`]: Monte-Carlo realisation of the same protocol.
//! * [`bench`](mod@bench): derived metrics and ranking of published memories.
//!
//! The crate is `no_std` and needs only `alloc`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod bench;
pub mod error;
pub mod fit;
pub mod model;
pub mod sim;
pub mod sync;

pub use error::{Error, Result};
pub use model::DecayModelParams;
