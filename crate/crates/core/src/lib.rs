//! Information-spectrum slicing and stabilization of conditional sources
//! over discrete memoryless channels.
//!
//! | module | contents |
//! |---|---|
//! | [`prob`] | pmfs, channels, divergences, channel files |
//! | [`types`] | type enumeration and sequence-space models |
//! | [`spectrum`] | spectrum slicing, quasi-images, images |
//! | [`stabilizer`] | stable subsets, partitions, message quantizers, channel nets |
//! | [`verify`] | lemma oracles, concentration checks, reports |
//! | [`apps`] | capacity, converse checks, wiretap and authentication bounds |
//! | [`harness`] | configuration, persistence, the `specinfo` command line |

pub mod apps;
pub mod error;
pub mod harness;
pub mod prob;
pub mod spectrum;
pub mod stabilizer;
pub mod types;
pub mod verify;

pub use error::{Error, Result};
