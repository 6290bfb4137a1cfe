//! Hierarchical doubly-oblivious RAM.
//!
//! The crate is organized as a stack: data-oblivious array primitives
//! ([`oprims`]) over a traced buffer abstraction ([`obuf`], [`trace`]);
//! numerically tight parameter selection ([`probcalc`]); three oblivious
//! hash tables ([`obucket`], [`ocuckoo`], [`otwotier`]) with the bipartite
//! matcher ([`omatch`]) backing the Cuckoo build; an empirical scheme
//! planner ([`planner`]); and the hierarchical ORAM and key-value map
//! ([`oram`]). Obliviousness is modeled at the logical access-trace level:
//! every block touch is recordable and auditable, and randomness comes from
//! an explicit seeded tape so audit reruns are bit-exact.

pub mod block;
pub mod error;
pub mod obuf;
pub mod oprims;
pub mod prf;
pub mod probcalc;
pub mod stats;
pub mod tape;
pub mod trace;

pub mod obucket;
pub mod ocuckoo;
pub mod omatch;
pub mod otwotier;

pub mod oram;
pub mod planner;
pub mod snapshot;

pub mod bench;
pub mod sssp;
pub mod verify;

pub use block::Block;
pub use error::{Error, Result};
pub use tape::RandTape;
