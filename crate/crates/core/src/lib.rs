//! Polar codes with list, fast list and fast list-flip decoders.
//!
//! The crate is organised by stage of the processing chain:
//! [`codebook`] builds codes and encodes, [`channel`] produces LLRs,
//! [`sc`] holds the decoding kernels and the shared list engine,
//! [`fscl`] describes special-node schedules, [`flip`] runs flip decoding,
//! [`trainer`] adapts the flip-metric threshold, [`instrument`] counts
//! operations and [`harness`] runs Monte-Carlo sweeps.

pub mod channel;
pub mod codebook;
pub mod flip;
pub mod fscl;
pub mod harness;
pub mod instrument;
pub mod sc;
pub mod trainer;
