//! DebtStreamness for inter-firm credit networks.
//!
//! A firm's DebtStreamness is its average distance from the banking sector
//! along chains of inter-firm credit: 1 for a firm funded only by banks, 2
//! for a firm funded by such a firm, and so on, weighted by borrowing
//! shares. It solves `DS = 1 + A DS` where `A[i][j]` is the share of firm
//! `i`'s total debt owed to firm `j`.
//!
//! ```
//! use debtstream_core::{fixtures, streamness::compute_streamness};
//!
//! let net = fixtures::chain();
//! let ds = compute_streamness(&net).unwrap();
//! assert_eq!(ds.ds, vec![1.0, 2.0, 3.0]);
//! ```

pub mod aggregation;
pub mod analysis;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod leontief;
pub mod network;
pub mod reconstruction;
pub mod sparse;
pub mod stats;
pub mod streamness;
pub mod synth;

pub use error::{Error, Result};
pub use network::{CreditNetwork, FirmId, SectorId};
pub use streamness::StreamnessResult;
