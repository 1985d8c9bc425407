//! Device-independent randomness amplification from Santha-Vazirani sources:
//! no-signaling boxes, Bell-value certification by linear programming,
//! protocol simulation and the bounds the protocol relies on.

// `!(x >= 0.0)` deliberately rejects NaN; index loops mirror the formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bell;
pub mod definetti;
pub mod error;
pub mod lp;
pub mod protocol;
pub mod quantum;
pub mod sv;

pub mod cli;

pub use error::{Error, Result};
