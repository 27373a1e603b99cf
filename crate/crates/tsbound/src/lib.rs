//! Case files, CSV/JSON export and the `tsbound` command line on top of
//! [`tsbound_core`].

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod case;
pub mod cli;
pub mod export;

pub use case::{load_case, parse_case, CaseError};
