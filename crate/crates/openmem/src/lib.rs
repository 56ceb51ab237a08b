//! File formats, run configuration and the `openmem` command line on top of
//! `openmem-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod record;
pub mod run;
