//! File formats, scenario runner and command-line front end for the
//! `ricci-lab-core` verifiers.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod json;
pub mod parallel;
pub mod report;
pub mod scenario;
pub mod spacefile;
