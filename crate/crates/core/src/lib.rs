#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]
extern crate alloc;

pub mod check;
pub mod dirichlet;
pub mod entropy_geo;
pub mod error;
pub mod evi_lab;
pub mod fmath;
pub mod hopflax;
pub mod kernel_sim;
pub mod mmdist;
pub mod mmspace;
pub mod rng;
pub mod transport;
