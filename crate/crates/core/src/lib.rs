// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod connection;
pub mod geodesic;
pub mod quad;
pub mod local;
pub mod teichmuller;
pub mod omega;
pub mod config;
pub mod render;
pub mod verify;
pub use num_complex;
