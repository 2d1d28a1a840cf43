#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Brush model of the Julia set of `e^z - 1`.

pub mod address;
pub mod brush;
pub mod complex;
pub mod curve;
pub mod rational;
pub mod tower;
