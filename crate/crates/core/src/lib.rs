//! Numerical verification of almost contact, Sasakian and warped-product
//! structures on single-chart manifolds.

pub mod cli;
pub mod expr;
pub mod geodesic;
pub mod product;
pub mod structures;
pub mod tensor;
