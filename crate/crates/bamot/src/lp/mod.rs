//! A self-contained dense linear-programming toolkit: problem container,
//! bounded-variable two-phase revised simplex, and the pricing-problem
//! builders layered on top.

mod problem;
mod simplex;

pub mod build;
pub mod hedge;

pub use problem::{LinearProgram, LpSolution, LpStatus, Relation};
pub use simplex::solve;
