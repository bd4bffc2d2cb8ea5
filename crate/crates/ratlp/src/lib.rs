//! Exact rational linear programming.
//!
//! Everything here works on [`Rational`] values; there is no floating point
//! anywhere in the solver. The building blocks are:
//!
//! - [`ConstraintSystem`]: affine rows over named variables with lower bounds,
//! - [`solve_lp`] / [`solve_lexmin`]: two-phase simplex with Bland's rule and
//!   staged (or weighted) lexicographic minimization,
//! - [`solve_ilp`]: depth-first branch and bound on top of the LP,
//! - [`scale_to_integral`]: clearing denominators group by group.

mod branch;
mod problem;
mod q;
pub mod rational;
mod scale;
mod simplex;
mod system;

pub use branch::solve_ilp;
pub use problem::{LexMode, LpError, LpProblem, Outcome, Solution, DEFAULT_NODE_LIMIT};
pub use rational::{rat, ratio, Rational};
pub use scale::{scale_to_integral, Scaled};
pub use simplex::{is_feasible, solve_lexmin, solve_lp};
pub use system::{ConstraintSystem, Relation, Row};
