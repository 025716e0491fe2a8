//! Least-squares finite elements for the time-discretized viscous sea-ice
//! momentum balance: P2 velocity and row-wise RT1 stress, Gauss-Newton
//! linearization and the functional as an element-local error indicator.

// Negated comparisons reject NaN on purpose; index loops mirror the math.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod fem;
pub mod mesh;
pub mod par;
pub mod expr;
pub mod model;
pub mod lsq;
pub mod solver;
pub mod app;
