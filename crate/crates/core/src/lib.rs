//! Probability that a standard Gaussian vector lands in a polytope,
//! `P(A z <= b)` for `z ~ N(0, I_T)`, computed as the value of a
//! finite-horizon dynamic program whose state is the running sum
//! `x_t = A_{., 1..t} z_{1..t}`.
//!
//! The indicator of the polytope is replaced by a Lipschitz ramp product,
//! states are confined to growing boxes and the boxes are cut into uniform
//! cells. Each of the three approximations carries an explicit term of the
//! reported error bound.
//!
//! ```
//! use gauss_polytope_core::{solve, PolytopeProblem};
//!
//! let p = PolytopeProblem::from_rows(&[[1.0], [1.0]], &[0.0, 0.0]).unwrap();
//! let r = solve(&p, 10.0, 0.01).unwrap();
//! assert!((r.estimate - 0.5).abs() <= r.bound.total);
//! ```

// `!(x > 0.0)` is how the validators reject NaN along with the rest.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dp;
pub mod error;
pub mod grid;
pub mod kernel;
pub mod linalg;
pub mod oracle;
pub mod preprocess;
pub mod smoothing;

pub use dp::{
    backward_step, error_bound, escape_audit, solve, solve_with, terminal_values, ErrorBudget,
    SolveOptions, SolveReport, ValueTable,
};
pub use error::{Error, Result};
pub use grid::{alpha_for, box_radius, build_box, build_grid, Grid, TruncationBox};
pub use kernel::{transition_row, TransitionRow};
pub use linalg::Matrix;
pub use oracle::{mc_estimate, quadrature_estimate, McResult};
pub use preprocess::{normalize_last_column, whiten, GaussianSpec, Normalized, PolytopeProblem};
pub use smoothing::{g_eval, LipschitzLedger, SmoothingParams};
