//! Heuristic parameter choice for convex Tikhonov regularization.
//!
//! Operators, penalties and problems live in [`operator`], [`regularizer`]
//! and [`problem`]; [`solve`] minimizes the Tikhonov functional and computes
//! the second Bregman iterate; [`rules`] evaluates the HD, HR, SQO and RQO
//! functionals and picks `α`; [`diagonal`] has the closed-form solver for
//! diagonal operators and the noise-condition diagnostics.

pub mod diagonal;
pub mod error;
pub mod operator;
pub mod problem;
pub mod prox;
pub mod regularizer;
pub mod rules;
pub mod solve;

pub use diagonal::{ClosedForm, DiagonalModel};
pub use error::{Error, Result};
pub use operator::{LinearOperator, OperatorKind};
pub use problem::{normalize_problem, Problem, SourceInfo};
pub use regularizer::Regularizer;
pub use rules::{build_grid, select_alpha, AlphaGrid, Rule, RuleCurve};
pub use solve::{Fista, Solution, SolveOptions, SolvePair, SweepMode, TikhonovSolver};
