//! Shared numerical machinery: scalar and two-variable root solvers, an
//! embedded Runge-Kutta pair with Hermite dense output, a dual active-set QP
//! solver, an SQP driver with BFGS and an l1 merit line search, and discrete
//! Riccati recursions.

pub mod ode;
pub mod qp;
pub mod riccati;
pub mod roots;
pub mod sqp;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumError {
    #[error("no sign change in bracket [{0:.6e}, {1:.6e}]")]
    NoBracket(f64, f64),
    #[error("iteration limit reached after {0} iterations")]
    MaxIter(usize),
    #[error("singular system: {0}")]
    Singular(String),
    #[error("evaluation failed: {0}")]
    Eval(String),
    #[error("infeasible")]
    Infeasible,
}
