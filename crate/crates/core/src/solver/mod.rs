//! Desk-scale solvers and the grid oracle.
//!
//! Multipliers in a [`Solution`] follow [`Problem::inequality_rows`] of the
//! minimize-sense problem: one entry per scalar row `gᵢ(x) ≤ 0`, with
//! equalities contributing an upper and a lower row.

mod barrier;
mod grid;
mod newton;
mod simplex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::problem::Problem;

pub use barrier::solve_barrier;
pub use grid::{solve_grid, GridSpec, MAX_GRID_DIM, MAX_GRID_POINTS};
pub use newton::{solve_newton, solve_newton_traced, NewtonTrace};
pub use simplex::{solve_linear, solve_simplex, LinearOutcome, LinearProblem, LinearStatus};

/// Every iterative tolerance in one place.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Reduced-cost and pivot tolerance for the simplex tableau.
    pub simplex_tol: f64,
    /// Stationarity tolerance `‖∇f‖∞` for Newton.
    pub newton_grad_tol: f64,
    /// Relative Newton step below which the iterate counts as settled.
    pub newton_step_tol: f64,
    pub max_iter: usize,
    pub armijo_c: f64,
    /// Duality-gap bound `m/t` at which the barrier method stops.
    pub barrier_gap: f64,
    pub barrier_mu: f64,
    /// Strict-feasibility margin required of the barrier's phase-1 point.
    pub interior_margin: f64,
    /// Half-width of the safeguard box added to barrier problems.
    pub barrier_box: f64,
    pub grid_feas_tol: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            simplex_tol: 1e-9,
            newton_grad_tol: 1e-9,
            newton_step_tol: 1e-6,
            max_iter: 200,
            armijo_c: 1e-4,
            barrier_gap: 1e-8,
            barrier_mu: 10.0,
            interior_margin: 1e-6,
            barrier_box: 1e6,
            grid_feas_tol: 1e-9,
            seed: 0x5EED,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Optimal,
    Unbounded,
    Infeasible,
    MaxIterations,
    NondifferentiableFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Simplex,
    Newton,
    Barrier,
    Grid,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Simplex => "simplex",
            Method::Newton => "newton",
            Method::Barrier => "barrier",
            Method::Grid => "grid",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub status: Status,
    pub point: Option<Vec<f64>>,
    /// Objective value at `point` in the problem's reported sense.
    pub value: Option<f64>,
    pub multipliers: Option<Vec<f64>>,
    pub iterations: usize,
    pub method: Method,
}

impl Solution {
    pub(crate) fn without_point(status: Status, iterations: usize, method: Method) -> Self {
        Self {
            status,
            point: None,
            value: None,
            multipliers: None,
            iterations,
            method,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("{method} does not apply: {reason}")]
    Inapplicable {
        method: Method,
        reason: String,
        /// A transform rule that would make the problem solvable.
        hint: Option<String>,
    },
    #[error("no strictly feasible point: {0}")]
    NoInterior(String),
    #[error("no feasible grid point at this resolution")]
    EmptyGrid,
    #[error("numerical failure: {0}")]
    Numeric(String),
}

/// Objective value at `x` in `p`'s reported sense.
pub(crate) fn reported_value(p: &Problem, x: &[f64]) -> Result<f64, SolveError> {
    p.objective
        .eval(x)
        .map(|v| p.report_value(v))
        .map_err(|e| SolveError::Numeric(e.to_string()))
}

pub(crate) fn hint_for(p: &Problem) -> Option<String> {
    use crate::classify::{classify, ProblemClass};
    let c = classify(p);
    match c.class {
        ProblemClass::GP => Some("gp-log".into()),
        ProblemClass::SOCP if c.is_reducible_socp() => Some("socp2lp".into()),
        ProblemClass::LP => None,
        _ if p
            .constraints
            .iter()
            .any(|c| c.relation == crate::problem::Relation::Eq) =>
        {
            Some("eq2ineq".into())
        }
        _ => Some("to-convex".into()),
    }
}
