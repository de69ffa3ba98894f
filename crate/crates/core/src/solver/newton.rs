//! Damped Newton method for smooth convex objectives, optionally subject to
//! affine equality constraints.

use super::{hint_for, reported_value, Method, Solution, SolveError, SolverConfig, Status};
use crate::expr::{analyze_structure, curvature, Expr, ExprError, GradientMode};
use crate::linalg::{self, Matrix};
use crate::problem::{canonical_sense, Domain, Problem, Relation};

const MAX_HALVINGS: usize = 60;

/// Objective values (minimize sense) after every accepted step, starting
/// with the initial point.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NewtonTrace {
    pub values: Vec<f64>,
}

fn inapplicable(p: &Problem, reason: impl Into<String>) -> SolveError {
    SolveError::Inapplicable {
        method: Method::Newton,
        reason: reason.into(),
        hint: hint_for(p),
    }
}

/// Rows `a·x = b` of the equality constraints.
fn equality_system(p: &Problem) -> Result<(Vec<Vec<f64>>, Vec<f64>), SolveError> {
    let n = p.dim();
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (i, c) in p.constraints.iter().enumerate() {
        if c.relation != Relation::Eq {
            return Err(inapplicable(
                p,
                format!("constraint {i} is an inequality; Newton handles only affine equalities"),
            ));
        }
        let s = analyze_structure(&Expr::sub(c.lhs.clone(), c.rhs.clone()));
        let Some(form) = s.affine.filter(|_| s.is_affine) else {
            return Err(inapplicable(p, format!("equality {i} is not affine")));
        };
        a.push(form.dense(n));
        b.push(-form.constant);
    }
    Ok((a, b))
}

fn project(x: &mut [f64], a: &[Vec<f64>], b: &[f64]) -> Result<(), SolveError> {
    if a.is_empty() {
        return Ok(());
    }
    let k = a.len();
    let mut aat = Matrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            aat[(i, j)] = linalg::dot(&a[i], &a[j]);
        }
    }
    let r: Vec<f64> = (0..k).map(|i| linalg::dot(&a[i], x) - b[i]).collect();
    let w =
        linalg::solve_spd_regularized(&aat, &r).map_err(|e| SolveError::Numeric(e.to_string()))?;
    for (i, row) in a.iter().enumerate() {
        for (xj, aij) in x.iter_mut().zip(row) {
            *xj -= aij * w[i];
        }
    }
    Ok(())
}

/// Newton direction and equality multipliers from the KKT system.
fn direction(
    h: &Matrix,
    g: &[f64],
    a: &[Vec<f64>],
    resid: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), SolveError> {
    let n = g.len();
    let neg_g: Vec<f64> = g.iter().map(|v| -v).collect();
    if a.is_empty() {
        let d = linalg::solve_spd_regularized(h, &neg_g)
            .map_err(|e| SolveError::Numeric(e.to_string()))?;
        return Ok((d, Vec::new()));
    }
    let k = a.len();
    let mut shift = 0.0;
    for _ in 0..12 {
        let mut kkt = Matrix::zeros(n + k, n + k);
        for i in 0..n {
            for j in 0..n {
                kkt[(i, j)] = h[(i, j)];
            }
            kkt[(i, i)] += shift;
        }
        for (r, row) in a.iter().enumerate() {
            for j in 0..n {
                kkt[(n + r, j)] = row[j];
                kkt[(j, n + r)] = row[j];
            }
        }
        let rhs: Vec<f64> = neg_g.iter().chain(resid).copied().collect();
        if let Ok(sol) = linalg::solve(&kkt, &rhs) {
            if sol.iter().all(|v| v.is_finite()) {
                return Ok((sol[..n].to_vec(), sol[n..].to_vec()));
            }
        }
        shift = if shift == 0.0 { 1e-10 } else { shift * 100.0 };
    }
    Err(SolveError::Numeric("singular KKT system".into()))
}

/// Quadratic objectives written outside the curvature rules (for example
/// through a difference of squares) still qualify when `Q ⪰ 0`.
fn convex_quadratic(f: &Expr, n: usize) -> bool {
    let s = analyze_structure(f);
    match s.quadratic.filter(|_| s.is_quadratic) {
        Some(form) => {
            let q = form.q_matrix(n);
            linalg::psd_check(&q, linalg::default_psd_tol(&q)).is_ok_and(|v| v.is_psd)
        }
        None => false,
    }
}

/// Newton's method from `start` (zeros when absent).
pub fn solve_newton(
    p: &Problem,
    cfg: &SolverConfig,
    start: Option<&[f64]>,
) -> Result<Solution, SolveError> {
    solve_newton_traced(p, cfg, start).map(|(s, _)| s)
}

pub fn solve_newton_traced(
    p: &Problem,
    cfg: &SolverConfig,
    start: Option<&[f64]>,
) -> Result<(Solution, NewtonTrace), SolveError> {
    let canon = canonical_sense(p);
    let n = canon.dim();
    if canon.variables.iter().any(|v| v.domain != Domain::Free) {
        return Err(inapplicable(p, "variables must have free domains"));
    }
    let (a, b) = equality_system(&canon)?;
    if !curvature(&canon.objective).curvature.is_convex() && !convex_quadratic(&canon.objective, n)
    {
        return Err(inapplicable(p, "objective is not recognized as convex"));
    }
    let mut x = match start {
        Some(s) if s.len() == n => s.to_vec(),
        Some(s) => {
            return Err(SolveError::Numeric(format!(
                "start has {} coordinates, problem has {n}",
                s.len()
            )))
        }
        None => vec![0.0; n],
    };
    project(&mut x, &a, &b)?;
    let f_obj = &canon.objective;
    let mut f = f_obj
        .eval(&x)
        .map_err(|e| SolveError::Numeric(format!("objective undefined at start: {e}")))?;
    let mut trace = NewtonTrace { values: vec![f] };
    let finish = |status, x: Vec<f64>, nu: &[f64], iterations, trace: NewtonTrace| {
        let multipliers = nu
            .iter()
            .flat_map(|v| [v.max(0.0) + 0.0, (-v).max(0.0) + 0.0])
            .collect();
        let value = reported_value(p, &x)?;
        Ok((
            Solution {
                status,
                point: Some(x),
                value: Some(value),
                multipliers: Some(multipliers),
                iterations,
                method: Method::Newton,
            },
            trace,
        ))
    };
    for it in 0..cfg.max_iter {
        let g = match f_obj.gradient(&x, GradientMode::Analytic) {
            Ok(g) => g,
            Err(ExprError::NonDifferentiable(_)) => {
                return finish(Status::NondifferentiableFailure, x, &[], it, trace)
            }
            Err(e) => return Err(SolveError::Numeric(e.to_string())),
        };
        let h = f_obj
            .hessian(&x)
            .map_err(|e| SolveError::Numeric(e.to_string()))?;
        let resid: Vec<f64> = a
            .iter()
            .zip(&b)
            .map(|(row, bi)| bi - linalg::dot(row, &x))
            .collect();
        let (d, nu) = direction(&h, &g, &a, &resid)?;
        let mut gl = g.clone();
        for (row, v) in a.iter().zip(&nu) {
            for (gj, aj) in gl.iter_mut().zip(row) {
                *gj += v * aj;
            }
        }
        let settled = linalg::norm_inf(&d) <= cfg.newton_step_tol * (1.0 + linalg::norm_inf(&x));
        if linalg::norm_inf(&gl) <= cfg.newton_grad_tol && settled {
            return finish(Status::Optimal, x, &nu, it, trace);
        }
        let slope = linalg::dot(&g, &d);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            if let Ok(fn_) = f_obj.eval(&xn) {
                if fn_ <= f + cfg.armijo_c * step * slope && fn_ <= f {
                    accepted = Some((xn, fn_));
                    break;
                }
            }
            step *= 0.5;
        }
        match accepted {
            Some((xn, fn_)) => {
                debug_assert!(fn_ <= f, "Armijo step increased the objective");
                x = xn;
                f = fn_;
                trace.values.push(f);
            }
            None => {
                // No decrease representable in floating point.
                let status = if linalg::norm_inf(&gl) <= cfg.newton_grad_tol {
                    Status::Optimal
                } else {
                    Status::MaxIterations
                };
                return finish(status, x, &nu, it, trace);
            }
        }
    }
    let g = f_obj
        .gradient(&x, GradientMode::Analytic)
        .map_err(|e| SolveError::Numeric(e.to_string()))?;
    let h = f_obj
        .hessian(&x)
        .map_err(|e| SolveError::Numeric(e.to_string()))?;
    let resid = vec![0.0; a.len()];
    let (_, nu) = direction(&h, &g, &a, &resid)?;
    finish(Status::MaxIterations, x, &nu, cfg.max_iter, trace)
}
