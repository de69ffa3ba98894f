//! Log-barrier path following for inequality-form LPs.

use super::simplex::{solve_linear, LinearProblem, LinearStatus};
use super::{hint_for, reported_value, Method, Solution, SolveError, SolverConfig, Status};
use crate::classify::linear_data;
use crate::linalg::{self, Matrix};
use crate::problem::{canonical_sense, Domain, Problem, Relation};

const INNER_CAP: usize = 100;

/// `A x ≤ b` rows plus `c` of the minimize-sense LP.
struct Ineq {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: Vec<f64>,
    /// Number of leading rows that belong to the problem (the rest are the
    /// safeguard box).
    real: usize,
}

fn slacks(ineq: &Ineq, x: &[f64]) -> Vec<f64> {
    ineq.a
        .iter()
        .zip(&ineq.b)
        .map(|(a, b)| b - linalg::dot(a, x))
        .collect()
}

/// Phase 1: `min s` over `a·x − s ≤ b`, `s ≥ −1`.
fn interior_point(ineq: &Ineq, margin: f64, tol: f64) -> Result<Vec<f64>, SolveError> {
    let n = ineq.c.len();
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut rows: Vec<(Vec<f64>, Relation, f64)> = ineq
        .a
        .iter()
        .zip(&ineq.b)
        .map(|(a, b)| {
            let mut r = a.clone();
            r.push(-1.0);
            (r, Relation::Le, *b)
        })
        .collect();
    let mut floor = vec![0.0; n + 1];
    floor[n] = -1.0;
    rows.push((floor, Relation::Le, 1.0));
    let out = solve_linear(
        &LinearProblem {
            c,
            rows,
            nonneg: vec![false; n + 1],
        },
        tol,
    )?;
    if out.status != LinearStatus::Optimal {
        return Err(SolveError::Numeric("phase-1 problem did not solve".into()));
    }
    if out.x[n] > -margin {
        return Err(SolveError::NoInterior(format!(
            "best uniform slack is {}",
            -out.x[n]
        )));
    }
    Ok(out.x[..n].to_vec())
}

/// Minimizes `t·cᵀx − Σ log sᵢ` from a strictly feasible `x`.
fn center(ineq: &Ineq, x: &mut Vec<f64>, t: f64) -> Result<usize, SolveError> {
    let n = x.len();
    let phi = |x: &[f64]| -> f64 {
        let s = slacks(ineq, x);
        if s.iter().any(|v| *v <= 0.0) {
            return f64::INFINITY;
        }
        t * linalg::dot(&ineq.c, x) - s.iter().map(|v| v.ln()).sum::<f64>()
    };
    for it in 0..INNER_CAP {
        let s = slacks(ineq, x);
        let mut g: Vec<f64> = ineq.c.iter().map(|c| t * c).collect();
        let mut h = Matrix::zeros(n, n);
        for (a, si) in ineq.a.iter().zip(&s) {
            for j in 0..n {
                g[j] += a[j] / si;
                for k in 0..n {
                    h[(j, k)] += a[j] * a[k] / (si * si);
                }
            }
        }
        let neg: Vec<f64> = g.iter().map(|v| -v).collect();
        let d = linalg::solve_spd_regularized(&h, &neg)
            .map_err(|e| SolveError::Numeric(e.to_string()))?;
        let decrement = -linalg::dot(&g, &d);
        if decrement / 2.0 <= 1e-12 {
            return Ok(it);
        }
        let f0 = phi(x);
        let mut step = 1.0;
        let mut moved = false;
        for _ in 0..80 {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            let fn_ = phi(&xn);
            if fn_.is_finite() && fn_ <= f0 - 0.25 * step * decrement {
                *x = xn;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            return Ok(it);
        }
    }
    Ok(INNER_CAP)
}

/// `‖c + Σ λᵢ aᵢ‖∞` over the problem rows.
fn dual_residual(ineq: &Ineq, lambda: &[f64]) -> f64 {
    let mut r = ineq.c.clone();
    for (a, l) in ineq.a[..ineq.real].iter().zip(lambda) {
        for (rj, aj) in r.iter_mut().zip(a) {
            *rj += l * aj;
        }
    }
    linalg::norm_inf(&r)
}

/// The central-path estimate `1/(t sᵢ)` inherits the centering error, which
/// grows with `t`. Least squares on the rows with `λᵢ ≥ sᵢ` usually removes
/// it; the estimate is kept only when it is nonnegative and better.
fn refine_multipliers(ineq: &Ineq, s: &[f64], central: Vec<f64>) -> Vec<f64> {
    let active: Vec<usize> = (0..central.len()).filter(|&i| central[i] >= s[i]).collect();
    if active.is_empty() {
        return central;
    }
    let k = active.len();
    let mut gram = Matrix::zeros(k, k);
    let mut rhs = vec![0.0; k];
    for (p, &i) in active.iter().enumerate() {
        rhs[p] = -linalg::dot(&ineq.a[i], &ineq.c);
        for (q, &j) in active.iter().enumerate() {
            gram[(p, q)] = linalg::dot(&ineq.a[i], &ineq.a[j]);
        }
    }
    let Ok(mu) = linalg::solve_spd_regularized(&gram, &rhs) else {
        return central;
    };
    if mu.iter().any(|v| *v < -1e-9) {
        return central;
    }
    let mut refined = vec![0.0; central.len()];
    for (&i, m) in active.iter().zip(&mu) {
        refined[i] = m.max(0.0);
    }
    if dual_residual(ineq, &refined) < dual_residual(ineq, &central) {
        refined
    } else {
        central
    }
}

/// Barrier method on an LP with inequality rows only.
pub fn solve_barrier(p: &Problem, cfg: &SolverConfig) -> Result<Solution, SolveError> {
    let canon = canonical_sense(p);
    let lin = linear_data(&canon).ok_or_else(|| SolveError::Inapplicable {
        method: Method::Barrier,
        reason: "objective and constraints must be linear".into(),
        hint: hint_for(p),
    })?;
    let n = lin.c.len();
    let mut a = Vec::new();
    let mut b = Vec::new();
    for row in &lin.rows {
        match row.relation {
            Relation::Le => {
                a.push(row.a.clone());
                b.push(row.b);
            }
            Relation::Ge => {
                a.push(row.a.iter().map(|v| -v).collect());
                b.push(-row.b);
            }
            _ => {
                return Err(SolveError::NoInterior(format!(
                    "constraint {} is an equality, whose interior is empty",
                    row.constraint
                )))
            }
        }
    }
    for (j, d) in lin.domains.iter().enumerate() {
        if *d != Domain::Free {
            let mut r = vec![0.0; n];
            r[j] = -1.0;
            a.push(r);
            b.push(0.0);
        }
    }
    let real = a.len();
    for j in 0..n {
        for sign in [1.0, -1.0] {
            let mut r = vec![0.0; n];
            r[j] = sign;
            a.push(r);
            b.push(cfg.barrier_box);
        }
    }
    let ineq = Ineq {
        a,
        b,
        c: lin.c.clone(),
        real,
    };
    let mut x = interior_point(&ineq, cfg.interior_margin, cfg.simplex_tol)?;
    let m = ineq.a.len() as f64;
    let mut t = 1.0;
    let mut iterations = 0;
    loop {
        iterations += center(&ineq, &mut x, t)?;
        if m / t <= cfg.barrier_gap {
            break;
        }
        t *= cfg.barrier_mu;
    }
    let s = slacks(&ineq, &x);
    let box_active = s[ineq.real..].iter().any(|v| *v < 1e-3 * cfg.barrier_box);
    if box_active {
        return Ok(Solution::without_point(
            Status::Unbounded,
            iterations,
            Method::Barrier,
        ));
    }
    // Rows are in constraint order followed by domain bounds, matching the
    // problem's inequality-row order.
    let central: Vec<f64> = s[..ineq.real].iter().map(|si| 1.0 / (t * si)).collect();
    let multipliers = refine_multipliers(&ineq, &s, central);
    Ok(Solution {
        status: Status::Optimal,
        value: Some(reported_value(p, &x)?),
        point: Some(x),
        multipliers: Some(multipliers),
        iterations,
        method: Method::Barrier,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::problem::{Constraint, Sense, VarKind, VariableSpec};

    #[test]
    fn textbook_lp() {
        let p = Problem::new(
            Sense::Maximize,
            Expr::dot(vec![3.0, 5.0], vec![0, 1]),
            vec![VariableSpec::new(
                "x",
                VarKind::Vector(2),
                Domain::Nonnegative,
            )],
        )
        .with_constraints(vec![
            Constraint::le(Expr::var(0), Expr::Const(4.0)),
            Constraint::le(Expr::scale(2.0, Expr::var(1)), Expr::Const(12.0)),
            Constraint::le(Expr::dot(vec![3.0, 2.0], vec![0, 1]), Expr::Const(18.0)),
        ]);
        let s = solve_barrier(&p, &SolverConfig::default()).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!((s.value.unwrap() - 36.0).abs() < 1e-6, "{:?}", s.value);
        assert_eq!(s.multipliers.unwrap().len(), 5);
    }

    #[test]
    fn unit_interval() {
        let p = Problem::new(
            Sense::Minimize,
            Expr::var(0),
            vec![VariableSpec::new("x", VarKind::Scalar, Domain::Free)],
        )
        .with_constraints(vec![
            Constraint::ge(Expr::var(0), Expr::Const(0.0)),
            Constraint::le(Expr::var(0), Expr::Const(1.0)),
        ]);
        let s = solve_barrier(&p, &SolverConfig::default()).unwrap();
        assert!(s.value.unwrap().abs() < 1e-6);
    }

    #[test]
    fn equality_has_no_interior() {
        let p = Problem::new(
            Sense::Minimize,
            Expr::var(0),
            vec![VariableSpec::new("x", VarKind::Scalar, Domain::Free)],
        )
        .with_constraints(vec![Constraint::eq(Expr::var(0), Expr::Const(0.0))]);
        assert!(matches!(
            solve_barrier(&p, &SolverConfig::default()),
            Err(SolveError::NoInterior(_))
        ));
    }

    #[test]
    fn unbounded_hits_box() {
        let p = Problem::new(
            Sense::Minimize,
            Expr::var(0),
            vec![VariableSpec::new("x", VarKind::Scalar, Domain::Free)],
        )
        .with_constraints(vec![Constraint::le(Expr::var(0), Expr::Const(1.0))]);
        let s = solve_barrier(&p, &SolverConfig::default()).unwrap();
        assert_eq!(s.status, Status::Unbounded);
    }
}
