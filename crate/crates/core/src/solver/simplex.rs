//! Two-phase dense tableau simplex with Bland's rule.

use super::{hint_for, reported_value, Method, Solution, SolveError, SolverConfig, Status};
use crate::classify::linear_data;
use crate::problem::{canonical_sense, Domain, Problem, Relation};

const PIVOT_CAP: usize = 50_000;

/// `min cᵀx` subject to `rows` and `x_j ≥ 0` where `nonneg[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProblem {
    pub c: Vec<f64>,
    pub rows: Vec<(Vec<f64>, Relation, f64)>,
    pub nonneg: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearStatus {
    Optimal,
    Unbounded,
    Infeasible,
}

/// Result with multipliers in `g ≤ 0` form: `≤` rows use `a·x − b`, `≥`
/// rows use `b − a·x` (both `≥ 0` at optimality), equalities carry a free
/// `ν` for `a·x − b`, and `bound_duals[j] ≥ 0` belongs to `−x_j ≤ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOutcome {
    pub status: LinearStatus,
    pub x: Vec<f64>,
    pub value: f64,
    pub row_duals: Vec<f64>,
    pub bound_duals: Vec<f64>,
    pub iterations: usize,
}

struct Tableau {
    /// `m` constraint rows, each `ncols + 1` wide (last entry is the rhs).
    t: Vec<Vec<f64>>,
    /// Reduced-cost row, same width; its rhs holds minus the objective.
    r: Vec<f64>,
    basis: Vec<usize>,
    ncols: usize,
    tol: f64,
    pivots: usize,
}

enum Phase {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn price(&mut self, cost: &[f64]) {
        let w = self.ncols + 1;
        self.r = (0..w)
            .map(|j| {
                let cj = if j < self.ncols { cost[j] } else { 0.0 };
                cj - self
                    .t
                    .iter()
                    .zip(&self.basis)
                    .map(|(row, &b)| cost[b] * row[j])
                    .sum::<f64>()
            })
            .collect();
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let p = self.t[pr][pc];
        for v in &mut self.t[pr] {
            *v /= p;
        }
        let prow = self.t[pr].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i != pr {
                let f = row[pc];
                if f != 0.0 {
                    for (v, pv) in row.iter_mut().zip(&prow) {
                        *v -= f * pv;
                    }
                    row[pc] = 0.0;
                }
            }
        }
        let f = self.r[pc];
        if f != 0.0 {
            for (v, pv) in self.r.iter_mut().zip(&prow) {
                *v -= f * pv;
            }
            self.r[pc] = 0.0;
        }
        self.basis[pr] = pc;
        self.pivots += 1;
    }

    /// Bland iterations over columns `0..allowed`.
    fn run(&mut self, allowed: usize) -> Result<Phase, SolveError> {
        loop {
            if self.pivots > PIVOT_CAP {
                return Err(SolveError::Numeric("simplex pivot cap reached".into()));
            }
            let Some(pc) = (0..allowed).find(|&j| self.r[j] < -self.tol) else {
                return Ok(Phase::Optimal);
            };
            let rhs = self.ncols;
            let mut best: Option<(f64, usize, usize)> = None;
            for (i, row) in self.t.iter().enumerate() {
                if row[pc] > self.tol {
                    let ratio = row[rhs] / row[pc];
                    let better = match best {
                        None => true,
                        Some((r, _, b)) => {
                            ratio < r - self.tol * (1.0 + r.abs())
                                || (ratio <= r + self.tol * (1.0 + r.abs()) && self.basis[i] < b)
                        }
                    };
                    if better {
                        best = Some((ratio, i, self.basis[i]));
                    }
                }
            }
            match best {
                Some((_, pr, _)) => self.pivot(pr, pc),
                None => return Ok(Phase::Unbounded),
            }
        }
    }
}

/// Solves a dense LP by the two-phase method.
pub fn solve_linear(lp: &LinearProblem, tol: f64) -> Result<LinearOutcome, SolveError> {
    let n = lp.c.len();
    let m = lp.rows.len();
    // Structural columns: one per nonnegative coordinate, two per free one.
    let mut col_of = Vec::with_capacity(n);
    let mut next = 0;
    for j in 0..n {
        col_of.push(next);
        next += if lp.nonneg[j] { 1 } else { 2 };
    }
    let slack_of: Vec<Option<usize>> = lp
        .rows
        .iter()
        .map(|(_, rel, _)| match rel {
            Relation::Le | Relation::Ge => {
                next += 1;
                Some(next - 1)
            }
            _ => None,
        })
        .collect();
    let n_real = next;
    let ncols = n_real + m;
    let mut sigma = vec![1.0; m];
    let mut t = vec![vec![0.0; ncols + 1]; m];
    for (i, (a, rel, b)) in lp.rows.iter().enumerate() {
        let row = &mut t[i];
        for j in 0..n {
            row[col_of[j]] = a[j];
            if !lp.nonneg[j] {
                row[col_of[j] + 1] = -a[j];
            }
        }
        if let Some(s) = slack_of[i] {
            row[s] = if *rel == Relation::Le { 1.0 } else { -1.0 };
        }
        row[ncols] = *b;
        if *b < 0.0 {
            sigma[i] = -1.0;
            for v in row.iter_mut() {
                *v = -*v;
            }
        }
        row[n_real + i] = 1.0;
    }
    let mut tab = Tableau {
        t,
        r: Vec::new(),
        basis: (n_real..n_real + m).collect(),
        ncols,
        tol,
        pivots: 0,
    };

    let mut phase1_cost = vec![0.0; ncols];
    for c in phase1_cost.iter_mut().skip(n_real) {
        *c = 1.0;
    }
    tab.price(&phase1_cost);
    tab.run(ncols)?;
    let infeasibility = -tab.r[ncols];
    let scale = 1.0 + lp.rows.iter().map(|(_, _, b)| b.abs()).fold(0.0, f64::max);
    if infeasibility > tol * scale {
        return Ok(LinearOutcome {
            status: LinearStatus::Infeasible,
            x: Vec::new(),
            value: f64::NAN,
            row_duals: Vec::new(),
            bound_duals: Vec::new(),
            iterations: tab.pivots,
        });
    }
    // Drive zero-level artificials out of the basis where possible.
    for i in 0..m {
        if tab.basis[i] >= n_real {
            if let Some(j) = (0..n_real).find(|&j| tab.t[i][j].abs() > tol) {
                tab.pivot(i, j);
            }
        }
    }

    let mut cost = vec![0.0; ncols];
    for j in 0..n {
        cost[col_of[j]] = lp.c[j];
        if !lp.nonneg[j] {
            cost[col_of[j] + 1] = -lp.c[j];
        }
    }
    tab.price(&cost);
    if let Phase::Unbounded = tab.run(n_real)? {
        return Ok(LinearOutcome {
            status: LinearStatus::Unbounded,
            x: Vec::new(),
            value: f64::NEG_INFINITY,
            row_duals: Vec::new(),
            bound_duals: Vec::new(),
            iterations: tab.pivots,
        });
    }

    let mut z = vec![0.0; ncols];
    for (i, &b) in tab.basis.iter().enumerate() {
        z[b] = tab.t[i][ncols];
    }
    let x: Vec<f64> = (0..n)
        .map(|j| {
            let v = z[col_of[j]] - if lp.nonneg[j] { 0.0 } else { z[col_of[j] + 1] };
            v + 0.0
        })
        .collect();
    let row_duals = (0..m)
        .map(|i| {
            let y = -tab.r[n_real + i];
            let dual = match lp.rows[i].1 {
                Relation::Ge => sigma[i] * y,
                _ => -sigma[i] * y,
            };
            dual + 0.0
        })
        .collect();
    let bound_duals = (0..n)
        .map(|j| {
            if lp.nonneg[j] {
                tab.r[col_of[j]] + 0.0
            } else {
                0.0
            }
        })
        .collect();
    let value = lp.c.iter().zip(&x).map(|(c, x)| c * x).sum();
    Ok(LinearOutcome {
        status: LinearStatus::Optimal,
        x,
        value,
        row_duals,
        bound_duals,
        iterations: tab.pivots,
    })
}

/// Simplex on an LP-classified problem.
pub fn solve_simplex(p: &Problem, cfg: &SolverConfig) -> Result<Solution, SolveError> {
    let canon = canonical_sense(p);
    let lin = linear_data(&canon).ok_or_else(|| SolveError::Inapplicable {
        method: Method::Simplex,
        reason: "objective and constraints must be linear".into(),
        hint: hint_for(p),
    })?;
    let lp = LinearProblem {
        c: lin.c.clone(),
        rows: lin
            .rows
            .iter()
            .map(|r| (r.a.clone(), r.relation, r.b))
            .collect(),
        nonneg: lin.domains.iter().map(|d| *d != Domain::Free).collect(),
    };
    let out = solve_linear(&lp, cfg.simplex_tol)?;
    match out.status {
        LinearStatus::Infeasible => Ok(Solution::without_point(
            Status::Infeasible,
            out.iterations,
            Method::Simplex,
        )),
        LinearStatus::Unbounded => Ok(Solution::without_point(
            Status::Unbounded,
            out.iterations,
            Method::Simplex,
        )),
        LinearStatus::Optimal => {
            let mut multipliers = Vec::new();
            for (row, dual) in lin.rows.iter().zip(&out.row_duals) {
                if row.relation == Relation::Eq {
                    multipliers.push(dual.max(0.0));
                    multipliers.push((-dual).max(0.0));
                } else {
                    multipliers.push(*dual);
                }
            }
            for (j, d) in lin.domains.iter().enumerate() {
                if *d != Domain::Free {
                    multipliers.push(out.bound_duals[j]);
                }
            }
            Ok(Solution {
                status: Status::Optimal,
                value: Some(reported_value(p, &out.x)?),
                point: Some(out.x),
                multipliers: Some(multipliers),
                iterations: out.iterations,
                method: Method::Simplex,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(c: Vec<f64>, rows: Vec<(Vec<f64>, Relation, f64)>, nonneg: bool) -> LinearProblem {
        let n = c.len();
        LinearProblem {
            c,
            rows,
            nonneg: vec![nonneg; n],
        }
    }

    #[test]
    fn textbook_maximum() {
        let p = lp(
            vec![-3.0, -5.0],
            vec![
                (vec![1.0, 0.0], Relation::Le, 4.0),
                (vec![0.0, 2.0], Relation::Le, 12.0),
                (vec![3.0, 2.0], Relation::Le, 18.0),
            ],
            true,
        );
        let out = solve_linear(&p, 1e-9).unwrap();
        assert_eq!(out.status, LinearStatus::Optimal);
        assert!((out.value + 36.0).abs() < 1e-9);
        assert!((out.x[0] - 2.0).abs() < 1e-9 && (out.x[1] - 6.0).abs() < 1e-9);
        // Stationarity: c + Σ λ a − μ = 0.
        for j in 0..2 {
            let s: f64 = p.c[j]
                + (0..3)
                    .map(|i| out.row_duals[i] * p.rows[i].0[j])
                    .sum::<f64>()
                - out.bound_duals[j];
            assert!(s.abs() < 1e-9, "coordinate {j}: {s}");
        }
    }

    #[test]
    fn unbounded_and_infeasible() {
        let unb = lp(vec![1.0], vec![(vec![-1.0], Relation::Ge, 1.0)], false);
        assert_eq!(
            solve_linear(&unb, 1e-9).unwrap().status,
            LinearStatus::Unbounded
        );
        let inf = lp(
            vec![0.0],
            vec![
                (vec![1.0], Relation::Le, -1.0),
                (vec![1.0], Relation::Ge, 0.0),
            ],
            false,
        );
        assert_eq!(
            solve_linear(&inf, 1e-9).unwrap().status,
            LinearStatus::Infeasible
        );
    }

    #[test]
    fn equality_and_free_variables() {
        // min x + 2y s.t. x + y = 1, x - y ≤ 3, free.
        let p = lp(
            vec![1.0, 2.0],
            vec![
                (vec![1.0, 1.0], Relation::Eq, 1.0),
                (vec![1.0, -1.0], Relation::Le, 3.0),
            ],
            false,
        );
        let out = solve_linear(&p, 1e-9).unwrap();
        assert!((out.x[0] - 2.0).abs() < 1e-9 && (out.x[1] + 1.0).abs() < 1e-9);
        assert!((out.value - 0.0).abs() < 1e-9);
    }
}
