//! Exhaustive grid search over a compact box, used as the reference oracle.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Method, Solution, SolveError, SolverConfig, Status};
use crate::problem::{canonical_sense, Problem};

/// Largest number of coordinates the oracle will enumerate.
pub const MAX_GRID_DIM: usize = 3;
/// Largest number of grid points evaluated in one call.
pub const MAX_GRID_POINTS: usize = 50_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// `(lo, hi)` per coordinate.
    pub bounds: Vec<(f64, f64)>,
    pub step: f64,
}

impl GridSpec {
    pub fn uniform(n: usize, lo: f64, hi: f64, step: f64) -> Self {
        Self {
            bounds: vec![(lo, hi); n],
            step,
        }
    }

    /// Grid coordinates along one axis: `lo, lo+step, …` up to `hi`, with
    /// `hi` itself included.
    fn axis(&self, k: usize) -> Vec<f64> {
        let (lo, hi) = self.bounds[k];
        let count = ((hi - lo) / self.step + 1e-9).floor() as usize;
        let mut pts: Vec<f64> = (0..=count).map(|i| lo + i as f64 * self.step).collect();
        if let Some(last) = pts.last() {
            if hi - last > 1e-12 * (1.0 + hi.abs()) {
                pts.push(hi);
            } else if let Some(l) = pts.last_mut() {
                *l = hi;
            }
        }
        pts
    }
}

fn lex(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| *o != Ordering::Equal)
        .unwrap_or(Ordering::Equal)
}

/// Best feasible grid point; ties go to the lexicographically smallest point.
pub fn solve_grid(
    p: &Problem,
    spec: &GridSpec,
    cfg: &SolverConfig,
) -> Result<Solution, SolveError> {
    let n = p.dim();
    let inapplicable = |reason: String| SolveError::Inapplicable {
        method: Method::Grid,
        reason,
        hint: None,
    };
    if n > MAX_GRID_DIM {
        return Err(inapplicable(format!(
            "{n} coordinates exceed the grid limit of {MAX_GRID_DIM}"
        )));
    }
    if spec.bounds.len() != n {
        return Err(inapplicable(format!(
            "box has {} intervals for {n} coordinates",
            spec.bounds.len()
        )));
    }
    if !(spec.step > 0.0)
        || spec
            .bounds
            .iter()
            .any(|(lo, hi)| !(lo <= hi) || !lo.is_finite() || !hi.is_finite())
    {
        return Err(inapplicable(
            "box must be finite with lo ≤ hi and step > 0".into(),
        ));
    }
    let canon = canonical_sense(p);
    let axes: Vec<Vec<f64>> = (0..n).map(|k| spec.axis(k)).collect();
    let total: usize = axes.iter().map(Vec::len).product();
    if total > MAX_GRID_POINTS {
        return Err(inapplicable(format!(
            "{total} grid points exceed the limit of {MAX_GRID_POINTS}; coarsen the resolution"
        )));
    }
    let point = |mut idx: usize| -> Vec<f64> {
        let mut x = vec![0.0; n];
        for k in (0..n).rev() {
            let len = axes[k].len();
            x[k] = axes[k][idx % len];
            idx /= len;
        }
        x
    };
    let best = (0..total)
        .into_par_iter()
        .filter_map(|i| {
            let x = point(i);
            if canon.max_violation(&x) > cfg.grid_feas_tol {
                return None;
            }
            let v = canon.objective.eval(&x).ok().filter(|v| !v.is_nan())?;
            Some((v, x))
        })
        .reduce_with(
            |a, b| match a.0.total_cmp(&b.0).then_with(|| lex(&a.1, &b.1)) {
                Ordering::Greater => b,
                _ => a,
            },
        );
    let (v, x) = best.ok_or(SolveError::EmptyGrid)?;
    Ok(Solution {
        status: Status::Optimal,
        value: Some(canon.report_value(v)),
        point: Some(x),
        multipliers: None,
        iterations: total,
        method: Method::Grid,
    })
}
