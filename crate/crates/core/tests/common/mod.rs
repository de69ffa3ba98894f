//! Oracles shared by the integration tests and the acceptance harness.
//!
//! Nothing here calls the crate's solvers or linear algebra: vertex
//! enumeration, ray search and chord sampling are written from scratch so
//! they can disagree with the library.

#![allow(dead_code)]

use std::path::PathBuf;

use opt_ontology::expr::Expr;
use opt_ontology::problem::{
    parse_problem, Constraint, Domain, Problem, Relation, Sense, VarKind, VariableSpec,
};
use rand::Rng;

pub fn problems_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("problems")
}

pub fn problem_path(stem: &str) -> PathBuf {
    problems_dir().join(format!("{stem}.optproblem.json"))
}

pub fn load(stem: &str) -> Problem {
    let text = std::fs::read_to_string(problem_path(stem)).unwrap();
    parse_problem(&text).unwrap()
}

/// Chains read off the ontology diagram: LP, SOCP and SDP reach convex
/// optima through conic programming, GP and QP directly.
pub type Chain = &'static [(&'static str, &'static str)];

/// Expected class and chain for each golden file.
pub const CORPUS: [(&str, &str, Chain); 12] = [
    (
        "canonical_lp",
        "LP",
        &[
            ("LP", "Lemma 1"),
            ("ConicProgram", "Proposition 2"),
            ("ConvexOptima", "Definition 1"),
        ],
    ),
    (
        "standard_lp",
        "LP",
        &[
            ("LP", "Lemma 1"),
            ("ConicProgram", "Proposition 2"),
            ("ConvexOptima", "Definition 1"),
        ],
    ),
    (
        "socp",
        "SOCP",
        &[
            ("SOCP", "Lemma 2"),
            ("ConicProgram", "Proposition 2"),
            ("ConvexOptima", "Definition 1"),
        ],
    ),
    (
        "reducible_socp",
        "SOCP",
        &[
            ("SOCP", "Proposition 1"),
            ("LP", "Lemma 1"),
            ("ConicProgram", "Proposition 2"),
            ("ConvexOptima", "Definition 1"),
        ],
    ),
    (
        "sdp",
        "SDP",
        &[
            ("SDP", "Lemma 3"),
            ("ConicProgram", "Proposition 2"),
            ("ConvexOptima", "Definition 1"),
        ],
    ),
    (
        "gp",
        "GP",
        &[("GP", "Lemma 4"), ("ConvexOptima", "Definition 1")],
    ),
    (
        "convex_qp",
        "QP",
        &[("QP", "Lemma 5"), ("ConvexOptima", "Definition 1")],
    ),
    ("nonconvex_qp", "QP", &[("QP", "Definition 7")]),
    (
        "qcqp",
        "QCQP",
        &[("QCQP", "Proposition 2"), ("ConvexOptima", "Definition 1")],
    ),
    (
        "conic",
        "ConicProgram",
        &[
            ("ConicProgram", "Proposition 2"),
            ("ConvexOptima", "Definition 1"),
        ],
    ),
    (
        "convex_nlp",
        "ConvexNLP",
        &[
            ("ConvexNLP", "Definition 1"),
            ("ConvexOptima", "Definition 1"),
        ],
    ),
    ("nonconvex_nlp", "NLP", &[("NLP", "Definition 8")]),
];

#[derive(Debug, Clone, PartialEq)]
pub enum LpOracle {
    Optimal { value: f64, x: Vec<f64> },
    Unbounded,
    Infeasible,
}

/// Gaussian elimination with partial pivoting; `None` when singular.
pub fn gauss(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            let pivot_row = a[col].clone();
            for (dst, src) in a[r][col..].iter_mut().zip(&pivot_row[col..]) {
                *dst -= f * src;
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

fn subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if m < k {
        return vec![];
    }
    let mut out = subsets(m - 1, k);
    for mut s in subsets(m - 1, k - 1) {
        s.push(m - 1);
        out.push(s);
    }
    out
}

fn null_direction(rows: &[&Vec<f64>], n: usize) -> Option<Vec<f64>> {
    match n {
        1 => Some(vec![1.0]),
        2 => Some(vec![-rows[0][1], rows[0][0]]),
        3 => {
            let (a, b) = (rows[0], rows[1]);
            Some(vec![
                a[1] * b[2] - a[2] * b[1],
                a[2] * b[0] - a[0] * b[2],
                a[0] * b[1] - a[1] * b[0],
            ])
        }
        _ => None,
    }
}

/// `min cᵀx` over `{x : a·x ≤ b}` for a pointed polyhedron in at most
/// three dimensions: best vertex, or an improving extreme ray of the
/// recession cone.
pub fn lp_oracle(c: &[f64], rows: &[(Vec<f64>, f64)]) -> LpOracle {
    let n = c.len();
    assert!(n <= 3);
    let feasible = |x: &[f64]| {
        rows.iter().all(|(a, b)| {
            a.iter().zip(x).map(|(p, q)| p * q).sum::<f64>() <= b + 1e-9 * (1.0 + b.abs())
        })
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for s in subsets(rows.len(), n) {
        let a: Vec<Vec<f64>> = s.iter().map(|&i| rows[i].0.clone()).collect();
        let b: Vec<f64> = s.iter().map(|&i| rows[i].1).collect();
        let Some(x) = gauss(a, b) else { continue };
        if !feasible(&x) {
            continue;
        }
        let v: f64 = c.iter().zip(&x).map(|(p, q)| p * q).sum();
        if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
            best = Some((v, x));
        }
    }
    let Some((value, x)) = best else {
        return LpOracle::Infeasible;
    };
    for s in subsets(rows.len(), n - 1) {
        let active: Vec<&Vec<f64>> = s.iter().map(|&i| &rows[i].0).collect();
        let Some(d) = null_direction(&active, n) else {
            continue;
        };
        let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-10 {
            continue;
        }
        for sign in [1.0, -1.0] {
            let d: Vec<f64> = d.iter().map(|v| sign * v / norm).collect();
            let in_cone = rows
                .iter()
                .all(|(a, _)| a.iter().zip(&d).map(|(p, q)| p * q).sum::<f64>() <= 1e-9);
            let slope: f64 = c.iter().zip(&d).map(|(p, q)| p * q).sum();
            if in_cone && slope < -1e-9 {
                return LpOracle::Unbounded;
            }
        }
    }
    LpOracle::Optimal { value, x }
}

/// A random LP over a nonnegative vector together with its `≤` rows
/// (bounds included) for [`lp_oracle`].
pub struct RandomLp {
    pub problem: Problem,
    /// Minimize-sense cost.
    pub c_min: Vec<f64>,
    pub rows: Vec<(Vec<f64>, f64)>,
    /// Built around a point with every row slack.
    pub strictly_feasible: bool,
}

pub fn random_lp(rng: &mut impl Rng) -> RandomLp {
    let n = rng.gen_range(1..=3);
    let m = rng.gen_range(1..=5);
    let sense = if rng.gen_bool(0.5) {
        Sense::Minimize
    } else {
        Sense::Maximize
    };
    let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-5..=5) as f64).collect();
    let strictly_feasible = rng.gen_bool(0.7);
    let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..3.0)).collect();
    let mut constraints = Vec::new();
    let mut rows = Vec::new();
    for _ in 0..m {
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-4..=4) as f64).collect();
        let ge = rng.gen_bool(0.3);
        let ax0: f64 = a.iter().zip(&x0).map(|(p, q)| p * q).sum();
        let b = if strictly_feasible {
            let slack = rng.gen_range(0.5..4.0);
            if ge {
                ax0 - slack
            } else {
                ax0 + slack
            }
        } else {
            rng.gen_range(-6..=8) as f64
        };
        let lhs = Expr::dot(a.clone(), (0..n).collect());
        if ge {
            constraints.push(Constraint::ge(lhs, Expr::Const(b)));
            rows.push((a.iter().map(|v| -v).collect(), -b));
        } else {
            constraints.push(Constraint::le(lhs, Expr::Const(b)));
            rows.push((a, b));
        }
    }
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = -1.0;
        rows.push((e, 0.0));
    }
    let problem = Problem::new(
        sense,
        Expr::dot(c.clone(), (0..n).collect()),
        vec![VariableSpec::new(
            "x",
            VarKind::Vector(n),
            Domain::Nonnegative,
        )],
    )
    .with_constraints(constraints);
    let c_min = match sense {
        Sense::Minimize => c,
        Sense::Maximize => c.iter().map(|v| -v).collect(),
    };
    RandomLp {
        problem,
        c_min,
        rows,
        strictly_feasible,
    }
}

/// Searches for a chord `f(θx + (1−θ)y) > θf(x) + (1−θ)f(y)` with endpoints
/// drawn by `sample`. Returns the worst excess found.
pub fn chord_excess(
    f: impl Fn(&[f64]) -> Option<f64>,
    mut sample: impl FnMut() -> Vec<f64>,
    chords: usize,
    theta: impl Fn(usize) -> f64,
) -> f64 {
    let mut worst: f64 = 0.0;
    for k in 0..chords {
        let x = sample();
        let y = sample();
        let t = theta(k);
        let z: Vec<f64> = x
            .iter()
            .zip(&y)
            .map(|(a, b)| t * a + (1.0 - t) * b)
            .collect();
        let (Some(fx), Some(fy), Some(fz)) = (f(&x), f(&y), f(&z)) else {
            continue;
        };
        let bound = t * fx + (1.0 - t) * fy;
        let excess = (fz - bound) / (1.0 + bound.abs().max(fz.abs()));
        worst = worst.max(excess);
    }
    worst
}

/// Uniform sample of the coordinate box implied by the domains.
pub fn domain_sample(domains: &[Domain], rng: &mut impl Rng) -> Vec<f64> {
    domains
        .iter()
        .map(|d| match d {
            Domain::Free => rng.gen_range(-3.0..3.0),
            Domain::Nonnegative => rng.gen_range(0.0..3.0),
            Domain::StrictlyPositive => rng.gen_range(0.05..3.0),
        })
        .collect()
}

/// `g(x) ≤ 0` rows as closures, with `≥` and equalities rewritten by hand.
pub fn scalar_rows(p: &Problem) -> Vec<Expr> {
    let mut out = Vec::new();
    for c in &p.constraints {
        match c.relation {
            Relation::Le => out.push(Expr::sub(c.lhs.clone(), c.rhs.clone())),
            Relation::Ge => out.push(Expr::sub(c.rhs.clone(), c.lhs.clone())),
            Relation::Eq => {
                out.push(Expr::sub(c.lhs.clone(), c.rhs.clone()));
                out.push(Expr::sub(c.rhs.clone(), c.lhs.clone()));
            }
            Relation::InCone => {
                if matches!(c.cone, Some(opt_ontology::problem::ConeTag::SecondOrder)) {
                    out.push(Expr::sub(c.lhs.clone(), c.rhs.clone()));
                }
            }
        }
    }
    out
}

/// Minimize-sense objective without going through the library's
/// normalization.
pub fn min_objective(p: &Problem) -> Expr {
    match p.sense {
        Sense::Minimize => p.objective.clone(),
        Sense::Maximize => Expr::neg(p.objective.clone()),
    }
}
