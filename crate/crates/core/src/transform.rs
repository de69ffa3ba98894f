//! Certified problem rewrites with point and value maps.
//!
//! Every transform returns a fresh [`Problem`]. The `forward` map sends a
//! point of the source problem to the target, `backward` undoes it, and
//! `value_map` turns an objective value of the target into the source's
//! value in the source's reported sense.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{classify, gp_data, linear_data, ConeBlock, MonomialRow, ProblemClass};
use crate::expr::Expr;
use crate::linalg::{norm2, Matrix};
use crate::problem::{
    canonical_sense, Constraint, Domain, Problem, Relation, Sense, VarKind, VariableSpec,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransformError {
    /// Second-order cone number `cone` (1-based), stored as constraint
    /// `constraint`, has a nonzero `A`.
    #[error("not reducible: cone constraint {cone} (constraint {constraint}) has A ≠ 0")]
    NotReducible { cone: usize, constraint: usize },
    #[error("not a geometric program: {0}")]
    NotGP(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    #[serde(rename = "sense")]
    Sense,
    #[serde(rename = "least-squares")]
    LeastSquares,
    #[serde(rename = "eq2ineq")]
    EqToIneq,
    #[serde(rename = "socp2lp")]
    SocpToLp,
    #[serde(rename = "gp-log")]
    GpLog,
    #[serde(rename = "dual")]
    Dual,
    #[serde(rename = "phase1")]
    Phase1,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        f.write_str(&s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "step", content = "value")]
pub enum ValueStep {
    Negate,
    AddConstant(f64),
    Sqrt,
}

/// Steps applied in order to a target value to recover the source value.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ValueMap {
    pub steps: Vec<ValueStep>,
}

impl ValueMap {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn is_identity(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn apply(&self, v: f64) -> f64 {
        self.steps.iter().fold(v, |acc, s| match s {
            ValueStep::Negate => -acc,
            ValueStep::AddConstant(c) => acc + c,
            ValueStep::Sqrt => acc.max(0.0).sqrt(),
        })
    }

    /// Map for `self` followed by an earlier transform's map `outer`.
    pub fn then(&self, outer: &ValueMap) -> ValueMap {
        ValueMap {
            steps: self.steps.iter().chain(&outer.steps).copied().collect(),
        }
    }
}

impl fmt::Display for ValueMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.steps.is_empty() {
            return f.write_str("identity");
        }
        let parts: Vec<String> = self
            .steps
            .iter()
            .map(|s| match s {
                ValueStep::Negate => "negate".to_string(),
                ValueStep::AddConstant(c) => format!("add {c}"),
                ValueStep::Sqrt => "sqrt".to_string(),
            })
            .collect();
        f.write_str(&parts.join(" then "))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PointStep {
    /// Coordinate-wise natural logarithm.
    Log,
    /// Coordinate-wise exponential.
    Exp,
    /// Appends `s = max(0, maxᵢ gᵢ(x))` for the given `gᵢ ≤ 0` rows; with
    /// no rows `s = 0`.
    AppendMaxSlack(Vec<Expr>),
    /// Keeps the first `n` coordinates.
    Truncate(usize),
}

/// Composable point substitution. `None` means no point correspondence
/// exists (primal and dual live in different spaces).
#[derive(Debug, Clone, PartialEq)]
pub struct PointMap {
    pub steps: Option<Vec<PointStep>>,
}

impl PointMap {
    pub fn identity() -> Self {
        Self {
            steps: Some(Vec::new()),
        }
    }

    pub fn unavailable() -> Self {
        Self { steps: None }
    }

    fn of(step: PointStep) -> Self {
        Self {
            steps: Some(vec![step]),
        }
    }

    pub fn is_available(&self) -> bool {
        self.steps.is_some()
    }

    pub fn apply(&self, x: &[f64]) -> Option<Vec<f64>> {
        let steps = self.steps.as_ref()?;
        let mut v = x.to_vec();
        for s in steps {
            v = match s {
                PointStep::Log => v.iter().map(|t| t.ln()).collect(),
                PointStep::Exp => v.iter().map(|t| t.exp()).collect(),
                PointStep::AppendMaxSlack(rows) => {
                    let mut s = 0.0_f64;
                    for g in rows {
                        s = s.max(g.eval(&v).ok()?);
                    }
                    let mut out = v.clone();
                    out.push(if rows.is_empty() { 0.0 } else { s });
                    out
                }
                PointStep::Truncate(n) => v.iter().take(*n).copied().collect(),
            };
        }
        Some(v)
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &PointMap) -> PointMap {
        match (&self.steps, &next.steps) {
            (Some(a), Some(b)) => PointMap {
                steps: Some(a.iter().chain(b).cloned().collect()),
            },
            _ => PointMap::unavailable(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformResult {
    pub rule: Rule,
    pub transformed: Problem,
    pub forward: PointMap,
    pub backward: PointMap,
    pub value_map: ValueMap,
    pub certificate: String,
}

/// Serializable record of one applied rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainEntry {
    pub rule: Rule,
    pub certificate: String,
    pub value_map: ValueMap,
}

impl TransformResult {
    pub fn entry(&self) -> ChainEntry {
        ChainEntry {
            rule: self.rule,
            certificate: self.certificate.clone(),
            value_map: self.value_map.clone(),
        }
    }
}

/// Ordered list of transforms applied to `source`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformChain {
    pub source: Problem,
    pub steps: Vec<TransformResult>,
}

impl TransformChain {
    pub fn result(&self) -> &Problem {
        self.steps
            .last()
            .map(|s| &s.transformed)
            .unwrap_or(&self.source)
    }

    pub fn forward(&self) -> PointMap {
        self.steps
            .iter()
            .fold(PointMap::identity(), |acc, s| acc.then(&s.forward))
    }

    pub fn backward(&self) -> PointMap {
        self.steps
            .iter()
            .rev()
            .fold(PointMap::identity(), |acc, s| acc.then(&s.backward))
    }

    pub fn value_map(&self) -> ValueMap {
        self.steps
            .iter()
            .rev()
            .fold(ValueMap::identity(), |acc, s| acc.then(&s.value_map))
    }

    pub fn entries(&self) -> Vec<ChainEntry> {
        self.steps.iter().map(TransformResult::entry).collect()
    }
}

fn identity_result(rule: Rule, transformed: Problem, certificate: &str) -> TransformResult {
    TransformResult {
        rule,
        transformed,
        forward: PointMap::identity(),
        backward: PointMap::identity(),
        value_map: ValueMap::identity(),
        certificate: certificate.to_string(),
    }
}

/// Replaces each equality `lhs = rhs` by `lhs ≤ rhs` and `rhs ≤ lhs`, in place.
pub fn eq_to_ineq_pair(p: &Problem) -> TransformResult {
    let mut constraints = Vec::new();
    for c in &p.constraints {
        if c.relation == Relation::Eq {
            constraints.push(Constraint::le(c.lhs.clone(), c.rhs.clone()));
            constraints.push(Constraint::le(c.rhs.clone(), c.lhs.clone()));
        } else {
            constraints.push(c.clone());
        }
    }
    identity_result(
        Rule::EqToIneq,
        Problem {
            constraints,
            ..p.clone()
        },
        "equality as inequality pair",
    )
}

/// Minimize-sense equivalent of `p` as a transform step.
pub fn sense_step(p: &Problem) -> TransformResult {
    let flipped = p.sense == Sense::Maximize;
    let mut out = canonical_sense(p);
    // The chain's value map carries the negation, so the step's own problem
    // reports in its own sense.
    out.reported_sense = out.sense;
    TransformResult {
        value_map: if flipped {
            ValueMap {
                steps: vec![ValueStep::Negate],
            }
        } else {
            ValueMap::identity()
        },
        ..identity_result(Rule::Sense, out, "Definition 8")
    }
}

/// Replaces every second-order cone constraint with `A = 0` by the linear
/// inequality `‖b‖₂ ≤ cᵀx + d`.
pub fn socp_to_lp(p: &Problem) -> Result<TransformResult, TransformError> {
    let c = classify(p);
    if c.class != ProblemClass::SOCP {
        return Err(TransformError::Precondition(format!(
            "expected an SOCP, found {}",
            c.class
        )));
    }
    let mut constraints = p.constraints.clone();
    for (k, block) in c.evidence.cones.iter().enumerate() {
        let ConeBlock::SecondOrder {
            constraint,
            a,
            b,
            c: lin,
            d,
            ..
        } = block
        else {
            continue;
        };
        if !a.is_zero() {
            return Err(TransformError::NotReducible {
                cone: k + 1,
                constraint: *constraint,
            });
        }
        let coeffs: BTreeMap<usize, f64> = lin.iter().copied().enumerate().collect();
        constraints[*constraint] = Constraint::le(Expr::Const(norm2(b)), Expr::affine(&coeffs, *d));
    }
    Ok(identity_result(
        Rule::SocpToLp,
        Problem {
            constraints,
            ..p.clone()
        },
        "Proposition 1",
    ))
}

fn exp_term(t: &MonomialRow) -> Expr {
    let coeffs: BTreeMap<usize, f64> = t.exponents.iter().copied().enumerate().collect();
    Expr::exp(Expr::affine(&coeffs, t.coeff.ln()))
}

fn log_affine(t: &MonomialRow) -> (Expr, f64) {
    let coeffs: BTreeMap<usize, f64> = t.exponents.iter().copied().enumerate().collect();
    (Expr::affine(&coeffs, 0.0), -t.coeff.ln() + 0.0)
}

/// Substitutes `x = exp(y)`: posynomials become sums of exponentials of
/// affine forms and monomial constraints become affine.
pub fn gp_log_transform(p: &Problem) -> Result<TransformResult, TransformError> {
    let c = classify(p);
    if c.class != ProblemClass::GP {
        return Err(TransformError::NotGP(match c.class {
            ProblemClass::LP => "linear program (use the LP route)".to_string(),
            other => format!(
                "{other}: objective and inequalities must be posynomials, equalities monomials, over strictly positive variables"
            ),
        }));
    }
    let gp = gp_data(&canonical_sense(p))
        .ok_or_else(|| TransformError::NotGP("posynomial check failed".into()))?;
    let objective = match gp.objective.as_slice() {
        [single] => exp_term(single),
        terms => Expr::sum(terms.iter().map(exp_term).collect()),
    };
    let constraints = gp
        .constraints
        .iter()
        .map(|g| match (g.equality, g.terms.as_slice()) {
            (true, [t]) => {
                let (lhs, rhs) = log_affine(t);
                Constraint::eq(lhs, Expr::Const(rhs))
            }
            (false, [t]) => {
                let (lhs, rhs) = log_affine(t);
                Constraint::le(lhs, Expr::Const(rhs))
            }
            (_, terms) => Constraint::le(
                Expr::sum(terms.iter().map(exp_term).collect()),
                Expr::Const(1.0),
            ),
        })
        .collect();
    let variables = p
        .variables
        .iter()
        .map(|v| VariableSpec::new(v.name.clone(), v.kind, Domain::Free))
        .collect();
    // Coefficients are read off numerically, so parameters do not survive.
    let out = Problem::new(Sense::Minimize, objective, variables).with_constraints(constraints);
    Ok(TransformResult {
        rule: Rule::GpLog,
        transformed: out,
        forward: PointMap::of(PointStep::Log),
        backward: PointMap::of(PointStep::Exp),
        value_map: if p.sense == Sense::Maximize {
            ValueMap {
                steps: vec![ValueStep::Negate],
            }
        } else {
            ValueMap::identity()
        },
        certificate: "Lemma 4".into(),
    })
}

/// Dual of `max{cᵀx : Ax ≤ b, x ≥ 0}` (symmetric form) or
/// `max{cᵀx : Ax ≤ b}` (alternative form).
///
/// Sign constraints may come from variable domains or from rows that bound a
/// single coordinate below by zero.
pub fn lp_dual(p: &Problem) -> Result<TransformResult, TransformError> {
    let lin = linear_data(p)
        .ok_or_else(|| TransformError::ShapeMismatch("not a linear program".into()))?;
    if !lin.maximize {
        return Err(TransformError::ShapeMismatch(
            "primal must be a maximization".into(),
        ));
    }
    let n = lin.c.len();
    let mut signed: Vec<bool> = lin.domains.iter().map(|d| *d != Domain::Free).collect();
    let mut a_rows = Vec::new();
    let mut b = Vec::new();
    for row in &lin.rows {
        let support: Vec<usize> = (0..n).filter(|&j| row.a[j] != 0.0).collect();
        let sign_row = support.len() == 1 && row.b == 0.0 && {
            let v = row.a[support[0]];
            (row.relation == Relation::Ge && v > 0.0) || (row.relation == Relation::Le && v < 0.0)
        };
        if sign_row {
            signed[support[0]] = true;
            continue;
        }
        match row.relation {
            Relation::Le => {
                a_rows.push(row.a.clone());
                b.push(row.b);
            }
            Relation::Eq => {
                return Err(TransformError::ShapeMismatch(format!(
                    "constraint {} is an equality",
                    row.constraint
                )))
            }
            _ => {
                return Err(TransformError::ShapeMismatch(format!(
                    "constraint {} is not of the form aᵀx ≤ b",
                    row.constraint
                )))
            }
        }
    }
    let symmetric = signed.iter().all(|s| *s);
    if !symmetric && signed.iter().any(|s| *s) {
        return Err(TransformError::ShapeMismatch(
            "either every variable or none must be sign-constrained".into(),
        ));
    }
    let m = a_rows.len();
    if m == 0 {
        return Err(TransformError::ShapeMismatch(
            "no rows Ax ≤ b to dualize".into(),
        ));
    }
    let at = Matrix::from_rows(&a_rows)
        .map_err(|e| TransformError::ShapeMismatch(e.to_string()))?
        .transpose();
    let ys: Vec<usize> = (0..m).collect();
    let objective = if lin.c0 == 0.0 {
        Expr::dot(b.clone(), ys.clone())
    } else {
        Expr::add(Expr::dot(b.clone(), ys.clone()), Expr::Const(lin.c0))
    };
    let constraints = (0..n)
        .map(|j| {
            let lhs = Expr::dot(at.row(j).to_vec(), ys.clone());
            let rhs = Expr::Const(lin.c[j]);
            if symmetric {
                Constraint::ge(lhs, rhs)
            } else {
                Constraint::eq(lhs, rhs)
            }
        })
        .collect();
    let dual = Problem::new(
        Sense::Minimize,
        objective,
        vec![VariableSpec::new(
            "y",
            VarKind::Vector(m),
            Domain::Nonnegative,
        )],
    )
    .with_constraints(constraints);
    Ok(TransformResult {
        rule: Rule::Dual,
        transformed: dual,
        forward: PointMap::unavailable(),
        backward: PointMap::unavailable(),
        value_map: ValueMap::identity(),
        certificate: if symmetric {
            "symmetric dual".into()
        } else {
            "alternative dual".into()
        },
    })
}

fn fresh_name(p: &Problem, base: &str) -> String {
    let taken = |n: &str| p.variables.iter().any(|v| v.name == n) || p.parameters.contains_key(n);
    if !taken(base) {
        return base.to_string();
    }
    (1..)
        .map(|k| format!("{base}{k}"))
        .find(|n| !taken(n))
        .unwrap_or_else(|| base.to_string())
}

/// Relaxes every `gᵢ(x) ≤ 0` to `gᵢ(x) ≤ s` with one shared slack and
/// minimizes `s`. The source is feasible iff the optimum is `≤ 0`.
pub fn phase1_slack(p: &Problem) -> Result<TransformResult, TransformError> {
    let n = p.dim();
    let mut gs = Vec::new();
    for (i, c) in p.constraints.iter().enumerate() {
        let g = match (c.relation, c.cone) {
            (Relation::Le, _) | (Relation::InCone, Some(crate::problem::ConeTag::SecondOrder)) => {
                Expr::sub(c.lhs.clone(), c.rhs.clone())
            }
            (Relation::Ge, _) => Expr::sub(c.rhs.clone(), c.lhs.clone()),
            (Relation::Eq, _) => {
                return Err(TransformError::Precondition(format!(
                    "constraint {i} is an equality; apply eq2ineq first"
                )))
            }
            _ => {
                return Err(TransformError::Precondition(format!(
                    "constraint {i} is a matrix cone"
                )))
            }
        };
        gs.push(g);
    }
    let s = Expr::Var(n);
    let mut variables = p.variables.clone();
    variables.push(VariableSpec::new(
        fresh_name(p, "s"),
        VarKind::Scalar,
        Domain::Free,
    ));
    let constraints = gs
        .iter()
        .map(|g| Constraint::le(g.clone(), s.clone()))
        .collect();
    let mut out = Problem::new(Sense::Minimize, s, variables).with_constraints(constraints);
    out.parameters = p.parameters.clone();
    Ok(TransformResult {
        rule: Rule::Phase1,
        transformed: out,
        forward: PointMap::of(PointStep::AppendMaxSlack(gs)),
        backward: PointMap::of(PointStep::Truncate(n)),
        value_map: ValueMap::identity(),
        certificate: "phase-1 slack".into(),
    })
}

/// Rewrites a `‖A v + b‖₂` objective as `½vᵀ(2AᵀA)v + (2Aᵀb)ᵀv`; the
/// dropped `bᵀb` and the square root are carried by the value map.
pub fn least_squares(p: &Problem) -> Option<TransformResult> {
    if p.sense != Sense::Minimize {
        return None;
    }
    let Expr::Norm2 { a, b, vars } = &p.objective else {
        return None;
    };
    let at = a.transpose();
    let k = vars.len();
    let mut q = Matrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            q[(i, j)] = 2.0 * crate::linalg::dot(at.row(i), at.row(j));
        }
    }
    let lin: Vec<f64> = at.mul_vec(b).iter().map(|v| 2.0 * v).collect();
    let btb = crate::linalg::dot(b, b);
    let objective = Expr::add(
        Expr::Quad {
            q,
            vars: vars.clone(),
        },
        Expr::dot(lin, vars.clone()),
    );
    Some(TransformResult {
        rule: Rule::LeastSquares,
        transformed: Problem {
            objective,
            ..p.clone()
        },
        forward: PointMap::identity(),
        backward: PointMap::identity(),
        value_map: ValueMap {
            steps: vec![ValueStep::AddConstant(btb), ValueStep::Sqrt],
        },
        certificate: "Proposition 2".into(),
    })
}

/// Applies sense normalization, the least-squares expansion, the GP log
/// transform and the SOCP reduction, each when it applies.
pub fn to_convex_min(p: &Problem) -> TransformChain {
    let mut steps: Vec<TransformResult> = Vec::new();
    let current = |steps: &Vec<TransformResult>| {
        steps
            .last()
            .map(|s| s.transformed.clone())
            .unwrap_or_else(|| p.clone())
    };
    if p.sense == Sense::Maximize {
        steps.push(sense_step(p));
    }
    if let Some(ls) = least_squares(&current(&steps)) {
        steps.push(ls);
    }
    let cur = current(&steps);
    let class = classify(&cur);
    if class.class == ProblemClass::GP {
        if let Ok(t) = gp_log_transform(&cur) {
            steps.push(t);
        }
    } else if class.is_reducible_socp() {
        if let Ok(t) = socp_to_lp(&cur) {
            steps.push(t);
        }
    }
    TransformChain {
        source: p.clone(),
        steps,
    }
}
