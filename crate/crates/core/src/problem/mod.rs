//! The problem container: variables, objective, constraints and parameters.

mod format;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Expr, ExprError, SYMMETRY_TOL};
use crate::linalg::{psd_check, Matrix};

pub use format::{parse_problem, serialize_problem, ParseError};

/// Largest total number of scalar coordinates a problem may declare.
pub const MAX_DIMENSION: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Scalar,
    Vector(usize),
    SymmetricMatrix(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    #[default]
    Free,
    Nonnegative,
    StrictlyPositive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariableSpec {
    pub name: String,
    pub kind: VarKind,
    pub domain: Domain,
}

impl VariableSpec {
    pub fn new(name: impl Into<String>, kind: VarKind, domain: Domain) -> Self {
        Self {
            name: name.into(),
            kind,
            domain,
        }
    }

    /// Number of flat coordinates; a symmetric `n×n` matrix stores its upper
    /// triangle row by row.
    pub fn len(&self) -> usize {
        match self.kind {
            VarKind::Scalar => 1,
            VarKind::Vector(n) => n,
            VarKind::SymmetricMatrix(n) => n * (n + 1) / 2,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn coordinate_label(&self, local: usize) -> String {
        match self.kind {
            VarKind::Scalar => self.name.clone(),
            VarKind::Vector(_) => format!("{}[{local}]", self.name),
            VarKind::SymmetricMatrix(n) => {
                let (i, j) = upper_triangle_position(n, local);
                format!("{}[{i},{j}]", self.name)
            }
        }
    }
}

pub(crate) fn upper_triangle_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = (i.min(j), i.max(j));
    i * n - i * i.saturating_sub(1) / 2 + j - i
}

pub(crate) fn upper_triangle_position(n: usize, local: usize) -> (usize, usize) {
    let mut k = local;
    for i in 0..n {
        let row = n - i;
        if k < row {
            return (i, i + k);
        }
        k -= row;
    }
    (n, n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "in-cone")]
    InCone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConeTag {
    SecondOrder,
    PositiveSemidefinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub lhs: Expr,
    pub relation: Relation,
    pub rhs: Expr,
    pub cone: Option<ConeTag>,
}

impl Constraint {
    pub fn le(lhs: Expr, rhs: Expr) -> Self {
        Self {
            lhs,
            relation: Relation::Le,
            rhs,
            cone: None,
        }
    }

    pub fn ge(lhs: Expr, rhs: Expr) -> Self {
        Self {
            lhs,
            relation: Relation::Ge,
            rhs,
            cone: None,
        }
    }

    pub fn eq(lhs: Expr, rhs: Expr) -> Self {
        Self {
            lhs,
            relation: Relation::Eq,
            rhs,
            cone: None,
        }
    }

    /// `‖A x + b‖₂ ≤ rhs` written as a second-order cone membership.
    pub fn second_order(norm: Expr, rhs: Expr) -> Self {
        Self {
            lhs: norm,
            relation: Relation::InCone,
            rhs,
            cone: Some(ConeTag::SecondOrder),
        }
    }

    /// The symmetric-matrix variable whose first coordinate is `first` is
    /// positive semidefinite.
    pub fn psd(first: usize) -> Self {
        Self {
            lhs: Expr::Var(first),
            relation: Relation::InCone,
            rhs: Expr::Const(0.0),
            cone: Some(ConeTag::PositiveSemidefinite),
        }
    }

    pub fn exprs(&self) -> [&Expr; 2] {
        [&self.lhs, &self.rhs]
    }

    fn is_psd(&self) -> bool {
        self.relation == Relation::InCone && self.cone == Some(ConeTag::PositiveSemidefinite)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(
        "constraint {index} is a positive-semidefinite cone and has no scalar inequality form"
    )]
    MatrixConstraint { index: usize },
    #[error("constraint {index} is malformed: {detail}")]
    Malformed { index: usize, detail: String },
}

/// Where a scalar inequality row `g(x) ≤ 0` comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum RowOrigin {
    /// Constraint `index` itself (`≤`, `≥` or second-order cone).
    Constraint { index: usize },
    /// `lhs - rhs ≤ 0` half of equality `index`.
    EqualityUpper { index: usize },
    /// `rhs - lhs ≤ 0` half of equality `index`.
    EqualityLower { index: usize },
    /// `-x_coord ≤ 0` from a nonnegative or strictly positive domain.
    Bound { coord: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct InequalityRow {
    pub g: Expr,
    pub origin: RowOrigin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub sense: Sense,
    pub objective: Expr,
    pub variables: Vec<VariableSpec>,
    pub constraints: Vec<Constraint>,
    pub parameters: BTreeMap<String, f64>,
    /// Sense in which optimal values are reported. Differs from `sense`
    /// after [`canonical_sense`] flipped a maximization.
    pub reported_sense: Sense,
}

impl Problem {
    pub fn new(sense: Sense, objective: Expr, variables: Vec<VariableSpec>) -> Self {
        Self {
            sense,
            objective,
            variables,
            constraints: Vec::new(),
            parameters: BTreeMap::new(),
            reported_sense: sense,
        }
    }

    pub fn with_constraints(mut self, constraints: Vec<Constraint>) -> Self {
        self.constraints = constraints;
        self
    }

    pub fn with_parameters(mut self, parameters: BTreeMap<String, f64>) -> Self {
        self.parameters = parameters;
        self
    }

    /// Total number of flat coordinates.
    pub fn dim(&self) -> usize {
        self.variables.iter().map(VariableSpec::len).sum()
    }

    pub fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.variables
            .iter()
            .map(|v| {
                let o = acc;
                acc += v.len();
                o
            })
            .collect()
    }

    /// `(variable index, local coordinate)` owning flat coordinate `coord`.
    pub fn variable_of(&self, coord: usize) -> Option<(usize, usize)> {
        let mut start = 0;
        for (k, v) in self.variables.iter().enumerate() {
            if coord < start + v.len() {
                return Some((k, coord - start));
            }
            start += v.len();
        }
        None
    }

    pub fn coordinate_name(&self, coord: usize) -> String {
        match self.variable_of(coord) {
            Some((k, local)) => self.variables[k].coordinate_label(local),
            None => format!("#{coord}"),
        }
    }

    pub fn coordinate_domains(&self) -> Vec<Domain> {
        self.variables
            .iter()
            .flat_map(|v| std::iter::repeat_n(v.domain, v.len()))
            .collect()
    }

    /// Resolves `x`, `x[i]` or `X[i,j]` to flat coordinates.
    pub fn resolve(&self, reference: &str) -> Option<Vec<usize>> {
        let (base, index) = match reference.find('[') {
            Some(p) if reference.ends_with(']') => (
                &reference[..p],
                Some(&reference[p + 1..reference.len() - 1]),
            ),
            Some(_) => return None,
            None => (reference, None),
        };
        let k = self.variables.iter().position(|v| v.name == base)?;
        let var = &self.variables[k];
        let start = self.offsets()[k];
        match (var.kind, index) {
            (_, None) => Some((start..start + var.len()).collect()),
            (VarKind::Vector(n), Some(ix)) => {
                let i: usize = ix.trim().parse().ok()?;
                (i < n).then(|| vec![start + i])
            }
            (VarKind::SymmetricMatrix(n), Some(ix)) => {
                let mut parts = ix.split(',').map(|p| p.trim().parse::<usize>());
                let i = parts.next()?.ok()?;
                let j = parts.next()?.ok()?;
                if parts.next().is_some() || i >= n || j >= n {
                    return None;
                }
                Some(vec![start + upper_triangle_index(n, i, j)])
            }
            (VarKind::Scalar, Some(_)) => None,
        }
    }

    /// Index of the symmetric-matrix variable constrained by a PSD cone
    /// constraint, when the constraint is well formed.
    pub fn psd_variable(&self, c: &Constraint) -> Option<usize> {
        if !c.is_psd() {
            return None;
        }
        let Expr::Var(first) = c.lhs else {
            return None;
        };
        let offsets = self.offsets();
        self.variables.iter().enumerate().find_map(|(k, v)| {
            (matches!(v.kind, VarKind::SymmetricMatrix(_)) && offsets[k] == first).then_some(k)
        })
    }

    /// Dense value of symmetric-matrix variable `k` at `x`.
    pub fn matrix_value(&self, k: usize, x: &[f64]) -> Option<Matrix> {
        let VarKind::SymmetricMatrix(n) = self.variables.get(k)?.kind else {
            return None;
        };
        let start = self.offsets()[k];
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = *x.get(start + upper_triangle_index(n, i, j))?;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Some(m)
    }

    /// Maps a value of this problem's objective to the reported sense.
    pub fn report_value(&self, v: f64) -> f64 {
        if self.sense == self.reported_sense {
            v
        } else {
            -v
        }
    }

    /// Copy with parameter `name` set to `value` everywhere it appears.
    pub fn with_parameter(&self, name: &str, value: f64) -> Self {
        let mut params = self.parameters.clone();
        params.insert(name.to_string(), value);
        self.rebind(params)
    }

    fn rebind(&self, parameters: BTreeMap<String, f64>) -> Self {
        Self {
            objective: self.objective.with_parameters(&parameters),
            constraints: self
                .constraints
                .iter()
                .map(|c| Constraint {
                    lhs: c.lhs.with_parameters(&parameters),
                    rhs: c.rhs.with_parameters(&parameters),
                    ..c.clone()
                })
                .collect(),
            parameters,
            ..self.clone()
        }
    }

    /// Violation of constraint `index` at `x` (0 when satisfied).
    pub fn constraint_violation(&self, index: usize, x: &[f64]) -> Result<f64, ProblemError> {
        let c = &self.constraints[index];
        if c.is_psd() {
            let k = self
                .psd_variable(c)
                .ok_or_else(|| ProblemError::Malformed {
                    index,
                    detail: "PSD operand is not a symmetric-matrix variable".into(),
                })?;
            let m = self
                .matrix_value(k, x)
                .ok_or(ExprError::UnboundVariable(x.len()))?;
            let v = psd_check(&m, 0.0).map_err(|e| ProblemError::Malformed {
                index,
                detail: e.to_string(),
            })?;
            return Ok((-v.min_eigenvalue).max(0.0));
        }
        let l = c.lhs.eval(x)?;
        let r = c.rhs.eval(x)?;
        Ok(match c.relation {
            Relation::Le | Relation::InCone => (l - r).max(0.0),
            Relation::Ge => (r - l).max(0.0),
            Relation::Eq => (l - r).abs(),
        })
    }

    /// Largest constraint or domain violation; evaluation failures count as
    /// infinite violation.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        if x.len() != self.dim() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for (xi, d) in x.iter().zip(self.coordinate_domains()) {
            let v = match d {
                Domain::Free => 0.0,
                Domain::Nonnegative => (-xi).max(0.0),
                Domain::StrictlyPositive => {
                    if *xi > 0.0 {
                        0.0
                    } else {
                        (-xi).max(f64::MIN_POSITIVE)
                    }
                }
            };
            worst = worst.max(v);
        }
        for i in 0..self.constraints.len() {
            match self.constraint_violation(i, x) {
                Ok(v) if v.is_finite() => worst = worst.max(v),
                _ => return f64::INFINITY,
            }
        }
        worst
    }

    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        self.max_violation(x) <= tol
    }

    /// Every constraint and domain bound as a scalar row `g(x) ≤ 0`, in
    /// constraint order followed by coordinate bounds. Equalities contribute
    /// two rows. This ordering indexes solver multipliers.
    pub fn inequality_rows(&self) -> Result<Vec<InequalityRow>, ProblemError> {
        let mut rows = Vec::new();
        for (index, c) in self.constraints.iter().enumerate() {
            let diff = || Expr::sub(c.lhs.clone(), c.rhs.clone());
            match c.relation {
                Relation::Le => rows.push(InequalityRow {
                    g: diff(),
                    origin: RowOrigin::Constraint { index },
                }),
                Relation::Ge => rows.push(InequalityRow {
                    g: Expr::sub(c.rhs.clone(), c.lhs.clone()),
                    origin: RowOrigin::Constraint { index },
                }),
                Relation::Eq => {
                    rows.push(InequalityRow {
                        g: diff(),
                        origin: RowOrigin::EqualityUpper { index },
                    });
                    rows.push(InequalityRow {
                        g: Expr::sub(c.rhs.clone(), c.lhs.clone()),
                        origin: RowOrigin::EqualityLower { index },
                    });
                }
                Relation::InCone => match c.cone {
                    Some(ConeTag::SecondOrder) => rows.push(InequalityRow {
                        g: diff(),
                        origin: RowOrigin::Constraint { index },
                    }),
                    _ => return Err(ProblemError::MatrixConstraint { index }),
                },
            }
        }
        for (coord, d) in self.coordinate_domains().into_iter().enumerate() {
            if d != Domain::Free {
                rows.push(InequalityRow {
                    g: Expr::neg(Expr::Var(coord)),
                    origin: RowOrigin::Bound { coord },
                });
            }
        }
        Ok(rows)
    }

    /// All expressions of the problem, objective first.
    pub fn expressions(&self) -> impl Iterator<Item = &Expr> {
        std::iter::once(&self.objective).chain(self.constraints.iter().flat_map(|c| c.exprs()))
    }
}

/// Equivalent minimization. A maximization has its objective negated and
/// keeps reporting values in the maximize sense.
pub fn canonical_sense(p: &Problem) -> Problem {
    match p.sense {
        Sense::Minimize => p.clone(),
        Sense::Maximize => Problem {
            sense: Sense::Minimize,
            objective: p.objective.clone().negated(),
            reported_sense: if p.reported_sense == Sense::Maximize {
                Sense::Maximize
            } else {
                Sense::Minimize
            },
            ..p.clone()
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationCode {
    BadIdentifier,
    DuplicateVariable,
    EmptyDimension,
    DimensionCap,
    UndeclaredVariable,
    PayloadShape,
    AsymmetricQ,
    MonomialNonpositiveCoeff,
    NonFinite,
    ConeTagMismatch,
    ConeOperand,
    UnknownParameter,
    ParameterNameClash,
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        f.write_str(&s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.code, self.message)
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn check_expr(e: &Expr, where_: &str, p: &Problem, out: &mut Vec<Violation>) {
    let dim = p.dim();
    let mut push = |code, message: String| out.push(Violation { code, message });
    e.visit(&mut |node| {
        let shape = |what: &str| format!("{where_}: {what}");
        match node {
            Expr::Const(v) | Expr::Scale(v, _) | Expr::Pow(_, v) if !v.is_finite() => {
                push(ViolationCode::NonFinite, shape("non-finite constant"))
            }
            Expr::Param { name, .. } if !p.parameters.contains_key(name) => push(
                ViolationCode::UnknownParameter,
                shape(&format!("unknown parameter {name}")),
            ),
            Expr::Dot { coeffs, vars } if coeffs.len() != vars.len() => push(
                ViolationCode::PayloadShape,
                shape(&format!(
                    "dot has {} coefficients for {} variables",
                    coeffs.len(),
                    vars.len()
                )),
            ),
            Expr::Quad { q, vars } => {
                if !q.is_square() || q.rows != vars.len() {
                    push(
                        ViolationCode::PayloadShape,
                        shape(&format!(
                            "quad matrix {}x{} for {} variables",
                            q.rows,
                            q.cols,
                            vars.len()
                        )),
                    );
                } else if !q.is_finite() {
                    push(ViolationCode::NonFinite, shape("non-finite quad matrix"));
                } else if q.asymmetry() > SYMMETRY_TOL {
                    push(
                        ViolationCode::AsymmetricQ,
                        shape(&format!("quad matrix asymmetric by {}", q.asymmetry())),
                    );
                }
            }
            Expr::Norm2 { a, b, vars } => {
                if a.cols != vars.len() || a.rows != b.len() {
                    push(
                        ViolationCode::PayloadShape,
                        shape(&format!(
                            "norm2 A is {}x{}, b has {} entries, {} variables",
                            a.rows,
                            a.cols,
                            b.len(),
                            vars.len()
                        )),
                    );
                }
            }
            Expr::Monomial {
                coeff,
                exponents,
                vars,
            } => {
                if !(*coeff > 0.0) {
                    push(
                        ViolationCode::MonomialNonpositiveCoeff,
                        shape(&format!("monomial coefficient {coeff} must be > 0")),
                    );
                }
                if exponents.len() != vars.len() {
                    push(
                        ViolationCode::PayloadShape,
                        shape(&format!(
                            "monomial has {} exponents for {} variables",
                            exponents.len(),
                            vars.len()
                        )),
                    );
                }
            }
            _ => {}
        }
    });
    if let Some(bad) = e.coordinates().into_iter().find(|c| *c >= dim) {
        push(
            ViolationCode::UndeclaredVariable,
            format!("{where_}: coordinate {bad} is not declared"),
        );
    }
    let finite_payload = |node: &Expr| match node {
        Expr::Dot { coeffs, .. } => coeffs.iter().all(|v| v.is_finite()),
        Expr::Norm2 { a, b, .. } => a.is_finite() && b.iter().all(|v| v.is_finite()),
        Expr::Monomial {
            exponents, coeff, ..
        } => coeff.is_finite() && exponents.iter().all(|v| v.is_finite()),
        _ => true,
    };
    let mut bad_payload = false;
    e.visit(&mut |n| bad_payload |= !finite_payload(n));
    if bad_payload {
        push(
            ViolationCode::NonFinite,
            format!("{where_}: non-finite payload"),
        );
    }
}

/// Checks every model invariant; an empty list means the problem is valid.
pub fn validate(p: &Problem) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut names = BTreeSet::new();
    for v in &p.variables {
        if !is_identifier(&v.name) {
            out.push(Violation {
                code: ViolationCode::BadIdentifier,
                message: format!("variable name `{}` is not an identifier", v.name),
            });
        }
        if !names.insert(v.name.clone()) {
            out.push(Violation {
                code: ViolationCode::DuplicateVariable,
                message: format!("variable {} declared twice", v.name),
            });
        }
        if v.is_empty() {
            out.push(Violation {
                code: ViolationCode::EmptyDimension,
                message: format!("variable {} has dimension 0", v.name),
            });
        }
    }
    if p.dim() > MAX_DIMENSION {
        out.push(Violation {
            code: ViolationCode::DimensionCap,
            message: format!("{} coordinates exceed the cap of {MAX_DIMENSION}", p.dim()),
        });
    }
    for (name, value) in &p.parameters {
        if names.contains(name) {
            out.push(Violation {
                code: ViolationCode::ParameterNameClash,
                message: format!("parameter {name} shadows a variable"),
            });
        }
        if !is_identifier(name) {
            out.push(Violation {
                code: ViolationCode::BadIdentifier,
                message: format!("parameter name `{name}` is not an identifier"),
            });
        }
        if !value.is_finite() {
            out.push(Violation {
                code: ViolationCode::NonFinite,
                message: format!("parameter {name} is not finite"),
            });
        }
    }
    check_expr(&p.objective, "objective", p, &mut out);
    for (i, c) in p.constraints.iter().enumerate() {
        check_expr(&c.lhs, &format!("constraint {i} lhs"), p, &mut out);
        check_expr(&c.rhs, &format!("constraint {i} rhs"), p, &mut out);
        match (c.relation, c.cone) {
            (Relation::InCone, None) => out.push(Violation {
                code: ViolationCode::ConeTagMismatch,
                message: format!("constraint {i}: in-cone relation needs a cone tag"),
            }),
            (r, Some(_)) if r != Relation::InCone => out.push(Violation {
                code: ViolationCode::ConeTagMismatch,
                message: format!("constraint {i}: cone tag on a non-cone relation"),
            }),
            (Relation::InCone, Some(ConeTag::SecondOrder)) if !matches!(c.lhs, Expr::Norm2 { .. }) => {
                out.push(Violation {
                    code: ViolationCode::ConeOperand,
                    message: format!("constraint {i}: second-order cone lhs must be norm2"),
                })
            }
            (Relation::InCone, Some(ConeTag::PositiveSemidefinite))
                if p.psd_variable(c).is_none() || c.rhs != Expr::Const(0.0) =>
            {
                out.push(Violation {
                    code: ViolationCode::ConeOperand,
                    message: format!(
                        "constraint {i}: PSD cone lhs must name a symmetric-matrix variable and rhs must be 0"
                    ),
                })
            }
            _ => {}
        }
    }
    out
}
