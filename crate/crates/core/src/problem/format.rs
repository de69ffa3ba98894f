//! On-disk JSON format (`.optproblem.json`).
//!
//! Expressions are `{"op": ..., <payload>, "args": [...]}` objects. Vector
//! atoms name their operands in `vars`, where a bare variable name expands to
//! all of its coordinates and `x[i]` / `X[i,j]` select one coordinate.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    validate, ConeTag, Constraint, Domain, Problem, Relation, Sense, VarKind, VariableSpec,
    Violation,
};
use crate::expr::{Expr, SYMMETRY_TOL};
use crate::linalg::Matrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("semantic error in {field}: {message}")]
    Semantic { field: String, message: String },
    #[error("invalid problem: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemDoc {
    variables: Vec<VariableDoc>,
    sense: Sense,
    objective: ExprDoc,
    #[serde(default)]
    constraints: Vec<ConstraintDoc>,
    #[serde(default)]
    parameters: BTreeMap<String, f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VariableDoc {
    name: String,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
    #[serde(default)]
    domain: Domain,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstraintDoc {
    lhs: ExprDoc,
    relation: Relation,
    rhs: ExprDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cone: Option<String>,
}

#[derive(Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExprDoc {
    op: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    param: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coeff: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coeffs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    exponents: Option<Vec<f64>>,
    #[serde(rename = "Q", default, skip_serializing_if = "Option::is_none")]
    q: Option<Vec<Vec<f64>>>,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    a: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    b: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vars: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    args: Option<Vec<ExprDoc>>,
}

impl ExprDoc {
    fn present_fields(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        let mut mark = |set: bool, name| {
            if set {
                out.push(name)
            }
        };
        mark(self.value.is_some(), "value");
        mark(self.param.is_some(), "param");
        mark(self.name.is_some(), "name");
        mark(self.factor.is_some(), "factor");
        mark(self.exponent.is_some(), "exponent");
        mark(self.coeff.is_some(), "coeff");
        mark(self.coeffs.is_some(), "coeffs");
        mark(self.exponents.is_some(), "exponents");
        mark(self.q.is_some(), "Q");
        mark(self.a.is_some(), "A");
        mark(self.b.is_some(), "b");
        mark(self.vars.is_some(), "vars");
        mark(self.args.is_some(), "args");
        out
    }
}

fn allowed_fields(op: &str) -> Option<&'static [&'static str]> {
    Some(match op {
        "const" => &["value", "param"],
        "var" => &["name"],
        "add" | "sum" => &["args"],
        "neg" | "exp" | "log" => &["args"],
        "scale" => &["factor", "args"],
        "pow" => &["exponent", "args"],
        "dot" => &["coeffs", "vars"],
        "quad" => &["Q", "vars"],
        "norm2" => &["A", "b", "vars"],
        "monomial" => &["coeff", "exponents", "vars"],
        _ => return None,
    })
}

struct Resolver<'a> {
    problem: &'a Problem,
    parameters: &'a BTreeMap<String, f64>,
}

fn semantic(field: &str, message: impl Into<String>) -> ParseError {
    ParseError::Semantic {
        field: field.to_string(),
        message: message.into(),
    }
}

fn matrix(field: &str, rows: &[Vec<f64>]) -> Result<Matrix, ParseError> {
    if rows.is_empty() {
        return Ok(Matrix::zeros(0, 0));
    }
    Matrix::from_rows(rows).map_err(|_| semantic(field, "matrix rows have unequal lengths"))
}

impl Resolver<'_> {
    fn vars(&self, field: &str, names: &[String]) -> Result<Vec<usize>, ParseError> {
        let mut out = Vec::new();
        for n in names {
            out.extend(self.reference(field, n)?);
        }
        Ok(out)
    }

    fn reference(&self, field: &str, name: &str) -> Result<Vec<usize>, ParseError> {
        self.problem.resolve(name).ok_or_else(|| {
            let base = name.split('[').next().unwrap_or(name);
            if self.problem.variables.iter().any(|v| v.name == base) {
                semantic(field, format!("index out of range in {name}"))
            } else {
                semantic(field, format!("undeclared variable {base}"))
            }
        })
    }

    fn expr(&self, field: &str, d: &ExprDoc) -> Result<Expr, ParseError> {
        let allowed = allowed_fields(&d.op)
            .ok_or_else(|| semantic(field, format!("unknown op `{}`", d.op)))?;
        if let Some(extra) = d
            .present_fields()
            .into_iter()
            .find(|f| !allowed.contains(f))
        {
            return Err(semantic(
                field,
                format!("field `{extra}` is not allowed for op `{}`", d.op),
            ));
        }
        let need = |name: &str| semantic(field, format!("op `{}` requires `{name}`", d.op));
        let args = |n: Option<usize>| -> Result<Vec<Expr>, ParseError> {
            let docs = d.args.as_ref().ok_or_else(|| need("args"))?;
            if let Some(n) = n {
                if docs.len() != n {
                    return Err(semantic(
                        field,
                        format!("op `{}` takes {n} argument(s), got {}", d.op, docs.len()),
                    ));
                }
            }
            docs.iter()
                .enumerate()
                .map(|(k, a)| self.expr(&format!("{field}.args[{k}]"), a))
                .collect()
        };
        let one = || args(Some(1)).map(|mut v| v.remove(0));
        let vars = || self.vars(field, d.vars.as_deref().ok_or_else(|| need("vars"))?);
        Ok(match d.op.as_str() {
            "const" => match (&d.value, &d.param) {
                (Some(v), None) => Expr::Const(*v),
                (None, Some(p)) => {
                    let value = self
                        .parameters
                        .get(p)
                        .ok_or_else(|| semantic(field, format!("unknown parameter {p}")))?;
                    Expr::param(p.clone(), *value)
                }
                _ => {
                    return Err(semantic(
                        field,
                        "const needs exactly one of `value`, `param`",
                    ))
                }
            },
            "var" => {
                let name = d.name.as_ref().ok_or_else(|| need("name"))?;
                let coords = self.reference(field, name)?;
                if coords.len() != 1 {
                    return Err(semantic(
                        field,
                        format!("non-scalar variable {name} used as a scalar; index it"),
                    ));
                }
                Expr::Var(coords[0])
            }
            "add" => {
                let mut a = args(Some(2))?;
                let b = a.pop().unwrap_or(Expr::Const(0.0));
                Expr::add(a.pop().unwrap_or(Expr::Const(0.0)), b)
            }
            "sum" => Expr::Sum(args(None)?),
            "neg" => Expr::neg(one()?),
            "exp" => Expr::exp(one()?),
            "log" => Expr::log(one()?),
            "scale" => Expr::scale(d.factor.ok_or_else(|| need("factor"))?, one()?),
            "pow" => Expr::pow(one()?, d.exponent.ok_or_else(|| need("exponent"))?),
            "dot" => Expr::Dot {
                coeffs: d.coeffs.clone().ok_or_else(|| need("coeffs"))?,
                vars: vars()?,
            },
            "quad" => {
                let q = matrix(field, d.q.as_deref().ok_or_else(|| need("Q"))?)?;
                // Float noise is repaired silently; real asymmetry is left
                // for validation to report.
                let q = if q.is_square() && q.asymmetry() <= SYMMETRY_TOL {
                    q.symmetrized()
                } else {
                    q
                };
                Expr::Quad { q, vars: vars()? }
            }
            "norm2" => {
                let a = matrix(field, d.a.as_deref().ok_or_else(|| need("A"))?)?;
                let vars = vars()?;
                let a = if a.rows == 0 {
                    Matrix::zeros(0, vars.len())
                } else {
                    a
                };
                Expr::Norm2 {
                    a,
                    b: d.b.clone().ok_or_else(|| need("b"))?,
                    vars,
                }
            }
            "monomial" => Expr::Monomial {
                coeff: d.coeff.ok_or_else(|| need("coeff"))?,
                exponents: d.exponents.clone().ok_or_else(|| need("exponents"))?,
                vars: vars()?,
            },
            _ => unreachable!("op names are checked above"),
        })
    }

    fn constraint(&self, index: usize, d: &ConstraintDoc) -> Result<Constraint, ParseError> {
        let field = format!("constraints[{index}]");
        let cone = match d.cone.as_deref() {
            None => None,
            Some("second-order") => Some(ConeTag::SecondOrder),
            Some("positive-semidefinite") => Some(ConeTag::PositiveSemidefinite),
            Some(other) => return Err(semantic(&field, format!("bad cone tag `{other}`"))),
        };
        if (d.relation == Relation::InCone) != cone.is_some() {
            return Err(semantic(
                &field,
                "bad cone tag: a cone tag is required with, and only with, relation in-cone",
            ));
        }
        let lhs = if cone == Some(ConeTag::PositiveSemidefinite) {
            self.psd_operand(&format!("{field}.lhs"), &d.lhs)?
        } else {
            self.expr(&format!("{field}.lhs"), &d.lhs)?
        };
        Ok(Constraint {
            lhs,
            relation: d.relation,
            rhs: self.expr(&format!("{field}.rhs"), &d.rhs)?,
            cone,
        })
    }

    fn psd_operand(&self, field: &str, d: &ExprDoc) -> Result<Expr, ParseError> {
        let name =
            match (d.op.as_str(), &d.name) {
                ("var", Some(n)) if d.present_fields() == ["name"] => n,
                _ => return Err(semantic(
                    field,
                    "positive-semidefinite cone operand must be {\"op\":\"var\",\"name\":<matrix>}",
                )),
            };
        let k = self
            .problem
            .variables
            .iter()
            .position(|v| &v.name == name)
            .ok_or_else(|| semantic(field, format!("undeclared variable {name}")))?;
        if !matches!(self.problem.variables[k].kind, VarKind::SymmetricMatrix(_)) {
            return Err(semantic(
                field,
                format!("positive-semidefinite cone operand {name} is not a symmetric matrix"),
            ));
        }
        Ok(Expr::Var(self.problem.offsets()[k]))
    }
}

fn variable(index: usize, d: &VariableDoc) -> Result<VariableSpec, ParseError> {
    let field = format!("variables[{index}]");
    let dim = || {
        d.dim
            .ok_or_else(|| semantic(&field, format!("{} needs `dim`", d.kind)))
    };
    let kind = match d.kind.as_str() {
        "scalar" => {
            if d.dim.is_some_and(|n| n != 1) {
                return Err(semantic(&field, "scalar variables take no `dim`"));
            }
            VarKind::Scalar
        }
        "vector" => VarKind::Vector(dim()?),
        "symmetric-matrix" => VarKind::SymmetricMatrix(dim()?),
        other => return Err(semantic(&field, format!("unknown variable kind `{other}`"))),
    };
    Ok(VariableSpec::new(d.name.clone(), kind, d.domain))
}

/// Parses and validates a problem file.
pub fn parse_problem(text: &str) -> Result<Problem, ParseError> {
    let doc: ProblemDoc = serde_json::from_str(text).map_err(|e| match e.classify() {
        serde_json::error::Category::Data => ParseError::Semantic {
            field: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        },
        _ => ParseError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        },
    })?;
    let variables = doc
        .variables
        .iter()
        .enumerate()
        .map(|(i, v)| variable(i, v))
        .collect::<Result<Vec<_>, _>>()?;
    for (i, v) in variables.iter().enumerate() {
        if variables[..i].iter().any(|w| w.name == v.name) {
            return Err(semantic(
                &format!("variables[{i}]"),
                format!("variable {} declared twice", v.name),
            ));
        }
    }
    let mut problem = Problem::new(doc.sense, Expr::Const(0.0), variables);
    problem.parameters = doc.parameters.clone();
    let resolver = Resolver {
        problem: &problem,
        parameters: &doc.parameters,
    };
    let objective = resolver.expr("objective", &doc.objective)?;
    let constraints = doc
        .constraints
        .iter()
        .enumerate()
        .map(|(i, c)| resolver.constraint(i, c))
        .collect::<Result<Vec<_>, _>>()?;
    problem.objective = objective;
    problem.constraints = constraints;
    let violations = validate(&problem);
    if violations.is_empty() {
        Ok(problem)
    } else {
        Err(ParseError::Invalid(violations))
    }
}

struct Writer<'a> {
    problem: &'a Problem,
    offsets: Vec<usize>,
}

impl Writer<'_> {
    fn names(&self, vars: &[usize]) -> Vec<String> {
        let mut out = Vec::new();
        let mut k = 0;
        while k < vars.len() {
            let whole = self.problem.variable_of(vars[k]).and_then(|(v, local)| {
                let len = self.problem.variables[v].len();
                let start = self.offsets[v];
                let run = vars.get(k..k + len)?;
                (local == 0 && len > 1 && run.iter().enumerate().all(|(j, c)| *c == start + j))
                    .then_some((v, len))
            });
            match whole {
                Some((v, len)) => {
                    out.push(self.problem.variables[v].name.clone());
                    k += len;
                }
                None => {
                    out.push(self.problem.coordinate_name(vars[k]));
                    k += 1;
                }
            }
        }
        out
    }

    fn expr(&self, e: &Expr) -> ExprDoc {
        let with_args = |op: &str, args: Vec<&Expr>| ExprDoc {
            op: op.to_string(),
            args: Some(args.into_iter().map(|a| self.expr(a)).collect()),
            ..Default::default()
        };
        let rows = |m: &Matrix| m.to_rows();
        match e {
            Expr::Const(v) => ExprDoc {
                op: "const".into(),
                value: Some(*v),
                ..Default::default()
            },
            Expr::Param { name, .. } => ExprDoc {
                op: "const".into(),
                param: Some(name.clone()),
                ..Default::default()
            },
            Expr::Var(i) => ExprDoc {
                op: "var".into(),
                name: Some(self.problem.coordinate_name(*i)),
                ..Default::default()
            },
            Expr::Add(a, b) => with_args("add", vec![a, b]),
            Expr::Neg(a) => with_args("neg", vec![a]),
            Expr::Exp(a) => with_args("exp", vec![a]),
            Expr::Log(a) => with_args("log", vec![a]),
            Expr::Sum(ts) => with_args("sum", ts.iter().collect()),
            Expr::Scale(k, a) => ExprDoc {
                factor: Some(*k),
                ..with_args("scale", vec![a])
            },
            Expr::Pow(a, p) => ExprDoc {
                exponent: Some(*p),
                ..with_args("pow", vec![a])
            },
            Expr::Dot { coeffs, vars } => ExprDoc {
                op: "dot".into(),
                coeffs: Some(coeffs.clone()),
                vars: Some(self.names(vars)),
                ..Default::default()
            },
            Expr::Quad { q, vars } => ExprDoc {
                op: "quad".into(),
                q: Some(rows(q)),
                vars: Some(self.names(vars)),
                ..Default::default()
            },
            Expr::Norm2 { a, b, vars } => ExprDoc {
                op: "norm2".into(),
                a: Some(rows(a)),
                b: Some(b.clone()),
                vars: Some(self.names(vars)),
                ..Default::default()
            },
            Expr::Monomial {
                coeff,
                exponents,
                vars,
            } => ExprDoc {
                op: "monomial".into(),
                coeff: Some(*coeff),
                exponents: Some(exponents.clone()),
                vars: Some(self.names(vars)),
                ..Default::default()
            },
        }
    }

    fn constraint(&self, c: &Constraint) -> ConstraintDoc {
        let lhs = match self.problem.psd_variable(c) {
            Some(k) => ExprDoc {
                op: "var".into(),
                name: Some(self.problem.variables[k].name.clone()),
                ..Default::default()
            },
            None => self.expr(&c.lhs),
        };
        ConstraintDoc {
            lhs,
            relation: c.relation,
            rhs: self.expr(&c.rhs),
            cone: c.cone.map(|t| match t {
                ConeTag::SecondOrder => "second-order".to_string(),
                ConeTag::PositiveSemidefinite => "positive-semidefinite".to_string(),
            }),
        }
    }
}

/// Serializes in the fixed key order with two-space indentation and a
/// trailing newline. Parameters are written with their current bindings.
pub fn serialize_problem(p: &Problem) -> String {
    let w = Writer {
        problem: p,
        offsets: p.offsets(),
    };
    let mut parameters = p.parameters.clone();
    for e in p.expressions() {
        e.visit(&mut |n| {
            if let Expr::Param { name, value } = n {
                parameters.entry(name.clone()).or_insert(*value);
            }
        });
    }
    let doc = ProblemDoc {
        variables: p
            .variables
            .iter()
            .map(|v| {
                let (kind, dim) = match v.kind {
                    VarKind::Scalar => ("scalar", None),
                    VarKind::Vector(n) => ("vector", Some(n)),
                    VarKind::SymmetricMatrix(n) => ("symmetric-matrix", Some(n)),
                };
                VariableDoc {
                    name: v.name.clone(),
                    kind: kind.to_string(),
                    dim,
                    domain: v.domain,
                }
            })
            .collect(),
        sense: p.sense,
        objective: w.expr(&p.objective),
        constraints: p.constraints.iter().map(|c| w.constraint(c)).collect(),
        parameters,
    };
    let mut s =
        serde_json::to_string_pretty(&doc).expect("problem documents are always serializable");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::ViolationCode;

    const MINIMAL: &str = r#"{
  "variables": [{"name": "x", "kind": "scalar"}],
  "sense": "minimize",
  "objective": {"op": "const", "value": 0}
}"#;

    #[test]
    fn minimal_file() {
        let p = parse_problem(MINIMAL).unwrap();
        assert_eq!(p.objective, Expr::Const(0.0));
        assert_eq!(p.dim(), 1);
        assert!(p.constraints.is_empty());
    }

    #[test]
    fn undeclared_variable_is_semantic() {
        let text = MINIMAL.replace(
            r#"{"op": "const", "value": 0}"#,
            r#"{"op": "var", "name": "y"}"#,
        );
        match parse_problem(&text) {
            Err(ParseError::Semantic { field, message }) => {
                assert_eq!(field, "objective");
                assert_eq!(message, "undeclared variable y");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn syntax_error_has_position() {
        match parse_problem("{\n  \"variables\": [,\n}") {
            Err(ParseError::Syntax { line, column, .. }) => {
                assert_eq!(line, 2);
                assert!(column > 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = MINIMAL.replace("\"sense\"", "\"colour\": 1, \"sense\"");
        assert!(matches!(
            parse_problem(&text),
            Err(ParseError::Semantic { .. })
        ));
        let text = MINIMAL.replace(r#""value": 0"#, r#""value": 0, "args": []"#);
        assert!(matches!(
            parse_problem(&text),
            Err(ParseError::Semantic { .. })
        ));
    }

    #[test]
    fn vector_objective_is_rejected() {
        let text = MINIMAL
            .replace(r#""kind": "scalar""#, r#""kind": "vector", "dim": 2"#)
            .replace(
                r#"{"op": "const", "value": 0}"#,
                r#"{"op": "var", "name": "x"}"#,
            );
        let err = parse_problem(&text).unwrap_err();
        assert!(err.to_string().contains("non-scalar"), "{err}");
    }

    #[test]
    fn bad_cone_tag() {
        let text = MINIMAL.replace(
            "\"objective\"",
            r#""constraints": [{"lhs": {"op": "var", "name": "x"}, "relation": "in-cone", "rhs": {"op": "const", "value": 0}, "cone": "lorentz"}],
  "objective""#,
        );
        let err = parse_problem(&text).unwrap_err();
        assert!(err.to_string().contains("bad cone tag"), "{err}");
    }

    #[test]
    fn asymmetric_quad_fails_validation() {
        let text = MINIMAL
            .replace(r#""kind": "scalar""#, r#""kind": "vector", "dim": 2"#)
            .replace(
                r#"{"op": "const", "value": 0}"#,
                r#"{"op": "quad", "Q": [[1, 0.1], [0, 1]], "vars": ["x"]}"#,
            );
        match parse_problem(&text) {
            Err(ParseError::Invalid(v)) => assert_eq!(v[0].code, ViolationCode::AsymmetricQ),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn round_trip_with_matrix_and_parameters() {
        let text = r#"{
  "variables": [
    {"name": "t", "kind": "scalar", "domain": "nonnegative"},
    {"name": "X", "kind": "symmetric-matrix", "dim": 2}
  ],
  "sense": "maximize",
  "objective": {"op": "dot", "coeffs": [1, 2, 1], "vars": ["X"]},
  "constraints": [
    {"lhs": {"op": "var", "name": "X"}, "relation": "in-cone", "rhs": {"op": "const", "value": 0}, "cone": "positive-semidefinite"},
    {"lhs": {"op": "add", "args": [{"op": "var", "name": "X[0,0]"}, {"op": "var", "name": "X[1,1]"}]}, "relation": "=", "rhs": {"op": "const", "param": "r"}},
    {"lhs": {"op": "norm2", "A": [[1, 0]], "b": [0], "vars": ["t", "X[0,1]"]}, "relation": "in-cone", "rhs": {"op": "const", "value": 1}, "cone": "second-order"}
  ],
  "parameters": {"r": 1.5}
}"#;
        let p = parse_problem(text).unwrap();
        let s = serialize_problem(&p);
        assert_eq!(parse_problem(&s).unwrap(), p);
        assert_eq!(serialize_problem(&parse_problem(&s).unwrap()), s);
        let keys: Vec<usize> = [
            "\"variables\"",
            "\"sense\"",
            "\"objective\"",
            "\"constraints\"",
            "\"parameters\"",
        ]
        .iter()
        .map(|k| s.find(k).unwrap())
        .collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
        assert!(s.starts_with("{\n  \"variables\""));
    }
}
