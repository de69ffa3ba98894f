//! Immutable scalar expression trees.
//!
//! Every node evaluates to a real number. Vector-shaped atoms (`Dot`, `Quad`,
//! `Norm2`, `Monomial`) carry their own list of flat coordinate indices, so
//! the tree itself never holds vector values. Coordinates refer to the
//! flattened variable vector of the enclosing [`Problem`](crate::problem::Problem).

mod curvature;
mod grad;
mod structure;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::linalg::Matrix;

pub use curvature::{curvature, Curvature, CurvatureVerdict, Sign};
pub use grad::GradientMode;
pub use structure::{analyze_structure, AffineForm, MonomialTerm, QuadraticForm, StructureVerdict};

/// Asymmetry above which a quadratic payload is symmetrized loudly.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("domain error: {atom} received {value}")]
    Domain { atom: &'static str, value: f64 },
    #[error("unbound variable: coordinate {0} has no value")]
    UnboundVariable(usize),
    #[error("not differentiable: {0}")]
    NonDifferentiable(String),
    #[error("malformed {atom} payload: {detail}")]
    Shape { atom: &'static str, detail: String },
    #[error("invalid monomial coefficient {0}: must be > 0")]
    NonPositiveCoefficient(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Named parameter; `value` is the binding currently in force.
    Param {
        name: String,
        value: f64,
    },
    Var(usize),
    Add(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Scale(f64, Box<Expr>),
    /// `Σ coeffs[k] · x[vars[k]]`
    Dot {
        coeffs: Vec<f64>,
        vars: Vec<usize>,
    },
    /// `½ vᵀ Q v` with `v = x[vars]`.
    Quad {
        q: Matrix,
        vars: Vec<usize>,
    },
    /// `‖A v + b‖₂` with `v = x[vars]`.
    Norm2 {
        a: Matrix,
        b: Vec<f64>,
        vars: Vec<usize>,
    },
    Exp(Box<Expr>),
    Log(Box<Expr>),
    Pow(Box<Expr>, f64),
    /// `c · Π x[vars[k]]^exponents[k]`, defined on the positive orthant.
    Monomial {
        coeff: f64,
        exponents: Vec<f64>,
        vars: Vec<usize>,
    },
    Sum(Vec<Expr>),
}

impl Expr {
    pub fn constant(v: f64) -> Self {
        Expr::Const(v)
    }

    pub fn param(name: impl Into<String>, value: f64) -> Self {
        Expr::Param {
            name: name.into(),
            value,
        }
    }

    pub fn var(i: usize) -> Self {
        Expr::Var(i)
    }

    pub fn add(a: Expr, b: Expr) -> Self {
        Expr::Add(Box::new(a), Box::new(b))
    }

    /// `a - b`
    pub fn sub(a: Expr, b: Expr) -> Self {
        Expr::add(a, b.negated())
    }

    pub fn neg(a: Expr) -> Self {
        Expr::Neg(Box::new(a))
    }

    pub fn scale(k: f64, a: Expr) -> Self {
        Expr::Scale(k, Box::new(a))
    }

    pub fn dot(coeffs: Vec<f64>, vars: Vec<usize>) -> Self {
        Expr::Dot { coeffs, vars }
    }

    /// `½ vᵀ Q v`. Asymmetric input is symmetrized; anything beyond float
    /// noise is logged as a warning.
    pub fn quad(q: Matrix, vars: Vec<usize>) -> Self {
        let asym = q.asymmetry();
        if asym > SYMMETRY_TOL && asym.is_finite() {
            log::warn!("quadratic form matrix asymmetric by {asym:e}; using (Q + Qᵀ)/2");
        }
        let q = if q.is_square() { q.symmetrized() } else { q };
        Expr::Quad { q, vars }
    }

    pub fn norm2(a: Matrix, b: Vec<f64>, vars: Vec<usize>) -> Self {
        Expr::Norm2 { a, b, vars }
    }

    pub fn exp(a: Expr) -> Self {
        Expr::Exp(Box::new(a))
    }

    pub fn log(a: Expr) -> Self {
        Expr::Log(Box::new(a))
    }

    pub fn pow(a: Expr, p: f64) -> Self {
        Expr::Pow(Box::new(a), p)
    }

    pub fn monomial(coeff: f64, exponents: Vec<f64>, vars: Vec<usize>) -> Result<Self, ExprError> {
        if !(coeff > 0.0) {
            return Err(ExprError::NonPositiveCoefficient(coeff));
        }
        if exponents.len() != vars.len() {
            return Err(ExprError::Shape {
                atom: "monomial",
                detail: format!("{} exponents for {} variables", exponents.len(), vars.len()),
            });
        }
        Ok(Expr::Monomial {
            coeff,
            exponents,
            vars,
        })
    }

    pub fn sum(terms: Vec<Expr>) -> Self {
        Expr::Sum(terms)
    }

    /// Affine expression `Σ coeffs_i x_i + constant` in its smallest tree.
    pub fn affine(coeffs: &BTreeMap<usize, f64>, constant: f64) -> Self {
        let (vars, cs): (Vec<usize>, Vec<f64>) = coeffs
            .iter()
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, c)| (*i, *c))
            .unzip();
        let linear = match (vars.len(), cs.first()) {
            (0, _) => None,
            (1, Some(c)) if *c == 1.0 => Some(Expr::Var(vars[0])),
            _ => Some(Expr::dot(cs, vars)),
        };
        match linear {
            None => Expr::Const(constant + 0.0),
            Some(l) if constant == 0.0 => l,
            Some(l) => Expr::add(l, Expr::Const(constant)),
        }
    }

    /// Negation that folds constants and cancels double negation.
    pub fn negated(self) -> Self {
        match self {
            Expr::Const(v) => Expr::Const(-v),
            Expr::Neg(inner) => *inner,
            other => Expr::neg(other),
        }
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Add(a, b) => vec![a, b],
            Expr::Neg(a) | Expr::Scale(_, a) | Expr::Exp(a) | Expr::Log(a) | Expr::Pow(a, _) => {
                vec![a]
            }
            Expr::Sum(ts) => ts.iter().collect(),
            _ => Vec::new(),
        }
    }

    /// Flat coordinates referenced anywhere in the tree.
    pub fn coordinates(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.collect_coordinates(&mut out);
        out
    }

    fn collect_coordinates(&self, out: &mut BTreeSet<usize>) {
        match self {
            Expr::Var(i) => {
                out.insert(*i);
            }
            Expr::Dot { vars, .. }
            | Expr::Quad { vars, .. }
            | Expr::Norm2 { vars, .. }
            | Expr::Monomial { vars, .. } => out.extend(vars.iter().copied()),
            _ => {
                for c in self.children() {
                    c.collect_coordinates(out);
                }
            }
        }
    }

    /// Parameter names referenced anywhere in the tree.
    pub fn parameters(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::Param { name, .. } = e {
                out.insert(name.clone());
            }
        });
        out
    }

    /// Pre-order traversal.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }

    /// Copy with every parameter leaf rebound from `values` (unknown names
    /// keep their current binding).
    pub fn with_parameters(&self, values: &BTreeMap<String, f64>) -> Self {
        self.rebuild(&mut |e| match e {
            Expr::Param { name, value } => Some(Expr::Param {
                name: name.clone(),
                value: values.get(name).copied().unwrap_or(*value),
            }),
            _ => None,
        })
    }

    /// Copy with every coordinate index passed through `f`.
    pub fn remap_coordinates(&self, f: &impl Fn(usize) -> usize) -> Self {
        self.rebuild(&mut |e| match e {
            Expr::Var(i) => Some(Expr::Var(f(*i))),
            Expr::Dot { coeffs, vars } => Some(Expr::Dot {
                coeffs: coeffs.clone(),
                vars: vars.iter().map(|v| f(*v)).collect(),
            }),
            Expr::Quad { q, vars } => Some(Expr::Quad {
                q: q.clone(),
                vars: vars.iter().map(|v| f(*v)).collect(),
            }),
            Expr::Norm2 { a, b, vars } => Some(Expr::Norm2 {
                a: a.clone(),
                b: b.clone(),
                vars: vars.iter().map(|v| f(*v)).collect(),
            }),
            Expr::Monomial {
                coeff,
                exponents,
                vars,
            } => Some(Expr::Monomial {
                coeff: *coeff,
                exponents: exponents.clone(),
                vars: vars.iter().map(|v| f(*v)).collect(),
            }),
            _ => None,
        })
    }

    /// Bottom-up rebuild; `leaf` may replace a node wholesale (its children
    /// are then not visited).
    fn rebuild(&self, leaf: &mut impl FnMut(&Expr) -> Option<Expr>) -> Self {
        if let Some(e) = leaf(self) {
            return e;
        }
        match self {
            Expr::Add(a, b) => Expr::add(a.rebuild(leaf), b.rebuild(leaf)),
            Expr::Neg(a) => Expr::neg(a.rebuild(leaf)),
            Expr::Scale(k, a) => Expr::scale(*k, a.rebuild(leaf)),
            Expr::Exp(a) => Expr::exp(a.rebuild(leaf)),
            Expr::Log(a) => Expr::log(a.rebuild(leaf)),
            Expr::Pow(a, p) => Expr::pow(a.rebuild(leaf), *p),
            Expr::Sum(ts) => Expr::Sum(ts.iter().map(|t| t.rebuild(leaf)).collect()),
            other => other.clone(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, ExprError> {
        let get = |i: usize| x.get(i).copied().ok_or(ExprError::UnboundVariable(i));
        let gather = |vars: &[usize]| vars.iter().map(|&i| get(i)).collect::<Result<Vec<_>, _>>();
        Ok(match self {
            Expr::Const(v) => *v,
            Expr::Param { value, .. } => *value,
            Expr::Var(i) => get(*i)?,
            Expr::Add(a, b) => a.eval(x)? + b.eval(x)?,
            Expr::Neg(a) => -a.eval(x)?,
            Expr::Scale(k, a) => k * a.eval(x)?,
            Expr::Dot { coeffs, vars } => {
                check_len("dot", coeffs.len(), vars.len())?;
                crate::linalg::dot(coeffs, &gather(vars)?)
            }
            Expr::Quad { q, vars } => {
                check_square("quad", q, vars.len())?;
                let v = gather(vars)?;
                0.5 * crate::linalg::dot(&v, &q.mul_vec(&v))
            }
            Expr::Norm2 { a, b, vars } => {
                let r = norm_residual(a, b, &gather(vars)?)?;
                crate::linalg::norm2(&r)
            }
            Expr::Exp(a) => a.eval(x)?.exp(),
            Expr::Log(a) => {
                let v = a.eval(x)?;
                if v <= 0.0 {
                    return Err(ExprError::Domain {
                        atom: "log",
                        value: v,
                    });
                }
                v.ln()
            }
            Expr::Pow(a, p) => pow_checked(a.eval(x)?, *p)?,
            Expr::Monomial {
                coeff,
                exponents,
                vars,
            } => {
                check_len("monomial", exponents.len(), vars.len())?;
                let mut acc = *coeff;
                for (xi, ai) in gather(vars)?.into_iter().zip(exponents) {
                    if xi <= 0.0 {
                        return Err(ExprError::Domain {
                            atom: "monomial",
                            value: xi,
                        });
                    }
                    acc *= xi.powf(*ai);
                }
                acc
            }
            Expr::Sum(ts) => {
                let mut s = 0.0;
                for t in ts {
                    s += t.eval(x)?;
                }
                s
            }
        })
    }

    /// Gradient with respect to all coordinates of `x`.
    pub fn gradient(&self, x: &[f64], mode: GradientMode) -> Result<Vec<f64>, ExprError> {
        match mode {
            GradientMode::Analytic => grad::analytic_gradient(self, x),
            GradientMode::FiniteDifference { step } => grad::central_difference(self, x, step),
        }
    }

    /// Analytic Hessian (dense, `x.len()` square).
    pub fn hessian(&self, x: &[f64]) -> Result<Matrix, ExprError> {
        grad::analytic_hessian(self, x)
    }
}

pub(crate) fn check_len(atom: &'static str, a: usize, b: usize) -> Result<(), ExprError> {
    if a != b {
        return Err(ExprError::Shape {
            atom,
            detail: format!("{a} coefficients for {b} variables"),
        });
    }
    Ok(())
}

pub(crate) fn check_square(atom: &'static str, q: &Matrix, n: usize) -> Result<(), ExprError> {
    if q.rows != n || q.cols != n {
        return Err(ExprError::Shape {
            atom,
            detail: format!("{}x{} matrix for {n} variables", q.rows, q.cols),
        });
    }
    Ok(())
}

pub(crate) fn norm_residual(a: &Matrix, b: &[f64], v: &[f64]) -> Result<Vec<f64>, ExprError> {
    if a.cols != v.len() || a.rows != b.len() {
        return Err(ExprError::Shape {
            atom: "norm2",
            detail: format!(
                "A is {}x{}, b has {} entries, {} variables",
                a.rows,
                a.cols,
                b.len(),
                v.len()
            ),
        });
    }
    Ok(a.mul_vec(v).iter().zip(b).map(|(r, bi)| r + bi).collect())
}

pub(crate) fn is_integer(p: f64) -> bool {
    p.fract() == 0.0
}

pub(crate) fn pow_checked(base: f64, p: f64) -> Result<f64, ExprError> {
    if base < 0.0 && !is_integer(p) {
        return Err(ExprError::Domain {
            atom: "pow",
            value: base,
        });
    }
    if base == 0.0 && p < 0.0 {
        return Err(ExprError::Domain {
            atom: "pow",
            value: base,
        });
    }
    Ok(if is_integer(p) && p.abs() <= i32::MAX as f64 {
        base.powi(p as i32)
    } else {
        base.powf(p)
    })
}
