//! Syntactic curvature analysis.
//!
//! Composition rules in the style of disciplined convex programming. The
//! analysis is sound but incomplete: whenever it reports convex, concave or
//! affine the property holds on the expression's domain, and anything it
//! cannot certify is `Unknown`.

use serde::{Deserialize, Serialize};

use super::{is_integer, Expr};
use crate::linalg::{default_psd_tol, psd_check, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Curvature {
    Constant,
    Affine,
    Convex,
    Concave,
    Unknown,
}

impl Curvature {
    pub fn is_convex(self) -> bool {
        matches!(
            self,
            Curvature::Constant | Curvature::Affine | Curvature::Convex
        )
    }

    pub fn is_concave(self) -> bool {
        matches!(
            self,
            Curvature::Constant | Curvature::Affine | Curvature::Concave
        )
    }

    pub fn is_affine(self) -> bool {
        matches!(self, Curvature::Constant | Curvature::Affine)
    }

    fn flip(self) -> Self {
        match self {
            Curvature::Convex => Curvature::Concave,
            Curvature::Concave => Curvature::Convex,
            c => c,
        }
    }

    /// Curvature of a sum.
    fn join(self, other: Self) -> Self {
        use Curvature::*;
        match (self, other) {
            (Constant, c) | (c, Constant) => c,
            (Affine, Affine) => Affine,
            (a, b) if a.is_convex() && b.is_convex() => Convex,
            (a, b) if a.is_concave() && b.is_concave() => Concave,
            _ => Unknown,
        }
    }
}

impl std::fmt::Display for Curvature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Curvature::Constant => "constant",
            Curvature::Affine => "affine",
            Curvature::Convex => "convex",
            Curvature::Concave => "concave",
            Curvature::Unknown => "unknown",
        };
        f.write_str(s)
    }
}

/// Known sign of an expression's value over its domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Nonneg,
    Nonpos,
    Unknown,
}

impl Sign {
    fn of(v: f64) -> Self {
        if v >= 0.0 {
            Sign::Nonneg
        } else {
            Sign::Nonpos
        }
    }

    fn flip(self) -> Self {
        match self {
            Sign::Nonneg => Sign::Nonpos,
            Sign::Nonpos => Sign::Nonneg,
            Sign::Unknown => Sign::Unknown,
        }
    }

    fn join(self, other: Self) -> Self {
        if self == other {
            self
        } else {
            Sign::Unknown
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureVerdict {
    pub curvature: Curvature,
    /// Post-order list of `node:rule` entries, one per tree node.
    pub trace: Vec<String>,
}

pub fn curvature(e: &Expr) -> CurvatureVerdict {
    let mut trace = Vec::new();
    let (curvature, _) = analyze(e, &mut trace);
    CurvatureVerdict { curvature, trace }
}

fn quad_curvature(q: &Matrix) -> (Curvature, Sign, &'static str) {
    if !q.is_square() || !q.is_finite() {
        return (Curvature::Unknown, Sign::Unknown, "malformed");
    }
    if q.is_zero() {
        return (Curvature::Constant, Sign::Nonneg, "zero");
    }
    let tol = default_psd_tol(q);
    match psd_check(q, tol) {
        Ok(v) if v.is_psd => (Curvature::Convex, Sign::Nonneg, "psd"),
        Ok(_) => match psd_check(&q.scaled(-1.0), tol) {
            Ok(v) if v.is_psd => (Curvature::Concave, Sign::Nonpos, "nsd"),
            _ => (Curvature::Unknown, Sign::Unknown, "indefinite"),
        },
        Err(_) => (Curvature::Unknown, Sign::Unknown, "malformed"),
    }
}

/// Power products `Π xᵢ^aᵢ` on the positive orthant are convex when every
/// exponent is nonpositive, or when exactly one is positive and the
/// exponents sum to at least one; concave when all exponents are
/// nonnegative and sum to at most one.
fn monomial_curvature(coeff: f64, exps: &[f64]) -> (Curvature, &'static str) {
    let nonzero: Vec<f64> = exps.iter().copied().filter(|a| *a != 0.0).collect();
    let base = if nonzero.is_empty() {
        return (Curvature::Constant, "constant");
    } else if nonzero.len() == 1 && nonzero[0] == 1.0 {
        (Curvature::Affine, "linear")
    } else {
        let positives = nonzero.iter().filter(|a| **a > 0.0).count();
        let total: f64 = nonzero.iter().sum();
        if positives == 0 || (positives == 1 && total >= 1.0) {
            (Curvature::Convex, "power-convex")
        } else if positives == nonzero.len() && total <= 1.0 {
            (Curvature::Concave, "power-concave")
        } else {
            (Curvature::Unknown, "power-mixed")
        }
    };
    if coeff > 0.0 {
        base
    } else if coeff < 0.0 {
        (base.0.flip(), base.1)
    } else {
        (Curvature::Constant, "zero")
    }
}

fn pow_curvature(child: Curvature, sign: Sign, p: f64) -> (Curvature, Sign, &'static str) {
    use Curvature::*;
    if p == 0.0 {
        return (Constant, Sign::Nonneg, "p=0");
    }
    if p == 1.0 {
        return (child, sign, "p=1");
    }
    if child == Constant {
        return (Constant, Sign::Unknown, "constant-base");
    }
    let integer = is_integer(p);
    let even = integer && (p as i64) % 2 == 0;
    if even && p > 0.0 {
        let c = if child.is_affine()
            || (child == Convex && sign == Sign::Nonneg)
            || (child == Concave && sign == Sign::Nonpos)
        {
            Convex
        } else {
            Unknown
        };
        return (c, Sign::Nonneg, "even-power");
    }
    if p > 1.0 {
        // odd integers need a nonnegative base; fractional powers restrict
        // the domain to a nonnegative base, which is a convex set only when
        // the base is affine (or already known nonnegative).
        let ok = (child.is_convex() && sign == Sign::Nonneg) || (!integer && child.is_affine());
        let s = if integer { sign } else { Sign::Nonneg };
        return (if ok { Convex } else { Unknown }, s, "power>1");
    }
    if p > 0.0 {
        // 0 < p < 1 is never an integer, so the domain is base ≥ 0.
        let c = if child.is_concave() { Concave } else { Unknown };
        return (c, Sign::Nonneg, "root");
    }
    // p < 0: convex and decreasing on (0, ∞)
    let ok = child.is_concave() && (!integer || sign == Sign::Nonneg);
    let s = if integer { sign } else { Sign::Nonneg };
    (if ok { Convex } else { Unknown }, s, "negative-power")
}

fn analyze(e: &Expr, trace: &mut Vec<String>) -> (Curvature, Sign) {
    use Curvature::*;
    let (c, s, rule): (Curvature, Sign, String) = match e {
        Expr::Const(v) => (Constant, Sign::of(*v), "const".into()),
        Expr::Param { .. } => (Constant, Sign::Unknown, "param".into()),
        Expr::Var(_) => (Affine, Sign::Unknown, "var".into()),
        Expr::Add(a, b) => {
            let (ca, sa) = analyze(a, trace);
            let (cb, sb) = analyze(b, trace);
            let c = ca.join(cb);
            (c, sa.join(sb), format!("add:{c}"))
        }
        Expr::Sum(ts) => {
            let mut c = Constant;
            let mut s = Sign::Nonneg;
            for t in ts {
                let (ct, st) = analyze(t, trace);
                c = c.join(ct);
                s = s.join(st);
            }
            (c, s, format!("sum:{c}"))
        }
        Expr::Neg(a) => {
            let (c, s) = analyze(a, trace);
            (c.flip(), s.flip(), "neg:flip".into())
        }
        Expr::Scale(k, a) => {
            let (c, s) = analyze(a, trace);
            if *k > 0.0 {
                (c, s, "scale:positive".into())
            } else if *k < 0.0 {
                (c.flip(), s.flip(), "scale:negative".into())
            } else {
                (Constant, Sign::Nonneg, "scale:zero".into())
            }
        }
        Expr::Dot { coeffs, .. } => {
            if coeffs.iter().all(|c| *c == 0.0) {
                (Constant, Sign::Nonneg, "dot:zero".into())
            } else {
                (Affine, Sign::Unknown, "dot:affine".into())
            }
        }
        Expr::Quad { q, .. } => {
            let (c, s, r) = quad_curvature(q);
            (c, s, format!("quad:{r}"))
        }
        Expr::Norm2 { a, .. } => {
            if a.is_zero() {
                (Constant, Sign::Nonneg, "norm2:constant".into())
            } else {
                (Convex, Sign::Nonneg, "norm2:convex".into())
            }
        }
        Expr::Exp(a) => {
            let (c, _) = analyze(a, trace);
            let out = match c {
                Constant => Constant,
                c if c.is_convex() => Convex,
                _ => Unknown,
            };
            (out, Sign::Nonneg, format!("exp:{out}"))
        }
        Expr::Log(a) => {
            let (c, _) = analyze(a, trace);
            let out = match c {
                Constant => Constant,
                c if c.is_concave() => Concave,
                _ => Unknown,
            };
            (out, Sign::Unknown, format!("log:{out}"))
        }
        Expr::Pow(a, p) => {
            let (c, s) = analyze(a, trace);
            let (out, sign, r) = pow_curvature(c, s, *p);
            (out, sign, format!("pow:{r}"))
        }
        Expr::Monomial {
            coeff, exponents, ..
        } => {
            let (c, r) = monomial_curvature(*coeff, exponents);
            (c, Sign::of(*coeff), format!("monomial:{r}"))
        }
    };
    trace.push(rule);
    (c, s)
}
