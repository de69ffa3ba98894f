//! Algebraic shape recognition: affine, quadratic, monomial and posynomial
//! canonical forms extracted from an expression tree.

use std::collections::BTreeMap;

use super::{is_integer, Expr};
use crate::linalg::Matrix;

/// `Σ coeffs[i]·xᵢ + constant`
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AffineForm {
    pub coeffs: BTreeMap<usize, f64>,
    pub constant: f64,
}

impl AffineForm {
    pub fn constant(v: f64) -> Self {
        Self {
            coeffs: BTreeMap::new(),
            constant: v,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.coeffs.iter().map(|(i, c)| c * x[*i]).sum::<f64>()
    }

    pub fn dense(&self, n: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        for (i, c) in &self.coeffs {
            if *i < n {
                v[*i] += c;
            }
        }
        v
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.values().all(|c| *c == 0.0)
    }

    fn scaled(&self, k: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|(i, c)| (*i, k * c)).collect(),
            constant: k * self.constant,
        }
    }

    fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (i, c) in &other.coeffs {
            *out.coeffs.entry(*i).or_insert(0.0) += c;
        }
        out.constant += other.constant;
        out
    }

    pub fn to_expr(&self) -> Expr {
        Expr::affine(&self.coeffs, self.constant)
    }
}

/// `Σ_{i≤j} quad[(i,j)]·xᵢxⱼ + linear(x)`
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QuadraticForm {
    pub quad: BTreeMap<(usize, usize), f64>,
    pub linear: AffineForm,
}

impl QuadraticForm {
    fn from_affine(a: AffineForm) -> Self {
        Self {
            quad: BTreeMap::new(),
            linear: a,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.linear.eval(x)
            + self
                .quad
                .iter()
                .map(|((i, j), c)| c * x[*i] * x[*j])
                .sum::<f64>()
    }

    /// The symmetric `Q` with `Σ quad·xᵢxⱼ = ½xᵀQx` over `n` coordinates.
    pub fn q_matrix(&self, n: usize) -> Matrix {
        let mut q = Matrix::zeros(n, n);
        for ((i, j), c) in &self.quad {
            if i == j {
                q[(*i, *i)] += 2.0 * c;
            } else {
                q[(*i, *j)] += c;
                q[(*j, *i)] += c;
            }
        }
        q
    }

    pub fn is_affine(&self) -> bool {
        self.quad.values().all(|c| *c == 0.0)
    }

    fn scaled(&self, k: f64) -> Self {
        Self {
            quad: self.quad.iter().map(|(ij, c)| (*ij, k * c)).collect(),
            linear: self.linear.scaled(k),
        }
    }

    fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (ij, c) in &other.quad {
            *out.quad.entry(*ij).or_insert(0.0) += c;
        }
        out.linear = out.linear.plus(&other.linear);
        out
    }
}

/// `coeff · Π x_i^{exponents[i]}` with `coeff > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialTerm {
    pub coeff: f64,
    pub exponents: BTreeMap<usize, f64>,
}

impl MonomialTerm {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.exponents
            .iter()
            .fold(self.coeff, |acc, (i, a)| acc * x[*i].powf(*a))
    }

    pub fn dense_exponents(&self, n: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        for (i, a) in &self.exponents {
            if *i < n {
                v[*i] += a;
            }
        }
        v
    }

    fn key(&self) -> Vec<(usize, u64)> {
        self.exponents
            .iter()
            .map(|(i, a)| (*i, a.to_bits()))
            .collect()
    }

    fn times(&self, other: &Self) -> Self {
        let mut exponents = self.exponents.clone();
        for (i, a) in &other.exponents {
            *exponents.entry(*i).or_insert(0.0) += a;
        }
        exponents.retain(|_, a| *a != 0.0);
        Self {
            coeff: self.coeff * other.coeff,
            exponents,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StructureVerdict {
    pub is_affine: bool,
    pub is_monomial: bool,
    pub is_posynomial: bool,
    pub is_quadratic: bool,
    pub affine: Option<AffineForm>,
    pub quadratic: Option<QuadraticForm>,
    /// Posynomial terms (a single term when `is_monomial`).
    pub posynomial: Option<Vec<MonomialTerm>>,
}

impl StructureVerdict {
    pub fn monomial(&self) -> Option<&MonomialTerm> {
        if self.is_monomial {
            self.posynomial.as_ref().and_then(|t| t.first())
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Default)]
struct Shape {
    quad: Option<QuadraticForm>,
    posy: Option<Vec<MonomialTerm>>,
}

fn merge_terms(terms: Vec<MonomialTerm>) -> Vec<MonomialTerm> {
    let mut merged: Vec<MonomialTerm> = Vec::new();
    for t in terms {
        match merged.iter_mut().find(|m| m.key() == t.key()) {
            Some(m) => m.coeff += t.coeff,
            None => merged.push(t),
        }
    }
    merged
}

fn constant_shape(v: f64) -> Shape {
    Shape {
        quad: Some(QuadraticForm::from_affine(AffineForm::constant(v))),
        posy: if v > 0.0 {
            Some(vec![MonomialTerm {
                coeff: v,
                exponents: BTreeMap::new(),
            }])
        } else if v == 0.0 {
            Some(Vec::new())
        } else {
            None
        },
    }
}

fn constant_value(s: &Shape) -> Option<f64> {
    s.quad
        .as_ref()
        .filter(|q| q.is_affine() && q.linear.is_constant())
        .map(|q| q.linear.constant)
}

fn shape(e: &Expr) -> Shape {
    match e {
        Expr::Const(v) | Expr::Param { value: v, .. } => constant_shape(*v),
        Expr::Var(i) => {
            let mut coeffs = BTreeMap::new();
            coeffs.insert(*i, 1.0);
            let mut exponents = BTreeMap::new();
            exponents.insert(*i, 1.0);
            Shape {
                quad: Some(QuadraticForm::from_affine(AffineForm {
                    coeffs,
                    constant: 0.0,
                })),
                posy: Some(vec![MonomialTerm {
                    coeff: 1.0,
                    exponents,
                }]),
            }
        }
        Expr::Add(a, b) => sum_shapes(&[shape(a), shape(b)]),
        Expr::Sum(ts) => sum_shapes(&ts.iter().map(shape).collect::<Vec<_>>()),
        Expr::Neg(a) => scale_shape(shape(a), -1.0),
        Expr::Scale(k, a) => scale_shape(shape(a), *k),
        Expr::Dot { coeffs, vars } => {
            if coeffs.len() != vars.len() {
                return Shape::default();
            }
            let mut aff = AffineForm::default();
            let mut terms = Vec::new();
            let mut posy_ok = true;
            for (c, i) in coeffs.iter().zip(vars) {
                *aff.coeffs.entry(*i).or_insert(0.0) += c;
                if *c > 0.0 {
                    let mut exponents = BTreeMap::new();
                    exponents.insert(*i, 1.0);
                    terms.push(MonomialTerm {
                        coeff: *c,
                        exponents,
                    });
                } else if *c < 0.0 {
                    posy_ok = false;
                }
            }
            Shape {
                quad: Some(QuadraticForm::from_affine(aff)),
                posy: posy_ok.then(|| merge_terms(terms)),
            }
        }
        Expr::Quad { q, vars } => {
            if !q.is_square() || q.rows != vars.len() {
                return Shape::default();
            }
            let mut form = QuadraticForm::default();
            for r in 0..q.rows {
                for c in 0..q.cols {
                    let (i, j) = (vars[r].min(vars[c]), vars[r].max(vars[c]));
                    *form.quad.entry((i, j)).or_insert(0.0) += 0.5 * q[(r, c)];
                }
            }
            form.quad.retain(|_, c| *c != 0.0);
            let posy = if form.quad.values().all(|c| *c > 0.0) {
                Some(
                    form.quad
                        .iter()
                        .map(|((i, j), c)| {
                            let mut exponents = BTreeMap::new();
                            *exponents.entry(*i).or_insert(0.0) += 1.0;
                            *exponents.entry(*j).or_insert(0.0) += 1.0;
                            MonomialTerm {
                                coeff: *c,
                                exponents,
                            }
                        })
                        .collect(),
                )
            } else {
                None
            };
            Shape {
                quad: Some(form),
                posy,
            }
        }
        Expr::Norm2 { a, b, vars } => {
            if a.is_zero() && a.rows == b.len() && a.cols == vars.len() {
                constant_shape(crate::linalg::norm2(b))
            } else {
                Shape::default()
            }
        }
        Expr::Exp(a) => match constant_value(&shape(a)) {
            Some(v) => constant_shape(v.exp()),
            None => Shape::default(),
        },
        Expr::Log(a) => match constant_value(&shape(a)) {
            Some(v) if v > 0.0 => constant_shape(v.ln()),
            _ => Shape::default(),
        },
        Expr::Pow(a, p) => pow_shape(shape(a), *p),
        Expr::Monomial {
            coeff,
            exponents,
            vars,
        } => {
            if !(*coeff > 0.0) || exponents.len() != vars.len() {
                return Shape::default();
            }
            let mut exps: BTreeMap<usize, f64> = BTreeMap::new();
            for (a, i) in exponents.iter().zip(vars) {
                *exps.entry(*i).or_insert(0.0) += a;
            }
            exps.retain(|_, a| *a != 0.0);
            let term = MonomialTerm {
                coeff: *coeff,
                exponents: exps,
            };
            Shape {
                quad: monomial_as_quadratic(&term),
                posy: Some(vec![term]),
            }
        }
    }
}

fn monomial_as_quadratic(t: &MonomialTerm) -> Option<QuadraticForm> {
    let degree: f64 = t.exponents.values().sum();
    if t.exponents.values().any(|a| *a < 0.0 || !is_integer(*a)) || degree > 2.0 {
        return None;
    }
    let mut form = QuadraticForm::default();
    let idx: Vec<usize> = t
        .exponents
        .iter()
        .flat_map(|(i, a)| std::iter::repeat_n(*i, *a as usize))
        .collect();
    match idx.as_slice() {
        [] => form.linear.constant = t.coeff,
        [i] => {
            form.linear.coeffs.insert(*i, t.coeff);
        }
        [i, j] => {
            form.quad.insert(((*i).min(*j), (*i).max(*j)), t.coeff);
        }
        _ => return None,
    }
    Some(form)
}

fn sum_shapes(parts: &[Shape]) -> Shape {
    let quad = parts.iter().try_fold(QuadraticForm::default(), |acc, s| {
        s.quad.as_ref().map(|q| acc.plus(q))
    });
    let posy = parts
        .iter()
        .try_fold(Vec::new(), |mut acc: Vec<MonomialTerm>, s| {
            s.posy.as_ref().map(|p| {
                acc.extend(p.iter().cloned());
                acc
            })
        })
        .map(merge_terms);
    Shape { quad, posy }
}

fn scale_shape(s: Shape, k: f64) -> Shape {
    let quad = s.quad.map(|q| q.scaled(k));
    let posy = if k == 0.0 {
        Some(Vec::new())
    } else {
        s.posy.and_then(|terms| {
            if terms.is_empty() {
                Some(terms)
            } else if k > 0.0 {
                Some(
                    terms
                        .into_iter()
                        .map(|t| MonomialTerm {
                            coeff: k * t.coeff,
                            ..t
                        })
                        .collect(),
                )
            } else {
                None
            }
        })
    };
    Shape { quad, posy }
}

fn pow_shape(s: Shape, p: f64) -> Shape {
    if p == 1.0 {
        return s;
    }
    if p == 0.0 {
        return constant_shape(1.0);
    }
    if let Some(v) = constant_value(&s) {
        return match super::pow_checked(v, p) {
            Ok(r) => constant_shape(r),
            Err(_) => Shape::default(),
        };
    }
    let mut out = Shape::default();
    if let Some([t]) = s.posy.as_deref() {
        let term = MonomialTerm {
            coeff: t.coeff.powf(p),
            exponents: t.exponents.iter().map(|(i, a)| (*i, a * p)).collect(),
        };
        out.quad = monomial_as_quadratic(&term);
        out.posy = Some(vec![term]);
    } else if p == 2.0 {
        if let Some(terms) = s.posy.as_ref() {
            let mut sq = Vec::new();
            for a in terms {
                for b in terms {
                    sq.push(a.times(b));
                }
            }
            out.posy = Some(merge_terms(sq));
        }
    }
    if p == 2.0 {
        if let Some(q) = s.quad.as_ref().filter(|q| q.is_affine()) {
            let l = &q.linear;
            let mut form = QuadraticForm::default();
            for (i, ci) in &l.coeffs {
                for (j, cj) in &l.coeffs {
                    if i <= j {
                        let k = if i == j { 1.0 } else { 2.0 };
                        *form.quad.entry((*i, *j)).or_insert(0.0) += k * ci * cj;
                    }
                }
                *form.linear.coeffs.entry(*i).or_insert(0.0) += 2.0 * ci * l.constant;
            }
            form.linear.constant = l.constant * l.constant;
            out.quad = Some(form);
        }
    }
    out
}

pub fn analyze_structure(e: &Expr) -> StructureVerdict {
    let s = shape(e);
    let quadratic = s.quad;
    let affine = quadratic
        .as_ref()
        .filter(|q| q.is_affine())
        .map(|q| q.linear.clone());
    let posynomial = s.posy.filter(|t| !t.is_empty());
    StructureVerdict {
        is_affine: affine.is_some(),
        is_quadratic: quadratic.is_some(),
        is_monomial: posynomial.as_ref().is_some_and(|t| t.len() == 1),
        is_posynomial: posynomial.is_some(),
        affine,
        quadratic,
        posynomial,
    }
}
