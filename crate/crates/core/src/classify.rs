//! Assigns a problem its most specific ontology class and the chain of
//! results that connects that class to convex optima.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::expr::{analyze_structure, curvature, AffineForm, Curvature, Expr, QuadraticForm};
use crate::linalg::{default_psd_tol, Matrix};
use crate::problem::{canonical_sense, ConeTag, Domain, Problem, Relation, VarKind};

pub use crate::linalg::{psd_check, trace_inner_product, PsdVerdict};

/// Seed for the chord sampler that refutes convexity of unrecognized objectives.
pub const CHORD_SEED: u64 = 0x5EED;
const CHORD_SAMPLES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProblemClass {
    LP,
    QP,
    QCQP,
    SOCP,
    SDP,
    ConicProgram,
    GP,
    ConvexNLP,
    NLP,
}

impl fmt::Display for ProblemClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convexity {
    Convex,
    Nonconvex,
    Unknown,
}

impl fmt::Display for Convexity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Convexity::Convex => "convex",
            Convexity::Nonconvex => "nonconvex",
            Convexity::Unknown => "unknown",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DegenerateFlag {
    EmptyConstraints,
    ConstantObjective,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainLink {
    pub node: String,
    pub justification: String,
}

impl ChainLink {
    fn new(node: &str, justification: &str) -> Self {
        Self {
            node: node.to_string(),
            justification: justification.to_string(),
        }
    }
}

/// One linear row `a·x (relation) b` taken from constraint `constraint`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearRow {
    pub constraint: usize,
    pub a: Vec<f64>,
    pub relation: Relation,
    pub b: f64,
}

/// Dense data of a linear program in the problem's own sense:
/// `sense cᵀx + c0` subject to `rows` and coordinate `domains`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearData {
    pub maximize: bool,
    pub c: Vec<f64>,
    pub c0: f64,
    pub rows: Vec<LinearRow>,
    pub domains: Vec<Domain>,
}

/// `½xᵀQx + cᵀx + c0` after sense normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticData {
    pub q: Matrix,
    pub c: Vec<f64>,
    pub c0: f64,
    pub min_eigenvalue: f64,
    /// Minimum eigenvalue of each quadratic constraint's `Q` (in `g ≤ 0` form).
    pub constraint_min_eigenvalues: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "cone", rename_all = "kebab-case")]
pub enum ConeBlock {
    /// `‖A x[vars] + b‖₂ ≤ cᵀx + d`
    SecondOrder {
        constraint: usize,
        a: Matrix,
        b: Vec<f64>,
        vars: Vec<usize>,
        c: Vec<f64>,
        d: f64,
    },
    PositiveSemidefinite {
        constraint: usize,
        variable: String,
        dim: usize,
    },
}

/// `coeff · Π xⱼ^exponents[j]` over all coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonomialRow {
    pub coeff: f64,
    pub exponents: Vec<f64>,
}

/// GP constraint normalized to `Σ terms ≤ 1`, or `term = 1` for equalities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpConstraint {
    pub constraint: usize,
    pub equality: bool,
    pub terms: Vec<MonomialRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpData {
    pub objective: Vec<MonomialRow>,
    pub constraints: Vec<GpConstraint>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Evidence {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linear: Option<LinearData>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadratic: Option<QuadraticData>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub cones: Vec<ConeBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub posynomials: Option<GpData>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class: ProblemClass,
    pub convexity: Convexity,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub chain: Vec<ChainLink>,
    pub flags: Vec<DegenerateFlag>,
    pub evidence: Evidence,
}

impl Classification {
    /// `"LP, convex"` or `"QP, nonconvex (min eig -1)"`.
    pub fn headline(&self) -> String {
        match &self.reason {
            Some(r) => format!("{}, {} ({r})", self.class, self.convexity),
            None => format!("{}, {}", self.class, self.convexity),
        }
    }

    /// `"LP ⊨ ConicProgram ⊨ ConvexOptima [Lemma 1]"`: the nodes joined by
    /// entailment, tagged with the result that justifies the first step.
    pub fn summary(&self) -> String {
        let nodes: Vec<&str> = self.chain.iter().map(|l| l.node.as_str()).collect();
        let first = self
            .chain
            .first()
            .map(|l| l.justification.as_str())
            .unwrap_or("");
        format!("{} [{first}]", nodes.join(" ⊨ "))
    }

    pub fn is_convex(&self) -> bool {
        self.convexity == Convexity::Convex
    }

    /// Whether every second-order cone block has `A = 0`.
    pub fn is_reducible_socp(&self) -> bool {
        self.class == ProblemClass::SOCP
            && self.evidence.cones.iter().all(|c| match c {
                ConeBlock::SecondOrder { a, .. } => a.is_zero(),
                ConeBlock::PositiveSemidefinite { .. } => false,
            })
    }
}

/// Chain report: one `<node> [<justification>]` line per node.
pub fn ontology_chain(c: &Classification) -> String {
    c.chain
        .iter()
        .map(|l| format!("{} [{}]\n", l.node, l.justification))
        .collect()
}

/// Rounds to six decimals for human-facing reasons.
fn short(v: f64) -> String {
    let r = (v * 1e6).round() / 1e6;
    format!("{}", r + 0.0)
}

fn affine(e: &Expr) -> Option<AffineForm> {
    let s = analyze_structure(e);
    if s.is_affine {
        s.affine
    } else {
        None
    }
}

fn quadratic(e: &Expr) -> Option<QuadraticForm> {
    let s = analyze_structure(e);
    if s.is_quadratic {
        s.quadratic
    } else {
        None
    }
}

fn min_eig(q: &Matrix) -> f64 {
    if q.rows == 0 {
        return 0.0;
    }
    psd_check(q, 0.0)
        .map(|v| v.min_eigenvalue)
        .unwrap_or(f64::NAN)
}

fn is_psd(q: &Matrix) -> bool {
    q.rows == 0 || psd_check(q, default_psd_tol(q)).is_ok_and(|v| v.is_psd)
}

/// Constraint expressed as `g(x) ≤ 0` (or `= 0`) plus the raw sides.
struct Row<'a> {
    index: usize,
    g: Expr,
    equality: bool,
    lhs: &'a Expr,
    rhs: &'a Expr,
    relation: Relation,
    cone: Option<ConeTag>,
}

fn rows(p: &Problem) -> Vec<Row<'_>> {
    p.constraints
        .iter()
        .enumerate()
        .map(|(index, c)| Row {
            index,
            g: match c.relation {
                Relation::Ge => Expr::sub(c.rhs.clone(), c.lhs.clone()),
                _ => Expr::sub(c.lhs.clone(), c.rhs.clone()),
            },
            equality: c.relation == Relation::Eq,
            lhs: &c.lhs,
            rhs: &c.rhs,
            relation: c.relation,
            cone: c.cone,
        })
        .collect()
}

/// `k‖A v + b‖₂` with `k > 0`, returned with `k` folded into `A` and `b`.
fn scaled_norm(e: &Expr) -> Option<(Matrix, Vec<f64>, Vec<usize>)> {
    match e {
        Expr::Norm2 { a, b, vars } => Some((a.clone(), b.clone(), vars.clone())),
        Expr::Scale(k, inner) if *k > 0.0 => {
            let (a, b, vars) = scaled_norm(inner)?;
            Some((a.scaled(*k), b.iter().map(|v| k * v).collect(), vars))
        }
        _ => None,
    }
}

fn soc_block(row: &Row, n: usize) -> Option<ConeBlock> {
    let (norm, bound) = match (row.relation, row.cone) {
        (Relation::InCone, Some(ConeTag::SecondOrder)) | (Relation::Le, None) => (row.lhs, row.rhs),
        (Relation::Ge, None) => (row.rhs, row.lhs),
        _ => return None,
    };
    let (a, b, vars) = scaled_norm(norm)?;
    let bound = affine(bound)?;
    Some(ConeBlock::SecondOrder {
        constraint: row.index,
        a,
        b,
        vars,
        c: bound.dense(n),
        d: bound.constant,
    })
}

/// Dense LP data when the objective and every constraint are affine and no
/// cone constraint is present.
pub fn linear_data(p: &Problem) -> Option<LinearData> {
    let n = p.dim();
    let obj = affine(&p.objective)?;
    let mut out = Vec::new();
    for (index, c) in p.constraints.iter().enumerate() {
        if c.relation == Relation::InCone {
            return None;
        }
        let g = affine(&Expr::sub(c.lhs.clone(), c.rhs.clone()))?;
        out.push(LinearRow {
            constraint: index,
            a: g.dense(n),
            relation: c.relation,
            b: -g.constant + 0.0,
        });
    }
    Some(LinearData {
        maximize: p.sense == crate::problem::Sense::Maximize,
        c: obj.dense(n),
        c0: obj.constant,
        rows: out,
        domains: p.coordinate_domains(),
    })
}

fn monomial_rows(terms: &[crate::expr::MonomialTerm], n: usize) -> Vec<MonomialRow> {
    terms
        .iter()
        .map(|t| MonomialRow {
            coeff: t.coeff,
            exponents: t.dense_exponents(n),
        })
        .collect()
}

fn divide(terms: Vec<MonomialRow>, by: &MonomialRow) -> Vec<MonomialRow> {
    terms
        .into_iter()
        .map(|t| MonomialRow {
            coeff: t.coeff / by.coeff,
            exponents: t
                .exponents
                .iter()
                .zip(&by.exponents)
                .map(|(a, b)| a - b + 0.0)
                .collect(),
        })
        .collect()
}

/// Posynomial tables when `p` (already in minimize sense) is a geometric
/// program over strictly positive variables.
pub fn gp_data(p: &Problem) -> Option<GpData> {
    let n = p.dim();
    if p.variables.is_empty()
        || p.variables.iter().any(|v| {
            v.domain != Domain::StrictlyPositive || matches!(v.kind, VarKind::SymmetricMatrix(_))
        })
    {
        return None;
    }
    let posy = |e: &Expr| {
        let s = analyze_structure(e);
        if s.is_posynomial {
            s.posynomial.map(|t| monomial_rows(&t, n))
        } else {
            None
        }
    };
    let mono = |e: &Expr| {
        let s = analyze_structure(e);
        s.monomial()
            .map(|t| monomial_rows(std::slice::from_ref(t), n).remove(0))
    };
    let objective = posy(&p.objective)?;
    let mut constraints = Vec::new();
    for (index, c) in p.constraints.iter().enumerate() {
        let (terms, equality) = match c.relation {
            Relation::Le => (divide(posy(&c.lhs)?, &mono(&c.rhs)?), false),
            Relation::Ge => (divide(posy(&c.rhs)?, &mono(&c.lhs)?), false),
            Relation::Eq => (divide(vec![mono(&c.lhs)?], &mono(&c.rhs)?), true),
            Relation::InCone => return None,
        };
        constraints.push(GpConstraint {
            constraint: index,
            equality,
            terms,
        });
    }
    Some(GpData {
        objective,
        constraints,
    })
}

fn convex_chain(class: ProblemClass, head: &str) -> Vec<ChainLink> {
    let mut chain = vec![ChainLink::new(&class.to_string(), head)];
    if matches!(
        class,
        ProblemClass::LP | ProblemClass::SOCP | ProblemClass::SDP
    ) {
        chain.push(ChainLink::new("ConicProgram", "Proposition 2"));
    }
    chain.push(ChainLink::new("ConvexOptima", "Definition 1"));
    chain
}

fn single(class: ProblemClass, id: &str) -> Vec<ChainLink> {
    vec![ChainLink::new(&class.to_string(), id)]
}

/// Deterministic chord test of `f(θx+(1-θ)y) ≤ θf(x)+(1-θ)f(y)`; returns a
/// violating chord description when one is found.
pub fn chord_violation(e: &Expr, domains: &[Domain], seed: u64) -> Option<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = domains.len();
    let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        domains
            .iter()
            .map(|d| match d {
                Domain::Free => rng.gen_range(-3.0..3.0),
                _ => rng.gen_range(0.05..3.0),
            })
            .collect()
    };
    for _ in 0..CHORD_SAMPLES {
        let x = draw(&mut rng);
        let y = draw(&mut rng);
        let t: f64 = rng.gen_range(0.05..0.95);
        let z: Vec<f64> = (0..n).map(|i| t * x[i] + (1.0 - t) * y[i]).collect();
        let (Ok(fx), Ok(fy), Ok(fz)) = (e.eval(&x), e.eval(&y), e.eval(&z)) else {
            continue;
        };
        let bound = t * fx + (1.0 - t) * fy;
        if fz > bound + 1e-9 * (1.0 + bound.abs()) {
            return Some(format!(
                "chord violation: f(z)={} > {}",
                short(fz),
                short(bound)
            ));
        }
    }
    None
}

/// Most specific class of `p` with its justification chain.
pub fn classify(original: &Problem) -> Classification {
    classify_with_seed(original, CHORD_SEED)
}

/// [`classify`] with an explicit seed for the chord sampler.
pub fn classify_with_seed(original: &Problem, seed: u64) -> Classification {
    let p = canonical_sense(original);
    let n = p.dim();
    let rows = rows(&p);
    let mut flags = Vec::new();
    if p.constraints.is_empty() {
        flags.push(DegenerateFlag::EmptyConstraints);
    }
    if p.objective.coordinates().is_empty() {
        flags.push(DegenerateFlag::ConstantObjective);
    }
    let done = |class, convexity, reason: Option<String>, chain, evidence| Classification {
        class,
        convexity,
        reason,
        chain,
        flags: flags.clone(),
        evidence,
    };

    if let Some(lin) = linear_data(original) {
        return done(
            ProblemClass::LP,
            Convexity::Convex,
            None,
            convex_chain(ProblemClass::LP, "Lemma 1"),
            Evidence {
                linear: Some(lin),
                ..Default::default()
            },
        );
    }

    if let Some(gp) = gp_data(&p) {
        return done(
            ProblemClass::GP,
            Convexity::Convex,
            None,
            vec![
                ChainLink::new("GP", "Lemma 4"),
                ChainLink::new("ConvexOptima", "Definition 1"),
            ],
            Evidence {
                posynomials: Some(gp),
                ..Default::default()
            },
        );
    }

    let obj_affine = affine(&p.objective);
    let no_cones = rows.iter().all(|r| r.relation != Relation::InCone);

    // Quadratic families: quadratic objective, affine or quadratic rows.
    if let Some(obj_q) = quadratic(&p.objective).filter(|_| no_cones) {
        let row_q: Option<Vec<QuadraticForm>> = rows.iter().map(|r| quadratic(&r.g)).collect();
        if let Some(row_q) = row_q {
            let q = obj_q.q_matrix(n);
            let evidence = |cmins| Evidence {
                quadratic: Some(QuadraticData {
                    q: q.clone(),
                    c: obj_q.linear.dense(n),
                    c0: obj_q.linear.constant,
                    min_eigenvalue: min_eig(&q),
                    constraint_min_eigenvalues: cmins,
                }),
                ..Default::default()
            };
            let quad_rows: Vec<(usize, &QuadraticForm, bool)> = rows
                .iter()
                .zip(&row_q)
                .filter(|(_, f)| !f.is_affine())
                .map(|(r, f)| (r.index, f, r.equality))
                .collect();
            if quad_rows.is_empty() {
                let m = min_eig(&q);
                return if is_psd(&q) {
                    done(
                        ProblemClass::QP,
                        Convexity::Convex,
                        None,
                        vec![
                            ChainLink::new("QP", "Lemma 5"),
                            ChainLink::new("ConvexOptima", "Definition 1"),
                        ],
                        evidence(Vec::new()),
                    )
                } else {
                    done(
                        ProblemClass::QP,
                        Convexity::Nonconvex,
                        Some(format!("min eig {}", short(m))),
                        single(ProblemClass::QP, "Definition 7"),
                        evidence(Vec::new()),
                    )
                };
            }
            let cmins: Vec<(usize, f64)> = quad_rows
                .iter()
                .map(|(i, f, _)| (*i, min_eig(&f.q_matrix(n))))
                .collect();
            let mut reason = None;
            if !is_psd(&q) {
                reason = Some(format!("objective min eig {}", short(min_eig(&q))));
            }
            for (i, f, eq) in &quad_rows {
                if reason.is_some() {
                    break;
                }
                if *eq {
                    reason = Some(format!("constraint {i} is a quadratic equality"));
                } else if !is_psd(&f.q_matrix(n)) {
                    reason = Some(format!(
                        "constraint {i} min eig {}",
                        short(min_eig(&f.q_matrix(n)))
                    ));
                }
            }
            return match reason {
                None => done(
                    ProblemClass::QCQP,
                    Convexity::Convex,
                    None,
                    vec![
                        ChainLink::new("QCQP", "Proposition 2"),
                        ChainLink::new("ConvexOptima", "Definition 1"),
                    ],
                    evidence(cmins),
                ),
                Some(r) => done(
                    ProblemClass::QCQP,
                    Convexity::Nonconvex,
                    Some(r),
                    single(ProblemClass::QCQP, "Definition 8"),
                    evidence(cmins),
                ),
            };
        }
    }

    // Conic families: affine objective, rows affine / second-order / PSD.
    if obj_affine.is_some() {
        let mut cones = Vec::new();
        let mut conic = true;
        let (mut soc, mut psd) = (false, false);
        for r in &rows {
            if r.relation == Relation::InCone && r.cone == Some(ConeTag::PositiveSemidefinite) {
                match p.psd_variable(&p.constraints[r.index]) {
                    Some(k) => {
                        let VarKind::SymmetricMatrix(dim) = p.variables[k].kind else {
                            unreachable!("psd_variable only returns matrix variables")
                        };
                        cones.push(ConeBlock::PositiveSemidefinite {
                            constraint: r.index,
                            variable: p.variables[k].name.clone(),
                            dim,
                        });
                        psd = true;
                    }
                    None => conic = false,
                }
            } else if !r.equality && soc_block(r, n).is_some() {
                cones.extend(soc_block(r, n));
                soc = true;
            } else if affine(&r.g).is_none() {
                conic = false;
            }
        }
        if conic && (soc || psd) {
            let class = match (soc, psd) {
                (true, false) => ProblemClass::SOCP,
                (false, true) => ProblemClass::SDP,
                _ => ProblemClass::ConicProgram,
            };
            let evidence = Evidence {
                cones,
                ..Default::default()
            };
            let chain = match class {
                ProblemClass::SOCP => {
                    let reducible = evidence
                        .cones
                        .iter()
                        .all(|c| matches!(c, ConeBlock::SecondOrder { a, .. } if a.is_zero()));
                    if reducible {
                        let mut chain = vec![ChainLink::new("SOCP", "Proposition 1")];
                        chain.extend(convex_chain(ProblemClass::LP, "Lemma 1"));
                        chain
                    } else {
                        convex_chain(ProblemClass::SOCP, "Lemma 2")
                    }
                }
                ProblemClass::SDP => convex_chain(ProblemClass::SDP, "Lemma 3"),
                _ => vec![
                    ChainLink::new("ConicProgram", "Proposition 2"),
                    ChainLink::new("ConvexOptima", "Definition 1"),
                ],
            };
            return done(class, Convexity::Convex, None, chain, evidence);
        }
    }

    // General NLP: recognized convex curvature, or refuted / unknown.
    let obj_curv = curvature(&p.objective).curvature;
    let mut blocker = None;
    for r in &rows {
        let ok = match (r.relation, r.cone) {
            (Relation::InCone, Some(ConeTag::PositiveSemidefinite)) => {
                p.psd_variable(&p.constraints[r.index]).is_some()
            }
            (Relation::InCone, _) => soc_block(r, n).is_some(),
            (Relation::Eq, _) => affine(&r.g).is_some(),
            _ => curvature(&r.g).curvature.is_convex(),
        };
        if !ok {
            blocker = Some(r.index);
            break;
        }
    }
    if obj_curv.is_convex() && blocker.is_none() {
        return done(
            ProblemClass::ConvexNLP,
            Convexity::Convex,
            None,
            vec![
                ChainLink::new("ConvexNLP", "Definition 1"),
                ChainLink::new("ConvexOptima", "Definition 1"),
            ],
            Evidence::default(),
        );
    }
    let domains = p.coordinate_domains();
    let (convexity, reason) = if obj_curv == Curvature::Unknown || obj_curv.is_concave() {
        match chord_violation(&p.objective, &domains, seed) {
            Some(r) => (Convexity::Nonconvex, Some(format!("objective {r}"))),
            None => (
                Convexity::Unknown,
                Some("objective curvature not recognized".to_string()),
            ),
        }
    } else {
        (
            Convexity::Unknown,
            blocker.map(|i| format!("constraint {i} not recognized as convex")),
        )
    };
    done(
        ProblemClass::NLP,
        convexity,
        reason,
        single(ProblemClass::NLP, "Definition 8"),
        Evidence::default(),
    )
}
