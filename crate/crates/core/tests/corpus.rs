mod common;

use common::{load, lp_oracle, LpOracle, CORPUS};
use opt_ontology::classify::{classify, ontology_chain, Convexity, ProblemClass};
use opt_ontology::expr::{Expr, GradientMode};
use opt_ontology::problem::{Relation, Sense};
use opt_ontology::solver::{solve_grid, solve_simplex, GridSpec, SolverConfig};
use opt_ontology::transform::{lp_dual, socp_to_lp, to_convex_min, Rule, TransformError};

#[test]
fn every_golden_file_has_its_chain() {
    for (stem, class, chain) in CORPUS {
        let c = classify(&load(stem));
        assert_eq!(c.class.to_string(), class, "{stem}");
        let expected: String = chain.iter().map(|(n, j)| format!("{n} [{j}]\n")).collect();
        assert_eq!(ontology_chain(&c), expected, "{stem}");
    }
}

#[test]
fn convexity_verdicts() {
    for (stem, want) in [
        ("nonconvex_qp", Convexity::Nonconvex),
        ("nonconvex_nlp", Convexity::Nonconvex),
        ("sdp", Convexity::Convex),
        ("gp", Convexity::Convex),
    ] {
        assert_eq!(classify(&load(stem)).convexity, want, "{stem}");
    }
}

#[test]
fn standard_form_lp_has_five_constraints() {
    let p = load("standard_lp");
    assert_eq!(p.constraints.len(), 5);
    assert_eq!(
        p.constraints
            .iter()
            .filter(|c| c.relation == Relation::Ge)
            .count(),
        2
    );
    assert!(p
        .constraints
        .iter()
        .all(|c| c.rhs.eval(&[0.0, 0.0]).unwrap() >= 0.0));
}

#[test]
fn symmetric_dual_has_transposed_rows() {
    let primal = load("symmetric_lp");
    let t = lp_dual(&primal).unwrap();
    assert_eq!(t.certificate, "symmetric dual");
    let d = t.transformed;
    assert_eq!(d.sense, Sense::Minimize);
    assert_eq!(d.dim(), 3);
    assert!(d.constraints.iter().all(|c| c.relation == Relation::Ge));
    // Rows of Aᵀ are the primal columns (1, 0, 3) and (0, 2, 2).
    let col0 = d.constraints[0]
        .lhs
        .gradient(&[0.0; 3], GradientMode::Analytic)
        .unwrap();
    let col1 = d.constraints[1]
        .lhs
        .gradient(&[0.0; 3], GradientMode::Analytic)
        .unwrap();
    assert_eq!(col0, vec![1.0, 0.0, 3.0]);
    assert_eq!(col1, vec![0.0, 2.0, 2.0]);
}

#[test]
fn alternative_primal_gets_equality_dual() {
    let canonical = load("canonical_lp");
    let mut free = canonical.clone();
    // Drop the explicit sign rows to get the alternative form.
    free.constraints.truncate(3);
    let t = lp_dual(&free).unwrap();
    assert_eq!(t.certificate, "alternative dual");
    assert!(t
        .transformed
        .constraints
        .iter()
        .all(|c| c.relation == Relation::Eq));
}

#[test]
fn reducible_socp_matches_vertex_oracle() {
    let p = load("reducible_socp");
    let lp = socp_to_lp(&p).unwrap().transformed;
    assert_eq!(classify(&lp).class, ProblemClass::LP);
    let s = solve_simplex(&lp, &SolverConfig::default()).unwrap();
    // ‖(3, 4)‖ = 5 ≤ x₀ + x₁ with x ≥ 0 and cost x₀ + 2x₁.
    let oracle = lp_oracle(
        &[1.0, 2.0],
        &[
            (vec![-1.0, -1.0], -5.0),
            (vec![-1.0, 0.0], 0.0),
            (vec![0.0, -1.0], 0.0),
        ],
    );
    match oracle {
        LpOracle::Optimal { value, .. } => assert!((s.value.unwrap() - value).abs() < 1e-9),
        o => panic!("{o:?}"),
    }
}

#[test]
fn general_socp_is_not_reducible() {
    assert_eq!(
        socp_to_lp(&load("socp")),
        Err(TransformError::NotReducible {
            cone: 1,
            constraint: 0
        })
    );
}

#[test]
fn maximizing_a_constant_reports_the_constant() {
    let mut p = load("parabola");
    p.sense = Sense::Maximize;
    p.reported_sense = Sense::Maximize;
    p.objective = Expr::Const(5.0);
    let s = solve_grid(
        &p,
        &GridSpec::uniform(1, -1.0, 1.0, 0.5),
        &SolverConfig::default(),
    )
    .unwrap();
    assert_eq!(s.value, Some(5.0));
    assert_eq!(to_convex_min(&p).entries()[0].rule, Rule::Sense);
}

#[test]
fn to_convex_chains() {
    let gp = to_convex_min(&load("gp"));
    assert_eq!(
        gp.entries().iter().map(|e| e.rule).collect::<Vec<_>>(),
        vec![Rule::GpLog]
    );
    assert_eq!(classify(gp.result()).class, ProblemClass::ConvexNLP);
    let lp = to_convex_min(&load("canonical_lp"));
    assert_eq!(
        lp.entries().iter().map(|e| e.rule).collect::<Vec<_>>(),
        vec![Rule::Sense]
    );
    assert_eq!(lp.value_map().apply(-36.0), 36.0);
}
