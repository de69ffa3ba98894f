//! Checks KKT conditions and local optimality at candidate points.

use opt_ontology::certificate::{check_kkt, check_local_optimum};
use opt_ontology::expr::Expr;
use opt_ontology::problem::{Constraint, Domain, Problem, Sense, VarKind, VariableSpec};

fn main() {
    let scalar = || vec![VariableSpec::new("x", VarKind::Scalar, Domain::Free)];

    // min x² s.t. 1 − x ≤ 0: optimum x = 1 with λ = 2.
    let p = Problem::new(Sense::Minimize, Expr::pow(Expr::var(0), 2.0), scalar()).with_constraints(
        vec![Constraint::le(
            Expr::sub(Expr::constant(1.0), Expr::var(0)),
            Expr::constant(0.0),
        )],
    );
    for x in [1.0, 1.1] {
        let r = check_kkt(&p, &[x], &[2.0], None, None, 1e-6).unwrap();
        println!(
            "x = {x}: {:?} (stationarity {:.3}, slackness {:.3})",
            r.verdict, r.stationarity_residual, r.complementary_slackness_residual
        );
    }

    // x⁴ − 2x² has a local maximum at 0 and minima at ±1.
    let well = Problem::new(
        Sense::Minimize,
        Expr::sub(
            Expr::pow(Expr::var(0), 4.0),
            Expr::scale(2.0, Expr::pow(Expr::var(0), 2.0)),
        ),
        scalar(),
    );
    for x in [0.0, 1.0] {
        println!(
            "local check at {x}: {:?}",
            check_local_optimum(&well, &[x], 0.5, 500, 7).unwrap()
        );
    }
}
