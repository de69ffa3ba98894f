//! Decides feasibility of an LP through the phase-1 slack problem.

use opt_ontology::expr::Expr;
use opt_ontology::problem::{Constraint, Domain, Problem, Sense, VarKind, VariableSpec};
use opt_ontology::solver::{solve_simplex, SolverConfig};
use opt_ontology::transform::phase1_slack;

fn lp(upper: f64) -> Problem {
    // x₀ + x₁ ≥ 4 and x₀ + x₁ ≤ upper over x ≥ 0.
    let sum = || Expr::dot(vec![1.0, 1.0], vec![0, 1]);
    Problem::new(
        Sense::Minimize,
        Expr::var(0),
        vec![VariableSpec::new(
            "x",
            VarKind::Vector(2),
            Domain::Nonnegative,
        )],
    )
    .with_constraints(vec![
        Constraint::ge(sum(), Expr::constant(4.0)),
        Constraint::le(sum(), Expr::constant(upper)),
    ])
}

fn main() {
    for upper in [6.0, 2.0] {
        let r = phase1_slack(&lp(upper)).unwrap();
        let s = solve_simplex(&r.transformed, &SolverConfig::default()).unwrap();
        let slack = s.value.unwrap();
        let verdict = if slack <= 0.0 {
            "feasible"
        } else {
            "infeasible"
        };
        println!("upper = {upper}: min slack {slack} so {verdict}");
    }
}
