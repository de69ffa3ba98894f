//! Reduces a second-order cone program with constant cone operands to an LP.

use opt_ontology::classify::{classify, ontology_chain};
use opt_ontology::expr::Expr;
use opt_ontology::linalg::Matrix;
use opt_ontology::problem::{Constraint, Domain, Problem, Sense, VarKind, VariableSpec};
use opt_ontology::solver::{solve_simplex, SolverConfig};
use opt_ontology::transform::socp_to_lp;

fn main() {
    // ‖0·x + (3, 4)‖₂ ≤ x₀ + x₁ collapses to 5 ≤ x₀ + x₁.
    let cone = Constraint::second_order(
        Expr::norm2(Matrix::zeros(2, 2), vec![3.0, 4.0], vec![0, 1]),
        Expr::dot(vec![1.0, 1.0], vec![0, 1]),
    );
    let p = Problem::new(
        Sense::Minimize,
        Expr::dot(vec![1.0, 2.0], vec![0, 1]),
        vec![VariableSpec::new(
            "x",
            VarKind::Vector(2),
            Domain::Nonnegative,
        )],
    )
    .with_constraints(vec![cone]);
    let c = classify(&p);
    print!("{}\n{}", c.headline(), ontology_chain(&c));

    let r = socp_to_lp(&p).unwrap();
    println!(
        "after {}: {}",
        r.certificate,
        classify(&r.transformed).headline()
    );
    let s = solve_simplex(&r.transformed, &SolverConfig::default()).unwrap();
    println!("optimum {:?} at {:?}", s.value, s.point);
}
