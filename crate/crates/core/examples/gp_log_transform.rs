//! Turns a geometric program into a convex problem in log variables and
//! solves an unconstrained one with Newton's method.

use opt_ontology::classify::classify;
use opt_ontology::expr::Expr;
use opt_ontology::problem::{Domain, Problem, Sense, VarKind, VariableSpec};
use opt_ontology::solver::{solve_newton, SolverConfig};
use opt_ontology::transform::gp_log_transform;

fn main() {
    // min x/y + y/x + 1/(xy) + xy over x, y > 0
    let t = |c: f64, a: f64, b: f64| Expr::monomial(c, vec![a, b], vec![0, 1]).unwrap();
    let p = Problem::new(
        Sense::Minimize,
        Expr::sum(vec![
            t(1.0, 1.0, -1.0),
            t(1.0, -1.0, 1.0),
            t(1.0, -1.0, -1.0),
            t(1.0, 1.0, 1.0),
        ]),
        vec![VariableSpec::new(
            "x",
            VarKind::Vector(2),
            Domain::StrictlyPositive,
        )],
    );
    println!("original:    {}", classify(&p).headline());

    let r = gp_log_transform(&p).unwrap();
    println!(
        "transformed: {} ({})",
        classify(&r.transformed).headline(),
        r.certificate
    );

    let s = solve_newton(&r.transformed, &SolverConfig::default(), None).unwrap();
    let y = s.point.clone().unwrap();
    let x = r.backward.apply(&y).unwrap();
    println!("log-space optimum {:?} at {y:?}", s.value);
    println!(
        "original optimum {} at {x:?}",
        r.value_map.apply(s.value.unwrap())
    );
}
