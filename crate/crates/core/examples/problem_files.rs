//! Round-trips a problem through the JSON file format and shows how
//! parse errors and validation failures are reported.

use opt_ontology::expr::Expr;
use opt_ontology::problem::{
    parse_problem, serialize_problem, Constraint, Domain, Problem, Sense, VarKind, VariableSpec,
};

fn main() {
    let p = Problem::new(
        Sense::Maximize,
        Expr::dot(vec![3.0, 5.0], vec![0, 1]),
        vec![VariableSpec::new(
            "x",
            VarKind::Vector(2),
            Domain::Nonnegative,
        )],
    )
    .with_constraints(vec![Constraint::le(Expr::var(0), Expr::constant(4.0))]);
    let text = serialize_problem(&p);
    print!("{text}");
    assert_eq!(parse_problem(&text).unwrap(), p);

    let truncated = &text[..text.len() / 2];
    println!("truncated: {}", parse_problem(truncated).unwrap_err());
    let undeclared = text.replace("\"x\"", "\"y\"");
    println!(
        "renamed:   {}",
        parse_problem(&undeclared).map(|_| ()).unwrap_err()
    );
}
