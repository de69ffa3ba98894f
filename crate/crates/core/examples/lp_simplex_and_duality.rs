//! Solves a textbook LP, forms its dual, and compares the two optima.

use std::path::PathBuf;

use opt_ontology::certificate::check_solution;
use opt_ontology::problem::{parse_problem, Problem};
use opt_ontology::solver::{solve_barrier, solve_simplex, SolverConfig};
use opt_ontology::transform::lp_dual;

fn load(stem: &str) -> Problem {
    let path =
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("problems/{stem}.optproblem.json"));
    parse_problem(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn main() {
    let cfg = SolverConfig::default();
    let primal = load("symmetric_lp");
    let s = solve_simplex(&primal, &cfg).unwrap();
    println!("primal simplex: {:?} at {:?}", s.value, s.point);
    let kkt = check_solution(&primal, &s, 1e-6).unwrap().unwrap();
    println!("  kkt: {:?}", kkt.verdict);

    let b = solve_barrier(&primal, &cfg).unwrap();
    println!(
        "primal barrier: {:?} after {} iterations",
        b.value, b.iterations
    );

    let dual = lp_dual(&primal).unwrap();
    println!("dual form: {}", dual.certificate);
    let d = solve_simplex(&dual.transformed, &cfg).unwrap();
    println!("dual simplex:   {:?} at {:?}", d.value, d.point);
}
