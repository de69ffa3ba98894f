//! Compares the derivative of the optimal value in a parameter with the
//! partial derivative of the Lagrangian at the optimum.

use std::path::PathBuf;

use opt_ontology::certificate::envelope_sensitivity;
use opt_ontology::problem::parse_problem;
use opt_ontology::solver::SolverConfig;

fn main() {
    let path =
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("problems/parametric_qp.optproblem.json");
    let p = parse_problem(&std::fs::read_to_string(path).unwrap()).unwrap();
    for r in [-1.0, 0.0, 1.5, 3.0] {
        let s = envelope_sensitivity(&p, "r", r, 1e-4, &SolverConfig::default()).unwrap();
        // Closed form: (4r − 2)/3.
        println!(
            "r = {r:>4}: d f*/dr = {:.6}, ∂L/∂r = {:.6}, closed form {:.6}",
            s.lhs,
            s.rhs,
            (4.0 * r - 2.0) / 3.0
        );
    }
}
