//! Builds expressions by hand, evaluates them and inspects curvature.

use opt_ontology::expr::{curvature, Expr, GradientMode};
use opt_ontology::linalg::Matrix;

fn main() {
    // ‖(x₀, x₁) − (1, 2)‖₂ + exp(x₂)
    let norm = Expr::norm2(Matrix::identity(2), vec![-1.0, -2.0], vec![0, 1]);
    let f = Expr::add(norm, Expr::exp(Expr::var(2)));
    let x = [4.0, 6.0, 0.0];
    println!("f(x)       = {}", f.eval(&x).unwrap());
    println!(
        "∇f(x)      = {:?}",
        f.gradient(&x, GradientMode::Analytic).unwrap()
    );
    println!(
        "∇f(x) (fd) = {:?}",
        f.gradient(&x, GradientMode::FiniteDifference { step: 1e-6 })
            .unwrap()
    );
    println!("curvature  = {:?}", curvature(&f));

    let q = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]]).unwrap();
    let saddle = Expr::quad(q, vec![0, 1]);
    println!("saddle     = {:?}", curvature(&saddle));

    let mono = Expr::monomial(2.0, vec![1.0, -0.5], vec![0, 1]).unwrap();
    println!("2 x₀ x₁^-½ at (1, 4) = {}", mono.eval(&[1.0, 4.0]).unwrap());
    println!(
        "nonpositive coefficient: {:?}",
        Expr::monomial(-1.0, vec![1.0], vec![0]).err()
    );
}
