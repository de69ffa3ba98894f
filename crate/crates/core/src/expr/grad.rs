use super::{check_len, check_square, norm_residual, pow_checked, Expr, ExprError};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GradientMode {
    Analytic,
    /// Central differences `(f(x + h eᵢ) - f(x - h eᵢ)) / 2h`.
    FiniteDifference {
        step: f64,
    },
}

pub(super) fn central_difference(e: &Expr, x: &[f64], h: f64) -> Result<Vec<f64>, ExprError> {
    let mut probe = x.to_vec();
    let mut g = vec![0.0; x.len()];
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = e.eval(&probe)?;
        probe[i] = x[i] - h;
        let down = e.eval(&probe)?;
        probe[i] = x[i];
        g[i] = (up - down) / (2.0 * h);
    }
    Ok(g)
}

fn gather(vars: &[usize], x: &[f64]) -> Result<Vec<f64>, ExprError> {
    vars.iter()
        .map(|&i| x.get(i).copied().ok_or(ExprError::UnboundVariable(i)))
        .collect()
}

fn axpy(acc: &mut [f64], k: f64, v: &[f64]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += k * b;
    }
}

fn norm_kink(a: &Matrix) -> ExprError {
    ExprError::NonDifferentiable(format!(
        "norm2 argument is the zero vector ({}x{} affine map)",
        a.rows, a.cols
    ))
}

/// Value and gradient in one pass.
fn first_order(e: &Expr, x: &[f64]) -> Result<(f64, Vec<f64>), ExprError> {
    let n = x.len();
    let zero = || vec![0.0; n];
    Ok(match e {
        Expr::Const(_) | Expr::Param { .. } => (e.eval(x)?, zero()),
        Expr::Var(i) => {
            let v = e.eval(x)?;
            let mut g = zero();
            g[*i] = 1.0;
            (v, g)
        }
        Expr::Add(a, b) => {
            let (va, mut ga) = first_order(a, x)?;
            let (vb, gb) = first_order(b, x)?;
            axpy(&mut ga, 1.0, &gb);
            (va + vb, ga)
        }
        Expr::Sum(ts) => {
            let mut v = 0.0;
            let mut g = zero();
            for t in ts {
                let (vt, gt) = first_order(t, x)?;
                v += vt;
                axpy(&mut g, 1.0, &gt);
            }
            (v, g)
        }
        Expr::Neg(a) => {
            let (v, g) = first_order(a, x)?;
            (-v, g.into_iter().map(|d| -d).collect())
        }
        Expr::Scale(k, a) => {
            let (v, g) = first_order(a, x)?;
            (k * v, g.into_iter().map(|d| k * d).collect())
        }
        Expr::Dot { coeffs, vars } => {
            check_len("dot", coeffs.len(), vars.len())?;
            let v = e.eval(x)?;
            let mut g = zero();
            for (c, i) in coeffs.iter().zip(vars) {
                g[*i] += c;
            }
            (v, g)
        }
        Expr::Quad { q, vars } => {
            check_square("quad", q, vars.len())?;
            let xv = gather(vars, x)?;
            let qv = q.mul_vec(&xv);
            let mut g = zero();
            // ∇(½vᵀQv) = ½(Q + Qᵀ)v
            let qtv = q.transpose().mul_vec(&xv);
            for (k, i) in vars.iter().enumerate() {
                g[*i] += 0.5 * (qv[k] + qtv[k]);
            }
            (0.5 * crate::linalg::dot(&xv, &qv), g)
        }
        Expr::Norm2 { a, b, vars } => {
            let r = norm_residual(a, b, &gather(vars, x)?)?;
            let nr = crate::linalg::norm2(&r);
            let mut g = zero();
            if a.is_zero() {
                return Ok((nr, g));
            }
            if nr == 0.0 {
                return Err(norm_kink(a));
            }
            let atr = a.transpose().mul_vec(&r);
            for (k, i) in vars.iter().enumerate() {
                g[*i] += atr[k] / nr;
            }
            (nr, g)
        }
        Expr::Exp(a) => {
            let (v, g) = first_order(a, x)?;
            let ev = v.exp();
            (ev, g.into_iter().map(|d| ev * d).collect())
        }
        Expr::Log(a) => {
            let (v, g) = first_order(a, x)?;
            if v <= 0.0 {
                return Err(ExprError::Domain {
                    atom: "log",
                    value: v,
                });
            }
            (v.ln(), g.into_iter().map(|d| d / v).collect())
        }
        Expr::Pow(a, p) => {
            let (v, g) = first_order(a, x)?;
            let val = pow_checked(v, *p)?;
            if *p == 0.0 {
                return Ok((val, zero()));
            }
            if v == 0.0 && *p < 1.0 {
                return Err(ExprError::NonDifferentiable(format!(
                    "pow with exponent {p} at zero base"
                )));
            }
            let d = p * pow_checked(v, p - 1.0)?;
            (val, g.into_iter().map(|gi| d * gi).collect())
        }
        Expr::Monomial {
            exponents, vars, ..
        } => {
            let v = e.eval(x)?;
            let xv = gather(vars, x)?;
            let mut g = zero();
            for ((ai, xi), i) in exponents.iter().zip(&xv).zip(vars) {
                g[*i] += ai * v / xi;
            }
            (v, g)
        }
    })
}

pub(super) fn analytic_gradient(e: &Expr, x: &[f64]) -> Result<Vec<f64>, ExprError> {
    first_order(e, x).map(|(_, g)| g)
}

fn outer_add(h: &mut Matrix, k: f64, u: &[f64], v: &[f64]) {
    for i in 0..u.len() {
        if u[i] == 0.0 {
            continue;
        }
        for j in 0..v.len() {
            h[(i, j)] += k * u[i] * v[j];
        }
    }
}

fn add_scaled(h: &mut Matrix, k: f64, other: &Matrix) {
    for (a, b) in h.data.iter_mut().zip(&other.data) {
        *a += k * b;
    }
}

type SecondOrder = (f64, Vec<f64>, Matrix);

fn second_order(e: &Expr, x: &[f64]) -> Result<SecondOrder, ExprError> {
    let n = x.len();
    Ok(match e {
        Expr::Const(_) | Expr::Param { .. } | Expr::Var(_) | Expr::Dot { .. } => {
            let (v, g) = first_order(e, x)?;
            (v, g, Matrix::zeros(n, n))
        }
        Expr::Add(a, b) => {
            let (va, mut ga, mut ha) = second_order(a, x)?;
            let (vb, gb, hb) = second_order(b, x)?;
            axpy(&mut ga, 1.0, &gb);
            add_scaled(&mut ha, 1.0, &hb);
            (va + vb, ga, ha)
        }
        Expr::Sum(ts) => {
            let mut v = 0.0;
            let mut g = vec![0.0; n];
            let mut h = Matrix::zeros(n, n);
            for t in ts {
                let (vt, gt, ht) = second_order(t, x)?;
                v += vt;
                axpy(&mut g, 1.0, &gt);
                add_scaled(&mut h, 1.0, &ht);
            }
            (v, g, h)
        }
        Expr::Neg(a) => {
            let (v, g, h) = second_order(a, x)?;
            (-v, g.into_iter().map(|d| -d).collect(), h.scaled(-1.0))
        }
        Expr::Scale(k, a) => {
            let (v, g, h) = second_order(a, x)?;
            (k * v, g.into_iter().map(|d| k * d).collect(), h.scaled(*k))
        }
        Expr::Quad { q, vars } => {
            let (v, g) = first_order(e, x)?;
            let mut h = Matrix::zeros(n, n);
            for (r, i) in vars.iter().enumerate() {
                for (c, j) in vars.iter().enumerate() {
                    h[(*i, *j)] += 0.5 * (q[(r, c)] + q[(c, r)]);
                }
            }
            (v, g, h)
        }
        Expr::Norm2 { a, b, vars } => {
            let (v, g) = first_order(e, x)?;
            let mut h = Matrix::zeros(n, n);
            if a.is_zero() {
                return Ok((v, g, h));
            }
            // Aᵀ(I/‖r‖ − r rᵀ/‖r‖³)A
            let r = norm_residual(a, b, &gather(vars, x)?)?;
            let at = a.transpose();
            let atr = at.mul_vec(&r);
            let local_cols = vars.len();
            let mut local = Matrix::zeros(local_cols, local_cols);
            for p in 0..local_cols {
                for q2 in 0..local_cols {
                    let mut s = 0.0;
                    for k in 0..a.rows {
                        s += a[(k, p)] * a[(k, q2)];
                    }
                    local[(p, q2)] = s / v - atr[p] * atr[q2] / (v * v * v);
                }
            }
            for (p, i) in vars.iter().enumerate() {
                for (q2, j) in vars.iter().enumerate() {
                    h[(*i, *j)] += local[(p, q2)];
                }
            }
            (v, g, h)
        }
        Expr::Exp(a) => {
            let (v, g, ha) = second_order(a, x)?;
            let ev = v.exp();
            let mut h = ha.scaled(ev);
            outer_add(&mut h, ev, &g, &g);
            (ev, g.into_iter().map(|d| ev * d).collect(), h)
        }
        Expr::Log(a) => {
            let (v, g, ha) = second_order(a, x)?;
            if v <= 0.0 {
                return Err(ExprError::Domain {
                    atom: "log",
                    value: v,
                });
            }
            let mut h = ha.scaled(1.0 / v);
            outer_add(&mut h, -1.0 / (v * v), &g, &g);
            (v.ln(), g.into_iter().map(|d| d / v).collect(), h)
        }
        Expr::Pow(a, p) => {
            let (v, g, ha) = second_order(a, x)?;
            let val = pow_checked(v, *p)?;
            if *p == 0.0 {
                return Ok((val, vec![0.0; n], Matrix::zeros(n, n)));
            }
            if v == 0.0 && *p < 2.0 && *p != 1.0 {
                return Err(ExprError::NonDifferentiable(format!(
                    "pow with exponent {p} at zero base"
                )));
            }
            let d1 = p * pow_checked(v, p - 1.0)?;
            let d2 = if *p == 1.0 {
                0.0
            } else {
                p * (p - 1.0) * pow_checked(v, p - 2.0)?
            };
            let mut h = ha.scaled(d1);
            outer_add(&mut h, d2, &g, &g);
            (val, g.into_iter().map(|gi| d1 * gi).collect(), h)
        }
        Expr::Monomial {
            exponents, vars, ..
        } => {
            let (v, g) = first_order(e, x)?;
            let xv = gather(vars, x)?;
            let mut h = Matrix::zeros(n, n);
            for (p, i) in vars.iter().enumerate() {
                for (q2, j) in vars.iter().enumerate() {
                    let mut t = v * exponents[p] * exponents[q2] / (xv[p] * xv[q2]);
                    if p == q2 {
                        t -= v * exponents[p] / (xv[p] * xv[p]);
                    }
                    h[(*i, *j)] += t;
                }
            }
            (v, g, h)
        }
    })
}

pub(super) fn analytic_hessian(e: &Expr, x: &[f64]) -> Result<Matrix, ExprError> {
    second_order(e, x).map(|(_, _, h)| h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn affine_gradient() {
        let e = Expr::dot(vec![1.0, 2.0], vec![0, 1]);
        assert_eq!(
            e.gradient(&[7.0, -3.0], GradientMode::Analytic).unwrap(),
            vec![1.0, 2.0]
        );
    }

    #[test]
    fn quadratic_gradient_is_qx() {
        let q = Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let e = Expr::quad(q, vec![0, 1]);
        assert_eq!(
            e.gradient(&[1.0, 1.0], GradientMode::Analytic).unwrap(),
            vec![2.0, 2.0]
        );
    }

    // Oracle: central difference with h = 1e-5 gives (3, 2) for x1*x2 at (2, 3).
    #[test]
    fn bilinear_monomial_gradient() {
        let e = Expr::monomial(1.0, vec![1.0, 1.0], vec![0, 1]).unwrap();
        let fd = e
            .gradient(&[2.0, 3.0], GradientMode::FiniteDifference { step: 1e-5 })
            .unwrap();
        assert!(close(&fd, &[3.0, 2.0], 1e-8));
        let an = e.gradient(&[2.0, 3.0], GradientMode::Analytic).unwrap();
        assert!(close(&an, &[3.0, 2.0], 1e-12));
    }

    #[test]
    fn norm_kink_is_reported() {
        let e = Expr::norm2(Matrix::identity(2), vec![0.0, 0.0], vec![0, 1]);
        assert!(matches!(
            e.gradient(&[0.0, 0.0], GradientMode::Analytic),
            Err(ExprError::NonDifferentiable(_))
        ));
        // a constant norm has a zero gradient everywhere
        let c = Expr::norm2(Matrix::zeros(2, 2), vec![0.0, 0.0], vec![0, 1]);
        assert_eq!(
            c.gradient(&[0.0, 0.0], GradientMode::Analytic).unwrap(),
            vec![0.0, 0.0]
        );
    }

    #[test]
    fn hessians_match_finite_differences_of_gradient() {
        let exprs = vec![
            Expr::exp(Expr::dot(vec![1.0, -2.0], vec![0, 1])),
            Expr::log(Expr::add(Expr::var(0), Expr::Const(3.0))),
            Expr::norm2(
                Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0], vec![3.0, -1.0]]).unwrap(),
                vec![0.5, -1.0, 2.0],
                vec![0, 1],
            ),
            Expr::pow(Expr::add(Expr::var(1), Expr::Const(2.0)), 3.5),
            Expr::monomial(2.0, vec![1.5, -0.5], vec![0, 1]).unwrap(),
        ];
        let x = [0.7, 1.3];
        for e in exprs {
            let h = e.hessian(&x).unwrap();
            for j in 0..2 {
                let mut up = x;
                let mut dn = x;
                up[j] += 1e-6;
                dn[j] -= 1e-6;
                let gu = e.gradient(&up, GradientMode::Analytic).unwrap();
                let gd = e.gradient(&dn, GradientMode::Analytic).unwrap();
                for i in 0..2 {
                    let fd = (gu[i] - gd[i]) / 2e-6;
                    assert!(
                        (fd - h[(i, j)]).abs() < 1e-5 * (1.0 + fd.abs()),
                        "{e:?} H[{i},{j}]"
                    );
                }
            }
        }
    }
}
