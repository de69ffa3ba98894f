//! Checks candidate solutions: stationarity, Lagrange/KKT conditions,
//! δ-ball local optimality, envelope sensitivity and sublinearity.
//!
//! Every check reports evidence. A consistent local-optimality or
//! sublinearity verdict means no counterexample was sampled, not a proof.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::linear_data;
use crate::expr::{Expr, ExprError, GradientMode};
use crate::linalg::{self, psd_check, PsdVerdict};
use crate::problem::{canonical_sense, Problem, ProblemError, Sense};
use crate::solver::{solve_newton, solve_simplex, Solution, SolverConfig, Status};

/// Threshold for "at least one multiplier is strictly positive".
pub const POSITIVE_MULTIPLIER: f64 = 1e-12;
/// Minimum improvement for a δ-ball sample to refute local optimality.
pub const IMPROVEMENT: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertError {
    #[error("expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("unknown parameter {0}")]
    UnknownParameter(String),
    #[error("solver failed at {parameter} = {value}: {detail}")]
    SolverFailure {
        parameter: String,
        value: f64,
        detail: String,
    },
    #[error("invalid input: {0}")]
    BadInput(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "verdict", content = "failed_clause")]
pub enum KktVerdict {
    Accept,
    Reject(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub stationarity_residual: f64,
    pub multiplier_signs_ok: bool,
    pub complementary_slackness_residual: f64,
    pub lambda0: f64,
    /// Largest constraint violation at the point; informational only.
    pub primal_violation: f64,
    pub verdict: KktVerdict,
}

impl KktReport {
    pub fn accepted(&self) -> bool {
        self.verdict == KktVerdict::Accept
    }
}

fn check_len(expected: usize, got: usize) -> Result<(), CertError> {
    if expected != got {
        return Err(CertError::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// `‖∇f(x)‖∞ ≤ tol` for the minimize-sense objective. Necessary for a local
/// extremum, never sufficient.
pub fn check_stationarity(p: &Problem, x: &[f64], tol: f64) -> Result<bool, CertError> {
    check_len(p.dim(), x.len())?;
    let g = p.objective.gradient(x, GradientMode::Analytic)?;
    Ok(linalg::norm_inf(&g) <= tol)
}

/// Lagrange conditions at `x` for multipliers over the problem's
/// inequality rows (equalities count as two rows).
///
/// `lambda0` defaults to 1. When a strictly feasible point is known (the
/// supplied one, `x` itself, or a problem without rows) `λ₀` must be
/// positive and the multipliers are rescaled so that `λ₀ = 1`.
pub fn check_kkt(
    p: &Problem,
    x: &[f64],
    lambdas: &[f64],
    lambda0: Option<f64>,
    strictly_feasible: Option<&[f64]>,
    tol: f64,
) -> Result<KktReport, CertError> {
    let canon = canonical_sense(p);
    check_len(canon.dim(), x.len())?;
    let rows = canon.inequality_rows()?;
    check_len(rows.len(), lambdas.len())?;
    let g_at = |z: &[f64]| -> Result<Vec<f64>, CertError> {
        rows.iter()
            .map(|r| r.g.eval(z).map_err(CertError::from))
            .collect()
    };
    let gx = g_at(x)?;
    let strict = |z: &[f64]| g_at(z).map(|g| g.iter().all(|v| *v < 0.0)).unwrap_or(false);
    let slater = rows.is_empty()
        || strict(x)
        || strictly_feasible.is_some_and(|z| z.len() == x.len() && strict(z));

    let mut l0 = lambda0.unwrap_or(1.0);
    let mut lam = lambdas.to_vec();
    let mut forced_zero = false;
    if slater {
        if l0 > 0.0 {
            lam.iter_mut().for_each(|v| *v /= l0);
            l0 = 1.0;
        } else {
            forced_zero = true;
        }
    }

    let mut grad = canon
        .objective
        .gradient(x, GradientMode::Analytic)?
        .into_iter()
        .map(|v| l0 * v)
        .collect::<Vec<_>>();
    for (r, l) in rows.iter().zip(&lam) {
        if *l == 0.0 {
            continue;
        }
        let gi = r.g.gradient(x, GradientMode::Analytic)?;
        for (a, b) in grad.iter_mut().zip(gi) {
            *a += l * b;
        }
    }
    let stationarity = linalg::norm_inf(&grad);
    let signs_ok = !forced_zero
        && l0 >= -tol
        && lam.iter().all(|v| *v >= -tol)
        && (l0 > POSITIVE_MULTIPLIER || lam.iter().any(|v| *v > POSITIVE_MULTIPLIER));
    let slackness = lam
        .iter()
        .zip(&gx)
        .map(|(l, g)| (l * g).abs())
        .fold(0.0, f64::max);
    let verdict = if stationarity > tol {
        KktVerdict::Reject("(a) stationarity".into())
    } else if !signs_ok {
        KktVerdict::Reject("(b) multiplier signs".into())
    } else if slackness > tol {
        KktVerdict::Reject("(c) complementary slackness".into())
    } else {
        KktVerdict::Accept
    };
    Ok(KktReport {
        stationarity_residual: stationarity,
        multiplier_signs_ok: signs_ok,
        complementary_slackness_residual: slackness,
        lambda0: l0,
        primal_violation: canon.max_violation(x),
        verdict,
    })
}

/// KKT check of a solver's optimal solution using its own multipliers.
pub fn check_solution(p: &Problem, s: &Solution, tol: f64) -> Result<Option<KktReport>, CertError> {
    match (&s.status, &s.point, &s.multipliers) {
        (Status::Optimal, Some(x), Some(m)) => check_kkt(p, x, m, None, None, tol).map(Some),
        _ => Ok(None),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "verdict")]
pub enum LocalVerdict {
    Consistent { samples: usize },
    Refuted { witness: Vec<f64>, improvement: f64 },
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Quasi-random points of the δ-ball around `x`: axis points first, then a
/// seeded shifted Halton sequence restricted to the ball.
fn ball_points(x: &[f64], delta: f64, samples: usize, seed: u64) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let mut pts = Vec::with_capacity(samples);
    'axes: for frac in [1.0, 0.5, 0.25] {
        for j in 0..n {
            for sign in [-1.0, 1.0] {
                if pts.len() >= samples {
                    break 'axes;
                }
                let mut p = x.to_vec();
                p[j] += sign * frac * delta;
                pts.push(p);
            }
        }
    }
    let mut i = 1u64;
    while pts.len() < samples && i < 64 * samples as u64 + 64 {
        let v: Vec<f64> = (0..n)
            .map(|k| {
                let u = (radical_inverse(i, PRIMES[k % PRIMES.len()]) + shift[k]).fract();
                2.0 * u - 1.0
            })
            .collect();
        i += 1;
        if linalg::norm2(&v) <= 1.0 {
            pts.push(x.iter().zip(&v).map(|(a, b)| a + delta * b).collect());
        }
    }
    pts
}

/// Samples the δ-ball around `x`; refutes when a feasible sample improves
/// the minimize-sense objective by more than [`IMPROVEMENT`]. The witness
/// is the best improving sample.
pub fn check_local_optimum(
    p: &Problem,
    x: &[f64],
    delta: f64,
    samples: usize,
    seed: u64,
) -> Result<LocalVerdict, CertError> {
    if !(delta > 0.0) || samples == 0 {
        return Err(CertError::BadInput(
            "delta must be > 0 and samples ≥ 1".into(),
        ));
    }
    let canon = canonical_sense(p);
    check_len(canon.dim(), x.len())?;
    let fx = canon.objective.eval(x)?;
    let mut best: Option<(f64, Vec<f64>)> = None;
    for z in ball_points(x, delta, samples, seed) {
        if canon.max_violation(&z) > 1e-9 {
            continue;
        }
        let Ok(fz) = canon.objective.eval(&z) else {
            continue;
        };
        if fz < fx - IMPROVEMENT && best.as_ref().is_none_or(|(b, _)| fz < *b) {
            best = Some((fz, z));
        }
    }
    Ok(match best {
        Some((fz, witness)) => LocalVerdict::Refuted {
            witness,
            improvement: fx - fz,
        },
        None => LocalVerdict::Consistent { samples },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub parameter: String,
    pub r0: f64,
    pub h: f64,
    /// Central difference of the optimal value.
    pub lhs: f64,
    /// Central difference of the Lagrangian in the parameter at fixed
    /// `(x*, λ)` from the `r0` solve.
    pub rhs: f64,
    pub discrepancy: f64,
}

fn solve_at(p: &Problem, cfg: &SolverConfig) -> Result<Solution, String> {
    let s = if linear_data(p).is_some() {
        solve_simplex(p, cfg)
    } else {
        solve_newton(p, cfg, None)
    }
    .map_err(|e| e.to_string())?;
    if s.status == Status::Optimal {
        Ok(s)
    } else {
        Err(format!("status {:?}", s.status))
    }
}

fn lagrangian(p: &Problem, x: &[f64], lambdas: &[f64]) -> Result<f64, CertError> {
    let canon = canonical_sense(p);
    let rows = canon.inequality_rows()?;
    check_len(rows.len(), lambdas.len())?;
    let mut l = canon.objective.eval(x)?;
    for (r, lam) in rows.iter().zip(lambdas) {
        l += lam * r.g.eval(x)?;
    }
    Ok(l)
}

/// Envelope check: derivative of the optimal value in parameter `name`
/// against the parameter derivative of the Lagrangian at the optimum.
pub fn envelope_sensitivity(
    p: &Problem,
    name: &str,
    r0: f64,
    h: f64,
    cfg: &SolverConfig,
) -> Result<SensitivityReport, CertError> {
    if !p.parameters.contains_key(name) {
        return Err(CertError::UnknownParameter(name.to_string()));
    }
    if !(h > 0.0) {
        return Err(CertError::BadInput("h must be > 0".into()));
    }
    let at = |r: f64| p.with_parameter(name, r);
    let solve = |r: f64| {
        solve_at(&at(r), cfg).map_err(|detail| CertError::SolverFailure {
            parameter: name.to_string(),
            value: r,
            detail,
        })
    };
    let lo = solve(r0 - h)?;
    let mid = solve(r0)?;
    let hi = solve(r0 + h)?;
    let value = |s: &Solution| s.value.unwrap_or(f64::NAN);
    let lhs = (value(&hi) - value(&lo)) / (2.0 * h);
    let x = mid.point.clone().unwrap_or_default();
    let lam = mid.multipliers.clone().unwrap_or_default();
    let sign = if p.reported_sense == Sense::Maximize {
        -1.0
    } else {
        1.0
    };
    let rhs = sign * (lagrangian(&at(r0 + h), &x, &lam)? - lagrangian(&at(r0 - h), &x, &lam)?)
        / (2.0 * h);
    Ok(SensitivityReport {
        parameter: name.to_string(),
        r0,
        h,
        lhs,
        rhs,
        discrepancy: (lhs - rhs).abs(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "verdict")]
pub enum SublinearVerdict {
    Consistent {
        samples: usize,
    },
    Counterexample {
        property: String,
        x: Vec<f64>,
        y: Option<Vec<f64>>,
        gamma: Option<f64>,
        lhs: f64,
        rhs: f64,
    },
}

/// Tests `f(γx) = γf(x)` for γ ∈ {0.5, 1, 2, 3} and `f(x+y) ≤ f(x)+f(y)` on
/// seeded random pairs in `[-2, 2]ⁿ`.
pub fn check_sublinear(
    f: &Expr,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<SublinearVerdict, CertError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()));
    for _ in 0..samples {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let fx = f.eval(&x)?;
        for gamma in [0.5, 1.0, 2.0, 3.0] {
            let gx: Vec<f64> = x.iter().map(|v| gamma * v).collect();
            let lhs = f.eval(&gx)?;
            if !close(lhs, gamma * fx) {
                return Ok(SublinearVerdict::Counterexample {
                    property: "homogeneity".into(),
                    x,
                    y: None,
                    gamma: Some(gamma),
                    lhs,
                    rhs: gamma * fx,
                });
            }
        }
        let s: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        let lhs = f.eval(&s)?;
        let rhs = fx + f.eval(&y)?;
        if lhs > rhs + 1e-9 * (1.0 + rhs.abs()) {
            return Ok(SublinearVerdict::Counterexample {
                property: "subadditivity".into(),
                x,
                y: Some(y),
                gamma: None,
                lhs,
                rhs,
            });
        }
    }
    Ok(SublinearVerdict::Consistent { samples })
}

/// Hessian PSD test of the minimize-sense objective at `x`, for
/// unconstrained problems.
pub fn hessian_psd_at(p: &Problem, x: &[f64]) -> Result<PsdVerdict, CertError> {
    let canon = canonical_sense(p);
    check_len(canon.dim(), x.len())?;
    let h = canon.objective.hessian(x)?;
    psd_check(&h, crate::linalg::default_psd_tol(&h))
        .map_err(|e| CertError::BadInput(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::problem::{Constraint, Domain, VarKind, VariableSpec};

    fn scalar() -> Vec<VariableSpec> {
        vec![VariableSpec::new("x", VarKind::Scalar, Domain::Free)]
    }

    fn square() -> Expr {
        Expr::pow(Expr::var(0), 2.0)
    }

    #[test]
    fn stationarity_is_necessary_only() {
        let p = Problem::new(Sense::Minimize, square(), scalar());
        assert!(check_stationarity(&p, &[0.0], 1e-9).unwrap());
        assert!(!check_stationarity(&p, &[0.1], 1e-6).unwrap());
        let cubic = Problem::new(Sense::Minimize, Expr::pow(Expr::var(0), 3.0), scalar());
        assert!(check_stationarity(&cubic, &[0.0], 1e-9).unwrap());
    }

    fn bounded_square() -> Problem {
        Problem::new(Sense::Minimize, square(), scalar()).with_constraints(vec![Constraint::le(
            Expr::sub(Expr::Const(1.0), Expr::var(0)),
            Expr::Const(0.0),
        )])
    }

    #[test]
    fn kkt_accepts_and_rejects() {
        let p = bounded_square();
        let ok = check_kkt(&p, &[1.0], &[2.0], Some(1.0), None, 1e-9).unwrap();
        assert!(ok.accepted(), "{ok:?}");
        let off = check_kkt(&p, &[1.1], &[2.0], Some(1.0), None, 1e-9).unwrap();
        assert!(!off.accepted());
        assert!((off.complementary_slackness_residual - 0.2).abs() < 1e-12);
        assert!(matches!(
            check_kkt(&p, &[1.0], &[], None, None, 1e-9),
            Err(CertError::DimensionMismatch {
                expected: 1,
                got: 0
            })
        ));
    }

    #[test]
    fn kkt_unconstrained_is_stationarity() {
        let p = Problem::new(Sense::Minimize, square(), scalar());
        assert!(check_kkt(&p, &[0.0], &[], None, None, 1e-9)
            .unwrap()
            .accepted());
        let r = check_kkt(&p, &[0.5], &[], None, None, 1e-9).unwrap();
        assert_eq!(r.verdict, KktVerdict::Reject("(a) stationarity".into()));
        let zero = check_kkt(&p, &[0.0], &[], Some(0.0), None, 1e-9).unwrap();
        assert!(!zero.accepted());
    }

    #[test]
    fn local_optimum_sampling() {
        let p = Problem::new(Sense::Minimize, square(), scalar());
        assert!(matches!(
            check_local_optimum(&p, &[0.0], 0.5, 1000, 0x5EED).unwrap(),
            LocalVerdict::Consistent { .. }
        ));
        match check_local_optimum(&p, &[0.5], 0.5, 1000, 0x5EED).unwrap() {
            LocalVerdict::Refuted { witness, .. } => {
                assert!(witness[0].abs() < 0.01, "{witness:?}")
            }
            v => panic!("{v:?}"),
        }
        let w = Problem::new(
            Sense::Minimize,
            Expr::sub(Expr::pow(Expr::var(0), 4.0), square()),
            scalar(),
        );
        assert!(matches!(
            check_local_optimum(&w, &[0.0], 1.0, 100, 0x5EED).unwrap(),
            LocalVerdict::Refuted { .. }
        ));
    }

    #[test]
    fn envelope_of_concave_quadratic() {
        let mut p = Problem::new(
            Sense::Maximize,
            Expr::add(Expr::neg(square()), product_rx()),
            scalar(),
        );
        p.parameters.insert("r".into(), 2.0);
        let rep = envelope_sensitivity(&p, "r", 2.0, 1e-3, &SolverConfig::default()).unwrap();
        assert!((rep.lhs - 1.0).abs() < 1e-4, "{rep:?}");
        assert!((rep.rhs - 1.0).abs() < 1e-6, "{rep:?}");
        assert!(rep.discrepancy <= 1e-4);
    }

    /// `r·x` as `((r + x)² − r² − x²)/2`, since the atom set has no product.
    fn product_rx() -> Expr {
        let r = Expr::param("r", 2.0);
        Expr::scale(
            0.5,
            Expr::sum(vec![
                Expr::pow(Expr::add(r.clone(), Expr::var(0)), 2.0),
                Expr::neg(Expr::pow(r, 2.0)),
                Expr::neg(square()),
            ]),
        )
    }

    #[test]
    fn sublinearity() {
        let norm = Expr::norm2(Matrix::identity(2), vec![0.0, 0.0], vec![0, 1]);
        assert!(matches!(
            check_sublinear(&norm, 2, 100, 1).unwrap(),
            SublinearVerdict::Consistent { .. }
        ));
        let lin = Expr::dot(vec![1.0, -2.0], vec![0, 1]);
        assert!(matches!(
            check_sublinear(&lin, 2, 100, 1).unwrap(),
            SublinearVerdict::Consistent { .. }
        ));
        match check_sublinear(&square(), 1, 100, 1).unwrap() {
            SublinearVerdict::Counterexample { property, .. } => {
                assert_eq!(property, "homogeneity")
            }
            v => panic!("{v:?}"),
        }
    }
}
