//! Acceptance suite: one PASS/FAIL line per criterion.

mod common;

use std::process::Command;
use std::time::Instant;

use common::{
    chord_excess, domain_sample, lp_oracle, min_objective, random_lp, scalar_rows, LpOracle, CORPUS,
};
use opt_ontology::certificate::{check_kkt, check_solution, envelope_sensitivity};
use opt_ontology::classify::{classify, ProblemClass};
use opt_ontology::expr::Expr;
use opt_ontology::linalg::Matrix;
use opt_ontology::problem::{Constraint, Domain, Problem, Sense, VarKind, VariableSpec};
use opt_ontology::solver::{
    solve_barrier, solve_grid, solve_newton, solve_simplex, GridSpec, Solution, SolverConfig,
    Status,
};
use opt_ontology::transform::{gp_log_transform, lp_dual, socp_to_lp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

/// Optimal solutions and convex-labelled problems gathered across suites.
#[derive(Default)]
struct Collected {
    solutions: Vec<(Problem, Solution)>,
    convex: Vec<Problem>,
}

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

fn rng(tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0xACCE_0000 + tag)
}

fn c1_corpus(col: &mut Collected) -> Outcome {
    let mut hits = 0;
    let mut misses = Vec::new();
    for (stem, class, chain) in CORPUS {
        let p = common::load(stem);
        let c = classify(&p);
        let got: Vec<(String, String)> = c
            .chain
            .iter()
            .map(|l| (l.node.clone(), l.justification.clone()))
            .collect();
        let want: Vec<(String, String)> = chain
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        if c.class.to_string() == class && got == want {
            hits += 1;
        } else {
            misses.push(format!("{stem}: {}", c.summary()));
        }
        if c.is_convex() {
            col.convex.push(if c.class == ProblemClass::GP {
                gp_log_transform(&p).unwrap().transformed
            } else {
                p
            });
        }
    }
    Outcome {
        pass: hits == CORPUS.len(),
        detail: format!("{hits}/{} exact {}", CORPUS.len(), misses.join("; ")),
    }
}

const PYTHAGOREAN: [[f64; 2]; 5] = [[3.0, 4.0], [0.0, 2.0], [6.0, 8.0], [5.0, 12.0], [1.0, 0.0]];

fn random_reducible_socp(r: &mut ChaCha8Rng) -> Problem {
    let n = r.gen_range(1..=3);
    let coords: Vec<usize> = (0..n).collect();
    let mut constraints = Vec::new();
    for j in 0..n {
        constraints.push(Constraint::le(Expr::var(j), Expr::Const(4.0)));
        constraints.push(Constraint::ge(Expr::var(j), Expr::Const(-4.0)));
    }
    let x0: Vec<f64> = (0..n).map(|_| r.gen_range(-4..=4) as f64).collect();
    for _ in 0..r.gen_range(1..=2) {
        let b = PYTHAGOREAN[r.gen_range(0..PYTHAGOREAN.len())];
        let norm_b = (b[0] * b[0] + b[1] * b[1]).sqrt();
        let mut c = vec![0.0; n];
        for _ in 0..r.gen_range(1..=2) {
            c[r.gen_range(0..n)] = if r.gen_bool(0.5) { 1.0 } else { -1.0 };
        }
        let cx0: f64 = c.iter().zip(&x0).map(|(a, b)| a * b).sum();
        let d = norm_b - cx0 + r.gen_range(0..=2) as f64;
        constraints.push(Constraint::second_order(
            Expr::norm2(Matrix::zeros(2, n), b.to_vec(), coords.clone()),
            Expr::add(Expr::dot(c, coords.clone()), Expr::Const(d)),
        ));
    }
    let obj: Vec<f64> = (0..n).map(|_| r.gen_range(-3..=3) as f64).collect();
    let sense = if r.gen_bool(0.5) {
        Sense::Minimize
    } else {
        Sense::Maximize
    };
    Problem::new(
        sense,
        Expr::dot(obj, coords),
        vec![VariableSpec::new("x", VarKind::Vector(n), Domain::Free)],
    )
    .with_constraints(constraints)
}

fn c2_socp(col: &mut Collected) -> Outcome {
    let mut r = rng(2);
    let mut ok = 0;
    let mut notes = Vec::new();
    for i in 0..20 {
        let p = random_reducible_socp(&mut r);
        let class = classify(&p);
        if !class.is_reducible_socp() {
            notes.push(format!("#{i} classified {}", class.summary()));
            continue;
        }
        col.convex.push(p.clone());
        let lp = socp_to_lp(&p).unwrap().transformed;
        let direct = solve_grid(&p, &GridSpec::uniform(p.dim(), -6.0, 6.0, 0.5), &cfg());
        let reduced = solve_simplex(&lp, &cfg());
        match (direct, reduced) {
            (Ok(g), Ok(s)) if s.is_optimal() => {
                let (gv, sv) = (g.value.unwrap(), s.value.unwrap());
                if (gv - sv).abs() <= 1e-6 {
                    ok += 1;
                } else {
                    notes.push(format!("#{i} grid {gv} vs simplex {sv}"));
                }
                col.convex.push(lp.clone());
                col.solutions.push((lp, s));
            }
            (g, s) => notes.push(format!("#{i} grid {g:?} simplex {s:?}")),
        }
    }
    Outcome {
        pass: ok == 20,
        detail: format!("{ok}/20 {}", notes.join("; ")),
    }
}

fn c3_duality(col: &mut Collected) -> Outcome {
    let mut r = rng(3);
    let mut ok = 0;
    let mut pairs = 0;
    let mut notes = Vec::new();
    for i in 0..30 {
        let n = r.gen_range(1..=3);
        let m = r.gen_range(1..=4);
        let a: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..n).map(|_| r.gen_range(0.5..3.0)).collect())
            .collect();
        let b: Vec<f64> = (0..m).map(|_| r.gen_range(1.0..10.0)).collect();
        let c: Vec<f64> = (0..n).map(|_| r.gen_range(0.5..5.0)).collect();
        let coords: Vec<usize> = (0..n).collect();
        let primal = Problem::new(
            Sense::Maximize,
            Expr::dot(c.clone(), coords.clone()),
            vec![VariableSpec::new(
                "x",
                VarKind::Vector(n),
                Domain::Nonnegative,
            )],
        )
        .with_constraints(
            a.iter()
                .zip(&b)
                .map(|(row, bi)| {
                    Constraint::le(Expr::dot(row.clone(), coords.clone()), Expr::Const(*bi))
                })
                .collect(),
        );
        let dual = lp_dual(&primal).unwrap().transformed;
        let ps = solve_simplex(&primal, &cfg()).unwrap();
        let ds = solve_simplex(&dual, &cfg()).unwrap();
        let mut good = ps.is_optimal() && ds.is_optimal();
        if good {
            let gap = (ps.value.unwrap() - ds.value.unwrap()).abs();
            if gap > 1e-6 {
                good = false;
                notes.push(format!("#{i} gap {gap}"));
            }
        } else {
            notes.push(format!("#{i} statuses {:?}/{:?}", ps.status, ds.status));
        }
        for _ in 0..20 {
            let u: Vec<f64> = (0..n).map(|_| r.gen_range(0.0..1.0)).collect();
            let reach = a
                .iter()
                .zip(&b)
                .map(|(row, bi)| {
                    bi / row
                        .iter()
                        .zip(&u)
                        .map(|(p, q)| p * q)
                        .sum::<f64>()
                        .max(1e-12)
                })
                .fold(f64::INFINITY, f64::min);
            let t = r.gen_range(0.0..1.0) * reach;
            let x: Vec<f64> = u.iter().map(|v| v * t).collect();
            let mut y: Vec<f64> = (0..m).map(|_| r.gen_range(0.0..2.0) + 1e-3).collect();
            let scale = (0..n)
                .map(|j| c[j] / (0..m).map(|k| a[k][j] * y[k]).sum::<f64>())
                .fold(1.0, f64::max);
            y.iter_mut().for_each(|v| *v *= scale);
            assert!(primal.is_feasible(&x, 1e-9) && dual.is_feasible(&y, 1e-9));
            let cx: f64 = c.iter().zip(&x).map(|(p, q)| p * q).sum();
            let by: f64 = b.iter().zip(&y).map(|(p, q)| p * q).sum();
            pairs += 1;
            if cx > by + 1e-9 {
                good = false;
                notes.push(format!("#{i} weak duality {cx} > {by}"));
            }
        }
        if good {
            ok += 1;
        }
        col.convex.push(primal.clone());
        col.convex.push(dual.clone());
        col.solutions.push((primal, ps));
        col.solutions.push((dual, ds));
    }
    Outcome {
        pass: ok == 30,
        detail: format!("{ok}/30 ({pairs} feasible pairs) {}", notes.join("; ")),
    }
}

fn c4_gp(col: &mut Collected) -> Outcome {
    let mut r = rng(4);
    let mut ok = 0;
    let mut notes = Vec::new();
    for i in 0..10 {
        let mut terms = vec![
            Expr::monomial(r.gen_range(0.5..2.0), vec![-1.0, 0.0], vec![0, 1]).unwrap(),
            Expr::monomial(r.gen_range(0.5..2.0), vec![0.0, -1.0], vec![0, 1]).unwrap(),
            Expr::monomial(r.gen_range(0.5..2.0), vec![1.0, 1.0], vec![0, 1]).unwrap(),
        ];
        if r.gen_bool(0.5) {
            let e = vec![r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)];
            terms.push(Expr::monomial(r.gen_range(0.1..1.0), e, vec![0, 1]).unwrap());
        }
        let p = Problem::new(
            Sense::Minimize,
            Expr::sum(terms),
            vec![VariableSpec::new(
                "x",
                VarKind::Vector(2),
                Domain::StrictlyPositive,
            )],
        );
        if classify(&p).class != ProblemClass::GP {
            notes.push(format!("#{i} not GP"));
            continue;
        }
        let t = gp_log_transform(&p).unwrap();
        let newton = solve_newton(&t.transformed, &cfg(), None).unwrap();
        let grid = solve_grid(&p, &GridSpec::uniform(2, 0.1, 10.0, 0.01), &cfg()).unwrap();
        let x = t.backward.apply(newton.point.as_ref().unwrap()).unwrap();
        let back = p.objective.eval(&x).unwrap();
        let gv = grid.value.unwrap();
        if newton.is_optimal() && (back - gv).abs() <= 1e-3 {
            ok += 1;
        } else {
            notes.push(format!("#{i} {:?} newton {back} grid {gv}", newton.status));
        }
        col.convex.push(t.transformed.clone());
        col.solutions.push((t.transformed, newton));
    }
    Outcome {
        pass: ok == 10,
        detail: format!("{ok}/10 {}", notes.join("; ")),
    }
}

fn c5_solvers(col: &mut Collected) -> Outcome {
    let mut r = rng(5);
    let mut ok = 0;
    let mut barrier_ok = 0;
    let mut barrier_total = 0;
    let mut mix = [0usize; 3];
    let mut notes = Vec::new();
    for i in 0..50 {
        let lp = random_lp(&mut r);
        let oracle = lp_oracle(&lp.c_min, &lp.rows);
        let s = solve_simplex(&lp.problem, &cfg()).unwrap();
        let sign = if lp.problem.sense == Sense::Maximize {
            -1.0
        } else {
            1.0
        };
        let agree = match (&oracle, s.status) {
            (LpOracle::Optimal { value, .. }, Status::Optimal) => {
                mix[0] += 1;
                (sign * value - s.value.unwrap()).abs() <= 1e-6 * (1.0 + value.abs())
            }
            (LpOracle::Unbounded, Status::Unbounded) => {
                mix[1] += 1;
                true
            }
            (LpOracle::Infeasible, Status::Infeasible) => {
                mix[2] += 1;
                true
            }
            _ => false,
        };
        if agree {
            ok += 1;
        } else {
            notes.push(format!(
                "#{i} oracle {oracle:?} simplex {:?} {:?}",
                s.status, s.value
            ));
        }
        col.convex.push(lp.problem.clone());
        if lp.strictly_feasible && matches!(oracle, LpOracle::Optimal { .. }) && s.is_optimal() {
            barrier_total += 1;
            match solve_barrier(&lp.problem, &cfg()) {
                Ok(b) if b.is_optimal() && (b.value.unwrap() - s.value.unwrap()).abs() <= 1e-6 => {
                    barrier_ok += 1;
                    col.solutions.push((lp.problem.clone(), b));
                }
                other => notes.push(format!("#{i} barrier {other:?} vs {:?}", s.value)),
            }
        }
        if s.is_optimal() {
            col.solutions.push((lp.problem, s));
        }
    }
    Outcome {
        pass: ok == 50 && barrier_ok == barrier_total,
        detail: format!(
            "simplex {ok}/50 (optimal {}, unbounded {}, infeasible {}), barrier {barrier_ok}/{barrier_total} {}",
            mix[0],
            mix[1],
            mix[2],
            notes.join("; ")
        ),
    }
}

fn c6_closure(col: &Collected) -> Outcome {
    let mut accepted = 0;
    let mut notes = Vec::new();
    for (k, (p, s)) in col.solutions.iter().enumerate() {
        match check_solution(p, s, 1e-6) {
            Ok(Some(rep)) if rep.accepted() => accepted += 1,
            other => notes.push(format!("#{k} {:?}: {other:?}", s.method)),
        }
    }
    let mut r = rng(6);
    let mut rejected = 0;
    let mut perturbed = 0;
    for (p, s) in col
        .solutions
        .iter()
        .filter(|(_, s)| {
            s.multipliers
                .as_ref()
                .is_some_and(|m| m.iter().any(|v| *v > 1e-6))
        })
        .take(10)
    {
        let x = s.point.as_ref().unwrap();
        let d: Vec<f64> = x.iter().map(|_| r.gen_range(-1.0..1.0)).collect();
        let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        let moved: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + 0.1 * b / norm).collect();
        perturbed += 1;
        match check_kkt(p, &moved, s.multipliers.as_ref().unwrap(), None, None, 1e-6) {
            Ok(rep) if !rep.accepted() => rejected += 1,
            other => notes.push(format!("perturbed point accepted: {other:?}")),
        }
    }
    let total = col.solutions.len();
    Outcome {
        pass: accepted == total && total > 0 && rejected == 10,
        detail: format!(
            "{accepted}/{total} optimal solutions accepted, {rejected}/{perturbed} perturbations rejected {}",
            notes.join("; ")
        ),
    }
}

fn random_spd(r: &mut ChaCha8Rng, n: usize) -> Matrix {
    let m: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| r.gen_range(-1.0..1.0)).collect())
        .collect();
    let mut q = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            q[(i, j)] =
                (0..n).map(|k| m[k][i] * m[k][j]).sum::<f64>() + if i == j { 0.5 } else { 0.0 };
        }
    }
    q
}

fn c7_envelope() -> Outcome {
    let mut r = rng(7);
    let mut ok = 0;
    let mut total = 0;
    let mut notes = Vec::new();
    for i in 0..10 {
        let n = r.gen_range(2..=3);
        let coords: Vec<usize> = (0..n).collect();
        let c: Vec<f64> = (0..n).map(|_| r.gen_range(-2.0..2.0)).collect();
        let k = r.gen_range(0..n);
        let w = r.gen_range(0.5..2.0);
        let objective = Expr::sum(vec![
            Expr::quad(random_spd(&mut r, n), coords.clone()),
            Expr::dot(c, coords.clone()),
            Expr::scale(
                w,
                Expr::pow(Expr::sub(Expr::var(k), Expr::param("r", 0.0)), 2.0),
            ),
        ]);
        let mut p = Problem::new(
            Sense::Minimize,
            objective,
            vec![VariableSpec::new("x", VarKind::Vector(n), Domain::Free)],
        );
        if i % 2 == 0 {
            let a: Vec<f64> = (0..n).map(|_| r.gen_range(0.5..2.0)).collect();
            let kappa = r.gen_range(-1.0..1.0);
            p = p.with_constraints(vec![Constraint::eq(
                Expr::dot(a, coords),
                Expr::add(
                    Expr::Const(r.gen_range(-1.0..1.0)),
                    Expr::scale(kappa, Expr::param("r", 0.0)),
                ),
            )]);
        }
        p.parameters.insert("r".into(), 0.0);
        for r0 in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            total += 1;
            match envelope_sensitivity(&p, "r", r0, 1e-4, &cfg()) {
                Ok(rep) if rep.discrepancy <= f64::max(1e-4, 1e-3 * rep.lhs.abs()) => ok += 1,
                other => notes.push(format!("#{i} r={r0}: {other:?}")),
            }
        }
    }
    Outcome {
        pass: ok == 50,
        detail: format!("{ok}/{total} {}", notes.join("; ")),
    }
}

fn c8_multistart() -> Outcome {
    let mut r = rng(8);
    let mut ok = 0;
    let mut notes = Vec::new();
    for i in 0..10 {
        let n = r.gen_range(2..=3);
        let coords: Vec<usize> = (0..n).collect();
        let c: Vec<f64> = (0..n).map(|_| r.gen_range(-3.0..3.0)).collect();
        let mut p = Problem::new(
            Sense::Minimize,
            Expr::add(
                Expr::quad(random_spd(&mut r, n), coords.clone()),
                Expr::dot(c, coords.clone()),
            ),
            vec![VariableSpec::new("x", VarKind::Vector(n), Domain::Free)],
        );
        if i % 2 == 1 {
            let a: Vec<f64> = (0..n).map(|_| r.gen_range(-2.0..2.0)).collect();
            p = p.with_constraints(vec![Constraint::eq(
                Expr::dot(a, coords),
                Expr::Const(r.gen_range(-1.0..1.0)),
            )]);
        }
        let ends: Vec<Vec<f64>> = (0..20)
            .filter_map(|_| {
                let start: Vec<f64> = (0..n).map(|_| r.gen_range(-10.0..10.0)).collect();
                solve_newton(&p, &cfg(), Some(&start))
                    .ok()
                    .and_then(|s| s.point)
            })
            .collect();
        let spread = ends
            .iter()
            .flat_map(|a| {
                ends.iter().map(move |b| {
                    a.iter()
                        .zip(b)
                        .map(|(p, q)| (p - q).abs())
                        .fold(0.0, f64::max)
                })
            })
            .fold(0.0, f64::max);
        if ends.len() == 20 && spread <= 1e-6 {
            ok += 1;
        } else {
            notes.push(format!("#{i} {} endpoints, spread {spread:e}", ends.len()));
        }
    }
    Outcome {
        pass: ok == 10,
        detail: format!("{ok}/10 {}", notes.join("; ")),
    }
}

fn c9_chords(col: &Collected) -> Outcome {
    let mut r = rng(9);
    let mut checked = 0;
    let mut violations = Vec::new();
    for (k, p) in col.convex.iter().enumerate() {
        let domains = p.coordinate_domains();
        let mut exprs = vec![min_objective(p)];
        exprs.extend(scalar_rows(p));
        for e in exprs {
            let worst = {
                let mut sampler_rng = ChaCha8Rng::seed_from_u64(r.gen());
                let theta_rng = std::cell::RefCell::new(ChaCha8Rng::seed_from_u64(r.gen()));
                chord_excess(
                    |x| e.eval(x).ok(),
                    || domain_sample(&domains, &mut sampler_rng),
                    200,
                    |_| theta_rng.borrow_mut().gen_range(0.0..1.0),
                )
            };
            checked += 1;
            if worst > 1e-9 {
                violations.push(format!("problem {k}: excess {worst:e}"));
            }
        }
    }
    Outcome {
        pass: violations.is_empty() && checked > 0,
        detail: format!(
            "{} violations over {checked} expressions × 200 chords {}",
            violations.len(),
            violations.join("; ")
        ),
    }
}

fn cli_suite(dir: &std::path::Path) -> Vec<String> {
    let bin = env!("CARGO_BIN_EXE_optontology");
    let path = |stem: &str| common::problem_path(stem).to_string_lossy().into_owned();
    let mut runs: Vec<Vec<String>> = Vec::new();
    for (stem, _, _) in CORPUS {
        runs.push(vec!["classify".into(), path(stem)]);
        runs.push(vec!["classify".into(), path(stem), "--json".into()]);
    }
    let out = |name: &str| dir.join(name).to_string_lossy().into_owned();
    let strs = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    runs.push(strs(&[
        "solve",
        &path("standard_lp"),
        "--method",
        "simplex",
        "--json",
    ]));
    runs.push(strs(&[
        "solve",
        &path("standard_lp"),
        "--method",
        "barrier",
    ]));
    runs.push(strs(&[
        "solve",
        &path("unbounded_lp"),
        "--method",
        "simplex",
    ]));
    runs.push(strs(&["solve", &path("convex_qp"), "--method", "newton"]));
    runs.push(strs(&[
        "solve",
        &path("parabola"),
        "--method",
        "grid",
        "--grid-box=-1,2",
        "--grid-res",
        "0.001",
    ]));
    runs.push(strs(&[
        "transform",
        &path("reducible_socp"),
        "--rule",
        "socp2lp",
        "-o",
        &out("lp.json"),
    ]));
    runs.push(strs(&[
        "transform",
        &path("symmetric_lp"),
        "--rule",
        "dual",
        "-o",
        &out("dual.json"),
    ]));
    runs.push(strs(&[
        "transform",
        &path("gp"),
        "--rule",
        "gp-log",
        "-o",
        &out("gp.json"),
        "--json",
    ]));
    runs.push(strs(&[
        "transform",
        &path("convex_qp"),
        "--rule",
        "gp-log",
        "-o",
        &out("no.json"),
    ]));
    runs.push(strs(&[
        "certify",
        &path("bounded_square"),
        "--point",
        "1",
        "--multipliers",
        "2",
    ]));
    runs.push(strs(&[
        "certify",
        &path("double_well"),
        "--point",
        "0",
        "--delta",
        "1",
        "--json",
    ]));
    runs.push(strs(&["certify", &path("parametric_qp"), "--param", "r"]));
    runs.push(strs(&["classify", &path("malformed")]));
    runs.iter()
        .map(|args| {
            let o = Command::new(bin)
                .args(args)
                .env_remove("OPT_ONTOLOGY_SEED")
                .output()
                .unwrap();
            let written = args
                .iter()
                .position(|a| a == "-o")
                .and_then(|i| std::fs::read_to_string(&args[i + 1]).ok())
                .unwrap_or_default();
            format!(
                "{}\n{}\n{}\n{}",
                o.status.code().unwrap_or(-1),
                String::from_utf8_lossy(&o.stdout),
                String::from_utf8_lossy(&o.stderr),
                written
            )
        })
        .collect()
}

fn c10_determinism() -> Outcome {
    let first_dir = tempfile::tempdir().unwrap();
    let first = cli_suite(first_dir.path());
    let second = cli_suite(first_dir.path());
    let differing = first.iter().zip(&second).filter(|(a, b)| a != b).count();
    Outcome {
        pass: differing == 0 && first.len() == second.len(),
        detail: format!("{} invocations, {differing} differ", first.len()),
    }
}

fn main() {
    let started = Instant::now();
    let mut col = Collected::default();
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let mut run = |name: &'static str, f: &mut dyn FnMut(&mut Collected) -> Outcome| {
        let t = Instant::now();
        let mut o = f(&mut col);
        o.detail = format!(
            "{} [{:.1}s]",
            o.detail.trim_end(),
            t.elapsed().as_secs_f64()
        );
        let line = format!(
            "{} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        println!("{line}");
        results.push((name, o));
    };
    run("C1 classification corpus", &mut c1_corpus);
    run("C2 SOCP reduction equivalence", &mut c2_socp);
    run("C3 LP duality", &mut c3_duality);
    run("C4 GP log transform", &mut c4_gp);
    run("C5 solver cross-check", &mut c5_solvers);
    run("C6 certificate closure", &mut |c| c6_closure(c));
    run("C7 envelope suite", &mut |_| c7_envelope());
    run("C8 Lemma 6 multistart", &mut |_| c8_multistart());
    run("C9 curvature soundness", &mut |c| c9_chords(c));
    run("C10 CLI determinism", &mut |_| c10_determinism());
    let failed = results.iter().filter(|(_, o)| !o.pass).count();
    println!(
        "{} of {} criteria passed in {:.1}s",
        results.len() - failed,
        results.len(),
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
