//! Command-line front end: `classify`, `transform`, `solve`, `certify`.
//!
//! Exit codes: 0 success (whatever the solver status), 2 parse error,
//! 3 validation error, 4 inapplicable rule or method, 5 numerical or I/O
//! failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::certificate::{
    check_kkt, check_local_optimum, check_solution, check_stationarity, envelope_sensitivity,
    CertError,
};
use crate::classify::classify_with_seed;
use crate::problem::{parse_problem, serialize_problem, ParseError, Problem};
use crate::report::{digest, CertificateBlock, ClassificationBlock, Report, TransformBlock};
use crate::solver::{
    solve_barrier, solve_grid, solve_newton, solve_simplex, GridSpec, Method, Solution, SolveError,
    SolverConfig, Status,
};
use crate::transform::{
    eq_to_ineq_pair, gp_log_transform, lp_dual, phase1_slack, socp_to_lp, to_convex_min,
    TransformChain, TransformError,
};

/// Environment variable overriding the sampling seed.
pub const SEED_VAR: &str = "OPT_ONTOLOGY_SEED";
/// Tolerance of the KKT certificate attached to solver output.
pub const KKT_TOL: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(
    name = "optontology",
    version,
    about = "Classify, transform, solve and certify optimization problems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Emit the report as JSON.
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Most specific class and its justification chain.
    Classify { file: PathBuf },
    /// Rewrite the problem and write the result to `-o`.
    Transform {
        file: PathBuf,
        #[arg(long, value_enum)]
        rule: RuleArg,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
    /// Solve with one method and certify the result.
    Solve(SolveArgs),
    /// Check a candidate point, multipliers or parameter sensitivity.
    Certify(CertifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    Dual,
    Eq2ineq,
    GpLog,
    Socp2lp,
    Phase1,
    ToConvex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Simplex,
    Newton,
    Barrier,
    Grid,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub file: PathBuf,
    #[arg(long, value_enum)]
    pub method: MethodArg,
    /// `lo,hi` for every coordinate, or `lo,hi;lo,hi;…` per coordinate.
    #[arg(long)]
    pub grid_box: Option<String>,
    /// Grid step.
    #[arg(long, default_value_t = 0.01)]
    pub grid_res: f64,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("what").required(true).multiple(true).args(["point", "param"])))]
pub struct CertifyArgs {
    pub file: PathBuf,
    /// Comma-separated coordinates of the candidate point.
    #[arg(long, allow_hyphen_values = true)]
    pub point: Option<String>,
    /// Comma-separated multipliers, one per inequality row.
    #[arg(long, allow_hyphen_values = true)]
    pub multipliers: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda0: Option<f64>,
    /// Radius of the local-optimality ball.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Parameter for the envelope check.
    #[arg(long)]
    pub param: Option<String>,
    #[arg(long, default_value_t = 1e-4)]
    pub h: f64,
}

/// Failure with its exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        let code = if matches!(e, ParseError::Invalid(_)) {
            3
        } else {
            2
        };
        CliError::new(code, e.to_string())
    }
}

impl From<TransformError> for CliError {
    fn from(e: TransformError) -> Self {
        CliError::new(4, e.to_string())
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        match &e {
            SolveError::Inapplicable { hint: Some(h), .. } => {
                CliError::new(4, format!("{e} (try `transform --rule {h}`)"))
            }
            SolveError::Inapplicable { .. } | SolveError::NoInterior(_) => {
                CliError::new(4, e.to_string())
            }
            SolveError::EmptyGrid | SolveError::Numeric(_) => CliError::new(5, e.to_string()),
        }
    }
}

impl From<CertError> for CliError {
    fn from(e: CertError) -> Self {
        let code = match e {
            CertError::DimensionMismatch { .. }
            | CertError::UnknownParameter(_)
            | CertError::BadInput(_) => 4,
            _ => 5,
        };
        CliError::new(code, e.to_string())
    }
}

/// Seed from [`SEED_VAR`], decimal or `0x` hexadecimal.
pub fn parse_seed(raw: Option<&str>) -> Result<u64, CliError> {
    let Some(raw) = raw.map(str::trim) else {
        return Ok(SolverConfig::default().seed);
    };
    let parsed = match raw.strip_prefix("0x").or_else(|| raw.strip_prefix("0X")) {
        Some(h) => u64::from_str_radix(h, 16),
        None => raw.parse(),
    };
    parsed.map_err(|_| CliError::new(2, format!("{SEED_VAR} must be an integer, got {raw:?}")))
}

fn numbers(raw: &str, what: &str) -> Result<Vec<f64>, CliError> {
    if raw.trim().is_empty() {
        return Ok(Vec::new());
    }
    raw.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::new(2, format!("{what}: {t:?} is not a number")))
        })
        .collect()
}

fn grid_spec(raw: &str, n: usize, step: f64) -> Result<GridSpec, CliError> {
    let pair = |s: &str| -> Result<(f64, f64), CliError> {
        match numbers(s, "--grid-box")?.as_slice() {
            [lo, hi] => Ok((*lo, *hi)),
            _ => Err(CliError::new(
                2,
                format!("--grid-box interval {s:?} must be lo,hi"),
            )),
        }
    };
    let parts: Vec<&str> = raw.split(';').collect();
    let bounds = if parts.len() == 1 {
        vec![pair(parts[0])?; n]
    } else {
        parts.into_iter().map(pair).collect::<Result<_, _>>()?
    };
    Ok(GridSpec { bounds, step })
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::new(5, format!("cannot read {}: {e}", path.display())))
}

fn load(text: &str) -> Result<Problem, CliError> {
    Ok(parse_problem(text)?)
}

fn classification(p: &Problem, seed: u64) -> ClassificationBlock {
    ClassificationBlock::from(&classify_with_seed(p, seed))
}

fn rule_chain(p: &Problem, rule: RuleArg) -> Result<TransformChain, CliError> {
    let single = |step| TransformChain {
        source: p.clone(),
        steps: vec![step],
    };
    Ok(match rule {
        RuleArg::Dual => single(lp_dual(p)?),
        RuleArg::Eq2ineq => single(eq_to_ineq_pair(p)),
        RuleArg::GpLog => single(gp_log_transform(p)?),
        RuleArg::Socp2lp => single(socp_to_lp(p)?),
        RuleArg::Phase1 => single(phase1_slack(p)?),
        RuleArg::ToConvex => to_convex_min(p),
    })
}

fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

/// Runs one parsed command; the report is rendered by the caller.
pub fn run(cli: &Cli, seed: u64) -> Result<Report, CliError> {
    match &cli.command {
        Command::Classify { file } => {
            let text = read(file)?;
            let p = load(&text)?;
            let mut r = Report::new(text.as_bytes(), "classify".into());
            r.classification = Some(classification(&p, seed));
            Ok(r)
        }
        Command::Transform { file, rule, output } => {
            let text = read(file)?;
            let p = load(&text)?;
            let rule_name = rule
                .to_possible_value()
                .map(|v| v.get_name().to_string())
                .unwrap_or_default();
            let chain = rule_chain(&p, *rule)?;
            let out = serialize_problem(chain.result());
            std::fs::write(output, &out)
                .map_err(|e| CliError::new(5, format!("cannot write {}: {e}", output.display())))?;
            let mut r = Report::new(text.as_bytes(), format!("transform --rule {rule_name}"));
            r.classification = Some(classification(chain.result(), seed));
            r.transform_chain = Some(TransformBlock {
                steps: chain.entries(),
                output_digest: digest(out.as_bytes()),
            });
            Ok(r)
        }
        Command::Solve(args) => solve(args, seed),
        Command::Certify(args) => certify(args, seed),
    }
}

fn solve(args: &SolveArgs, seed: u64) -> Result<Report, CliError> {
    let text = read(&args.file)?;
    let p = load(&text)?;
    let mut cfg = SolverConfig {
        seed,
        ..SolverConfig::default()
    };
    let mut command = format!(
        "solve --method {}",
        args.method
            .to_possible_value()
            .map(|v| v.get_name().to_string())
            .unwrap_or_default()
    );
    if let Some(t) = args.tol {
        cfg.simplex_tol = t;
        cfg.newton_grad_tol = t;
        cfg.barrier_gap = t;
        cfg.grid_feas_tol = t;
        command.push_str(&format!(" --tol {}", fmt_f64(t)));
    }
    if let Some(m) = args.max_iter {
        cfg.max_iter = m;
        command.push_str(&format!(" --max-iter {m}"));
    }
    let solution = match args.method {
        MethodArg::Simplex => solve_simplex(&p, &cfg)?,
        MethodArg::Newton => solve_newton(&p, &cfg, None)?,
        MethodArg::Barrier => solve_barrier(&p, &cfg)?,
        MethodArg::Grid => {
            let raw = args
                .grid_box
                .as_deref()
                .ok_or_else(|| CliError::new(4, "grid needs --grid-box"))?;
            command.push_str(&format!(
                " --grid-box {raw} --grid-res {}",
                fmt_f64(args.grid_res)
            ));
            let spec = grid_spec(raw, p.dim(), args.grid_res)?;
            match solve_grid(&p, &spec, &cfg) {
                Err(SolveError::EmptyGrid) => Solution {
                    status: Status::Infeasible,
                    point: None,
                    value: None,
                    multipliers: None,
                    iterations: 0,
                    method: Method::Grid,
                },
                other => other?,
            }
        }
    };
    let mut r = Report::new(text.as_bytes(), command);
    r.classification = Some(classification(&p, seed));
    if let Some(kkt) = check_solution(&p, &solution, KKT_TOL)? {
        r.certificate = Some(CertificateBlock {
            kkt: Some(kkt),
            ..Default::default()
        });
    }
    r.solution = Some(solution);
    Ok(r)
}

fn certify(args: &CertifyArgs, seed: u64) -> Result<Report, CliError> {
    let text = read(&args.file)?;
    let p = load(&text)?;
    let mut command = String::from("certify");
    let mut block = CertificateBlock::default();
    if let Some(raw) = &args.point {
        let x = numbers(raw, "--point")?;
        command.push_str(&format!(" --point {raw}"));
        if p.constraints.is_empty() {
            block.stationarity = Some(check_stationarity(&p, &x, KKT_TOL)?);
        }
        if args.multipliers.is_some() || p.constraints.is_empty() {
            let lambdas = numbers(args.multipliers.as_deref().unwrap_or(""), "--multipliers")?;
            if let Some(m) = &args.multipliers {
                command.push_str(&format!(" --multipliers {m}"));
            }
            if let Some(l0) = args.lambda0 {
                command.push_str(&format!(" --lambda0 {}", fmt_f64(l0)));
            }
            block.kkt = Some(check_kkt(&p, &x, &lambdas, args.lambda0, None, KKT_TOL)?);
        }
        if let Some(delta) = args.delta {
            command.push_str(&format!(
                " --delta {} --samples {}",
                fmt_f64(delta),
                args.samples
            ));
            block.local_optimum = Some(check_local_optimum(&p, &x, delta, args.samples, seed)?);
        }
    }
    if let Some(name) = &args.param {
        command.push_str(&format!(" --param {name} --h {}", fmt_f64(args.h)));
        let r0 = *p
            .parameters
            .get(name)
            .ok_or_else(|| CertError::UnknownParameter(name.clone()))?;
        let cfg = SolverConfig {
            seed,
            ..SolverConfig::default()
        };
        block.sensitivity = Some(envelope_sensitivity(&p, name, r0, args.h, &cfg)?);
    }
    if block == CertificateBlock::default() {
        return Err(CliError::new(
            4,
            "nothing to check: pass --multipliers, --delta or --param",
        ));
    }
    let mut r = Report::new(text.as_bytes(), command);
    r.certificate = Some(block);
    Ok(r)
}

/// What a run printed and how it exited.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parses `args` (program name first), runs, and renders.
pub fn execute<I, T>(args: I, seed_var: Option<&str>) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            return if code == 0 {
                Outcome {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            } else {
                Outcome {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            };
        }
    };
    let result = parse_seed(seed_var).and_then(|seed| run(&cli, seed));
    match result {
        Ok(r) => Outcome {
            code: 0,
            stdout: if cli.json { r.to_json() } else { r.to_text() },
            stderr: String::new(),
        },
        Err(e) => Outcome {
            code: e.code,
            stdout: String::new(),
            stderr: format!("error: {}\n", e.message),
        },
    }
}

/// Entry point for the binary.
pub fn main() -> i32 {
    let seed = std::env::var(SEED_VAR).ok();
    let out = execute(std::env::args_os(), seed.as_deref());
    print!("{}", out.stdout);
    eprint!("{}", out.stderr);
    out.code
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds() {
        assert_eq!(parse_seed(None).unwrap(), 0x5EED);
        assert_eq!(parse_seed(Some("0x10")).unwrap(), 16);
        assert_eq!(parse_seed(Some("42")).unwrap(), 42);
        assert_eq!(parse_seed(Some("x")).unwrap_err().code, 2);
    }

    #[test]
    fn grid_box_forms() {
        let g = grid_spec("-1,2", 2, 0.5).unwrap();
        assert_eq!(g.bounds, vec![(-1.0, 2.0); 2]);
        let g = grid_spec("0,1;2,3", 2, 0.5).unwrap();
        assert_eq!(g.bounds, vec![(0.0, 1.0), (2.0, 3.0)]);
        assert!(grid_spec("1", 1, 0.5).is_err());
    }

    #[test]
    fn missing_file_is_io_failure() {
        let out = execute(["optontology", "classify", "/nonexistent/p.json"], None);
        assert_eq!(out.code, 5);
    }
}
