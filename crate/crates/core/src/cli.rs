//! Command-line front end.
//!
//! Every subcommand emits one homogeneous list of rows, as CSV with a header
//! or as a JSON array. Failures print a single line
//! `error[<kind>]: <message>` on the error stream, with exit status 1 for an
//! invalid configuration, 2 for a failed computation and 3 for a
//! verification mismatch.

use std::ffi::OsString;
use std::fs::File;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use num_traits::Signed;
use serde::Serialize;

use crate::asympt::{self, AsymptError, AsymptoticReport};
use crate::config::{self, ConfigError};
use crate::scalar::Scalar;
use crate::selfsim::{self, jump_measure, z_counts, zeta, SelfSimilarParams};
use crate::spectra::{self, Branch, SpectraError, Want};
use crate::theory::{self, BlockPartition, RenormalizationVerdict, TheoryError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID_CONFIG: i32 = 1;
pub const EXIT_COMPUTATION: i32 = 2;
pub const EXIT_MISMATCH: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "selfsim-spectra", version, about = "Spectra of strings with self-similar atomic weights")]
struct Cli {
    #[command(flatten)]
    opts: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct GlobalOpts {
    /// Parameter file (keys n, a, m, d, beta)
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Truncation level, or `auto` to deepen until converged
    #[arg(long, global = true, default_value = "auto", value_parser = parse_level)]
    level: Level,
    /// Relative tolerance
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,
    /// Number of positive eigenvalues
    #[arg(long, global = true)]
    positive: Option<usize>,
    /// Number of negative eigenvalues
    #[arg(long, global = true)]
    negative: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output file instead of standard output
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Auto,
    Fixed(usize),
}

fn parse_level(s: &str) -> Result<Level, String> {
    if s == "auto" {
        return Ok(Level::Auto);
    }
    match s.parse::<usize>() {
        Ok(r) if (1..=spectra::MAX_LEVEL).contains(&r) => Ok(Level::Fixed(r)),
        _ => Err(format!("expected `auto` or an integer in 1..={}", spectra::MAX_LEVEL)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the parameters and print derived quantities
    Validate,
    /// Sample the step function P
    Eval {
        /// Comma separated abscissae (default: midpoints of a uniform grid)
        #[arg(long, value_delimiter = ',')]
        x: Vec<f64>,
        #[arg(long, default_value_t = 10)]
        samples: usize,
    },
    /// Dump the atoms of the truncated weight
    Measure,
    /// Eigenvalues with error bounds
    Eigs,
    /// Counting functions on a logarithmic grid
    Counting {
        #[arg(long, default_value_t = 0.0)]
        t_min: f64,
        #[arg(long, default_value_t = 10.0)]
        t_max: f64,
        #[arg(long, default_value_t = 21)]
        points: usize,
    },
    /// Asymptotic constants of one or both branches
    Mu {
        #[arg(long, value_enum)]
        branch: Option<BranchArg>,
        #[arg(long, default_value_t = 4)]
        periods: usize,
    },
    /// Run the finite-dimensional identity checks
    Verify {
        /// Points per sign of λ for the exact identities
        #[arg(long, default_value_t = 50)]
        points: usize,
        /// Moduli e^t at which the renormalization is sampled
        #[arg(long, value_delimiter = ',', default_value = "50,300,1800")]
        moduli: Vec<f64>,
    },
    /// Reproduce a reference table
    Table {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=3))]
        id: u8,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BranchArg {
    Positive,
    Negative,
}

impl From<BranchArg> for Branch {
    fn from(b: BranchArg) -> Self {
        match b {
            BranchArg::Positive => Branch::Positive,
            BranchArg::Negative => Branch::Negative,
        }
    }
}

/// Parsed parameters together with the command options.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: SelfSimilarParams<BigRational>,
    pub level: Level,
    pub tol: f64,
    pub want: Want,
    pub format: Format,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    fn float_params(&self) -> SelfSimilarParams<f64> {
        self.params.convert(Scalar::to_f64)
    }
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Computation(String),
    Mismatch(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_INVALID_CONFIG,
            Failure::Computation(_) => EXIT_COMPUTATION,
            Failure::Mismatch(_) => EXIT_MISMATCH,
        }
    }

    fn line(&self) -> String {
        let (kind, msg) = match self {
            Failure::Config(m) => ("invalid-config", m),
            Failure::Computation(m) => ("computation", m),
            Failure::Mismatch(m) => ("mismatch", m),
        };
        format!("error[{kind}]: {}", msg.replace('\n', " "))
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<SpectraError> for Failure {
    fn from(e: SpectraError) -> Self {
        Failure::Computation(e.to_string())
    }
}

impl From<AsymptError> for Failure {
    fn from(e: AsymptError) -> Self {
        Failure::Computation(e.to_string())
    }
}

impl From<TheoryError> for Failure {
    fn from(e: TheoryError) -> Self {
        Failure::Computation(e.to_string())
    }
}

impl From<selfsim::EvalError> for Failure {
    fn from(e: selfsim::EvalError) -> Self {
        Failure::Computation(e.to_string())
    }
}

/// Run the command line `args` (including the program name) and return the
/// exit status.
pub fn run<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    EXIT_OK
                }
                _ => {
                    let first = e.to_string();
                    let first = first.lines().next().unwrap_or("").trim_start_matches("error: ");
                    let _ = writeln!(stderr, "{}", Failure::Config(first.to_string()).line());
                    EXIT_INVALID_CONFIG
                }
            };
        }
    };
    match dispatch(cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "{}", f.line());
            f.code()
        }
    }
}

fn dispatch(cli: Cli, stdout: &mut dyn Write) -> Result<(), Failure> {
    let opts = cli.opts;
    if let Command::Table { id } = cli.command {
        let report = asympt::reproduce_table(id)?;
        emit(&opts.format, opts.out.as_ref(), &report.rows, stdout)?;
        if !report.all_ok() {
            let bad = report.rows.iter().filter(|r| !(r.lambda_ok && r.ratio_ok)).count();
            return Err(Failure::Mismatch(format!(
                "table {id}: {bad} cells outside tolerance, mu disagreement {:?}",
                report.mu_disagreement
            )));
        }
        return Ok(());
    }

    let path = opts.config.as_ref().ok_or_else(|| Failure::Config("--config is required".into()))?;
    let params = config::load(path)?;
    if !(opts.tol > 0.0 && opts.tol < 1.0) {
        return Err(Failure::Config(format!("--tol must lie in (0, 1), got {}", opts.tol)));
    }
    let cfg = RunConfig {
        params,
        level: opts.level,
        tol: opts.tol,
        want: Want { positive: opts.positive.unwrap_or(0), negative: opts.negative.unwrap_or(0) },
        format: opts.format,
        out: opts.out.clone(),
    };
    let out = cfg.out.as_ref();
    match cli.command {
        Command::Validate => emit(&cfg.format, out, &validate_rows(&cfg), stdout),
        Command::Eval { x, samples } => emit(&cfg.format, out, &eval_rows(&cfg, x, samples)?, stdout),
        Command::Measure => emit(&cfg.format, out, &measure_rows(&cfg), stdout),
        Command::Eigs => emit(&cfg.format, out, &eig_rows(&cfg)?, stdout),
        Command::Counting { t_min, t_max, points } => {
            emit(&cfg.format, out, &counting_rows(&cfg, t_min, t_max, points)?, stdout)
        }
        Command::Mu { branch, periods } => emit(&cfg.format, out, &mu_rows(&cfg, branch, periods)?, stdout),
        Command::Verify { points, moduli } => {
            let rows = verify_rows(&cfg, points, &moduli)?;
            emit(&cfg.format, out, &rows, stdout)?;
            let failed: Vec<&str> = rows.iter().filter(|r| r.status == "fail").map(|r| r.check).collect();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(Failure::Mismatch(format!("failed checks: {}", failed.join(","))))
            }
        }
        Command::Table { .. } => unreachable!(),
    }
}

fn emit<R: Serialize>(
    format: &Format,
    path: Option<&PathBuf>,
    rows: &[R],
    stdout: &mut dyn Write,
) -> Result<(), Failure> {
    let bytes = match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r).map_err(|e| Failure::Computation(e.to_string()))?;
            }
            w.into_inner().map_err(|e| Failure::Computation(e.to_string()))?
        }
        Format::Json => {
            let mut v = serde_json::to_vec_pretty(rows).map_err(|e| Failure::Computation(e.to_string()))?;
            v.push(b'\n');
            v
        }
    };
    let io = |e: std::io::Error| Failure::Computation(format!("cannot write output: {e}"));
    match path {
        Some(p) => File::create(p).and_then(|mut f| f.write_all(&bytes)).map_err(io),
        None => stdout.write_all(&bytes).map_err(io),
    }
}

/// Nearest `f64` and its exact distance to `v`.
fn rounded(v: &BigRational) -> (f64, f64) {
    let f = Scalar::to_f64(v);
    let diff = v.clone() - <BigRational as Scalar>::from_f64(f);
    (f, Scalar::to_f64(&Signed::abs(&diff)))
}

#[derive(Debug, Serialize)]
struct QuantityRow {
    quantity: String,
    value: String,
    /// Absolute error of the decimal rendering of `value`.
    error: f64,
}

fn validate_rows(cfg: &RunConfig) -> Vec<QuantityRow> {
    let p = &cfg.params;
    let exact = |quantity: String, v: &BigRational| {
        let (value, error) = rounded(v);
        QuantityRow { quantity, value: value.to_string(), error }
    };
    let count = |quantity: &str, v: usize| QuantityRow { quantity: quantity.into(), value: v.to_string(), error: 0.0 };
    let mut rows = vec![count("n", p.n()), count("m", p.m())];
    rows.push(exact("d".into(), p.d()));
    rows.push(exact("a_m*d_m".into(), &p.scale_factor()));
    let bp = selfsim::breakpoints(p);
    rows.push(exact("x_star".into(), &bp.x_star));
    for (k, z) in zeta(p).iter().enumerate() {
        rows.push(exact(format!("zeta_{}", k + 1), z));
    }
    let zc = z_counts(p);
    rows.push(count("z_plus", zc.plus));
    rows.push(count("z_minus", zc.minus));
    rows.push(count("nondegenerate", zc.is_nondegenerate(p.n()) as usize));
    rows
}

#[derive(Debug, Serialize)]
struct EvalRow {
    x: f64,
    p: f64,
    error: f64,
}

fn eval_rows(cfg: &RunConfig, xs: Vec<f64>, samples: usize) -> Result<Vec<EvalRow>, Failure> {
    let xs = if xs.is_empty() { (0..samples).map(|i| (i as f64 + 0.5) / samples as f64).collect() } else { xs };
    let p = cfg.float_params();
    xs.into_iter()
        .map(|x| {
            let v = selfsim::eval_p(&p, &x, &cfg.tol)?;
            Ok(EvalRow { x, p: v, error: cfg.tol })
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct AtomRow {
    level: usize,
    index: usize,
    position: f64,
    mass: f64,
    /// Rounding error of `position` and `mass` (exact values are rational).
    position_err: f64,
    mass_err: f64,
}

/// Default depth of `measure` and fixed-level commands under `--level auto`.
const DEFAULT_MEASURE_LEVEL: usize = 4;

fn measure_rows(cfg: &RunConfig) -> Vec<AtomRow> {
    let level = match cfg.level {
        Level::Auto => DEFAULT_MEASURE_LEVEL,
        Level::Fixed(r) => r,
    };
    jump_measure(&cfg.params, level)
        .atoms
        .iter()
        .map(|a| {
            let (position, position_err) = rounded(&a.position);
            let (mass, mass_err) = rounded(&a.mass);
            AtomRow { level: a.level, index: a.index, position, mass, position_err, mass_err }
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct EigRow {
    branch: Branch,
    l: Option<usize>,
    k: Option<usize>,
    index: i64,
    lambda: f64,
    rel_err: f64,
    ratio: Option<f64>,
    truncation_level: usize,
}

/// Eigenvalue count when neither `--positive` nor `--negative` is given.
const DEFAULT_EIGS: usize = 8;

fn eig_rows(cfg: &RunConfig) -> Result<Vec<EigRow>, Failure> {
    let p = cfg.float_params();
    let mut want = cfg.want;
    if want.positive == 0 && want.negative == 0 {
        for b in [Branch::Positive, Branch::Negative] {
            if spectra::branch_possible(&p, b) {
                match b {
                    Branch::Positive => want.positive = DEFAULT_EIGS,
                    Branch::Negative => want.negative = DEFAULT_EIGS,
                }
            }
        }
    }
    let seq = match cfg.level {
        Level::Auto => spectra::converge_in_level(&p, want, cfg.tol, 2)?,
        Level::Fixed(r) => fixed_level_eigs(&p, want, cfg.tol, r)?,
    };
    let mut rows = Vec::new();
    for branch in [Branch::Positive, Branch::Negative] {
        let layout = asympt::case_layout(&p, branch).ok();
        for (j, e) in seq.branch(branch).iter().enumerate() {
            let pos = j + 1;
            let (l, k, ratio) = match &layout {
                Some(lay) if pos > lay.index_offset => {
                    let rel = pos - lay.index_offset - 1;
                    let (l, k) = (rel % lay.period + 1, rel / lay.period);
                    (Some(l), Some(k), Some(e.value.abs() * lay.scale(k)))
                }
                _ => (None, None, None),
            };
            rows.push(EigRow {
                branch,
                l,
                k,
                index: if branch == Branch::Positive { pos as i64 } else { -(pos as i64) },
                lambda: e.value,
                rel_err: e.rel_err,
                ratio,
                truncation_level: seq.truncation_level,
            });
        }
    }
    Ok(rows)
}

/// Eigenvalues at level `r`; the error bound includes the change from level
/// `r − 2` whenever that level resolves the same eigenvalues.
fn fixed_level_eigs(
    p: &SelfSimilarParams<f64>,
    want: Want,
    tol: f64,
    r: usize,
) -> Result<spectra::EigenSequence<f64>, Failure> {
    let sys = spectra::assemble(&jump_measure(p, r))?;
    let mut seq = spectra::eigenvalues(&sys, want, tol)?;
    if *p.d() != 0.0 && r > 2 {
        let coarse = spectra::assemble(&jump_measure(p, r - 2)).and_then(|s| spectra::eigenvalues(&s, want, tol));
        if let Ok(c) = coarse {
            for (fine, coarse) in
                seq.positive.iter_mut().zip(&c.positive).chain(seq.negative.iter_mut().zip(&c.negative))
            {
                let change = ((fine.value - coarse.value) / fine.value).abs();
                fine.rel_err = fine.rel_err.max(change);
            }
        }
    }
    Ok(seq)
}

#[derive(Debug, Serialize)]
struct CountingRow {
    t: f64,
    modulus: f64,
    s_positive: usize,
    s_negative: usize,
    truncation_level: usize,
}

fn counting_rows(cfg: &RunConfig, t_min: f64, t_max: f64, points: usize) -> Result<Vec<CountingRow>, Failure> {
    if points == 0 || t_min.is_nan() || t_max.is_nan() || t_max < t_min {
        return Err(Failure::Config("counting grid needs points >= 1 and t_max >= t_min".into()));
    }
    let p = cfg.float_params();
    let ts: Vec<f64> = (0..points)
        .map(|i| if points == 1 { t_min } else { t_min + (t_max - t_min) * i as f64 / (points - 1) as f64 })
        .collect();
    let moduli: Vec<f64> = ts.iter().map(|t| t.exp()).collect();
    let system = match cfg.level {
        Level::Fixed(r) => spectra::assemble(&jump_measure(&p, r))?,
        Level::Auto if *p.d() == 0.0 => spectra::assemble(&jump_measure(&p, 1))?,
        Level::Auto => {
            // deepen until both branches are stable at every grid point
            let pos = theory::stable_system(&p, Branch::Positive, &moduli)?;
            let neg = theory::stable_system(&p, Branch::Negative, &moduli)?;
            if pos.truncation_level() >= neg.truncation_level() {
                pos
            } else {
                neg
            }
        }
    };
    Ok(ts
        .iter()
        .zip(&moduli)
        .map(|(&t, &modulus)| CountingRow {
            t,
            modulus,
            s_positive: spectra::counting(&system, &modulus),
            s_negative: spectra::counting(&system, &-modulus),
            truncation_level: system.truncation_level(),
        })
        .collect())
}

#[derive(Debug, Serialize)]
struct MuRow {
    branch: Branch,
    case: &'static str,
    period: usize,
    l: usize,
    mu: f64,
    error: f64,
    converged: bool,
    periods_used: usize,
    truncation_level: usize,
}

fn mu_rows(cfg: &RunConfig, branch: Option<BranchArg>, periods: usize) -> Result<Vec<MuRow>, Failure> {
    let p = cfg.float_params();
    let branches: Vec<Branch> = match branch {
        Some(b) => vec![b.into()],
        None => {
            [Branch::Positive, Branch::Negative].into_iter().filter(|&b| asympt::case_layout(&p, b).is_ok()).collect()
        }
    };
    if branches.is_empty() {
        // surface the reason from the positive branch
        asympt::case_layout(&p, Branch::Positive)?;
    }
    let mut rows = Vec::new();
    for b in branches {
        let report: AsymptoticReport<f64> = asympt::mu_report(&p, b, periods, cfg.tol)?;
        let used = report.ratios.first().map_or(0, |r| r.len());
        for m in &report.mu {
            rows.push(MuRow {
                branch: b,
                case: report.layout.case.as_str(),
                period: report.layout.period,
                l: m.l,
                mu: m.mu,
                error: m.error,
                converged: m.converged,
                periods_used: used,
                truncation_level: report.truncation_level,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Serialize)]
struct CheckRow {
    check: &'static str,
    detail: String,
    passed: usize,
    total: usize,
    status: &'static str,
}

fn check(check: &'static str, detail: String, passed: usize, total: usize) -> CheckRow {
    let status = if total == 0 {
        "skip"
    } else if passed == total {
        "pass"
    } else {
        "fail"
    };
    CheckRow { check, detail, passed, total, status }
}

/// Default truncation level of the exact identity checks.
const DEFAULT_VERIFY_LEVEL: usize = 8;

/// `±(round(1.35^j) + 1/3)`, `j = 0..points`: exact, spread over six decades.
pub fn lambda_grid(points: usize) -> Vec<BigRational> {
    let third = BigRational::new(1.into(), 3.into());
    (0..points)
        .flat_map(|j| {
            let base = BigRational::from_integer((1.35f64.powi(j as i32).round() as i64).into()) + third.clone();
            [base.clone(), -base]
        })
        .collect()
}

fn verify_rows(cfg: &RunConfig, points: usize, moduli: &[f64]) -> Result<Vec<CheckRow>, Failure> {
    let exact = &cfg.params;
    let p = cfg.float_params();
    let level = match cfg.level {
        Level::Auto => DEFAULT_VERIFY_LEVEL,
        Level::Fixed(r) => r.max(2),
    };
    let grid = lambda_grid(points);
    let nondegenerate = z_counts(exact).is_nondegenerate(exact.n());
    let mut rows = Vec::new();

    let forms = grid.iter().step_by(5).filter(|l| theory::c_form(exact, l, level).is_ok()).count();
    rows.push(check("c-form", format!("three ways, R={level}"), forms, grid.iter().step_by(5).count()));

    rows.push(match theory::ind_c_large_lambda(exact) {
        Ok(c) => check("ind-c", format!("ind C = Z+ = {} from {}", c.z_plus, c.lambda_star), 1, 1),
        Err(_) if !nondegenerate => check("ind-c", "zeta degenerate".into(), 0, 0),
        Err(e) => check("ind-c", e.to_string(), 0, 1),
    });

    rows.push(if nondegenerate {
        let g = [1e2, 1e3, 1e4, 1e5];
        match theory::c_inverse_norm(&p, &g) {
            Ok(norms) => check(
                "c-inverse-norm",
                "lambda*|C^-1| ratios in [0.5, 2] on 1e2..1e5".into(),
                theory::inverse_norm_tail_bounded(&norms) as usize,
                1,
            ),
            Err(e) => check("c-inverse-norm", e.to_string(), 0, 1),
        }
    } else {
        check("c-inverse-norm", "zeta degenerate".into(), 0, 0)
    });

    match jump_measure(exact, level) {
        m if m.is_empty() => rows.push(check("schur", "empty measure".into(), 0, 0)),
        m => {
            let sys = spectra::assemble(&m)?;
            let part = BlockPartition::by_level(&sys);
            let (mut ok, mut total) = (0, 0);
            for l in &grid {
                if let Ok(r) = theory::schur_identity_check(&sys, &part, l) {
                    total += 1;
                    ok += r.holds as usize;
                }
            }
            rows.push(check("schur", format!("R={level}, {total} of {} lambdas nonsingular", grid.len()), ok, total));
        }
    }

    let mut ok = 0;
    for l in &grid {
        ok += theory::scaling_identity_check(exact, level, l)?.holds as usize;
    }
    rows.push(check("scaling", format!("R={level}"), ok, grid.len()));

    let ts: Vec<f64> = moduli.iter().map(|m| m.ln()).collect();
    for branch in [Branch::Positive, Branch::Negative] {
        let name = match branch {
            Branch::Positive => "renormalization-positive",
            Branch::Negative => "renormalization-negative",
        };
        let r = theory::renormalization_check(&p, branch, &ts)?;
        rows.push(match r.verdict {
            RenormalizationVerdict::Skipped(why) => check(name, why, 0, 0),
            _ => check(
                name,
                format!("period {}, R={}", r.period, r.truncation_level),
                r.rows.iter().filter(|x| x.holds).count(),
                r.rows.len(),
            ),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(args.iter().copied(), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn level_parser() {
        assert_eq!(parse_level("auto"), Ok(Level::Auto));
        assert_eq!(parse_level("12"), Ok(Level::Fixed(12)));
        assert!(parse_level("0").is_err());
        assert!(parse_level("65").is_err());
    }

    #[test]
    fn table_without_config() {
        let (code, out, err) = run_str(&["selfsim-spectra", "table", "2"]);
        assert_eq!(code, 0, "{err}");
        assert!(out.starts_with("branch,l,k,index,lambda,rel_err,ratio"));
        assert_eq!(out.lines().count(), 5);
    }

    #[test]
    fn usage_errors_exit_one() {
        let (code, _, err) = run_str(&["selfsim-spectra", "table", "4"]);
        assert_eq!(code, 1);
        assert!(err.starts_with("error[invalid-config]:"));
        assert_eq!(err.lines().count(), 1);
        let (code, _, err) = run_str(&["selfsim-spectra", "eigs"]);
        assert_eq!(code, 1);
        assert!(err.contains("--config"));
        let (code, out, _) = run_str(&["selfsim-spectra", "--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("table"));
    }

    #[test]
    fn lambda_grid_is_symmetric() {
        let g = lambda_grid(50);
        assert_eq!(g.len(), 100);
        assert_eq!(g[0], -g[1].clone());
        assert!(Scalar::to_f64(&g[98]) > 1e6);
    }
}
