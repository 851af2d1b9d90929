//! Batch front end: parses one experiment description (flags, optionally
//! merged over a JSON config file), runs the requested command, and writes a
//! deterministic CSV or JSON report. Exit codes follow the CI contract:
//! 0 ok, 1 verification failure, 2 config error, 3 numeric failure,
//! 4 precondition unmet.

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::operator::{plan_window, regression_vector, TruncationWindow};
use crate::pmf::{DiscretePmf, Family, GammaPair};
use crate::simulate::{estimate_regression, fit_line, SimError};
use crate::spectral::{classify_injectivity, kernel_vector, SpectralError, Verdict};
use crate::verify::{run_all, CriterionResult, GROUPS};

#[derive(Parser)]
#[command(name = "weakrec", version, about = "Numerical laboratory for weak-record regression")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate e_m(j) = E(W_{i+m} | W_i = j) for m ≤ s and fit a line to e_s
    Regress(RunArgs),
    /// Decide whether the reduction operator B_s is injective on the law
    Classify(RunArgs),
    /// Produce a certified kernel vector of B_s (non-injective laws only)
    Kernel(RunArgs),
    /// Monte Carlo estimate of E(W_{i+s} | W_i = j) against exact values
    Simulate(RunArgs),
    /// Run the acceptance criteria and report one row per criterion
    VerifyAll(VerifyArgs),
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    /// Distribution spec: geo:<theta> | gamma:<g0>,<g1> | raw:<p0>,<p1>,...
    #[arg(long)]
    dist: Option<String>,
    /// Regression gap s ≥ 1 (s ≥ 2 for classify/kernel)
    #[arg(long)]
    s: Option<usize>,
    /// Slope base γ1 of B_s; defaults to the law's own γ1, or 1 otherwise
    #[arg(long)]
    gamma1: Option<f64>,
    /// Computation window length M
    #[arg(long = "M")]
    m: Option<usize>,
    /// Certified prefix length L
    #[arg(long = "L")]
    l: Option<usize>,
    /// Tail / residual tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// RNG seed (simulate)
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo paths per conditioning value (simulate)
    #[arg(long)]
    paths: Option<usize>,
    /// Output file; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: csv | json
    #[arg(long)]
    format: Option<String>,
    /// JSON config file supplying defaults for any omitted flag
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Restrict to one criterion group: operator | spectral | simulate
    #[arg(long)]
    only: Option<String>,
}

/// The same knobs as the flags, read from a JSON file. Flags win on
/// conflict; unknown keys are rejected so typos do not silently fall back
/// to defaults.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ExperimentConfig {
    dist: Option<String>,
    s: Option<usize>,
    gamma1: Option<f64>,
    #[serde(rename = "M")]
    m: Option<usize>,
    #[serde(rename = "L")]
    l: Option<usize>,
    tol: Option<f64>,
    seed: Option<u64>,
    paths: Option<usize>,
    out: Option<PathBuf>,
    format: Option<String>,
    only: Option<String>,
}

#[derive(Debug)]
enum CmdError {
    Config(String),
    Numeric(String),
    Precondition(String),
}

impl CmdError {
    fn code(&self) -> i32 {
        match self {
            CmdError::Config(_) => 2,
            CmdError::Numeric(_) => 3,
            CmdError::Precondition(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CmdError::Config(m) | CmdError::Numeric(m) | CmdError::Precondition(m) => m,
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum OutputFormat {
    Csv,
    Json,
}

struct Resolved {
    dist_spec: String,
    d: DiscretePmf,
    s: usize,
    gamma1: f64,
    m: usize,
    l: usize,
    tol: f64,
    seed: u64,
    paths: usize,
    out: Option<PathBuf>,
    format: OutputFormat,
}

fn load_config(path: &Option<PathBuf>) -> Result<ExperimentConfig, CmdError> {
    let Some(path) = path else {
        return Ok(ExperimentConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CmdError::Config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CmdError::Config(format!("bad config {}: {e}", path.display())))
}

fn parse_dist(spec: &str, tol: f64) -> Result<DiscretePmf, CmdError> {
    let bad = |detail: String| CmdError::Config(format!("bad --dist {spec:?}: {detail}"));
    let (kind, rest) = spec
        .split_once(':')
        .ok_or_else(|| bad("expected geo:<theta>, gamma:<g0>,<g1>, or raw:<p0>,...".into()))?;
    let nums: Vec<f64> = rest
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| bad(format!("{e}")))?;
    match kind {
        "geo" => {
            if nums.len() != 1 {
                return Err(bad("geo takes one parameter".into()));
            }
            DiscretePmf::geometric(nums[0]).map_err(|e| bad(e.to_string()))
        }
        "gamma" => {
            if nums.len() != 2 {
                return Err(bad("gamma takes two parameters".into()));
            }
            let g = GammaPair::new(nums[0], nums[1]).map_err(|e| bad(e.to_string()))?;
            DiscretePmf::from_gamma(g, tol.min(1e-8)).map_err(|e| bad(e.to_string()))
        }
        "raw" => DiscretePmf::from_raw(&nums).map_err(|e| bad(e.to_string())),
        other => Err(bad(format!("unknown family {other:?}"))),
    }
}

fn parse_format(text: Option<&str>) -> Result<OutputFormat, CmdError> {
    match text {
        None | Some("csv") => Ok(OutputFormat::Csv),
        Some("json") => Ok(OutputFormat::Json),
        Some(other) => Err(CmdError::Config(format!(
            "bad --format {other:?}: expected csv or json"
        ))),
    }
}

fn resolve(args: &RunArgs, need_dist: bool) -> Result<Resolved, CmdError> {
    let file = load_config(&args.config)?;
    let tol = args.tol.or(file.tol).unwrap_or(1e-8);
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(CmdError::Config(format!("--tol must be positive, got {tol}")));
    }
    let dist_spec = args
        .dist
        .clone()
        .or(file.dist)
        .unwrap_or_else(|| "geo:0.5".into());
    let d = if need_dist {
        parse_dist(&dist_spec, tol)?
    } else {
        DiscretePmf::geometric(0.5).expect("geo(0.5)")
    };
    let s = args.s.or(file.s).unwrap_or(1);
    if s < 1 {
        return Err(CmdError::Config("--s must be at least 1".into()));
    }
    let gamma1 = args.gamma1.or(file.gamma1).unwrap_or_else(|| {
        if let Family::Parametric(g) = d.family() {
            g.gamma1
        } else {
            1.0
        }
    });
    if !(gamma1 > 0.0 && gamma1.is_finite()) {
        return Err(CmdError::Config(format!(
            "--gamma1 must be positive, got {gamma1}"
        )));
    }
    let m = args.m.or(file.m).unwrap_or(2000);
    let l = args.l.or(file.l).unwrap_or(200);
    if l < 1 || m < l {
        return Err(CmdError::Config(format!(
            "window needs 1 ≤ L ≤ M, got L = {l}, M = {m}"
        )));
    }
    let paths = args.paths.or(file.paths).unwrap_or(100_000);
    Ok(Resolved {
        dist_spec,
        d,
        s,
        gamma1,
        m,
        l,
        tol,
        seed: args.seed.or(file.seed).unwrap_or(1234),
        paths,
        out: args.out.clone().or(file.out),
        format: parse_format(args.format.as_deref().or(file.format.as_deref()))?,
    })
}

fn numeric<E: std::fmt::Display>(e: E) -> CmdError {
    CmdError::Numeric(e.to_string())
}

fn sim_error(e: SimError) -> CmdError {
    match e {
        SimError::TooFewPaths { .. } | SimError::StartOutsideSupport { .. } => {
            CmdError::Config(e.to_string())
        }
        other => CmdError::Numeric(other.to_string()),
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), CmdError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CmdError::Config(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Yes => "yes",
        Verdict::No => "no",
        Verdict::Inconclusive => "inconclusive",
    }
}

#[derive(Serialize)]
struct WindowEcho {
    m: usize,
    l: usize,
    tol: f64,
}

#[derive(Serialize)]
struct RegressRow {
    j: usize,
    e: Vec<f64>,
}

#[derive(Serialize)]
struct RegressReport {
    command: &'static str,
    dist: String,
    s: usize,
    window: WindowEcho,
    beta0_hat: f64,
    beta1_hat: f64,
    max_abs_deviation: f64,
    nonlinear: bool,
    rows: Vec<RegressRow>,
}

fn cmd_regress(r: &Resolved) -> Result<String, CmdError> {
    let (ext, w) = plan_window(&r.d, r.l, r.tol, Some(r.m)).map_err(numeric)?;
    let mut columns = Vec::with_capacity(r.s);
    for m in 1..=r.s {
        columns.push(regression_vector(&ext, m, w).map_err(numeric)?);
    }
    let mut rows = Vec::new();
    for j in 0..w.prefix {
        let e: Option<Vec<f64>> = columns.iter().map(|c| c.value_at(&ext, j)).collect();
        if let Some(e) = e {
            rows.push(RegressRow { j, e });
        }
    }
    let points: Vec<(f64, f64, f64)> = rows
        .iter()
        .map(|row| (row.j as f64, row.e[r.s - 1], r.tol))
        .collect();
    let fit = fit_line(&points).map_err(sim_error)?;
    let max_abs_deviation = rows
        .iter()
        .map(|row| (row.e[r.s - 1] - (fit.beta0_hat + fit.beta1_hat * row.j as f64)).abs())
        .fold(0.0f64, f64::max);
    let report = RegressReport {
        command: "regress",
        dist: r.dist_spec.clone(),
        s: r.s,
        window: WindowEcho { m: w.len, l: w.prefix, tol: r.tol },
        beta0_hat: fit.beta0_hat,
        beta1_hat: fit.beta1_hat,
        max_abs_deviation,
        nonlinear: fit.max_standardized_residual > 10.0,
        rows,
    };
    match r.format {
        OutputFormat::Json => to_json(&report),
        OutputFormat::Csv => {
            let mut text = String::new();
            let _ = writeln!(text, "# command: regress");
            let _ = writeln!(text, "# dist: {}", report.dist);
            let _ = writeln!(text, "# s: {}", report.s);
            let _ = writeln!(text, "# beta0_hat: {}", report.beta0_hat);
            let _ = writeln!(text, "# beta1_hat: {}", report.beta1_hat);
            let _ = writeln!(text, "# max_abs_deviation: {:e}", report.max_abs_deviation);
            let _ = writeln!(text, "# nonlinear: {}", report.nonlinear);
            let mut header = String::from("j");
            for m in 1..=report.s {
                let _ = write!(header, ",e_{m}");
            }
            let _ = writeln!(text, "{header}");
            for row in &report.rows {
                let _ = write!(text, "{}", row.j);
                for v in &row.e {
                    let _ = write!(text, ",{v}");
                }
                text.push('\n');
            }
            Ok(text)
        }
    }
}

#[derive(Serialize)]
struct ClassifyReport {
    command: &'static str,
    dist: String,
    s: usize,
    gamma1: f64,
    window: WindowEcho,
    verdict: crate::spectral::SpectralVerdict,
}

fn cmd_classify(r: &Resolved) -> Result<String, CmdError> {
    if r.s < 2 {
        return Err(CmdError::Config("classify needs --s at least 2".into()));
    }
    let w = TruncationWindow::new(r.m, r.l, r.tol).map_err(numeric)?;
    let verdict = classify_injectivity(r.s, r.gamma1, &r.d, w).map_err(numeric)?;
    let report = ClassifyReport {
        command: "classify",
        dist: r.dist_spec.clone(),
        s: r.s,
        gamma1: r.gamma1,
        window: WindowEcho { m: r.m, l: r.l, tol: r.tol },
        verdict,
    };
    match r.format {
        OutputFormat::Json => to_json(&report),
        OutputFormat::Csv => {
            let v = &report.verdict;
            let mut text = String::new();
            let _ = writeln!(text, "# command: classify");
            let _ = writeln!(text, "# dist: {}", report.dist);
            let _ = writeln!(text, "# s: {}", report.s);
            let _ = writeln!(text, "# gamma1: {}", report.gamma1);
            let _ = writeln!(text, "# injective: {}", verdict_str(v.injective));
            let _ = writeln!(text, "# is_eigen: {}", verdict_str(v.is_eigen));
            let _ = writeln!(text, "# lambda_re: {}", v.lambda_re);
            let _ = writeln!(text, "# lambda_im: {}", v.lambda_im);
            if let Some(ell) = v.ell {
                let _ = writeln!(text, "# ell: {ell}");
            }
            let _ = writeln!(text, "# rationale: {}", v.rationale);
            let _ = writeln!(text, "trace,index,value");
            for (k, a) in v.a_factors.iter().enumerate() {
                let _ = writeln!(text, "a_factor,{},{a}", k + 1);
            }
            for (n, x) in &v.log_product {
                let _ = writeln!(text, "log_product,{n},{x}");
            }
            for (n, x) in &v.sstar_partials {
                let _ = writeln!(text, "sstar,{n},{x}");
            }
            for (n, x) in &v.s_partials {
                let _ = writeln!(text, "s_n,{n},{x}");
            }
            Ok(text)
        }
    }
}

#[derive(Serialize)]
struct KernelRow {
    l: usize,
    z_weighted: f64,
    z_value: f64,
}

#[derive(Serialize)]
struct KernelReport {
    command: &'static str,
    dist: String,
    s: usize,
    gamma1: f64,
    window: WindowEcho,
    lambda_re: f64,
    lambda_im: f64,
    eigen_residual: f64,
    kernel_residual: f64,
    imag_residue: f64,
    tail_weight: f64,
    rows: Vec<KernelRow>,
}

fn cmd_kernel(r: &Resolved) -> Result<String, CmdError> {
    if r.s < 2 {
        return Err(CmdError::Config("kernel needs --s at least 2".into()));
    }
    let w = TruncationWindow::new(r.m, r.l, r.tol).map_err(numeric)?;
    let cert = kernel_vector(r.s, r.gamma1, &r.d, w).map_err(|e| match e {
        SpectralError::NotEigen { rationale } => CmdError::Precondition(format!(
            "B_{} is injective here, so it has no kernel vector: {rationale}",
            r.s
        )),
        other => numeric(other),
    })?;
    let ext = r.d.extended(cert.window.len).map_err(numeric)?;
    let mut rows = Vec::new();
    for l in 0..cert.window.prefix.min(cert.z.u.len()) {
        if let Some(z_value) = cert.z_value_at(&ext, l) {
            rows.push(KernelRow {
                l,
                z_weighted: cert.z.u[l],
                z_value,
            });
        }
    }
    let report = KernelReport {
        command: "kernel",
        dist: r.dist_spec.clone(),
        s: r.s,
        gamma1: r.gamma1,
        window: WindowEcho { m: cert.window.len, l: cert.window.prefix, tol: r.tol },
        lambda_re: cert.lambda.re,
        lambda_im: cert.lambda.im,
        eigen_residual: cert.eigen_residual,
        kernel_residual: cert.kernel_residual,
        imag_residue: cert.imag_residue,
        tail_weight: cert.tail_weight,
        rows,
    };
    match r.format {
        OutputFormat::Json => to_json(&report),
        OutputFormat::Csv => {
            let mut text = String::new();
            let _ = writeln!(text, "# command: kernel");
            let _ = writeln!(text, "# dist: {}", report.dist);
            let _ = writeln!(text, "# s: {}", report.s);
            let _ = writeln!(text, "# gamma1: {}", report.gamma1);
            let _ = writeln!(text, "# lambda_re: {}", report.lambda_re);
            let _ = writeln!(text, "# lambda_im: {}", report.lambda_im);
            let _ = writeln!(text, "# eigen_residual: {:e}", report.eigen_residual);
            let _ = writeln!(text, "# kernel_residual: {:e}", report.kernel_residual);
            let _ = writeln!(text, "# imag_residue: {:e}", report.imag_residue);
            let _ = writeln!(text, "# tail_weight: {:e}", report.tail_weight);
            let _ = writeln!(text, "l,z_weighted,z_value");
            for row in &report.rows {
                let _ = writeln!(text, "{},{},{}", row.l, row.z_weighted, row.z_value);
            }
            Ok(text)
        }
    }
}

#[derive(Serialize)]
struct SimulateRow {
    j: u64,
    mean: f64,
    stderr: f64,
    exact: f64,
    z: f64,
}

#[derive(Serialize)]
struct SimulateReport {
    command: &'static str,
    dist: String,
    s: usize,
    seed: u64,
    paths_per_j: usize,
    max_abs_z: f64,
    rows: Vec<SimulateRow>,
}

fn cmd_simulate(r: &Resolved) -> Result<String, CmdError> {
    if r.paths == 0 {
        return Err(CmdError::Config("--paths must be positive".into()));
    }
    let (ext, w) = plan_window(&r.d, r.l, r.tol, Some(r.m)).map_err(numeric)?;
    let e_s = regression_vector(&ext, r.s, w).map_err(numeric)?;
    let j_top = w.prefix.min(10) as u64;
    let js: Vec<u64> = (0..j_top).collect();
    if js.is_empty() {
        return Err(CmdError::Config("window leaves no conditioning values".into()));
    }
    let estimates = estimate_regression(&r.d, r.s, &js, r.paths, r.seed).map_err(sim_error)?;
    let mut rows = Vec::new();
    let mut max_abs_z = 0.0f64;
    for est in &estimates {
        let exact = e_s
            .value_at(&ext, est.j as usize)
            .ok_or_else(|| CmdError::Numeric(format!("no exact value at j = {}", est.j)))?;
        let diff = est.mean - exact;
        let z = if diff == 0.0 {
            0.0
        } else {
            diff / est.stderr.max(f64::MIN_POSITIVE)
        };
        max_abs_z = max_abs_z.max(z.abs());
        rows.push(SimulateRow {
            j: est.j,
            mean: est.mean,
            stderr: est.stderr,
            exact,
            z,
        });
    }
    let report = SimulateReport {
        command: "simulate",
        dist: r.dist_spec.clone(),
        s: r.s,
        seed: r.seed,
        paths_per_j: r.paths,
        max_abs_z,
        rows,
    };
    match r.format {
        OutputFormat::Json => to_json(&report),
        OutputFormat::Csv => {
            let mut text = String::new();
            let _ = writeln!(text, "# command: simulate");
            let _ = writeln!(text, "# dist: {}", report.dist);
            let _ = writeln!(text, "# s: {}", report.s);
            let _ = writeln!(text, "# seed: {}", report.seed);
            let _ = writeln!(text, "# paths_per_j: {}", report.paths_per_j);
            let _ = writeln!(text, "# max_abs_z: {}", report.max_abs_z);
            let _ = writeln!(text, "j,mean,stderr,exact,z");
            for row in &report.rows {
                let _ = writeln!(
                    text,
                    "{},{},{},{},{}",
                    row.j, row.mean, row.stderr, row.exact, row.z
                );
            }
            Ok(text)
        }
    }
}

#[derive(Serialize)]
struct VerifyReport {
    command: &'static str,
    all_passed: bool,
    criteria: Vec<CriterionResult>,
}

fn cmd_verify_all(r: &Resolved, only: Option<&str>) -> Result<(String, bool), CmdError> {
    if let Some(group) = only {
        if !GROUPS.contains(&group) {
            return Err(CmdError::Config(format!(
                "bad --only {group:?}: expected one of {}",
                GROUPS.join(", ")
            )));
        }
    }
    let criteria = run_all(only);
    let all_passed = criteria.iter().all(|c| c.passed);
    let report = VerifyReport {
        command: "verify-all",
        all_passed,
        criteria,
    };
    let text = match r.format {
        OutputFormat::Json => {
            // timings vary run to run; strip them so reruns are byte-identical
            let mut value = serde_json::to_value(&report).map_err(numeric)?;
            if let Some(rows) = value
                .get_mut("criteria")
                .and_then(serde_json::Value::as_array_mut)
            {
                for row in rows {
                    if let Some(obj) = row.as_object_mut() {
                        obj.remove("seconds");
                    }
                }
            }
            let mut text = serde_json::to_string_pretty(&value).map_err(numeric)?;
            text.push('\n');
            text
        }
        OutputFormat::Csv => {
            let mut text = String::new();
            let _ = writeln!(text, "# command: verify-all");
            let _ = writeln!(text, "# all_passed: {}", report.all_passed);
            let _ = writeln!(text, "index,group,name,pass,detail");
            for c in &report.criteria {
                let _ = writeln!(
                    text,
                    "{},{},{},{},{}",
                    c.index,
                    c.group,
                    csv_field(c.name),
                    c.passed,
                    csv_field(&c.detail)
                );
            }
            text
        }
    };
    Ok((text, all_passed))
}

fn to_json<T: Serialize>(report: &T) -> Result<String, CmdError> {
    let mut text = serde_json::to_string_pretty(report).map_err(numeric)?;
    text.push('\n');
    Ok(text)
}

fn configure_threads() -> Result<(), CmdError> {
    match std::env::var("WEAKREC_THREADS") {
        Err(_) => Ok(()),
        Ok(raw) => match raw.parse::<usize>() {
            Ok(n) if n >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
                Ok(())
            }
            _ => Err(CmdError::Config(format!(
                "WEAKREC_THREADS must be a positive integer, got {raw:?}"
            ))),
        },
    }
}

fn dispatch(cli: Cli) -> Result<i32, CmdError> {
    configure_threads()?;
    match cli.command {
        Command::Regress(args) => {
            let r = resolve(&args, true)?;
            emit(&r.out, &cmd_regress(&r)?)?;
            Ok(0)
        }
        Command::Classify(args) => {
            let r = resolve(&args, true)?;
            emit(&r.out, &cmd_classify(&r)?)?;
            Ok(0)
        }
        Command::Kernel(args) => {
            let r = resolve(&args, true)?;
            emit(&r.out, &cmd_kernel(&r)?)?;
            Ok(0)
        }
        Command::Simulate(args) => {
            let r = resolve(&args, true)?;
            emit(&r.out, &cmd_simulate(&r)?)?;
            Ok(0)
        }
        Command::VerifyAll(args) => {
            let r = resolve(&args.run, false)?;
            let file = load_config(&args.run.config)?;
            let only = args.only.or(file.only);
            let (text, all_passed) = cmd_verify_all(&r, only.as_deref())?;
            emit(&r.out, &text)?;
            Ok(if all_passed { 0 } else { 1 })
        }
    }
}

pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dist_specs_parse() {
        let tol = 1e-8;
        assert!(parse_dist("geo:0.5", tol).is_ok());
        assert!(parse_dist("gamma:1,0.5", tol).is_ok());
        assert!(parse_dist("raw:0.5,0.25,0.25", tol).is_ok());
        for bad in ["geo", "geo:1.5", "gamma:1", "pareto:2", "raw:0.5,-0.1", "geo:abc"] {
            assert!(parse_dist(bad, tol).is_err(), "{bad} should fail");
        }
    }

    #[test]
    fn flags_beat_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(&path, r#"{"dist": "geo:0.25", "s": 3, "seed": 7}"#).unwrap();
        let args = RunArgs {
            s: Some(5),
            config: Some(path),
            ..Default::default()
        };
        let r = resolve(&args, true).unwrap();
        assert_eq!(r.s, 5);
        assert_eq!(r.seed, 7);
        assert_eq!(r.dist_spec, "geo:0.25");
    }

    #[test]
    fn unknown_config_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(&path, r#"{"paths_per_j": 10}"#).unwrap();
        let args = RunArgs {
            config: Some(path),
            ..Default::default()
        };
        match resolve(&args, true) {
            Err(CmdError::Config(_)) => {}
            Err(e) => panic!("expected config error, got {e:?}"),
            Ok(_) => panic!("expected config error, got a resolved config"),
        }
    }

    #[test]
    fn regress_flags_nonlinear_three_point_law() {
        let args = RunArgs {
            dist: Some("raw:0.5,0.25,0.25".into()),
            s: Some(1),
            ..Default::default()
        };
        let r = resolve(&args, true).unwrap();
        let text = cmd_regress(&r).unwrap();
        assert!(text.contains("# nonlinear: true"), "{text}");
    }

    #[test]
    fn regress_recovers_family_line() {
        let args = RunArgs {
            dist: Some("gamma:1,0.5".into()),
            s: Some(2),
            ..Default::default()
        };
        let r = resolve(&args, true).unwrap();
        let text = cmd_regress(&r).unwrap();
        let beta1: f64 = text
            .lines()
            .find(|l| l.starts_with("# beta1_hat:"))
            .and_then(|l| l.rsplit(' ').next())
            .unwrap()
            .parse()
            .unwrap();
        assert!((beta1 - 0.25).abs() < 1e-9);
        assert!(text.contains("# nonlinear: false"), "{text}");
    }

    #[test]
    fn kernel_requires_noninjective_case() {
        let args = RunArgs {
            dist: Some("geo:0.5".into()),
            s: Some(3),
            ..Default::default()
        };
        let r = resolve(&args, true).unwrap();
        match cmd_kernel(&r) {
            Err(CmdError::Precondition(_)) => {}
            other => panic!("expected precondition error, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn csv_fields_with_commas_are_quoted() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    }
}
