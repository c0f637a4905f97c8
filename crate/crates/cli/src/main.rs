use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::Ratio;
use num_traits::ToPrimitive;
use qbdst::audit::{audit_run, ratio_report, AuditReport};
use qbdst::error::OracleError;
use qbdst::gen::{gen_bad_example, gen_grid, parse_undirected, reduce_cvc, GridParams};
use qbdst::oracle::{exact_opt_brute, exact_opt_dp, OptResult, BRUTE_ARC_LIMIT, DP_TERMINAL_LIMIT};
use qbdst::{
    normalize_parallel, parse_instance, reverse_delete, solve, solve_standard_baseline, validate,
    Cost, ExactInstance, ExactSolution, ExactTrace, Rational,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

/// Exit statuses shared by every subcommand.
mod exit {
    pub const OK: u8 = 0;
    pub const INVALID: u8 = 1;
    pub const BREACH: u8 = 2;
    pub const GUARD: u8 = 3;
    /// clap reports usage errors with 2 by default, which is taken.
    pub const USAGE: u8 = 64;
}

#[derive(Parser)]
#[command(name = "qbdst", version, about = "Primal-dual solver for quasi-bipartite directed Steiner tree")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance file and print a run record.
    Solve(SolveArgs),
    /// Write a generated instance to stdout.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Solve and audit every instance file in a directory.
    Bench(BenchArgs),
    /// Exact optimum of a small instance.
    Oracle(OracleArgs),
    /// Re-check a recorded trace against its instance.
    Audit(AuditArgs),
}

#[derive(Args)]
struct SolveArgs {
    path: PathBuf,
    /// Write the growth trace (JSON Lines) here.
    #[arg(long, value_name = "OUT")]
    trace: Option<PathBuf>,
    /// Use the single-bucket growth rule.
    #[arg(long)]
    baseline: bool,
    /// Run every audit check on the result.
    #[arg(long)]
    audit: bool,
    /// Attach the exact optimum.
    #[arg(long)]
    oracle: bool,
    /// Also print floating point approximations, marked inexact.
    #[arg(long)]
    decimal: bool,
}

#[derive(Subcommand)]
enum GenCommand {
    /// The adversarial family for the single-bucket rule.
    Badexample {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = "1/100")]
        eps: String,
    },
    /// Random planar quasi-bipartite instance on a grid.
    Grid {
        #[arg(long, default_value_t = 5)]
        width: usize,
        #[arg(long, default_value_t = 5)]
        height: usize,
        #[arg(long, default_value = "1/2")]
        steiner_prob: String,
        #[arg(long, default_value = "4/5")]
        keep_prob: String,
        #[arg(long, default_value_t = 1)]
        cost_min: u64,
        #[arg(long, default_value_t = 10)]
        cost_max: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Connected-vertex-cover reduction of an undirected graph file ("-" for stdin).
    Reduce {
        path: PathBuf,
        /// Tag the output planar_bipartite (the input is promised planar).
        #[arg(long)]
        planar: bool,
    },
}

#[derive(Args)]
struct BenchArgs {
    dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Attach exact optima where the oracle guards allow.
    #[arg(long)]
    oracle: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleChoice {
    Auto,
    Dp,
    Brute,
}

#[derive(Args)]
struct OracleArgs {
    path: PathBuf,
    #[arg(long, value_enum, default_value_t = OracleChoice::Auto)]
    method: OracleChoice,
}

#[derive(Args)]
struct AuditArgs {
    instance: PathBuf,
    trace: PathBuf,
    #[arg(long)]
    oracle: bool,
}

/// A failure that ends the command with a given exit status.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Failure { code: exit::INVALID, message: message.into() }
    }
}

type CmdResult = Result<u8, Failure>;

fn read_input(path: &Path) -> Result<String, Failure> {
    if path.as_os_str() == "-" {
        let mut text = String::new();
        io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| Failure::invalid(format!("stdin: {e}")))?;
        return Ok(text);
    }
    fs::read_to_string(path).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
}

/// Parses, normalizes and validates an instance file.
fn load_instance(path: &Path) -> Result<ExactInstance, Failure> {
    let text = read_input(path)?;
    let parsed: ExactInstance =
        parse_instance(&text).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
    let inst = normalize_parallel(&parsed);
    let violations = validate(&inst);
    if !violations.is_empty() {
        let lines: Vec<String> = violations.iter().map(|v| format!("  {v}")).collect();
        return Err(Failure::invalid(format!("{}: invalid instance\n{}", path.display(), lines.join("\n"))));
    }
    Ok(inst)
}

/// DP when the terminal count allows it, else subset enumeration.
fn run_oracle(inst: &ExactInstance, choice: OracleChoice) -> Result<OptResult<Rational>, OracleError> {
    match choice {
        OracleChoice::Dp => exact_opt_dp(inst),
        OracleChoice::Brute => exact_opt_brute(inst),
        OracleChoice::Auto if inst.terminals().len() <= DP_TERMINAL_LIMIT => exact_opt_dp(inst),
        OracleChoice::Auto if inst.arc_count() <= BRUTE_ARC_LIMIT => exact_opt_brute(inst),
        OracleChoice::Auto => exact_opt_dp(inst),
    }
}

fn lit(c: &Rational) -> String {
    c.to_literal()
}

#[derive(Serialize)]
struct SolutionSummary {
    rule: qbdst::GrowthRule,
    final_arcs: Vec<qbdst::ArcId>,
    total_cost: String,
    dual_total: String,
    lower_bound: String,
    ratio_vs_lb: Option<String>,
    ratio_vs_opt: Option<String>,
    opt: Option<String>,
}

/// Everything one `solve` invocation reports. Reproducible from the instance
/// bytes and the flags, except `wall_time_ms`.
#[derive(Serialize)]
struct RunRecord {
    instance_hash: String,
    command: String,
    feasible: bool,
    solution: SolutionSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    audit: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    inexact: Option<Value>,
    wall_time_ms: u128,
}

fn summarize(inst: &ExactInstance, sol: &ExactSolution, rule: qbdst::GrowthRule, opt: Option<&Rational>) -> SolutionSummary {
    let ratios = ratio_report(inst, sol, opt);
    SolutionSummary {
        rule,
        final_arcs: sol.final_arcs.clone(),
        total_cost: lit(&sol.total_cost),
        dual_total: lit(&sol.dual_total),
        lower_bound: lit(&sol.lower_bound),
        ratio_vs_lb: ratios.ratio_vs_lb.as_ref().map(lit),
        ratio_vs_opt: ratios.ratio_vs_opt.as_ref().map(lit),
        opt: opt.map(lit),
    }
}

fn approx_fields(sol: &ExactSolution, opt: Option<&Rational>) -> Value {
    let mut fields = json!({
        "total_cost": sol.total_cost.approx(),
        "dual_total": sol.dual_total.approx(),
        "lower_bound": sol.lower_bound.approx(),
    });
    if let Some(o) = opt {
        fields["opt"] = json!(o.approx());
    }
    fields
}

fn cmd_solve(args: &SolveArgs) -> CmdResult {
    let start = Instant::now();
    let inst = load_instance(&args.path)?;
    let run = if args.baseline { solve_standard_baseline(&inst) } else { solve(&inst) };
    let (sol, trace) = run.map_err(|e| Failure::invalid(e.to_string()))?;
    if let Some(out) = &args.trace {
        fs::write(out, trace.to_jsonl())
            .map_err(|e| Failure::invalid(format!("{}: {e}", out.display())))?;
    }

    let mut oracle_error = None;
    let opt = if args.oracle {
        match run_oracle(&inst, OracleChoice::Auto) {
            Ok(r) => Some(r.opt_cost),
            Err(e) => {
                oracle_error = Some(e.to_string());
                None
            }
        }
    } else {
        None
    };
    let report: Option<AuditReport<Rational>> =
        args.audit.then(|| audit_run(&inst, &trace, &sol, opt.as_ref()));
    let feasible = inst.is_feasible(&sol.arc_set(inst.arc_count()));

    let mut command = vec!["solve".to_string()];
    for (on, flag) in [
        (args.trace.is_some(), "--trace"),
        (args.baseline, "--baseline"),
        (args.audit, "--audit"),
        (args.oracle, "--oracle"),
        (args.decimal, "--decimal"),
    ] {
        if on {
            command.push(flag.to_string());
        }
    }
    let record = RunRecord {
        instance_hash: inst.content_hash(),
        command: command.join(" "),
        feasible,
        solution: summarize(&inst, &sol, trace.rule, opt.as_ref()),
        audit: report.as_ref().map(AuditReport::to_json),
        oracle_error: oracle_error.clone(),
        inexact: args.decimal.then(|| approx_fields(&sol, opt.as_ref())),
        wall_time_ms: start.elapsed().as_millis(),
    };
    print_json(&record);

    if !feasible || report.as_ref().is_some_and(|r| !r.all_ok()) {
        return Ok(exit::BREACH);
    }
    if oracle_error.is_some() {
        return Ok(exit::GUARD);
    }
    Ok(exit::OK)
}

fn parse_probability(name: &str, text: &str) -> Result<Ratio<u64>, Failure> {
    let value = Rational::parse_literal(text)
        .ok_or_else(|| Failure::invalid(format!("--{name}: not a number: {text}")))?;
    match (value.numer().to_u64(), value.denom().to_u64()) {
        (Some(n), Some(d)) => Ok(Ratio::new(n, d)),
        _ => Err(Failure::invalid(format!("--{name}: expected a probability, got {text}"))),
    }
}

fn cmd_gen(cmd: &GenCommand) -> CmdResult {
    let inst: ExactInstance = match cmd {
        GenCommand::Badexample { k, eps } => {
            let eps = Rational::parse_literal(eps)
                .ok_or_else(|| Failure::invalid(format!("--eps: not a number: {eps}")))?;
            gen_bad_example(*k, &eps).map_err(|e| Failure::invalid(e.to_string()))?
        }
        GenCommand::Grid { width, height, steiner_prob, keep_prob, cost_min, cost_max, seed } => {
            let params = GridParams {
                width: *width,
                height: *height,
                steiner_prob: parse_probability("steiner-prob", steiner_prob)?,
                keep_prob: parse_probability("keep-prob", keep_prob)?,
                cost_range: (*cost_min, *cost_max),
                seed: *seed,
            };
            gen_grid(&params).map_err(|e| Failure::invalid(e.to_string()))?
        }
        GenCommand::Reduce { path, planar } => {
            let text = read_input(path)?;
            let graph = parse_undirected(&text)
                .map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
            reduce_cvc(&graph, *planar).map_err(|e| Failure::invalid(e.to_string()))?
        }
    };
    print!("{}", inst.to_text());
    Ok(exit::OK)
}

struct BenchRow {
    file: String,
    outcome: Result<BenchResult, String>,
}

struct BenchResult {
    total_cost: Rational,
    lower_bound: Rational,
    ratio_vs_lb: Option<Rational>,
    ratio_vs_opt: Option<Rational>,
    breach: bool,
}

fn bench_one(path: &Path, with_oracle: bool) -> Result<BenchResult, String> {
    let inst = load_instance(path).map_err(|f| f.message.lines().collect::<Vec<_>>().join(" "))?;
    let (sol, trace) = solve(&inst).map_err(|e| e.to_string())?;
    // Oracle limits are respected silently here; large files just get no OPT.
    let opt = if with_oracle && inst.terminals().len() <= DP_TERMINAL_LIMIT {
        exact_opt_dp(&inst).ok().map(|r| r.opt_cost)
    } else {
        None
    };
    let report = audit_run(&inst, &trace, &sol, opt.as_ref());
    Ok(BenchResult {
        total_cost: sol.total_cost,
        lower_bound: sol.lower_bound,
        ratio_vs_lb: report.ratio.ratio_vs_lb.clone(),
        ratio_vs_opt: report.ratio.ratio_vs_opt.clone(),
        breach: !report.all_ok(),
    })
}

fn cmd_bench(args: &BenchArgs) -> CmdResult {
    let entries = fs::read_dir(&args.dir)
        .map_err(|e| Failure::invalid(format!("{}: {e}", args.dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    files.sort();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.max(1))
        .build()
        .map_err(|e| Failure::invalid(e.to_string()))?;
    let rows: Vec<BenchRow> = pool.install(|| {
        files
            .par_iter()
            .map(|p| BenchRow {
                file: p.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned()),
                outcome: bench_one(p, args.oracle),
            })
            .collect()
    });

    let opt_lit = |r: &Option<Rational>| r.as_ref().map_or_else(|| "-".to_string(), lit);
    println!("file\tcost\tlower_bound\tratio_vs_lb\tratio_vs_opt\tstatus");
    let mut max_ratio: Option<Rational> = None;
    let mut max_opt_ratio: Option<Rational> = None;
    let (mut breaches, mut errors) = (0, 0);
    for row in &rows {
        match &row.outcome {
            Ok(r) => {
                let status = if r.breach { "BREACH" } else { "ok" };
                breaches += usize::from(r.breach);
                println!(
                    "{}\t{}\t{}\t{}\t{}\t{status}",
                    row.file,
                    lit(&r.total_cost),
                    lit(&r.lower_bound),
                    opt_lit(&r.ratio_vs_lb),
                    opt_lit(&r.ratio_vs_opt),
                );
                for (slot, value) in [(&mut max_ratio, &r.ratio_vs_lb), (&mut max_opt_ratio, &r.ratio_vs_opt)] {
                    if let Some(v) = value {
                        if slot.as_ref().is_none_or(|m| v > m) {
                            *slot = Some(v.clone());
                        }
                    }
                }
            }
            Err(e) => {
                errors += 1;
                println!("{}\t-\t-\t-\t-\terror: {e}", row.file);
            }
        }
    }
    println!(
        "instances {}  max_ratio_vs_lb {}  max_ratio_vs_opt {}  breaches {breaches}  errors {errors}",
        rows.len(),
        opt_lit(&max_ratio),
        opt_lit(&max_opt_ratio),
    );
    Ok(if breaches > 0 {
        exit::BREACH
    } else if errors > 0 {
        exit::INVALID
    } else {
        exit::OK
    })
}

fn cmd_oracle(args: &OracleArgs) -> CmdResult {
    let inst = load_instance(&args.path)?;
    match run_oracle(&inst, args.method) {
        Ok(r) => {
            print_json(&json!({
                "instance_hash": inst.content_hash(),
                "method": r.method.to_string(),
                "opt_cost": lit(&r.opt_cost),
                "opt_arcs": r.opt_arcs,
            }));
            Ok(exit::OK)
        }
        Err(e @ OracleError::Guard { .. }) => Err(Failure { code: exit::GUARD, message: e.to_string() }),
        Err(e) => Err(Failure::invalid(e.to_string())),
    }
}

fn cmd_audit(args: &AuditArgs) -> CmdResult {
    let inst = load_instance(&args.instance)?;
    let text = read_input(&args.trace)?;
    let trace = ExactTrace::from_jsonl(&text)
        .map_err(|e| Failure::invalid(format!("{}: {e}", args.trace.display())))?;
    let sol = reverse_delete(&inst, &trace);
    let opt = if args.oracle {
        match run_oracle(&inst, OracleChoice::Auto) {
            Ok(r) => Some(r.opt_cost),
            Err(e @ OracleError::Guard { .. }) => {
                return Err(Failure { code: exit::GUARD, message: e.to_string() })
            }
            Err(e) => return Err(Failure::invalid(e.to_string())),
        }
    } else {
        None
    };
    let report = audit_run(&inst, &trace, &sol, opt.as_ref());
    print_json(&json!({
        "instance_hash": inst.content_hash(),
        "solution": summarize(&inst, &sol, trace.rule, opt.as_ref()),
        "audit": report.to_json(),
    }));
    Ok(if report.all_ok() { exit::OK } else { exit::BREACH })
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable record"));
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Gen(cmd) => cmd_gen(cmd),
        Command::Bench(args) => cmd_bench(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Audit(args) => cmd_audit(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
