use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use dlsenum::bench::{self, BenchConfig};
use dlsenum::engine::{enumerate_threads, total_multiplier};
use dlsenum::montecarlo::{self, EstimatorConfig, Method};
use dlsenum::plan::{build_plan, FixedPrefix, LayoutChoice, LookaheadChoice};
use dlsenum::square::{validate, ConstraintSet, Order, SquareGrid};
use dlsenum::symenum::{SymEnumerator, SymMode};
use dlsenum::workunit::{self, BatchEngine, RunOptions};
use dlsenum::{oracle, Error, FillPlan};

#[derive(Parser)]
#[command(name = "dlsenum", version, about = "Count Latin squares, diagonal Latin squares and their symmetric variants")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the fill plan: one line per step and a grid of step numbers.
    Plan(PlanArgs),
    /// Count every square of the configuration.
    Count(CountArgs),
    /// Split a count into prefix workunits, run them, merge results.
    #[command(subcommand)]
    Workunits(WorkunitCmd),
    /// Estimate a count from sampled row-major prefixes.
    Estimate(EstimateArgs),
    /// Measure throughput on a seeded sample of prefixes.
    Bench(BenchArgs),
    /// Check a square given as text against a constraint set.
    Validate(ValidateArgs),
    #[command(hide = true)]
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Format {
    Text,
    Json,
}

#[derive(Args, Clone)]
struct Target {
    #[arg(long)]
    order: usize,
    /// ls, dls or vsdls.
    #[arg(long, value_parser = parse_cs)]
    constraints: ConstraintSet,
    /// first-row or first-row-and-column; defaults to first-row-and-column
    /// for ls and first-row otherwise.
    #[arg(long, value_parser = parse_fixed)]
    fixed: Option<FixedPrefix>,
}

#[derive(Args, Clone)]
struct PlanShape {
    /// heuristic, hourglass or row-major.
    #[arg(long, default_value = "heuristic", value_parser = parse_layout)]
    layout: LayoutChoice,
    /// default, off, or a 1-based window such as 51..60.
    #[arg(long, default_value = "default", value_parser = parse_lookahead)]
    lookahead: LookaheadChoice,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    target: Target,
    #[command(flatten)]
    shape: PlanShape,
    /// Print only the grid.
    #[arg(long)]
    grid: bool,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct CountArgs {
    #[command(flatten)]
    target: Target,
    /// Complete only canonical hourglass designs, weighted by class size.
    #[arg(long)]
    symmetry_breaking: bool,
    #[arg(long, default_value = "default", value_parser = parse_lookahead)]
    lookahead: LookaheadChoice,
    /// heuristic or row-major; ignored with --symmetry-breaking.
    #[arg(long, default_value = "heuristic", value_parser = parse_layout)]
    layout: LayoutChoice,
    /// Worker threads, 0 for all cores.
    #[arg(long, env = "DLSENUM_THREADS", default_value_t = 0)]
    threads: usize,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Subcommand)]
enum WorkunitCmd {
    /// Write every valid assignment of the first K plan steps.
    Gen(GenArgs),
    /// Count workunits, appending to a results file; resumes when it exists.
    Run(RunArgs),
    /// Combine results files under a quorum of agreeing runs.
    Merge(MergeArgs),
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    target: Target,
    #[command(flatten)]
    shape: PlanShape,
    /// Steps per prefix; defaults to 10 for order 9 and otherwise to the
    /// smallest depth giving at least 1000 workunits.
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, env = "DLSENUM_THREADS", default_value_t = 0)]
    threads: usize,
    /// Half-open id range A..B.
    #[arg(long, value_parser = parse_range)]
    range: Option<std::ops::Range<u64>>,
    #[arg(long, default_value = "local")]
    run_tag: String,
    /// plain or symmetric.
    #[arg(long, value_enum, default_value = "plain")]
    engine: EngineArg,
    /// Stop after counting this many workunits.
    #[arg(long)]
    limit: Option<usize>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Plain,
    Symmetric,
}

#[derive(Args)]
struct MergeArgs {
    #[arg(long, default_value_t = 1)]
    quorum: usize,
    /// Workunit file listing the expected ids.
    #[arg(long)]
    units: Option<PathBuf>,
    #[arg(required = true)]
    results: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    order: usize,
    #[arg(long, value_parser = parse_cs)]
    constraints: ConstraintSet,
    /// Prefix cells in row-major order, first row included.
    #[arg(long)]
    depth: usize,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// importance or uniform-prefix.
    #[arg(long, default_value = "importance", value_parser = parse_method)]
    method: Method,
    #[arg(long, env = "DLSENUM_THREADS", default_value_t = 0)]
    threads: usize,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    target: Target,
    #[arg(long, default_value = "default", value_parser = parse_lookahead)]
    lookahead: LookaheadChoice,
    /// Prefix depth; defaults to the shallowest depth at which every sampled
    /// prefix has at most 1e5 completions.
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long, default_value_t = 200)]
    prefixes: usize,
    #[arg(long, default_value_t = 30.0)]
    seconds: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Time the same prefixes under a grid of lookahead windows.
    #[arg(long)]
    sweep_lookahead: bool,
    /// Grid spacing of the sweep.
    #[arg(long, default_value_t = 10)]
    stride: usize,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct ValidateArgs {
    /// Grid file, or - for standard input.
    #[arg(long, default_value = "-")]
    input: String,
    #[arg(long, value_parser = parse_cs)]
    constraints: ConstraintSet,
    /// Accept empty cells written as _.
    #[arg(long)]
    partial: bool,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    target: Target,
    /// Use the all-assignments checker instead of row permutations.
    #[arg(long)]
    naive: bool,
}

fn parse_cs(s: &str) -> Result<ConstraintSet, String> {
    s.parse().map_err(|e: Error| e.to_string())
}
fn parse_fixed(s: &str) -> Result<FixedPrefix, String> {
    s.parse().map_err(|e: Error| e.to_string())
}
fn parse_layout(s: &str) -> Result<LayoutChoice, String> {
    s.parse().map_err(|e: Error| e.to_string())
}
fn parse_lookahead(s: &str) -> Result<LookaheadChoice, String> {
    s.parse().map_err(|e: Error| e.to_string())
}
fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}
fn parse_range(s: &str) -> Result<std::ops::Range<u64>, String> {
    let (a, b) = s.split_once("..").ok_or("expected A..B")?;
    let a: u64 = a.parse().map_err(|_| format!("bad range start '{a}'"))?;
    let b: u64 = b.parse().map_err(|_| format!("bad range end '{b}'"))?;
    if a > b {
        return Err(format!("empty range {s}"));
    }
    Ok(a..b)
}

enum Failure {
    Usage(String),
    Compute(Error),
    /// Already reported; exit 1.
    Reported,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidOrder(_)
            | Error::InvalidConstraints(_)
            | Error::Parse(_)
            | Error::WindowOutOfRange { .. }
            | Error::InvalidDepth { .. }
            | Error::Unsupported(_) => Failure::Usage(e.to_string()),
            other => Failure::Compute(other),
        }
    }
}

type CmdResult = Result<(), Failure>;

/// Counts above 2^53 are written as strings so JSON readers keep every digit.
fn jcount(v: u128) -> Value {
    if v <= 1u128 << 53 {
        json!(v as u64)
    } else {
        json!(v.to_string())
    }
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("values serialize"));
}

fn order(n: usize) -> Result<Order, Failure> {
    Order::new(n).map_err(|e| Failure::Usage(e.to_string()))
}

fn multiplier_label(plan: &FillPlan) -> String {
    let n = plan.n();
    if plan.constraints().vertical_symmetry {
        format!("2^{h}*{h}!", h = n / 2)
    } else if plan.fixed() == FixedPrefix::FirstRowAndColumn {
        format!("{n}!*{}!", n.saturating_sub(1).max(1))
    } else {
        format!("{n}!")
    }
}

fn window_value(plan: &FillPlan) -> Value {
    match plan.lookahead_window() {
        Some((a, b)) => json!([a, b]),
        None => Value::Null,
    }
}

fn cmd_plan(a: PlanArgs) -> CmdResult {
    let plan = build_plan(
        order(a.target.order)?,
        a.target.constraints,
        a.target.fixed,
        a.shape.layout,
        a.shape.lookahead,
    )?;
    match a.format {
        Format::Json => {
            let steps: Vec<Value> = plan
                .steps()
                .iter()
                .map(|s| {
                    json!({
                        "row": s.cell.row,
                        "col": s.cell.col,
                        "kind": match s.kind {
                            dlsenum::StepKind::Branch => "branch".to_string(),
                            dlsenum::StepKind::Forced(u) => format!("forced {u}"),
                        },
                        "lookahead": s.lookahead_after(),
                    })
                })
                .collect();
            print_json(&json!({
                "order": plan.n(),
                "constraints": plan.constraints().code(),
                "fixed": plan.fixed().code(),
                "fingerprint": plan.fingerprint(),
                "branch_steps": plan.branch_count(),
                "hourglass_boundary": plan.hourglass_boundary(),
                "lookahead": window_value(&plan),
                "steps": steps,
            }));
        }
        Format::Text if a.grid => print!("{}", plan.render_grid()),
        Format::Text => {
            println!(
                "# order {} {} {} fingerprint {}",
                plan.n(),
                plan.constraints().code(),
                plan.fixed().code(),
                plan.fingerprint()
            );
            print!("{}", plan.dump());
            println!();
            print!("{}", plan.render_grid());
        }
    }
    Ok(())
}

fn cmd_count(a: CountArgs) -> CmdResult {
    let ord = order(a.target.order)?;
    let cs = a.target.constraints;
    if a.symmetry_breaking {
        if !cs.has_diagonals() {
            return Err(Failure::Usage(
                "--symmetry-breaking requires --constraints dls or vsdls".into(),
            ));
        }
        if a.target.fixed == Some(FixedPrefix::FirstRowAndColumn) {
            return Err(Failure::Usage(
                "--symmetry-breaking fixes the first row only".into(),
            ));
        }
    }
    let layout = if a.symmetry_breaking {
        LayoutChoice::Hourglass
    } else {
        a.layout
    };
    let plan = build_plan(ord, cs, a.target.fixed, layout, a.lookahead)?;
    let mult = total_multiplier(&plan);

    let (normalized, nodes, elapsed, sym) = if a.symmetry_breaking {
        let s = SymEnumerator::with_plan(plan.clone())?;
        let r = s.run_threads(SymMode::Canonical, a.threads);
        (r.total, r.nodes, r.elapsed, Some(r))
    } else {
        let r = enumerate_threads(&plan, a.threads);
        (r.count, r.nodes, r.elapsed, None)
    };
    let total = normalized.checked_mul(mult);
    let secs = elapsed.as_secs_f64();
    let rate = if secs > 0.0 { normalized as f64 / secs } else { 0.0 };

    match a.format {
        Format::Json => {
            let mut v = json!({
                "order": plan.n(),
                "constraints": cs.code(),
                "fixed": plan.fixed().code(),
                "fingerprint": plan.fingerprint(),
                "lookahead": window_value(&plan),
                "symmetry_breaking": a.symmetry_breaking,
                "normalized": jcount(normalized),
                "multiplier": jcount(mult),
                "multiplier_formula": multiplier_label(&plan),
                "total": total.map_or(Value::Null, jcount),
                "nodes": jcount(nodes as u128),
                "seconds": secs,
                "rate": rate,
            });
            if let Some(r) = &sym {
                v["hourglass_seen"] = jcount(r.hourglass_seen as u128);
                v["canonical"] = jcount(r.canonical as u128);
                v["multiplicity_sum"] = jcount(r.multiplicity_sum as u128);
                v["group_size"] = json!(SymEnumerator::with_plan(plan.clone())?.group_len());
            }
            print_json(&v);
        }
        Format::Text => {
            println!(
                "normalized ({}): {normalized}",
                plan.fixed().code().replace('-', " ")
            );
            match total {
                Some(t) => println!("total (x {}): {t}", multiplier_label(&plan)),
                None => println!("total (x {}): overflow", multiplier_label(&plan)),
            }
            if let Some(r) = &sym {
                println!("hourglass designs: {}", r.hourglass_seen);
                println!("canonical designs: {}", r.canonical);
                println!("multiplicity sum: {}", r.multiplicity_sum);
            }
            println!("nodes: {nodes}  seconds: {secs:.3}  squares/s: {rate:.3e}");
        }
    }
    Ok(())
}

fn cmd_gen(a: GenArgs) -> CmdResult {
    let plan = build_plan(
        order(a.target.order)?,
        a.target.constraints,
        a.target.fixed,
        a.shape.layout,
        a.shape.lookahead,
    )?;
    let k = a.depth.unwrap_or_else(|| workunit::default_depth(&plan));
    let count = workunit::generate_to_file(&plan, k, &a.out)?;
    println!(
        "{count} workunits of depth {k} for plan {} written to {}",
        plan.fingerprint(),
        a.out.display()
    );
    Ok(())
}

fn cmd_run(a: RunArgs) -> CmdResult {
    let opts = RunOptions {
        input: a.input,
        output: a.out.clone(),
        threads: a.threads,
        range: a.range,
        run_tag: a.run_tag,
        engine: match a.engine {
            EngineArg::Plain => BatchEngine::Plain,
            EngineArg::Symmetric => BatchEngine::Symmetric,
        },
        limit: a.limit,
    };
    let m = workunit::run_batch(&opts)?;
    match a.format {
        Format::Json => print_json(&serde_json::to_value(&m).expect("manifest serializes")),
        Format::Text => {
            println!(
                "completed {}/{} selected ({} total), pending {}, failed {}",
                m.completed,
                m.selected,
                m.total,
                m.pending,
                m.failed.len()
            );
            println!("running sum: {}", m.running_sum);
            println!("manifest: {}", workunit::manifest_path(&a.out).display());
        }
    }
    if m.failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Reported)
    }
}

fn cmd_merge(a: MergeArgs) -> CmdResult {
    let r = workunit::merge(&a.results, a.quorum, a.units.as_deref())?;
    match a.format {
        Format::Json => print_json(&serde_json::to_value(&r).expect("report serializes")),
        Format::Text => {
            for c in &r.corrupt_lines {
                eprintln!("{c}");
            }
            for d in &r.disagreements {
                let seen: Vec<String> = d.reports.iter().map(|(t, c)| format!("{t}={c}")).collect();
                println!("disagreement on id {}: {}", d.id, seen.join(" "));
            }
            println!(
                "validated {} ids, {} under quorum {}, {} missing, {} disagreeing",
                r.validated,
                r.under_quorum.len(),
                r.quorum,
                r.missing.len(),
                r.disagreements.len()
            );
            match r.total {
                Some(t) => println!("total: {t}"),
                None => println!("total withheld; validated subtotal {}", r.validated_sum),
            }
        }
    }
    if r.total.is_some() {
        Ok(())
    } else {
        Err(Failure::Reported)
    }
}

fn cmd_estimate(a: EstimateArgs) -> CmdResult {
    let cfg = EstimatorConfig {
        order: order(a.order)?,
        constraints: a.constraints,
        depth: a.depth,
        samples: a.samples,
        seed: a.seed,
        method: a.method,
        threads: a.threads,
    };
    let r = montecarlo::estimate(&cfg)?;
    match a.format {
        Format::Json => print_json(&serde_json::to_value(&r).expect("report serializes")),
        Format::Text => {
            match r.prefix_count {
                Some(p) => println!("prefixes N^{}: {p}", r.depth),
                None => println!("prefixes N^{} (estimated): {:.6e}", r.depth, r.prefix_count_estimate),
            }
            println!("mean completions: {:.6e}", r.mean_completions);
            println!("estimate (first row fixed): {:.6e} +- {:.3e}", r.estimate, r.std_error);
            println!("estimate (all squares): {:.6e} +- {:.3e}", r.total_estimate, r.total_std_error);
            println!(
                "samples {} ({} dead), distinct prefixes counted {}, seconds {:.2}, generator {}",
                r.samples_used,
                r.zero_weight_samples,
                r.distinct_prefixes,
                r.elapsed.as_secs_f64(),
                r.generator
            );
        }
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> CmdResult {
    let lookahead = if a.sweep_lookahead {
        LookaheadChoice::Off
    } else {
        a.lookahead
    };
    let plan = build_plan(
        order(a.target.order)?,
        a.target.constraints,
        a.target.fixed,
        LayoutChoice::Heuristic,
        lookahead,
    )?;
    let depth = a.depth.unwrap_or_else(|| bench::default_bench_depth(&plan, bench::DEFAULT_PREFIX_SQUARES));
    let cfg = BenchConfig {
        depth,
        prefixes: a.prefixes,
        seed: a.seed,
        budget: Duration::from_secs_f64(a.seconds.max(0.0)),
    };
    if a.sweep_lookahead {
        let windows = bench::window_grid(&plan, depth, a.stride);
        let r = bench::sweep_lookahead(&plan, &windows, &cfg)?;
        match a.format {
            Format::Json => print_json(&serde_json::to_value(&r).expect("report serializes")),
            Format::Text => {
                for run in &r.runs {
                    let w = run.window.map_or("off".to_string(), |(x, y)| format!("{x}..{y}"));
                    println!("{w:>8}  {:.3}s  {:.3e} squares/s", run.seconds, run.rate);
                }
                match r.recommended {
                    Some((x, y)) => println!("recommended window: {x}..{y}"),
                    None => println!("recommended window: off"),
                }
            }
        }
        return Ok(());
    }
    let r = bench::bench(&plan, &cfg)?;
    match a.format {
        Format::Json => print_json(&serde_json::to_value(&r).expect("report serializes")),
        Format::Text => println!(
            "order {} {}: {} squares, {} nodes in {:.3}s over {} prefixes of depth {depth}: {:.3e} squares/s",
            r.order, r.constraints, r.squares, r.nodes, r.seconds, r.prefixes, r.rate
        ),
    }
    if r.below_floor() {
        eprintln!(
            "warning: {:.3e} squares/s is below the {:.0e} reference rate",
            r.rate,
            bench::SOFT_RATE_FLOOR
        );
    }
    Ok(())
}

fn cmd_validate(a: ValidateArgs) -> CmdResult {
    let mut text = String::new();
    if a.input == "-" {
        std::io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| Failure::Compute(e.into()))?;
    } else {
        text = std::fs::read_to_string(&a.input).map_err(|e| {
            Failure::Compute(std::io::Error::new(e.kind(), format!("{}: {e}", a.input)).into())
        })?;
    }
    let grid = SquareGrid::parse(&text)?;
    let v = validate(&grid, a.constraints, a.partial);
    match a.format {
        Format::Json => print_json(&json!({ "valid": v.is_empty(), "violations": v })),
        Format::Text => {
            if v.is_empty() {
                println!("valid {}", a.constraints.code());
            }
            for x in &v {
                println!("{:?} at {}", x.kind, x.cell);
            }
        }
    }
    if v.is_empty() {
        Ok(())
    } else {
        Err(Failure::Reported)
    }
}

fn cmd_oracle(a: OracleArgs) -> CmdResult {
    let ord = order(a.target.order)?;
    let fixed = a.target.fixed.unwrap_or_else(|| FixedPrefix::default_for(a.target.constraints));
    let c = if a.naive {
        oracle::naive_count(ord, a.target.constraints, fixed)?
    } else {
        oracle::oracle_count(ord, a.target.constraints, fixed)?
    };
    println!("{c}");
    Ok(())
}

fn main() -> ExitCode {
    // Die quietly when the reader of stdout goes away, as `head` does.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let result = match cli.cmd {
        Command::Plan(a) => cmd_plan(a),
        Command::Count(a) => cmd_count(a),
        Command::Workunits(WorkunitCmd::Gen(a)) => cmd_gen(a),
        Command::Workunits(WorkunitCmd::Run(a)) => cmd_run(a),
        Command::Workunits(WorkunitCmd::Merge(a)) => cmd_merge(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Oracle(a) => cmd_oracle(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Reported) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
