//! `seqauction` — command-line interface to the sequential-auction
//! equilibrium and efficiency-bound toolkit.
//!
//! Subcommands: `solve` (full equilibrium node table), `paths` (reachable
//! endpoints and per-policy equilibrium paths), `verify` (all structural
//! checks; nonzero exit on any violation), `bound` (worst-case efficiency
//! by formula, exact LP, or dual certificate), `certify` (dual slack
//! table), `generate` (instance JSON), `fuzz` (batch random verification
//! with quarantine), and `poa-table` (plot-ready CSV of the bound grid).
//!
//! All arithmetic is exact; identical argv and seed produce byte-identical
//! output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Read as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use seqauction::checks::run_all_checks;
use seqauction::instances::{InstanceFamily, DEFAULT_RANDOM_SCALE};
use seqauction::io::{
    check_reports_to_json, decimal_string, instance_from_json_str, instance_to_json_string,
    outcome_string, path_report_to_json, rational_string, solution_to_json_string, APPROX_PLACES,
};
use seqauction::lp::{
    concave_dual_certificate, dual_main_rows, dual_objective, general_dual_certificate, lp_bound,
    poa_bound_concave, poa_bound_general, verify_dual, ConcaveBoundTable, DualCertificate,
};
use seqauction::{solve, Buyer, Instance, Node, PathReport, Rat, Solution, TiePolicy};

/// Environment variable naming the default directory for written artifacts
/// (generated instances, quarantined fuzz failures).
const OUTPUT_DIR_ENV: &str = "SEQAUCTION_OUTPUT_DIR";

#[derive(Parser)]
#[command(
    name = "seqauction",
    version,
    about = "Exact equilibria and efficiency bounds for two-buyer sequential second-price auctions"
)]
struct Cli {
    /// Output format (pretty for humans; json and csv are byte-stable).
    #[arg(long, global = true, value_enum, default_value_t = Format::Pretty)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Pretty,
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Class {
    Concave,
    General,
}

impl Class {
    fn name(self) -> &'static str {
        match self {
            Class::Concave => "concave",
            Class::General => "general",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Policy {
    FavorBuyer1,
    FavorBuyer2,
    Alternate,
}

impl Policy {
    fn tie_policy(self) -> TiePolicy {
        match self {
            Policy::FavorBuyer1 => TiePolicy::FavorBuyer1,
            Policy::FavorBuyer2 => TiePolicy::FavorBuyer2,
            Policy::Alternate => TiePolicy::Alternate,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PathsPolicy {
    /// Enumerate every reachable endpoint plus all three tie policies.
    All,
    FavorBuyer1,
    FavorBuyer2,
    Alternate,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Formula,
    Lp,
    Certificate,
    /// Compute all three routes and require them to agree.
    All,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Formula => "formula",
            Method::Lp => "lp",
            Method::Certificate => "certificate",
            Method::All => "all",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FuzzClass {
    Concave,
    General,
    /// Alternate between concave and general instances.
    Both,
}

/// Exactly one instance source: a JSON file or an inline family spec.
#[derive(Args)]
#[group(required = true, multiple = false)]
struct InputArgs {
    /// Path to an instance JSON file ("-" reads stdin).
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,

    /// Inline family spec, e.g. example1, tight-concave:T=5,k=2,
    /// tight-general:T=7, random-general:T=8,seed=3,scale=24.
    #[arg(long, value_name = "SPEC")]
    family: Option<InstanceFamily>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the equilibrium and print the full node table.
    Solve {
        #[command(flatten)]
        input: InputArgs,
        /// Tie policy for the footer's sample path (pretty format only).
        #[arg(long, value_enum, default_value_t = Policy::FavorBuyer1)]
        tie_policy: Policy,
    },
    /// Enumerate reachable equilibrium endpoints and per-policy paths.
    Paths {
        #[command(flatten)]
        input: InputArgs,
        /// Which paths to report.
        #[arg(long, value_enum, default_value_t = PathsPolicy::All)]
        policy: PathsPolicy,
    },
    /// Run every structural check; exit 0 iff all pass.
    Verify {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Worst-case efficiency bound for a (T, k) cell or the minimum over k.
    Bound {
        /// Number of items T.
        #[arg(long = "T", visible_alias = "items", value_name = "T")]
        items: usize,
        /// Endpoint split k (buyer 1's item count at the endpoint).
        #[arg(long, value_name = "K")]
        k: Option<usize>,
        #[arg(long, value_enum, default_value_t = Class::Concave)]
        class: Class,
        /// How to compute the bound.
        #[arg(long, value_enum, default_value_t = Method::Formula)]
        method: Method,
        /// Minimize the bound over all endpoint splits k.
        #[arg(long)]
        min_over_k: bool,
    },
    /// Print the dual certificate and its per-row slack table.
    Certify {
        /// Number of items T.
        #[arg(long = "T", visible_alias = "items", value_name = "T")]
        items: usize,
        /// Endpoint split k.
        #[arg(long, value_name = "K")]
        k: usize,
        #[arg(long, value_enum, default_value_t = Class::Concave)]
        class: Class,
    },
    /// Emit an instance of a named family as JSON.
    Generate {
        /// Family spec, e.g. tight-concave:T=5,k=2.
        #[arg(long, value_name = "SPEC")]
        family: InstanceFamily,
        /// Override the seed of a random family.
        #[arg(long)]
        seed: Option<u64>,
        /// Write to this file instead of stdout (relative paths resolve
        /// under $SEQAUCTION_OUTPUT_DIR when set).
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Verify many random instances; quarantine any failures.
    Fuzz {
        /// Number of instances.
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// Item counts cycle through 1..=this.
        #[arg(long, default_value_t = 12)]
        max_items: usize,
        /// Base seed; instance i uses seed + i.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = FuzzClass::Both)]
        class: FuzzClass,
        /// Worker threads (default: one per CPU).
        #[arg(long)]
        jobs: Option<usize>,
        /// Where failing instances are written (default:
        /// $SEQAUCTION_OUTPUT_DIR/quarantine, else ./quarantine).
        #[arg(long, value_name = "DIR")]
        quarantine_dir: Option<PathBuf>,
    },
    /// Emit the concave bound grid (plot-ready in csv format).
    PoaTable {
        /// Grid covers 1 <= T <= this.
        #[arg(long, default_value_t = 10)]
        max_items: usize,
        /// One row per T with only the minimum over k.
        #[arg(long)]
        min_only: bool,
        /// Skip the exact LP column (the slow one).
        #[arg(long)]
        no_lp: bool,
        /// Worker threads (default: one per CPU).
        #[arg(long)]
        jobs: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let format = cli.format;
    match cli.command {
        Command::Solve { input, tie_policy } => cmd_solve(&input, tie_policy, format),
        Command::Paths { input, policy } => cmd_paths(&input, policy, format),
        Command::Verify { input } => cmd_verify(&input, format),
        Command::Bound {
            items,
            k,
            class,
            method,
            min_over_k,
        } => cmd_bound(items, k, class, method, min_over_k, format),
        Command::Certify { items, k, class } => cmd_certify(items, k, class, format),
        Command::Generate {
            family,
            seed,
            output,
        } => cmd_generate(family, seed, output.as_deref(), format),
        Command::Fuzz {
            count,
            max_items,
            seed,
            class,
            jobs,
            quarantine_dir,
        } => cmd_fuzz(count, max_items, seed, class, jobs, quarantine_dir, format),
        Command::PoaTable {
            max_items,
            min_only,
            no_lp,
            jobs,
        } => cmd_poa_table(max_items, min_only, no_lp, jobs, format),
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing.

/// Loads and labels the instance named by `--input`/`--family`.
fn load_instance(input: &InputArgs) -> Result<(String, Instance)> {
    if let Some(path) = &input.input {
        let (label, text) = if path.as_os_str() == "-" {
            let mut text = String::new();
            std::io::stdin()
                .read_to_string(&mut text)
                .context("reading instance from stdin")?;
            ("<stdin>".to_string(), text)
        } else {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading instance file {}", path.display()))?;
            (path.display().to_string(), text)
        };
        let instance =
            instance_from_json_str(&text).with_context(|| format!("parsing instance {label}"))?;
        Ok((label, instance))
    } else {
        let family = input.family.clone().expect("clap enforces one source");
        let instance = family.generate::<Rat>()?;
        Ok((family.to_string(), instance))
    }
}

/// Rejects invalid instances with one line per violation.
fn ensure_valid(label: &str, instance: &Instance) -> Result<()> {
    let report = instance.validate();
    if !report.is_valid() {
        let lines: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
        bail!("instance {label} is invalid:\n  {}", lines.join("\n  "));
    }
    Ok(())
}

/// `p/q` plus a trimmed decimal when the value is not an integer.
fn pretty_rat(r: &Rat) -> String {
    let exact = rational_string(r);
    let decimal = trim_decimal(&decimal_string(r, APPROX_PLACES));
    if decimal == exact {
        exact
    } else {
        format!("{exact} (~{decimal})")
    }
}

/// Strips trailing zeros (and a bare trailing point) from a fixed-point
/// decimal repr.
fn trim_decimal(s: &str) -> String {
    if !s.contains('.') {
        return s.to_string();
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Left-aligned plain-text table.
fn render_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    let mut emit = |cells: &[String]| {
        for (i, cell) in cells.iter().enumerate() {
            if i > 0 {
                out.push_str("  ");
            }
            let _ = write!(out, "{cell:<width$}", width = widths[i]);
        }
        while out.ends_with(' ') {
            out.pop();
        }
        out.push('\n');
    };
    emit(&headers.iter().map(|h| h.to_string()).collect::<Vec<_>>());
    for row in rows {
        emit(row);
    }
    out
}

/// CSV line from cells that are known to contain no commas or quotes.
fn csv_line(cells: &[String]) -> String {
    debug_assert!(cells.iter().all(|c| !c.contains([',', '"', '\n'])));
    cells.join(",")
}

fn node_label(node: Node) -> String {
    format!("({},{})", node.x1, node.x2)
}

/// `(0,0) -[buyer 2 pays 5]-> (0,1) -> ...`
fn render_path(path: &PathReport<Rat>) -> String {
    let mut s = node_label(path.start());
    for ((node, winner), price) in path.steps().zip(path.prices_paid.iter()) {
        let _ = write!(
            s,
            " -[buyer {winner} pays {}]-> {}",
            rational_string(price),
            node_label(node.child(winner))
        );
    }
    s
}

/// Nodes of the solved lattice ordered by round, then by buyer 1's count.
fn ordered_nodes(sol: &Solution) -> Vec<Node> {
    let mut nodes: Vec<Node> = sol.records().map(|(n, _)| n).collect();
    nodes.sort_by_key(|n| (n.level(), n.x1));
    nodes
}

/// Runs `f` over `0..n`, on one thread or a sized rayon pool.
fn run_jobs<T: Send, F: Fn(usize) -> T + Sync + Send>(
    n: usize,
    jobs: Option<usize>,
    f: F,
) -> Vec<T> {
    match jobs {
        Some(1) => (0..n).map(f).collect(),
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("building thread pool")
            .install(|| (0..n).into_par_iter().map(f).collect()),
        None => (0..n).into_par_iter().map(f).collect(),
    }
}

/// Resolves a user-supplied artifact path: absolute stays put, relative
/// lands under `$SEQAUCTION_OUTPUT_DIR` when that is set.
fn resolve_output_path(path: &Path) -> PathBuf {
    if path.is_absolute() {
        return path.to_path_buf();
    }
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) => Path::new(&dir).join(path),
        None => path.to_path_buf(),
    }
}

// ---------------------------------------------------------------------------
// solve

fn cmd_solve(input: &InputArgs, tie_policy: Policy, format: Format) -> Result<ExitCode> {
    let (label, instance) = load_instance(input)?;
    ensure_valid(&label, &instance)?;
    let sol = solve(instance)?;
    match format {
        Format::Json => print!("{}", solution_to_json_string(&sol)),
        Format::Csv => {
            println!("x1,x2,u1,u2,b1,b2,price,outcome");
            for node in ordered_nodes(&sol) {
                let record = sol.record(node);
                let mut cells = vec![
                    node.x1.to_string(),
                    node.x2.to_string(),
                    rational_string(record.utility(Buyer::One)),
                    rational_string(record.utility(Buyer::Two)),
                ];
                if node.is_terminal(sol.items()) {
                    cells.extend(["", "", "", ""].map(String::from));
                } else {
                    let auction = record.auction();
                    cells.push(rational_string(&auction.b1));
                    cells.push(rational_string(&auction.b2));
                    cells.push(rational_string(&auction.price));
                    cells.push(outcome_string(auction.outcome).to_string());
                }
                println!("{}", csv_line(&cells));
            }
        }
        Format::Pretty => {
            let instance = sol.instance();
            println!("instance: {label}");
            println!("T = {}", sol.items());
            println!(
                "v1 = [{}]",
                instance
                    .v1()
                    .values()
                    .iter()
                    .map(rational_string)
                    .collect::<Vec<_>>()
                    .join(", ")
            );
            println!(
                "v2 = [{}]",
                instance
                    .v2()
                    .values()
                    .iter()
                    .map(rational_string)
                    .collect::<Vec<_>>()
                    .join(", ")
            );
            println!();
            let rows: Vec<Vec<String>> = ordered_nodes(&sol)
                .into_iter()
                .map(|node| {
                    let record = sol.record(node);
                    let mut row = vec![
                        node_label(node),
                        rational_string(record.utility(Buyer::One)),
                        rational_string(record.utility(Buyer::Two)),
                    ];
                    if node.is_terminal(sol.items()) {
                        row.extend(["-", "-", "-", "terminal"].map(String::from));
                    } else {
                        let auction = record.auction();
                        row.push(rational_string(&auction.b1));
                        row.push(rational_string(&auction.b2));
                        row.push(rational_string(&auction.price));
                        row.push(outcome_string(auction.outcome).to_string());
                    }
                    row
                })
                .collect();
            print!(
                "{}",
                render_table(&["node", "u1", "u2", "b1", "b2", "price", "outcome"], &rows)
            );
            println!();
            let endpoints = sol.reachable_equilibrium_endpoints(Node::ROOT);
            let endpoint_list = endpoints
                .iter()
                .map(|a| node_label(a.terminal_node(sol.items())))
                .collect::<Vec<_>>()
                .join(", ");
            println!("reachable equilibrium endpoints: {endpoint_list}");
            let policy = tie_policy.tie_policy();
            let path = sol.extract_path(Node::ROOT, policy);
            println!("path under {}: {}", policy.name(), render_path(&path));
            println!("path efficiency: {}", pretty_rat(&path.efficiency));
            println!(
                "minimum equilibrium efficiency: {}",
                pretty_rat(&sol.min_equilibrium_efficiency())
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// paths

fn cmd_paths(input: &InputArgs, policy: PathsPolicy, format: Format) -> Result<ExitCode> {
    let (label, instance) = load_instance(input)?;
    ensure_valid(&label, &instance)?;
    let sol = solve(instance)?;

    let policies: &[TiePolicy] = match policy {
        PathsPolicy::All => &TiePolicy::ALL,
        PathsPolicy::FavorBuyer1 => &[TiePolicy::FavorBuyer1],
        PathsPolicy::FavorBuyer2 => &[TiePolicy::FavorBuyer2],
        PathsPolicy::Alternate => &[TiePolicy::Alternate],
    };
    let endpoints: Vec<(Node, PathReport<Rat>)> = sol
        .reachable_equilibrium_endpoints(Node::ROOT)
        .into_iter()
        .map(|a| {
            let terminal = a.terminal_node(sol.items());
            let witness = sol
                .witness_path(Node::ROOT, a)
                .expect("reachable endpoints have witness paths");
            (terminal, witness)
        })
        .collect();
    let by_policy: Vec<(TiePolicy, PathReport<Rat>)> = policies
        .iter()
        .map(|&p| (p, sol.extract_path(Node::ROOT, p)))
        .collect();
    let min_eff = sol.min_equilibrium_efficiency();

    match format {
        Format::Json => {
            let mut policy_map = Map::new();
            for (p, path) in &by_policy {
                policy_map.insert(p.name().to_string(), path_report_to_json(path));
            }
            let doc = json!({
                "T": sol.items(),
                "instance": label,
                "endpoints": Value::Array(
                    endpoints
                        .iter()
                        .map(|(terminal, witness)| {
                            json!({
                                "endpoint": [terminal.x1, terminal.x2],
                                "witness_path": path_report_to_json(witness),
                            })
                        })
                        .collect(),
                ),
                "policies": Value::Object(policy_map),
                "min_efficiency": rational_string(&min_eff),
                "min_efficiency_approx": decimal_string(&min_eff, APPROX_PLACES),
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
        Format::Csv => {
            println!("kind,name,endpoint,efficiency,nodes,prices");
            let emit = |kind: &str, name: &str, path: &PathReport<Rat>| {
                let cells = vec![
                    kind.to_string(),
                    name.to_string(),
                    format!(
                        "{}|{}",
                        path.endpoint.buyer1_items,
                        path.endpoint.buyer2_items(sol.items())
                    ),
                    rational_string(&path.efficiency),
                    path.nodes
                        .iter()
                        .map(|n| format!("{}|{}", n.x1, n.x2))
                        .collect::<Vec<_>>()
                        .join(";"),
                    path.prices_paid
                        .iter()
                        .map(rational_string)
                        .collect::<Vec<_>>()
                        .join(";"),
                ];
                println!("{}", csv_line(&cells));
            };
            for (terminal, witness) in &endpoints {
                emit("endpoint", &node_label(*terminal), witness);
            }
            for (p, path) in &by_policy {
                emit("policy", p.name(), path);
            }
        }
        Format::Pretty => {
            println!("instance: {label}");
            println!("T = {}", sol.items());
            println!();
            println!("reachable equilibrium endpoints from (0,0):");
            for (terminal, witness) in &endpoints {
                println!(
                    "  {}  efficiency {}",
                    node_label(*terminal),
                    pretty_rat(&witness.efficiency)
                );
                println!("    witness: {}", render_path(witness));
            }
            println!();
            for (p, path) in &by_policy {
                println!("policy {}:", p.name());
                println!("  {}", render_path(path));
                println!("  efficiency {}", pretty_rat(&path.efficiency));
            }
            println!();
            println!("minimum equilibrium efficiency: {}", pretty_rat(&min_eff));
        }
    }
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// verify

fn cmd_verify(input: &InputArgs, format: Format) -> Result<ExitCode> {
    let (label, instance) = load_instance(input)?;
    ensure_valid(&label, &instance)?;
    let validation = instance.validate();
    let sol = solve(instance)?;
    let reports = run_all_checks(&sol);
    let all_passed = reports.iter().all(|r| r.passed);

    match format {
        Format::Json => {
            let doc = json!({
                "instance": label,
                "T": sol.items(),
                "both_concave": validation.both_concave(),
                "checks": check_reports_to_json(&reports),
                "all_passed": all_passed,
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
        Format::Csv => {
            println!("check,passed,witnesses");
            for report in &reports {
                println!(
                    "{}",
                    csv_line(&[
                        report.check_name.to_string(),
                        report.passed.to_string(),
                        report.witnesses.len().to_string(),
                    ])
                );
            }
        }
        Format::Pretty => {
            println!("instance: {label}");
            println!(
                "T = {}, valuations {}",
                sol.items(),
                if validation.both_concave() {
                    "both concave"
                } else {
                    "not both concave"
                }
            );
            println!();
            for report in &reports {
                println!("{report}");
            }
            println!();
            if all_passed {
                println!("all {} checks passed", reports.len());
            } else {
                let failed = reports.iter().filter(|r| !r.passed).count();
                println!("{failed} of {} checks FAILED", reports.len());
            }
        }
    }
    Ok(if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

// ---------------------------------------------------------------------------
// bound

fn cmd_bound(
    items: usize,
    k: Option<usize>,
    class: Class,
    method: Method,
    min_over_k: bool,
    format: Format,
) -> Result<ExitCode> {
    if min_over_k {
        if k.is_some() {
            bail!("--k and --min-over-k are mutually exclusive");
        }
        if method != Method::Formula {
            bail!("--min-over-k supports --method formula only");
        }
        let (value, argmin) = match class {
            Class::Concave => {
                let table = ConcaveBoundTable::<Rat>::new(items);
                let (value, argmin) = table.min_over_k(items)?;
                (value, Some(argmin))
            }
            // The general bound does not depend on k.
            Class::General => (poa_bound_general::<Rat>(items)?, None),
        };
        emit_bound(
            items,
            None,
            class,
            method,
            argmin,
            &[("bound", &value)],
            format,
        )?;
        return Ok(ExitCode::SUCCESS);
    }

    let need_k = || -> Result<usize> {
        k.ok_or_else(|| anyhow::anyhow!("provide --k (or use --min-over-k)"))
    };
    let formula = |()| -> Result<Rat> {
        Ok(match class {
            Class::Concave => poa_bound_concave::<Rat>(items, need_k()?)?,
            Class::General => poa_bound_general::<Rat>(items)?,
        })
    };
    let lp = |()| -> Result<Rat> {
        let k = match class {
            Class::Concave => need_k()?,
            // The general optimum is k-independent; default the row split.
            Class::General => k.unwrap_or(0),
        };
        Ok(lp_bound::<Rat>(items, k, class == Class::Concave)?)
    };
    let certificate = |()| -> Result<Rat> {
        let k = match class {
            Class::Concave => need_k()?,
            Class::General => k.unwrap_or(0),
        };
        let cert = build_certificate(items, k, class)?;
        let report = verify_dual(&cert, class == Class::Concave);
        if !report.passed {
            bail!("built certificate failed verification: {report}");
        }
        Ok(dual_objective(&cert))
    };

    let values: Vec<(&str, Rat)> = match method {
        Method::Formula => vec![("formula", formula(())?)],
        Method::Lp => vec![("lp", lp(())?)],
        Method::Certificate => vec![("certificate", certificate(())?)],
        Method::All => {
            let f = formula(())?;
            let l = lp(())?;
            let c = certificate(())?;
            if class == Class::Concave && !(f == l && l == c) {
                bail!(
                    "routes disagree: formula {}, lp {}, certificate {}",
                    rational_string(&f),
                    rational_string(&l),
                    rational_string(&c)
                );
            }
            vec![("formula", f), ("lp", l), ("certificate", c)]
        }
    };
    let named: Vec<(&str, &Rat)> = values.iter().map(|(n, v)| (*n, v)).collect();
    emit_bound(items, k, class, method, None, &named, format)?;
    Ok(ExitCode::SUCCESS)
}

fn build_certificate(items: usize, k: usize, class: Class) -> Result<DualCertificate<Rat>> {
    Ok(match class {
        Class::Concave => concave_dual_certificate(items, k)?,
        Class::General => general_dual_certificate(items, k)?,
    })
}

fn emit_bound(
    items: usize,
    k: Option<usize>,
    class: Class,
    method: Method,
    argmin: Option<usize>,
    values: &[(&str, &Rat)],
    format: Format,
) -> Result<()> {
    let k_text = match (k, argmin) {
        (Some(k), _) => k.to_string(),
        (None, Some(argmin)) => format!("min over k (argmin k = {argmin})"),
        (None, None) => "any (k-independent)".to_string(),
    };
    match format {
        Format::Pretty => {
            println!(
                "T = {items}, k = {k_text}, class = {}, method = {}",
                class.name(),
                method.name()
            );
            for (name, value) in values {
                println!("{name}:");
                println!("  exact   = {}", rational_string(value));
                println!("  decimal ~ {}", decimal_string(value, APPROX_PLACES));
            }
            if values.len() > 1 {
                println!("all routes agree");
            }
        }
        Format::Json => {
            let mut value_map = Map::new();
            for (name, value) in values {
                value_map.insert(name.to_string(), Value::String(rational_string(value)));
                value_map.insert(
                    format!("{name}_approx"),
                    Value::String(decimal_string(value, APPROX_PLACES)),
                );
            }
            let doc = json!({
                "T": items,
                "k": k,
                "class": class.name(),
                "method": method.name(),
                "argmin_k": argmin,
                "values": Value::Object(value_map),
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
        Format::Csv => {
            println!("T,k,class,method,route,exact,approx");
            for (name, value) in values {
                println!(
                    "{}",
                    csv_line(&[
                        items.to_string(),
                        k.map(|k| k.to_string())
                            .or(argmin.map(|a| a.to_string()))
                            .unwrap_or_default(),
                        class.name().to_string(),
                        method.name().to_string(),
                        name.to_string(),
                        rational_string(value),
                        decimal_string(value, APPROX_PLACES),
                    ])
                );
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// certify

fn cmd_certify(items: usize, k: usize, class: Class, format: Format) -> Result<ExitCode> {
    let concave = class == Class::Concave;
    let cert = build_certificate(items, k, class)?;
    let rows = dual_main_rows(&cert);
    let report = verify_dual(&cert, concave);
    let objective = dual_objective(&cert);
    let tight = |r: &seqauction::lp::DualRowEval<Rat>| r.lhs == r.bound;
    let all_tight = rows.iter().all(tight);

    match format {
        Format::Json => {
            let doc = json!({
                "T": items,
                "k": k,
                "class": class.name(),
                "objective": rational_string(&objective),
                "objective_approx": decimal_string(&objective, APPROX_PLACES),
                "rows": Value::Array(
                    rows.iter()
                        .map(|r| {
                            json!({
                                "row": r.name,
                                "lhs": rational_string(&r.lhs),
                                "bound": rational_string(&r.bound),
                                "slack": rational_string(&r.slack()),
                                "tight": r.lhs == r.bound,
                            })
                        })
                        .collect(),
                ),
                "all_rows_tight": all_tight,
                "feasible": report.passed,
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
        Format::Csv => {
            println!("row,lhs,bound,slack,tight");
            for r in &rows {
                println!(
                    "{}",
                    csv_line(&[
                        r.name.clone(),
                        rational_string(&r.lhs),
                        rational_string(&r.bound),
                        rational_string(&r.slack()),
                        tight(r).to_string(),
                    ])
                );
            }
        }
        Format::Pretty => {
            println!("T = {items}, k = {k}, class = {}", class.name());
            println!("dual objective: {}", pretty_rat(&objective));
            println!();
            let table_rows: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.name.clone(),
                        rational_string(&r.lhs),
                        rational_string(&r.bound),
                        rational_string(&r.slack()),
                        if tight(r) { "yes" } else { "no" }.to_string(),
                    ]
                })
                .collect();
            print!(
                "{}",
                render_table(&["row", "lhs", "bound", "slack", "tight"], &table_rows)
            );
            println!();
            if report.passed {
                if concave {
                    println!(
                        "certificate verifies: every main row tight, every sign constraint holds"
                    );
                    println!("the dual objective equals the program optimum");
                } else {
                    println!("certificate verifies: feasible (rows hold as inequalities)");
                    println!("the dual objective is a valid lower bound");
                }
            } else {
                println!("certificate FAILED verification:");
                println!("{report}");
            }
        }
    }
    Ok(if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

// ---------------------------------------------------------------------------
// generate

fn cmd_generate(
    family: InstanceFamily,
    seed: Option<u64>,
    output: Option<&Path>,
    format: Format,
) -> Result<ExitCode> {
    if format == Format::Csv {
        bail!("generate emits instance JSON; csv is not available");
    }
    let family = match seed {
        Some(seed) => family.with_seed(seed),
        None => family,
    };
    let instance = family.generate::<Rat>()?;
    let text = instance_to_json_string(&instance);
    match output {
        None => print!("{text}"),
        Some(path) => {
            let path = resolve_output_path(path);
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)
                    .with_context(|| format!("creating directory {}", parent.display()))?;
            }
            fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// fuzz

struct FuzzResult {
    family: InstanceFamily,
    /// Right: check reports from a solved equilibrium. Left: solver error.
    outcome: Result<Vec<seqauction::CheckReport<Rat>>, String>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_fuzz(
    count: usize,
    max_items: usize,
    seed: u64,
    class: FuzzClass,
    jobs: Option<usize>,
    quarantine_dir: Option<PathBuf>,
    format: Format,
) -> Result<ExitCode> {
    if max_items == 0 {
        bail!("--max-items must be at least 1");
    }
    let family_for = |i: usize| -> InstanceFamily {
        let items = 1 + (i % max_items);
        let seed = seed.wrapping_add(i as u64);
        let concave = match class {
            FuzzClass::Concave => true,
            FuzzClass::General => false,
            FuzzClass::Both => i.is_multiple_of(2),
        };
        if concave {
            InstanceFamily::RandomConcave {
                items,
                seed,
                scale: DEFAULT_RANDOM_SCALE,
            }
        } else {
            InstanceFamily::RandomGeneral {
                items,
                seed,
                scale: DEFAULT_RANDOM_SCALE,
            }
        }
    };

    let results: Vec<FuzzResult> = run_jobs(count, jobs, |i| {
        let family = family_for(i);
        let instance = family
            .generate::<Rat>()
            .expect("random families accept all parameters");
        let outcome = match solve(instance) {
            Ok(sol) => Ok(run_all_checks(&sol)),
            Err(err) => Err(err.to_string()),
        };
        FuzzResult { family, outcome }
    });

    // Aggregate pass/fail counts per check, in name order.
    let mut tally: BTreeMap<&'static str, (usize, usize)> = BTreeMap::new();
    let mut failures: Vec<(usize, String, Vec<String>)> = Vec::new();
    for (i, result) in results.iter().enumerate() {
        match &result.outcome {
            Ok(reports) => {
                let mut lines = Vec::new();
                for report in reports {
                    let slot = tally.entry(report.check_name).or_insert((0, 0));
                    if report.passed {
                        slot.0 += 1;
                    } else {
                        slot.1 += 1;
                        lines.push(report.to_string());
                    }
                }
                if !lines.is_empty() {
                    failures.push((i, result.family.to_string(), lines));
                }
            }
            Err(err) => {
                failures.push((i, result.family.to_string(), vec![format!("solve: {err}")]));
            }
        }
    }

    // Quarantine failing instances for offline reproduction.
    let mut quarantined: Vec<(usize, PathBuf)> = Vec::new();
    if !failures.is_empty() {
        let dir = quarantine_dir.unwrap_or_else(|| PathBuf::from("quarantine"));
        let dir = resolve_output_path(&dir);
        fs::create_dir_all(&dir)
            .with_context(|| format!("creating quarantine directory {}", dir.display()))?;
        for (i, family_text, _) in &failures {
            let slug: String = family_text
                .chars()
                .map(|c| if c.is_ascii_alphanumeric() { c } else { '-' })
                .collect();
            let path = dir.join(format!("fuzz-{i:06}-{slug}.json"));
            let instance = results[*i]
                .family
                .generate::<Rat>()
                .expect("family generated once already");
            fs::write(&path, instance_to_json_string(&instance))
                .with_context(|| format!("writing {}", path.display()))?;
            quarantined.push((*i, path));
        }
    }

    let class_text = match class {
        FuzzClass::Concave => "concave",
        FuzzClass::General => "general",
        FuzzClass::Both => "both",
    };
    match format {
        Format::Json => {
            let doc = json!({
                "count": count,
                "max_items": max_items,
                "base_seed": seed,
                "class": class_text,
                "checks": Value::Object(
                    tally
                        .iter()
                        .map(|(name, (pass, fail))| {
                            (name.to_string(), json!({ "pass": pass, "fail": fail }))
                        })
                        .collect(),
                ),
                "failures": Value::Array(
                    failures
                        .iter()
                        .map(|(i, family, lines)| {
                            json!({
                                "index": i,
                                "family": family,
                                "details": lines,
                                "quarantined": quarantined
                                    .iter()
                                    .find(|(qi, _)| qi == i)
                                    .map(|(_, p)| p.display().to_string()),
                            })
                        })
                        .collect(),
                ),
                "all_passed": failures.is_empty(),
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
        Format::Csv => {
            println!("check,pass,fail");
            for (name, (pass, fail)) in &tally {
                println!(
                    "{}",
                    csv_line(&[name.to_string(), pass.to_string(), fail.to_string()])
                );
            }
        }
        Format::Pretty => {
            println!(
                "fuzzed {count} instances (T cycling 1..={max_items}, base seed {seed}, class {class_text})"
            );
            println!();
            for (name, (pass, fail)) in &tally {
                println!("{name}: {pass} pass, {fail} fail");
            }
            println!();
            if failures.is_empty() {
                println!("all instances green");
            } else {
                for (i, family, lines) in &failures {
                    let location = quarantined
                        .iter()
                        .find(|(qi, _)| qi == i)
                        .map(|(_, p)| format!(" (quarantined to {})", p.display()))
                        .unwrap_or_default();
                    println!("instance {i} ({family}) FAILED{location}");
                    for line in lines {
                        println!("  {line}");
                    }
                }
                println!();
                println!("{} of {count} instances FAILED", failures.len());
            }
        }
    }
    Ok(if failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

// ---------------------------------------------------------------------------
// poa-table

fn cmd_poa_table(
    max_items: usize,
    min_only: bool,
    no_lp: bool,
    jobs: Option<usize>,
    format: Format,
) -> Result<ExitCode> {
    if max_items == 0 {
        bail!("--max-items must be at least 1");
    }
    let table = ConcaveBoundTable::<Rat>::new(max_items);
    let table = &table;

    if min_only {
        let rows: Vec<(usize, Rat, usize)> = run_jobs(max_items, jobs, |i| {
            let items = i + 1;
            let (value, argmin) = table.min_over_k(items).expect("items >= 1");
            (items, value, argmin)
        });
        let header = ["T", "min_over_k", "argmin_k", "min_over_k_approx"];
        let cells: Vec<Vec<String>> = rows
            .iter()
            .map(|(items, value, argmin)| {
                vec![
                    items.to_string(),
                    rational_string(value),
                    argmin.to_string(),
                    decimal_string(value, APPROX_PLACES),
                ]
            })
            .collect();
        emit_grid(&header, &cells, format)?;
        return Ok(ExitCode::SUCCESS);
    }

    struct Cell {
        items: usize,
        k: usize,
        formula: Rat,
        lp_opt: Option<Rat>,
        dual_obj: Rat,
        tight_instance_eff: Rat,
        min_over_k: Rat,
    }

    // One job per T; each computes its whole k row segment.
    let per_t: Vec<Vec<Cell>> = run_jobs(max_items, jobs, |i| {
        let items = i + 1;
        let (min_value, _) = table.min_over_k(items).expect("items >= 1");
        (0..items)
            .map(|k| {
                let formula = table.bound(items, k).expect("k < T");
                let lp_opt = (!no_lp).then(|| lp_bound::<Rat>(items, k, true).expect("valid cell"));
                let cert = concave_dual_certificate::<Rat>(items, k).expect("valid cell");
                let tight_instance_eff =
                    solve(seqauction::instances::tight_concave::<Rat>(items, k).expect("k < T"))
                        .expect("extremal instances solve")
                        .min_equilibrium_efficiency();
                Cell {
                    items,
                    k,
                    formula,
                    lp_opt,
                    dual_obj: dual_objective(&cert),
                    tight_instance_eff,
                    min_over_k: min_value.clone(),
                }
            })
            .collect()
    });

    let header = [
        "T",
        "k",
        "formula",
        "lp_opt",
        "dual_obj",
        "tight_instance_eff",
        "min_over_k",
        "formula_approx",
        "lp_opt_approx",
        "dual_obj_approx",
        "tight_instance_eff_approx",
        "min_over_k_approx",
    ];
    let cells: Vec<Vec<String>> = per_t
        .iter()
        .flatten()
        .map(|c| {
            let lp_exact = c.lp_opt.as_ref().map(rational_string).unwrap_or_default();
            let lp_approx = c
                .lp_opt
                .as_ref()
                .map(|v| decimal_string(v, APPROX_PLACES))
                .unwrap_or_default();
            vec![
                c.items.to_string(),
                c.k.to_string(),
                rational_string(&c.formula),
                lp_exact,
                rational_string(&c.dual_obj),
                rational_string(&c.tight_instance_eff),
                rational_string(&c.min_over_k),
                decimal_string(&c.formula, APPROX_PLACES),
                lp_approx,
                decimal_string(&c.dual_obj, APPROX_PLACES),
                decimal_string(&c.tight_instance_eff, APPROX_PLACES),
                decimal_string(&c.min_over_k, APPROX_PLACES),
            ]
        })
        .collect();
    emit_grid(&header, &cells, format)?;
    Ok(ExitCode::SUCCESS)
}

fn emit_grid(header: &[&str], rows: &[Vec<String>], format: Format) -> Result<()> {
    match format {
        Format::Csv => {
            println!("{}", header.join(","));
            for row in rows {
                println!("{}", csv_line(row));
            }
        }
        Format::Json => {
            let doc = Value::Array(
                rows.iter()
                    .map(|row| {
                        Value::Object(
                            header
                                .iter()
                                .zip(row)
                                .map(|(h, cell)| (h.to_string(), Value::String(cell.clone())))
                                .collect(),
                        )
                    })
                    .collect(),
            );
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
        Format::Pretty => {
            // The approx columns are for machine consumers; the pretty view
            // keeps the exact ones.
            let visible: Vec<usize> = header
                .iter()
                .enumerate()
                .filter(|(_, h)| !h.ends_with("_approx"))
                .map(|(i, _)| i)
                .collect();
            let vis_header: Vec<&str> = visible.iter().map(|&i| header[i]).collect();
            let vis_rows: Vec<Vec<String>> = rows
                .iter()
                .map(|row| visible.iter().map(|&i| row[i].clone()).collect())
                .collect();
            print!("{}", render_table(&vis_header, &vis_rows));
        }
    }
    Ok(())
}
